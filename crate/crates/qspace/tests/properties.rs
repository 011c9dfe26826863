use proptest::prelude::*;

use qspace::expr::{parse_polyfun, parse_scalar};
use qspace::manin::{self, Direction, Ordering, Variant};
use qspace::minkowski::{self, InverseMode};
use qspace::ncalg::{self, Side};
use qspace::qint::{whole_space_integral, IntegralParams, SepFun};
use qspace::{CoordSys, PolyFun, QScalar, Space};

fn laurent() -> impl Strategy<Value = QScalar> {
    prop::collection::vec((-4i64..=4, -8i32..=8), 1..4).prop_map(|terms| {
        terms.into_iter().fold(QScalar::zero(), |acc, (c, k)| acc + QScalar::t_pow_coef(c, k))
    })
}

fn scalar() -> impl Strategy<Value = QScalar> {
    (laurent(), laurent()).prop_map(|(n, d)| if d.is_zero() { n } else { &n / &d })
}

fn poly(coords: CoordSys, max_exp: i32, min_exp: i32) -> impl Strategy<Value = PolyFun> {
    let dim = coords.dim();
    prop::collection::vec((prop::collection::vec(min_exp..=max_exp, dim), scalar()), 0..5)
        .prop_map(move |terms| PolyFun::from_terms(coords, terms))
}

/// Polynomials of total degree at most `deg` with integer-times-q-power coefficients.
fn small_poly(coords: CoordSys, deg: usize) -> impl Strategy<Value = PolyFun> {
    let dim = coords.dim();
    prop::collection::vec((prop::collection::vec(0..dim, 0..=deg), -3i64..=3, -2i32..=2), 1..4).prop_map(
        move |terms| {
            let mut f = PolyFun::zero(coords);
            for (slots, c, k) in terms {
                let mut e = vec![0; dim];
                for s in slots {
                    e[s] += 1;
                }
                f.add_term(e, QScalar::t_pow_coef(c, 4 * k));
            }
            f
        },
    )
}

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_then_parse_is_identity(
        f in prop_oneof![
            poly(CoordSys::PLANE, 4, -2),
            poly(CoordSys::EUCLID3, 3, 0),
            poly(CoordSys::MINKOWSKI, 3, -1),
        ]
    ) {
        let back = parse_polyfun(&f.to_string(), f.coords()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn scalar_render_then_parse_is_identity(a in scalar()) {
        prop_assert_eq!(parse_scalar(&a.to_string()).unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_field_laws(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        if !a.is_zero() {
            prop_assert_eq!(&a * &a.inv().unwrap(), QScalar::one());
        }
        prop_assert_eq!(a.invert_q().invert_q(), a.clone());
        prop_assert_eq!((&a * &b).invert_q(), &a.invert_q() * &b.invert_q());
    }

    #[test]
    fn star_is_associative(
        f in small_poly(CoordSys::PLANE, 2),
        g in small_poly(CoordSys::PLANE, 2),
        h in small_poly(CoordSys::PLANE, 2),
        reversed in any::<bool>(),
    ) {
        let o = if reversed { Ordering::Reversed } else { Ordering::Standard };
        let st = |a: &PolyFun, b: &PolyFun| manin::star(a, b, o).unwrap();
        prop_assert_eq!(st(&st(&f, &g), &h), st(&f, &st(&g, &h)));
    }

    #[test]
    fn ordering_flip_round_trips(f in poly(CoordSys::PLANE, 4, 0)) {
        let there = manin::ordering_flip(&f, Direction::Forward);
        prop_assert_eq!(manin::ordering_flip(&there, Direction::Inverse), f.clone());
        // Û carries the standard star product to the reversed one.
        let g = PolyFun::var(CoordSys::PLANE, 1);
        let lhs = manin::ordering_flip(&manin::star(&f, &g, Ordering::Standard).unwrap(), Direction::Forward);
        let rhs = manin::star(&there, &manin::ordering_flip(&g, Direction::Forward), Ordering::Reversed).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn derivatives_agree_with_rewriting(f in small_poly(CoordSys::PLANE, 4), v in variant(), i in 0usize..2) {
        let (rs, side) = match v {
            Variant::L => (ncalg::plane_left(), Side::Left),
            Variant::LBar => (ncalg::plane_left_bar(), Side::Left),
            Variant::RBar => (ncalg::plane_right_bar(), Side::Right),
            Variant::R => (ncalg::plane_right(), Side::Right),
        };
        let oracle = ncalg::action_oracle(&[i], &f, side, &rs).unwrap();
        prop_assert_eq!(manin::qderiv(&f, i, v).unwrap(), oracle);
    }

    #[test]
    fn derivative_inverse_is_a_right_inverse(f in small_poly(CoordSys::PLANE, 3), i in 0usize..2) {
        let back = manin::qderiv(&manin::qderiv_inverse(&f, i).unwrap(), i, Variant::L).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn translation_hopf_laws(f in small_poly(CoordSys::PLANE, 3), g in small_poly(CoordSys::PLANE, 2), v in variant()) {
        let (a, b) = manin::homomorphism_sides(&f, &g, v).unwrap();
        prop_assert_eq!(a, b);
        let (a, b) = manin::coassociativity_sides(&f, v).unwrap();
        prop_assert_eq!(a, b);
        let f0 = PolyFun::constant(CoordSys::PLANE, f.counit().unwrap());
        prop_assert_eq!(manin::antipode_cancel(&f, v, true).unwrap(), f0.clone());
        prop_assert_eq!(manin::antipode_cancel(&f, v, false).unwrap(), f0);
    }

    #[test]
    fn conjugation_reverses_star(f in small_poly(CoordSys::PLANE, 3), g in small_poly(CoordSys::PLANE, 3)) {
        let (a, b) = manin::conjugation_sides(&f, &g).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn braided_product_matches_rewriting(f in small_poly(CoordSys::PLANE, 2), g in small_poly(CoordSys::PLANE, 2), bar in any::<bool>()) {
        let (v, rs) = if bar { (Variant::LBar, ncalg::plane_pair_left_bar()) } else { (Variant::L, ncalg::plane_pair_left()) };
        let t = qspace::TensorPolyFun::product(&f, &g);
        prop_assert_eq!(manin::braided_product(&t, v).unwrap(), ncalg::braid_oracle(&t, &rs).unwrap());
    }

    #[test]
    fn mink_derivatives_are_linear(
        f in small_poly(CoordSys::MINKOWSKI, 3),
        g in small_poly(CoordSys::MINKOWSKI, 3),
        c in laurent(),
        d in prop::sample::select(minkowski::Direction::ALL.to_vec()),
    ) {
        let lhs = minkowski::mink_deriv(&(&f + &g.scale(&c)), d).unwrap();
        let rhs = &minkowski::mink_deriv(&f, d).unwrap() + &minkowski::mink_deriv(&g, d).unwrap().scale(&c);
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn mink_inverse_round_trips(f in small_poly(CoordSys::MINKOWSKI, 3)) {
        for d in minkowski::Direction::ALL {
            let inv = minkowski::mink_deriv_inverse(&f, d, InverseMode::Resummed).unwrap();
            prop_assert_eq!(minkowski::mink_deriv(&inv.value, d).unwrap(), f.clone(), "direction {}", d);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn whole_space_integral_is_linear(
        f in small_poly(CoordSys::PLANE, 3),
        g in small_poly(CoordSys::PLANE, 3),
        a in -3.0f64..3.0,
    ) {
        let params = IntegralParams::new(1.1, 300, 1e-10).unwrap();
        let int = |h: &PolyFun| {
            whole_space_integral(Space::Plane, &SepFun::poly_gaussian(h, 1.1).unwrap(), &params).unwrap().value
        };
        let c = QScalar::int((a * 4.0).round() as i64);
        let c0 = (a * 4.0).round();
        let lhs = int(&(&f + &g.scale(&c)));
        let rhs = int(&f) + c0 * int(&g);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs().max(rhs.abs())), "{} vs {}", lhs, rhs);
    }
}
