//! `qspace`: command-line front end.
//!
//! Every verb prints one JSON document on stdout. Exit status is 0 on success,
//! 1 when a verification suite reports a failure and 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qspace::expr::parse_polyfun;
use qspace::manin::{self, Direction, ExpVariant, Ordering, PairingVariant, Variant};
use qspace::minkowski::{self, InverseMode, MinkVolumeMode};
use qspace::qint::{whole_space_integral, IntegralParams, SepFun};
use qspace::verify::{self, VerifyParams};
use qspace::{CoordSys, PolyFun, QError, Space, TensorPolyFun};

#[derive(Parser)]
#[command(name = "qspace", version, about = "Exact and numeric q-calculus on quantum spaces")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Deformation parameter, a real number above 1.
    #[arg(long, global = true)]
    q: Option<f64>,
    /// Lattice cutoff of Jackson sums.
    #[arg(short = 'K', long = "K", global = true)]
    k: Option<u32>,
    /// Tolerance for numeric checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Reference point of the integration lattices.
    #[arg(long, global = true)]
    x0: Option<f64>,
    /// Truncation degree of exponentials.
    #[arg(short = 'N', long = "N", global = true)]
    n: Option<u32>,
    /// Space tag: plane, euclid3, euclid4 or minkowski.
    #[arg(long, global = true)]
    space: Option<String>,
    /// JSON file with any of the keys q, K, tol, x0, N.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Indent the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Star product f ⊛ g of two plane functions.
    Star {
        f: String,
        g: String,
        /// standard or reversed.
        #[arg(long, default_value = "standard")]
        ordering: String,
    },
    /// Convert between the standard and reversed representation.
    Flip {
        f: String,
        /// Apply Û⁻¹ (reversed to standard) instead of Û.
        #[arg(long)]
        inverse: bool,
    },
    /// q-translation f(x ⊕ y).
    Translate {
        f: String,
        #[arg(long, default_value = "L")]
        variant: String,
        /// Use the crossing-generated formula.
        #[arg(long)]
        crossed: bool,
    },
    /// q-inversion f(⊖x).
    Antipode {
        f: String,
        #[arg(long, default_value = "L")]
        variant: String,
    },
    /// Partial derivative ∂^i acting on f.
    Deriv {
        f: String,
        /// Derivative index, 1 or 2.
        #[arg(short = 'i', long = "index", default_value_t = 1)]
        index: usize,
        #[arg(long, default_value = "L")]
        variant: String,
        /// Apply the inverse of the L derivative.
        #[arg(long)]
        inverse: bool,
        /// Use the crossing-generated formula.
        #[arg(long)]
        crossed: bool,
    },
    /// Whole-space integral of f·exp(−Σ(xⁱ)²).
    Integrate {
        /// Polynomial prefactor.
        f: String,
    },
    /// Dual pairing ⟨u, g⟩ of a derivative polynomial (d1, d2) with a plane function.
    Pair {
        u: String,
        g: String,
        /// LRbar or LbarR.
        #[arg(long, default_value = "LRbar")]
        variant: String,
    },
    /// Truncated q-exponential.
    Exp {
        /// RLbar or RbarL.
        #[arg(long, default_value = "RLbar")]
        variant: String,
        /// Generate RbarL by crossing.
        #[arg(long)]
        crossed: bool,
    },
    /// Braided product f(x) ⊙ g(y) on the plane.
    Braid {
        f: String,
        g: String,
        #[arg(long, default_value = "L")]
        variant: String,
    },
    /// Minkowski derivative ∂̂_which or its inverse.
    MinkDeriv {
        f: String,
        /// 3, +, - or 2.
        #[arg(long, default_value = "3", allow_hyphen_values = true)]
        which: String,
        #[arg(long)]
        inverse: bool,
        /// series or resummed (for --inverse).
        #[arg(long, default_value = "resummed")]
        mode: String,
    },
    /// Minkowski ordering reversal Û⁻¹.
    MinkFlip {
        f: String,
        /// List the (i, k) summands.
        #[arg(long)]
        terms: bool,
    },
    /// Minkowski whole-space integral.
    MinkIntegrate {
        /// Polynomial prefactor of exp(−Σ(xⁱ)²); ignored with --battery.
        f: Option<String>,
        /// closed, main or nested.
        #[arg(long, default_value = "closed")]
        mode: String,
        /// A battery function name, or `all`.
        #[arg(long)]
        battery: Option<String>,
        /// Term cap for truncated inverse series.
        #[arg(long, default_value_t = 8)]
        max_terms: usize,
    },
    /// Run a verification suite.
    Verify {
        /// Suite name or `all`.
        suite: String,
        /// Degree bound for the exact suites.
        #[arg(long)]
        degree: Option<i32>,
        /// Random inputs per sweep.
        #[arg(long)]
        samples: Option<usize>,
        /// Also print a summary table on stderr.
        #[arg(long)]
        table: bool,
    },
}

enum Failure {
    Usage(String),
    Verification(Value),
}

impl From<QError> for Failure {
    fn from(e: QError) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Out = Result<Value, Failure>;

struct Settings {
    params: IntegralParams,
    n: u32,
    space: Option<Space>,
}

fn settings(c: &Common) -> Result<Settings, Failure> {
    let mut params = IntegralParams::default();
    let mut n = 8;
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let cfg: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let obj = cfg.as_object().ok_or_else(|| Failure::Usage("config must be a JSON object".into()))?;
        for (key, v) in obj {
            let num = || v.as_f64().ok_or_else(|| Failure::Usage(format!("config key `{key}` must be a number")));
            let int = || v.as_u64().ok_or_else(|| Failure::Usage(format!("config key `{key}` must be a positive integer")));
            match key.as_str() {
                "q" => params.q = num()?,
                "K" => params.k = u32::try_from(int()?).map_err(|_| Failure::Usage("K is too large".into()))?,
                "tol" => params.tol = num()?,
                "x0" => params.x0 = num()?,
                "N" => n = u32::try_from(int()?).map_err(|_| Failure::Usage("N is too large".into()))?,
                other => return Err(Failure::Usage(format!("unknown config key `{other}`"))),
            }
        }
    }
    params.q = c.q.unwrap_or(params.q);
    params.k = c.k.unwrap_or(params.k);
    params.tol = c.tol.unwrap_or(params.tol);
    params.x0 = c.x0.unwrap_or(params.x0);
    let space = c.space.as_deref().map(Space::from_tag).transpose()?;
    Ok(Settings { params: params.validated()?, n: c.n.unwrap_or(n), space })
}

fn require_space(verb: &str, given: Option<Space>, allowed: Space) -> Result<(), Failure> {
    match given {
        Some(s) if s != allowed => Err(Failure::Usage(format!("`{verb}` is only defined on {allowed}, not {s}"))),
        _ => Ok(()),
    }
}

/// Parses a polynomial argument, rejecting negative exponents.
fn poly(text: &str, cs: CoordSys, verb: &str) -> Result<PolyFun, Failure> {
    let f = parse_polyfun(text, cs)?;
    f.require_polynomial(verb)?;
    Ok(f)
}

fn ordering(s: &str) -> Result<Ordering, Failure> {
    match s {
        "standard" => Ok(Ordering::Standard),
        "reversed" => Ok(Ordering::Reversed),
        _ => Err(Failure::Usage(format!("unknown ordering `{s}` (expected standard or reversed)"))),
    }
}

fn pairing_variant(s: &str) -> Result<PairingVariant, Failure> {
    match s {
        "LRbar" | "lrbar" => Ok(PairingVariant::LRBar),
        "LbarR" | "lbarr" => Ok(PairingVariant::LBarR),
        _ => Err(Failure::Usage(format!("unknown pairing `{s}` (expected LRbar or LbarR)"))),
    }
}

fn exp_variant(s: &str) -> Result<ExpVariant, Failure> {
    match s {
        "RLbar" | "rlbar" => Ok(ExpVariant::RLBar),
        "RbarL" | "rbarl" => Ok(ExpVariant::RBarL),
        _ => Err(Failure::Usage(format!("unknown exponential `{s}` (expected RLbar or RbarL)"))),
    }
}

fn derivative_index(i: usize) -> Result<usize, Failure> {
    match i {
        1 | 2 => Ok(i - 1),
        _ => Err(Failure::Usage(format!("derivative index must be 1 or 2, got {i}"))),
    }
}

fn tensor(t: &TensorPolyFun) -> Value {
    json!({ "text": t.to_string(), "terms": t.to_json() })
}

fn fun(f: &PolyFun) -> Value {
    json!({ "text": f.to_string(), "terms": f.to_json() })
}

fn run(cli: Cli) -> Out {
    let st = settings(&cli.common)?;
    let plane = CoordSys::PLANE;
    let plane_only = |verb: &str| require_space(verb, st.space, Space::Plane);
    let mink_only = |verb: &str| require_space(verb, st.space, Space::Minkowski);
    Ok(match cli.cmd {
        Cmd::Star { f, g, ordering: o } => {
            plane_only("star")?;
            let (f, g) = (poly(&f, plane, "star")?, poly(&g, plane, "star")?);
            json!({ "verb": "star", "result": fun(&manin::star(&f, &g, ordering(&o)?)?) })
        }
        Cmd::Flip { f, inverse } => {
            plane_only("flip")?;
            let f = poly(&f, plane, "flip")?;
            let d = if inverse { Direction::Inverse } else { Direction::Forward };
            json!({ "verb": "flip", "inverse": inverse, "result": fun(&manin::ordering_flip(&f, d)) })
        }
        Cmd::Translate { f, variant, crossed } => {
            plane_only("translate")?;
            let f = poly(&f, plane, "translate")?;
            let v = Variant::parse(&variant)?;
            let t = if crossed { manin::translate_crossed(&f, v)? } else { manin::translate(&f, v)? };
            json!({ "verb": "translate", "variant": v.tag(), "crossed": crossed, "result": tensor(&t) })
        }
        Cmd::Antipode { f, variant } => {
            plane_only("antipode")?;
            let f = poly(&f, plane, "antipode")?;
            let v = Variant::parse(&variant)?;
            json!({ "verb": "antipode", "variant": v.tag(), "result": fun(&manin::antipode(&f, v)?) })
        }
        Cmd::Deriv { f, index, variant, inverse, crossed } => {
            plane_only("deriv")?;
            let f = poly(&f, plane, "deriv")?;
            let i = derivative_index(index)?;
            let v = Variant::parse(&variant)?;
            let r = match (inverse, crossed) {
                (true, false) if v == Variant::L => manin::qderiv_inverse(&f, i)?,
                (true, _) => return Err(Failure::Usage("--inverse is provided for the plain L derivative only".into())),
                (false, true) => manin::qderiv_crossed(&f, i, v)?,
                (false, false) => manin::qderiv(&f, i, v)?,
            };
            json!({ "verb": "deriv", "index": index, "variant": v.tag(), "inverse": inverse, "result": fun(&r) })
        }
        Cmd::Integrate { f } => {
            let space = st.space.unwrap_or(Space::Plane);
            let f = poly(&f, CoordSys::coords(space), "integrate")?;
            let e = whole_space_integral(space, &SepFun::poly_gaussian(&f, st.params.q)?, &st.params)?;
            e.to_json(&st.params)
        }
        Cmd::Pair { u, g, variant } => {
            plane_only("pair")?;
            let u = poly(&u, CoordSys::PLANE_PARTIAL, "pair")?;
            let g = poly(&g, plane, "pair")?;
            let v = pairing_variant(&variant)?;
            let r = manin::pairing(&u, &g, v)?;
            json!({ "verb": "pair", "variant": variant, "result": r.to_string(), "at_q": r.eval(st.params.q).ok() })
        }
        Cmd::Exp { variant, crossed } => {
            plane_only("exp")?;
            let v = exp_variant(&variant)?;
            let t = match (crossed, v) {
                (true, ExpVariant::RBarL) => manin::qexp_crossed(st.n)?,
                (true, ExpVariant::RLBar) => {
                    return Err(Failure::Usage("--crossed generates RbarL from RLbar".into()))
                }
                (false, _) => manin::qexp(st.n, v)?,
            };
            json!({ "verb": "exp", "variant": variant, "N": st.n, "result": tensor(&t) })
        }
        Cmd::Braid { f, g, variant } => {
            plane_only("braid")?;
            let (f, g) = (poly(&f, plane, "braid")?, poly(&g, plane, "braid")?);
            let v = Variant::parse(&variant)?;
            let t = manin::braided_product(&TensorPolyFun::product(&f, &g), v)?;
            json!({ "verb": "braid", "variant": v.tag(), "slots": ["g", "f"], "result": tensor(&t) })
        }
        Cmd::MinkDeriv { f, which, inverse, mode } => {
            mink_only("mink-deriv")?;
            let f = parse_polyfun(&f, CoordSys::MINKOWSKI)?;
            let d = minkowski::Direction::parse(&which)?;
            if inverse {
                let mode = match mode.as_str() {
                    "series" => InverseMode::Series,
                    "resummed" => InverseMode::Resummed,
                    _ => return Err(Failure::Usage(format!("unknown inverse mode `{mode}` (expected series or resummed)"))),
                };
                let inv = minkowski::mink_deriv_inverse(&f, d, mode)?;
                json!({
                    "verb": "mink-deriv",
                    "which": d.tag(),
                    "inverse": true,
                    "mode": mode_tag(inv.mode),
                    "max_k": inv.max_k,
                    "basis": inv.basis,
                    "result": fun(&inv.value),
                })
            } else {
                json!({ "verb": "mink-deriv", "which": d.tag(), "inverse": false, "result": fun(&minkowski::mink_deriv(&f, d)?) })
            }
        }
        Cmd::MinkFlip { f, terms } => {
            mink_only("mink-flip")?;
            let f = parse_polyfun(&f, CoordSys::MINKOWSKI)?;
            let mut out = json!({ "verb": "mink-flip", "result": fun(&minkowski::mink_ordering_reverse(&f)?) });
            if terms {
                let list: Vec<Value> = minkowski::mink_ordering_reverse_terms(&f)?
                    .iter()
                    .map(|t| json!({ "i": t.i, "k": t.k, "value": t.value.to_string() }))
                    .collect();
                out["terms"] = json!(list);
            }
            out
        }
        Cmd::MinkIntegrate { f, mode, battery, max_terms } => {
            mink_only("mink-integrate")?;
            let mode = MinkVolumeMode::parse(&mode)?;
            let mut inputs: Vec<(String, SepFun)> = Vec::new();
            match (&battery, &f) {
                (Some(_), Some(_)) => return Err(Failure::Usage("give either a prefactor or --battery".into())),
                (Some(name), None) => {
                    let all = minkowski::mink_battery();
                    let names: Vec<String> = all.iter().map(|(n, _)| n.clone()).collect();
                    inputs = all.into_iter().filter(|(n, _)| name == "all" || n == name).collect();
                    if inputs.is_empty() {
                        return Err(Failure::Usage(format!("unknown battery function `{name}` (known: {})", names.join(", "))));
                    }
                }
                (None, f) => {
                    let text = f.clone().unwrap_or_else(|| "1".into());
                    let p = poly(&text, CoordSys::MINKOWSKI, "mink-integrate")?;
                    inputs.push((text, SepFun::poly_gaussian(&p, st.params.q)?));
                }
            }
            let mut results = Vec::new();
            for (name, g) in &inputs {
                let v = minkowski::mink_whole_space_integral(g, mode, max_terms, &st.params)?;
                let mut entry = v.value.to_json(&st.params);
                entry["function"] = json!(name);
                entry["mode"] = json!(mode.tag());
                if !v.series.is_empty() {
                    entry["series"] = serde_json::to_value(&v.series).unwrap_or(Value::Null);
                    entry["stats"] = serde_json::to_value(v.stats).unwrap_or(Value::Null);
                }
                results.push(entry);
            }
            if battery.is_some() {
                json!(results)
            } else {
                results.pop().unwrap_or(Value::Null)
            }
        }
        Cmd::Verify { suite, degree, samples, table } => {
            let defaults = VerifyParams::default();
            let vp = VerifyParams {
                integral: st.params,
                n: st.n,
                degree,
                seed: verify::seed_from_env()?,
                samples: samples.unwrap_or(defaults.samples),
            };
            let report = verify::run(&suite, &vp)?;
            if table {
                eprint!("{}", report.table());
            }
            let out = report.to_json();
            if !report.passed() {
                return Err(Failure::Verification(out));
            }
            out
        }
    })
}

fn mode_tag(m: InverseMode) -> &'static str {
    match m {
        InverseMode::Series => "series",
        InverseMode::Resummed => "resummed",
    }
}

fn render(v: &Value, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(v).unwrap_or_default()
    } else {
        v.to_string()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pretty = cli.common.pretty;
    match run(cli) {
        Ok(v) => {
            println!("{}", render(&v, pretty));
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(v)) => {
            println!("{}", render(&v, pretty));
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", json!({ "error": msg }));
            ExitCode::from(2)
        }
    }
}
