//! Exact and numeric q-deformed analysis on quantum spaces.
//!
//! The crate provides exact coefficient arithmetic ([`qscalar`]), commutative
//! function algebras ([`polyfun`]), a noncommutative normal-ordering engine
//! ([`ncalg`]), closed-form calculus on the Manin plane ([`manin`]), Jackson
//! integration ([`qint`]) and the Minkowski-space operators ([`minkowski`]).

pub mod error;
pub mod expr;
pub mod manin;
pub mod ncalg;
pub mod minkowski;
pub mod polyfun;
pub mod qint;
pub mod qscalar;
pub mod verify;

pub use error::{QError, Result};
pub use polyfun::{CoordSys, LowerLimit, PolyFun, QExp, Role, Space, TensorPolyFun};
pub use qscalar::{eval_scalar, qfact, qnum, qnum_signed, QScalar};
