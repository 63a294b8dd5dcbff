//! Operational calculus with dilatation and shift operators.
//!
//! Integral equations whose kernel dilates or shifts the unknown,
//! `∫ u(e^{-y²} x) dy = f(x)` and relatives, become algebraic once the kernel
//! is written as `exp{λ q(x) d/dx}` acting on `u`. Solving them then needs
//! fractional powers of `q(x) d/dx`, which this crate evaluates through
//! singular kernel integrals ([`fracops`]) or diagonally on power series
//! ([`series`]). Every result can be substituted back into its equation with
//! the residual harness in [`verify`], which only uses [`quadrature`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod fracops;
pub mod opeval;
pub mod quadrature;
pub mod series;
pub mod solvers;
pub mod specfun;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use fracops::{CoordinateMap, RadialKernel, RealFn};
pub use opeval::{ExponentialProfile, MultiplierIntegral, ShiftIntegral};
pub use quadrature::{QuadratureResult, SingularityHint};
pub use series::{apply_multiplier, PowerSeries, SeriesValue, SpectralMultiplier};
pub use solvers::{EquationFamily, EquationSpec, Rhs, SolutionFn};
pub use sum::NeumaierSum;
pub use verify::{ConjectureInput, ConjectureReport, ResidualReport};
