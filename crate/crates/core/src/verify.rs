//! Back-substitution of solutions into their integral equations, and the
//! fractional Stirling expansion check.
//!
//! Residuals use only [`crate::quadrature`]: the left-hand side of each
//! equation is integrated directly with the candidate `u` and compared with
//! `f` pointwise.

use std::fmt::Write as _;
use std::io;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fracops::{self, RadialKernel, RealFn};
use crate::quadrature::{try_integrate_finite, try_integrate_semi_infinite, SingularityHint};
use crate::series::PowerSeries;
use crate::solvers::{self, EquationFamily, EquationSpec, Rhs, SolutionFn};
use crate::specfun::{self, STIRLING_FRAC_MAX_K};
use crate::sum::NeumaierSum;

/// Residual bound met by every catalog solution of the dilatation, radial
/// and generalized families.
pub const RESIDUAL_BOUND: f64 = 1e-6;
/// Residual bound for the Möbius family.
pub const MOEBIUS_RESIDUAL_BOUND: f64 = 1e-5;

/// Writes `v` with 17 significant digits, which round-trips any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// `count` points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !start.is_finite() || !stop.is_finite() || count == 0 {
        return Err(Error::Domain(format!(
            "linear grid needs finite endpoints and count >= 1, got {start}:{stop}:{count}"
        )));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let h = (stop - start) / (count - 1) as f64;
    let mut g: Vec<f64> = (0..count).map(|i| start + i as f64 * h).collect();
    g[count - 1] = stop;
    Ok(g)
}

/// `count` geometrically spaced points from `start` to `stop` inclusive.
pub fn geometric_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0) || !(stop > 0.0) || !start.is_finite() || !stop.is_finite() || count == 0 {
        return Err(Error::Domain(format!(
            "geometric grid needs finite positive endpoints and count >= 1, got {start}:{stop}:{count}"
        )));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let ratio = (stop / start).ln() / (count - 1) as f64;
    let mut g: Vec<f64> = (0..count).map(|i| start * (ratio * i as f64).exp()).collect();
    g[count - 1] = stop;
    Ok(g)
}

/// Pointwise defect `|LHS(x) - f(x)|` of a candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub label: String,
    pub grid: Vec<f64>,
    /// `None` where the left-hand side could not be integrated.
    pub lhs: Vec<Option<f64>>,
    pub rhs: Vec<f64>,
    pub residuals: Vec<Option<f64>>,
    /// Over successful points only.
    pub max_abs: f64,
    pub max_rel: f64,
    pub quad_failures: usize,
    /// One message per failed point.
    pub failures: Vec<String>,
}

impl ResidualReport {
    fn assemble(label: String, grid: Vec<f64>, rows: Vec<(std::result::Result<f64, Error>, f64)>) -> Self {
        let mut report = ResidualReport {
            label,
            lhs: Vec::with_capacity(grid.len()),
            rhs: Vec::with_capacity(grid.len()),
            residuals: Vec::with_capacity(grid.len()),
            grid,
            max_abs: 0.0,
            max_rel: 0.0,
            quad_failures: 0,
            failures: Vec::new(),
        };
        for (i, (lhs, f)) in rows.into_iter().enumerate() {
            report.rhs.push(f);
            match lhs {
                Ok(l) => {
                    let r = (l - f).abs();
                    let rel = if r == 0.0 { 0.0 } else { r / f.abs() };
                    report.max_abs = report.max_abs.max(r);
                    report.max_rel = report.max_rel.max(rel);
                    report.lhs.push(Some(l));
                    report.residuals.push(Some(r));
                }
                Err(e) => {
                    report.quad_failures += 1;
                    report.failures.push(format!("x = {}: {e}", report.grid[i]));
                    report.lhs.push(None);
                    report.residuals.push(None);
                }
            }
        }
        report
    }

    /// No failed points and `max_abs < bound`.
    pub fn passes(&self, bound: f64) -> bool {
        self.quad_failures == 0 && self.max_abs < bound
    }

    /// CSV with columns `x,lhs,rhs,abs_residual`; failed points leave `lhs`
    /// and `abs_residual` empty.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io_err = |e: csv::Error| Error::Domain(format!("writing residual CSV: {e}"));
        w.write_record(["x", "lhs", "rhs", "abs_residual"]).map_err(io_err)?;
        for i in 0..self.grid.len() {
            let opt = |v: Option<f64>| v.map(format_value).unwrap_or_default();
            w.write_record([
                format_value(self.grid[i]),
                opt(self.lhs[i]),
                format_value(self.rhs[i]),
                opt(self.residuals[i]),
            ])
            .map_err(io_err)?;
        }
        w.flush()
            .map_err(|e| Error::Domain(format!("writing residual CSV: {e}")))?;
        Ok(())
    }

    /// Plain-text summary, one `key: value` per line.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "equation: {}", self.label);
        let _ = writeln!(s, "points: {}", self.grid.len());
        let _ = writeln!(s, "max_abs: {:e}", self.max_abs);
        let _ = writeln!(s, "max_rel: {:e}", self.max_rel);
        let _ = writeln!(s, "quad_failures: {}", self.quad_failures);
        for f in &self.failures {
            let _ = writeln!(s, "  failure at {f}");
        }
        s
    }
}

/// Left-hand side of the equation of `family` at `x` for the candidate `u`.
pub fn lhs(family: &EquationFamily, u: &SolutionFn, x: f64, tol: f64) -> Result<f64> {
    let result = match family {
        EquationFamily::GaussianDilation => try_integrate_semi_infinite(|y| u.eval((-y * y).exp() * x), 0.0, tol)?,
        EquationFamily::LaplaceDilation { mu } => try_integrate_semi_infinite(
            |y| {
                let w = (-y).exp();
                if w == 0.0 {
                    return Ok(0.0);
                }
                Ok(w * u.eval(y.powf(*mu) * x)?)
            },
            0.0,
            tol,
        )?,
        EquationFamily::Radial => try_integrate_semi_infinite(|y| u.eval((x * x + 2.0 * y * y).sqrt()), 0.0, tol)?,
        EquationFamily::GeneralizedShift(map) => {
            let w = map.forward(x);
            let (lo, hi) = map.domain();
            try_integrate_semi_infinite(
                |y| {
                    let z = map.inverse(w - y * y);
                    // F⁻¹ rounds onto the boundary only once w - y² is far
                    // past the range where u carries any weight.
                    if z == lo || z == hi {
                        return Ok(0.0);
                    }
                    u.eval(z)
                },
                0.0,
                tol,
            )?
        }
        EquationFamily::Moebius { a } => {
            try_integrate_finite(|y| u.eval(x / (1.0 + x * y)), 0.0, *a, SingularityHint::None, tol)?
        }
    };
    result.require("residual left-hand side")
}

/// Substitutes `u` into the equation of `spec` at every grid point.
///
/// The left-hand side is integrated to `quad_tol / 10`. Points where it
/// fails are counted in `quad_failures` and excluded from the maxima.
pub fn residual(spec: &EquationSpec, u: &SolutionFn, grid: &[f64], quad_tol: f64) -> Result<ResidualReport> {
    if !(quad_tol > 0.0) {
        return Err(Error::Domain(format!("quad_tol {quad_tol} must be > 0")));
    }
    let family = spec.family();
    let rows: Vec<_> = grid
        .par_iter()
        .map(|&x| (lhs(family, u, x, quad_tol / 10.0), spec.rhs().eval(x)))
        .collect();
    Ok(ResidualReport::assemble(
        format!("{family} with f = {}", spec.rhs().label()),
        grid.to_vec(),
        rows,
    ))
}

/// Residual reports of the radial equation for the literal kernel and for
/// the Weyl-transported kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelComparison {
    pub literal: ResidualReport,
    pub weyl: ResidualReport,
}

/// Solves the radial equation with both [`RadialKernel`]s and substitutes
/// each solution back.
pub fn eq21_discrepancy(f: RealFn, f_prime: RealFn, grid: &[f64], tol: f64) -> Result<KernelComparison> {
    let (f1, d1) = (f.clone(), f_prime.clone());
    let rhs = Rhs::new("f", move |x| f1(x)).with_derivative(move |x| d1(x));
    let spec = EquationSpec::new(EquationFamily::Radial, rhs)?;
    let weyl = solvers::solve_radial(f.clone(), f_prime.clone(), tol)?;
    let literal = SolutionFn::from_fallible(EquationFamily::Radial, "literal radial kernel", tol, move |x| {
        fracops::weyl_half_radial_with(RadialKernel::Literal, |t| f(t), |t| f_prime(t), x, tol)
    });
    let quad_tol = 10.0 * tol;
    let mut literal = residual(&spec, &literal, grid, quad_tol)?;
    literal.label = format!("{} (literal kernel)", literal.label);
    let mut weyl = residual(&spec, &weyl, grid, quad_tol)?;
    weyl.label = format!("{} (Weyl kernel)", weyl.label);
    Ok(KernelComparison { literal, weyl })
}

type DerivativeFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// A function for [`conjecture_check`]: a power series, or a handle for its
/// derivatives together with the coefficients that define the target.
#[derive(Clone)]
pub enum ConjectureInput {
    Series(PowerSeries),
    Derivatives {
        label: String,
        /// `(k, x) ↦ f^{(k)}(x)`.
        derivative: DerivativeFn,
        coefficients: PowerSeries,
    },
}

impl std::fmt::Debug for ConjectureInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConjectureInput::Series(s) => f.debug_tuple("Series").field(&s.label()).finish(),
            ConjectureInput::Derivatives { label, .. } => f.debug_tuple("Derivatives").field(label).finish(),
        }
    }
}

impl ConjectureInput {
    /// `e^x - 1`: every derivative of order `k >= 1` is `e^x`.
    pub fn exp_minus_one() -> Self {
        let coeffs: Vec<f64> = specfun::inverse_factorials(crate::series::DEFAULT_ORDER)
            .into_iter()
            .enumerate()
            .map(|(n, c)| if n == 0 { 0.0 } else { c })
            .collect();
        ConjectureInput::Derivatives {
            label: "exp(x) - 1".into(),
            derivative: Arc::new(|k, x: f64| if k == 0 { x.exp_m1() } else { x.exp() }),
            coefficients: PowerSeries::truncated(coeffs, "exp(x) - 1").expect("finite coefficients"),
        }
    }

    fn coefficients(&self) -> &PowerSeries {
        match self {
            ConjectureInput::Series(s) => s,
            ConjectureInput::Derivatives { coefficients, .. } => coefficients,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ConjectureInput::Series(s) => s.label(),
            ConjectureInput::Derivatives { label, .. } => label,
        }
    }
}

/// Partial sums of `Σ_k S(ν,k) x^k f^{(k)}(x)` against `(x d/dx)^ν f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureReport {
    pub nu: f64,
    pub x: f64,
    pub k_values: Vec<usize>,
    pub partial_sums: Vec<f64>,
    /// `Σ_{n>=1} n^ν aₙ xⁿ`.
    pub target: f64,
    pub abs_errors: Vec<f64>,
    /// `f` has a constant term, which both sides ignore.
    pub constant_term_excluded: bool,
    /// Some `S(ν,k)` lost more than 1e-6 relative precision to cancellation.
    pub stirling_precision_warning: bool,
}

impl ConjectureReport {
    pub fn final_error(&self) -> f64 {
        *self.abs_errors.last().expect("K >= 0 gives at least one partial sum")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nu: {}", self.nu);
        let _ = writeln!(s, "x: {}", self.x);
        let _ = writeln!(s, "target: {}", format_value(self.target));
        if self.constant_term_excluded {
            let _ = writeln!(
                s,
                "warning: f has a nonzero constant term; it is excluded because (x d/dx)^nu and x^k d^k/dx^k both annihilate constants"
            );
        }
        if self.stirling_precision_warning {
            let _ = writeln!(
                s,
                "warning: some fractional Stirling numbers lost precision to cancellation"
            );
        }
        let _ = writeln!(s, "K,partial_sum,abs_error");
        for i in 0..self.k_values.len() {
            let _ = writeln!(
                s,
                "{},{},{}",
                self.k_values[i],
                format_value(self.partial_sums[i]),
                format_value(self.abs_errors[i])
            );
        }
        s
    }
}

/// Evaluates the fractional Stirling expansion of `(x d/dx)^ν f` for
/// `K = 0..=k_max`.
pub fn conjecture_check(nu: f64, f: &ConjectureInput, x: f64, k_max: usize) -> Result<ConjectureReport> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("nu must lie in (0, 1), got {nu}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite and > 0, got {x}")));
    }
    if k_max > STIRLING_FRAC_MAX_K {
        return Err(Error::Range(format!(
            "K = {k_max} exceeds the cancellation horizon {STIRLING_FRAC_MAX_K} of the fractional Stirling numbers"
        )));
    }
    let coeffs = f.coefficients();
    let target: f64 = coeffs
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, c)| (n as f64).powf(nu) * c * x.powi(n as i32))
        .collect::<NeumaierSum>()
        .value();

    let mut derivative = coeffs.clone();
    let mut acc = NeumaierSum::new();
    let mut report = ConjectureReport {
        nu,
        x,
        k_values: Vec::with_capacity(k_max + 1),
        partial_sums: Vec::with_capacity(k_max + 1),
        target,
        abs_errors: Vec::with_capacity(k_max + 1),
        constant_term_excluded: coeffs.coeffs()[0] != 0.0,
        stirling_precision_warning: false,
    };
    for k in 0..=k_max {
        let dk = match f {
            ConjectureInput::Series(_) => {
                if k > 0 {
                    derivative = derivative.derivative();
                }
                derivative.value_at(x)?
            }
            ConjectureInput::Derivatives { derivative, .. } => derivative(k, x),
        };
        let s = specfun::stirling2_frac(nu, k)?;
        report.stirling_precision_warning |= s.precision_warning;
        if s.value != 0.0 {
            acc.add(s.value * x.powi(k as i32) * dk);
        }
        let p = acc.value();
        report.k_values.push(k);
        report.partial_sums.push(p);
        report.abs_errors.push((p - target).abs());
    }
    Ok(report)
}
