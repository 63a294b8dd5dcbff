//! One solver per integral-equation family. Each returns a lazily evaluated
//! [`SolutionFn`]; sampling on a grid is left to the caller.
//!
//! | family | equation |
//! |---|---|
//! | Gaussian dilation | `∫₀^∞ u(e^{-y²} x) dy = f(x)` |
//! | Laplace dilation  | `∫₀^∞ e^{-y} u(y^μ x) dy = f(x)` |
//! | radial            | `∫₀^∞ u(√(x² + 2y²)) dy = f(x)` |
//! | generalized shift | `∫₀^∞ u(F⁻¹(F(x) - y²)) dy = f(x)` |
//! | Möbius            | `∫₀^a u(x/(1 + xy)) dy = f(x)` |

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fracops::{self, CoordinateMap, RealFn};
use crate::series::{apply_multiplier, PowerSeries, SpectralMultiplier};
use crate::sum::NeumaierSum;

/// Largest Möbius truncation order tried before giving up.
pub const MOEBIUS_MAX_TERMS: usize = 100_000;
const MOEBIUS_START_TERMS: usize = 16;
// The tail correction is uniform in x because x/(1 + kax) < 1/(ka); these
// probes cover the transition from x_k ≈ x to x_k ≈ 1/(ka).
const MOEBIUS_PROBES: [f64; 7] = [1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e4];

/// `|f(ORIGIN_PROBE)|` above [`ORIGIN_LIMIT`] counts as `f(0) ≠ 0`.
pub const ORIGIN_PROBE: f64 = 1e-8;
pub const ORIGIN_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum EquationFamily {
    GaussianDilation,
    LaplaceDilation { mu: f64 },
    Radial,
    GeneralizedShift(CoordinateMap),
    Moebius { a: f64 },
}

impl EquationFamily {
    pub fn name(&self) -> &'static str {
        match self {
            EquationFamily::GaussianDilation => "gaussian_dilation",
            EquationFamily::LaplaceDilation { .. } => "laplace_dilation",
            EquationFamily::Radial => "radial",
            EquationFamily::GeneralizedShift(_) => "generalized_shift",
            EquationFamily::Moebius { .. } => "moebius",
        }
    }

    /// Smallest `x` at which solutions of this family are evaluable.
    pub fn lower_limit(&self) -> f64 {
        match self {
            EquationFamily::GeneralizedShift(map) => map.domain().0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for EquationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquationFamily::LaplaceDilation { mu } => write!(f, "laplace_dilation(mu={mu})"),
            EquationFamily::GeneralizedShift(map) => write!(f, "generalized_shift(map={})", map.name()),
            EquationFamily::Moebius { a } => write!(f, "moebius(a={a})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Right-hand side `f` with whatever extra forms are known.
#[derive(Clone)]
pub struct Rhs {
    label: String,
    f: RealFn,
    f_prime: Option<RealFn>,
    series: Option<PowerSeries>,
}

impl fmt::Debug for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rhs")
            .field("label", &self.label)
            .field("has_derivative", &self.f_prime.is_some())
            .field("series", &self.series.as_ref().map(|s| s.label().to_owned()))
            .finish()
    }
}

impl Rhs {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Rhs {
            label: label.into(),
            f: Arc::new(f),
            f_prime: None,
            series: None,
        }
    }

    pub fn with_derivative<G>(mut self, f_prime: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.f_prime = Some(Arc::new(f_prime));
        self
    }

    /// `f`, `f'` and the series form all from one power series.
    pub fn from_series(series: PowerSeries) -> Self {
        let s = series.clone();
        let d = series.derivative();
        Rhs {
            label: series.label().to_owned(),
            f: Arc::new(move |x| s.value_at(x).unwrap_or(f64::NAN)),
            f_prime: Some(Arc::new(move |x| d.value_at(x).unwrap_or(f64::NAN))),
            series: Some(series),
        }
    }

    /// Attaches a series form to a closed-form `f`.
    pub fn with_series(mut self, series: PowerSeries) -> Self {
        self.series = Some(series);
        self
    }

    pub fn zero() -> Self {
        Rhs::from_series(PowerSeries::zero(0))
    }

    /// `α·a + β·b`; derivative and series forms survive when both have them.
    pub fn linear_combination(alpha: f64, a: &Rhs, beta: f64, b: &Rhs) -> Rhs {
        let (fa, fb) = (a.f.clone(), b.f.clone());
        let f_prime = match (&a.f_prime, &b.f_prime) {
            (Some(pa), Some(pb)) => {
                let (pa, pb) = (pa.clone(), pb.clone());
                Some(Arc::new(move |x| alpha * pa(x) + beta * pb(x)) as RealFn)
            }
            _ => None,
        };
        let series = match (&a.series, &b.series) {
            (Some(sa), Some(sb)) => Some(sa.linear_combination(alpha, sb, beta)),
            _ => None,
        };
        Rhs {
            label: format!("{alpha}*({}) + {beta}*({})", a.label, b.label),
            f: Arc::new(move |x| alpha * fa(x) + beta * fb(x)),
            f_prime,
            series,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn f(&self) -> &RealFn {
        &self.f
    }

    pub fn f_prime(&self) -> Option<&RealFn> {
        self.f_prime.as_ref()
    }

    pub fn series(&self) -> Option<&PowerSeries> {
        self.series.as_ref()
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn require_derivative(&self, family: &str) -> Result<RealFn> {
        self.f_prime
            .clone()
            .ok_or_else(|| Error::Domain(format!("the {family} family needs f' for rhs '{}'", self.label)))
    }
}

/// An integral equation: family plus right-hand side.
#[derive(Debug, Clone)]
pub struct EquationSpec {
    family: EquationFamily,
    rhs: Rhs,
}

impl EquationSpec {
    /// Checks that `rhs` carries the forms the family needs.
    pub fn new(family: EquationFamily, rhs: Rhs) -> Result<Self> {
        match &family {
            EquationFamily::LaplaceDilation { mu } => {
                check_positive("mu", *mu)?;
                if rhs.series.is_none() {
                    return Err(Error::Domain(format!(
                        "the laplace_dilation family needs a power series for rhs '{}'",
                        rhs.label
                    )));
                }
            }
            EquationFamily::GaussianDilation | EquationFamily::Radial | EquationFamily::GeneralizedShift(_) => {
                rhs.require_derivative(family.name())?;
            }
            EquationFamily::Moebius { a } => {
                check_positive("a", *a)?;
                rhs.require_derivative(family.name())?;
                check_vanishes_at_origin(&rhs.f)?;
            }
        }
        Ok(EquationSpec { family, rhs })
    }

    pub fn family(&self) -> &EquationFamily {
        &self.family
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    /// Dispatches to the family's solver.
    pub fn solve(&self, tol: f64) -> Result<SolutionFn> {
        let rhs = &self.rhs;
        match &self.family {
            EquationFamily::GaussianDilation => solve_gaussian_dilation(rhs.require_derivative("gaussian")?, tol),
            EquationFamily::LaplaceDilation { mu } => {
                let series = rhs.series.as_ref().expect("checked in EquationSpec::new");
                solve_laplace_dilation(series, *mu)
            }
            EquationFamily::Radial => solve_radial(rhs.f.clone(), rhs.require_derivative("radial")?, tol),
            EquationFamily::GeneralizedShift(map) => {
                solve_generalized_shift(map.clone(), rhs.f.clone(), rhs.require_derivative("generalized")?, tol)
            }
            EquationFamily::Moebius { a } => solve_moebius(rhs.f.clone(), rhs.require_derivative("moebius")?, *a, tol),
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    check_positive("tolerance", tol)
}

fn check_vanishes_at_origin(f: &RealFn) -> Result<()> {
    let f0 = f(ORIGIN_PROBE);
    if f0.abs() < ORIGIN_LIMIT {
        Ok(())
    } else {
        Err(Error::Solvability(format!(
            "f({ORIGIN_PROBE:e}) = {f0:e}: the Möbius operator annihilates constants, so f(0) must be 0"
        )))
    }
}

type EvalFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// An evaluable solution `u` with provenance.
#[derive(Clone)]
pub struct SolutionFn {
    eval: EvalFn,
    method: String,
    truncation: Option<usize>,
    error_estimate: f64,
    family: EquationFamily,
    series: Option<PowerSeries>,
}

impl fmt::Debug for SolutionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolutionFn")
            .field("family", &self.family)
            .field("method", &self.method)
            .field("truncation", &self.truncation)
            .field("error_estimate", &self.error_estimate)
            .finish()
    }
}

impl SolutionFn {
    /// Wraps a closed-form candidate, e.g. to feed it to the residual harness.
    pub fn from_fn<F>(family: EquationFamily, method: impl Into<String>, u: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SolutionFn {
            eval: Arc::new(move |x| Ok(u(x))),
            method: method.into(),
            truncation: None,
            error_estimate: 0.0,
            family,
            series: None,
        }
    }

    /// [`SolutionFn::from_fn`] for an evaluator that can fail.
    pub fn from_fallible<F>(family: EquationFamily, method: impl Into<String>, error_estimate: f64, u: F) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        SolutionFn {
            eval: Arc::new(u),
            method: method.into(),
            truncation: None,
            error_estimate: error_estimate.max(0.0),
            family,
            series: None,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        (self.eval)(x)
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn family(&self) -> &EquationFamily {
        &self.family
    }

    /// The solution's power series, for series-based solvers.
    pub fn series(&self) -> Option<&PowerSeries> {
        self.series.as_ref()
    }
}

fn check_nonnegative(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must be finite and >= 0, got {x}")))
    }
}

/// `u = (2/√π) √(x d/dx) f`.
///
/// `u(0) = 0` for every `f'` bounded near the origin.
pub fn solve_gaussian_dilation(f_prime: RealFn, tol: f64) -> Result<SolutionFn> {
    check_tol(tol)?;
    let eval: EvalFn = Arc::new(move |x: f64| {
        check_nonnegative(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        fracops::half_sqrt_xd(|t| f_prime(t), x, tol)
    });
    Ok(SolutionFn {
        eval,
        method: "half power of x d/dx, kernel integral in s = t^2".into(),
        truncation: None,
        error_estimate: tol,
        family: EquationFamily::GaussianDilation,
        series: None,
    })
}

/// `u = {Γ(μ x d/dx + 1)}⁻¹ f`, i.e. `bₙ = cₙ/Γ(μn + 1)` on the plain
/// coefficients of `f`.
pub fn solve_laplace_dilation(f_series: &PowerSeries, mu: f64) -> Result<SolutionFn> {
    let m = SpectralMultiplier::reciprocal_gamma(mu)?;
    let u = apply_multiplier(&m, f_series)?.with_label(format!("{}[{}]", m.description(), f_series.label()));
    let last = u.coeffs().last().copied().unwrap_or(0.0).abs();
    let s = u.clone();
    Ok(SolutionFn {
        eval: Arc::new(move |x| s.value_at(x)),
        method: "spectral multiplier 1/Gamma(mu n + 1) on the power series".into(),
        truncation: Some(u.order()),
        error_estimate: if u.is_exact() { 0.0 } else { last },
        family: EquationFamily::LaplaceDilation { mu },
        series: Some(u),
    })
}

/// `u = -(2/√π) √(-(1/x) d/dx) f`, through the Weyl form in `w = x²/2`.
pub fn solve_radial(f: RealFn, f_prime: RealFn, tol: f64) -> Result<SolutionFn> {
    check_tol(tol)?;
    let eval: EvalFn = Arc::new(move |x: f64| fracops::weyl_half_radial(|t| f(t), |t| f_prime(t), x, tol));
    Ok(SolutionFn {
        eval,
        method: "Weyl half-derivative in w = x^2/2".into(),
        truncation: None,
        error_estimate: tol,
        family: EquationFamily::Radial,
        series: None,
    })
}

/// `u = (2/√π) √(q(x) d/dx) f` for the coordinate `w = F(x)` of `map`.
pub fn solve_generalized_shift(map: CoordinateMap, f: RealFn, f_prime: RealFn, tol: f64) -> Result<SolutionFn> {
    check_tol(tol)?;
    let family = EquationFamily::GeneralizedShift(map.clone());
    let eval: EvalFn = Arc::new(move |x: f64| fracops::generalized_half(&map, |t| f(t), |t| f_prime(t), x, tol));
    Ok(SolutionFn {
        eval,
        method: "half-derivative in the straightening coordinate w = F(x)".into(),
        truncation: None,
        error_estimate: tol,
        family,
        series: None,
    })
}

/// `Σ_{k=0}^{K} h(x_k)` plus the midpoint tail `f(x_{K+1/2})/a`, where
/// `h(t) = t² f'(t)` and `x_k = x/(1 + kax)`.
///
/// The tail is the integral of `h(x_k)` over `k > K + 1/2`, which with
/// `dt = -a t² dk` collapses to `(f(x_{K+1/2}) - f(0))/a`.
pub fn moebius_partial_sum(f: &RealFn, f_prime: &RealFn, a: f64, x: f64, terms: usize) -> Result<f64> {
    check_nonnegative(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut acc = NeumaierSum::new();
    for k in 0..=terms {
        let t = x / (1.0 + k as f64 * a * x);
        let h = t * t * f_prime(t);
        if !h.is_finite() {
            return Err(Error::NonFinite { abscissa: t });
        }
        acc.add(h);
    }
    let t_tail = x / (1.0 + (terms as f64 + 0.5) * a * x);
    acc.add(f(t_tail) / a);
    Ok(acc.value())
}

/// `u = x² d/dx (1 - e^{-a x² d/dx})⁻¹ f` expanded as the shift series
/// `Σ_k e^{-k a x² d/dx} x² f'(x)`, with the tail integrated in closed form.
///
/// The truncation order `K` is fixed here, at solve time: it is doubled from
/// 16 until sums at `K` and `2K` agree within `tol` on a probe set spanning
/// `x ∈ [1e-3, 1e4]`.
pub fn solve_moebius(f: RealFn, f_prime: RealFn, a: f64, tol: f64) -> Result<SolutionFn> {
    check_positive("a", a)?;
    check_tol(tol)?;
    check_vanishes_at_origin(&f)?;
    let mut k = MOEBIUS_START_TERMS;
    loop {
        let mut worst: f64 = 0.0;
        for &x in &MOEBIUS_PROBES {
            let lo = moebius_partial_sum(&f, &f_prime, a, x, k)?;
            let hi = moebius_partial_sum(&f, &f_prime, a, x, 2 * k)?;
            worst = worst.max((hi - lo).abs());
        }
        if worst < tol {
            return solve_moebius_truncated(f, f_prime, a, k, worst);
        }
        if 2 * k > MOEBIUS_MAX_TERMS {
            return Err(Error::Convergence(format!(
                "Möbius shift series: sums at K = {k} and {} still differ by {worst:e} > {tol:e}",
                2 * k
            )));
        }
        k *= 2;
    }
}

/// [`solve_moebius`] with a caller-chosen truncation order.
pub fn solve_moebius_truncated(
    f: RealFn,
    f_prime: RealFn,
    a: f64,
    terms: usize,
    error_estimate: f64,
) -> Result<SolutionFn> {
    check_positive("a", a)?;
    check_vanishes_at_origin(&f)?;
    let eval: EvalFn = Arc::new(move |x| moebius_partial_sum(&f, &f_prime, a, x, terms));
    Ok(SolutionFn {
        eval,
        method: "shift series sum_k h(x/(1+kax)) with closed-form tail".into(),
        truncation: Some(terms),
        error_estimate: error_estimate.max(0.0),
        family: EquationFamily::Moebius { a },
        series: None,
    })
}
