//! Operator-method evaluation of parameter-dependent integrals.
//!
//! * `F(x;ν) = ∫₀^∞ sin(x/(1+t²)^ν) dt`, by its odd power series and by
//!   direct quadrature.
//! * `G(x) = ∫₀^∞ f(x g(t)) dt = O(x d/dx) f(x)` with `O(μ) = ∫₀^∞ g(t)^μ dt`.
//! * `I(x) = ∫₀^∞ f(√(x² - 2g(t))) dt = Q((1/x) d/dx) f(x)` with
//!   `Q(μ) = ∫₀^∞ e^{-μ g(t)} dt`, for `f` a sum of Gaussians.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fracops::RealFn;
use crate::quadrature::{integrate_finite, integrate_semi_infinite, QuadratureResult, SingularityHint};
use crate::series::{apply_multiplier, PowerSeries, SpectralMultiplier, CANCELLATION_WARN};
use crate::specfun;
use crate::sum::NeumaierSum;

const SQRT_PI_2: f64 = 0.886_226_925_452_758_0;
/// Hard cap on series terms for `F(x;ν)`.
pub const F_SERIES_MAX_TERMS: usize = 2000;
/// `|x|` above which [`eval_f`] prefers quadrature outright.
pub const F_SERIES_RANGE: f64 = 10.0;
/// Probe tolerance for [`MultiplierIntegral::validate`].
pub const MULTIPLIER_CHECK_TOL: f64 = 1e-7;

/// Series value of `F(x;ν)` with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FSeriesValue {
    pub value: f64,
    pub terms_used: usize,
    /// `Σ|terms| / |value|`.
    pub cancellation_index: f64,
    /// Set when `cancellation_index` exceeds [`CANCELLATION_WARN`]; the
    /// quadrature path is then more accurate.
    pub precision_warning: bool,
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu >= 0.5) || !nu.is_finite() {
        return Err(Error::Domain(format!("F(x;nu) needs finite nu >= 1/2, got {nu}")));
    }
    Ok(())
}

fn nu_half_diverges(x: f64, nu: f64) -> Result<()> {
    // At ν = 1/2 the integrand behaves like x/t at infinity.
    if nu == 0.5 && x != 0.0 {
        return Err(Error::Divergence(format!(
            "F(x;1/2) diverges for x = {x}: sin(x/sqrt(1+t^2)) ~ x/t as t -> inf"
        )));
    }
    Ok(())
}

/// `(√π/2) Σₙ (-1)ⁿ x^{2n+1}/(2n+1)! · Γ((2n+1)ν - 1/2)/Γ((2n+1)ν)`.
///
/// Stops once three consecutive terms fall below `tol·|partial sum|`.
pub fn eval_f_series(x: f64, nu: f64, tol: f64) -> Result<FSeriesValue> {
    check_nu(nu)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be > 0")));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {x}")));
    }
    if x == 0.0 {
        return Ok(FSeriesValue {
            value: 0.0,
            terms_used: 1,
            cancellation_index: 1.0,
            precision_warning: false,
        });
    }
    nu_half_diverges(x, nu)?;
    let x2 = x * x;
    let mut power = x; // x^{2n+1}/(2n+1)!
    let mut acc = NeumaierSum::new();
    let mut magnitude = 0.0;
    let mut small = 0;
    for n in 0..F_SERIES_MAX_TERMS {
        if n > 0 {
            let m = 2.0 * n as f64;
            power *= x2 / (m * (m + 1.0));
        }
        let order = (2 * n + 1) as f64 * nu;
        let ratio = specfun::gamma_ratio(order - 0.5, order)?;
        let term = if n % 2 == 0 { power * ratio } else { -power * ratio };
        if !term.is_finite() {
            return Err(Error::Overflow { index: 2 * n + 1 });
        }
        acc.add(term);
        magnitude += term.abs();
        if term.abs() < tol * acc.value().abs() {
            small += 1;
            if small == 3 {
                let value = SQRT_PI_2 * acc.value();
                let cancellation_index = SQRT_PI_2 * magnitude / value.abs().max(f64::MIN_POSITIVE);
                return Ok(FSeriesValue {
                    value,
                    terms_used: n + 1,
                    cancellation_index,
                    precision_warning: cancellation_index > CANCELLATION_WARN,
                });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Convergence(format!(
        "F({x};{nu}) series did not settle within {F_SERIES_MAX_TERMS} terms"
    )))
}

/// `∫₀^∞ sin(x/(1+t²)^ν) dt` by adaptive quadrature.
///
/// The range is split at the zeros `t_k`, where `x/(1+t²)^ν = kπ`; beyond
/// the last one the integrand keeps one sign and decays like `x t^{-2ν}`.
pub fn eval_f_quadrature(x: f64, nu: f64, tol: f64) -> Result<QuadratureResult> {
    check_nu(nu)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {x}")));
    }
    if x == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    nu_half_diverges(x, nu)?;
    let sign = x.signum();
    let ax = x.abs();
    let integrand = move |t: f64| (ax / (1.0 + t * t).powf(nu)).sin();

    let zeros = (ax / PI).floor() as usize;
    let mut breaks = vec![0.0];
    for k in (1..=zeros).rev() {
        let t = ((ax / (k as f64 * PI)).powf(1.0 / nu) - 1.0).max(0.0).sqrt();
        if t > *breaks.last().unwrap() {
            breaks.push(t);
        }
    }
    let piece_tol = tol / (breaks.len() as f64 + 1.0);
    let mut total = QuadratureResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        evaluations: 0,
        converged: true,
    };
    let mut acc = NeumaierSum::new();
    let mut absorb = |r: QuadratureResult| {
        acc.add(r.value);
        total.abs_error_estimate += r.abs_error_estimate;
        total.evaluations += r.evaluations;
        total.converged &= r.converged;
    };
    let last = *breaks.last().unwrap();
    if last < 1.0 {
        breaks.push(1.0);
    }
    for w in breaks.windows(2) {
        absorb(integrate_finite(
            integrand,
            w[0],
            w[1],
            SingularityHint::None,
            piece_tol,
        )?);
    }
    // Past the last zero the integrand is positive and decays like t^{-2ν},
    // too slowly near ν = 1/2 for the algebraic map; t = e^s makes the decay
    // exponential with rate 2ν - 1.
    let tail = move |s: f64| {
        let ln_1p_t2 = if s > 0.0 {
            2.0 * s + (-2.0 * s).exp().ln_1p()
        } else {
            (2.0 * s).exp().ln_1p()
        };
        let arg = ax * (-nu * ln_1p_t2).exp();
        let sinc = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
        sinc * ax * (s - nu * ln_1p_t2).exp()
    };
    absorb(integrate_semi_infinite(tail, breaks.last().unwrap().ln(), piece_tol)?);
    total.value = sign * acc.value();
    Ok(total)
}

/// Which path produced an [`eval_f`] value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FPath {
    Series,
    Quadrature,
}

/// Tightest tolerance [`eval_f`] asks of quadrature.
pub const F_QUADRATURE_TOL_FLOOR: f64 = 1e-12;

/// `F(x;ν)`: the series for `|x| ≤ 10` unless it reports a precision loss,
/// quadrature otherwise. The quadrature tolerance is at least
/// [`F_QUADRATURE_TOL_FLOOR`], and relative once that is below round-off.
pub fn eval_f(x: f64, nu: f64, tol: f64) -> Result<(f64, FPath)> {
    if x.abs() <= F_SERIES_RANGE {
        let s = eval_f_series(x, nu, tol)?;
        if !s.precision_warning {
            return Ok((s.value, FPath::Series));
        }
    }
    let qtol = tol.max(F_QUADRATURE_TOL_FLOOR);
    let q = eval_f_quadrature(x, nu, qtol)?;
    if !q.converged && q.abs_error_estimate <= qtol * q.value.abs() {
        // Absolute tolerance below the round-off of a large value.
        return Ok((q.value, FPath::Quadrature));
    }
    Ok((q.require("F(x;nu)")?, FPath::Quadrature))
}

type MomentFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// `O(μ) = ∫₀^∞ g(t)^μ dt` in closed form, with an optional direct `g` for
/// cross-checks.
#[derive(Clone)]
pub struct MultiplierIntegral {
    o: MomentFn,
    domain_floor: f64,
    g_direct: Option<RealFn>,
    description: String,
}

impl fmt::Debug for MultiplierIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierIntegral")
            .field("description", &self.description)
            .field("domain_floor", &self.domain_floor)
            .field("has_direct", &self.g_direct.is_some())
            .finish()
    }
}

impl MultiplierIntegral {
    /// `domain_floor` is the smallest admissible `μ`.
    pub fn new<O>(o: O, domain_floor: f64, description: impl Into<String>) -> Self
    where
        O: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        MultiplierIntegral {
            o: Arc::new(o),
            domain_floor,
            g_direct: None,
            description: description.into(),
        }
    }

    pub fn with_direct<G>(mut self, g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.g_direct = Some(Arc::new(g));
        self
    }

    /// `g(t) = (1+t²)^{-ν}`: `O(μ) = (√π/2) Γ(νμ - 1/2)/Γ(νμ)`, admissible
    /// for `νμ > 1/2`. The floor is the smallest such integer.
    pub fn inverse_quadratic_power(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!("nu must be finite and > 0, got {nu}")));
        }
        let floor = (0.5 / nu).floor() + 1.0;
        Ok(Self::new(
            move |mu| {
                let m = nu * mu;
                if !(m > 0.5) {
                    return Err(Error::Domain(format!("O(mu) diverges for nu*mu = {m} <= 1/2")));
                }
                Ok(SQRT_PI_2 * specfun::gamma_ratio(m - 0.5, m)?)
            },
            floor,
            format!("int (1+t^2)^(-{nu} mu) dt"),
        )
        .with_direct(move |t| (1.0 + t * t).powf(-nu)))
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn o(&self, mu: f64) -> Result<f64> {
        if mu < self.domain_floor {
            return Err(Error::Domain(format!(
                "O(mu) requested at mu = {mu} below the floor {}",
                self.domain_floor
            )));
        }
        (self.o)(mu)
    }

    /// `∫₀^∞ g(t)^μ dt` by quadrature; needs the direct `g`.
    pub fn o_quadrature(&self, mu: f64, tol: f64) -> Result<f64> {
        let g = self
            .g_direct
            .as_ref()
            .ok_or_else(|| Error::Domain(format!("'{}' has no direct g(t)", self.description)))?;
        integrate_semi_infinite(|t| g(t).powf(mu), 0.0, tol)?.require("O(mu) quadrature")
    }

    /// Compares `O` with quadrature at `μ = floor, floor + 1, floor + 2.5`.
    /// Without a direct `g` there is nothing to check.
    pub fn validate(&self) -> Result<()> {
        if self.g_direct.is_none() {
            return Ok(());
        }
        for mu in [self.domain_floor, self.domain_floor + 1.0, self.domain_floor + 2.5] {
            let closed = self.o(mu)?;
            let quad = self.o_quadrature(mu, MULTIPLIER_CHECK_TOL * 1e-2)?;
            if !((closed - quad).abs() <= MULTIPLIER_CHECK_TOL) {
                return Err(Error::Domain(format!(
                    "'{}': O({mu}) = {closed} but quadrature gives {quad}",
                    self.description
                )));
            }
        }
        Ok(())
    }

    /// `O(x d/dx)` as a spectral multiplier.
    pub fn multiplier(&self) -> SpectralMultiplier {
        let o = self.o.clone();
        SpectralMultiplier::new(
            move |n| o(n).unwrap_or(f64::NAN),
            self.domain_floor,
            self.description.clone(),
        )
    }
}

/// `G(x) = O(x d/dx) f(x) = Σ cₙ O(n) xⁿ`.
pub fn eval_g(mi: &MultiplierIntegral, f_series: &PowerSeries, x: f64) -> Result<f64> {
    let g = apply_multiplier(&mi.multiplier(), f_series)?;
    g.value_at(x)
}

/// `G(x) = ∫₀^∞ f(x g(t)) dt` by quadrature, as an oracle for [`eval_g`].
pub fn eval_g_quadrature<F: Fn(f64) -> f64>(mi: &MultiplierIntegral, f: F, x: f64, tol: f64) -> Result<f64> {
    let g = mi
        .g_direct
        .as_ref()
        .ok_or_else(|| Error::Domain(format!("'{}' has no direct g(t)", mi.description)))?;
    integrate_semi_infinite(|t| f(x * g(t)), 0.0, tol)?.require("G(x) quadrature")
}

/// `f̃(w) = Σ c_j e^{-β_j w}` in `w = x²/2`, i.e. `f(x) = Σ c_j e^{-β_j x²/2}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExponentialProfile {
    terms: Vec<(f64, f64)>,
}

impl ExponentialProfile {
    /// Terms are `(c_j, β_j)` with `β_j > 0`.
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        for &(c, beta) in &terms {
            if !c.is_finite() || !(beta > 0.0) || !beta.is_finite() {
                return Err(Error::Domain(format!(
                    "profile term ({c}, {beta}) needs finite c and finite beta > 0"
                )));
            }
        }
        Ok(ExponentialProfile { terms })
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    /// `f(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let w = 0.5 * x * x;
        self.terms.iter().map(|&(c, b)| c * (-b * w).exp()).sum()
    }
}

/// `Q(μ) = ∫₀^∞ e^{-μ g(t)} dt` in closed form on an open interval of `μ`.
#[derive(Clone)]
pub struct ShiftIntegral {
    q: RealFn,
    admissible: (f64, f64),
    g_direct: Option<RealFn>,
    description: String,
}

impl fmt::Debug for ShiftIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShiftIntegral")
            .field("description", &self.description)
            .field("admissible", &self.admissible)
            .finish()
    }
}

impl ShiftIntegral {
    /// `admissible` is the open interval on which `Q` is finite.
    pub fn new<Q>(q: Q, admissible: (f64, f64), description: impl Into<String>) -> Self
    where
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ShiftIntegral {
            q: Arc::new(q),
            admissible,
            g_direct: None,
            description: description.into(),
        }
    }

    pub fn with_direct<G>(mut self, g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.g_direct = Some(Arc::new(g));
        self
    }

    /// `g(t) = -t²`: `Q(μ) = (1/2)√(π/(-μ))` for `μ < 0`.
    pub fn negative_square() -> Self {
        Self::new(
            |mu| 0.5 * (PI / -mu).sqrt(),
            (f64::NEG_INFINITY, 0.0),
            "int exp(mu t^2) dt",
        )
        .with_direct(|t| -t * t)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn q(&self, mu: f64) -> Result<f64> {
        let (lo, hi) = self.admissible;
        if !(mu > lo && mu < hi) {
            return Err(Error::Domain(format!(
                "'{}': Q({mu}) is outside the admissible range ({lo}, {hi})",
                self.description
            )));
        }
        let v = (self.q)(mu);
        if !v.is_finite() {
            return Err(Error::Domain(format!("'{}': Q({mu}) = {v}", self.description)));
        }
        Ok(v)
    }
}

/// `I(x) = Σ_j c_j Q(-β_j) e^{-β_j x²/2}`: each Gaussian is an eigenfunction
/// of `(1/x) d/dx = d/dw` with eigenvalue `-β_j`.
pub fn eval_i(profile: &ExponentialProfile, q: &ShiftIntegral, x: f64) -> Result<f64> {
    let w = 0.5 * x * x;
    let mut acc = NeumaierSum::new();
    for &(c, beta) in profile.terms() {
        acc.add(c * q.q(-beta)? * (-beta * w).exp());
    }
    Ok(acc.value())
}

/// `∫₀^∞ f(√(x² - 2g(t))) dt` by quadrature; needs the direct `g`.
pub fn eval_i_quadrature(profile: &ExponentialProfile, q: &ShiftIntegral, x: f64, tol: f64) -> Result<f64> {
    let g = q
        .g_direct
        .as_ref()
        .ok_or_else(|| Error::Domain(format!("'{}' has no direct g(t)", q.description)))?;
    integrate_semi_infinite(|t| profile.eval((x * x - 2.0 * g(t)).sqrt()), 0.0, tol)?.require("I(x) quadrature")
}
