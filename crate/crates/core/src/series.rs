//! Truncated power series and the diagonal action of functions of `x d/dx`.
//!
//! Coefficients are always the plain `xⁿ` coefficients: `f(x) = Σ cₙ xⁿ`.
//! Series written in the exponential convention `f(x) = Σ aₙ xⁿ/n!` go
//! through [`PowerSeries::from_exponential_coefficients`].
//!
//! Since `(x d/dx) xⁿ = n xⁿ`, any analytic `g(x d/dx)` maps `xⁿ` to
//! `g(n) xⁿ`; a [`SpectralMultiplier`] is that map `n ↦ g(n)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::specfun;
use crate::sum::NeumaierSum;

/// Default truncation order for series built from an infinite rule.
pub const DEFAULT_ORDER: usize = 64;
/// `cancellation_index` above this raises [`SeriesValue::precision_warning`].
pub const CANCELLATION_WARN: f64 = 1e6;
/// Relative size of the last retained term that counts as "not converged".
pub const TRUNCATION_WARN: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
    label: String,
    /// The coefficients describe a polynomial exactly rather than a
    /// truncation of an infinite series.
    exact: bool,
}

/// Result of [`PowerSeries::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// `Σ|cₙ xⁿ| / max(|value|, tiny)`.
    pub cancellation_index: f64,
    /// The last retained term is not negligible: truncation may not have converged.
    pub truncation_warning: bool,
    pub precision_warning: bool,
}

impl PowerSeries {
    /// Truncation of an infinite series; `coeffs[n]` multiplies `xⁿ`.
    pub fn truncated(coeffs: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::build(coeffs, label.into(), false)
    }

    /// A polynomial given exactly by its coefficients.
    pub fn polynomial(coeffs: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::build(coeffs, label.into(), true)
    }

    fn build(coeffs: Vec<f64>, label: String, exact: bool) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain(
                "a power series needs at least the x^0 coefficient".into(),
            ));
        }
        if let Some(n) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("coefficient {n} of '{label}' is not finite")));
        }
        Ok(PowerSeries { coeffs, label, exact })
    }

    /// `coeffs[n] = rule(n)` for `n = 0..=order`.
    pub fn from_coefficient_rule<R: Fn(usize) -> f64>(rule: R, order: usize, label: impl Into<String>) -> Result<Self> {
        Self::truncated((0..=order).map(rule).collect(), label)
    }

    /// Converts `f(x) = Σ aₙ xⁿ/n!` to plain coefficients.
    pub fn from_exponential_coefficients(a: &[f64], label: impl Into<String>) -> Result<Self> {
        let inv = specfun::inverse_factorials(a.len().saturating_sub(1));
        Self::truncated(a.iter().zip(inv).map(|(a, f)| a * f).collect(), label)
    }

    /// `aₙ = n!·cₙ`, the exponential-convention coefficients.
    pub fn exponential_coefficients(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                if n > 0 {
                    fact *= n as f64;
                }
                c * fact
            })
            .collect()
    }

    pub fn zero(order: usize) -> Self {
        PowerSeries {
            coeffs: vec![0.0; order + 1],
            label: "zero".into(),
            exact: true,
        }
    }

    /// The single-term series `xⁿ`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        PowerSeries {
            coeffs,
            label: format!("x^{n}"),
            exact: true,
        }
    }

    /// Taylor series of `e^{-x}` to `order`.
    pub fn exp_decay(order: usize) -> Self {
        let inv = specfun::inverse_factorials(order);
        PowerSeries {
            coeffs: inv
                .iter()
                .enumerate()
                .map(|(n, c)| if n % 2 == 0 { *c } else { -c })
                .collect(),
            label: "exp(-x)".into(),
            exact: false,
        }
    }

    /// Taylor series of `sin x` to `order`.
    pub fn sine(order: usize) -> Self {
        let inv = specfun::inverse_factorials(order);
        let coeffs = inv
            .iter()
            .enumerate()
            .map(|(n, c)| match n % 4 {
                1 => *c,
                3 => -c,
                _ => 0.0,
            })
            .collect();
        PowerSeries {
            coeffs,
            label: "sin(x)".into(),
            exact: false,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `α·self + β·other`, padded to the longer order.
    pub fn linear_combination(&self, alpha: f64, other: &PowerSeries, beta: f64) -> PowerSeries {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                alpha * self.coeffs.get(i).copied().unwrap_or(0.0) + beta * other.coeffs.get(i).copied().unwrap_or(0.0)
            })
            .collect();
        PowerSeries {
            coeffs,
            label: format!("{alpha}*({}) + {beta}*({})", self.label, other.label),
            exact: self.exact && other.exact,
        }
    }

    /// Formal derivative.
    pub fn derivative(&self) -> PowerSeries {
        let coeffs = if self.coeffs.len() == 1 {
            vec![0.0]
        } else {
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, c)| n as f64 * c)
                .collect()
        };
        PowerSeries {
            coeffs,
            label: format!("d/dx {}", self.label),
            exact: self.exact,
        }
    }

    /// `Σ cₙ xⁿ` with compensated summation.
    pub fn evaluate(&self, x: f64) -> Result<SeriesValue> {
        let mut acc = NeumaierSum::new();
        let mut magnitude = 0.0;
        let mut last = 0.0;
        for (n, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let term = c * x.powi(n as i32);
            if !term.is_finite() {
                return Err(Error::Overflow { index: n });
            }
            acc.add(term);
            magnitude += term.abs();
            last = term;
        }
        let value = acc.value();
        let cancellation_index = magnitude / value.abs().max(f64::MIN_POSITIVE);
        Ok(SeriesValue {
            value,
            cancellation_index,
            truncation_warning: !self.exact && last.abs() > TRUNCATION_WARN * value.abs(),
            precision_warning: cancellation_index > CANCELLATION_WARN,
        })
    }

    /// Shorthand for `evaluate(x)?.value`.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x)?.value)
    }
}

type Phi = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function of `x d/dx` represented by its values on the spectrum.
#[derive(Clone)]
pub struct SpectralMultiplier {
    phi: Phi,
    domain_floor: f64,
    description: String,
}

impl fmt::Debug for SpectralMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralMultiplier")
            .field("domain_floor", &self.domain_floor)
            .field("description", &self.description)
            .finish()
    }
}

impl SpectralMultiplier {
    pub fn new<F>(phi: F, domain_floor: f64, description: impl Into<String>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SpectralMultiplier {
            phi: Arc::new(phi),
            domain_floor,
            description: description.into(),
        }
    }

    pub fn identity() -> Self {
        Self::new(|_| 1.0, 0.0, "1")
    }

    /// `(x d/dx)^ν`. Negative powers exclude `n = 0`.
    pub fn power(nu: f64) -> Self {
        let floor = if nu < 0.0 { 1.0 } else { 0.0 };
        Self::new(
            move |n| if n == 0.0 && nu > 0.0 { 0.0 } else { n.powf(nu) },
            floor,
            format!("(x d/dx)^{nu}"),
        )
    }

    /// `1/Γ(μ x d/dx + 1)`.
    pub fn reciprocal_gamma(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite and > 0, got {mu}")));
        }
        Ok(Self::new(
            move |n| specfun::rgamma(mu * n + 1.0).unwrap_or(f64::NAN),
            0.0,
            format!("1/Gamma({mu} x d/dx + 1)"),
        ))
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// `φ(n)`, refusing points below the domain floor.
    pub fn eval(&self, n: f64) -> Result<f64> {
        if n < self.domain_floor {
            return Err(Error::Domain(format!(
                "multiplier '{}' is undefined at n = {n} (floor {})",
                self.description, self.domain_floor
            )));
        }
        Ok((self.phi)(n))
    }

    /// The product `n ↦ φ₁(n)·φ₂(n)`, i.e. operator composition.
    pub fn compose(&self, other: &SpectralMultiplier) -> SpectralMultiplier {
        let (p, q) = (self.phi.clone(), other.phi.clone());
        SpectralMultiplier {
            phi: Arc::new(move |n| p(n) * q(n)),
            domain_floor: self.domain_floor.max(other.domain_floor),
            description: format!("({})*({})", self.description, other.description),
        }
    }
}

/// Applies `φ(x d/dx)` coefficient-wise: `bₙ = φ(n)·cₙ`.
pub fn apply_multiplier(m: &SpectralMultiplier, s: &PowerSeries) -> Result<PowerSeries> {
    let mut coeffs = Vec::with_capacity(s.coeffs.len());
    for (n, &c) in s.coeffs.iter().enumerate() {
        if c == 0.0 {
            coeffs.push(0.0);
            continue;
        }
        let nf = n as f64;
        if nf < m.domain_floor {
            return Err(Error::SpectralDomain {
                index: n,
                floor: m.domain_floor,
            });
        }
        let phi = (m.phi)(nf);
        if !phi.is_finite() {
            return Err(Error::Domain(format!(
                "multiplier '{}' is not finite at n = {n}",
                m.description
            )));
        }
        coeffs.push(phi * c);
    }
    Ok(PowerSeries {
        coeffs,
        label: format!("{} [{}]", m.description, s.label),
        exact: s.exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_multiplier() {
        let s = PowerSeries::exp_decay(20);
        let out = apply_multiplier(&SpectralMultiplier::identity(), &s).unwrap();
        assert_eq!(out.coeffs(), s.coeffs());
        assert_eq!(out.order(), s.order());
    }

    #[test]
    fn gamma_inverse_gives_j0_series() {
        let s = PowerSeries::exp_decay(30);
        let out = apply_multiplier(&SpectralMultiplier::reciprocal_gamma(1.0).unwrap(), &s).unwrap();
        for (n, b) in out.coeffs().iter().enumerate() {
            let f = specfun::gamma(n as f64 + 1.0).unwrap();
            let want = if n % 2 == 0 { 1.0 } else { -1.0 } / (f * f);
            assert!(((b - want) / want).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn gamma_inverse_mu2_gives_bessel_wright_series() {
        let s = PowerSeries::exp_decay(20);
        let out = apply_multiplier(&SpectralMultiplier::reciprocal_gamma(2.0).unwrap(), &s).unwrap();
        for (n, b) in out.coeffs().iter().enumerate() {
            let nf = n as f64;
            let want = if n % 2 == 0 { 1.0 } else { -1.0 }
                / (specfun::gamma(nf + 1.0).unwrap() * specfun::gamma(2.0 * nf + 1.0).unwrap());
            assert!(((b - want) / want).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn negative_power_rejects_constant_term() {
        let s = PowerSeries::polynomial(vec![1.0, 2.0], "1+2x").unwrap();
        let err = apply_multiplier(&SpectralMultiplier::power(-0.5), &s).unwrap_err();
        assert_eq!(err, Error::SpectralDomain { index: 0, floor: 1.0 });
        // a zero constant term is fine
        let s = PowerSeries::polynomial(vec![0.0, 2.0], "2x").unwrap();
        assert!(apply_multiplier(&SpectralMultiplier::power(-0.5), &s).is_ok());
    }

    #[test]
    fn evaluate_examples() {
        let e = PowerSeries::from_coefficient_rule(|n| specfun::rgamma(n as f64 + 1.0).unwrap(), 30, "exp").unwrap();
        let v = e.evaluate(1.0).unwrap();
        assert!((v.value - std::f64::consts::E).abs() < 1e-15);
        assert!(!v.truncation_warning);
        let j0 = apply_multiplier(
            &SpectralMultiplier::reciprocal_gamma(1.0).unwrap(),
            &PowerSeries::exp_decay(40),
        )
        .unwrap();
        assert_eq!(j0.evaluate(0.0).unwrap().value, 1.0);
    }

    #[test]
    fn evaluate_flags() {
        // e^{-x} at x = 30 with 64 terms: heavy cancellation and unconverged tail.
        let v = PowerSeries::exp_decay(64).evaluate(30.0).unwrap();
        assert!(v.precision_warning);
        assert!(v.truncation_warning);
        let p = PowerSeries::monomial(3).evaluate(2.0).unwrap();
        assert!(!p.truncation_warning);
        assert_eq!(p.cancellation_index, 1.0);
    }

    #[test]
    fn evaluate_overflow_names_term() {
        let s = PowerSeries::polynomial(vec![1.0, 0.0, 1e300], "big").unwrap();
        assert_eq!(s.evaluate(1e10).unwrap_err(), Error::Overflow { index: 2 });
    }

    #[test]
    fn coefficient_rule_and_conversions() {
        let z = PowerSeries::from_coefficient_rule(|_| 0.0, 5, "zero").unwrap();
        assert_eq!(z.coeffs(), &[0.0; 6]);
        let e = PowerSeries::from_coefficient_rule(
            |n| if n % 2 == 0 { 1.0 } else { -1.0 } * specfun::rgamma(n as f64 + 1.0).unwrap(),
            20,
            "",
        )
        .unwrap();
        for (a, b) in e.coeffs().iter().zip(PowerSeries::exp_decay(20).coeffs()) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
        let a: Vec<f64> = (0..10).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = PowerSeries::from_exponential_coefficients(&a, "exp(-x)").unwrap();
        assert_eq!(s.coeffs(), PowerSeries::exp_decay(9).coeffs());
        let back = s.exponential_coefficients();
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(PowerSeries::truncated(vec![], "").is_err());
        assert!(PowerSeries::truncated(vec![f64::NAN], "").is_err());
    }

    #[test]
    fn composition_with_dyadic_values_is_exact() {
        let p = SpectralMultiplier::new(|n| 0.5 + n, 0.0, "p");
        let q = SpectralMultiplier::new(|n| 0.25 * n - 1.0, 0.0, "q");
        let s = PowerSeries::polynomial(vec![1.0, 3.0, -0.75, 8.0], "s").unwrap();
        let twice = apply_multiplier(&q, &apply_multiplier(&p, &s).unwrap()).unwrap();
        let once = apply_multiplier(&p.compose(&q), &s).unwrap();
        assert_eq!(twice.coeffs(), once.coeffs());
    }

    #[test]
    fn derivative_of_monomial() {
        let d = PowerSeries::monomial(4).derivative();
        assert_eq!(d.coeffs(), &[0.0, 0.0, 0.0, 4.0]);
        assert_eq!(PowerSeries::monomial(0).derivative().coeffs(), &[0.0]);
    }
}
