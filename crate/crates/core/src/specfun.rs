//! Gamma-function machinery, J₀ / Bessel–Wright series and Stirling numbers
//! of the second kind (integer and fractional first argument).

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

// Lanczos approximation with g = 671/128 and 14 terms:
// Γ(x) = √(2π) t^{x+1/2} e^{-t} S(x) / x, t = x + g + 1/2,
// S(x) = c₀ + Σ_j c_j/(x + j).
const LANCZOS_SHIFT: f64 = 5.242_187_5;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_092;
const LANCZOS_COF: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

fn lanczos_series(x: f64) -> f64 {
    let mut ser = LANCZOS_C0;
    let mut y = x;
    for c in LANCZOS_COF {
        y += 1.0;
        ser += c / y;
    }
    ser
}

/// Above this argument the Stirling series is used for `ln Γ`.
const STIRLING_CUTOFF: f64 = 10.0;
/// Largest argument with a finite `Γ(x)` in double precision.
const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// `ln Γ(x) - [(x - 1/2) ln x - x + ln √(2π)]`, the Stirling correction, for
/// `x >= 10`.
fn stirling_correction(x: f64) -> f64 {
    // B_{2k} / (2k (2k-1)), k = 1..8
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_6;

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires a finite argument > 0, got {x}")))
    }
}

/// Natural logarithm of `Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive(x, "log_gamma")?;
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 1e-20 {
        return Ok(-x.ln());
    }
    if x >= STIRLING_CUTOFF {
        return Ok((x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_correction(x));
    }
    let t = x + LANCZOS_SHIFT;
    Ok((x + 0.5) * t.ln() - t + (SQRT_2PI * lanczos_series(x) / x).ln())
}

/// `Γ(x)` for `x > 0`. Returns `+inf` past the double-precision overflow point.
pub fn gamma(x: f64) -> Result<f64> {
    check_positive(x, "gamma")?;
    if x > GAMMA_MAX_ARG {
        return Ok(f64::INFINITY);
    }
    if x.fract() == 0.0 {
        // (x-1)! by direct product: exact through 22!.
        let n = x as u32;
        return Ok((2..n).fold(1.0, |acc, k| acc * k as f64));
    }
    if x < 1e-20 {
        return Ok(1.0 / x);
    }
    if x < STIRLING_CUTOFF {
        let t = x + LANCZOS_SHIFT;
        return Ok(t.powf(x + 0.5) * (-t).exp() * SQRT_2PI * lanczos_series(x) / x);
    }
    // Stirling form, squared halves to stay in range near the overflow point.
    let half = x.powf(0.5 * (x - 0.5)) * (-0.5 * x).exp();
    Ok(SQRT_2PI * half * half * stirling_correction(x).exp())
}

/// `1/Γ(x)` for `x > 0`, finite (possibly underflowing to 0) for all such `x`.
pub fn rgamma(x: f64) -> Result<f64> {
    check_positive(x, "rgamma")?;
    if x < GAMMA_MAX_ARG - 1.0 {
        Ok(1.0 / gamma(x)?)
    } else {
        Ok((-log_gamma(x)?).exp())
    }
}

/// `Γ(a)/Γ(b)` for `a, b > 0`, computed without overflow.
pub fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    check_positive(a, "gamma_ratio")?;
    check_positive(b, "gamma_ratio")?;
    if a == b {
        return Ok(1.0);
    }
    if a >= STIRLING_CUTOFF && b >= STIRLING_CUTOFF {
        // (a-1/2)ln a - (b-1/2)ln b = (a-b) ln a + (b-1/2) ln(a/b), the last
        // factor taken through ln_1p to keep the difference exact-ish.
        let d = a - b;
        let log_ratio = d * a.ln() + (b - 0.5) * (d / b).ln_1p() - d + stirling_correction(a) - stirling_correction(b);
        return Ok(log_ratio.exp());
    }
    if a < GAMMA_MAX_ARG && b < GAMMA_MAX_ARG {
        return Ok(gamma(a)? / gamma(b)?);
    }
    Ok((log_gamma(a)? - log_gamma(b)?).exp())
}

/// `J₀(z)` from its power series. Adequate for `|z|` up to about 10.
pub fn bessel_j0(z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut acc = NeumaierSum::new();
    acc.add(term);
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        acc.add(term);
        if term.abs() < 1e-17 * acc.value().abs() {
            break;
        }
    }
    acc.value()
}

/// Bessel–Wright function `W_n(x | μ) = Σ_k (-x)^k / (k! Γ(μk + n + 1))`.
pub fn bessel_wright(n: u32, mu: f64, x: f64, tol: f64) -> Result<f64> {
    const MAX_TERMS: usize = 500;
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("bessel_wright requires mu > 0, got {mu}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be > 0")));
    }
    let n = n as f64;
    let mut term = rgamma(n + 1.0)?;
    let mut acc = NeumaierSum::new();
    acc.add(term);
    let mut small_run = 0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= -x / kf * gamma_ratio(mu * (kf - 1.0) + n + 1.0, mu * kf + n + 1.0)?;
        acc.add(term);
        if !acc.value().is_finite() {
            break;
        }
        if term.abs() < tol * acc.value().abs() || term == 0.0 {
            small_run += 1;
            if small_run == 3 {
                return Ok(acc.value());
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::Convergence(format!(
        "bessel_wright(n={n}, mu={mu}, x={x}) did not converge in {MAX_TERMS} terms"
    )))
}

/// Largest `n` for which [`stirling2`] is available.
pub const STIRLING_MAX_N: usize = 40;
/// Largest `k` accepted by [`stirling2_frac`].
pub const STIRLING_FRAC_MAX_K: usize = 60;

/// Triangular table of `S(n, k)`, `0 <= k <= n <= max_n`, built by the
/// recurrence `S(n,k) = k S(n-1,k) + S(n-1,k-1)`.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    max_n: usize,
    rows: Vec<Vec<u128>>,
}

impl StirlingTable {
    pub fn new(max_n: usize) -> Result<Self> {
        if max_n > STIRLING_MAX_N {
            return Err(Error::Range(format!(
                "Stirling table limited to n <= {STIRLING_MAX_N}, got {max_n}"
            )));
        }
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![1]);
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut row = vec![0u128; n + 1];
            for k in 1..=n {
                let stay = if k < n { k as u128 * prev[k] } else { 0 };
                row[k] = stay + prev[k - 1];
            }
            rows.push(row);
        }
        Ok(StirlingTable { max_n, rows })
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// `S(n, k)`; zero when `k > n`.
    pub fn get(&self, n: usize, k: usize) -> Option<u128> {
        let row = self.rows.get(n)?;
        Some(row.get(k).copied().unwrap_or(0))
    }
}

fn shared_table() -> &'static StirlingTable {
    static TABLE: OnceLock<StirlingTable> = OnceLock::new();
    TABLE.get_or_init(|| StirlingTable::new(STIRLING_MAX_N).expect("table bound"))
}

/// Stirling number of the second kind `S(n, k)`, exact.
pub fn stirling2(n: usize, k: usize) -> Result<u128> {
    shared_table().get(n, k).ok_or_else(|| {
        Error::Range(format!(
            "stirling2 is exact only for n <= {STIRLING_MAX_N}, got n = {n}"
        ))
    })
}

/// `S(ν, k)` for real `ν` together with a cancellation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracStirling {
    pub value: f64,
    /// Estimated relative error from cancellation in the alternating sum.
    pub relative_error: f64,
    pub precision_warning: bool,
}

/// Threshold on [`FracStirling::relative_error`] that raises the warning.
pub const FRAC_STIRLING_WARN: f64 = 1e-6;

/// `(1/k!) Σ_j (-1)^{k-j} C(k,j) j^ν` for `0 < ν < 1`, with `0^ν = 0`.
pub fn stirling2_frac(nu: f64, k: usize) -> Result<FracStirling> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("stirling2_frac requires 0 < nu < 1, got {nu}")));
    }
    stirling2_real(nu, k)
}

/// Same sum as [`stirling2_frac`] for any `ν >= 0`; integer `ν` reproduces
/// [`stirling2`].
pub fn stirling2_real(nu: f64, k: usize) -> Result<FracStirling> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("nu must be finite and >= 0, got {nu}")));
    }
    if k > STIRLING_FRAC_MAX_K {
        return Err(Error::Range(format!(
            "k = {k} exceeds the cancellation horizon {STIRLING_FRAC_MAX_K}"
        )));
    }
    // C(k,j)/k! = 1/(j!(k-j)!)
    let inv_fact = inverse_factorials(k);
    let mut acc = NeumaierSum::new();
    let mut magnitude = 0.0;
    for j in 1..=k {
        let power = if nu == 0.0 { 1.0 } else { (j as f64).powf(nu) };
        let t = power * inv_fact[j] * inv_fact[k - j];
        let t = if (k - j).is_multiple_of(2) { t } else { -t };
        magnitude += t.abs();
        acc.add(t);
    }
    if nu == 0.0 && k == 0 {
        // 0^0 = 1 in the integer convention
        acc.add(1.0);
        magnitude += 1.0;
    }
    let value = acc.value();
    let relative_error = if magnitude == 0.0 {
        0.0
    } else if value == 0.0 {
        f64::INFINITY
    } else {
        4.0 * f64::EPSILON * magnitude / value.abs()
    };
    Ok(FracStirling {
        value,
        relative_error,
        precision_warning: relative_error > FRAC_STIRLING_WARN,
    })
}

/// `[1/0!, 1/1!, ..., 1/k!]`.
pub fn inverse_factorials(k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut f = 1.0;
    out.push(1.0);
    for j in 1..=k {
        f /= j as f64;
        out.push(f);
    }
    out
}
