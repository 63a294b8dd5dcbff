//! Adaptive Gauss–Kronrod integration over finite and semi-infinite intervals.
//!
//! Every routine here is a plain 21-point Gauss–Kronrod bisection scheme
//! (global error control, the subinterval with the largest error estimate is
//! refined first). Endpoint singularities are never sampled: they are removed
//! by a change of variables selected through [`SingularityHint`] before the
//! adaptive loop starts.
//!
//! Integrands come in two flavours. The plain functions take `Fn(f64) -> f64`;
//! the `try_` variants take a fallible integrand so nested quadratures can
//! propagate inner failures.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default absolute tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default cap on integrand evaluations.
pub const DEFAULT_BUDGET: usize = 1_000_000;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Outcome of one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    /// `abs_error_estimate` met the requested tolerance, or every subinterval
    /// reached the round-off floor first (the tolerance was finer than the
    /// integrand can be resolved in double precision).
    pub converged: bool,
}

impl QuadratureResult {
    /// Returns the value, or a convergence error if the budget ran out.
    pub fn require(self, what: &str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Convergence(format!(
                "{what}: quadrature stopped at estimated error {:e} after {} evaluations",
                self.abs_error_estimate, self.evaluations
            )))
        }
    }
}

/// Declared endpoint behaviour of an integrand on a finite interval `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SingularityHint {
    #[default]
    None,
    /// `f(x) ~ (x - a)^(-1/2)` as `x -> a`.
    InverseSqrtLower,
    /// `f(x) ~ (b - x)^(-1/2)` as `x -> b`.
    InverseSqrtUpper,
    /// `f(ξ) ~ ln(b/ξ)^exponent` as `ξ -> b`. Requires `0 <= a < b`; the
    /// lower limit may be `0`, in which case the substituted range is infinite.
    LogPowerUpper { exponent: f64 },
}

impl SingularityHint {
    fn validate(&self) -> Result<()> {
        if let SingularityHint::LogPowerUpper { exponent } = *self {
            if !(exponent > -1.0) || !exponent.is_finite() {
                return Err(Error::Domain(format!(
                    "log-power exponent {exponent} must be finite and > -1"
                )));
            }
        }
        Ok(())
    }
}

/// Budget and tolerance for one adaptive run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub tol: f64,
    pub max_evaluations: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            tol: DEFAULT_TOL,
            max_evaluations: DEFAULT_BUDGET,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions {
            tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tolerance {} must be > 0", self.tol)));
        }
        Ok(())
    }
}

/// Evaluates `f(x)` and rejects non-finite samples.
#[inline]
fn sample<F: Fn(f64) -> Result<f64>>(f: &F, x: f64) -> Result<f64> {
    let v = f(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { abscissa: x })
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

struct Rule {
    value: f64,
    error: f64,
    /// Error estimate is already at the round-off floor; bisecting won't help.
    at_floor: bool,
}

fn gauss_kronrod_21<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<Rule> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;

    let mut res_g = 0.0;
    let mut res_k = f_center * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let h = half.abs();
    let raw = (res_k - res_g) * half;
    let error = rescale_error(raw, res_abs * h, res_asc * h);
    let floor = 50.0 * f64::EPSILON * res_abs * h;
    Ok(Rule {
        value: res_k * half,
        error,
        at_floor: error <= floor * (1.0 + 1e-12),
    })
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Global adaptive bisection on `[points[0], points[last]]`, starting from the
/// given breakpoints.
fn adaptive<F: Fn(f64) -> Result<f64>>(f: &F, points: &[f64], opts: QuadOptions) -> Result<QuadratureResult> {
    opts.validate()?;
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut evaluations = 0usize;

    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let rule = gauss_kronrod_21(f, a, b)?;
        evaluations += 21;
        if rule.at_floor {
            frozen_value += rule.value;
            frozen_error += rule.error;
        } else {
            heap.push(Segment {
                a,
                b,
                value: rule.value,
                error: rule.error,
            });
        }
    }

    let totals = |heap: &BinaryHeap<Segment>, fv: f64, fe: f64| {
        heap.iter().fold((fv, fe), |(v, e), s| (v + s.value, e + s.error))
    };

    let (_, mut error) = totals(&heap, frozen_value, frozen_error);
    let mut iterations = 0usize;
    loop {
        if error <= opts.tol {
            break;
        }
        if evaluations + 42 > opts.max_evaluations {
            break;
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            // Interval can no longer be split in floating point.
            frozen_value += seg.value;
            frozen_error += seg.error;
            continue;
        }
        let left = gauss_kronrod_21(f, seg.a, mid)?;
        let right = gauss_kronrod_21(f, mid, seg.b)?;
        evaluations += 42;
        error += left.error + right.error - seg.error;
        for (rule, a, b) in [(left, seg.a, mid), (right, mid, seg.b)] {
            if rule.at_floor {
                frozen_value += rule.value;
                frozen_error += rule.error;
            } else {
                heap.push(Segment {
                    a,
                    b,
                    value: rule.value,
                    error: rule.error,
                });
            }
        }
        iterations += 1;
        if iterations.is_multiple_of(64) {
            error = totals(&heap, frozen_value, frozen_error).1;
        }
    }
    let (value, error) = totals(&heap, frozen_value, frozen_error);
    Ok(QuadratureResult {
        value,
        abs_error_estimate: error,
        evaluations,
        converged: error <= opts.tol || heap.is_empty(),
    })
}

/// Integrates `f` over the finite interval `(a, b)`.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    hint: SingularityHint,
    tol: f64,
) -> Result<QuadratureResult> {
    try_integrate_finite_with(|x| Ok(f(x)), a, b, hint, QuadOptions::with_tol(tol))
}

/// Fallible-integrand form of [`integrate_finite`].
pub fn try_integrate_finite<F: Fn(f64) -> Result<f64>>(
    f: F,
    a: f64,
    b: f64,
    hint: SingularityHint,
    tol: f64,
) -> Result<QuadratureResult> {
    try_integrate_finite_with(f, a, b, hint, QuadOptions::with_tol(tol))
}

/// [`integrate_finite`] with an explicit evaluation budget.
pub fn try_integrate_finite_with<F: Fn(f64) -> Result<f64>>(
    f: F,
    a: f64,
    b: f64,
    hint: SingularityHint,
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    hint.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "finite integration needs finite a < b, got ({a}, {b})"
        )));
    }
    match hint {
        SingularityHint::None => adaptive(&|x| sample(&f, x), &[a, b], opts),
        SingularityHint::InverseSqrtLower => {
            // x = a + u^2, dx = 2u du
            let g = |u: f64| -> Result<f64> {
                let x = a + u * u;
                Ok(2.0 * u * sample(&f, x)?)
            };
            adaptive(&g, &[0.0, (b - a).sqrt()], opts)
        }
        SingularityHint::InverseSqrtUpper => {
            // x = b - u^2
            let g = |u: f64| -> Result<f64> {
                let x = b - u * u;
                Ok(2.0 * u * sample(&f, x)?)
            };
            adaptive(&g, &[0.0, (b - a).sqrt()], opts)
        }
        SingularityHint::LogPowerUpper { exponent } => {
            if !(a >= 0.0) || !(b > 0.0) {
                return Err(Error::Domain(format!(
                    "log-power kernel needs 0 <= a < b, got ({a}, {b})"
                )));
            }
            // ξ = b e^{-s}, then s = t^{1/(p+1)} so that s^p ds = dt/(p+1).
            let power = 1.0 / (exponent + 1.0);
            let g = move |t: f64| -> Result<f64> {
                let s = t.powf(power);
                let jac = b * (-s).exp() * power * t.powf(power - 1.0);
                let xi = b * (-s).exp();
                // ξ rounded onto the singular endpoint carries no usable
                // information about ln(b/ξ).
                if jac == 0.0 || xi == b {
                    return Ok(0.0);
                }
                Ok(jac * sample(&f, xi)?)
            };
            if a == 0.0 {
                semi_infinite_mapped(&g, 0.0, opts)
            } else {
                let t_max = (b / a).ln().powf(exponent + 1.0);
                adaptive(&g, &[0.0, t_max], opts)
            }
        }
    }
}

/// Maps `(a, ∞)` to `(0, 1)` via `y = a + t/(1 - t)`.
fn semi_infinite_mapped<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, opts: QuadOptions) -> Result<QuadratureResult> {
    let g = |t: f64| -> Result<f64> {
        let one_minus = 1.0 - t;
        let y = a + t / one_minus;
        let jac = 1.0 / (one_minus * one_minus);
        let v = f(y)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        Ok(v * jac)
    };
    adaptive(&g, &[0.0, 0.25, 0.5, 0.75, 1.0], opts)
}

/// Integrates `f` over `(a, ∞)`.
///
/// Returns [`Error::Divergence`] when the adaptive pass fails and integrals
/// over successive doubling ranges do not shrink.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<QuadratureResult> {
    try_integrate_semi_infinite_with(|x| Ok(f(x)), a, QuadOptions::with_tol(tol))
}

/// Fallible-integrand form of [`integrate_semi_infinite`].
pub fn try_integrate_semi_infinite<F: Fn(f64) -> Result<f64>>(f: F, a: f64, tol: f64) -> Result<QuadratureResult> {
    try_integrate_semi_infinite_with(f, a, QuadOptions::with_tol(tol))
}

pub fn try_integrate_semi_infinite_with<F: Fn(f64) -> Result<f64>>(
    f: F,
    a: f64,
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    if !a.is_finite() {
        return Err(Error::Domain(format!("lower limit {a} must be finite")));
    }
    let checked = |x: f64| sample(&f, x);
    let result = semi_infinite_mapped(&checked, a, opts)?;
    if result.converged {
        return Ok(result);
    }
    if tail_diverges(&checked, a, opts.tol)? {
        return Err(Error::Divergence(format!(
            "integral over ({a}, inf) does not decay: contributions of successive doubling ranges do not shrink"
        )));
    }
    Ok(result)
}

/// Integrates over `[a + 2^k - 1, a + 2^{k+1} - 1]` for growing `k` and
/// reports whether the pieces stop shrinking.
fn tail_diverges<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, tol: f64) -> Result<bool> {
    const CHUNKS: i32 = 48;
    const WINDOW: usize = 8;
    let mut chunks = Vec::with_capacity(CHUNKS as usize);
    let opts = QuadOptions {
        tol: tol.max(1e-12),
        max_evaluations: 20_000,
    };
    for k in 0..CHUNKS {
        let lo = a + 2f64.powi(k) - 1.0;
        let hi = a + 2f64.powi(k + 1) - 1.0;
        let piece = adaptive(f, &[lo, hi], opts)?;
        chunks.push(piece.value.abs());
    }
    let tail = &chunks[chunks.len() - WINDOW..];
    let growing = tail.windows(2).all(|w| w[1] >= 0.9 * w[0]) && tail[WINDOW - 1] > tol;
    Ok(growing)
}

/// Integrates an oscillatory integrand over `(breakpoint(0), ∞)`.
///
/// `breakpoint(k)` must return increasing abscissae (typically successive
/// zeros) so that the integrals over consecutive ranges alternate in sign.
/// The alternating tail is summed with the Euler transform.
pub fn integrate_oscillatory<F, B>(f: F, breakpoint: B, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
    B: Fn(usize) -> f64,
{
    const WARMUP: usize = 4;
    const MAX_PIECES: usize = 400;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be > 0")));
    }
    let checked = |x: f64| sample(&|y| Ok(f(y)), x);
    let piece_opts = QuadOptions::with_tol(tol * 1e-2);

    let mut pieces: Vec<f64> = Vec::new();
    let mut piece_error = 0.0;
    let mut evaluations = 0;
    let mut push_piece = |pieces: &mut Vec<f64>| -> Result<()> {
        let k = pieces.len();
        let (lo, hi) = (breakpoint(k), breakpoint(k + 1));
        if !(hi > lo) {
            return Err(Error::Domain(format!(
                "breakpoints must increase: b({k}) = {lo}, b({}) = {hi}",
                k + 1
            )));
        }
        let r = adaptive(&checked, &[lo, hi], piece_opts)?;
        evaluations += r.evaluations;
        piece_error += r.abs_error_estimate;
        pieces.push(r.value);
        Ok(())
    };

    for _ in 0..WARMUP + 2 {
        push_piece(&mut pieces)?;
    }
    let head: f64 = pieces[..WARMUP].iter().sum();
    let mut previous = f64::NAN;
    while pieces.len() < MAX_PIECES {
        let tail = euler_alternating(&pieces[WARMUP..]);
        let estimate = head + tail;
        let change = (estimate - previous).abs();
        if change <= tol {
            let err = change + piece_error;
            return Ok(QuadratureResult {
                value: estimate,
                abs_error_estimate: err,
                evaluations,
                converged: err <= tol,
            });
        }
        previous = estimate;
        push_piece(&mut pieces)?;
    }
    Ok(QuadratureResult {
        value: previous,
        abs_error_estimate: f64::INFINITY,
        evaluations,
        converged: false,
    })
}

/// Euler transform of `Σ terms[k]` where the terms alternate in sign.
fn euler_alternating(terms: &[f64]) -> f64 {
    // b_k = (-1)^k terms[k] share one sign; Σ (-1)^k b_k = Σ_j (-1)^j Δ^j b_0 / 2^{j+1}.
    let mut diffs: Vec<f64> = terms
        .iter()
        .enumerate()
        .map(|(k, &t)| if k % 2 == 0 { t } else { -t })
        .collect();
    let mut sum = 0.0;
    let mut scale = 0.5;
    let mut sign = 1.0;
    while !diffs.is_empty() {
        sum += sign * scale * diffs[0];
        for i in 0..diffs.len() - 1 {
            diffs[i] = diffs[i + 1] - diffs[i];
        }
        diffs.pop();
        scale *= 0.5;
        sign = -sign;
    }
    sum
}
