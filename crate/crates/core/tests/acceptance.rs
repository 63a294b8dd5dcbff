//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use opcalc::fracops::{self, CoordinateMap, RealFn};
use opcalc::opeval::{self, ExponentialProfile, MultiplierIntegral, ShiftIntegral};
use opcalc::solvers::{self, EquationFamily, EquationSpec, Rhs};
use opcalc::specfun;
use opcalc::verify::{self, ConjectureInput};
use opcalc::PowerSeries;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, outcome: Outcome) -> Outcome {
    let secs = elapsed.as_secs_f64();
    match outcome {
        Ok(d) if secs < limit_s => Ok(d),
        Ok(d) => Err(format!("{d}; runtime {secs:.1} s exceeds {limit_s} s")),
        e => e,
    }
}

fn polynomial_rhs(coeffs: &[f64], label: &str) -> Rhs {
    Rhs::from_series(PowerSeries::polynomial(coeffs.to_vec(), label).unwrap())
}

fn gaussian_catalog() -> Vec<Rhs> {
    vec![
        polynomial_rhs(&[0.0, 1.0], "x"),
        polynomial_rhs(&[0.0, 0.0, 1.0], "x^2"),
        polynomial_rhs(&[0.0, 0.0, 0.0, 1.0], "x^3"),
        polynomial_rhs(&[0.0, 1.0, 0.0, 1.0], "x + x^3"),
    ]
}

fn gaussian_grid() -> Vec<f64> {
    verify::geometric_grid(0.1, 5.0, 25).unwrap()
}

fn fig1() -> Outcome {
    let grid = verify::linear_grid(0.0, 10.0, 201).unwrap();
    let mut worst: f64 = 0.0;
    let mut curves = Vec::new();
    for nu in [1.5, 4.1] {
        let mut curve = Vec::with_capacity(grid.len());
        for &x in &grid {
            let s = opeval::eval_f_series(x, nu, 1e-16).map_err(|e| e.to_string())?;
            let q = opeval::eval_f_quadrature(x, nu, 1e-11).map_err(|e| e.to_string())?;
            if !q.converged {
                return Err(format!("quadrature did not converge at x={x}, nu={nu}"));
            }
            worst = worst.max((s.value - q.value).abs());
            let odd = opeval::eval_f_series(-x, nu, 1e-16).map_err(|e| e.to_string())?.value;
            if odd != -s.value {
                return Err(format!("F(-x) != -F(x) at x={x}, nu={nu}"));
            }
            curve.push(s.value);
        }
        curves.push(curve);
    }
    let origin = curves[0][0] == 0.0 && curves[1][0] == 0.0;
    // One arch: the first local maximum is the global one and every later
    // local extremum stays below 0.8 of it.
    let mut arch = true;
    let mut arch_notes = Vec::new();
    for (c, nu) in curves.iter().zip([1.5, 4.1]) {
        let extrema: Vec<usize> = (1..c.len() - 1)
            .filter(|&j| (c[j] - c[j - 1]) * (c[j + 1] - c[j]) <= 0.0)
            .collect();
        let first = extrema.first().copied();
        let peak = c.iter().cloned().fold(f64::MIN, f64::max);
        let ok = match first {
            Some(i) => c[i] == peak && extrema[1..].iter().all(|&j| c[j].abs() < 0.8 * c[i]),
            None => false,
        };
        if !ok {
            let later = extrema
                .iter()
                .skip(1)
                .map(|&j| format!("{:.3} at x={:.2}", c[j], grid[j]))
                .collect::<Vec<_>>()
                .join(", ");
            arch_notes.push(format!(
                "nu={nu}: first maximum {:.3} at x={:.2} but later extrema {later}",
                first.map_or(f64::NAN, |i| c[i]),
                first.map_or(f64::NAN, |i| grid[i])
            ));
        }
        arch &= ok;
    }
    // Near the origin F(x;ν) ≈ x·(√π/2)Γ(ν-1/2)/Γ(ν), which falls with ν.
    let small_x = (1..=20).all(|i| curves[1][i] < curves[0][i]);
    check(
        worst < 1e-7 && origin && arch && small_x,
        format!(
            "max|series - quadrature| = {worst:.2e}, F(0)=0: {origin}, single dominant arch: {arch}{}, nu=4.1 below nu=1.5 on (0,1]: {small_x}",
            if arch_notes.is_empty() { String::new() } else { format!(" ({})", arch_notes.join("; ")) }
        ),
    )
}

fn gaussian_solver() -> Outcome {
    let grid = gaussian_grid();
    let mut worst: f64 = 0.0;
    for rhs in gaussian_catalog() {
        let label = rhs.label().to_owned();
        let spec = EquationSpec::new(EquationFamily::GaussianDilation, rhs).map_err(|e| e.to_string())?;
        let u = spec.solve(1e-11).map_err(|e| e.to_string())?;
        let r = verify::residual(&spec, &u, &grid, 1e-9).map_err(|e| e.to_string())?;
        if !r.passes(verify::RESIDUAL_BOUND) {
            return Err(format!("f = {label}: {}", r.summary().replace('\n', "; ")));
        }
        worst = worst.max(r.max_abs);
    }
    check(true, format!("max residual {worst:.2e} over 4 rhs x 25 points"))
}

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

fn gamma_inverse_solver() -> Outcome {
    let f = Rhs::from_series(PowerSeries::exp_decay(40));
    let spec = EquationSpec::new(EquationFamily::LaplaceDilation { mu: 1.0 }, f.clone()).map_err(|e| e.to_string())?;
    let u = spec.solve(1e-12).map_err(|e| e.to_string())?;
    let b = u.series().expect("series solution").coeffs().to_vec();
    let mut worst_coeff: f64 = 0.0;
    for (n, &bn) in b.iter().enumerate() {
        let denom = factorial(n as u32).pow(2).to_f64().unwrap();
        let exact = if n % 2 == 0 { 1.0 / denom } else { -1.0 / denom };
        worst_coeff = worst_coeff.max(((bn - exact) / exact).abs());
    }
    let r = verify::residual(&spec, &u, &[0.5, 1.0, 3.0], 1e-9).map_err(|e| e.to_string())?;

    let spec2 = EquationSpec::new(EquationFamily::LaplaceDilation { mu: 2.0 }, f).map_err(|e| e.to_string())?;
    let u2 = spec2.solve(1e-12).map_err(|e| e.to_string())?;
    let b2 = u2.series().unwrap().coeffs();
    let mut worst_w: f64 = 0.0;
    for (n, &bn) in b2.iter().enumerate() {
        let denom = (factorial(n as u32) * factorial(2 * n as u32)).to_f64().unwrap();
        let exact = if n % 2 == 0 { 1.0 / denom } else { -1.0 / denom };
        worst_w = worst_w.max(((bn - exact) / exact).abs());
    }
    for x in [0.5, 1.0, 3.0] {
        let w = specfun::bessel_wright(0, 2.0, x, 1e-17).map_err(|e| e.to_string())?;
        worst_w = worst_w.max((u2.eval(x).map_err(|e| e.to_string())? - w).abs());
    }
    check(
        b.len() == 41 && worst_coeff < 1e-14 && r.passes(1e-7) && worst_w < 1e-12,
        format!(
            "J0 coefficients rel err {worst_coeff:.2e}, residual {:.2e} (failures {}), W0(x|2) err {worst_w:.2e}",
            r.max_abs, r.quad_failures
        ),
    )
}

fn gauss_pair(beta: f64) -> (RealFn, RealFn) {
    let c = 0.5 * (PI / (2.0 * beta)).sqrt();
    (
        Arc::new(move |x: f64| c * (-beta * x * x).exp()),
        Arc::new(move |x: f64| -2.0 * beta * x * c * (-beta * x * x).exp()),
    )
}

fn radial_solver() -> Outcome {
    let grid = verify::linear_grid(0.0, 3.0, 16).unwrap();
    let mut worst_res: f64 = 0.0;
    let mut worst_u: f64 = 0.0;
    for beta in [1.0, 2.0] {
        let (f, fp) = gauss_pair(beta);
        let (f1, fp1) = (f.clone(), fp.clone());
        let rhs = Rhs::new("gauss-pair", move |x| f1(x)).with_derivative(move |x| fp1(x));
        let spec = EquationSpec::new(EquationFamily::Radial, rhs).map_err(|e| e.to_string())?;
        let u = spec.solve(1e-11).map_err(|e| e.to_string())?;
        for &x in &grid {
            let got = u.eval(x).map_err(|e| e.to_string())?;
            worst_u = worst_u.max((got - (-beta * x * x).exp()).abs());
        }
        let r = verify::residual(&spec, &u, &grid, 1e-9).map_err(|e| e.to_string())?;
        if !r.passes(verify::RESIDUAL_BOUND) {
            return Err(format!("beta = {beta}: {}", r.summary().replace('\n', "; ")));
        }
        worst_res = worst_res.max(r.max_abs);
    }
    let (f, fp) = gauss_pair(1.0);
    let cmp = verify::eq21_discrepancy(f, fp, &[0.0, 0.5, 1.0, 2.0], 1e-11).map_err(|e| e.to_string())?;
    let literal_at_0 = cmp.literal.residuals[0].unwrap_or(f64::NAN);
    check(
        worst_u < 1e-6 && literal_at_0 >= 0.1 && cmp.weyl.passes(verify::RESIDUAL_BOUND),
        format!(
            "max residual {worst_res:.2e}, max |u - exp(-beta x^2)| {worst_u:.2e}; literal kernel residual at 0 = {literal_at_0:.4}, Weyl kernel max residual {:.2e}",
            cmp.weyl.max_abs
        ),
    )
}

fn generalized_shift() -> Outcome {
    let grid = gaussian_grid();
    let map = CoordinateMap::dilatation();
    let mut worst: f64 = 0.0;
    for rhs in gaussian_catalog() {
        let g = EquationSpec::new(EquationFamily::GeneralizedShift(map.clone()), rhs.clone())
            .and_then(|s| s.solve(1e-11))
            .map_err(|e| e.to_string())?;
        let d = EquationSpec::new(EquationFamily::GaussianDilation, rhs)
            .and_then(|s| s.solve(1e-11))
            .map_err(|e| e.to_string())?;
        for &x in &grid {
            let a = g.eval(x).map_err(|e| e.to_string())?;
            let b = d.eval(x).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).abs());
        }
    }
    check(worst < 1e-8, format!("max |generalized - gaussian| = {worst:.2e}"))
}

fn moebius_solver() -> Outcome {
    const TOL: f64 = 1e-9;
    let grid = verify::geometric_grid(0.1, 3.0, 25).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, coeffs) in [("x", vec![0.0, 1.0]), ("x^2", vec![0.0, 0.0, 1.0])] {
        for a in [0.5, 1.0] {
            let rhs = polynomial_rhs(&coeffs, label);
            let spec = EquationSpec::new(EquationFamily::Moebius { a }, rhs.clone()).map_err(|e| e.to_string())?;
            let u = spec.solve(TOL).map_err(|e| e.to_string())?;
            let k = u.truncation().ok_or("no truncation reported")?;
            let doubled =
                solvers::solve_moebius_truncated(rhs.f().clone(), rhs.f_prime().unwrap().clone(), a, 2 * k, 0.0)
                    .map_err(|e| e.to_string())?;
            let mut tail: f64 = 0.0;
            for &x in &grid {
                tail = tail
                    .max((u.eval(x).map_err(|e| e.to_string())? - doubled.eval(x).map_err(|e| e.to_string())?).abs());
            }
            let r = verify::residual(&spec, &u, &grid, 1e-8).map_err(|e| e.to_string())?;
            ok &= r.passes(verify::MOEBIUS_RESIDUAL_BOUND) && tail < TOL;
            lines.push(format!(
                "f={label} a={a}: K={k}, |u_K - u_2K| {tail:.1e}, residual {:.1e}",
                r.max_abs
            ));
        }
    }
    check(ok, lines.join("; "))
}

fn stirling_conjecture() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in 1..=10usize {
        let f = ConjectureInput::Series(PowerSeries::monomial(m));
        for nu in [0.25, 0.5, 0.75] {
            for x in [0.7, 1.3] {
                let r = verify::conjecture_check(nu, &f, x, m).map_err(|e| e.to_string())?;
                let want = (m as f64).powf(nu) * x.powi(m as i32);
                worst = worst.max((r.partial_sums[m] - want).abs());
            }
        }
    }
    let r = verify::conjecture_check(0.5, &ConjectureInput::exp_minus_one(), 0.5, 40).map_err(|e| e.to_string())?;
    let entire = r.final_error();
    check(
        worst < 1e-9 && entire < 1e-6,
        format!("monomial exactness max err {worst:.2e}; exp(x)-1 at K=40 err {entire:.2e}"),
    )
}

fn spectral_suite() -> Outcome {
    let mut worst_pow: f64 = 0.0;
    for nu in [0.25, 0.5, 1.5] {
        for n in 1..=8i32 {
            for x in [0.5, 1.0, 1.7] {
                let got = fracops::xd_negpow(nu, |t: f64| t.powi(n), x, 1e-12).map_err(|e| e.to_string())?;
                let want = (n as f64).powf(-nu) * x.powi(n);
                worst_pow = worst_pow.max(((got - want) / want).abs());
            }
        }
    }

    // (x d/dx)(x d/dx)^{-1/2} f against (x d/dx)^{-1/2}(x d/dx) f, f = x + x³.
    let f = |t: f64| t + t * t * t;
    let xf_prime = |t: f64| t + 3.0 * t * t * t;
    let g = |x: f64| fracops::xd_negpow(0.5, f, x, 1e-14);
    let mut worst_order: f64 = 0.0;
    for x in [0.5, 1.0, 1.5, 2.0] {
        let h = 1e-3 * x;
        let d = (-g(x + 2.0 * h).map_err(|e| e.to_string())? + 8.0 * g(x + h).map_err(|e| e.to_string())?
            - 8.0 * g(x - h).map_err(|e| e.to_string())?
            + g(x - 2.0 * h).map_err(|e| e.to_string())?)
            / (12.0 * h);
        let a = x * d;
        let b = fracops::xd_negpow(0.5, xf_prime, x, 1e-14).map_err(|e| e.to_string())?;
        worst_order = worst_order.max((a - b).abs());
    }

    let mi = MultiplierIntegral::inverse_quadratic_power(1.0).map_err(|e| e.to_string())?;
    let mut worst_ratio: f64 = 0.0;
    for mu in [1.0, 1.5, 2.0, 4.1, 7.0] {
        let closed = mi.o(mu).map_err(|e| e.to_string())?;
        let quad = mi.o_quadrature(mu, 1e-13).map_err(|e| e.to_string())?;
        worst_ratio = worst_ratio.max((closed - quad).abs());
    }
    check(
        worst_pow < 1e-8 && worst_order < 1e-7 && worst_ratio < 1e-10,
        format!(
            "negative powers rel err {worst_pow:.2e}; order invariance {worst_order:.2e}; Gamma-ratio identity {worst_ratio:.2e}"
        ),
    )
}

fn shift_integral() -> Outcome {
    let q = ShiftIntegral::negative_square();
    let profile = ExponentialProfile::new(vec![(1.0, 2.0)]).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for x in [0.0, 0.5, 1.0, 2.0] {
        let op = opeval::eval_i(&profile, &q, x).map_err(|e| e.to_string())?;
        let quad = opeval::eval_i_quadrature(&profile, &q, x, 1e-13).map_err(|e| e.to_string())?;
        worst = worst.max((op - quad).abs());
    }
    check(worst < 1e-8, format!("max |operational - quadrature| = {worst:.2e}"))
}

/// Name, check and optional runtime limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, Option<f64>);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("F(x;nu) series against quadrature on [0,10]", fig1, Some(30.0)),
        ("Gaussian-dilation residuals", gaussian_solver, Some(10.0)),
        ("inverse-Gamma solver, J0 and Bessel-Wright", gamma_inverse_solver, None),
        ("radial solver and literal-kernel discrepancy", radial_solver, None),
        (
            "generalized shift reduces to the dilatation solver",
            generalized_shift,
            None,
        ),
        ("Moebius shift-series solver", moebius_solver, None),
        ("fractional Stirling expansion", stirling_conjecture, None),
        (
            "spectral action of (x d/dx)^-nu and the Gamma-ratio identity",
            spectral_suite,
            None,
        ),
        ("shift integral I(x) against quadrature", shift_integral, None),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match limit {
            Some(l) => within(elapsed, *l, outcome),
            None => outcome,
        };
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} {status} [{name}] {detail} ({:.2} s)",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        total.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
