//! Named right-hand sides accepted by `--f`.

use std::f64::consts::PI;

use opcalc::series::DEFAULT_ORDER;
use opcalc::solvers::Rhs;
use opcalc::specfun::inverse_factorials;
use opcalc::PowerSeries;

pub const NAMES: &str = "zero, monomial:n, exp-decay, gauss, gauss-pair[:beta], poly:c0,c1,...";

/// Taylor series of `c·e^{-βx²}` to `order`.
fn gaussian_series(c: f64, beta: f64, order: usize, label: &str) -> PowerSeries {
    let inv = inverse_factorials(order / 2);
    let mut coeffs = vec![0.0; order + 1];
    for (k, f) in inv.iter().enumerate() {
        coeffs[2 * k] = c * (-beta).powi(k as i32) * f;
    }
    PowerSeries::truncated(coeffs, label).expect("finite coefficients")
}

/// Resolves a catalog name to `f`, `f'` and a series form.
pub fn lookup(name: &str) -> Result<Rhs, String> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let no_arg = |rhs: Rhs| match arg {
        None => Ok(rhs),
        Some(_) => Err(format!("'{head}' takes no argument")),
    };
    match head {
        "zero" => no_arg(Rhs::zero()),
        "monomial" => {
            let n: usize = arg
                .ok_or("monomial needs a degree, e.g. monomial:3")?
                .parse()
                .map_err(|_| format!("bad monomial degree in '{name}'"))?;
            if n > 170 {
                return Err(format!("monomial degree {n} is too large"));
            }
            let k = n as i32;
            Ok(Rhs::new(name, move |x: f64| x.powi(k))
                .with_derivative(move |x: f64| if k == 0 { 0.0 } else { k as f64 * x.powi(k - 1) })
                .with_series(PowerSeries::monomial(n)))
        }
        "exp-decay" => no_arg(
            Rhs::new(name, |x: f64| (-x).exp())
                .with_derivative(|x: f64| -(-x).exp())
                .with_series(PowerSeries::exp_decay(DEFAULT_ORDER)),
        ),
        "gauss" => no_arg(
            Rhs::new(name, |x: f64| (-x * x).exp())
                .with_derivative(|x: f64| -2.0 * x * (-x * x).exp())
                .with_series(gaussian_series(1.0, 1.0, DEFAULT_ORDER, "exp(-x^2)")),
        ),
        "gauss-pair" => {
            let beta: f64 = match arg {
                None => 1.0,
                Some(b) => b.parse().map_err(|_| format!("bad beta in '{name}'"))?,
            };
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(format!("gauss-pair needs beta > 0, got {beta}"));
            }
            let c = 0.5 * (PI / (2.0 * beta)).sqrt();
            Ok(Rhs::new(name, move |x: f64| c * (-beta * x * x).exp())
                .with_derivative(move |x: f64| -2.0 * beta * c * x * (-beta * x * x).exp())
                .with_series(gaussian_series(c, beta, DEFAULT_ORDER, name)))
        }
        "poly" => {
            let coeffs: Vec<f64> = arg
                .ok_or("poly needs coefficients, e.g. poly:0,1,2")?
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("bad coefficient '{c}' in '{name}'"))
                })
                .collect::<Result<_, _>>()?;
            let series = PowerSeries::polynomial(coeffs, name).map_err(|e| e.to_string())?;
            Ok(Rhs::from_series(series))
        }
        _ => Err(format!("unknown function '{name}'; expected one of: {NAMES}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_are_consistent() {
        for name in [
            "zero",
            "monomial:3",
            "exp-decay",
            "gauss",
            "gauss-pair",
            "gauss-pair:2",
            "poly:1,2,3",
        ] {
            let rhs = lookup(name).unwrap();
            let s = rhs.series().expect("series form");
            let d = rhs.f_prime().expect("derivative");
            for x in [0.0, 0.3, 1.1] {
                let f = rhs.eval(x);
                assert!((s.value_at(x).unwrap() - f).abs() < 1e-14, "{name} at {x}");
                let h = 1e-6;
                let fd = (rhs.eval(x + h) - rhs.eval(x - h)) / (2.0 * h);
                assert!((d(x) - fd).abs() < 1e-8, "{name}' at {x}");
            }
        }
    }

    #[test]
    fn rejects_bad_names() {
        for name in [
            "nope",
            "monomial",
            "monomial:x",
            "poly:",
            "poly:1,a",
            "gauss-pair:-1",
            "zero:1",
        ] {
            assert!(lookup(name).is_err(), "{name}");
        }
    }
}
