//! `opcalc`: solve, evaluate and verify the operational integral equations
//! from the command line. Output is CSV with `#` comment headers, or plain
//! text summaries.
//!
//! Exit status: 0 success, 1 numeric failure, 2 usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod catalog;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use opcalc::opeval::{eval_f, eval_f_quadrature};
use opcalc::verify::{
    self, conjecture_check, format_value, geometric_grid, linear_grid, MOEBIUS_RESIDUAL_BOUND, RESIDUAL_BOUND,
};
use opcalc::{ConjectureInput, CoordinateMap, EquationFamily, EquationSpec, Error};

const DEFAULT_GRID: &str = "geom:0.1:5:25";
const DEFAULT_TOL: f64 = 1e-11;
const DEFAULT_QUAD_TOL: f64 = 1e-9;
const FIG1_TOL: f64 = 1e-14;
const FIG1_QUAD_TOL: f64 = 1e-11;
const FIG1_AGREEMENT: f64 = 1e-7;
const CONJECTURE_BOUND: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "opcalc", version, about = "Operational solutions of integral equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an equation and write `x,u` on a grid.
    Solve(SolveArgs),
    /// Tabulate F(x;nu) for one or more nu.
    Fig1(Fig1Args),
    /// Solve, substitute back and report the residual.
    Verify(VerifyArgs),
    /// Fractional Stirling expansion of (x d/dx)^nu f against the spectral value.
    Conjecture(ConjectureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Gaussian,
    Laplace,
    Radial,
    Genshift,
    Moebius,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapKind {
    /// F = ln x (reduces to the gaussian family).
    Ln,
    /// F = -x^2/2 (reduces to the radial family).
    Radial,
}

#[derive(Args)]
struct EquationArgs {
    family: Family,
    /// Right-hand side: zero, monomial:n, exp-decay, gauss, gauss-pair[:beta], poly:c0,c1,...
    #[arg(long = "f")]
    f: String,
    /// Order of the Laplace family.
    #[arg(long)]
    mu: Option<f64>,
    /// Shift parameter of the Moebius family.
    #[arg(long)]
    a: Option<f64>,
    /// Coordinate map of the genshift family.
    #[arg(long, value_enum, default_value = "ln")]
    map: MapKind,
    /// "start:stop:count" (linear, inclusive) or "geom:start:stop:count".
    #[arg(long, default_value = DEFAULT_GRID)]
    grid: String,
    /// Solver tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    eq: EquationArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    eq: EquationArgs,
    /// Tolerance for integrating the left-hand side.
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
    quad_tol: f64,
}

#[derive(Args)]
struct Fig1Args {
    /// Comma-separated values of nu, each >= 0.5.
    #[arg(long, value_delimiter = ',', default_value = "1.5,4.1")]
    nu: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    x_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    x_max: f64,
    #[arg(long, default_value_t = 201)]
    samples: usize,
    /// Series tolerance.
    #[arg(long, default_value_t = FIG1_TOL)]
    tol: f64,
    /// Cross-check every value against quadrature (agreement 1e-7).
    #[arg(long)]
    verify: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConjectureArgs {
    /// Fractional order in (0, 1).
    #[arg(long)]
    nu: f64,
    /// Catalog name with a series form, or exp-minus-one.
    #[arg(long = "f")]
    f: String,
    #[arg(long)]
    x: f64,
    /// Largest truncation order.
    #[arg(long = "K", default_value_t = 40)]
    k: usize,
}

enum Failure {
    Numeric(String),
    Usage(String),
}

impl Failure {
    /// Bad input values are usage errors; everything else is numeric.
    fn from_input(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Range(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Fig1(a) => cmd_fig1(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Conjecture(a) => cmd_conjecture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || {
        Failure::Usage(format!(
            "bad grid '{spec}'; expected start:stop:count or geom:start:stop:count"
        ))
    };
    let (geometric, rest) = match spec.strip_prefix("geom:") {
        Some(r) => (true, r),
        None => (false, spec),
    };
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    let grid = if geometric {
        geometric_grid(start, stop, count)
    } else {
        linear_grid(start, stop, count)
    };
    grid.map_err(Failure::from_input)
}

fn build_spec(eq: &EquationArgs) -> Result<EquationSpec, Failure> {
    let rhs = catalog::lookup(&eq.f).map_err(Failure::Usage)?;
    let need = |v: Option<f64>, name: &str, fam: &str| {
        v.ok_or_else(|| Failure::Usage(format!("the {fam} family needs --{name}")))
    };
    let family = match eq.family {
        Family::Gaussian => EquationFamily::GaussianDilation,
        Family::Laplace => EquationFamily::LaplaceDilation {
            mu: need(eq.mu, "mu", "laplace")?,
        },
        Family::Radial => EquationFamily::Radial,
        Family::Genshift => EquationFamily::GeneralizedShift(match eq.map {
            MapKind::Ln => CoordinateMap::dilatation(),
            MapKind::Radial => CoordinateMap::radial(),
        }),
        Family::Moebius => EquationFamily::Moebius {
            a: need(eq.a, "a", "moebius")?,
        },
    };
    EquationSpec::new(family, rhs).map_err(Failure::from_input)
}

fn header(out: &mut String, command: &str, params: &[(&str, String)]) {
    let _ = writeln!(out, "# opcalc {} {command}", env!("CARGO_PKG_VERSION"));
    for (k, v) in params {
        let _ = writeln!(out, "# {k}: {v}");
    }
}

fn equation_params(eq: &EquationArgs, spec: &EquationSpec) -> Vec<(&'static str, String)> {
    let mut p = vec![
        ("family", spec.family().to_string()),
        ("f", eq.f.clone()),
        ("grid", eq.grid.clone()),
        ("tol", format!("{:e}", eq.tol)),
    ];
    if let Some(mu) = eq.mu {
        p.push(("mu", mu.to_string()));
    }
    if let Some(a) = eq.a {
        p.push(("a", a.to_string()));
    }
    if matches!(eq.family, Family::Genshift) {
        p.push(("map", spec_map_name(eq.map).into()));
    }
    p
}

fn spec_map_name(m: MapKind) -> &'static str {
    match m {
        MapKind::Ln => "ln",
        MapKind::Radial => "radial",
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> CmdResult {
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Numeric(format!("writing stdout: {e}"))),
    }
}

fn csv_rows(out: &mut String, columns: &[String], rows: &[Vec<String>]) -> CmdResult {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Numeric(format!("writing CSV: {e}"));
    w.write_record(columns).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Numeric(format!("writing CSV: {e}")))?;
    out.push_str(&String::from_utf8(bytes).expect("CSV output is ASCII"));
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let eq = &args.eq;
    let spec = build_spec(eq)?;
    let grid = parse_grid(&eq.grid)?;
    let u = spec.solve(eq.tol)?;
    let values: Vec<Result<f64, Error>> = grid.par_iter().map(|&x| u.eval(x)).collect();

    let mut out = String::new();
    let mut params = equation_params(eq, &spec);
    params.push(("method", u.method().into()));
    if let Some(k) = u.truncation() {
        params.push(("truncation", k.to_string()));
    }
    params.push(("error_estimate", format!("{:e}", u.error_estimate())));
    header(&mut out, "solve", &params);
    let mut rows = Vec::with_capacity(grid.len());
    for (x, v) in grid.iter().zip(values) {
        let v = v.map_err(|e| Failure::Numeric(format!("u({x}): {e}")))?;
        rows.push(vec![format_value(*x), format_value(v)]);
    }
    csv_rows(&mut out, &["x".into(), "u".into()], &rows)?;
    emit(&eq.output, &out)
}

fn cmd_fig1(args: Fig1Args) -> CmdResult {
    if args.nu.is_empty() {
        return Err(Failure::Usage("--nu needs at least one value".into()));
    }
    if let Some(nu) = args.nu.iter().find(|&&nu| !(nu >= 0.5) || !nu.is_finite()) {
        return Err(Failure::Usage(format!("F(x;nu) requires nu >= 1/2, got {nu}")));
    }
    let grid = linear_grid(args.x_min, args.x_max, args.samples).map_err(Failure::from_input)?;

    let table: Vec<Result<Vec<f64>, Failure>> = grid
        .par_iter()
        .map(|&x| {
            args.nu
                .iter()
                .map(|&nu| {
                    let (v, _) = eval_f(x, nu, args.tol).map_err(|e| Failure::Numeric(format!("F({x};{nu}): {e}")))?;
                    if args.verify {
                        let q = eval_f_quadrature(x, nu, FIG1_QUAD_TOL)
                            .and_then(|q| q.require("F(x;nu)"))
                            .map_err(|e| Failure::Numeric(format!("quadrature F({x};{nu}): {e}")))?;
                        if (q - v).abs() > FIG1_AGREEMENT {
                            return Err(Failure::Numeric(format!(
                                "F({x};{nu}): series {v} and quadrature {q} differ by {:e}",
                                (q - v).abs()
                            )));
                        }
                    }
                    Ok(v)
                })
                .collect()
        })
        .collect();

    let mut out = String::new();
    let nus: Vec<String> = args.nu.iter().map(|n| n.to_string()).collect();
    header(
        &mut out,
        "fig1",
        &[
            ("nu", nus.join(",")),
            ("x_min", args.x_min.to_string()),
            ("x_max", args.x_max.to_string()),
            ("samples", args.samples.to_string()),
            ("tol", format!("{:e}", args.tol)),
            (
                "verify",
                if args.verify {
                    format!("quadrature at {FIG1_QUAD_TOL:e}, agreement {FIG1_AGREEMENT:e}")
                } else {
                    "off".into()
                },
            ),
        ],
    );
    let mut columns = vec!["x".to_string()];
    columns.extend(nus.iter().map(|n| format!("F(x;{n})")));
    let mut rows = Vec::with_capacity(grid.len());
    for (x, row) in grid.iter().zip(table) {
        let mut r = vec![format_value(*x)];
        r.extend(row?.into_iter().map(format_value));
        rows.push(r);
    }
    csv_rows(&mut out, &columns, &rows)?;
    emit(&args.output, &out)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let eq = &args.eq;
    let spec = build_spec(eq)?;
    let grid = parse_grid(&eq.grid)?;
    let u = spec.solve(eq.tol)?;
    let report = verify::residual(&spec, &u, &grid, args.quad_tol)?;
    let bound = match spec.family() {
        EquationFamily::Moebius { .. } => MOEBIUS_RESIDUAL_BOUND,
        _ => RESIDUAL_BOUND,
    };
    print!("{}", report.summary());
    println!("bound: {bound:e}");

    if let Some(path) = &eq.output {
        let mut out = String::new();
        let mut params = equation_params(eq, &spec);
        params.push(("quad_tol", format!("{:e}", args.quad_tol)));
        params.push(("bound", format!("{bound:e}")));
        header(&mut out, "verify", &params);
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        out.push_str(&String::from_utf8(buf).expect("CSV output is ASCII"));
        emit(&Some(path.clone()), &out)?;
    }

    if report.passes(bound) {
        println!("result: PASS");
        Ok(())
    } else {
        println!("result: FAIL");
        Err(Failure::Numeric(format!(
            "max residual {:e} with {} failed points exceeds bound {bound:e}",
            report.max_abs, report.quad_failures
        )))
    }
}

fn cmd_conjecture(args: ConjectureArgs) -> CmdResult {
    let input = if args.f == "exp-minus-one" {
        ConjectureInput::exp_minus_one()
    } else {
        let rhs = catalog::lookup(&args.f).map_err(Failure::Usage)?;
        let series = rhs
            .series()
            .ok_or_else(|| Failure::Usage(format!("'{}' has no series form", args.f)))?;
        ConjectureInput::Series(series.clone())
    };
    let report = conjecture_check(args.nu, &input, args.x, args.k).map_err(Failure::from_input)?;
    if report.constant_term_excluded {
        eprintln!("warning: constant term of '{}' excluded", args.f);
    }
    print!("{}", report.summary());
    println!("bound: {CONJECTURE_BOUND:e}");
    let err = report.final_error();
    if err < CONJECTURE_BOUND {
        println!("result: PASS");
        Ok(())
    } else {
        println!("result: FAIL");
        Err(Failure::Numeric(format!(
            "error {err:e} at K = {} exceeds bound {CONJECTURE_BOUND:e}",
            args.k
        )))
    }
}
