//! Command-line frontend. Every subcommand writes JSON or CSV to stdout or to
//! `--out`; JSON output echoes the parsed configuration.
//!
//! Exit codes: 0 on success, 2 for usage and validation errors, 3 for
//! accuracy, configuration and I/O failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::compact::{safeguarded_rule, worstcase_bound, BoundVariant, Interval};
use crate::density::{gaussian_density, Density, Space};
use crate::error::{Error, Result};
use crate::harness::{
    convergence_study, dyadic_grid, empirical_complexity, summarize, write_csv, Criterion, Evaluator, ProblemSpec,
};
use crate::line::{LineProblem, DEFAULT_TAIL_TOL};
use crate::oracle::{gaussian_pair, poisson_check, testfn, FnParams, TestFunction};
use crate::partition::bump_jet;

const EXIT_OK: i32 = 0;
const EXIT_VALIDATION: i32 = 2;
const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "oscint", version, about = "Quadrature for oscillatory integrals with certified error bounds")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Composite rule on the real line, compared with the oracle (JSON).
    Integrate(IntegrateArgs),
    /// Safeguarded equispaced rule on an interval (JSON).
    Compact(CompactArgs),
    /// Convergence study over a budget grid (CSV, or JSON summary).
    Convergence(ConvergenceArgs),
    /// Cell plan of the composite rule (CSV).
    Cells(CellsArgs),
    /// Samples of the partition bump and its derivatives (CSV).
    Bump(BumpArgs),
    /// Poisson summation residual for a Gaussian (JSON).
    Poisson(PoissonArgs),
    /// Empirical information complexity (JSON).
    Complexity(ComplexityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DensityKind {
    Gaussian,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DensityArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    density: DensityKind,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    tail_tol: f64,
}

impl DensityArgs {
    fn build(&self) -> Result<Arc<dyn Density>> {
        match self.density {
            DensityKind::Gaussian => Ok(Arc::new(gaussian_density(self.sigma)?)),
        }
    }

    fn problem(&self, k: f64, s: usize, space: Space) -> Result<LineProblem> {
        Ok(LineProblem::new(self.build()?, k, s, space)?.with_tail_tol(self.tail_tol))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct ClassArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    k: f64,
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long, default_value = "hs", value_parser = parse_space)]
    space: Space,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FunctionArgs {
    /// One of poly_bump_h, poly_bump_c, scaled_bump, gauss_sine, constant, runge.
    #[arg(long, default_value = "constant")]
    function: String,
    /// Frequency of gauss_sine.
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    freq: f64,
    /// Support of the compactly supported test functions, as `a:b`.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    support: Option<Interval>,
}

impl FunctionArgs {
    fn build(&self, s: usize, fallback: Interval) -> Result<TestFunction> {
        testfn(&self.function, FnParams { s, omega: self.support.unwrap_or(fallback), freq: self.freq })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct IntervalArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    b: f64,
}

#[derive(Debug, Args, Serialize)]
struct IntegrateArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long)]
    n: usize,
}

#[derive(Debug, Args, Serialize)]
struct CompactArgs {
    #[command(flatten)]
    interval: IntervalArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long, default_value = "poly_bump_h")]
    function: String,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    freq: f64,
    #[arg(long)]
    n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
struct ConvergenceArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// Run on the interval `a:b` instead of the real line.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Option<Interval>,
    /// Comma-separated, strictly increasing budgets.
    #[arg(long, value_delimiter = ',', conflicts_with = "n_max")]
    n_grid: Option<Vec<usize>>,
    /// Dyadic grid `0, 1, 2, 4, ..., n_max`.
    #[arg(long, default_value_t = 4096)]
    n_max: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args, Serialize)]
struct CellsArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long, default_value = "hs", value_parser = parse_space)]
    space: Space,
    #[arg(long)]
    n: usize,
}

#[derive(Debug, Args, Serialize)]
struct BumpArgs {
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    to: f64,
    #[arg(long, default_value_t = 21)]
    samples: usize,
    /// Highest derivative to emit.
    #[arg(long, default_value_t = 3)]
    order: usize,
}

#[derive(Debug, Args, Serialize)]
struct PoissonArgs {
    /// Width `a` of `exp(-pi x^2 / a^2)`.
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Lattice spacing.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    k: f64,
    #[arg(long, default_value_t = 20)]
    trunc: usize,
}

#[derive(Debug, Args, Serialize)]
struct ComplexityArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Option<Interval>,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "abs", value_parser = parse_criterion)]
    criterion: Criterion,
}

fn parse_space(s: &str) -> std::result::Result<Space, String> {
    s.parse::<Space>().map_err(|e| e.to_string())
}

fn parse_criterion(s: &str) -> std::result::Result<Criterion, String> {
    s.parse::<Criterion>().map_err(|e| e.to_string())
}

fn parse_interval(s: &str) -> std::result::Result<Interval, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `a:b`, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Interval::new(a, b).map_err(|e| e.to_string())
}

fn complex_json(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

/// Error raised while running a subcommand.
#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn line_spec(density: &DensityArgs, class: &ClassArgs, function: &FunctionArgs) -> Result<ProblemSpec> {
    let problem = density.problem(class.k, class.s, class.space)?;
    let function = function.build(class.s, Interval { a: -1.0, b: 1.0 })?;
    Ok(ProblemSpec::Line { problem, function })
}

fn integrate(args: &IntegrateArgs) -> std::result::Result<String, Failure> {
    let spec = line_spec(&args.density, &args.class, &args.function)?;
    let member = spec.check_membership().is_ok();
    let eval = Evaluator::new_unchecked(&spec, args.n)?;
    let (value, error, bound, evals) = eval.at(args.n)?;
    let out = json!({
        "config": args,
        "function": spec.function().label,
        "value": complex_json(value),
        "oracle": complex_json(eval.reference()),
        "abs_error": error,
        "bound": bound * eval.norm(),
        "bound_per_unit_norm": bound,
        "norm": eval.norm(),
        "in_class": member,
        "evaluations": evals,
    });
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}

fn compact(args: &CompactArgs) -> std::result::Result<String, Failure> {
    let omega = Interval::new(args.interval.a, args.interval.b)?;
    let ClassArgs { k, s, space } = args.class;
    let function = testfn(&args.function, FnParams { s, omega, freq: args.freq })?;
    let spec = ProblemSpec::Compact { omega, k, s, space, function };
    let member = spec.check_membership().is_ok();
    let eval = Evaluator::new_unchecked(&spec, args.n)?;
    let (value, error, _, evals) = eval.at(args.n)?;
    let bound = worstcase_bound(omega, args.n, s, k, space, BoundVariant::Safeguarded)?;
    let out = json!({
        "config": args,
        "function": spec.function().label,
        "value": complex_json(value),
        "oracle": complex_json(eval.reference()),
        "abs_error": error,
        "bound": bound * eval.norm(),
        "bound_per_unit_norm": bound,
        "norm": eval.norm(),
        "in_class": member,
        "zero_rule": safeguarded_rule(omega, args.n, k).is_zero_rule,
        "evaluations": evals,
    });
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}

fn spec_for(
    density: &DensityArgs,
    class: &ClassArgs,
    function: &FunctionArgs,
    interval: Option<Interval>,
) -> Result<ProblemSpec> {
    match interval {
        Some(omega) => {
            let ClassArgs { k, s, space } = *class;
            Ok(ProblemSpec::Compact { omega, k, s, space, function: function.build(s, omega)? })
        }
        None => line_spec(density, class, function),
    }
}

fn convergence(args: &ConvergenceArgs) -> std::result::Result<String, Failure> {
    let spec = spec_for(&args.density, &args.class, &args.function, args.interval)?;
    let grid = args.n_grid.clone().unwrap_or_else(|| dyadic_grid(args.n_max));
    let report = convergence_study(&spec, &grid)?;
    match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(std::slice::from_ref(&report), &mut buf)?;
            Ok(String::from_utf8(buf).expect("csv is utf-8"))
        }
        Format::Json => {
            let out = json!({ "config": args, "summary": summarize(std::slice::from_ref(&report)) });
            Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
        }
    }
}

fn cells(args: &CellsArgs) -> std::result::Result<String, Failure> {
    let problem = args.density.problem(0.0, args.s, args.space)?;
    let plan = problem.plan(args.n)?;
    let mut out = String::from("m,cell_norm,p_m,n_m\n");
    for c in &plan.cells {
        writeln!(out, "{},{:?},{:?},{}", c.m, c.cell_norm, c.p, c.n_m).expect("write to string");
    }
    Ok(out)
}

fn bump_samples(args: &BumpArgs) -> std::result::Result<String, Failure> {
    if !(args.from.is_finite() && args.to.is_finite()) || args.samples == 0 {
        return Err(Error::Domain("need finite --from/--to and --samples >= 1".into()).into());
    }
    let mut out = String::from("x,g");
    for l in 1..=args.order {
        write!(out, ",d{l}").expect("write to string");
    }
    out.push('\n');
    let step = if args.samples > 1 { (args.to - args.from) / (args.samples - 1) as f64 } else { 0.0 };
    for i in 0..args.samples {
        let x = if i + 1 == args.samples && args.samples > 1 { args.to } else { args.from + i as f64 * step };
        let d = bump_jet(x, args.order);
        write!(out, "{x:?}").expect("write to string");
        for v in d {
            write!(out, ",{v:?}").expect("write to string");
        }
        out.push('\n');
    }
    Ok(out)
}

fn poisson(args: &PoissonArgs) -> std::result::Result<String, Failure> {
    if !(args.width > 0.0) {
        return Err(Error::Domain(format!("width must be positive, got {}", args.width)).into());
    }
    let (f, ff) = gaussian_pair(args.width);
    let check = poisson_check(f, ff, args.c, args.k, args.trunc)?;
    let out = json!({
        "config": args,
        "lattice_sum": complex_json(check.lattice_sum),
        "transform_sum": complex_json(check.transform_sum),
        "residual": check.residual,
    });
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}

fn complexity(args: &ComplexityArgs) -> std::result::Result<String, Failure> {
    let spec = spec_for(&args.density, &args.class, &args.function, args.interval)?;
    let result = empirical_complexity(&spec, args.eps, args.criterion)?;
    let out = json!({
        "config": args,
        "function": spec.function().label,
        "proxy": "error of a single test function stands in for the worst case",
        "result": result,
    });
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}

fn configure_threads() {
    if let Some(n) = std::env::var("OSCINT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool may already exist when run in-process; keep it then
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Integrate(a) => integrate(a),
        Command::Compact(a) => compact(a),
        Command::Convergence(a) => convergence(a),
        Command::Cells(a) => cells(a),
        Command::Bump(a) => bump_samples(a),
        Command::Poisson(a) => poisson(a),
        Command::Complexity(a) => complexity(a),
    };
    let text = match result {
        Ok(text) => text,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            return if e.is_validation() { EXIT_VALIDATION } else { EXIT_FAILURE };
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_parsing() {
        assert_eq!(parse_interval("-1:2").unwrap(), Interval { a: -1.0, b: 2.0 });
        assert!(parse_interval("2:1").is_err());
        assert!(parse_interval("12").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["oscint", "frobnicate"]), EXIT_VALIDATION);
        assert_eq!(run(["oscint", "bump", "--bogus"]), EXIT_VALIDATION);
        assert_eq!(run(["oscint", "cells", "--s", "2", "--n", "10", "--space", "lp"]), EXIT_VALIDATION);
    }

    #[test]
    fn validation_errors_exit_two() {
        assert_eq!(run(["oscint", "cells", "--sigma", "-1", "--n", "10"]), EXIT_VALIDATION);
        assert_eq!(run(["oscint", "compact", "--a", "1", "--b", "0", "--n", "4"]), EXIT_VALIDATION);
    }

    #[test]
    fn bump_csv_rows() {
        let text = bump_samples(&BumpArgs { from: -1.5, to: 1.5, samples: 7, order: 2 }).ok().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,g,d1,d2");
        assert_eq!(lines.len(), 8);
        assert!(lines.contains(&"0.0,1.0,0.0,0.0"));
        assert!(lines.contains(&"1.5,0.0,0.0,0.0"));
    }
}
