//! `specquad`: spectrum and spectral-sum estimates from the command line.

mod experiments;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand, ValueEnum};

use specquad::config::{parse_measure, ProblemSpec};
use specquad::estimator::{
    bound_cesm_tail, bound_required_degree_wasserstein, bound_trace_tail_capped, estimate_spectrum,
    BoundMethod, EstimateConfig, EstimateReport, FunctionSpec, IntervalPolicy, Method, MomentPath,
};
use specquad::measures::{write_csv, DistributionFunction, SeriesDistribution};
use specquad::operators::{load_matrix_market, LinearOperator};
use specquad::report::write_json;
use specquad::{Approximation, ReferenceMeasure};

#[derive(Parser, Debug)]
#[command(
    name = "specquad",
    version,
    about = "Randomized spectral quadrature: spectrum and trace estimates"
)]
struct Cli {
    /// Worker threads for sampling (default: all cores).
    #[arg(long, global = true, env = "SPECQUAD_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the spectral distribution and write it under --out.
    Dos(DosArgs),
    /// Estimate tr f(A) for one or more functions.
    Trace(TraceArgs),
    /// Evaluate the a priori degree and tail-probability bounds.
    Bounds(BoundsArgs),
    /// Run a desk-scale preset and write one CSV per curve.
    Experiment(experiments::ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Slq,
    Iq,
    #[value(alias = "kpm")]
    Aq,
    Aaq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DampingArg {
    None,
    Jackson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PathArg {
    Chebyshev,
    Lanczos,
    Direct,
}

fn measure_arg(s: &str) -> std::result::Result<ReferenceMeasure, String> {
    parse_measure(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["problem", "matrix"])))]
struct RunArgs {
    /// Built-in problem, e.g. `kneser(8,3)` or `model(300,1000,0.85)`.
    #[arg(long)]
    problem: Option<ProblemSpec>,
    /// Symmetric matrix in Matrix Market coordinate format.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Slq)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = DampingArg::None)]
    damping: DampingArg,
    /// Matrix-vector products per sample (default: ceil(s/2) if --s is given, else 20).
    #[arg(long)]
    k: Option<usize>,
    /// Moment degree (default 2k).
    #[arg(long)]
    s: Option<usize>,
    /// Number of random vectors.
    #[arg(long = "nv", default_value_t = 10)]
    n_v: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference interval; estimated by a short Lanczos probe when omitted.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    interval: Option<Vec<f64>>,
    /// Reference measure, e.g. `chebU(0,4)` or `mix(0.8*chebU(0,2) + 0.2*atom(1.5))`.
    #[arg(long, value_parser = measure_arg)]
    measure: Option<ReferenceMeasure>,
    /// How modified moments are extracted.
    #[arg(long, value_enum, default_value_t = PathArg::Chebyshev)]
    moments: PathArg,
    /// Fully reorthogonalize Lanczos.
    #[arg(long)]
    reorth: bool,
    /// Gauss nodes for aaq and series integrals (default 8(s+1)).
    #[arg(long)]
    aaq_nodes: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Record wall time in the JSON report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct DosArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Points at which series output is sampled.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Spectral sums to include in the report.
    #[arg(long = "f")]
    functions: Vec<FunctionSpec>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Function(s) f in tr f(A), e.g. `log`, `exp_neg(2)`, `poly(1,0,1)`.
    #[arg(long = "f", required = true)]
    functions: Vec<FunctionSpec>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Matrix dimension.
    #[arg(long)]
    n: usize,
    /// Number of random vectors.
    #[arg(long = "nv")]
    n_v: usize,
    /// Target accuracy.
    #[arg(long)]
    eps: f64,
    /// Smallest and largest eigenvalue (or bounds on them).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    range: Vec<f64>,
    /// Support of the Chebyshev reference measure for the damped case (default: --range).
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    interval: Option<Vec<f64>>,
    /// Total variation of the iq/aq output.
    #[arg(long, default_value_t = 1.0)]
    dtv: f64,
    /// Range of f over the spectrum, for the trace tail.
    #[arg(long = "f-range", num_args = 2, value_names = ["MIN", "MAX"], allow_negative_numbers = true, default_values_t = [0.0, 1.0])]
    f_range: Vec<f64>,
}

/// Flag combinations that parse but make no sense are usage errors (exit 2).
fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::ArgumentConflict, msg)
        .exit()
}

impl RunArgs {
    fn config(&self, functions: Vec<FunctionSpec>) -> EstimateConfig {
        let k = self
            .k
            .unwrap_or_else(|| self.s.map_or(20, |s| s.div_ceil(2).max(1)));
        let interval = match (&self.interval, &self.measure) {
            (Some(ab), _) => IntervalPolicy::Fixed(ab[0], ab[1]),
            (None, Some(m)) => {
                let (a, b) = m.support();
                IntervalPolicy::Fixed(a, b)
            }
            (None, None) => IntervalPolicy::default(),
        };
        let cfg = EstimateConfig {
            method: match self.method {
                MethodArg::Slq => Method::Slq,
                MethodArg::Iq => Method::Iq,
                MethodArg::Aq => Method::Aq,
                MethodArg::Aaq => Method::Aaq,
            },
            damping: self.damping == DampingArg::Jackson,
            k,
            s: self.s,
            n_v: self.n_v,
            measure: self.measure.clone(),
            interval,
            seed: self.seed,
            reorth: self.reorth,
            moment_path: match self.moments {
                PathArg::Chebyshev => MomentPath::Chebyshev,
                PathArg::Lanczos => MomentPath::Lanczos,
                PathArg::Direct => MomentPath::Direct,
            },
            aaq_nodes: self.aaq_nodes,
            functions,
        };
        if let Err(e) = cfg.validate() {
            usage_error(e);
        }
        if self.measure.is_some() && cfg.method == Method::Slq {
            usage_error("--measure has no effect with --method slq");
        }
        cfg
    }

    fn operator(&self) -> Result<Box<dyn LinearOperator>> {
        match (&self.problem, &self.matrix) {
            (Some(p), _) => Ok(p.build(self.seed)?),
            (None, Some(path)) => Ok(Box::new(
                load_matrix_market(path).with_context(|| format!("reading {}", path.display()))?,
            )),
            (None, None) => unreachable!("clap requires one input"),
        }
    }

    fn run(&self, functions: Vec<FunctionSpec>) -> Result<EstimateReport> {
        let cfg = self.config(functions);
        let a = self.operator()?;
        Ok(estimate_spectrum(&a, &cfg)?)
    }
}

pub(crate) fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub(crate) fn save_csv(
    dir: &Path,
    name: &str,
    header: (&str, &str),
    rows: Vec<(f64, f64)>,
) -> Result<()> {
    let mut w = create(dir, name)?;
    write_csv(&mut w, header, rows)?;
    w.flush()?;
    Ok(())
}

/// Cell midpoints of `[lo, hi]`, which avoids the endpoint singularities of `μ^T`.
pub(crate) fn grid_points(lo: f64, hi: f64, grid: usize) -> impl Iterator<Item = f64> {
    (0..grid).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / grid as f64)
}

/// Density and cdf of a series on `grid` points across its support.
pub(crate) fn sample_series(
    s: &SeriesDistribution,
    grid: usize,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let (lo, hi) = s.measure().support();
    let mut density = Vec::with_capacity(grid);
    let mut cdf = Vec::with_capacity(grid);
    for x in grid_points(lo, hi, grid) {
        density.push((x, s.density(x)?));
        cdf.push((x, s.cdf(x)));
    }
    Ok((density, cdf))
}

fn write_report(dir: &Path, report: &EstimateReport, timing: bool) -> Result<()> {
    let mut w = create(dir, "report.json")?;
    write_json(&mut w, report, timing)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_dos(args: &DosArgs) -> Result<()> {
    if args.grid == 0 {
        usage_error("--grid must be at least 1");
    }
    let report = args.run.run(args.functions.clone())?;
    let out = &args.run.out;
    match &report.average {
        Approximation::Discrete(d) => {
            let rows = d
                .nodes()
                .iter()
                .copied()
                .zip(d.weights().iter().copied())
                .collect();
            save_csv(out, "nodes.csv", ("theta", "omega"), rows)?;
            println!("{} atoms -> {}", d.len(), out.join("nodes.csv").display());
        }
        Approximation::Series(s) => {
            let (density, cdf) = sample_series(s, args.grid)?;
            save_csv(out, "density.csv", ("x", "value"), density)?;
            save_csv(out, "cdf.csv", ("x", "value"), cdf)?;
            println!(
                "degree {} series on {} -> density.csv, cdf.csv in {}",
                s.degree(),
                s.measure(),
                out.display()
            );
        }
    }
    write_report(out, &report, args.run.timing)?;
    Ok(())
}

fn cmd_trace(args: &TraceArgs) -> Result<()> {
    let report = args.run.run(args.functions.clone())?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "function,sample,value")?;
    for rec in &report.sums {
        writeln!(w, "{},all,{:.16e}", rec.function, rec.trace)?;
        for (l, v) in rec.samples.iter().enumerate() {
            writeln!(w, "{},{l},{v:.16e}", rec.function)?;
        }
    }
    write_report(&args.run.out, &report, args.run.timing)?;
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let range = (args.range[0], args.range[1]);
    let interval = args.interval.as_ref().map_or(range, |v| (v[0], v[1]));
    if !(range.1 >= range.0) || !(interval.1 > interval.0) {
        usage_error("--range and --interval need LO <= HI");
    }
    if !(args.eps > 0.0) || args.n == 0 || args.n_v == 0 {
        usage_error("--eps must be positive and --n, --nv at least 1");
    }
    let mut rows: Vec<(String, String)> = vec![
        ("n".into(), args.n.to_string()),
        ("n_v".into(), args.n_v.to_string()),
        ("eps".into(), args.eps.to_string()),
        ("lambda_min".into(), range.0.to_string()),
        ("lambda_max".into(), range.1.to_string()),
        ("interval_a".into(), interval.0.to_string()),
        ("interval_b".into(), interval.1.to_string()),
        ("d_tv".into(), args.dtv.to_string()),
        ("f_min".into(), args.f_range[0].to_string()),
        ("f_max".into(), args.f_range[1].to_string()),
    ];
    for (name, method) in [
        ("gauss", BoundMethod::Gauss),
        ("interpolation", BoundMethod::Interpolation),
        ("approximation", BoundMethod::Approximation),
        ("damped", BoundMethod::Damped),
    ] {
        let s = bound_required_degree_wasserstein(method, args.eps, interval, range, args.dtv)?;
        rows.push((format!("required_s_{name}"), s.to_string()));
    }
    let pointwise = bound_cesm_tail(args.n, args.n_v, args.eps, true);
    let uniform = bound_cesm_tail(args.n, args.n_v, args.eps, false);
    let trace =
        bound_trace_tail_capped(args.n, args.n_v, args.eps, args.f_range[0], args.f_range[1]);
    rows.push(("cesm_tail_pointwise".into(), format!("{pointwise:.16e}")));
    rows.push(("cesm_tail_uniform".into(), format!("{uniform:.16e}")));
    rows.push(("trace_tail".into(), format!("{trace:.16e}")));

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "quantity,value")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Dos(a) => cmd_dos(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Experiment(a) => experiments::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
