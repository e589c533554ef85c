use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use exprk_core::harness::{
    emit_csv, emit_raster, run_sweep, write_trajectory_csv, HarnessError, RasterFormat, SweepConfig,
};
use exprk_core::integrators::{integrate_on_grid, IntegrateError, Method, StepGrid};
use exprk_core::matfun::{phi_scalar, MatfunError, PhiStrategy};
use exprk_core::problems::{by_name, ProblemError};
use exprk_core::stability::{rasterize, real_axis_boundary};

#[derive(Parser)]
#[command(
    name = "exprk",
    version,
    about = "Exponential Runge-Kutta experiments for stiff ODEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error/step-size sweep written as CSV.
    Sweep(SweepArgs),
    /// Stability-region raster written as CSV or PGM.
    Stability(StabilityArgs),
    /// Single fixed-step run written as a trajectory CSV.
    Integrate(IntegrateArgs),
    /// Evaluate φ_k(z).
    Phi(PhiArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// toy, cm1d or duffing.
    #[arg(long)]
    problem: String,
    /// Parameter override such as `k=-50` or `tf=5`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// `land` lands on tf with a shortened last step; `rounded` takes
    /// round(span/h) full steps.
    #[arg(long, default_value = "land")]
    grid: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Comma-separated method tags: etd-euler, exprk2, rk2, rk4, rb2, rb2:<gamma>.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    steps: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    method: String,
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true)]
    window: String,
    /// nx,ny
    #[arg(long, default_value = "200,200")]
    res: String,
    /// pgm or csv.
    #[arg(long, default_value = "pgm")]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    method: String,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PhiArgs {
    #[arg(long)]
    k: usize,
    /// re or re,im
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    /// auto, recursion, taylor or contour.
    #[arg(long, default_value = "auto")]
    strategy: String,
}

#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Numerical(e) | Failure::Other(e) => e,
        }
    }
}

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn from_problem(e: ProblemError) -> Failure {
    match e {
        ProblemError::Oracle(_) => Failure::Other(e.into()),
        _ => Failure::Config(e.into()),
    }
}

fn from_harness(e: HarnessError) -> Failure {
    match e {
        HarnessError::Config(_) => config(e),
        HarnessError::Problem(p) => from_problem(p),
        HarnessError::Integrate(
            IntegrateError::InvalidProblem(_)
            | IntegrateError::InvalidStep(_)
            | IntegrateError::MissingSemilinearForm(_),
        ) => config(e),
        _ => Failure::Other(e.into()),
    }
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>, Failure> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| config(anyhow!("parameter `{kv}` is not NAME=VALUE")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| config(anyhow!("parameter `{kv}` has a non-numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn parse_list<const N: usize, T: std::str::FromStr>(
    raw: &str,
    what: &str,
) -> anyhow::Result<[T; N]> {
    let parts: Vec<T> = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| anyhow!("bad {what} entry `{s}`"))
        })
        .collect::<anyhow::Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| anyhow!("{what} needs {N} comma-separated values, got `{raw}`"))
}

fn parse_methods(tags: &[String]) -> Result<Vec<Method>, Failure> {
    tags.iter()
        .map(|t| t.parse::<Method>().map_err(config))
        .collect()
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let grid: StepGrid = args.problem.grid.parse().map_err(config)?;
    let cfg = SweepConfig::new(
        args.problem.problem.clone(),
        parse_methods(&args.methods)?,
        args.steps,
    )
    .map_err(from_harness)?
    .with_parameters(parse_params(&args.problem.params)?)
    .with_repetitions(args.repetitions)
    .with_seed(args.seed)
    .with_grid(grid);
    cfg.validate().map_err(from_harness)?;
    let records = run_sweep(&cfg).map_err(from_harness)?;
    println!(
        "{:<12} {:>12} {:>14} {:>12}",
        "method", "h", "rel_error", "time_s"
    );
    for r in &records {
        let err = if r.finite {
            format!("{:.4e}", r.rel_error)
        } else {
            "non-finite".into()
        };
        println!(
            "{:<12} {:>12.4e} {:>14} {:>12.3e}",
            r.method.tag(),
            r.h,
            err,
            r.wall_time
        );
    }
    emit_csv(&records, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(Failure::Other)
}

fn stability(args: StabilityArgs) -> Result<(), Failure> {
    let method: Method = args.method.parse().map_err(config)?;
    let window: [f64; 4] = parse_list(&args.window, "window").map_err(config)?;
    let [nx, ny]: [usize; 2] = parse_list(&args.res, "resolution").map_err(config)?;
    let format: RasterFormat = args.format.parse().map_err(config)?;
    let raster = rasterize(method, window, nx, ny).map_err(config)?;
    emit_raster(&raster, &args.out, format)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(Failure::Other)?;
    let share = raster.count_stable() as f64 / (nx * ny) as f64;
    println!("{method}: {:.1}% of cells stable", 100.0 * share);
    match real_axis_boundary(method) {
        Ok(x) => println!("real-axis boundary: {x:.8}"),
        Err(e) => println!("{e}"),
    }
    Ok(())
}

fn integrate(args: IntegrateArgs) -> Result<(), Failure> {
    let method: Method = args.method.parse().map_err(config)?;
    let grid: StepGrid = args.problem.grid.parse().map_err(config)?;
    let params = parse_params(&args.problem.params)?;
    let problem = by_name(&args.problem.problem, &params).map_err(from_problem)?;
    let run = integrate_on_grid(&problem.system, method, args.h, grid).map_err(|e| match e {
        IntegrateError::SingularStep { .. }
        | IntegrateError::Matfun(_)
        | IntegrateError::Domain(_) => Failure::Numerical(e.into()),
        _ => config(e),
    })?;
    let file = File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(Failure::Other)?;
    write_trajectory_csv(&run, BufWriter::new(file)).map_err(|e| Failure::Other(e.into()))?;
    if !run.finite {
        return Err(Failure::Numerical(anyhow!(
            "{method} with h = {} became non-finite at t = {}",
            args.h,
            run.final_time()
        )));
    }
    println!(
        "{method}: {} steps to t = {}, final state {:?}",
        run.steps(),
        run.final_time(),
        run.final_state()
    );
    Ok(())
}

fn phi(args: PhiArgs) -> Result<(), Failure> {
    let strategy: PhiStrategy = args.strategy.parse().map_err(config)?;
    let parts: Vec<&str> = args.z.split(',').collect();
    let z = match parts.as_slice() {
        [_] => {
            let [re]: [f64; 1] = parse_list(&args.z, "z").map_err(config)?;
            Complex64::new(re, 0.0)
        }
        [_, _] => {
            let [re, im]: [f64; 2] = parse_list(&args.z, "z").map_err(config)?;
            Complex64::new(re, im)
        }
        _ => return Err(config(anyhow!("z must be `re` or `re,im`"))),
    };
    let value = phi_scalar(args.k, z, strategy).map_err(|e| match e {
        MatfunError::UnsupportedOrder { .. } | MatfunError::Domain(_) => config(e),
        other => Failure::Numerical(other.into()),
    })?;
    if z.im == 0.0 {
        println!("{:.17e}", value.re);
    } else {
        println!("{:.17e} {:+.17e}i", value.re, value.im);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Stability(a) => stability(a),
        Command::Integrate(a) => integrate(a),
        Command::Phi(a) => phi(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code())
        }
    }
}
