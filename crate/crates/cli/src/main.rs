use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dms_core::harness::{run_sweep, write_csv, Experiment, SolutionFile};
use dms_core::master::{write_iteration_log, CgConfig};
use dms_core::sim::{demand_path, trace, write_trace_csv};
use dms_core::{generate_instance, AssortmentType, Error, Instance, Overrides, Policy, SearchConfig, SimConfig};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "DMS_THREADS";

#[derive(Parser)]
#[command(name = "dms", version, about = "Carbon-constrained dual-mode inventory experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Solve one emission target by column generation.
    Solve(SolveArgs),
    /// Sweep targets for the dual-mode, static and blanket approaches.
    Sweep(SweepArgs),
    /// Cumulative emission-reduction shares of a solution.
    Lorenz(LorenzArgs),
    /// Per-product optimum under a carbon price.
    Price(PriceArgs),
    /// Per-period trace of one policy.
    Trace(TraceArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Assortment type (1, 2 or 3).
    #[arg(long = "type", default_value_t = 1)]
    kind: u8,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    products: Option<usize>,
    #[arg(long)]
    cv_mean_demand: Option<f64>,
    #[arg(long)]
    demand_cv_shift: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    penalty_ratio: Option<f64>,
    #[arg(long)]
    premium_sd: Option<f64>,
    #[arg(long)]
    lead_slow: Option<u32>,
    #[arg(long)]
    emission_gap_scale: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Replications per column.
    #[arg(long, default_value_t = 10)]
    reps: u32,
    /// Recorded periods per replication.
    #[arg(long, default_value_t = 9500)]
    horizon: u32,
    /// Discarded periods per replication.
    #[arg(long, default_value_t = 5000)]
    warmup: u32,
    /// Simulation seed; defaults to the instance seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Upper bound on the Δ grid.
    #[arg(long)]
    max_delta: Option<i64>,
    #[arg(long, default_value_t = 50)]
    max_iterations: usize,
}

impl SimArgs {
    fn load(&self) -> anyhow::Result<(Instance, SimConfig, SearchConfig, CgConfig)> {
        let inst = Instance::read(&self.instance).with_context(|| format!("reading {}", self.instance.display()))?;
        let sim = SimConfig { replications: self.reps, horizon: self.horizon, warmup: self.warmup, seed: self.seed.unwrap_or(inst.seed) };
        let cg = CgConfig { max_iterations: self.max_iterations, ..CgConfig::default() };
        Ok((inst, sim, SearchConfig { max_delta: self.max_delta }, cg))
    }

    fn experiment(&self) -> anyhow::Result<Experiment> {
        let (inst, sim, search, cg) = self.load()?;
        Ok(Experiment::prepare(inst, &sim, &search, cg)?)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Fraction of reducible emissions to cut.
    #[arg(long, default_value_t = 0.5)]
    target: f64,
    /// Solution JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration log CSV path.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, value_delimiter = ',', default_values_t = dms_core::harness::DEFAULT_TARGETS)]
    targets: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LorenzArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Solution JSON written by `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Carbon price per kg CO₂.
    #[arg(long)]
    ce: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 0)]
    product: usize,
    #[arg(long)]
    s_fast: Option<i64>,
    #[arg(long, default_value_t = 0)]
    delta: i64,
    /// Slow-only base stock; overrides the dual-index levels.
    #[arg(long)]
    s_slow: Option<i64>,
    #[arg(long, default_value_t = 100)]
    periods: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    output(path)?.write_all(text.as_bytes())?;
    Ok(())
}

/// Outcome that still produced output but should exit nonzero.
#[derive(Debug)]
struct NotConverged;

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("column generation hit its iteration cap before converging")
    }
}

impl std::error::Error for NotConverged {}

fn gen(a: &GenArgs) -> anyhow::Result<()> {
    let ov = Overrides {
        products: a.products,
        cv_mean_demand: a.cv_mean_demand,
        demand_cv_shift: a.demand_cv_shift,
        rho_demand_holding: a.rho,
        penalty_ratio: a.penalty_ratio,
        premium_sd: a.premium_sd,
        lead_slow: a.lead_slow,
        emission_gap_scale: a.emission_gap_scale,
    };
    let inst = generate_instance(AssortmentType::from_index(a.kind)?, a.seed, &ov)?;
    write_text(&a.out, &(inst.to_json()? + "\n"))
}

fn solve(a: &SolveArgs) -> anyhow::Result<()> {
    let exp = a.sim.experiment()?;
    let run = exp.solve_dms(a.target)?;
    if let Some(p) = &a.log {
        write_iteration_log(&run.state.log, File::create(p)?)?;
    }
    let file = SolutionFile::new(&exp, &run);
    write_text(&a.out, &file.to_json()?)?;
    eprintln!("LB {:.6} UB {:.6} gap {:.4}% emission {:.6} / {:.6}", file.lb, file.ub, file.gap_pct, file.emission, file.target.e_max);
    if !file.converged {
        return Err(NotConverged.into());
    }
    Ok(())
}

fn sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let exp = a.sim.experiment()?;
    let (results, rows) = run_sweep(&exp, &a.targets)?;
    write_csv(&rows, output(&a.out)?)?;
    if results.iter().any(|r| !r.dms.solution.converged) {
        return Err(NotConverged.into());
    }
    Ok(())
}

fn lorenz(a: &LorenzArgs) -> anyhow::Result<()> {
    let inst = Instance::read(&a.instance)?;
    let sol = SolutionFile::from_json(&std::fs::read_to_string(&a.solution)?)?;
    let rep = sol.lorenz(&inst)?;
    let points: Vec<_> = rep.realized.iter().chain(&rep.heuristic).collect();
    write_csv(&points, output(&a.out)?)?;
    eprintln!(
        "top-20% share: realized {:.4}, heuristic {:.4}{}",
        rep.top20_realized,
        rep.top20_heuristic,
        if rep.zero_total { " (zero total reduction)" } else { "" }
    );
    Ok(())
}

fn price(a: &PriceArgs) -> anyhow::Result<()> {
    let exp = a.sim.experiment()?;
    let rep = exp.carbon_price(a.ce)?;
    write_text(&a.out, &(serde_json::to_string_pretty(&rep)? + "\n"))
}

fn trace_cmd(a: &TraceArgs) -> anyhow::Result<()> {
    let (inst, sim, _, _) = a.sim.load()?;
    let product = inst
        .products
        .get(a.product)
        .ok_or_else(|| Error::Parameter { field: "product".into(), reason: format!("no product {}", a.product) })?;
    let policy = match (a.s_slow, a.s_fast) {
        (Some(s_slow), _) => Policy::SlowOnly { s_slow },
        (None, Some(s_fast)) => Policy::DualIndex { s_fast, delta: a.delta },
        (None, None) => {
            return Err(Error::Parameter { field: "s_fast".into(), reason: "give --s-fast or --s-slow".into() }.into())
        }
    };
    let cfg = SimConfig { horizon: a.periods as u32, warmup: 0, ..sim };
    let demands = demand_path(product, &cfg, 0)?;
    let rows = trace(&policy, product, &demands)?;
    write_trace_csv(&rows, output(&a.out)?)?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<NotConverged>().is_some() {
        return 4;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Infeasible(_)) => 3,
        Some(Error::Parameter { .. } | Error::Precondition(_) | Error::Json(_)) => 2,
        _ => 1,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV} must be a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match &cli.cmd {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Lorenz(a) => lorenz(a),
        Command::Price(a) => price(a),
        Command::Trace(a) => trace_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
