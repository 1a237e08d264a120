//! Command-line front end: ingestion, offline probing analysis, and online
//! experiments.

pub mod config;

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use pucs_core::harness::{run_experiment, summarize, write_csv, Experiment, ScoringMode, DEFAULT_CHECKPOINTS, ZETA};
use pucs_core::ingest::{ingest, IngestParams, RewardModel};
use pucs_core::offline::{exhaustive_optimal_probe_with, greedy_probe_with, Evaluator, DEFAULT_MC_SAMPLES};
use pucs_core::online::{Algorithm, PolicyConfig, DEFAULT_DELTA};
use pucs_core::{presets, Environment, ExpectationMethod, ProbingCost};

use config::{expand_alpha, parse_alpha_flag, AlphaSpec, EnvironmentSource, FileConfig};

pub const DEFAULT_HORIZON: usize = 3000;
pub const DEFAULT_SEEDS: u64 = 20;
pub const DEFAULT_PRESET: &str = "setting-a";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pucs_core::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("{0}")]
    Check(String),
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use pucs_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::Io(_) | E::Csv(_) | E::ProbeBudgetExceeded { .. } => 1,
                _ => 2,
            },
            CliError::Io { .. } | CliError::Check(_) => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Debug, Parser)]
#[command(name = "pucs", version, about = "Probing-augmented user-centric selection simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an environment JSON from a trip CSV.
    Ingest(IngestArgs),
    /// Compare greedy probing against the exhaustive optimum.
    Offline(OfflineArgs),
    /// Run online policies and write regret traces.
    Online(OnlineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SharedArgs {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base random seed [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if absent [default: out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: available cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RewardModelArg {
    Bernoulli,
    FourLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExpectationArg {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Trip CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Arms: busiest grid cells kept (config `ingest.arms`) [default: 3].
    #[arg(short = 'M', long)]
    pub arms: Option<usize>,
    /// Plays: vehicles sampled in the cells' bounding box (`ingest.plays`) [default: 2].
    #[arg(short = 'K', long)]
    pub plays: Option<usize>,
    /// Grid cell size in degrees (`ingest.cell_size`) [default: 0.01].
    #[arg(long)]
    pub cell_size: Option<f64>,
    /// Passenger counts above this are clamped (`ingest.d_max_cap`) [default: 7].
    #[arg(long)]
    pub d_max_cap: Option<usize>,
    /// Reward model (`ingest.reward_model`) [default: bernoulli].
    #[arg(long, value_enum)]
    pub reward_model: Option<RewardModelArg>,
    /// Probing cost: "linear" or comma list (`ingest.alpha`) [default: 0,0.1,1].
    #[arg(long)]
    pub alpha: Option<String>,
    /// Probe budget used by `--alpha linear` [default: 2].
    #[arg(short = 'I', long = "I")]
    pub budget: Option<usize>,
    /// Latitude column (`ingest.columns.latitude`) [default: pickup_latitude].
    #[arg(long)]
    pub lat_col: Option<String>,
    /// Longitude column (`ingest.columns.longitude`) [default: pickup_longitude].
    #[arg(long)]
    pub lon_col: Option<String>,
    /// Passenger count column (`ingest.columns.passengers`) [default: passenger_count].
    #[arg(long)]
    pub pax_col: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    /// Environment JSON (config `environment.path`).
    #[arg(long, conflicts_with = "preset")]
    pub env: Option<PathBuf>,
    /// Built-in environment (`environment.preset`) [default: setting-a].
    #[arg(long)]
    pub preset: Option<String>,
    /// Probing cost override: "linear" or comma list (`alpha`) [default: environment's].
    #[arg(long)]
    pub alpha: Option<String>,
    /// Probe budget for "linear" alpha (`I`).
    #[arg(short = 'I', long = "I")]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OfflineArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    /// Expectation method (`expectation`) [default: exact].
    #[arg(long, value_enum)]
    pub expectation: Option<ExpectationArg>,
    /// Monte Carlo samples (`W`) [default: 200].
    #[arg(short = 'W', long = "W")]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OnlineArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    /// Horizon (`T`) [default: 3000].
    #[arg(short = 'T', long = "T")]
    pub horizon: Option<usize>,
    /// Confidence parameter (`delta`) [default: 0.05].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Monte Carlo samples for greedy probing on estimates (`W`) [default: 200].
    #[arg(short = 'W', long = "W")]
    pub samples: Option<usize>,
    /// Number of seeds, run as seed, seed+1, ... (`seeds` takes an explicit list) [default: 20].
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Comma list of olpa, nonprobing, rr, gr (`algorithms`) [default: all four].
    #[arg(long)]
    pub algos: Option<String>,
    /// Scoring expectation (`expectation`) [default: exact].
    #[arg(long, value_enum)]
    pub expectation: Option<ExpectationArg>,
    /// Samples for Monte Carlo scoring (`eval_samples`) [default: 2000].
    #[arg(long)]
    pub eval_samples: Option<usize>,
    /// Comma list of summary checkpoints (`checkpoints`) [default: 1000,2000,3000].
    #[arg(long)]
    pub checkpoints: Option<String>,
    /// Cap optimistic means at 1 (`clamp_ucb`) [default: false].
    #[arg(long)]
    pub clamp_ucb: bool,
}

pub const DEFAULT_EVAL_SAMPLES: usize = 2000;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Offline(args) => cmd_offline(args),
        Command::Online(args) => cmd_online(args),
    }
}

fn setup_jobs(flag: Option<usize>, file: Option<usize>) -> Result<(), CliError> {
    if let Some(jobs) = flag.or(file).filter(|&j| j > 0) {
        // A pool may already exist when commands run in-process more than once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(())
}

fn out_dir(flag: &Option<PathBuf>, file: &FileConfig) -> Result<PathBuf, CliError> {
    let dir = flag.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(io_err(format!("cannot create {}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(format!("cannot write {}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))
}

pub fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.shared.config.as_deref())?;
    setup_jobs(args.shared.jobs, file.jobs)?;
    let mut params = file.ingest.clone().unwrap_or_default();
    if let Some(m) = args.arms {
        params.arms = m;
    }
    if let Some(k) = args.plays {
        params.plays = k;
    }
    if let Some(c) = args.cell_size {
        params.cell_size = c;
    }
    if let Some(d) = args.d_max_cap {
        params.d_max_cap = d;
    }
    if let Some(r) = args.reward_model {
        params.reward_model = match r {
            RewardModelArg::Bernoulli => RewardModel::Bernoulli,
            RewardModelArg::FourLevel => RewardModel::FourLevel,
        };
    }
    let alpha = args.alpha.as_deref().map(parse_alpha_flag).or(file.alpha.clone());
    if let Some(spec) = alpha {
        params.alpha = expand_alpha(&spec, args.budget.or(file.budget).or(Some(2)))?;
    }
    if let Some(c) = args.lat_col {
        params.columns.latitude = c;
    }
    if let Some(c) = args.lon_col {
        params.columns.longitude = c;
    }
    if let Some(c) = args.pax_col {
        params.columns.passengers = c;
    }
    if params.arms == 0 || params.plays == 0 {
        return Err(CliError::Usage("M and K must be at least 1".into()));
    }
    let input = fs::File::open(&args.input).map_err(io_err(format!("cannot open {}", args.input.display())))?;
    let seed = args.shared.seed.or(file.seed).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (env, report) = ingest(BufReader::new(input), &params, &mut rng)?;
    let dir = out_dir(&args.shared.out, &file)?;
    write_file(&dir.join("environment.json"), env.to_json()?.as_bytes())?;
    write_file(&dir.join("ingest_report.json"), to_json(&report)?.as_bytes())?;
    println!("records {} dropped {} cells {} arms {}", report.records, report.dropped, report.cells, report.arms.len());
    if report.clamped_means > 0 {
        log::warn!("{} four-level means below 0.1 were clamped", report.clamped_means);
    }
    println!("wrote {}", dir.join("environment.json").display());
    Ok(())
}

/// Environment from flags, then config, then the default preset.
fn load_environment(args: &EnvArgs, file: &FileConfig, seed: u64) -> Result<Environment, CliError> {
    let source = if let Some(p) = &args.env {
        EnvironmentSource::Path(p.clone())
    } else if let Some(name) = &args.preset {
        EnvironmentSource::Preset(name.clone())
    } else {
        file.environment.clone().unwrap_or_else(|| EnvironmentSource::Preset(DEFAULT_PRESET.into()))
    };
    let env = match source {
        EnvironmentSource::Preset(name) => presets::preset(&name, None)?,
        EnvironmentSource::Path(path) => {
            let text =
                fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            Environment::from_json(&text)?
        }
        EnvironmentSource::Dataset(path) => {
            let params: IngestParams = file.ingest.clone().unwrap_or_default();
            let input =
                fs::File::open(&path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
            ingest(BufReader::new(input), &params, &mut ChaCha8Rng::seed_from_u64(seed))?.0
        }
    };
    let alpha: Option<AlphaSpec> = args.alpha.as_deref().map(parse_alpha_flag).or(file.alpha.clone());
    let budget = args.budget.or(file.budget);
    let alpha = match (alpha, budget) {
        (Some(spec), b) => Some(expand_alpha(&spec, b.or(Some(env.probing_cost().budget())))?),
        (None, Some(b)) => Some(expand_alpha(&AlphaSpec::Named("linear".into()), Some(b))?),
        (None, None) => None,
    };
    Ok(match alpha {
        Some(a) => env.with_probing_cost(ProbingCost::new(a)?),
        None => env,
    })
}

fn expectation_choice(flag: Option<ExpectationArg>, file: &FileConfig) -> Result<ExpectationArg, CliError> {
    if let Some(f) = flag {
        return Ok(f);
    }
    match file.expectation.as_deref() {
        None | Some("exact") => Ok(ExpectationArg::Exact),
        Some("monte_carlo") | Some("monte-carlo") => Ok(ExpectationArg::MonteCarlo),
        Some(other) => Err(CliError::Usage(format!("unknown expectation `{other}`"))),
    }
}

fn set_string(set: &[usize]) -> String {
    let items: Vec<String> = set.iter().map(|m| m.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

#[derive(Debug, Serialize)]
struct OfflineReport {
    greedy_set: Vec<usize>,
    greedy_value: f64,
    optimal_set: Vec<usize>,
    optimal_value: f64,
    ratio: f64,
    zeta: f64,
    method: ExpectationMethod,
}

pub fn cmd_offline(args: OfflineArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.shared.config.as_deref())?;
    setup_jobs(args.shared.jobs, file.jobs)?;
    let seed = args.shared.seed.or(file.seed).unwrap_or(0);
    let env = load_environment(&args.env, &file, seed)?;
    let method = match expectation_choice(args.expectation, &file)? {
        ExpectationArg::Exact => ExpectationMethod::Exact,
        ExpectationArg::MonteCarlo => ExpectationMethod::MonteCarlo {
            samples: args.samples.or(file.samples).unwrap_or(DEFAULT_MC_SAMPLES),
            seed,
        },
    };
    let eval = Evaluator::new(&env, method)?;
    let greedy = greedy_probe_with(&eval)?;
    let best = exhaustive_optimal_probe_with(&eval)?;
    let ratio = if best.value > 0.0 { greedy.value / best.value } else { 1.0 };
    let mut stdout = io::stdout().lock();
    let print = |out: &mut dyn Write, line: String| writeln!(out, "{line}").map_err(io_err("stdout"));
    print(&mut stdout, format!("S_pr   = {}", set_string(&greedy.set)))?;
    print(&mut stdout, format!("R(S_pr) = {:.6}", greedy.value))?;
    print(&mut stdout, format!("S*     = {}", set_string(&best.set)))?;
    print(&mut stdout, format!("R(S*)  = {:.6}", best.value))?;
    print(&mut stdout, format!("ratio  = {ratio:.6}"))?;
    print(&mut stdout, format!("zeta   = {ZETA:.9}"))?;
    if let Some(dir) = args.shared.out.clone().or_else(|| file.out.clone()) {
        let dir = out_dir(&Some(dir), &file)?;
        let report = OfflineReport {
            greedy_set: greedy.set.clone(),
            greedy_value: greedy.value,
            optimal_set: best.set.clone(),
            optimal_value: best.value,
            ratio,
            zeta: ZETA,
            method,
        };
        write_file(&dir.join("offline.json"), to_json(&report)?.as_bytes())?;
    }
    if method == ExpectationMethod::Exact {
        if ratio >= ZETA - 1e-9 {
            print(&mut stdout, "PASS ratio >= zeta".into())?;
        } else {
            print(&mut stdout, "FAIL ratio < zeta".into())?;
            return Err(CliError::Check(format!("approximation ratio {ratio} below {ZETA}")));
        }
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|_| CliError::Usage(format!("invalid {what} `{p}`"))))
        .collect()
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    fingerprint: String,
    zeta: f64,
    optimal_set: &'a [usize],
    optimal_value: f64,
    horizon: usize,
    seeds: &'a [u64],
    algorithms: Vec<&'static str>,
    policy: PolicyConfig,
    scoring: ScoringMode,
    checkpoints: &'a [usize],
    reward_normalization: &'static str,
}

/// Experiment assembled from flags over config over defaults.
pub fn build_experiment(args: &OnlineArgs, file: &FileConfig) -> Result<Experiment, CliError> {
    let seed = args.shared.seed.or(file.seed).unwrap_or(0);
    let env = load_environment(&args.env, file, seed)?;
    let horizon = args.horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON);
    let seeds: Vec<u64> = match (args.seeds, &file.seeds) {
        (Some(n), _) => (seed..seed + n).collect(),
        (None, Some(list)) => list.clone(),
        (None, None) => (seed..seed + DEFAULT_SEEDS).collect(),
    };
    let algorithms: Vec<Algorithm> = match (&args.algos, &file.algorithms) {
        (Some(s), _) => parse_list(s, "algorithm")?,
        (None, Some(list)) => {
            list.iter().map(|a| a.parse().map_err(|e: pucs_core::Error| CliError::Usage(e.to_string()))).collect::<Result<_, _>>()?
        }
        (None, None) => Algorithm::ALL.to_vec(),
    };
    let policy = PolicyConfig {
        delta: args.delta.or(file.delta).unwrap_or(DEFAULT_DELTA),
        samples: args.samples.or(file.samples).unwrap_or(DEFAULT_MC_SAMPLES),
        clamp_ucb: args.clamp_ucb || file.clamp_ucb.unwrap_or(false),
    };
    let scoring = match expectation_choice(args.expectation, file)? {
        ExpectationArg::Exact => ScoringMode::Exact,
        ExpectationArg::MonteCarlo => ScoringMode::MonteCarlo {
            samples: args.eval_samples.or(file.eval_samples).unwrap_or(DEFAULT_EVAL_SAMPLES),
        },
    };
    let checkpoints = match (&args.checkpoints, &file.checkpoints) {
        (Some(s), _) => parse_list(s, "checkpoint")?,
        (None, Some(c)) => c.clone(),
        (None, None) => DEFAULT_CHECKPOINTS.to_vec(),
    };
    let exp = Experiment { env, horizon, seeds, algorithms, policy, scoring, checkpoints };
    exp.validate()?;
    Ok(exp)
}

pub fn cmd_online(args: OnlineArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.shared.config.as_deref())?;
    setup_jobs(args.shared.jobs, file.jobs)?;
    let exp = build_experiment(&args, &file)?;
    let dir = out_dir(&args.shared.out, &file)?;
    log::info!("running {} cells of {} rounds", exp.algorithms.len() * exp.seeds.len(), exp.horizon);
    let result = run_experiment(&exp)?;
    let mut csv = Vec::new();
    write_csv(&result, &mut csv)?;
    write_file(&dir.join("regret.csv"), &csv)?;
    let summary = summarize(&result);
    write_file(&dir.join("summary.txt"), summary.to_string().as_bytes())?;
    let meta = RunMetadata {
        fingerprint: exp.fingerprint(),
        zeta: ZETA,
        optimal_set: &result.optimal.set,
        optimal_value: result.optimal.value,
        horizon: exp.horizon,
        seeds: &exp.seeds,
        algorithms: exp.algorithms.iter().map(|a| a.name()).collect(),
        policy: exp.policy,
        scoring: exp.scoring,
        checkpoints: &exp.checkpoints,
        reward_normalization: "1 - d / d_max (min-max)",
    };
    write_file(&dir.join("metadata.json"), to_json(&meta)?.as_bytes())?;
    println!("R(S*) = {:.6} with S* = {}", result.optimal.value, set_string(&result.optimal.set));
    print!("{summary}");
    println!("wrote {}", dir.join("regret.csv").display());
    Ok(())
}
