//! Command-line front end: one TOML config, one command, one record.
//!
//! Exit codes: `0` success, `2` invalid arguments or config (including
//! parameters the library rejects while building the experiment), `3` a
//! failure while running it (non-PD form, singular KKT system, quadrature,
//! inadmissible strategy).

pub mod config;
pub mod record;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::{self, CostEvaluator, ENUMERATION_CAP};
use crate::equilibrium::{self, GameSolver, DEFAULT_DAMPING};
use crate::error::Error;
use crate::market_sim;
use crate::strategy::{RandomizedStrategy, Strategy};
use config::{ExperimentConfig, DEFAULT_MAX_ITERS, DEFAULT_PATHS};
use record::{
    CostResult, CostRow, DerandomizeResult, Envelope, EquilibriumRecord, GapRow, KernelCheckResult, PdEntry,
    RefineResult, RestartSummary, Table,
};

/// Restart limits within this max-norm distance of the KKT profile agree.
pub const RESTART_AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "impact-game", version, about = "Optimal execution games with transient price impact")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the record here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Record)]
    pub format: Format,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Strict positive definiteness of the kernel on the configured grid.
    KernelCheck,
    /// Expected cost of every trader with its term breakdown.
    Cost,
    /// Saving of each trader from averaging their randomized strategy.
    Derandomize,
    /// Nash equilibrium by the KKT system, with best-response restarts.
    Equilibrium,
    /// Equilibrium total variation over a sequence of grids.
    Refine,
    /// Monte Carlo realized costs against the analytic objective.
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::Cost => "cost",
            Command::Derandomize => "derandomize",
            Command::Equilibrium => "equilibrium",
            Command::Refine => "refine",
            Command::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// JSON record `{version, command, inputs_digest, results}`.
    Record,
    /// CSV table of the results.
    Table,
}

/// A failed invocation and the phase it failed in.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Run(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Run(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

fn setup<T>(r: crate::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Config(e.to_string()))
}

fn running<T>(r: crate::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Run)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(text) => match &cli.out {
            Some(path) => match std::fs::write(path, text) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("cannot write {}: {e}", path.display());
                    2
                }
            },
            None => {
                print!("{text}");
                0
            }
        },
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

/// Runs the parsed command and renders its output.
pub fn execute(cli: &Cli) -> Result<String, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    let bytes = std::fs::read(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::Config("config is not UTF-8".into()))?;
    let config = setup(ExperimentConfig::parse(&text))?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);

    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    let digest = record::inputs_digest(&bytes, cli.seed);
    let command = cli.command.name();
    match cli.command {
        Command::KernelCheck => render(cli.format, command, digest, &kernel_check(&config)?),
        Command::Cost => render(cli.format, command, digest, &cost(&config)?),
        Command::Derandomize => render(cli.format, command, digest, &derandomize(&config)?),
        Command::Equilibrium => render(cli.format, command, digest, &equilibrium(&config, seed)?),
        Command::Refine => render(cli.format, command, digest, &refine(&config)?),
        Command::Simulate => render(cli.format, command, digest, &simulate(&config, seed)?),
    }
}

fn render<T: Serialize + Table>(format: Format, command: &str, digest: String, results: &T) -> Result<String, Failure> {
    match format {
        Format::Table => Ok(results.to_csv()),
        Format::Record => record::to_json(&Envelope {
            version: record::VERSION.to_string(),
            command: command.to_string(),
            inputs_digest: digest,
            results,
        })
        .map_err(|e| Failure::Run(Error::Structural(format!("cannot serialize the record: {e}")))),
    }
}

pub fn kernel_check(config: &ExperimentConfig) -> Result<KernelCheckResult, Failure> {
    let kernel = setup(config.kernel())?;
    let grid = setup(config.grid())?;
    let times = grid.times().to_vec();
    let mut checks = vec![PdEntry {
        surrogate_n: None,
        report: running(kernel.check_positive_definite(&times))?,
    }];
    if kernel.is_singular() {
        for n in config.pd_shifts() {
            let surrogate = setup(kernel.shift_approximation(n))?;
            checks.push(PdEntry {
                surrogate_n: Some(n),
                report: running(surrogate.check_positive_definite(&times))?,
            });
        }
    }
    Ok(KernelCheckResult {
        kernel: kernel.params(),
        times,
        checks,
    })
}

pub fn cost(config: &ExperimentConfig) -> Result<CostResult, Failure> {
    let kernel = setup(config.kernel())?;
    let grid = setup(config.grid())?;
    let players = setup(config.players())?;
    let eval = running(CostEvaluator::new(&kernel, &grid))?;
    let mut traders = Vec::with_capacity(players.len());
    for (i, (spec, r)) in players.iter().enumerate() {
        let others: Vec<&RandomizedStrategy> = opponents(&players, i);
        traders.push(CostRow {
            trader: i,
            randomized: r.is_strictly_randomized(),
            terms: running(eval.randomized_terms(spec, r, &others, ENUMERATION_CAP))?,
        });
    }
    Ok(CostResult { traders })
}

pub fn derandomize(config: &ExperimentConfig) -> Result<DerandomizeResult, Failure> {
    let kernel = setup(config.kernel())?;
    let players = setup(config.players())?;
    let mut traders = Vec::with_capacity(players.len());
    for (i, (spec, r)) in players.iter().enumerate() {
        let others = opponents(&players, i);
        traders.push(GapRow {
            trader: i,
            gap: running(cost::derandomization_gap(&kernel, spec, r, &others))?,
        });
    }
    Ok(DerandomizeResult { traders })
}

fn opponents(players: &[(cost::CostSpec, RandomizedStrategy)], i: usize) -> Vec<&RandomizedStrategy> {
    players
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, (_, r))| r)
        .collect()
}

pub fn equilibrium(config: &ExperimentConfig, seed: u64) -> Result<EquilibriumRecord, Failure> {
    let game = setup(config.game())?;
    let solver = running(GameSolver::new(&game))?;
    let eq = running(solver.solve())?;
    let damping = running(solver.damping_analysis())?;
    let runs = config.experiment.restarts.unwrap_or(0);
    let restarts = if runs == 0 {
        None
    } else {
        // the configured damping, else 1/2 when it contracts, else the best one
        let alpha = match (config.experiment.alpha, damping.bound, damping.optimal) {
            (Some(a), _, _) => a,
            (None, Some(b), _) if b > DEFAULT_DAMPING => DEFAULT_DAMPING,
            (None, _, Some(opt)) => opt,
            (None, _, None) => DEFAULT_DAMPING,
        };
        let max_iters = config.experiment.max_iters.unwrap_or(DEFAULT_MAX_ITERS);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut converged_runs = 0;
        let mut max_deviation: f64 = 0.0;
        for _ in 0..runs {
            let init = (0..game.n_traders())
                .map(|i| {
                    let d = solver.decision_form(i).active.len();
                    let v = nalgebra::DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                    solver.strategy(i, &v)
                })
                .collect::<crate::Result<Vec<Strategy>>>();
            let report = running(solver.iterate(&running(init)?, alpha, max_iters))?;
            if report.converged {
                converged_runs += 1;
            }
            max_deviation = max_deviation.max(profile_distance(&report.profile, &eq.profile));
        }
        Some(RestartSummary {
            runs,
            alpha,
            converged_runs,
            max_deviation,
            agree: converged_runs == runs && max_deviation <= RESTART_AGREEMENT_TOL,
        })
    };
    Ok(EquilibriumRecord::new(&eq, damping, restarts))
}

/// Max-norm distance between two profiles on the same grid.
pub fn profile_distance(a: &[Strategy], b: &[Strategy]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.stacked().into_iter().zip(y.stacked()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

pub fn refine(config: &ExperimentConfig) -> Result<RefineResult, Failure> {
    let game = setup(config.game())?;
    let sizes = config.grid_sizes();
    if sizes.is_empty() {
        return Err(Failure::Config("experiment.grid_sizes is empty".into()));
    }
    Ok(RefineResult {
        rows: running(equilibrium::refinement_study(&game, &sizes))?,
    })
}

pub fn simulate(config: &ExperimentConfig, seed: u64) -> Result<market_sim::SimulationReport, Failure> {
    let kernel = setup(config.kernel())?;
    let players = setup(config.players())?;
    let model = setup(config.price_model(seed))?;
    let paths = config.experiment.paths.unwrap_or(DEFAULT_PATHS);
    if paths < market_sim::MIN_PATHS {
        return Err(Failure::Config(format!(
            "experiment.paths must be at least {}",
            market_sim::MIN_PATHS
        )));
    }
    running(market_sim::monte_carlo_objective(&model, &kernel, &players, paths))
}
