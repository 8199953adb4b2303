//! Command-line layer: run configuration, verification suites, evaluators
//! and report serialization. `run` is the whole program; the binary only
//! forwards its arguments and exit code.

pub mod config;
pub mod eval;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::{HistoryEntry, SolveState, Solver, Status};
use config::{CommandName, EvalTarget, RunConfig, System};
use report::Envelope;
use suites::{Bound, Suite};

/// Thread count for node-parallel loops; results do not depend on it.
pub const THREADS_ENV: &str = "CMM_THREADS";

pub mod exit {
    pub const OK: i32 = 0;
    pub const ASSERTION: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const POSITIVITY: i32 = 4;
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::InvalidInput(_) | Error::Io(_) | Error::Dimension(..) | Error::Degree(_) => exit::USAGE,
        Error::NotKahler { .. } | Error::NotInCone { .. } => exit::POSITIVITY,
        Error::Diverged(_) | Error::Stall(_) | Error::FlowBlowup(_) => exit::SOLVER,
        _ => exit::ASSERTION,
    }
}

#[derive(Debug, Parser)]
#[command(name = "cmm", version, about = "Coupled moment maps: invariant suites, evaluators and solvers")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Torus side or Chebyshev node count; for `verify`, the T² side.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Comma-separated p values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,
    /// Suite tolerance for `verify`, residual tolerance for `solve`.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run invariant suites; every suite when none is named.
    Verify {
        #[arg(value_enum)]
        suites: Vec<Suite>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Evaluate one quantity on the configured state.
    Eval {
        #[arg(value_enum)]
        target: Option<EvalTarget>,
        /// Also write per-node CSV files.
        #[arg(long)]
        csv: bool,
    },
    /// Solve the configured coupled system and write a run directory.
    Solve,
}

impl Command {
    fn name(&self) -> CommandName {
        match self {
            Command::Verify { .. } => CommandName::Verify,
            Command::Eval { .. } => CommandName::Eval,
            Command::Solve => CommandName::Solve,
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("cmm: {e}");
        return exit::USAGE;
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cmm: {e}");
            exit_code(&e)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| Error::Usage(format!("{THREADS_ENV} = {v:?} is not a thread count")))?;
    // a pool built earlier in this process (tests) stays in place
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// The effective configuration: file, then flags, then validation.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let name = cli.command.name();
    if let Some(c) = cfg.command {
        if c != name {
            return Err(Error::Usage(format!("config is for `{c:?}`, not `{name:?}`").to_lowercase()));
        }
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Verify { suites, instances, directions } => {
            let v = &mut cfg.verify;
            if !suites.is_empty() {
                v.suites = suites.clone();
            }
            v.instances = instances.or(v.instances);
            v.directions = directions.or(v.directions);
            v.grid = cli.grid.or(v.grid);
            v.p = cli.p.clone().or(v.p.take());
            v.tolerance = cli.tolerance.or(v.tolerance);
        }
        Command::Eval { target, csv } => {
            if cli.tolerance.is_some() {
                return Err(Error::Usage("--tolerance has no effect on eval".into()));
            }
            cfg.eval.target = target.or(cfg.eval.target);
            cfg.eval.csv |= csv;
            cfg.geometry.grid = cli.grid.unwrap_or(cfg.geometry.grid);
            if let Some(p) = &cli.p {
                cfg.coupling.p = p.clone();
            }
        }
        Command::Solve => {
            cfg.geometry.grid = cli.grid.unwrap_or(cfg.geometry.grid);
            if let Some(p) = &cli.p {
                cfg.coupling.p = p.clone();
            }
            cfg.solver.tolerance = cli.tolerance.unwrap_or(cfg.solver.tolerance);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = resolve(cli)?;
    std::fs::create_dir_all(&cfg.output).map_err(|e| Error::Usage(format!("cannot create {}: {e}", cfg.output.display())))?;
    match cli.command.name() {
        CommandName::Verify => verify(&cfg),
        CommandName::Eval => eval_cmd(&cfg),
        CommandName::Solve => solve(&cfg),
    }
}

fn verify(cfg: &RunConfig) -> Result<i32> {
    let list: Vec<Suite> = if cfg.verify.suites.is_empty() { Suite::ALL.to_vec() } else { cfg.verify.suites.clone() };
    let scale = cfg.verify.scale();
    let mut all_passed = true;
    for suite in list {
        let start = Instant::now();
        let rep = suites::run(suite, &scale, cfg.seed)?;
        eprintln!("{}: {:.1} s", suite.name(), start.elapsed().as_secs_f64());
        for c in &rep.checks {
            let status = match (c.gating, c.passed) {
                (true, true) => "PASS",
                (true, false) => "FAIL",
                (false, _) => "diag",
            };
            let rel = if c.bound == Bound::AtMost { "≤" } else { "≥" };
            println!("{status} {} | {}: {:.3e} (want {rel} {:.1e})", suite.name(), c.name, c.measured, c.tolerance);
        }
        all_passed &= rep.passed;
        let env = Envelope::new("verify", cfg.digest(), cfg.seeds(CommandName::Verify), &rep);
        env.write(&cfg.output.join(format!("verify-{}.json", suite.name())))?;
    }
    Ok(if all_passed { exit::OK } else { exit::ASSERTION })
}

fn eval_cmd(cfg: &RunConfig) -> Result<i32> {
    let target = cfg.eval.target.ok_or_else(|| Error::Usage("eval needs a target, on the command line or as eval.target".into()))?;
    let out = eval::evaluate(cfg, target)?;
    let stem = format!("eval-{}", target.name());
    let env = Envelope::new(&format!("eval {}", target.name()), cfg.digest(), cfg.seeds(CommandName::Eval), &out.body);
    env.write(&cfg.output.join(format!("{stem}.json")))?;
    for (suffix, bytes) in &out.csv {
        std::fs::write(cfg.output.join(format!("{stem}-{suffix}.csv")), bytes)?;
    }
    println!("{}", env.to_json()?.trim_end());
    Ok(exit::OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveLog<'a> {
    pub status: Status,
    pub message: Option<&'a str>,
    pub iterations: usize,
    pub final_linf: f64,
    pub calabi: f64,
    pub mabuchi: f64,
    pub max_mabuchi_increase: f64,
    pub history: &'a [HistoryEntry],
}

pub fn status_code(s: Status) -> i32 {
    match s {
        Status::Converged => exit::OK,
        Status::NotKahler => exit::POSITIVITY,
        Status::Diverged | Status::Stalled | Status::Running => exit::SOLVER,
    }
}

fn write_run_dir(cfg: &RunConfig, dir: &Path, st: &SolveState) -> Result<()> {
    std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    cfg.field_file(&st.potentials).save(&dir.join("state.bin"))?;
    std::fs::write(dir.join("history.csv"), report::history_csv(&st.history)?)?;
    let log = SolveLog {
        status: st.status,
        message: st.message.as_deref(),
        iterations: st.iteration,
        final_linf: st.max_linf(),
        calabi: st.calabi(),
        mabuchi: st.mabuchi(),
        max_mabuchi_increase: st.max_mabuchi_increase(),
        history: &st.history,
    };
    Envelope::new("solve", cfg.digest(), cfg.seeds(CommandName::Solve), log).write(&dir.join("log.json"))
}

fn solve(cfg: &RunConfig) -> Result<i32> {
    let sys = cfg.system()?;
    let init = cfg.potentials(&sys)?;
    let start = Instant::now();
    let st = match &sys {
        System::Torus(t) => Solver::new(t, cfg.solver.clone())?.run(init),
        System::Toric(t) => Solver::new(t, cfg.solver.clone())?.run(init),
    };
    eprintln!("solve: {:.1} s", start.elapsed().as_secs_f64());
    write_run_dir(cfg, &cfg.output, &st)?;
    println!("{:?} after {} iterations, max |r| = {:.3e}", st.status, st.iteration, st.max_linf());
    if let Some(m) = &st.message {
        eprintln!("cmm: {m}");
    }
    Ok(status_code(st.status))
}
