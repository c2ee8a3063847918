//! Command-line front end of the unvartop optimizer.
//!
//! `unvartop run` builds a library problem, runs the pseudo-time
//! optimization and writes `history.csv` plus per-step snapshots
//! (`step_<i>_psi.txt`, `step_<i>_chi.txt`, `step_<i>_chi.pgm`,
//! `step_<i>_u.txt`) into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;

use std::path::Path;

use unvartop::optimizer::{run, RunHistory, RunOptions};
use unvartop::problems::{example_library, Material, ProblemDefinition};

pub use config::{parse_args, parse_config_text, Invocation, RunConfig, DEFAULT_RHO0};
pub use error::CliError;

/// Exit status of a completed run.
pub const EXIT_OK: i32 = 0;
/// The run finished but a step hit its iteration cap or the final step did
/// not converge.
pub const EXIT_WARNINGS: i32 = 1;

/// Finished run and its exit status.
#[derive(Debug)]
pub struct Outcome {
    pub history: RunHistory,
    pub exit_code: i32,
}

/// Library problem described by `cfg`.
pub fn build_problem(cfg: &RunConfig) -> Result<ProblemDefinition, CliError> {
    let mut problem = example_library(&cfg.example, cfg.nelx, cfg.nely)?;
    if let (Some(model), Material::Elastic(mat)) = (cfg.model, &mut problem.material) {
        mat.model = model;
    }
    Ok(problem)
}

pub fn run_options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        tau: cfg.tau,
        solver: cfg.solver,
        root_method: cfg.root_method,
        constraint: cfg.constraint,
        keep_snapshots: cfg.snapshots,
        ..RunOptions::default()
    }
}

/// Runs the optimization and writes every output file.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg)?;
    let schedule = cfg.schedule()?;
    let out: &Path = &cfg.out;
    std::fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    let history = run(&problem, &schedule, &run_options(cfg))?;

    output::write_history(&history, &out.join("history.csv"))?;
    if cfg.snapshots {
        let grid = problem.grid()?;
        for snap in &history.snapshots {
            output::write_snapshot(&grid, snap, out)?;
        }
    }
    let exit_code = if history.warnings.is_empty() && history.final_step_converged() {
        EXIT_OK
    } else {
        EXIT_WARNINGS
    };
    Ok(Outcome { history, exit_code })
}

/// Sizes the global worker pool from `UNVARTOP_THREADS` (unset or 0 keeps
/// the default of one thread per core).
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("UNVARTOP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "UNVARTOP_THREADS must be a non-negative integer, got `{raw}`"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}
