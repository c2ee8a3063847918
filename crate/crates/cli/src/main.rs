use std::process::ExitCode;

use log::{info, warn};
use unvartop_cli::{configure_threads, execute, parse_args, CliError, Invocation};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    ExitCode::from(match try_main() {
        Ok(code) => code as u8,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    })
}

fn try_main() -> Result<i32, CliError> {
    let cfg = match parse_args(std::env::args_os())? {
        Invocation::Info(text) => {
            print!("{text}");
            return Ok(0);
        }
        Invocation::Run(cfg) => cfg,
    };
    configure_threads()?;
    info!("running {} on {}x{}", cfg.example, cfg.nelx, cfg.nely);
    let outcome = execute(&cfg)?;
    let h = &outcome.history;
    for w in &h.warnings {
        warn!("{w}");
    }
    if let Some(last) = h.records.last() {
        println!(
            "{}: {} iterations, step {}/{}, J_norm {:.6}, vol {:.6}, {}",
            cfg.example,
            h.total_iterations(),
            last.step,
            h.n_steps,
            last.j_norm,
            last.vol,
            if h.final_step_converged() {
                "converged"
            } else {
                "not converged"
            }
        );
    }
    println!("outputs in {}", cfg.out.display());
    Ok(outcome.exit_code)
}
