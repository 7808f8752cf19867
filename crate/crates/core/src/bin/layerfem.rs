use std::process::ExitCode;

use clap::Parser;
use layerfem::cli::{exit_code, rate_fit_report, run, Cli, Command, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => RunConfig::from_args(&args).and_then(|cfg| {
            let (_, summary) = run(&cfg)?;
            println!(
                "{}: {:?} after {} levels, {} dofs, |r| = {:.3e}, gamma = {}, delta = {}",
                summary.case,
                summary.status,
                summary.refinements,
                summary.final_dofs,
                summary.final_r,
                summary.final_gamma,
                summary.final_delta
            );
            Ok(())
        }),
        Command::RateFit { records, window } => rate_fit_report(&records, window).map(|s| println!("{s}")),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
