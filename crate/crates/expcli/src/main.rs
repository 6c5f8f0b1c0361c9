use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use netmfc_exp::{parse_config, run_sweep, Cli};

fn run() -> Result<bool> {
    let cli = Cli::parse();
    let spec = parse_config(&cli)?;
    if cli.dump_config {
        print!("{}", spec.to_toml()?);
        return Ok(true);
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    let runs = spec.runs().len();
    eprintln!("running {runs} run(s) into {}", spec.output_dir.display());
    let report = run_sweep(&spec)?;
    for failed in report.failures() {
        eprintln!(
            "run {} failed: {}",
            failed.name,
            failed.error.as_deref().unwrap_or("")
        );
    }
    let ok = report.runs.len() - report.failures().count();
    eprintln!(
        "{ok}/{runs} runs completed; merged metrics in {}",
        spec.output_dir.join(&report.merged).display()
    );
    Ok(report.all_ok())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
