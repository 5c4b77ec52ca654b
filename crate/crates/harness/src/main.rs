use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gaussbm::Verdict;
use gaussbm_harness::config::{ExperimentConfig, Suite};
use gaussbm_harness::{plot, suites, HarnessError};

/// Run a verification suite and write `report.json` plus CSV plot tables.
///
/// Exits 0 when no check fails (inconclusive checks are reported but do not
/// fail), 1 when some check fails and 2 on configuration or I/O errors.
#[derive(Debug, Parser)]
#[command(name = "verify", version)]
struct Cli {
    suite: Suite,
    /// JSON experiment config; built-in fixtures fill any missing block.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory (default: the config's output_dir, else verify-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<bool, HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.suite = cli.suite;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.samples {
        cfg.samples = n;
    }
    let out = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("verify-out"));
    let report = suites::run(&cfg)?;
    std::fs::create_dir_all(&out).map_err(|e| HarnessError::Io(out.clone(), e))?;
    report.write_json(&out.join("report.json"))?;
    plot::emit_all(&report, &out)?;
    for c in &report.checks {
        let tag = match c.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        };
        let value = c.gap.or(c.residual).map_or("-".into(), |v| format!("{v:.6e}"));
        match &c.diagnostic {
            Some(d) => println!("{tag:<12} {:<60} {value}  ({d})", c.name),
            None => println!("{tag:<12} {:<60} {value}", c.name),
        }
    }
    let s = report.summary;
    println!(
        "{} pass, {} fail, {} inconclusive; report in {}",
        s.pass,
        s.fail,
        s.inconclusive,
        out.display()
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("verify: {e}");
            ExitCode::from(2)
        }
    }
}
