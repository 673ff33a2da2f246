use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dbm_lab::{load_config, Registry};

#[derive(Parser, Debug)]
#[command(name = "dbm-lab", version, about = "Run deformed-GOE and Dyson Brownian motion experiments")]
struct Cli {
    /// Experiment kind; `list` prints the registered kinds.
    kind: String,
    /// Flat TOML config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `out` in the config, then `out/<kind>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let registry = Registry::standard();
    if cli.kind == "list" {
        for (kind, summary) in registry.describe() {
            println!("{kind:<12} {summary}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let cfg = match load_config(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli
        .out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cli.kind));
    match registry.run(&cli.kind, &cfg, cli.seed, &out, cli.plots) {
        Ok(report) => {
            println!("{}: {}", cli.kind, if report.pass { "pass" } else { "FAIL" });
            for (k, v) in &report.metrics {
                if !v.is_array() && !v.is_object() {
                    println!("  {k} = {v}");
                }
            }
            println!("report: {}", out.join("report.json").display());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
