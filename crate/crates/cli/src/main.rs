use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_orbits::config::{load_config_or_preset, ConfigError, RunConfig, DEFAULT_OUTPUT_ROOT, OUT_DIR_ENV, PRESETS};
use hybrid_orbits::runner::{self, RunError, RunStatus, RunSummary};
use hybrid_orbits::verify;

const EXIT_CONFIG: u8 = 1;
const EXIT_INTEGRATION: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

/// Hybrid quantum-classical orbits: run experiments, sweep parameters, verify.
///
/// Outputs go to `<output.root>/<name>/`; set HYBRID_ORBITS_OUT_DIR to
/// replace the root.
#[derive(Parser)]
#[command(name = "hybrid-orbits", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML file or a preset name.
    Run { config: String },
    /// Rerun an experiment once per value of a model parameter.
    Sweep {
        config: String,
        /// Model parameter: omega, mu, beta, m, k, c1, c2 or hbar.
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. `0,5,10`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Built-in experiment presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Run the acceptance checks.
    Verify {
        /// Where to put the preset runs (default `<root>/verify`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => run(&config),
        Command::Sweep { config, axis, values } => sweep(&config, &axis, &values),
        Command::Presets { action: PresetAction::List } => {
            list_presets();
            0
        }
        Command::Verify { out } => verify(out),
    };
    ExitCode::from(code)
}

fn load(spec: &str) -> Result<RunConfig, u8> {
    let cfg = load_config_or_preset(spec).map_err(|e| config_failure(&e))?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn config_failure(e: &ConfigError) -> u8 {
    eprintln!("config error: {e}");
    EXIT_CONFIG
}

fn run_failure(e: &RunError) -> u8 {
    match e {
        RunError::Config(e) => config_failure(e),
        other => {
            eprintln!("run failed: {other}");
            EXIT_INTEGRATION
        }
    }
}

fn run(spec: &str) -> u8 {
    let cfg = match load(spec) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match runner::run(&cfg) {
        Ok(summary) => {
            print_summary(&summary);
            0
        }
        Err(e) => run_failure(&e),
    }
}

fn print_summary(s: &RunSummary) {
    println!("{} ({}, {})", s.name, s.model, s.scheme);
    if let Some(v) = s.verdict {
        println!("  verdict: {v}");
    }
    if let Some(l) = s.lyapunov {
        println!("  lyapunov: {:.4e} +/- {:.1e}", l.exponent, l.std_error);
    }
    for r in &s.reports {
        println!(
            "  {}: {} (peak fraction {:.3}, flatness {:.2e}, tone {:.2e})",
            r.series, r.verdict, r.dominant_peak_fraction, r.spectral_flatness, r.pure_tone_flatness
        );
    }
    for (label, d) in &s.drift {
        println!("  drift {label}: {d:.2e}");
    }
    println!("  output: {}", s.output_dir.display());
}

fn sweep(spec: &str, axis: &str, values: &[f64]) -> u8 {
    let cfg = match load(spec) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let points = match runner::sweep(&cfg, axis, values) {
        Ok(p) => p,
        Err(e) => return run_failure(&e),
    };
    let mut failed = 0;
    for p in &points {
        let s = &p.summary;
        match s.status {
            RunStatus::Completed => println!(
                "{axis}={}: {}",
                p.value,
                s.verdict.map(|v| v.to_string()).unwrap_or_else(|| "no verdict".into())
            ),
            RunStatus::Failed => {
                failed += 1;
                println!("{axis}={}: failed: {}", p.value, s.error.as_deref().unwrap_or("unknown error"));
            }
        }
    }
    if let Some(p) = points.first() {
        if let Some(dir) = p.summary.output_dir.parent() {
            println!("table: {}", dir.join(runner::SWEEP_TABLE_FILE).display());
        }
    }
    if failed > 0 {
        EXIT_INTEGRATION
    } else {
        0
    }
}

fn list_presets() {
    for (name, text) in PRESETS {
        let about = text.lines().next().and_then(|l| l.strip_prefix("# ")).unwrap_or("");
        println!("{name:<20} {about}");
    }
}

fn verify(out: Option<PathBuf>) -> u8 {
    let dir = out.unwrap_or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT)).join("verify")
    });
    let outcomes = verify::all(&dir);
    for o in &outcomes {
        println!("{o}");
    }
    if outcomes.iter().all(|o| o.passed) {
        0
    } else {
        EXIT_ACCEPTANCE
    }
}
