//! Command-line front end for interval forecasting experiments.
//!
//! Three subcommands: `run` executes one TOML-configured experiment,
//! `compare` executes the same experiment once per interval method and
//! tabulates the results, and `gen` writes a synthetic benchmark series
//! to CSV. Exit codes: 0 on success, 1 for configuration errors, 2 for
//! everything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use encqr::data::{gen_synthetic, write_csv_series, SyntheticKind, SyntheticParams};
use encqr::experiment::{emit_report, load_config, run_experiment, ExperimentConfig, MethodName};
use encqr::{Result, RunOutput};

const OUT_DIR_ENV: &str = "ENCQR_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "encqr",
    version,
    about = "Adaptive prediction intervals for time series",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a TOML config.
    Run {
        /// Path to the experiment TOML.
        #[arg(long)]
        config: PathBuf,
        /// Override a config value by dotted path, e.g. method.alpha=0.2.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (falls back to run.out_dir in the config,
        /// then the ENCQR_OUT_DIR environment variable, then runs/run).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every interval method on the same config and print a table.
    Compare {
        /// Path to the experiment TOML.
        #[arg(long)]
        config: PathBuf,
        /// Override a config value by dotted path, applied before the
        /// per-method substitution.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory; each method writes to a subdirectory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated methods to include (default: all five).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
    },
    /// Generate a synthetic series and write it to CSV.
    Gen {
        /// Destination CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = GenKind::HeteroscedasticDaily)]
        kind: GenKind,
        #[arg(long, default_value_t = 6_000)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKind {
    #[value(name = "heteroscedastic_daily")]
    HeteroscedasticDaily,
    #[value(name = "homoscedastic_ar")]
    HomoscedasticAr,
}

impl From<GenKind> for SyntheticKind {
    fn from(kind: GenKind) -> Self {
        match kind {
            GenKind::HeteroscedasticDaily => SyntheticKind::HeteroscedasticDaily,
            GenKind::HomoscedasticAr => SyntheticKind::HomoscedasticAr,
        }
    }
}

fn resolve_out_dir(flag: Option<PathBuf>, config: &ExperimentConfig, fallback: &str) -> PathBuf {
    flag.or_else(|| config.run.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(fallback))
}

fn print_summary(output: &RunOutput, out_dir: &Path) {
    let r = &output.report;
    println!(
        "{}: picp {:.4}  pinaw {:.4}  cwc {:.4}  n {}  bound swaps {}",
        output.diagnostics.method, r.picp, r.pinaw, r.cwc, r.n, output.diagnostics.bound_swaps
    );
    println!("wrote {}", out_dir.display());
}

fn cmd_run(config_path: &Path, set: &[String], out: Option<PathBuf>) -> Result<()> {
    let config = load_config(config_path, set)?;
    let out_dir = resolve_out_dir(out, &config, "run");
    let output = run_experiment(&config)?;
    emit_report(&out_dir, &output)?;
    print_summary(&output, &out_dir);
    Ok(())
}

fn cmd_compare(
    config_path: &Path,
    set: &[String],
    out: Option<PathBuf>,
    methods: &[String],
) -> Result<()> {
    let base = load_config(config_path, set)?;
    let out_dir = resolve_out_dir(out, &base, "compare");
    let methods: Vec<MethodName> = if methods.is_empty() {
        MethodName::ALL.to_vec()
    } else {
        methods.iter().map(|m| m.parse()).collect::<Result<_>>()?
    };

    let mut rows = Vec::new();
    for method in methods {
        let mut config = base.clone();
        config.method.name = method;
        config.validate()?;
        let output = run_experiment(&config)?;
        emit_report(&out_dir.join(method.as_str()), &output)?;
        rows.push((method, output.report.clone(), output.diagnostics.bound_swaps));
    }

    println!(
        "{:<10} {:>8} {:>8} {:>8} {:>12}",
        "method", "picp", "pinaw", "cwc", "bound_swaps"
    );
    let mut csv = String::from("method,picp,pinaw,cwc,bound_swaps\n");
    for (method, report, swaps) in &rows {
        println!(
            "{:<10} {:>8.4} {:>8.4} {:>8.4} {:>12}",
            method.as_str(),
            report.picp,
            report.pinaw,
            report.cwc,
            swaps
        );
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            method.as_str(),
            report.picp,
            report.pinaw,
            report.cwc,
            swaps
        ));
    }
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("compare.csv"), csv)?;
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn cmd_gen(out: &Path, kind: GenKind, length: usize, seed: u64) -> Result<()> {
    let params = SyntheticParams { kind: kind.into(), length, seed, ..Default::default() };
    let (series, _) = gen_synthetic(&params)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_csv_series(out, &series, "target")?;
    println!("wrote {} rows to {}", series.len(), out.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, set, out } => cmd_run(&config, &set, out),
        Command::Compare { config, set, out, methods } => {
            cmd_compare(&config, &set, out, &methods)
        }
        Command::Gen { out, kind, length, seed } => cmd_gen(&out, kind, length, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn gen_kind_names_match_the_config_vocabulary() {
        let k = GenKind::from_str("heteroscedastic_daily", false).unwrap();
        assert!(matches!(SyntheticKind::from(k), SyntheticKind::HeteroscedasticDaily));
        let k = GenKind::from_str("homoscedastic_ar", false).unwrap();
        assert!(matches!(SyntheticKind::from(k), SyntheticKind::HomoscedasticAr));
    }
}
