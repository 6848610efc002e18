//! `qeclab`: run, validate and list error-correction experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qeclab_core::harness::{
    parse_config, preset, presets, run_experiment, validate_text, HarnessError, Issue, RunOptions, ValidationReport,
};

/// Environment variable that overrides the configured output directory.
const OUT_ENV: &str = "QECLAB_OUT";

#[derive(Parser)]
#[command(name = "qeclab", version, about = "Error-correction cycles under pulsed gates and Markovian noise")]
struct Cli {
    /// Output directory (overrides QECLAB_OUT and the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweep points (0 = all cores).
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    jobs: usize,
    /// Seed for random input states (overrides the config).
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Check a config against every precondition without running it.
    Validate {
        config: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Shipped desk-scale configurations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Names and one-line descriptions.
    List,
    /// Print a preset as a JSON config.
    Show { name: String },
}

fn print_issues(issues: &[Issue]) {
    for issue in issues {
        eprintln!("{issue}");
    }
}

fn read(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn run(cli: &Cli, path: &Path) -> ExitCode {
    let text = match read(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let mut cfg = match parse_config(&text) {
        Ok(cfg) => cfg,
        Err(issue) => {
            let report = ValidationReport { pass: false, config_hash: None, issues: vec![issue] };
            print_issues(&report.issues);
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out_dir = cli.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from));
    match run_experiment(&cfg, &RunOptions { out_dir, jobs: cli.jobs }) {
        Ok(summary) => {
            let m = &summary.manifest;
            println!(
                "{} files written to {} in {:.2}s (config hash {})",
                m.files.len() + 1,
                summary.out_dir.display(),
                m.wall_time_s,
                m.config_hash
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code = err.exit_code() as u8;
            match &err {
                HarnessError::Config(issues) => {
                    print_issues(issues);
                    let report = ValidationReport { pass: false, config_hash: Some(cfg.hash()), issues: issues.clone() };
                    println!("{}", serde_json::to_string(&report).expect("report serializes"));
                }
                HarnessError::Numerical { summary, .. } => {
                    eprintln!("error: {err}");
                    eprintln!("partial artifacts flagged in {}", summary.out_dir.join("manifest.json").display());
                }
                HarnessError::Io(_) => eprintln!("error: {err}"),
            }
            ExitCode::from(code)
        }
    }
}

fn validate(path: &Path, json: bool) -> ExitCode {
    let text = match read(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let (_, report) = validate_text(&text);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print_issues(&report.issues);
        println!("{}", if report.pass { "PASS" } else { "FAIL" });
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Validate { config, json } => validate(config, *json),
        Command::Presets { action: PresetAction::List } => {
            for p in presets() {
                println!("{:<22} {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Presets { action: PresetAction::Show { name } } => match preset(name) {
            Some(p) => {
                println!("{}", serde_json::to_string_pretty(&p.config).expect("config serializes"));
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown preset '{name}' (see `qeclab presets list`)");
                ExitCode::from(2)
            }
        },
    }
}
