use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bandit_cpdp::bandit::PolicyKind;
use bandit_cpdp::experiment::{parse_config, run_prepared, trace_file_name, ExperimentContext};
use bandit_cpdp::selftest::run_selftest;
use bandit_cpdp::{Error, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bandit-cpdp",
    version,
    about = "Bandit-based cross-project defect prediction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment matrix and write reports.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Overrides the master seed from the config.
        #[arg(short, long)]
        seed: Option<u64>,
        /// Overrides the output directory from the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay one repetition and print (or write) its trace.
    Trace {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Learning-set size.
        #[arg(long)]
        size: usize,
        /// Policy in config syntax, e.g. `epsilon:0.1` or `ucb`.
        #[arg(long)]
        policy: PolicyKind,
        /// Zero-based repetition index.
        #[arg(long)]
        repetition: usize,
        /// Output file or directory; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in property checks.
    Selftest,
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, seed, output } => {
            let mut config = parse_config(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(dir) = output {
                config.output_dir = dir;
            }
            let dir = config.output_dir.clone();
            let context = ExperimentContext::prepare(config)?;
            let out = run_prepared(&context)?;
            out.write_outputs(&dir)?;
            print!("{}", out.report.table1_text());
            println!();
            print!("{}", out.report.table2_text());
            for cell in &out.aborted {
                eprintln!(
                    "aborted cell n_projects={} policy={}: {}",
                    cell.n_projects, cell.policy, cell.reason
                );
            }
            eprintln!("wrote {} results to {}", out.results.len(), dir.display());
            Ok(true)
        }
        Command::Trace {
            config,
            seed,
            size,
            policy,
            repetition,
            output,
        } => {
            let mut config = parse_config(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if !config.learning_sizes.contains(&size) {
                config.learning_sizes.push(size);
            }
            let context = ExperimentContext::prepare(config)?;
            let run = context.run_repetition(size, &policy, repetition)?;
            let text = run.trace_text();
            match output {
                None => print!("{text}"),
                Some(path) => {
                    let path = if path.is_dir() {
                        path.join(trace_file_name(size, &policy, repetition))
                    } else {
                        path
                    };
                    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                    eprintln!("wrote {}", path.display());
                }
            }
            let r = &run.result;
            eprintln!(
                "seed {:016x}; learning projects {}; baseline auc {:.4}, found {}",
                r.seeds.repetition,
                r.learning_projects.join(","),
                r.baseline.auc,
                r.baseline.found_defects
            );
            Ok(true)
        }
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!("{}", c.line());
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
