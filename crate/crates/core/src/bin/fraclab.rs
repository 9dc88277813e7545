use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclab::experiments::{self, Comparison, ExperimentError, RunContext, EXPERIMENTS};

/// Exit codes: 0 all gates pass, 1 some gate failed, 2 usage or malformed
/// configuration, 3 unknown experiment, 4 invalid parameter or fractional
/// order, 5 output directory not writable, 6 numerical failure.
#[derive(Parser)]
#[command(name = "fraclab", version, about = "Fractional Laplacian experiments with acceptance gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a JSON configuration.
    Run {
        config: PathBuf,
        /// Directory receiving one CSV per experiment and manifest.json.
        #[arg(long, env = "FRACLAB_OUT", default_value = "fraclab-out")]
        out: PathBuf,
        /// Worker threads for Monte Carlo (0 = all cores).
        #[arg(long, env = "FRACLAB_THREADS", default_value_t = 0)]
        threads: usize,
        /// Seed for experiments that do not set their own.
        #[arg(long, default_value_t = RunContext::default().seed)]
        seed: u64,
    },
    /// List experiments with their parameters and gates.
    List,
    /// Validate a configuration without running it.
    Check { config: PathBuf },
}

fn exit_code(e: &ExperimentError) -> u8 {
    match e {
        ExperimentError::Config(_) => 2,
        ExperimentError::UnknownExperiment(_) => 3,
        ExperimentError::InvalidOrder { .. } | ExperimentError::InvalidParameter { .. } => 4,
        ExperimentError::Output { .. } => 5,
        ExperimentError::Numerical { .. } => 6,
    }
}

fn fail(e: ExperimentError) -> ExitCode {
    eprintln!("fraclab: {e}");
    ExitCode::from(exit_code(&e))
}

fn read_config(path: &PathBuf) -> Result<Vec<u8>, ExperimentError> {
    std::fs::read(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for info in EXPERIMENTS {
                println!("{:<16}{}", info.name, info.description);
                println!("{:<16}params: {}", "", info.params.join(", "));
                for (name, cmp, threshold) in info.gates {
                    let op = match cmp {
                        Comparison::AtMost => "<=",
                        Comparison::AtLeast => ">=",
                    };
                    println!("{:<16}gate: {name} {op} {threshold:e}", "");
                }
            }
            ExitCode::SUCCESS
        }
        Command::Check { config } => {
            let checked = read_config(&config).and_then(|bytes| {
                let text = String::from_utf8(bytes).map_err(|e| ExperimentError::Config(e.to_string()))?;
                let cfg = experiments::Config::from_json(&text)?;
                experiments::validate_config(&cfg)?;
                Ok(cfg.experiments.len())
            });
            match checked {
                Ok(n) => {
                    println!("{}: {n} experiment(s) OK", config.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Run {
            config,
            out,
            threads,
            seed,
        } => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
                eprintln!("fraclab: thread pool: {e}");
                return ExitCode::from(2);
            }
            let bytes = match read_config(&config) {
                Ok(b) => b,
                Err(e) => return fail(e),
            };
            let ctx = RunContext { seed };
            let result = experiments::run_config(&bytes, &out, &ctx, |r| {
                println!("{:<16}{}  ({:.1} s)", r.name, if r.pass() { "PASS" } else { "FAIL" }, r.elapsed_s);
                for g in &r.gates {
                    let op = match g.comparison {
                        Comparison::AtMost => "<=",
                        Comparison::AtLeast => ">=",
                    };
                    let mark = if g.pass { "ok" } else { "FAILED" };
                    println!("    {:<22}{:>12.4e} {op} {:<10.3e} {mark}", g.name, g.value, g.threshold);
                }
            });
            match result {
                Ok(m) => {
                    println!("manifest: {}", out.join("manifest.json").display());
                    if m.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(e),
            }
        }
    }
}
