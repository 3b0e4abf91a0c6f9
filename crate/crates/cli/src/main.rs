use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use promised_davies_cli::{run, validate, RunOptions};

#[derive(Parser)]
#[command(
    name = "promised-davies",
    version,
    about = "Gibbs-state preparation experiments with random promised Davies generators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSVs plus manifest.json
    Run {
        config: PathBuf,
        #[arg(long, env = "OUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long, env = "THREADS")]
        threads: Option<usize>,
    },
    /// Check a config without running it
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, threads } => match run(&config, &RunOptions { out, threads }) {
            Ok(res) => {
                if let Some(m) = &res.manifest {
                    for c in &m.checks {
                        let status = if !c.asserted {
                            "note"
                        } else if c.passed {
                            "pass"
                        } else {
                            "FAIL"
                        };
                        println!("{status:>4}  {}: {}", c.name, c.detail);
                    }
                    if let Some(dir) = &res.out_dir {
                        println!("artifacts in {}", dir.display());
                    }
                }
                res.exit_code
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                promised_davies_cli::EXIT_ASSERTION
            }
        },
        Command::Validate { config } => {
            let (code, lines) = validate(&config);
            for l in lines {
                println!("{l}");
            }
            code
        }
    };
    ExitCode::from(code as u8)
}
