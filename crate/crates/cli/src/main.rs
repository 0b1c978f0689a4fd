use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use coagfrag_cli::{
    bundled, execute, parse_scenario, parse_str, Scenario, ScenarioError, OUTPUT_ROOT_ENV,
};

#[derive(Parser)]
#[command(
    name = "coagfrag",
    version,
    about = "Run coagulation-fragmentation scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
        /// Output root; overrides $COAGFRAG_OUTPUT_ROOT (default: ./runs).
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Check a scenario without running it.
    Validate { scenario: String },
    /// Print the built-in kernel families and their parameters.
    ListKernels,
    /// Print the bundled scenarios.
    ListScenarios,
}

/// Exit codes: 0 all bounds Pass or Flag, 1 a bound failed, 2 bad input or
/// a failed run.
fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(arg: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(b) = bundled::find(arg) {
            return parse_str(b.source, b.name, None);
        }
    }
    parse_scenario(path)
}

fn dispatch(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Run {
            scenario,
            output_root,
        } => {
            let s = load(&scenario)?;
            for w in &s.warnings {
                eprintln!("{w}");
            }
            let root = output_root
                .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("runs"));
            let outcome =
                execute(&s, &root).with_context(|| format!("scenario {}", s.file.name))?;
            print!("{}", outcome.render());
            println!("artifacts: {}", outcome.run_dir.display());
            Ok(if outcome.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Validate { scenario } => match load(&scenario) {
            Ok(s) => {
                for w in &s.warnings {
                    println!("{w}");
                }
                println!("{}: ok ({} report(s))", s.file.name, s.file.reports.len());
                Ok(ExitCode::SUCCESS)
            }
            Err(ScenarioError::Invalid(diags)) => {
                for d in &diags {
                    println!("{d}");
                }
                Ok(ExitCode::from(2))
            }
            Err(e) => Err(e.into()),
        },
        Command::ListKernels => {
            print!("{KERNELS}");
            Ok(ExitCode::SUCCESS)
        }
        Command::ListScenarios => {
            for b in bundled::SCENARIOS {
                println!("{:<32} {}", b.name, bundled::description(b));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

const KERNELS: &str = "\
coagulation (family = ...):
  constant          a = c
  additive          a = c (i + j)
  multiplicative    a = c i j
  power-sym         a = c (i^alpha j^beta + i^beta j^alpha)   alpha, beta, c
  slow-sublinear    a = c (i/phi(i) + j/phi(j))               phi = log | iterated-log, c
  sqrt-product      a = c sqrt(i j)
  table             CSV rows i,j,value                        path
fragmentation (law = ...):
  binary-uniform    beta_ij = 2/(i-1)                         rate, exponent
  erosion           monomer plus (i-1)-mer                    rate, exponent
collision (rates = ..., daughters = uniform-in-mass):
  constant          b = c, b_11 = 0
  sqrt-product      b = c sqrt(k l), b_11 = 0
";
