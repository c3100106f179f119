use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use unate::harness::{overlap_check, parse_list, run_experiment, ExperimentConfig, FamilyTemplate};
use unate::tester::{BudgetConfig, TesterKind};
use unate::Error;

#[derive(Parser)]
#[command(name = "unate-lab", version, about = "Seeded experiments with query-model unateness testers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run testers over a grid of functions, dimensions and distances.
    Run {
        /// Family template; repeat for several families.
        #[arg(long, required = true)]
        family: Vec<String>,
        /// Comma-separated dimensions.
        #[arg(long)]
        n: String,
        /// Comma-separated distance parameters.
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// `main`, `baseline` or `case-only:<case>`; comma-separated for several.
        #[arg(long, default_value = "main")]
        tester: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// JSON file of budget overrides.
        #[arg(long)]
        budget: Option<PathBuf>,
        /// Also print the rows as JSON on stdout.
        #[arg(long)]
        json: bool,
        /// Leave the wall-time column at zero so reruns are byte-identical.
        #[arg(long)]
        no_wall_time: bool,
    },
    /// Tail statistics of the intersection of two random sets.
    Overlap {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        l: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn config<T>(r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(Failure::Config)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { family, n, eps, trials, tester, seed, out, budget, json, no_wall_time } => {
            let families = config(family.iter().map(|f| FamilyTemplate::parse(f)).collect::<Result<Vec<_>, _>>())?;
            let mut cfg = ExperimentConfig::new(families, config(parse_list(&n))?, config(parse_list(&eps))?, trials);
            cfg.seed = seed;
            cfg.testers = config(tester.split(',').map(|t| TesterKind::parse(t.trim())).collect::<Result<Vec<_>, _>>())?;
            if let Some(p) = budget {
                let text = config(std::fs::read_to_string(&p).map_err(Error::from))?;
                cfg.budget = config(BudgetConfig::from_json(&text))?;
            }
            cfg.out = Some(out);
            cfg.wall_time = !no_wall_time;
            config(cfg.validate())?;
            let rows = run_experiment(&cfg).map_err(Failure::Runtime)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
            }
            Ok(())
        }
        Command::Overlap { n, k, l, trials, seed } => {
            let report = config(overlap_check(n, k, l, trials, seed))?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
