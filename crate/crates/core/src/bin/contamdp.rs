use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contamdp::harness::{run_experiment, ExperimentKind, Overrides};
use contamdp::Error;

#[derive(Parser)]
#[command(name = "contamdp", version, about = "Privacy estimation experiments for contaminated-likelihood posteriors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical epsilon for the truncated-normal mean task over an n grid.
    Table1(Common),
    /// MSE of private mean estimators at budgets matched to the epsilon table.
    MeanBench(Common),
    /// Epsilon decay for linear, logistic and Cauchy regression.
    RegressionDecay(Common),
    /// Fisher-information gap between contaminated and clean models.
    FisherCheck(Common),
    /// Quadrature check of the posterior probability decomposition.
    VerifyProp1(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: `results`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(kind: ExperimentKind, args: Common) -> Result<i32, Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let ov = Overrides {
        seed: args.seed,
        workers: args.workers,
        out: args.out,
    };
    let result = run_experiment(kind, &text, &ov)?;
    for path in result.write()? {
        println!("{}", path.display());
    }
    Ok(result.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Table1(a) => (ExperimentKind::Table1, a),
        Command::MeanBench(a) => (ExperimentKind::MeanBench, a),
        Command::RegressionDecay(a) => (ExperimentKind::RegressionDecay, a),
        Command::FisherCheck(a) => (ExperimentKind::FisherCheck, a),
        Command::VerifyProp1(a) => (ExperimentKind::VerifyProp1, a),
    };
    let code = match run(kind, args) {
        Ok(code) => {
            if code != 0 {
                eprintln!("contamdp: some rows failed; see the status column");
            }
            code
        }
        Err(e) => {
            eprintln!("contamdp: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
