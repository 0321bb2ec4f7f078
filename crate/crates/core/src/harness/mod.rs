//! Configuration, experiment drivers and CSV output behind the `contamdp`
//! command-line tool.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use config::{
    CenterChoice, CoinPressSettings, ExperimentKind, FisherCheckConfig, MeanBenchConfig, MeanTask, RegressionDecayConfig,
    RegressionKind, SearchSettings, Table1Config, VerifyProp1Config, REFERENCE_TABLE1,
};
pub use output::{config_digest, CsvTable};
pub use run::{
    derive_seed, run_fisher_check, run_mean_bench, run_regression_decay, run_table1, run_verify_prop1, RowStatus,
};

use crate::error::Result;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Tables produced by one run, the directory they belong in, and the exit
/// code implied by their row statuses.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub tables: Vec<CsvTable>,
    pub out: PathBuf,
    pub exit_code: i32,
}

impl RunResult {
    pub fn write(&self) -> Result<Vec<PathBuf>> {
        self.tables.iter().map(|t| t.write(&self.out)).collect()
    }
}

macro_rules! apply_overrides {
    ($cfg:expr, $ov:expr) => {{
        if let Some(s) = $ov.seed {
            $cfg.seed = s;
        }
        if $ov.workers.is_some() {
            $cfg.workers = $ov.workers;
        }
        if $ov.out.is_some() {
            $cfg.out = $ov.out.clone();
        }
        $cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"))
    }};
}

/// Parses `config_text` for `kind`, applies `ov`, and runs the experiment.
pub fn run_experiment(kind: ExperimentKind, config_text: &str, ov: &Overrides) -> Result<RunResult> {
    match kind {
        ExperimentKind::Table1 => {
            let mut cfg: Table1Config = config::parse(config_text)?;
            let out = apply_overrides!(cfg, ov);
            let r = run_table1(&cfg)?;
            Ok(RunResult {
                exit_code: r.exit_code(),
                tables: vec![r.table],
                out,
            })
        }
        ExperimentKind::MeanBench => {
            let mut cfg: MeanBenchConfig = config::parse(config_text)?;
            let out = apply_overrides!(cfg, ov);
            let r = run_mean_bench(&cfg)?;
            Ok(RunResult {
                exit_code: r.exit_code(),
                tables: vec![r.table],
                out,
            })
        }
        ExperimentKind::RegressionDecay => {
            let mut cfg: RegressionDecayConfig = config::parse(config_text)?;
            let out = apply_overrides!(cfg, ov);
            let r = run_regression_decay(&cfg)?;
            Ok(RunResult {
                exit_code: r.exit_code(),
                tables: vec![r.table, r.fits],
                out,
            })
        }
        ExperimentKind::FisherCheck => {
            let mut cfg: FisherCheckConfig = config::parse(config_text)?;
            let out = apply_overrides!(cfg, ov);
            let r = run_fisher_check(&cfg)?;
            Ok(RunResult {
                exit_code: 0,
                tables: vec![r.table],
                out,
            })
        }
        ExperimentKind::VerifyProp1 => {
            let mut cfg: VerifyProp1Config = config::parse(config_text)?;
            let out = apply_overrides!(cfg, ov);
            let r = run_verify_prop1(&cfg)?;
            Ok(RunResult {
                exit_code: 0,
                tables: vec![r.table],
                out,
            })
        }
    }
}
