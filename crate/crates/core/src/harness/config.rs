//! JSON experiment configuration. Every struct rejects unknown keys and fills
//! missing ones with the documented defaults.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ContaminationDensity, LikelihoodModel, Location};
use crate::privacy::{BoxCenter, SearchOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Table1,
    MeanBench,
    RegressionDecay,
    FisherCheck,
    VerifyProp1,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Table1 => "table1",
            ExperimentKind::MeanBench => "mean-bench",
            ExperimentKind::RegressionDecay => "regression-decay",
            ExperimentKind::FisherCheck => "fisher-check",
            ExperimentKind::VerifyProp1 => "verify-prop1",
        }
    }
}

/// `p_n = n^(−exponent)`.
pub fn contamination_rate(n: usize, exponent: f64) -> f64 {
    (n as f64).powf(-exponent)
}

/// `δ_n = 1/(factor · n)`.
pub fn delta_for(n: usize, factor: f64) -> f64 {
    1.0 / (factor * n as f64)
}

/// The one-dimensional location task: truncated normal data, truncated
/// Student-t contamination centred at the true mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanTask {
    pub theta_star: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
    pub nu: f64,
    pub g_scale: f64,
    pub prior_mean: f64,
    pub prior_sd: f64,
}

impl Default for MeanTask {
    fn default() -> Self {
        MeanTask {
            theta_star: 30.0,
            sigma: 8.0,
            lower: -270.0,
            upper: 330.0,
            nu: 5.0,
            g_scale: 8.0,
            prior_mean: 40.0,
            prior_sd: 40.0,
        }
    }
}

impl MeanTask {
    pub fn likelihood(&self) -> LikelihoodModel {
        LikelihoodModel::TruncatedNormalMean {
            sigma: self.sigma,
            lower: self.lower,
            upper: self.upper,
        }
    }

    pub fn contamination(&self) -> ContaminationDensity {
        ContaminationDensity::TruncatedStudentT {
            nu: self.nu,
            scale: self.g_scale,
            location: Location::Global(self.theta_star),
            lower: self.lower,
            upper: self.upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterChoice {
    TrueParameter,
    Map,
}

impl From<CenterChoice> for BoxCenter {
    fn from(c: CenterChoice) -> Self {
        match c {
            CenterChoice::TrueParameter => BoxCenter::TrueParameter,
            CenterChoice::Map => BoxCenter::Map,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSettings {
    pub x_grid: usize,
    pub predictor_grid: usize,
    pub widen: f64,
    pub log_ratio_limit: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        let d = SearchOptions::default();
        SearchSettings {
            x_grid: d.x_grid,
            predictor_grid: d.predictor_grid,
            widen: d.widen,
            log_ratio_limit: d.log_ratio_limit,
        }
    }
}

impl SearchSettings {
    pub fn options(&self) -> SearchOptions {
        SearchOptions {
            x_grid: self.x_grid,
            predictor_grid: self.predictor_grid,
            widen: self.widen,
            log_ratio_limit: self.log_ratio_limit,
            ..SearchOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Table1Config {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub n_grid: Vec<usize>,
    pub p_exponent: f64,
    pub delta_factor: f64,
    pub particles: usize,
    pub repeats: usize,
    pub quantile: f64,
    pub center: CenterChoice,
    pub task: MeanTask,
    pub search: SearchSettings,
}

impl Default for Table1Config {
    fn default() -> Self {
        Table1Config {
            seed: 2024,
            workers: None,
            out: None,
            n_grid: vec![100, 1000, 10000],
            p_exponent: 0.125,
            delta_factor: 10.0,
            particles: 2000,
            repeats: 200,
            quantile: 99.0,
            center: CenterChoice::TrueParameter,
            task: MeanTask::default(),
            search: SearchSettings::default(),
        }
    }
}

/// Settings for the CoinPress baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoinPressSettings {
    pub iterations: Vec<usize>,
    pub center: f64,
    pub radius: f64,
    /// Data scale assumed by the algorithm; 1 runs it in its unit-variance form.
    pub sigma: f64,
    pub beta: f64,
    pub final_share: f64,
}

impl Default for CoinPressSettings {
    fn default() -> Self {
        CoinPressSettings {
            iterations: vec![3, 10],
            center: 0.0,
            radius: 600.0,
            sigma: 1.0,
            beta: 0.01,
            final_share: 0.75,
        }
    }
}

/// Published ε̂ by sample size, used when no ε is supplied.
pub const REFERENCE_TABLE1: [(usize, f64); 7] = [
    (100, 2.85),
    (1000, 0.94),
    (2000, 0.72),
    (5000, 0.46),
    (10000, 0.32),
    (20000, 0.26),
    (50000, 0.18),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanBenchConfig {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub n_grid: Vec<usize>,
    /// ε per entry of `n_grid`; defaults to `REFERENCE_TABLE1`.
    pub epsilons: Option<Vec<f64>>,
    /// A table1 CSV to read ε from instead.
    pub table1_csv: Option<PathBuf>,
    pub delta_factor: f64,
    pub p_exponent: f64,
    pub datasets: usize,
    /// Mechanism runs per dataset.
    pub repeats: usize,
    pub methods: Vec<String>,
    pub coinpress: CoinPressSettings,
    pub task: MeanTask,
}

impl Default for MeanBenchConfig {
    fn default() -> Self {
        MeanBenchConfig {
            seed: 2024,
            workers: None,
            out: None,
            n_grid: vec![1000, 5000, 20000, 50000],
            epsilons: None,
            table1_csv: None,
            delta_factor: 10.0,
            p_exponent: 0.125,
            datasets: 40,
            repeats: 25,
            methods: ["bayes", "coinpress", "clipped", "gaussian"].iter().map(|s| s.to_string()).collect(),
            coinpress: CoinPressSettings::default(),
            task: MeanTask::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionKind {
    Linear,
    Logistic,
    Cauchy,
}

impl RegressionKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegressionKind::Linear => "linear",
            RegressionKind::Logistic => "logistic",
            RegressionKind::Cauchy => "cauchy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionDecayConfig {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub models: Vec<RegressionKind>,
    pub dims: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub contaminated: Vec<bool>,
    pub p_exponent: f64,
    pub delta_factor: f64,
    pub particles: usize,
    pub repeats: usize,
    pub quantile: f64,
    pub prior_sd: f64,
    /// Scale of the t₅ contamination in the linear model.
    pub linear_g_scale: f64,
    /// Scale of the Cauchy contamination in the Cauchy model.
    pub cauchy_g_scale: f64,
    /// Magnitude of the alternating-sign true coefficients.
    pub theta_magnitude: f64,
    pub center: CenterChoice,
    pub search: SearchSettings,
    pub extrapolate_to: Vec<f64>,
}

impl Default for RegressionDecayConfig {
    fn default() -> Self {
        RegressionDecayConfig {
            seed: 2024,
            workers: None,
            out: None,
            models: vec![RegressionKind::Linear, RegressionKind::Logistic, RegressionKind::Cauchy],
            dims: vec![5, 10],
            n_grid: vec![1000, 2000, 5000, 10000, 20000],
            contaminated: vec![true, false],
            p_exponent: 0.125,
            delta_factor: 10.0,
            particles: 2000,
            repeats: 200,
            quantile: 99.0,
            prior_sd: 10.0,
            linear_g_scale: 5.0,
            cauchy_g_scale: 5.0,
            theta_magnitude: 0.5,
            center: CenterChoice::TrueParameter,
            search: SearchSettings::default(),
            extrapolate_to: vec![1e5, 1e6, 1e7],
        }
    }
}

impl RegressionDecayConfig {
    /// `θ*ⱼ = ±magnitude`, starting positive.
    pub fn theta_star(&self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|j| if j % 2 == 0 { self.theta_magnitude } else { -self.theta_magnitude })
            .collect()
    }

    pub fn likelihood(&self, kind: RegressionKind, dim: usize) -> LikelihoodModel {
        match kind {
            RegressionKind::Linear => LikelihoodModel::GaussianLinear { sigma: 1.0, dim },
            RegressionKind::Logistic => LikelihoodModel::Logistic { dim },
            RegressionKind::Cauchy => LikelihoodModel::CauchyRegression { dim },
        }
    }

    pub fn contamination(&self, kind: RegressionKind, dim: usize) -> ContaminationDensity {
        let location = Location::Predictor(self.theta_star(dim));
        match kind {
            RegressionKind::Linear => ContaminationDensity::StudentT {
                nu: 5.0,
                scale: self.linear_g_scale,
                location,
            },
            RegressionKind::Logistic => ContaminationDensity::BernoulliHalf,
            RegressionKind::Cauchy => ContaminationDensity::Cauchy {
                scale: self.cauchy_g_scale,
                location,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FisherCheckConfig {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub p_grid: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    pub nu: f64,
    pub g_scale: f64,
    pub g_location: f64,
    pub tol: f64,
}

impl Default for FisherCheckConfig {
    fn default() -> Self {
        FisherCheckConfig {
            seed: 2024,
            workers: None,
            out: None,
            p_grid: vec![0.5, 0.1, 0.01],
            theta: 0.0,
            sigma: 1.0,
            nu: 5.0,
            g_scale: 1.0,
            g_location: 0.0,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyProp1Config {
    pub seed: u64,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub n: usize,
    pub trials: usize,
    pub sets: usize,
    pub theta_star: f64,
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub sigma: f64,
    /// Contamination rate of a t₅ contamination; 0 gives the conjugate model.
    pub p: f64,
    pub g_scale: f64,
    pub theta_grid: usize,
    pub x_grid: usize,
    pub phi_range: [f64; 2],
    pub tol: f64,
    pub slack: f64,
}

impl Default for VerifyProp1Config {
    fn default() -> Self {
        VerifyProp1Config {
            seed: 2024,
            workers: None,
            out: None,
            n: 20,
            trials: 100,
            sets: 200,
            theta_star: 0.5,
            prior_mean: 0.0,
            prior_sd: 1.0,
            sigma: 1.0,
            p: 0.0,
            g_scale: 5.0,
            theta_grid: 201,
            x_grid: 201,
            phi_range: [0.05, 0.6],
            tol: 1e-10,
            slack: 1e-6,
        }
    }
}

fn nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{what} must not be empty")));
    }
    Ok(())
}

fn rates_valid(n_grid: &[usize], exponent: f64, delta_factor: f64) -> Result<()> {
    for &n in n_grid {
        let p = contamination_rate(n, exponent);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!("rate rule gives p = {p} at n = {n}; need p in (0, 1)")));
        }
        let d = delta_for(n, delta_factor);
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::Config(format!("delta rule gives {d} at n = {n}; need (0, 1)")));
        }
    }
    Ok(())
}

fn check_quantile(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 100.0) {
        return Err(Error::Config(format!("quantile must lie in (0, 100), got {q}")));
    }
    Ok(())
}

fn check_repeats(k: usize, m: usize) -> Result<()> {
    if k < 10 {
        return Err(Error::Config(format!("repeats must be at least 10, got {k}")));
    }
    if m < 100 {
        return Err(Error::Config(format!("particles must be at least 100, got {m}")));
    }
    Ok(())
}

impl Table1Config {
    pub fn validate(&self) -> Result<()> {
        nonempty(&self.n_grid, "n_grid")?;
        rates_valid(&self.n_grid, self.p_exponent, self.delta_factor)?;
        check_quantile(self.quantile)?;
        check_repeats(self.repeats, self.particles)
    }
}

impl MeanBenchConfig {
    pub fn validate(&self) -> Result<()> {
        nonempty(&self.n_grid, "n_grid")?;
        nonempty(&self.methods, "methods")?;
        rates_valid(&self.n_grid, self.p_exponent, self.delta_factor)?;
        if let Some(e) = &self.epsilons {
            if e.len() != self.n_grid.len() {
                return Err(Error::Config("epsilons must have one entry per n_grid entry".into()));
            }
        }
        if self.epsilons.is_some() && self.table1_csv.is_some() {
            return Err(Error::Config("give epsilons or table1_csv, not both".into()));
        }
        for m in &self.methods {
            if !["bayes", "coinpress", "clipped", "gaussian"].contains(&m.as_str()) {
                return Err(Error::Config(format!("unknown method '{m}'")));
            }
        }
        if self.methods.iter().any(|m| m == "coinpress") {
            nonempty(&self.coinpress.iterations, "coinpress.iterations")?;
        }
        if self.datasets == 0 || self.repeats < 2 {
            return Err(Error::Config("need at least one dataset and two repeats per dataset".into()));
        }
        Ok(())
    }
}

impl RegressionDecayConfig {
    pub fn validate(&self) -> Result<()> {
        nonempty(&self.models, "models")?;
        nonempty(&self.dims, "dims")?;
        nonempty(&self.n_grid, "n_grid")?;
        nonempty(&self.contaminated, "contaminated")?;
        rates_valid(&self.n_grid, self.p_exponent, self.delta_factor)?;
        check_quantile(self.quantile)?;
        check_repeats(self.repeats, self.particles)?;
        if self.dims.iter().any(|&d| d == 0 || d > 16) {
            return Err(Error::Config("dims must lie in 1..=16".into()));
        }
        Ok(())
    }
}

impl FisherCheckConfig {
    pub fn validate(&self) -> Result<()> {
        nonempty(&self.p_grid, "p_grid")?;
        if self.p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("p_grid entries must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

impl VerifyProp1Config {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.sets == 0 {
            return Err(Error::Config("trials and sets must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::Config(format!("p must lie in [0, 1), got {}", self.p)));
        }
        Ok(())
    }
}

/// Parses a config, rejecting unknown keys.
pub fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_unknown_keys() {
        let c: Table1Config = parse("{}").unwrap();
        assert_eq!(c, Table1Config::default());
        let c: Table1Config = parse(r#"{"n_grid": [50], "task": {"sigma": 4.0}}"#).unwrap();
        assert_eq!(c.n_grid, vec![50]);
        assert_eq!(c.task.sigma, 4.0);
        assert_eq!(c.task.theta_star, 30.0);
        assert!(parse::<Table1Config>(r#"{"n_grd": [50]}"#).is_err());
        assert!(parse::<Table1Config>(r#"{"task": {"sgma": 1}}"#).is_err());
    }

    #[test]
    fn empty_grids_rejected() {
        let c = Table1Config {
            n_grid: vec![],
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let f = FisherCheckConfig {
            p_grid: vec![],
            ..Default::default()
        };
        assert!(matches!(f.validate(), Err(Error::Config(_))));
        let r = RegressionDecayConfig {
            n_grid: vec![1],
            ..Default::default()
        };
        assert!(r.validate().is_err());
    }

    #[test]
    fn rate_rules() {
        assert!((contamination_rate(1000, 0.125) - 0.421_696_503_428_582_3).abs() < 1e-12);
        assert_eq!(delta_for(5000, 10.0), 2e-5);
    }
}
