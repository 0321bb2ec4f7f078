//! Likelihood models, contamination densities and the contaminated mixture
//! `k_p(x; θ, w) = (1 − p)·f(x; θ, w) + p·g(x; w)`.
//!
//! Every base model is a single-index model: it depends on the parameter only
//! through the linear predictor `θᵀw` (or `θ₀` when a dataset carries no
//! covariates). The search routines in [`crate::privacy`] exploit this.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::special::{
    log_add_exp, norm_interval_mass, norm_pdf, sigmoid, softplus, student_t_cdf,
    student_t_ln_pdf, LN_SQRT_2PI,
};

/// Number of proposals tried by the rejection samplers before giving up.
pub const REJECTION_CAP: usize = 10_000;

/// Deterministic generator used by every seeded routine in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Support of a single observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservationDomain {
    /// The real line; quadrature treats it as `[-1e6, 1e6]` or maps it with `tan`.
    Real,
    /// `{0, 1}`.
    Binary,
    /// Closed interval `[lower, upper]`.
    Interval { lower: f64, upper: f64 },
}

impl ObservationDomain {
    pub const REAL_QUADRATURE_LIMIT: f64 = 1e6;

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            ObservationDomain::Real => x.is_finite(),
            ObservationDomain::Binary => x == 0.0 || x == 1.0,
            ObservationDomain::Interval { lower, upper } => x >= lower && x <= upper,
        }
    }
}

/// Observations with an optional covariate matrix (row-major, one row per observation).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<f64>,
    covariates: Option<Covariates>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    dim: usize,
    values: Vec<f64>,
}

impl Covariates {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::Config("covariate rows must be non-empty".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Config("covariate rows have unequal lengths".into()));
        }
        Ok(Covariates {
            dim,
            values: rows.concat(),
        })
    }

    /// `n` rows with a leading intercept column and the remaining entries
    /// i.i.d. uniform on `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Self {
        let mut values = Vec::with_capacity(n * dim);
        for _ in 0..n {
            values.push(1.0);
            for _ in 1..dim {
                values.push(rng.random_range(-1.0..=1.0));
            }
        }
        Covariates { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    fn truncate(&mut self, rows: usize) {
        self.values.truncate(rows * self.dim);
    }
}

impl Dataset {
    pub fn new(observations: Vec<f64>, covariates: Option<Covariates>) -> Result<Self> {
        if let Some(c) = &covariates {
            if c.rows() != observations.len() {
                return Err(Error::Config(format!(
                    "covariates have {} rows but there are {} observations",
                    c.rows(),
                    observations.len()
                )));
            }
        }
        Ok(Dataset {
            observations,
            covariates,
        })
    }

    /// Dataset without covariates.
    pub fn from_observations(observations: Vec<f64>) -> Self {
        Dataset {
            observations,
            covariates: None,
        }
    }

    pub fn empty() -> Self {
        Self::from_observations(Vec::new())
    }

    /// Checks the simulation assumptions: covariate sup-norm at most 1 and an
    /// all-ones first column.
    pub fn check_simulation_covariates(&self) -> Result<()> {
        if let Some(c) = &self.covariates {
            for i in 0..c.rows() {
                let row = c.row(i);
                if row[0] != 1.0 {
                    return Err(Error::Config(format!("row {i}: intercept column is not 1")));
                }
                if row.iter().any(|v| v.abs() > 1.0) {
                    return Err(Error::Config(format!("row {i}: covariate exceeds 1 in absolute value")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn covariates(&self) -> Option<&Covariates> {
        self.covariates.as_ref()
    }

    pub fn row(&self, i: usize) -> Option<&[f64]> {
        self.covariates.as_ref().map(|c| c.row(i))
    }

    pub fn get(&self, i: usize) -> (f64, Option<&[f64]>) {
        (self.observations[i], self.row(i))
    }

    /// Copy with the last datum removed, plus the removed datum.
    pub fn split_last(&self) -> Option<(Dataset, (f64, Option<Vec<f64>>))> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        let last = (self.observations[n - 1], self.row(n - 1).map(<[f64]>::to_vec));
        let mut rest = self.clone();
        rest.observations.truncate(n - 1);
        if let Some(c) = rest.covariates.as_mut() {
            c.truncate(n - 1);
        }
        Some((rest, last))
    }

    /// Same covariates, new observations.
    pub fn with_observations(&self, observations: Vec<f64>) -> Result<Self> {
        Dataset::new(observations, self.covariates.clone())
    }
}

/// Linear predictor `θᵀw`, or `θ₀` when there is no covariate row.
#[inline]
pub fn linear_predictor(theta: &[f64], w: Option<&[f64]>) -> f64 {
    match w {
        Some(w) => theta.iter().zip(w).map(|(a, b)| a * b).sum(),
        None => theta[0],
    }
}

/// Base likelihood `f(x; θ, w)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LikelihoodModel {
    /// `x ~ N(θᵀw, σ²)`.
    GaussianLinear { sigma: f64, dim: usize },
    /// `x ~ Bernoulli(1 / (1 + exp(-θᵀw)))`.
    Logistic { dim: usize },
    /// `x ~ Cauchy(θᵀw, 1)`.
    CauchyRegression { dim: usize },
    /// `x ~ N(θ, σ²)` truncated to `[lower, upper]`; scalar parameter.
    TruncatedNormalMean { sigma: f64, lower: f64, upper: f64 },
}

/// Quantities that depend only on the linear predictor; computed once and
/// reused across observations sharing it.
#[derive(Debug, Clone, Copy)]
pub struct PredictorTerms {
    pub lin: f64,
    log_norm: f64,
    dlog_norm: f64,
}

impl LikelihoodModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LikelihoodModel::GaussianLinear { sigma, dim } => {
                if !(sigma > 0.0) {
                    return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
                }
                if dim == 0 {
                    return Err(Error::Config("parameter dimension must be at least 1".into()));
                }
            }
            LikelihoodModel::Logistic { dim } | LikelihoodModel::CauchyRegression { dim } => {
                if dim == 0 {
                    return Err(Error::Config("parameter dimension must be at least 1".into()));
                }
            }
            LikelihoodModel::TruncatedNormalMean { sigma, lower, upper } => {
                if !(sigma > 0.0) {
                    return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
                }
                if !(lower < upper) {
                    return Err(Error::Config(format!(
                        "truncation bounds must satisfy l < u, got [{lower}, {upper}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LikelihoodModel::GaussianLinear { .. } => "gaussian-linear",
            LikelihoodModel::Logistic { .. } => "logistic",
            LikelihoodModel::CauchyRegression { .. } => "cauchy-regression",
            LikelihoodModel::TruncatedNormalMean { .. } => "truncated-normal-mean",
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            LikelihoodModel::GaussianLinear { dim, .. }
            | LikelihoodModel::Logistic { dim }
            | LikelihoodModel::CauchyRegression { dim } => dim,
            LikelihoodModel::TruncatedNormalMean { .. } => 1,
        }
    }

    pub fn domain(&self) -> ObservationDomain {
        match *self {
            LikelihoodModel::GaussianLinear { .. } | LikelihoodModel::CauchyRegression { .. } => {
                ObservationDomain::Real
            }
            LikelihoodModel::Logistic { .. } => ObservationDomain::Binary,
            LikelihoodModel::TruncatedNormalMean { lower, upper, .. } => {
                ObservationDomain::Interval { lower, upper }
            }
        }
    }

    /// Noise scale used to size search intervals over unbounded observation spaces.
    pub fn noise_scale(&self) -> f64 {
        match *self {
            LikelihoodModel::GaussianLinear { sigma, .. }
            | LikelihoodModel::TruncatedNormalMean { sigma, .. } => sigma,
            LikelihoodModel::Logistic { .. } | LikelihoodModel::CauchyRegression { .. } => 1.0,
        }
    }

    pub fn terms(&self, lin: f64) -> PredictorTerms {
        match *self {
            LikelihoodModel::TruncatedNormalMean { sigma, lower, upper } => {
                let a = (lower - lin) / sigma;
                let b = (upper - lin) / sigma;
                let mass = norm_interval_mass(a, b);
                PredictorTerms {
                    lin,
                    log_norm: mass.ln(),
                    dlog_norm: (norm_pdf(a) - norm_pdf(b)) / (sigma * mass),
                }
            }
            _ => PredictorTerms {
                lin,
                log_norm: 0.0,
                dlog_norm: 0.0,
            },
        }
    }

    /// `log f(x; lin)` without domain checks.
    #[inline]
    pub fn log_pdf_at(&self, x: f64, t: &PredictorTerms) -> f64 {
        let lin = t.lin;
        match *self {
            LikelihoodModel::GaussianLinear { sigma, .. } => {
                let z = (x - lin) / sigma;
                -0.5 * z * z - LN_SQRT_2PI - sigma.ln()
            }
            LikelihoodModel::Logistic { .. } => {
                // x·log σ(t) + (1 − x)·log σ(−t)
                -x * softplus(-lin) - (1.0 - x) * softplus(lin)
            }
            LikelihoodModel::CauchyRegression { .. } => {
                let r = x - lin;
                -std::f64::consts::PI.ln() - (r * r).ln_1p()
            }
            LikelihoodModel::TruncatedNormalMean { sigma, .. } => {
                let z = (x - lin) / sigma;
                -0.5 * z * z - LN_SQRT_2PI - sigma.ln() - t.log_norm
            }
        }
    }

    /// `∂ log f / ∂ lin`.
    #[inline]
    pub fn score_at(&self, x: f64, t: &PredictorTerms) -> f64 {
        let lin = t.lin;
        match *self {
            LikelihoodModel::GaussianLinear { sigma, .. } => (x - lin) / (sigma * sigma),
            LikelihoodModel::Logistic { .. } => x - sigmoid(lin),
            LikelihoodModel::CauchyRegression { .. } => {
                let r = x - lin;
                2.0 * r / (1.0 + r * r)
            }
            LikelihoodModel::TruncatedNormalMean { sigma, .. } => {
                (x - lin) / (sigma * sigma) - t.dlog_norm
            }
        }
    }

    pub fn log_pdf(&self, x: f64, lin: f64) -> f64 {
        self.log_pdf_at(x, &self.terms(lin))
    }

    pub fn sample<R: Rng + ?Sized>(&self, lin: f64, rng: &mut R) -> Result<f64> {
        match *self {
            LikelihoodModel::GaussianLinear { sigma, .. } => {
                let z: f64 = rng.sample(StandardNormal);
                Ok(lin + sigma * z)
            }
            LikelihoodModel::Logistic { .. } => {
                Ok(if rng.random::<f64>() < sigmoid(lin) { 1.0 } else { 0.0 })
            }
            LikelihoodModel::CauchyRegression { .. } => {
                let u: f64 = rng.random();
                Ok(lin + (std::f64::consts::PI * (u - 0.5)).tan())
            }
            LikelihoodModel::TruncatedNormalMean { sigma, lower, upper } => {
                let normal = Normal::new(lin, sigma)
                    .map_err(|e| Error::Config(format!("invalid normal: {e}")))?;
                for _ in 0..REJECTION_CAP {
                    let x = normal.sample(rng);
                    if x >= lower && x <= upper {
                        return Ok(x);
                    }
                }
                Err(Error::Sampler(format!(
                    "truncated normal on [{lower}, {upper}] at mean {lin}: no acceptance in {REJECTION_CAP} proposals"
                )))
            }
        }
    }
}

/// Where a contamination density is centred.
#[derive(Debug, Clone, PartialEq)]
pub enum Location {
    /// The same centre for every datum.
    Global(f64),
    /// Centred at `θ*ᵀw` for each datum's covariate row.
    Predictor(Vec<f64>),
}

impl Location {
    #[inline]
    pub fn at(&self, w: Option<&[f64]>) -> f64 {
        match self {
            Location::Global(c) => *c,
            Location::Predictor(theta) => linear_predictor(theta, w),
        }
    }
}

/// Contamination density `g(x; w)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ContaminationDensity {
    /// Location-scale Student-t.
    StudentT { nu: f64, scale: f64, location: Location },
    /// Location-scale Student-t restricted to `[lower, upper]`.
    TruncatedStudentT {
        nu: f64,
        scale: f64,
        location: Location,
        lower: f64,
        upper: f64,
    },
    /// Cauchy with scale `λ`.
    Cauchy { scale: f64, location: Location },
    /// Fair coin on `{0, 1}`.
    BernoulliHalf,
}

impl ContaminationDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            ContaminationDensity::StudentT { nu, scale, .. } => {
                if !(*nu > 0.0 && *scale > 0.0) {
                    return Err(Error::Config("Student-t needs nu > 0 and scale > 0".into()));
                }
            }
            ContaminationDensity::TruncatedStudentT {
                nu, scale, lower, upper, ..
            } => {
                if !(*nu > 0.0 && *scale > 0.0) {
                    return Err(Error::Config("Student-t needs nu > 0 and scale > 0".into()));
                }
                if !(lower < upper) {
                    return Err(Error::Config("truncation bounds must satisfy l < u".into()));
                }
            }
            ContaminationDensity::Cauchy { scale, .. } => {
                if !(*scale > 0.0) {
                    return Err(Error::Config("Cauchy scale must be positive".into()));
                }
            }
            ContaminationDensity::BernoulliHalf => {}
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ContaminationDensity::StudentT { .. } => "student-t",
            ContaminationDensity::TruncatedStudentT { .. } => "truncated-student-t",
            ContaminationDensity::Cauchy { .. } => "cauchy-scale",
            ContaminationDensity::BernoulliHalf => "bernoulli-half",
        }
    }

    pub fn domain(&self) -> ObservationDomain {
        match *self {
            ContaminationDensity::StudentT { .. } | ContaminationDensity::Cauchy { .. } => {
                ObservationDomain::Real
            }
            ContaminationDensity::TruncatedStudentT { lower, upper, .. } => {
                ObservationDomain::Interval { lower, upper }
            }
            ContaminationDensity::BernoulliHalf => ObservationDomain::Binary,
        }
    }

    /// `log g(x; w)`; `-inf` outside the support.
    pub fn log_pdf(&self, x: f64, w: Option<&[f64]>) -> f64 {
        match self {
            ContaminationDensity::StudentT { nu, scale, location } => {
                student_t_ln_pdf((x - location.at(w)) / scale, *nu) - scale.ln()
            }
            ContaminationDensity::TruncatedStudentT {
                nu,
                scale,
                location,
                lower,
                upper,
            } => {
                if x < *lower || x > *upper {
                    return f64::NEG_INFINITY;
                }
                let loc = location.at(w);
                let mass = student_t_cdf((upper - loc) / scale, *nu)
                    - student_t_cdf((lower - loc) / scale, *nu);
                student_t_ln_pdf((x - loc) / scale, *nu) - scale.ln() - mass.ln()
            }
            ContaminationDensity::Cauchy { scale, location } => {
                let r = (x - location.at(w)) / scale;
                -(std::f64::consts::PI * scale).ln() - (r * r).ln_1p()
            }
            ContaminationDensity::BernoulliHalf => {
                if x == 0.0 || x == 1.0 {
                    -std::f64::consts::LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, w: Option<&[f64]>, rng: &mut R) -> Result<f64> {
        match self {
            ContaminationDensity::StudentT { nu, scale, location } => {
                let t = StudentT::new(*nu).map_err(|e| Error::Config(format!("{e}")))?;
                Ok(location.at(w) + scale * t.sample(rng))
            }
            ContaminationDensity::TruncatedStudentT {
                nu,
                scale,
                location,
                lower,
                upper,
            } => {
                let t = StudentT::new(*nu).map_err(|e| Error::Config(format!("{e}")))?;
                let loc = location.at(w);
                for _ in 0..REJECTION_CAP {
                    let x = loc + scale * t.sample(rng);
                    if x >= *lower && x <= *upper {
                        return Ok(x);
                    }
                }
                Err(Error::Sampler(format!(
                    "truncated Student-t on [{lower}, {upper}] at {loc}: no acceptance in {REJECTION_CAP} proposals"
                )))
            }
            ContaminationDensity::Cauchy { scale, location } => {
                let u: f64 = rng.random();
                Ok(location.at(w) + scale * (std::f64::consts::PI * (u - 0.5)).tan())
            }
            ContaminationDensity::BernoulliHalf => Ok(if rng.random::<bool>() { 1.0 } else { 0.0 }),
        }
    }
}

/// The contaminated likelihood `k_p = (1 − p)·f + p·g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminatedModel {
    base: LikelihoodModel,
    contamination: ContaminationDensity,
    p: f64,
    log_keep: f64,
    log_p: f64,
}

impl ContaminatedModel {
    pub fn new(base: LikelihoodModel, contamination: ContaminationDensity, p: f64) -> Result<Self> {
        base.validate()?;
        contamination.validate()?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("contamination rate must lie in [0, 1], got {p}")));
        }
        Ok(ContaminatedModel {
            base,
            contamination,
            p,
            log_keep: (-p).ln_1p(),
            log_p: p.ln(),
        })
    }

    pub fn base(&self) -> &LikelihoodModel {
        &self.base
    }

    pub fn contamination(&self) -> &ContaminationDensity {
        &self.contamination
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn domain(&self) -> ObservationDomain {
        self.base.domain()
    }

    /// Same base and contamination, different rate.
    pub fn with_rate(&self, p: f64) -> Result<Self> {
        ContaminatedModel::new(self.base.clone(), self.contamination.clone(), p)
    }

    /// `log p + log g(x; w)`: the θ-free half of the mixture, cached by callers.
    #[inline]
    pub fn log_contam_term(&self, x: f64, w: Option<&[f64]>) -> f64 {
        if self.p == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.log_p + self.contamination.log_pdf(x, w)
        }
    }

    /// `log k_p` from precomputed predictor terms and θ-free contamination term.
    #[inline]
    pub fn log_density_fast(&self, x: f64, terms: &PredictorTerms, log_contam: f64) -> f64 {
        if self.p == 1.0 {
            return log_contam;
        }
        log_add_exp(self.log_keep + self.base.log_pdf_at(x, terms), log_contam)
    }

    /// `(log k_p, ∂ log k_p / ∂ lin)`.
    #[inline]
    pub fn log_density_and_score(
        &self,
        x: f64,
        terms: &PredictorTerms,
        log_contam: f64,
    ) -> (f64, f64) {
        if self.p == 1.0 {
            return (log_contam, 0.0);
        }
        let log_base = self.log_keep + self.base.log_pdf_at(x, terms);
        let log_k = log_add_exp(log_base, log_contam);
        let resp = (log_base - log_k).exp();
        (log_k, resp * self.base.score_at(x, terms))
    }

    fn check(&self, x: f64, w: Option<&[f64]>, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Domain(format!(
                "parameter has dimension {}, model expects {}",
                theta.len(),
                self.dim()
            )));
        }
        if let Some(w) = w {
            if w.len() != theta.len() {
                return Err(Error::Domain("covariate row and parameter differ in length".into()));
            }
        }
        if !self.domain().contains(x) {
            return Err(Error::Domain(format!(
                "observation {x} outside the {} observation domain",
                self.base.kind()
            )));
        }
        Ok(())
    }

    /// `log k_p(x; θ, w)`.
    pub fn log_density(&self, x: f64, w: Option<&[f64]>, theta: &[f64]) -> Result<f64> {
        self.check(x, w, theta)?;
        let terms = self.base.terms(linear_predictor(theta, w));
        let v = self.log_density_fast(x, &terms, self.log_contam_term(x, w));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("log density is not finite at x = {x}")))
        }
    }

    /// `log d(x; θ) = log k_p(x; θ) − log k_p(x; θ_ref)`.
    pub fn log_likelihood_ratio(
        &self,
        x: f64,
        w: Option<&[f64]>,
        theta: &[f64],
        theta_ref: &[f64],
    ) -> Result<f64> {
        if theta == theta_ref {
            self.check(x, w, theta)?;
            return Ok(0.0);
        }
        Ok(self.log_density(x, w, theta)? - self.log_density(x, w, theta_ref)?)
    }

    /// `d(x; θ) = k_p(x; θ) / k_p(x; θ_ref)`.
    pub fn likelihood_ratio(
        &self,
        x: f64,
        w: Option<&[f64]>,
        theta: &[f64],
        theta_ref: &[f64],
    ) -> Result<f64> {
        Ok(self.log_likelihood_ratio(x, w, theta, theta_ref)?.exp())
    }

    /// Replaces each observation with probability `p` by a draw from `g`.
    pub fn contaminate(&self, data: &Dataset, seed: u64) -> Result<Dataset> {
        self.contaminate_with(data, &mut rng_from_seed(seed)).map(|(d, _)| d)
    }

    /// Contaminates with an external generator; also returns the replaced indices.
    pub fn contaminate_with<R: Rng + ?Sized>(
        &self,
        data: &Dataset,
        rng: &mut R,
    ) -> Result<(Dataset, Vec<usize>)> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::Config(format!(
                "contamination requires p in [0, 1), got {}",
                self.p
            )));
        }
        let mut obs = data.observations().to_vec();
        let mut replaced = Vec::new();
        for (i, x) in obs.iter_mut().enumerate() {
            if rng.random::<f64>() < self.p {
                *x = self.contamination.sample(data.row(i), rng)?;
                replaced.push(i);
            }
        }
        Ok((data.with_observations(obs)?, replaced))
    }
}

/// Draws `n` observations from `f(·; θ*, wᵢ)`. When `covariates` is `None`
/// the model must be one-dimensional.
pub fn sample_dataset(
    model: &LikelihoodModel,
    theta_star: &[f64],
    covariates: Option<Covariates>,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    sample_dataset_with(model, theta_star, covariates, n, &mut rng_from_seed(seed))
}

pub fn sample_dataset_with<R: RngCore + ?Sized>(
    model: &LikelihoodModel,
    theta_star: &[f64],
    covariates: Option<Covariates>,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    model.validate()?;
    if n == 0 {
        return Err(Error::Config("dataset size must be at least 1".into()));
    }
    if theta_star.len() != model.dim() {
        return Err(Error::Config(format!(
            "true parameter has dimension {}, model expects {}",
            theta_star.len(),
            model.dim()
        )));
    }
    match &covariates {
        Some(c) if c.dim() != model.dim() => {
            return Err(Error::Config("covariate dimension does not match the model".into()))
        }
        None if model.dim() != 1 => {
            return Err(Error::Config("multi-dimensional models need covariates".into()))
        }
        _ => {}
    }
    let mut obs = Vec::with_capacity(n);
    for i in 0..n {
        let w = covariates.as_ref().map(|c| c.row(i));
        obs.push(model.sample(linear_predictor(theta_star, w), rng)?);
    }
    Dataset::new(obs, covariates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_real, QuadConfig};

    fn logistic(p: f64) -> ContaminatedModel {
        ContaminatedModel::new(
            LikelihoodModel::Logistic { dim: 1 },
            ContaminationDensity::BernoulliHalf,
            p,
        )
        .unwrap()
    }

    fn truncated(p: f64) -> ContaminatedModel {
        ContaminatedModel::new(
            LikelihoodModel::TruncatedNormalMean {
                sigma: 8.0,
                lower: -270.0,
                upper: 330.0,
            },
            ContaminationDensity::TruncatedStudentT {
                nu: 5.0,
                scale: 8.0,
                location: Location::Global(30.0),
                lower: -270.0,
                upper: 330.0,
            },
            p,
        )
        .unwrap()
    }

    #[test]
    fn gaussian_mode_log_density() {
        let m = ContaminatedModel::new(
            LikelihoodModel::GaussianLinear { sigma: 1.0, dim: 1 },
            ContaminationDensity::StudentT {
                nu: 5.0,
                scale: 5.0,
                location: Location::Global(0.0),
            },
            0.0,
        )
        .unwrap();
        let v = m.log_density(0.0, Some(&[1.0]), &[0.0]).unwrap();
        assert!((v + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn full_contamination_ignores_theta() {
        let m = truncated(1.0);
        let g = m.contamination().log_pdf(12.0, None);
        for th in [-5.0, 30.0, 100.0] {
            assert!((m.log_density(12.0, None, &[th]).unwrap() - g).abs() < 1e-14);
            assert_eq!(m.likelihood_ratio(12.0, None, &[th], &[30.0]).unwrap(), 1.0);
        }
    }

    #[test]
    fn logistic_half_mixture() {
        let m = logistic(0.5);
        let v = m.log_density(1.0, Some(&[1.0]), &[0.0]).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn logistic_ratio_hand_value() {
        let m = logistic(0.5);
        let d = m
            .likelihood_ratio(1.0, Some(&[1.0]), &[0.0], &[3f64.ln()])
            .unwrap();
        // brute force: k(1; t) = 0.5·σ(t) + 0.25
        let k = |t: f64| 0.5 / (1.0 + (-t).exp()) + 0.25;
        assert!((d - k(0.0) / k(3f64.ln())).abs() < 1e-14);
        assert!((d - 0.8).abs() < 1e-14);
    }

    #[test]
    fn out_of_support_is_domain_error() {
        let m = truncated(0.3);
        assert!(matches!(m.log_density(400.0, None, &[30.0]), Err(Error::Domain(_))));
        assert!(matches!(
            logistic(0.2).log_density(0.5, Some(&[1.0]), &[0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn contaminate_p_zero_is_identity() {
        let m = truncated(0.0);
        let data = sample_dataset(m.base(), &[30.0], None, 50, 3).unwrap();
        assert_eq!(m.contaminate(&data, 9).unwrap(), data);
    }

    #[test]
    fn contaminate_rejects_p_one() {
        let m = truncated(1.0);
        let data = Dataset::from_observations(vec![1.0]);
        assert!(matches!(m.contaminate(&data, 1), Err(Error::Config(_))));
    }

    #[test]
    fn contaminate_nearly_all_stays_in_bounds() {
        let m = truncated(0.999_999);
        let data = sample_dataset(m.base(), &[30.0], None, 2000, 5).unwrap();
        let (out, replaced) = m.contaminate_with(&data, &mut rng_from_seed(2)).unwrap();
        assert_eq!(replaced.len(), 2000);
        assert!(out.observations().iter().all(|x| (-270.0..=330.0).contains(x)));
    }

    #[test]
    fn contaminate_replaced_fraction_band() {
        let m = truncated(0.2);
        let data = sample_dataset(m.base(), &[30.0], None, 10_000, 11).unwrap();
        let (out, replaced) = m.contaminate_with(&data, &mut rng_from_seed(12)).unwrap();
        let frac = replaced.len() as f64 / 10_000.0;
        assert!((0.184..=0.216).contains(&frac), "fraction {frac}");
        assert_eq!(out.len(), 10_000);
    }

    #[test]
    fn misconfigured_truncation_is_sampler_error() {
        let g = ContaminationDensity::TruncatedStudentT {
            nu: 5.0,
            scale: 1.0,
            location: Location::Global(0.0),
            lower: 1000.0,
            upper: 1001.0,
        };
        assert!(matches!(g.sample(None, &mut rng_from_seed(0)), Err(Error::Sampler(_))));
    }

    #[test]
    fn truncated_normal_sample_mean_band() {
        let m = LikelihoodModel::TruncatedNormalMean {
            sigma: 8.0,
            lower: -270.0,
            upper: 330.0,
        };
        let n = 100_000;
        let data = sample_dataset(&m, &[30.0], None, n, 21).unwrap();
        let mean = data.observations().iter().sum::<f64>() / n as f64;
        assert!((mean - 30.0).abs() < 4.0 * 8.0 / (n as f64).sqrt(), "mean {mean}");
        assert!(data.observations().iter().all(|x| (-270.0..=330.0).contains(x)));
    }

    #[test]
    fn logistic_zero_predictor_balance() {
        let m = LikelihoodModel::Logistic { dim: 2 };
        let rows: Vec<Vec<f64>> = (0..10_000).map(|_| vec![1.0, 0.0]).collect();
        let cov = Covariates::from_rows(&rows).unwrap();
        let data = sample_dataset(&m, &[0.0, 0.7], Some(cov), 10_000, 8).unwrap();
        let ones = data.observations().iter().filter(|&&x| x == 1.0).count() as f64 / 1e4;
        assert!((0.48..=0.52).contains(&ones), "fraction {ones}");
    }

    #[test]
    fn single_draw_dataset() {
        let m = LikelihoodModel::TruncatedNormalMean {
            sigma: 8.0,
            lower: -270.0,
            upper: 330.0,
        };
        let d = sample_dataset(&m, &[30.0], None, 1, 0).unwrap();
        assert_eq!(d.len(), 1);
        assert!(m.domain().contains(d.observations()[0]));
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        let bad = LikelihoodModel::TruncatedNormalMean {
            sigma: 1.0,
            lower: 2.0,
            upper: 2.0,
        };
        assert!(matches!(sample_dataset(&bad, &[0.0], None, 5, 0), Err(Error::Config(_))));
        let bad = LikelihoodModel::GaussianLinear { sigma: 0.0, dim: 1 };
        assert!(matches!(sample_dataset(&bad, &[0.0], None, 5, 0), Err(Error::Config(_))));
    }

    #[test]
    fn random_covariates_satisfy_simulation_assumptions() {
        let cov = Covariates::random(200, 5, &mut rng_from_seed(4));
        let data = Dataset::new(vec![0.0; 200], Some(cov)).unwrap();
        data.check_simulation_covariates().unwrap();
        assert!(Dataset::new(vec![0.0; 3], Some(Covariates::random(2, 2, &mut rng_from_seed(0)))).is_err());
    }

    #[test]
    fn split_last_drops_final_row() {
        let cov = Covariates::from_rows(&[vec![1.0, 0.1], vec![1.0, -0.4]]).unwrap();
        let data = Dataset::new(vec![3.0, 4.0], Some(cov)).unwrap();
        let (rest, (x, w)) = data.split_last().unwrap();
        assert_eq!(x, 4.0);
        assert_eq!(w.unwrap(), vec![1.0, -0.4]);
        assert_eq!(rest.len(), 1);
        assert_eq!(rest.row(0).unwrap(), &[1.0, 0.1]);
    }

    #[test]
    fn densities_normalize() {
        let cfg = QuadConfig::with_tol(1e-10);
        let w = [1.0, -0.3, 0.8];
        let theta = [0.4, 1.2, -0.7];
        let p = 0.3;
        let student = ContaminationDensity::StudentT {
            nu: 5.0,
            scale: 5.0,
            location: Location::Predictor(vec![0.5, 1.0, -1.0]),
        };
        let lin = ContaminatedModel::new(LikelihoodModel::GaussianLinear { sigma: 1.0, dim: 3 }, student, p).unwrap();
        let cauchy = ContaminatedModel::new(
            LikelihoodModel::CauchyRegression { dim: 3 },
            ContaminationDensity::Cauchy {
                scale: 5.0,
                location: Location::Predictor(vec![0.5, 1.0, -1.0]),
            },
            p,
        )
        .unwrap();
        for m in [&lin, &cauchy] {
            let mass = integrate_real(
                |x| m.log_density(x, Some(&w), &theta).unwrap().exp(),
                0.0,
                1.0,
                &cfg,
            )
            .unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "{} mass {mass}", m.base().kind());
        }
        let tn = truncated(p);
        let mass = integrate(|x| tn.log_density(x, None, &[25.0]).unwrap().exp(), -270.0, 330.0, &QuadConfig {
            initial_panels: 64,
            ..cfg
        })
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "truncated mass {mass}");
        let lg = logistic(p);
        let mass: f64 = [0.0, 1.0]
            .iter()
            .map(|&x| lg.log_density(x, Some(&[1.0]), &[0.9]).unwrap().exp())
            .sum();
        assert!((mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_score_matches_finite_difference() {
        let m = LikelihoodModel::TruncatedNormalMean {
            sigma: 8.0,
            lower: 0.0,
            upper: 20.0,
        };
        for &(x, t) in &[(3.0, 1.0), (17.0, 22.0), (10.0, 10.0)] {
            let h = 1e-5;
            let fd = (m.log_pdf(x, t + h) - m.log_pdf(x, t - h)) / (2.0 * h);
            let an = m.score_at(x, &m.terms(t));
            assert!((fd - an).abs() < 1e-7, "x={x} t={t}: {fd} vs {an}");
        }
    }
}
