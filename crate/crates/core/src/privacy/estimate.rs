//! Empirical (ε, δ) estimation: one repeat of the procedure, and the
//! percentile over many independent repeats.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{
    importance_sample, laplace_approximation, map_estimate, reweight_drop_last, GaussianPrior, LaplaceOptions,
    MapOptions,
};
use crate::models::{rng_from_seed, sample_dataset_with, ContaminatedModel, Covariates, Dataset, LikelihoodModel};

use super::bounds::{choose_phi, eta_bound, expectation_ratio, NeighbourhoodBox};
use super::search::{CovariateDomain, SearchOptions};

/// Where the neighbourhood box is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxCenter {
    TrueParameter,
    Map,
}

/// Everything a repeat needs besides its seed.
#[derive(Debug, Clone)]
pub struct EpsilonSetup {
    pub model: ContaminatedModel,
    pub prior: GaussianPrior,
    pub theta_star: Vec<f64>,
    pub n: usize,
    pub delta: f64,
    /// Importance-sampling particles `m`.
    pub particles: usize,
    pub center: BoxCenter,
    pub search: SearchOptions,
    pub map: MapOptions,
}

impl EpsilonSetup {
    pub fn new(model: ContaminatedModel, prior: GaussianPrior, theta_star: Vec<f64>, n: usize, delta: f64) -> Self {
        EpsilonSetup {
            model,
            prior,
            theta_star,
            n,
            delta,
            particles: 2000,
            center: BoxCenter::TrueParameter,
            search: SearchOptions::default(),
            map: MapOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.model.dim();
        if self.prior.dim() != d || self.theta_star.len() != d {
            return Err(Error::Config("prior, true parameter and model dimensions differ".into()));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(0.0..1.0).contains(&self.model.p()) {
            return Err(Error::Config(format!("p must lie in [0, 1), got {}", self.model.p())));
        }
        Ok(())
    }

    fn has_covariates(&self) -> bool {
        !matches!(self.model.base(), LikelihoodModel::TruncatedNormalMean { .. })
    }

    /// Covariate rows searched by the ratio bounds.
    pub fn covariate_domain(&self) -> CovariateDomain {
        if self.has_covariates() {
            CovariateDomain::Corners(self.model.dim())
        } else {
            CovariateDomain::None
        }
    }

    /// Draws a fresh uncontaminated dataset from `f(·; θ*)`.
    pub fn generate<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Dataset> {
        let cov = self
            .has_covariates()
            .then(|| Covariates::random(self.n, self.model.dim(), rng));
        sample_dataset_with(self.model.base(), &self.theta_star, cov, self.n, rng)
    }
}

/// Diagnostics of one successful repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatOutcome {
    pub epsilon: f64,
    pub log_eta: f64,
    pub log_alpha: f64,
    pub log_beta: f64,
    pub phi: f64,
    pub delta_hat: f64,
    pub map: Vec<f64>,
    pub ess: f64,
    pub ess_loo: f64,
    pub contaminated: usize,
    pub laplace_jitter: f64,
    /// A search optimum landed on the edge of a truncated observation interval.
    pub boundary_witness: bool,
}

/// One repeat. Uses `data` (uncontaminated) when supplied, otherwise draws it.
pub fn estimate_epsilon_once(setup: &EpsilonSetup, data: Option<&Dataset>, seed: u64) -> Result<RepeatOutcome> {
    setup.validate()?;
    let model = &setup.model;
    let mut rng = rng_from_seed(seed);
    let clean = match data {
        Some(d) => d.clone(),
        None => setup.generate(&mut rng)?,
    };
    if clean.len() < 2 {
        return Err(Error::Config("need at least two observations".into()));
    }
    let (data, replaced) = model.contaminate_with(&clean, &mut rng)?;

    let map = map_estimate(model, &setup.prior, &data, setup.prior.mean(), &setup.map)?;
    let laplace = laplace_approximation(
        model,
        &setup.prior,
        &data,
        &map.theta,
        &LaplaceOptions {
            grad_tol: setup.map.tol.max(1e-6) * 10.0,
        },
    )?;
    let cloud = importance_sample(model, &setup.prior, &data, &laplace, setup.particles, rng.random())?;
    if cloud.is_degenerate() {
        return Err(Error::Degenerate(format!("full-posterior ESS {:.1}", cloud.ess())));
    }

    let center = match setup.center {
        BoxCenter::TrueParameter => setup.theta_star.clone(),
        BoxCenter::Map => map.theta.clone(),
    };
    let (phi, delta_hat) = choose_phi(&cloud, &center, setup.delta)?;
    let bx = NeighbourhoodBox::new(center.clone(), phi)?;
    let covs = setup.covariate_domain();
    let eta = eta_bound(model, &bx, &center, &covs, &setup.search)?;

    let (_, (x_last, w_last)) = data.split_last().expect("dataset is non-empty");
    let loo = reweight_drop_last(&cloud, model, (x_last, w_last.as_deref()))?;
    if loo.is_degenerate() {
        return Err(Error::Degenerate(format!("leave-last-out ESS {:.1}", loo.ess())));
    }
    let ratio = expectation_ratio(&loo, model, &center, &covs, &setup.search)?;

    let epsilon = eta.log_eta() + ratio.log_alpha - ratio.log_beta;
    if !epsilon.is_finite() {
        return Err(Error::Numerical(format!("non-finite epsilon estimate {epsilon}")));
    }
    if epsilon < -1e-9 {
        return Err(Error::Numerical(format!("negative epsilon estimate {epsilon:e}")));
    }
    Ok(RepeatOutcome {
        epsilon: epsilon.max(0.0),
        log_eta: eta.log_eta(),
        log_alpha: ratio.log_alpha,
        log_beta: ratio.log_beta,
        phi,
        delta_hat,
        map: map.theta,
        ess: cloud.ess(),
        ess_loo: loo.ess(),
        contaminated: replaced.len(),
        laplace_jitter: laplace.jitter,
        boundary_witness: eta.boundary_witness || ratio.boundary_witness,
    })
}

/// Seed of repeat `k`: the first word of stream `k` of a ChaCha8 generator
/// keyed by the master seed.
pub fn repeat_seed(master: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k);
    rng.next_u64()
}

/// Element at nearest rank `⌈q/100 · N⌉` of the ascending sort.
pub fn percentile_nearest_rank(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("percentile of an empty sample".into()));
    }
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::Domain(format!("percentile level must lie in (0, 100], got {q}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone)]
pub struct RepeatRecord {
    pub index: usize,
    pub seed: u64,
    pub outcome: std::result::Result<RepeatOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct EpsilonEstimate {
    pub n: usize,
    pub p: f64,
    pub delta: f64,
    pub q: f64,
    /// Reported q-th percentile of the valid repeats.
    pub epsilon: f64,
    pub repeats: Vec<RepeatRecord>,
}

impl EpsilonEstimate {
    /// Per-repeat ε̂, `None` for invalid repeats.
    pub fn values(&self) -> Vec<Option<f64>> {
        self.repeats
            .iter()
            .map(|r| r.outcome.as_ref().ok().map(|o| o.epsilon))
            .collect()
    }

    pub fn valid_values(&self) -> Vec<f64> {
        self.values().into_iter().flatten().collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        self.repeats
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|o| o.phi))
            .collect()
    }

    pub fn invalid(&self) -> usize {
        self.repeats.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn valid(&self) -> usize {
        self.repeats.len() - self.invalid()
    }

    /// Percentile at another level over the same repeats.
    pub fn at_level(&self, q: f64) -> Result<f64> {
        percentile_nearest_rank(&self.valid_values(), q)
    }
}

/// Runs `k` independent repeats on `workers` threads and reports the q-th
/// percentile of the valid ones. More than 10% invalid repeats is an error.
pub fn estimate_epsilon(setup: &EpsilonSetup, k: usize, q: f64, master_seed: u64, workers: usize) -> Result<EpsilonEstimate> {
    setup.validate()?;
    if k < 10 {
        return Err(Error::Config(format!("need at least 10 repeats, got {k}")));
    }
    if !(q > 0.0 && q < 100.0) {
        return Err(Error::Config(format!("percentile level must lie in (0, 100), got {q}")));
    }
    let run = |i: usize| {
        let seed = repeat_seed(master_seed, i as u64);
        RepeatRecord {
            index: i,
            seed,
            outcome: estimate_epsilon_once(setup, None, seed).map_err(|e| e.to_string()),
        }
    };
    let repeats: Vec<RepeatRecord> = if workers <= 1 {
        (0..k).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| (0..k).into_par_iter().map(run).collect())
    };
    let invalid = repeats.iter().filter(|r| r.outcome.is_err()).count();
    if invalid * 10 > k {
        return Err(Error::BatchQuality { invalid, total: k });
    }
    let mut est = EpsilonEstimate {
        n: setup.n,
        p: setup.model.p(),
        delta: setup.delta,
        q,
        epsilon: f64::NAN,
        repeats,
    };
    est.epsilon = est.at_level(q)?;
    Ok(est)
}
