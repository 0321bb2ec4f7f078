//! Private mean estimators for the one-dimensional location task, each
//! charged against a ρ-zCDP budget, and the posterior-draw estimator they are
//! compared with.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::inference::{laplace_approximation, map_estimate, rwm_with_posterior, GaussianPrior, LaplaceOptions, MapOptions, Posterior, RwmOptions};
use crate::models::{rng_from_seed, ContaminatedModel, Dataset};
use crate::privacy::ZcdpBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanMethod {
    Bayes,
    CoinPress { iterations: usize },
    Clipped,
    Gaussian,
}

impl MeanMethod {
    pub fn tag(&self) -> String {
        match self {
            MeanMethod::Bayes => "bayes".into(),
            MeanMethod::CoinPress { iterations } => format!("coinpress{iterations}"),
            MeanMethod::Clipped => "clipped".into(),
            MeanMethod::Gaussian => "gaussian".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinPressRound {
    pub center: f64,
    pub radius: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Auxiliary {
    None,
    /// Centre and radius entering each round, in model units, and that round's budget.
    CoinPress(Vec<CoinPressRound>),
    /// Private 5% and 95% quantiles used as clipping bounds.
    Quantiles { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimatorResult {
    pub estimate: f64,
    pub method: MeanMethod,
    pub granted: f64,
    /// Sum of the per-step budgets actually charged.
    pub spent: f64,
    pub auxiliary: Auxiliary,
    pub warnings: Vec<String>,
}

impl MeanEstimatorResult {
    pub fn spent_budget(&self) -> ZcdpBudget {
        ZcdpBudget { rho: self.spent }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

fn check_data(data: &[f64]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Domain("empty data".into()));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("data contain non-finite values".into()));
    }
    Ok(())
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd == 0.0 {
        0.0
    } else {
        sd * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Posterior-draw estimator result.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesDraw {
    pub estimate: f64,
    pub acceptance_rate: f64,
    pub warning: Option<String>,
}

/// Burn-in of the chain behind [`bayes_mean_draw`].
pub const BAYES_BURN_IN: usize = 200;

/// One random-walk Metropolis draw from the posterior given already
/// contaminated data. The chain starts from a Laplace-approximation draw and
/// runs [`BAYES_BURN_IN`] steps before the retained state.
pub fn bayes_mean_draw(model: &ContaminatedModel, prior: &GaussianPrior, data: &Dataset, seed: u64) -> Result<BayesDraw> {
    if model.dim() != 1 {
        return Err(Error::Config("the mean task has a scalar parameter".into()));
    }
    let map = map_estimate(model, prior, data, prior.mean(), &MapOptions::default())?;
    let laplace = laplace_approximation(model, prior, data, &map.theta, &LaplaceOptions { grad_tol: 1e-5 })?;
    let post = Posterior::new(model, prior, data)?;
    let mut rng = rng_from_seed(seed);
    let (init, _) = laplace.sample(&mut rng);
    let opts = RwmOptions {
        steps: 1,
        burn_in: BAYES_BURN_IN,
        step_scale: RwmOptions::default_step_scale(&laplace),
    };
    let chain = rwm_with_posterior(&post, &init, &opts, &mut rng)?;
    // Acceptance over the whole run; the retained window is a single step.
    let acceptance_rate = chain.acceptance_rate;
    Ok(BayesDraw {
        estimate: chain.samples[0][0],
        acceptance_rate,
        warning: chain.warning,
    })
}

/// CoinPress settings; the data are standardized by `sigma` before the rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinPressConfig {
    pub iterations: usize,
    pub center: f64,
    pub radius: f64,
    /// Known data standard deviation.
    pub sigma: f64,
    /// Failure probability in the concentration slacks.
    pub beta: f64,
    /// Share of ρ spent on the final round; the rest is split evenly.
    pub final_share: f64,
}

impl CoinPressConfig {
    pub fn new(iterations: usize, center: f64, radius: f64, sigma: f64) -> Self {
        CoinPressConfig {
            iterations,
            center,
            radius,
            sigma,
            beta: 0.01,
            final_share: 0.75,
        }
    }

    /// Per-round budgets summing to `rho`.
    pub fn split(&self, rho: f64) -> Vec<f64> {
        let t = self.iterations;
        if t == 1 {
            return vec![rho];
        }
        let last = self.final_share * rho;
        let early = (rho - last) / (t - 1) as f64;
        let mut v = vec![early; t - 1];
        // The final share absorbs rounding so the sum is exact.
        let used: f64 = v.iter().sum();
        v.push(rho - used);
        v
    }
}

fn chi_slack(log_term: f64) -> f64 {
    // One-dimensional Gaussian norm bound sqrt(d + 2 sqrt(d L) + 2 L) with d = 1.
    (1.0 + 2.0 * log_term.sqrt() + 2.0 * log_term).sqrt()
}

/// Iterative clip-average-noise mean estimation with a shrinking ball.
pub fn coinpress_mean(data: &[f64], rho: f64, cfg: &CoinPressConfig, seed: u64) -> Result<MeanEstimatorResult> {
    check_rho(rho)?;
    check_data(data)?;
    if cfg.iterations == 0 {
        return Err(Error::Config("CoinPress needs at least one iteration".into()));
    }
    if !(cfg.radius > 0.0 && cfg.sigma > 0.0) {
        return Err(Error::Config("CoinPress radius and sigma must be positive".into()));
    }
    if !(cfg.beta > 0.0 && cfg.beta < 1.0 && cfg.final_share > 0.0 && cfg.final_share <= 1.0) {
        return Err(Error::Config("CoinPress beta must lie in (0, 1) and the final share in (0, 1]".into()));
    }
    let n = data.len() as f64;
    let z: Vec<f64> = data.iter().map(|x| x / cfg.sigma).collect();
    let gamma_clip = chi_slack((n / cfg.beta).ln());
    let gamma_radius = chi_slack((1.0 / cfg.beta).ln());
    let mut rng = rng_from_seed(seed);
    let mut center = cfg.center / cfg.sigma;
    let mut radius = cfg.radius / cfg.sigma;
    let budgets = cfg.split(rho);
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut warnings = Vec::new();
    let mut spent = 0.0;
    for &rho_i in &budgets {
        trace.push(CoinPressRound {
            center: center * cfg.sigma,
            radius: radius * cfg.sigma,
            rho: rho_i,
        });
        if radius < f64::EPSILON * (1.0 + center.abs()) {
            warnings.push("radius collapsed below machine precision; returning the current centre".into());
            break;
        }
        let clip = radius + gamma_clip;
        let mean = z.iter().map(|v| v.clamp(center - clip, center + clip)).sum::<f64>() / n;
        let sensitivity = 2.0 * clip / n;
        let noise_sd = sensitivity / (2.0 * rho_i).sqrt();
        center = mean + gaussian(&mut rng, noise_sd);
        radius = gamma_radius * (1.0 / n + noise_sd * noise_sd).sqrt();
        spent += rho_i;
    }
    Ok(MeanEstimatorResult {
        estimate: center * cfg.sigma,
        method: MeanMethod::CoinPress {
            iterations: cfg.iterations,
        },
        granted: rho,
        spent,
        auxiliary: Auxiliary::CoinPress(trace),
        warnings,
    })
}

/// Private `q`-quantile by the exponential mechanism over the gaps between
/// order statistics of `sorted` (ascending, inside `[lower, upper]`), with
/// utility `−|rank − q·n|` and privacy parameter `epsilon`.
pub fn private_quantile<R: Rng + ?Sized>(sorted: &[f64], q: f64, epsilon: f64, lower: f64, upper: f64, rng: &mut R) -> f64 {
    let n = sorted.len();
    let target = q * n as f64;
    let mut edges = Vec::with_capacity(n + 2);
    edges.push(lower);
    edges.extend(sorted.iter().map(|v| v.clamp(lower, upper)));
    edges.push(upper);
    // log of (gap width · exp(ε·utility/2)) per gap.
    let log_w: Vec<f64> = (0..=n)
        .map(|i| {
            let width = edges[i + 1] - edges[i];
            if width <= 0.0 {
                f64::NEG_INFINITY
            } else {
                width.ln() - 0.5 * epsilon * (i as f64 - target).abs()
            }
        })
        .collect();
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return edges[0];
    }
    let weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut pick = n;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            pick = i;
            break;
        }
        u -= w;
    }
    while weights[pick] == 0.0 {
        pick -= 1;
    }
    edges[pick] + rng.random::<f64>() * (edges[pick + 1] - edges[pick])
}

/// Private 5%/95% quantiles (ρ/4 each) followed by a Gaussian-noised mean of
/// the data clipped to them (ρ/2). `bounds` is the public data range the
/// quantile search runs over.
pub fn clipped_mean(data: &[f64], rho: f64, bounds: (f64, f64), seed: u64) -> Result<MeanEstimatorResult> {
    check_rho(rho)?;
    check_data(data)?;
    if data.len() < 10 {
        return Err(Error::Domain(format!("clipped mean needs n >= 10, got {}", data.len())));
    }
    let (lower, upper) = bounds;
    if !(upper > lower) {
        return Err(Error::Config("data bounds must satisfy lower < upper".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rho_q = rho / 4.0;
    // The exponential mechanism with parameter ε is ε²/8-zCDP.
    let eps_q = (8.0 * rho_q).sqrt();
    let a = private_quantile(&sorted, 0.05, eps_q, lower, upper, &mut rng);
    let b = private_quantile(&sorted, 0.95, eps_q, lower, upper, &mut rng);
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut warnings = Vec::new();
    if hi - lo <= 0.0 {
        let slack = f64::EPSILON * (1.0 + lo.abs());
        lo -= slack;
        hi += slack;
        warnings.push("degenerate quantile interval widened by machine slack".into());
    }
    let rho_m = rho - 2.0 * rho_q;
    let n = data.len() as f64;
    let mean = data.iter().map(|v| v.clamp(lo, hi)).sum::<f64>() / n;
    let sd = ((hi - lo) / n) / (2.0 * rho_m).sqrt();
    Ok(MeanEstimatorResult {
        estimate: mean + gaussian(&mut rng, sd),
        method: MeanMethod::Clipped,
        granted: rho,
        spent: rho_q + rho_q + rho_m,
        auxiliary: Auxiliary::Quantiles { lower: lo, upper: hi },
        warnings,
    })
}

/// Sample mean plus Gaussian noise with sd `((u − l)/n)/√(2ρ)`.
pub fn gaussian_mechanism_mean(data: &[f64], rho: f64, bounds: (f64, f64), seed: u64) -> Result<MeanEstimatorResult> {
    check_rho(rho)?;
    check_data(data)?;
    let (lower, upper) = bounds;
    if !(upper > lower) {
        return Err(Error::Config("data bounds must satisfy lower < upper".into()));
    }
    let mut warnings = Vec::new();
    let outside = data.iter().filter(|v| **v < lower || **v > upper).count();
    if outside > 0 {
        warnings.push(format!("{outside} observations outside [{lower}, {upper}] were clipped"));
    }
    let n = data.len() as f64;
    let mean = data.iter().map(|v| v.clamp(lower, upper)).sum::<f64>() / n;
    let sd = gaussian_mechanism_sd(data.len(), rho, bounds);
    let mut rng = rng_from_seed(seed);
    Ok(MeanEstimatorResult {
        estimate: mean + gaussian(&mut rng, sd),
        method: MeanMethod::Gaussian,
        granted: rho,
        spent: rho,
        auxiliary: Auxiliary::None,
        warnings,
    })
}

/// Noise standard deviation of [`gaussian_mechanism_mean`].
pub fn gaussian_mechanism_sd(n: usize, rho: f64, bounds: (f64, f64)) -> f64 {
    ((bounds.1 - bounds.0) / n as f64) / (2.0 * rho).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn normal_data(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let d = Normal::new(mean, sd).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn coinpress_noiseless_fixed_point() {
        // Noise scales like 1/n, so a large sample makes it negligible at ρ = 1e6.
        let data = vec![31.5; 1_000_000];
        let cfg = CoinPressConfig::new(10, 0.0, 600.0, 8.0);
        let r = coinpress_mean(&data, 1e6, &cfg, 1).unwrap();
        assert!((r.estimate - 31.5).abs() < 1e-6, "{}", r.estimate);
    }

    #[test]
    fn coinpress_budget_is_exact() {
        let data = normal_data(500, 30.0, 8.0, 2);
        for t in [1, 3, 10] {
            let cfg = CoinPressConfig::new(t, 0.0, 600.0, 8.0);
            let split = cfg.split(0.37);
            assert_eq!(split.len(), t);
            assert!((split.iter().sum::<f64>() - 0.37).abs() < 1e-15);
            let r = coinpress_mean(&data, 0.37, &cfg, 3).unwrap();
            assert!((r.spent - r.granted).abs() < 1e-15);
            match &r.auxiliary {
                Auxiliary::CoinPress(trace) => assert_eq!(trace.len(), t),
                other => panic!("unexpected auxiliary {other:?}"),
            }
        }
        let cfg = CoinPressConfig::new(3, 0.0, 600.0, 8.0);
        let s = cfg.split(1.0);
        assert!((s[2] - 0.75).abs() < 1e-15 && (s[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn coinpress_radius_shrinks() {
        let data = normal_data(5000, 30.0, 8.0, 4);
        let r = coinpress_mean(&data, 0.01, &CoinPressConfig::new(10, 0.0, 600.0, 8.0), 5).unwrap();
        if let Auxiliary::CoinPress(trace) = &r.auxiliary {
            assert!(trace.last().unwrap().radius < trace[0].radius / 10.0);
        }
        assert!((r.estimate - 30.0).abs() < 3.0, "{}", r.estimate);
    }

    #[test]
    fn clipped_mean_noiseless_limit() {
        // Symmetric grid on [-1, 1]; the 5%/95% clip points sit near ±0.9.
        let n = 20001;
        let data: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let r = clipped_mean(&data, 1e6, (-1.0, 1.0), 7).unwrap();
        let (lo, hi) = (data[(0.05 * n as f64) as usize], data[(0.95 * n as f64) as usize]);
        let oracle = data.iter().map(|v| v.clamp(lo, hi)).sum::<f64>() / n as f64;
        assert!((r.estimate - oracle).abs() < 1e-3);
        assert!((r.spent - 1e6).abs() < 1e-9);
        if let Auxiliary::Quantiles { lower, upper } = r.auxiliary {
            assert!((lower + 0.9).abs() < 1e-3 && (upper - 0.9).abs() < 1e-3);
        }
    }

    #[test]
    fn clipped_mean_budget_and_guards() {
        let data = normal_data(100, 30.0, 8.0, 8);
        let r = clipped_mean(&data, 0.05, (-270.0, 330.0), 9).unwrap();
        assert_eq!(r.spent, 0.05 / 4.0 + 0.05 / 4.0 + 0.05 / 2.0);
        assert!(clipped_mean(&data[..9], 0.05, (-270.0, 330.0), 9).is_err());
        // Constant data: both clip points land in the outer gaps, so clipping is a no-op.
        let r = clipped_mean(&vec![2.0; 50], 1e6, (-270.0, 330.0), 1).unwrap();
        assert!((r.estimate - 2.0).abs() < 0.05, "{}", r.estimate);
    }

    #[test]
    fn private_quantile_concentrates() {
        let mut rng = rng_from_seed(10);
        let sorted: Vec<f64> = (0..1000).map(|i| i as f64 / 10.0).collect();
        let q = private_quantile(&sorted, 0.5, 1e4, 0.0, 100.0, &mut rng);
        assert!((49.9..=50.1).contains(&q), "{q}");
    }

    #[test]
    fn gaussian_mechanism_noise_variance() {
        let data = vec![10.0; 100];
        let sd = gaussian_mechanism_sd(100, 0.0478, (-270.0, 330.0));
        assert!((sd - 19.4).abs() < 0.05, "{sd}");
        let draws: Vec<f64> = (0..10_000)
            .map(|s| gaussian_mechanism_mean(&data, 0.0478, (-270.0, 330.0), s).unwrap().estimate - 10.0)
            .collect();
        let var = draws.iter().map(|v| v * v).sum::<f64>() / draws.len() as f64;
        assert!((var / (sd * sd) - 1.0).abs() < 0.05, "{var}");
        let exact = gaussian_mechanism_mean(&[1.0, 2.0, 3.0], 1e300, (0.0, 4.0), 0).unwrap();
        assert!((exact.estimate - 2.0).abs() < 1e-12);
        let clipped = gaussian_mechanism_mean(&[5.0, 2.0], 1e300, (0.0, 4.0), 0).unwrap();
        assert_eq!(clipped.warnings.len(), 1);
        assert!((clipped.estimate - 3.0).abs() < 1e-12);
    }
}
