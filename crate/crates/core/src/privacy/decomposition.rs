//! Quadrature check of the posterior decomposition bound for neighbouring
//! datasets `X = D ∪ {x}`, `Z = D ∪ {z}` on one-dimensional models:
//!
//! `P(S|X) ≤ η·(η + m(Aᶜ, Z)/m(Ω, X))·P(S|Z) + m(Aᶜ, X)/m(Ω, X)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::inference::GaussianPrior;
use crate::models::{rng_from_seed, sample_dataset_with, ContaminatedModel, Dataset};
use crate::quadrature::{integrate, integrate_real, QuadConfig};

use super::estimate::repeat_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionConfig {
    pub n: usize,
    pub trials: usize,
    /// Random interval sets `S` per trial.
    pub sets: usize,
    /// Grid points across `A_n` for the η search.
    pub theta_grid: usize,
    /// Grid points across the observation range for the η search.
    pub x_grid: usize,
    /// Half-width range `A_n = [θ* − φ, θ* + φ]` is drawn from.
    pub phi_range: (f64, f64),
    pub tol: f64,
    pub slack: f64,
    pub seed: u64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            n: 20,
            trials: 100,
            sets: 200,
            theta_grid: 201,
            x_grid: 201,
            phi_range: (0.05, 0.6),
            tol: 1e-10,
            slack: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub phi: f64,
    pub eta: f64,
    /// `m(Aᶜ, X)/m(Ω, X)`.
    pub delta_term: f64,
    pub violations: usize,
    /// Smallest `RHS − LHS` over the sets of the trial.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub trials: Vec<TrialReport>,
}

impl DecompositionReport {
    pub fn violations(&self) -> usize {
        self.trials.iter().map(|t| t.violations).sum()
    }
}

/// Log of `Π d(xᵢ; θ)·π₀(θ)` for a dataset, as a function of scalar θ.
fn log_integrand<'a>(
    model: &'a ContaminatedModel,
    prior: &'a GaussianPrior,
    data: &'a Dataset,
    theta_star: f64,
) -> impl Fn(f64) -> f64 + 'a {
    let base: f64 = data
        .observations()
        .iter()
        .map(|&x| model.log_density(x, None, &[theta_star]).unwrap_or(f64::NEG_INFINITY))
        .sum();
    move |t: f64| {
        let mut s = prior.log_density(&[t]) - base;
        for &x in data.observations() {
            s += model.log_density(x, None, &[t]).unwrap_or(f64::NEG_INFINITY);
        }
        s
    }
}

/// Runs the check; returns per-trial violation counts.
pub fn verify_decomposition(
    model: &ContaminatedModel,
    prior: &GaussianPrior,
    theta_star: f64,
    cfg: &DecompositionConfig,
) -> Result<DecompositionReport> {
    if model.dim() != 1 || prior.dim() != 1 {
        return Err(Error::Config("the decomposition check needs a one-dimensional model".into()));
    }
    if !matches!(
        model.base(),
        crate::models::LikelihoodModel::GaussianLinear { .. } | crate::models::LikelihoodModel::TruncatedNormalMean { .. }
    ) {
        return Err(Error::Config("the decomposition check supports location models without covariates".into()));
    }
    if cfg.n < 2 || cfg.n > 50 {
        return Err(Error::Config(format!("n must lie in [2, 50], got {}", cfg.n)));
    }
    if cfg.trials == 0 || cfg.sets == 0 {
        return Err(Error::Config("need at least one trial and one set".into()));
    }
    let quad = QuadConfig::with_tol(cfg.tol);
    let mut trials = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let seed = repeat_seed(cfg.seed, trial as u64);
        let report = run_trial(model, prior, theta_star, cfg, &quad, trial, seed).map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!("trial {trial} (seed {seed}): {msg}")),
            other => other,
        })?;
        trials.push(report);
    }
    Ok(DecompositionReport { trials })
}

fn run_trial(
    model: &ContaminatedModel,
    prior: &GaussianPrior,
    theta_star: f64,
    cfg: &DecompositionConfig,
    quad: &QuadConfig,
    trial: usize,
    seed: u64,
) -> Result<TrialReport> {
    let mut rng = rng_from_seed(seed);
    let clean = sample_dataset_with(model.base(), &[theta_star], None, cfg.n, &mut rng)?;
    let data = if model.p() < 1.0 {
        model.contaminate_with(&clean, &mut rng)?.0
    } else {
        clean
    };
    // X keeps the last datum, Z swaps it for an independent draw from a
    // widened version of the data distribution.
    let obs = data.observations();
    let x = obs[cfg.n - 1];
    let spread = 3.0 * model.base().noise_scale();
    let mut z = x + rng.random_range(-spread..=spread);
    if !model.domain().contains(z) {
        z = x;
    }
    let mut zobs = obs.to_vec();
    zobs[cfg.n - 1] = z;
    let data_z = Dataset::from_observations(zobs);

    let phi = rng.random_range(cfg.phi_range.0..=cfg.phi_range.1);
    let (a_lo, a_hi) = (theta_star - phi, theta_star + phi);

    let lx = log_integrand(model, prior, &data, theta_star);
    let lz = log_integrand(model, prior, &data_z, theta_star);

    // Common shift from a coarse scan so the exponentiated integrands stay in range.
    let scan_lo = prior.mean()[0] - 12.0 * prior.sd()[0];
    let scan_hi = prior.mean()[0] + 12.0 * prior.sd()[0];
    let mut shift = f64::NEG_INFINITY;
    let mut mode = theta_star;
    for i in 0..=4000 {
        let t = scan_lo + (scan_hi - scan_lo) * i as f64 / 4000.0;
        let v = lx(t).max(lz(t));
        if v > shift {
            shift = v;
            mode = t;
        }
    }
    let fx = |t: f64| (lx(t) - shift).exp();
    let fz = |t: f64| (lz(t) - shift).exp();
    let scale = prior.sd()[0].min(1.0);
    let omega_x = integrate_real(fx, mode, scale, quad)?;
    let omega_z = integrate_real(fz, mode, scale, quad)?;
    if !(omega_x > 0.0 && omega_z > 0.0) {
        return Err(Error::Numerical("vanishing total mass".into()));
    }
    let ac_x = (omega_x - integrate(fx, a_lo, a_hi, quad)?).max(0.0);
    let ac_z = (omega_z - integrate(fz, a_lo, a_hi, quad)?).max(0.0);

    // η over a grid of A_n and of observations that includes x and z.
    let x_min = obs.iter().chain([&z]).cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let x_max = obs.iter().chain([&z]).cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let mut xs: Vec<f64> = (0..cfg.x_grid)
        .map(|i| x_min + (x_max - x_min) * i as f64 / (cfg.x_grid - 1).max(1) as f64)
        .filter(|v| model.domain().contains(*v))
        .collect();
    xs.extend([x, z]);
    let mut log_eta = 0.0f64;
    for j in 0..cfg.theta_grid {
        let t = a_lo + (a_hi - a_lo) * j as f64 / (cfg.theta_grid - 1).max(1) as f64;
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for &v in &xs {
            let ld = model.log_likelihood_ratio(v, None, &[t], &[theta_star])?;
            hi = hi.max(ld);
            lo = lo.min(ld);
        }
        log_eta = log_eta.max(hi - lo);
    }
    let eta = log_eta.exp();
    let coef = eta * (eta + ac_z / omega_x);
    let delta_term = ac_x / omega_x;

    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    let width = 4.0 * (phi + scale);
    for _ in 0..cfg.sets {
        let a = mode + rng.random_range(-width..=width);
        let b = mode + rng.random_range(-width..=width);
        let (s_lo, s_hi) = if a <= b { (a, b) } else { (b, a) };
        let p_x = integrate(fx, s_lo, s_hi, quad)? / omega_x;
        let p_z = integrate(fz, s_lo, s_hi, quad)? / omega_z;
        let margin = coef * p_z + delta_term - p_x;
        min_margin = min_margin.min(margin);
        if margin < -cfg.slack {
            violations += 1;
        }
    }
    Ok(TrialReport {
        trial,
        seed,
        phi,
        eta,
        delta_term,
        violations,
        min_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ContaminationDensity, LikelihoodModel, Location};

    fn conjugate() -> (ContaminatedModel, GaussianPrior) {
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
        (m, GaussianPrior::new(vec![0.0], vec![1.0]).unwrap())
    }

    #[test]
    fn conjugate_trials_hold() {
        let (m, prior) = conjugate();
        let cfg = DecompositionConfig {
            trials: 5,
            sets: 50,
            seed: 3,
            ..Default::default()
        };
        let r = verify_decomposition(&m, &prior, 0.5, &cfg).unwrap();
        assert_eq!(r.violations(), 0);
        assert!(r.trials.iter().all(|t| t.eta >= 1.0 && (0.0..=1.0).contains(&t.delta_term)));
    }

    #[test]
    fn contaminated_trials_hold() {
        let (m, prior) = conjugate();
        let m = m.with_rate(0.3).unwrap();
        let cfg = DecompositionConfig {
            trials: 3,
            sets: 40,
            seed: 8,
            ..Default::default()
        };
        assert_eq!(verify_decomposition(&m, &prior, 0.0, &cfg).unwrap().violations(), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (m, prior) = conjugate();
        let cfg = DecompositionConfig {
            n: 51,
            ..Default::default()
        };
        assert!(matches!(verify_decomposition(&m, &prior, 0.0, &cfg), Err(Error::Config(_))));
        let logistic = ContaminatedModel::new(LikelihoodModel::Logistic { dim: 1 }, ContaminationDensity::BernoulliHalf, 0.2)
            .unwrap();
        assert!(verify_decomposition(&logistic, &prior, 0.0, &DecompositionConfig::default()).is_err());
    }
}
