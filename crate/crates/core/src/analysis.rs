//! Numerical checks of the supporting theory: Hellinger distances, Fisher
//! information under contamination, Gaussian prior-mass bounds, and power-law
//! fits of ε̂ against n.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::models::{linear_predictor, rng_from_seed, ContaminatedModel, ObservationDomain};
use crate::quadrature::{integrate, integrate_real, QuadConfig};
use crate::special::gamma_p;

/// Where a density lives and how to scale the integration over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationDomain {
    pub domain: ObservationDomain,
    /// Centre and scale of the tangent substitution on the real line.
    pub center: f64,
    pub scale: f64,
}

fn integrate_over<F: Fn(f64) -> f64>(f: F, dom: &IntegrationDomain, cfg: &QuadConfig) -> Result<f64> {
    match dom.domain {
        ObservationDomain::Binary => Ok(f(0.0) + f(1.0)),
        ObservationDomain::Interval { lower, upper } => integrate(f, lower, upper, cfg),
        ObservationDomain::Real => integrate_real(f, dom.center, dom.scale, cfg),
    }
}

/// Default quadrature for the Hellinger distance.
pub fn hellinger_quad() -> QuadConfig {
    QuadConfig::with_tol(1e-8)
}

/// Squared Hellinger distance `½ ∫ (√p − √q)²` between two densities given
/// in log form.
pub fn hellinger_squared<F, G>(log_p: F, log_q: G, dom: &IntegrationDomain, cfg: &QuadConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let v = integrate_over(
        |x| {
            let a = (0.5 * log_p(x)).exp();
            let b = (0.5 * log_q(x)).exp();
            (a - b) * (a - b)
        },
        dom,
        cfg,
    )?;
    Ok((0.5 * v).clamp(0.0, 1.0))
}

pub fn hellinger<F, G>(log_p: F, log_q: G, dom: &IntegrationDomain, cfg: &QuadConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    hellinger_squared(log_p, log_q, dom, cfg).map(f64::sqrt)
}

/// Hellinger distance between `k_p(·; θ₁, w)` and `k_p(·; θ₂, w)`.
pub fn hellinger_between(
    model: &ContaminatedModel,
    theta1: &[f64],
    theta2: &[f64],
    w: Option<&[f64]>,
    cfg: &QuadConfig,
) -> Result<f64> {
    let (t1, t2) = (linear_predictor(theta1, w), linear_predictor(theta2, w));
    let dom = IntegrationDomain {
        domain: model.domain(),
        center: 0.5 * (t1 + t2),
        scale: model.base().noise_scale() + 0.5 * (t1 - t2).abs(),
    };
    let density = |theta: &[f64]| {
        let theta = theta.to_vec();
        move |x: f64| model.log_density(x, w, &theta).unwrap_or(f64::NEG_INFINITY)
    };
    hellinger(density(theta1), density(theta2), &dom, cfg)
}

/// Fisher information of one observation under `k_p` at `θ`:
/// `E[(∂ log k_p / ∂ lin)²] · w wᵀ`, by quadrature (a sum on binary data).
pub fn fisher_information(
    model: &ContaminatedModel,
    theta: &[f64],
    w: Option<&[f64]>,
    cfg: &QuadConfig,
) -> Result<DMatrix<f64>> {
    let d = model.dim();
    if theta.len() != d {
        return Err(Error::Domain("parameter dimension does not match the model".into()));
    }
    let w_vec: Vec<f64> = match w {
        Some(w) if w.len() == d => w.to_vec(),
        Some(_) => return Err(Error::Domain("covariate row does not match the model".into())),
        None if d == 1 => vec![1.0],
        None => return Err(Error::Domain("a covariate row is needed when the dimension exceeds 1".into())),
    };
    let lin = linear_predictor(theta, w);
    let terms = model.base().terms(lin);
    let dom = IntegrationDomain {
        domain: model.domain(),
        center: lin,
        scale: model.base().noise_scale(),
    };
    let info = integrate_over(
        |x| {
            let (log_k, score) = model.log_density_and_score(x, &terms, model.log_contam_term(x, w));
            if log_k == f64::NEG_INFINITY {
                0.0
            } else {
                score * score * log_k.exp()
            }
        },
        &dom,
        cfg,
    )?;
    if !info.is_finite() {
        return Err(Error::Numerical("Fisher information integral is not finite".into()));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| info * w_vec[i] * w_vec[j]))
}

/// Largest entry of `|I_p − I_0|`.
pub fn fisher_gap(model: &ContaminatedModel, theta: &[f64], w: Option<&[f64]>, cfg: &QuadConfig) -> Result<f64> {
    let ip = fisher_information(model, theta, w, cfg)?;
    let i0 = fisher_information(&model.with_rate(0.0)?, theta, w, cfg)?;
    Ok((ip - i0).abs().max())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorMassBounds {
    /// `exp(−λ/2)·P(d/2, r²/2)` with `λ = ‖θ*‖²`.
    pub small_r: f64,
    /// `P(d/2, R²/2)` with `R = r − ‖θ*‖`; absent when `r ≤ ‖θ*‖`.
    pub large_r: Option<f64>,
    /// Monte Carlo estimate of the standard Gaussian mass of the ball.
    pub mc: f64,
    pub mc_se: f64,
}

/// Lower bounds on the `N(0, I)` mass of the ball of radius `r` about `θ*`,
/// with a Monte Carlo estimate of the exact mass.
pub fn prior_mass_bounds(theta_star: &[f64], r: f64, draws: usize, seed: u64) -> Result<PriorMassBounds> {
    if theta_star.is_empty() {
        return Err(Error::Domain("parameter must have at least one coordinate".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let d = theta_star.len() as f64;
    let norm_sq: f64 = theta_star.iter().map(|t| t * t).sum();
    let norm = norm_sq.sqrt();
    let small_r = (-0.5 * norm_sq).exp() * gamma_p(0.5 * d, 0.5 * r * r);
    let large_r = (r > norm).then(|| gamma_p(0.5 * d, 0.5 * (r - norm).powi(2)));
    let (mc, mc_se) = if draws == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let mut rng = rng_from_seed(seed);
        let r2 = r * r;
        let mut hits = 0usize;
        for _ in 0..draws {
            let dist2: f64 = theta_star
                .iter()
                .map(|t| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (z - t) * (z - t)
                })
                .sum();
            hits += usize::from(dist2 <= r2);
        }
        let p = hits as f64 / draws as f64;
        (p, (p * (1.0 - p) / draws as f64).sqrt())
    };
    Ok(PriorMassBounds {
        small_r,
        large_r,
        mc,
        mc_se,
    })
}

/// Least-squares line through `(log n, log ε̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub sample_sizes: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

impl DecayFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.ln()).exp()
    }
}

/// Fits `log ε̂ = a + b log n` and extrapolates to `targets`.
pub fn decay_fit(pairs: &[(f64, f64)], targets: &[f64]) -> Result<(DecayFit, Vec<(f64, f64)>)> {
    if pairs.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", pairs.len())));
    }
    if pairs.iter().any(|&(n, e)| !(n > 0.0) || !(e > 0.0)) {
        return Err(Error::Domain("sample sizes and epsilons must be positive".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("sample sizes must not all be equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let fit = DecayFit {
        sample_sizes: pairs.iter().map(|p| p.0).collect(),
        epsilons: pairs.iter().map(|p| p.1).collect(),
        slope,
        intercept,
        residual_rms: (rss / k).sqrt(),
    };
    let extrapolated = targets.iter().map(|&n| (n, fit.predict(n))).collect();
    Ok((fit, extrapolated))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseStats {
    pub bias: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Mean squared error, `bias² + variance·(m − 1)/m`.
    pub mse: f64,
}

pub fn mse_stats(estimates: &[f64], truth: f64) -> Result<MseStats> {
    if estimates.len() < 2 {
        return Err(Error::Domain("need at least two estimates".into()));
    }
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let variance = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let bias = mean - truth;
    Ok(MseStats {
        bias,
        variance,
        mse: bias * bias + variance * (m - 1.0) / m,
    })
}
