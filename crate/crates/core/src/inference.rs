//! Posterior machinery for the contaminated likelihood: log posterior and its
//! gradient, MAP search, Laplace approximation, importance sampling,
//! leave-last-out reweighting and a random-walk Metropolis sampler.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::models::{linear_predictor, rng_from_seed, ContaminatedModel, Dataset};
use crate::special::LN_SQRT_2PI;

/// Independent Gaussian prior with per-coordinate mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl GaussianPrior {
    pub fn new(mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        if mean.len() != sd.len() || mean.is_empty() {
            return Err(Error::Config("prior mean and sd must have equal, non-zero length".into()));
        }
        if sd.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Config("prior standard deviations must be positive".into()));
        }
        Ok(GaussianPrior { mean, sd })
    }

    /// Same mean and sd in every coordinate.
    pub fn isotropic(dim: usize, mean: f64, sd: f64) -> Result<Self> {
        Self::new(vec![mean; dim], vec![sd; dim])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(t, (m, s))| {
                let z = (t - m) / s;
                -0.5 * z * z - LN_SQRT_2PI - s.ln()
            })
            .sum()
    }

    fn add_gradient(&self, theta: &[f64], grad: &mut [f64]) {
        for (j, g) in grad.iter_mut().enumerate() {
            *g -= (theta[j] - self.mean[j]) / (self.sd[j] * self.sd[j]);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.sd)
            .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

/// Unnormalized log posterior `Σᵢ log k_p(xᵢ; θ, wᵢ) + log π₀(θ)` with the
/// θ-free contamination terms cached.
#[derive(Debug, Clone)]
pub struct Posterior<'a> {
    model: &'a ContaminatedModel,
    prior: &'a GaussianPrior,
    data: &'a Dataset,
    log_contam: Vec<f64>,
}

impl<'a> Posterior<'a> {
    pub fn new(model: &'a ContaminatedModel, prior: &'a GaussianPrior, data: &'a Dataset) -> Result<Self> {
        let d = model.dim();
        if prior.dim() != d {
            return Err(Error::Config(format!(
                "prior dimension {} does not match model dimension {d}",
                prior.dim()
            )));
        }
        match data.covariates() {
            Some(c) if c.dim() != d => {
                return Err(Error::Config("covariate dimension does not match the model".into()))
            }
            None if d != 1 && !data.is_empty() => {
                return Err(Error::Config("multi-dimensional models need covariates".into()))
            }
            _ => {}
        }
        let domain = model.domain();
        let mut log_contam = Vec::with_capacity(data.len());
        for i in 0..data.len() {
            let (x, w) = data.get(i);
            if !domain.contains(x) {
                return Err(Error::Domain(format!("observation {i} = {x} lies outside the model domain")));
            }
            log_contam.push(model.log_contam_term(x, w));
        }
        Ok(Posterior {
            model,
            prior,
            data,
            log_contam,
        })
    }

    pub fn model(&self) -> &ContaminatedModel {
        self.model
    }

    pub fn prior(&self) -> &GaussianPrior {
        self.prior
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        let base = self.model.base();
        let obs = self.data.observations();
        let mut total = self.prior.log_density(theta);
        match self.data.covariates() {
            None => {
                let terms = base.terms(theta[0]);
                for (x, lc) in obs.iter().zip(&self.log_contam) {
                    total += self.model.log_density_fast(*x, &terms, *lc);
                }
            }
            Some(cov) => {
                for (i, (x, lc)) in obs.iter().zip(&self.log_contam).enumerate() {
                    let terms = base.terms(linear_predictor(theta, Some(cov.row(i))));
                    total += self.model.log_density_fast(*x, &terms, *lc);
                }
            }
        }
        total
    }

    pub fn log_density_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let base = self.model.base();
        let obs = self.data.observations();
        let mut value = self.prior.log_density(theta);
        let mut grad = vec![0.0; theta.len()];
        self.prior.add_gradient(theta, &mut grad);
        match self.data.covariates() {
            None => {
                let terms = base.terms(theta[0]);
                let mut score = 0.0;
                for (x, lc) in obs.iter().zip(&self.log_contam) {
                    let (v, s) = self.model.log_density_and_score(*x, &terms, *lc);
                    value += v;
                    score += s;
                }
                grad[0] += score;
            }
            Some(cov) => {
                for (i, (x, lc)) in obs.iter().zip(&self.log_contam).enumerate() {
                    let w = cov.row(i);
                    let terms = base.terms(linear_predictor(theta, Some(w)));
                    let (v, s) = self.model.log_density_and_score(*x, &terms, *lc);
                    value += v;
                    for (g, wj) in grad.iter_mut().zip(w) {
                        *g += s * wj;
                    }
                }
            }
        }
        (value, grad)
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.log_density_and_gradient(theta).1
    }
}

/// Unnormalized log posterior of `θ` given `data`.
pub fn log_posterior(
    model: &ContaminatedModel,
    prior: &GaussianPrior,
    data: &Dataset,
    theta: &[f64],
) -> Result<f64> {
    let post = Posterior::new(model, prior, data)?;
    check_dim(theta, post.dim())?;
    Ok(post.log_density(theta))
}

/// Gradient of [`log_posterior`] with respect to `θ`.
pub fn log_posterior_gradient(
    model: &ContaminatedModel,
    prior: &GaussianPrior,
    data: &Dataset,
    theta: &[f64],
) -> Result<Vec<f64>> {
    let post = Posterior::new(model, prior, data)?;
    check_dim(theta, post.dim())?;
    Ok(post.gradient(theta))
}

fn check_dim(theta: &[f64], d: usize) -> Result<()> {
    if theta.len() != d {
        return Err(Error::Domain(format!("parameter has dimension {}, expected {d}", theta.len())));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("parameter has non-finite entries".into()));
    }
    Ok(())
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Settings for [`map_estimate`].
#[derive(Debug, Clone, Copy)]
pub struct MapOptions {
    /// Convergence threshold on the sup-norm of the log-posterior gradient,
    /// or on the Newton decrement `sqrt(gᵀH⁻¹g)` once a curvature estimate exists.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEstimate {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Maximizes the log posterior with BFGS and a backtracking Armijo line search.
pub fn map_estimate(
    model: &ContaminatedModel,
    prior: &GaussianPrior,
    data: &Dataset,
    init: &[f64],
    opts: &MapOptions,
) -> Result<MapEstimate> {
    let post = Posterior::new(model, prior, data)?;
    check_dim(init, post.dim())?;
    maximize_bfgs(|t| post.log_density_and_gradient(t), init, opts)
}

pub(crate) fn maximize_bfgs<F>(objective: F, init: &[f64], opts: &MapOptions) -> Result<MapEstimate>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let d = init.len();
    // Work with the negated objective so that the textbook minimization form applies.
    let eval = |t: &[f64]| {
        let (v, g) = objective(t);
        (-v, DVector::from_iterator(d, g.into_iter().map(|x| -x)))
    };
    let mut x = DVector::from_column_slice(init);
    let (mut fx, mut g) = eval(x.as_slice());
    let mut inv_h = DMatrix::<f64>::identity(d, d);
    let mut scaled = false;
    let mut flat_steps = 0;
    for iter in 0..opts.max_iter {
        let gnorm = g.amax();
        if gnorm < opts.tol || (scaled && g.dot(&(&inv_h * &g)).max(0.0).sqrt() < opts.tol) {
            return Ok(MapEstimate {
                theta: x.as_slice().to_vec(),
                iterations: iter,
                grad_norm: gnorm,
            });
        }
        if !fx.is_finite() {
            return Err(Error::Numerical("log posterior is not finite during MAP search".into()));
        }
        let mut dir = -(&inv_h * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            inv_h = DMatrix::identity(d, d);
            dir = -g.clone();
            slope = g.dot(&dir);
        }
        if !scaled {
            // Keep the very first trial step modest relative to the gradient.
            let len = dir.norm();
            if len > 1.0 {
                dir /= len;
                slope /= len;
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &dir * step;
            let (ft, gt) = eval(trial.as_slice());
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            // No descent possible: either converged to rounding or stuck.
            let gnorm = g.amax();
            if gnorm < opts.tol * 10.0 {
                return Ok(MapEstimate {
                    theta: x.as_slice().to_vec(),
                    iterations: iter,
                    grad_norm: gnorm,
                });
            }
            return Err(Error::NonConvergence {
                iterations: iter,
                last: x.as_slice().to_vec(),
                grad_norm: gnorm,
            });
        };
        // Steps that no longer move the objective beyond rounding.
        if fx - fn_ <= 1e-14 * (1.0 + fx.abs()) {
            flat_steps += 1;
        } else {
            flat_steps = 0;
        }
        // On a rounding plateau, stop once the predicted gain is itself below rounding.
        let gain = if scaled { 0.5 * gn.dot(&(&inv_h * &gn)).max(0.0) } else { f64::INFINITY };
        if flat_steps >= 3 && (gn.amax() < opts.tol * 100.0 || gain <= 1e-12 * (1.0 + fn_.abs())) {
            return Ok(MapEstimate {
                theta: xn.as_slice().to_vec(),
                iterations: iter + 1,
                grad_norm: gn.amax(),
            });
        }
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if !scaled {
                inv_h *= sy / y.dot(&y);
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &inv_h * &y;
            let yhy = y.dot(&hy);
            inv_h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let gnorm = g.amax();
    if gnorm < opts.tol {
        return Ok(MapEstimate {
            theta: x.as_slice().to_vec(),
            iterations: opts.max_iter,
            grad_norm: gnorm,
        });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last: x.as_slice().to_vec(),
        grad_norm: gnorm,
    })
}

/// Gaussian approximation `N(θ_MAP, H⁻¹)` of the posterior.
#[derive(Debug, Clone)]
pub struct LaplaceApproximation {
    pub mode: Vec<f64>,
    /// `−∇² log posterior` at the mode (symmetrized, jitter included).
    pub hessian: DMatrix<f64>,
    /// Lower-triangular `L` with `L·Lᵀ = H⁻¹`.
    pub cov_factor: DMatrix<f64>,
    /// Diagonal jitter that had to be added to make `H` positive definite.
    pub jitter: f64,
    log_det_factor: f64,
}

impl LaplaceApproximation {
    pub fn dim(&self) -> usize {
        self.mode.len()
    }

    /// Marginal standard deviations `sqrt(diag(H⁻¹))`.
    pub fn marginal_sd(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.cov_factor.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// Draws `θ ~ N(mode, H⁻¹)` and returns it with its proposal log density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let d = self.dim();
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let theta = DVector::from_column_slice(&self.mode) + &self.cov_factor * &z;
        let log_q = -0.5 * z.norm_squared() - d as f64 * LN_SQRT_2PI - self.log_det_factor;
        (theta.as_slice().to_vec(), log_q)
    }

    /// Proposal log density at an arbitrary point.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        let d = self.dim();
        let diff = DVector::from_iterator(d, theta.iter().zip(&self.mode).map(|(a, b)| a - b));
        let z = self
            .cov_factor
            .solve_lower_triangular(&diff)
            .expect("factor diagonal is positive");
        -0.5 * z.norm_squared() - d as f64 * LN_SQRT_2PI - self.log_det_factor
    }
}

/// Settings for [`laplace_approximation`].
#[derive(Debug, Clone, Copy)]
pub struct LaplaceOptions {
    /// Bound the supplied mode must satisfy on either the gradient sup-norm
    /// or the Newton decrement under the finite-difference Hessian.
    pub grad_tol: f64,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions { grad_tol: 1e-6 }
    }
}

/// Builds `N(θ_MAP, H⁻¹)` with `H` from central differences of the analytic gradient.
pub fn laplace_approximation(
    model: &ContaminatedModel,
    prior: &GaussianPrior,
    data: &Dataset,
    theta_map: &[f64],
    opts: &LaplaceOptions,
) -> Result<LaplaceApproximation> {
    let post = Posterior::new(model, prior, data)?;
    check_dim(theta_map, post.dim())?;
    let grad = post.gradient(theta_map);
    let gnorm = sup_norm(&grad);
    let hessian = numerical_hessian(|t| post.gradient(t), theta_map);
    if gnorm >= opts.grad_tol {
        let g = DVector::from_column_slice(&grad);
        let decrement = hessian.clone().cholesky().map(|c| g.dot(&c.solve(&g)).max(0.0).sqrt());
        if !matches!(decrement, Some(v) if v < opts.grad_tol) {
            return Err(Error::Domain(format!(
                "supplied point is not a mode: gradient sup-norm {gnorm:e}"
            )));
        }
    }
    laplace_from_hessian(theta_map.to_vec(), hessian)
}

/// `−∇ grad` by central differences with step `cbrt(ε)·(1 + |θⱼ|)`, symmetrized.
pub fn numerical_hessian<F: Fn(&[f64]) -> Vec<f64>>(gradient: F, theta: &[f64]) -> DMatrix<f64> {
    let d = theta.len();
    let base_step = f64::EPSILON.cbrt();
    let mut h = DMatrix::zeros(d, d);
    let mut probe = theta.to_vec();
    for j in 0..d {
        let step = base_step * (1.0 + theta[j].abs());
        probe[j] = theta[j] + step;
        let up = gradient(&probe);
        probe[j] = theta[j] - step;
        let down = gradient(&probe);
        probe[j] = theta[j];
        let width = 2.0 * step;
        for i in 0..d {
            h[(i, j)] = -(up[i] - down[i]) / width;
        }
    }
    let ht = h.transpose();
    (h + ht) * 0.5
}

pub(crate) fn laplace_from_hessian(mode: Vec<f64>, hessian: DMatrix<f64>) -> Result<LaplaceApproximation> {
    let d = mode.len();
    for k in 0..=7 {
        let jitter = if k == 0 { 0.0 } else { 1e-8 * 10f64.powi(k - 1) };
        let h = &hessian + DMatrix::identity(d, d) * jitter;
        let Some(chol) = h.clone().cholesky() else {
            continue;
        };
        let cov = chol.inverse();
        let cov = (&cov + cov.transpose()) * 0.5;
        let Some(cov_chol) = cov.cholesky() else {
            continue;
        };
        let cov_factor = cov_chol.l();
        if cov_factor.diagonal().iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            continue;
        }
        let log_det_factor = cov_factor.diagonal().iter().map(|v| v.ln()).sum();
        return Ok(LaplaceApproximation {
            mode,
            hessian: h,
            cov_factor,
            jitter,
            log_det_factor,
        });
    }
    Err(Error::Curvature(
        "negative log-posterior Hessian is not positive definite even with jitter 1e-2".into(),
    ))
}

/// Which posterior a particle cloud targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudTarget {
    /// Posterior given all `n` observations.
    Full,
    /// Posterior with the last observation removed.
    LeaveLastOut,
}

/// Weighted posterior sample with normalized weights.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    pub particles: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub target: CloudTarget,
}

impl ParticleCloud {
    /// Builds a cloud from unnormalized log weights.
    pub fn from_log_weights(particles: Vec<Vec<f64>>, log_weights: &[f64], target: CloudTarget) -> Result<Self> {
        let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Degenerate("all importance weights are zero or non-finite".into()));
        }
        let mut weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(ParticleCloud {
            particles,
            weights,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles.first().map_or(0, Vec::len)
    }

    /// Effective sample size `1 / Σ wᵢ²`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Degenerate when the ESS falls below `len / 100`.
    pub fn is_degenerate(&self) -> bool {
        self.ess() < self.len() as f64 / 100.0
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (p, w) in self.particles.iter().zip(&self.weights) {
            for (mj, pj) in m.iter_mut().zip(p) {
                *mj += w * pj;
            }
        }
        m
    }
}

/// Importance sampling from the Laplace proposal, targeting the full posterior.
pub fn importance_sample(
    model: &ContaminatedModel,
    prior: &GaussianPrior,
    data: &Dataset,
    approx: &LaplaceApproximation,
    m: usize,
    seed: u64,
) -> Result<ParticleCloud> {
    if m < 100 {
        return Err(Error::Config(format!("importance sampling needs m >= 100, got {m}")));
    }
    let post = Posterior::new(model, prior, data)?;
    let mut rng = rng_from_seed(seed);
    let mut particles = Vec::with_capacity(m);
    let mut log_w = Vec::with_capacity(m);
    for _ in 0..m {
        let (theta, log_q) = approx.sample(&mut rng);
        log_w.push(post.log_density(&theta) - log_q);
        particles.push(theta);
    }
    ParticleCloud::from_log_weights(particles, &log_w, CloudTarget::Full)
}

/// Turns a full-posterior cloud into one for the posterior without the dropped
/// datum: `w̃ᵢ ∝ wᵢ / k_p(x_drop; θᵢ, w_drop)`.
pub fn reweight_drop_last(
    cloud: &ParticleCloud,
    model: &ContaminatedModel,
    dropped: (f64, Option<&[f64]>),
) -> Result<ParticleCloud> {
    if cloud.target != CloudTarget::Full {
        return Err(Error::Config("reweighting expects a full-posterior cloud".into()));
    }
    let (x, w) = dropped;
    if !model.domain().contains(x) {
        return Err(Error::Domain(format!("dropped observation {x} outside the model domain")));
    }
    let log_contam = model.log_contam_term(x, w);
    let log_w: Vec<f64> = cloud
        .particles
        .iter()
        .zip(&cloud.weights)
        .map(|(theta, wt)| {
            let terms = model.base().terms(linear_predictor(theta, w));
            wt.ln() - model.log_density_fast(x, &terms, log_contam)
        })
        .collect();
    ParticleCloud::from_log_weights(cloud.particles.clone(), &log_w, CloudTarget::LeaveLastOut)
}

/// Settings for [`rwm_sample`].
#[derive(Debug, Clone, Copy)]
pub struct RwmOptions {
    /// Retained steps after burn-in.
    pub steps: usize,
    pub burn_in: usize,
    /// Standard deviation of the isotropic Gaussian proposal.
    pub step_scale: f64,
}

impl RwmOptions {
    /// `2.38/√d` times the mean Laplace marginal sd.
    pub fn default_step_scale(approx: &LaplaceApproximation) -> f64 {
        let sd = approx.marginal_sd();
        let mean_sd = sd.iter().sum::<f64>() / sd.len() as f64;
        mean_sd * 2.38 / (sd.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub samples: Vec<Vec<f64>>,
    /// Acceptance rate over the retained steps.
    pub acceptance_rate: f64,
    /// Set when the acceptance rate leaves `[0.05, 0.7]`.
    pub warning: Option<String>,
}

impl Chain {
    pub fn mean(&self) -> Vec<f64> {
        let d = self.samples.first().map_or(0, Vec::len);
        let mut m = vec![0.0; d];
        for s in &self.samples {
            for (mj, sj) in m.iter_mut().zip(s) {
                *mj += sj;
            }
        }
        let n = self.samples.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}

/// Random-walk Metropolis chain targeting the posterior.
pub fn rwm_sample(
    model: &ContaminatedModel,
    prior: &GaussianPrior,
    data: &Dataset,
    init: &[f64],
    opts: &RwmOptions,
    seed: u64,
) -> Result<Chain> {
    let post = Posterior::new(model, prior, data)?;
    check_dim(init, post.dim())?;
    rwm_with_posterior(&post, init, opts, &mut rng_from_seed(seed))
}

pub(crate) fn rwm_with_posterior<R: Rng + ?Sized>(
    post: &Posterior<'_>,
    init: &[f64],
    opts: &RwmOptions,
    rng: &mut R,
) -> Result<Chain> {
    if opts.steps == 0 {
        return Err(Error::Config("RWM needs at least one step".into()));
    }
    if !(opts.step_scale > 0.0 && opts.step_scale.is_finite()) {
        return Err(Error::Config(format!("step scale must be positive, got {}", opts.step_scale)));
    }
    let mut current = init.to_vec();
    let mut current_lp = post.log_density(&current);
    if !current_lp.is_finite() {
        return Err(Error::Domain("initial point has zero posterior density".into()));
    }
    let mut proposal = current.clone();
    let mut samples = Vec::with_capacity(opts.steps);
    let mut accepted = 0usize;
    for step in 0..opts.burn_in + opts.steps {
        for (p, c) in proposal.iter_mut().zip(&current) {
            *p = c + opts.step_scale * rng.sample::<f64, _>(StandardNormal);
        }
        let lp = post.log_density(&proposal);
        let accept = lp.is_finite() && (lp >= current_lp || rng.random::<f64>().ln() < lp - current_lp);
        if accept {
            current.copy_from_slice(&proposal);
            current_lp = lp;
        }
        if step >= opts.burn_in {
            accepted += usize::from(accept);
            samples.push(current.clone());
        }
    }
    let acceptance_rate = accepted as f64 / opts.steps as f64;
    let warning = (!(0.05..=0.7).contains(&acceptance_rate))
        .then(|| format!("RWM acceptance rate {acceptance_rate:.3} outside [0.05, 0.7]; retune the step scale"));
    Ok(Chain {
        samples,
        acceptance_rate,
        warning,
    })
}

/// Effective sample size of a scalar chain from its initial positive
/// autocorrelation sequence.
pub fn chain_ess(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 4 {
        return n as f64;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return n as f64;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let acf = values[..n - lag]
            .iter()
            .zip(&values[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / (n as f64 * var);
        if acf <= 0.05 {
            break;
        }
        tau += 2.0 * acf;
    }
    n as f64 / tau
}
