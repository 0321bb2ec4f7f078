//! The three quantities behind a single ε̂: the neighbourhood radius φ chosen
//! from the posterior tail, the ratio bound η over that neighbourhood, and the
//! expectation ratio α/β under the leave-last-out posterior.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::inference::ParticleCloud;
use crate::models::{linear_predictor, ContaminatedModel, PredictorTerms};
use crate::special::log_add_exp;

use super::search::{extremize, CovariateDomain, SearchOptions, XSearch};

/// L∞ hypercube `Πⱼ [centerⱼ − φ, centerⱼ + φ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourhoodBox {
    pub center: Vec<f64>,
    pub half_width: f64,
}

impl NeighbourhoodBox {
    pub fn new(center: Vec<f64>, half_width: f64) -> Result<Self> {
        if !(half_width >= 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("box half-width must be finite and >= 0, got {half_width}")));
        }
        Ok(NeighbourhoodBox { center, half_width })
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        let scale = self.center.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        linf_distance(theta, &self.center) <= self.half_width + 1e-12 * scale
    }

    /// Range of `θᵀw` over the box.
    pub fn predictor_range(&self, w: Option<&[f64]>) -> (f64, f64) {
        let c = linear_predictor(&self.center, w);
        let r = match w {
            Some(w) => self.half_width * w.iter().map(|v| v.abs()).sum::<f64>(),
            None => self.half_width,
        };
        (c - r, c + r)
    }

    /// A point of the box whose linear predictor under `w` equals `t`.
    pub fn point_with_predictor(&self, w: Option<&[f64]>, t: f64) -> Vec<f64> {
        let (lo, hi) = self.predictor_range(w);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let lambda = if half > 0.0 { ((t - mid) / half).clamp(-1.0, 1.0) } else { 0.0 };
        match w {
            Some(w) => self
                .center
                .iter()
                .zip(w)
                .map(|(c, wj)| c + lambda * self.half_width * wj.signum() * f64::from(*wj != 0.0))
                .collect(),
            None => {
                let mut p = self.center.clone();
                p[0] += lambda * self.half_width;
                p
            }
        }
    }
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Smallest particle distance `φ` from `center` whose outside weight is at
/// most `delta`, together with that outside weight `δ̂`.
pub fn choose_phi(cloud: &ParticleCloud, center: &[f64], delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mut by_distance: Vec<(f64, f64)> = cloud
        .particles
        .iter()
        .zip(&cloud.weights)
        .map(|(p, w)| (linf_distance(p, center), *w))
        .collect();
    by_distance.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cumulative = 0.0;
    let mut i = 0;
    while i < by_distance.len() {
        // Particles at exactly the same distance enter or leave together.
        let r = by_distance[i].0;
        let mut group = 0.0;
        let mut j = i;
        while j < by_distance.len() && by_distance[j].0 == r {
            group += by_distance[j].1;
            j += 1;
        }
        if cumulative + group > delta {
            return Ok((r, cumulative));
        }
        cumulative += group;
        i = j;
    }
    Ok((0.0, cumulative))
}

/// Where a search optimum was attained.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x: f64,
    pub row: Option<Vec<f64>>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaBound {
    /// `log sup_x sup_{θ∈A} d(x; θ)`.
    pub log_sup: f64,
    /// `log inf_z inf_{θ∈A} d(z; θ)`.
    pub log_inf: f64,
    pub sup_witness: Witness,
    pub inf_witness: Witness,
    /// Whether an optimum sits on the edge of a truncated search interval on an
    /// unbounded domain.
    pub boundary_witness: bool,
}

impl EtaBound {
    pub fn sup(&self) -> f64 {
        self.log_sup.exp()
    }
    pub fn inf(&self) -> f64 {
        self.log_inf.exp()
    }
    pub fn log_eta(&self) -> f64 {
        self.log_sup - self.log_inf
    }
    pub fn eta(&self) -> f64 {
        self.log_eta().exp()
    }
}

struct RatioGuard {
    limit: f64,
    active: bool,
    worst: Cell<f64>,
}

impl RatioGuard {
    fn new(model: &ContaminatedModel, opts: &SearchOptions) -> Self {
        RatioGuard {
            limit: opts.log_ratio_limit,
            active: model.p() > 0.0,
            worst: Cell::new(0.0),
        }
    }

    #[inline]
    fn track(&self, v: f64) -> f64 {
        if v.abs() > self.worst.get() || v.is_nan() {
            self.worst.set(if v.is_nan() { f64::INFINITY } else { v.abs() });
        }
        v
    }

    fn check(&self) -> Result<()> {
        let w = self.worst.get();
        if self.active && w > self.limit {
            return Err(Error::UnboundedRatio { log_ratio: w });
        }
        Ok(())
    }
}

fn on_edge(search: &XSearch, x: f64, unbounded: bool) -> bool {
    match search {
        XSearch::Interval { lo, hi } if unbounded => {
            let tol = 1e-6 * (hi - lo);
            (x - lo).abs() < tol || (hi - x).abs() < tol
        }
        _ => false,
    }
}

/// `sup_x sup_{θ∈box} d(x; θ)` and `inf_z inf_{θ∈box} d(z; θ)`, with
/// `d(x; θ) = k_p(x; θ) / k_p(x; θ_ref)`.
///
/// All models are single-index, so for a covariate row `w` the box maps onto
/// the predictor interval `[cᵀw − φ‖w‖₁, cᵀw + φ‖w‖₁]` and the θ search is
/// a one-dimensional search over that interval.
pub fn eta_bound(
    model: &ContaminatedModel,
    bx: &NeighbourhoodBox,
    theta_ref: &[f64],
    covariates: &CovariateDomain,
    opts: &SearchOptions,
) -> Result<EtaBound> {
    if bx.center.len() != model.dim() || theta_ref.len() != model.dim() {
        return Err(Error::Domain("box centre and reference must match the model dimension".into()));
    }
    let base = model.base();
    let unbounded = matches!(model.domain(), crate::models::ObservationDomain::Real);
    let guard = RatioGuard::new(model, opts);
    let mut best_sup: Option<(f64, Witness)> = None;
    let mut best_inf: Option<(f64, Witness)> = None;
    let mut boundary = false;

    for row in covariates.rows() {
        let w = row.as_deref();
        let (t_lo, t_hi) = bx.predictor_range(w);
        let t_ref = linear_predictor(theta_ref, w);
        let ref_terms = base.terms(t_ref);
        let search = XSearch::for_model(model, t_lo.min(t_ref), t_hi.max(t_ref), opts.widen);

        // log d(x; t) with its θ-free pieces evaluated once per x.
        let log_ratio_at = |x: f64, maximize: bool| -> (f64, f64) {
            let lc = model.log_contam_term(x, w);
            let log_ref = model.log_density_fast(x, &ref_terms, lc);
            let ld = |t: f64| guard.track(model.log_density_fast(x, &base.terms(t), lc) - log_ref);
            extremize(ld, t_lo, t_hi, opts.predictor_grid, maximize)
        };

        for maximize in [true, false] {
            let (x, (t, v)) = match &search {
                XSearch::Discrete(xs) => xs
                    .iter()
                    .map(|&x| (x, log_ratio_at(x, maximize)))
                    .reduce(|a, b| {
                        let better = if maximize { b.1 .1 > a.1 .1 } else { b.1 .1 < a.1 .1 };
                        if better {
                            b
                        } else {
                            a
                        }
                    })
                    .expect("discrete domain is non-empty"),
                XSearch::Interval { lo, hi } => {
                    let (x, _) = extremize(|x| log_ratio_at(x, maximize).1, *lo, *hi, opts.x_grid, maximize);
                    (x, log_ratio_at(x, maximize))
                }
            };
            boundary |= on_edge(&search, x, unbounded);
            let witness = Witness {
                x,
                row: row.clone(),
                theta: bx.point_with_predictor(w, t),
            };
            let slot = if maximize { &mut best_sup } else { &mut best_inf };
            let replace = match slot {
                None => true,
                Some((cur, _)) => {
                    if maximize {
                        v > *cur
                    } else {
                        v < *cur
                    }
                }
            };
            if replace {
                *slot = Some((v, witness));
            }
        }
    }
    guard.check()?;
    let (log_sup, sup_witness) = best_sup.expect("at least one covariate row");
    let (log_inf, inf_witness) = best_inf.expect("at least one covariate row");
    Ok(EtaBound {
        log_sup,
        log_inf,
        sup_witness,
        inf_witness,
        boundary_witness: boundary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationRatio {
    /// `log sup_x Σᵢ w̃ᵢ d(x; θᵢ)`.
    pub log_alpha: f64,
    /// `log inf_z Σᵢ w̃ᵢ d(z; θᵢ)`.
    pub log_beta: f64,
    pub alpha_witness: (f64, Option<Vec<f64>>),
    pub beta_witness: (f64, Option<Vec<f64>>),
    pub boundary_witness: bool,
}

impl ExpectationRatio {
    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }
    pub fn beta(&self) -> f64 {
        self.log_beta.exp()
    }
}

/// `α = sup_x Σᵢ w̃ᵢ d(x; θᵢ)` and `β = inf_z Σᵢ w̃ᵢ d(z; θᵢ)` over a weighted cloud.
pub fn expectation_ratio(
    cloud: &ParticleCloud,
    model: &ContaminatedModel,
    theta_ref: &[f64],
    covariates: &CovariateDomain,
    opts: &SearchOptions,
) -> Result<ExpectationRatio> {
    if cloud.is_empty() {
        return Err(Error::Degenerate("empty particle cloud".into()));
    }
    if theta_ref.len() != model.dim() || cloud.dim() != model.dim() {
        return Err(Error::Domain("cloud and reference must match the model dimension".into()));
    }
    let base = model.base();
    let unbounded = matches!(model.domain(), crate::models::ObservationDomain::Real);
    let guard = RatioGuard::new(model, opts);
    // Zero-weight particles cannot move the sums.
    let active: Vec<(&Vec<f64>, f64)> = cloud
        .particles
        .iter()
        .zip(&cloud.weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(p, w)| (p, w.ln()))
        .collect();
    if active.is_empty() {
        return Err(Error::Degenerate("all particle weights are zero".into()));
    }

    let mut alpha: Option<(f64, (f64, Option<Vec<f64>>))> = None;
    let mut beta: Option<(f64, (f64, Option<Vec<f64>>))> = None;
    let mut boundary = false;
    for row in covariates.rows() {
        let w = row.as_deref();
        let t_ref = linear_predictor(theta_ref, w);
        let ref_terms = base.terms(t_ref);
        let terms: Vec<(PredictorTerms, f64)> = active
            .iter()
            .map(|(p, lw)| (base.terms(linear_predictor(p, w)), *lw))
            .collect();
        let (mut t_lo, mut t_hi) = (t_ref, t_ref);
        for (t, _) in &terms {
            t_lo = t_lo.min(t.lin);
            t_hi = t_hi.max(t.lin);
        }
        let search = XSearch::for_model(model, t_lo, t_hi, opts.widen);
        let log_g = |x: f64| -> f64 {
            let lc = model.log_contam_term(x, w);
            let log_ref = model.log_density_fast(x, &ref_terms, lc);
            let mut acc = f64::NEG_INFINITY;
            for (t, lw) in &terms {
                let ld = guard.track(model.log_density_fast(x, t, lc) - log_ref);
                acc = log_add_exp(acc, lw + ld);
            }
            acc
        };
        for maximize in [true, false] {
            let (x, v) = match &search {
                XSearch::Discrete(xs) => xs
                    .iter()
                    .map(|&x| (x, log_g(x)))
                    .reduce(|a, b| {
                        let better = if maximize { b.1 > a.1 } else { b.1 < a.1 };
                        if better {
                            b
                        } else {
                            a
                        }
                    })
                    .expect("discrete domain is non-empty"),
                XSearch::Interval { lo, hi } => extremize(log_g, *lo, *hi, opts.x_grid, maximize),
            };
            boundary |= on_edge(&search, x, unbounded);
            let slot = if maximize { &mut alpha } else { &mut beta };
            let replace = match slot {
                None => true,
                Some((cur, _)) => {
                    if maximize {
                        v > *cur
                    } else {
                        v < *cur
                    }
                }
            };
            if replace {
                *slot = Some((v, (x, row.clone())));
            }
        }
    }
    guard.check()?;
    let (log_alpha, alpha_witness) = alpha.expect("at least one covariate row");
    let (log_beta, beta_witness) = beta.expect("at least one covariate row");
    Ok(ExpectationRatio {
        log_alpha,
        log_beta,
        alpha_witness,
        beta_witness,
        boundary_witness: boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::CloudTarget;
    use crate::models::{ContaminationDensity, LikelihoodModel, Location};
    use crate::privacy::search::multistart_box;

    fn cloud(particles: Vec<Vec<f64>>, weights: Vec<f64>) -> ParticleCloud {
        ParticleCloud {
            particles,
            weights,
            target: CloudTarget::LeaveLastOut,
        }
    }

    fn logistic(p: f64) -> ContaminatedModel {
        ContaminatedModel::new(LikelihoodModel::Logistic { dim: 1 }, ContaminationDensity::BernoulliHalf, p).unwrap()
    }

    fn gaussian(p: f64) -> ContaminatedModel {
        ContaminatedModel::new(
            LikelihoodModel::GaussianLinear { sigma: 1.0, dim: 1 },
            ContaminationDensity::StudentT {
                nu: 5.0,
                scale: 5.0,
                location: Location::Predictor(vec![0.0]),
            },
            p,
        )
        .unwrap()
    }

    #[test]
    fn phi_brute_force_cases() {
        let c = cloud(vec![vec![0.1], vec![0.2], vec![-0.3]], vec![0.5, 0.3, 0.2]);
        assert_eq!(choose_phi(&c, &[0.0], 0.25).unwrap(), (0.2, 0.2));
        assert_eq!(choose_phi(&c, &[0.0], 0.999).unwrap(), (0.1, 0.5));
        let (phi, tail) = choose_phi(&c, &[0.0], 0.1).unwrap();
        assert_eq!((phi, tail), (0.3, 0.0));
        let at_center = cloud(vec![vec![1.0]; 4], vec![0.25; 4]);
        assert_eq!(choose_phi(&at_center, &[1.0], 0.01).unwrap(), (0.0, 0.0));
        assert!(choose_phi(&c, &[0.0], 1.0).is_err());
    }

    #[test]
    fn eta_trivial_cases() {
        let opts = SearchOptions::default();
        let bx = NeighbourhoodBox::new(vec![0.0], 0.5).unwrap();
        let full = eta_bound(&logistic(1.0), &bx, &[0.0], &CovariateDomain::Corners(1), &opts).unwrap();
        assert_eq!((full.sup(), full.inf(), full.eta()), (1.0, 1.0, 1.0));
        let point = NeighbourhoodBox::new(vec![0.3], 0.0).unwrap();
        let e = eta_bound(&gaussian(0.2), &point, &[0.3], &CovariateDomain::Corners(1), &opts).unwrap();
        assert_eq!(e.log_eta(), 0.0);
    }

    #[test]
    fn eta_logistic_matches_corner_brute_force() {
        let m = logistic(0.5);
        let bx = NeighbourhoodBox::new(vec![0.0], 0.5).unwrap();
        let e = eta_bound(&m, &bx, &[0.0], &CovariateDomain::Corners(1), &SearchOptions::default()).unwrap();
        let mut sup = f64::NEG_INFINITY;
        let mut inf = f64::INFINITY;
        for x in [0.0, 1.0] {
            for th in [-0.5, 0.5] {
                let d = m.likelihood_ratio(x, Some(&[1.0]), &[th], &[0.0]).unwrap();
                sup = sup.max(d);
                inf = inf.min(d);
            }
        }
        assert!((e.sup() - sup).abs() < 1e-9);
        assert!((e.inf() - inf).abs() < 1e-9);
        assert!(e.sup() >= 1.0 && e.inf() <= 1.0);
    }

    #[test]
    fn eta_agrees_with_multistart_box_search() {
        // Two-dimensional Gaussian regression: compare the predictor-interval
        // reduction against a direct multi-start search over θ for each corner row.
        let m = ContaminatedModel::new(
            LikelihoodModel::GaussianLinear { sigma: 1.0, dim: 2 },
            ContaminationDensity::StudentT {
                nu: 5.0,
                scale: 5.0,
                location: Location::Predictor(vec![0.5, -0.2]),
            },
            0.3,
        )
        .unwrap();
        let center = vec![0.5, -0.2];
        let bx = NeighbourhoodBox::new(center.clone(), 0.15).unwrap();
        let opts = SearchOptions::default();
        let e = eta_bound(&m, &bx, &center, &CovariateDomain::Corners(2), &opts).unwrap();
        let mut sup = f64::NEG_INFINITY;
        for row in crate::privacy::search::covariate_corners(2) {
            let (_, v) = extremize(
                |x| {
                    multistart_box(
                        |th: &[f64]| m.log_likelihood_ratio(x, Some(&row), th, &center).unwrap(),
                        &center,
                        0.15,
                        true,
                        4,
                        7,
                    )
                    .1
                },
                -25.0,
                25.0,
                401,
                true,
            );
            sup = sup.max(v);
        }
        assert!((e.log_sup - sup).abs() < 1e-6, "{} vs {}", e.log_sup, sup);
        assert!(!e.boundary_witness);
        assert!(bx.contains(&e.sup_witness.theta));
        let row = e.sup_witness.row.as_deref();
        let at_witness = m
            .log_likelihood_ratio(e.sup_witness.x, row, &e.sup_witness.theta, &center)
            .unwrap();
        assert!((at_witness - e.log_sup).abs() < 1e-9);
    }

    #[test]
    fn unbounded_ratio_escalates() {
        // A tiny p with a narrow contamination cannot tame the Gaussian tail.
        let m = ContaminatedModel::new(
            LikelihoodModel::GaussianLinear { sigma: 1.0, dim: 1 },
            ContaminationDensity::StudentT {
                nu: 50.0,
                scale: 0.01,
                location: Location::Global(0.0),
            },
            1e-300,
        )
        .unwrap();
        let bx = NeighbourhoodBox::new(vec![0.0], 3.0).unwrap();
        let r = eta_bound(&m, &bx, &[0.0], &CovariateDomain::None, &SearchOptions::default());
        assert!(matches!(r, Err(Error::UnboundedRatio { .. })));
    }

    #[test]
    fn alpha_beta_trivial_cases() {
        let opts = SearchOptions::default();
        let c = cloud(vec![vec![0.4], vec![-0.2]], vec![0.5, 0.5]);
        let r = expectation_ratio(&c, &logistic(1.0), &[0.0], &CovariateDomain::Corners(1), &opts).unwrap();
        assert_eq!((r.alpha(), r.beta()), (1.0, 1.0));

        // Single particle: α and β equal η's inner solve on a point box.
        let m = gaussian(0.25);
        let single = cloud(vec![vec![0.4]], vec![1.0]);
        let r = expectation_ratio(&single, &m, &[0.0], &CovariateDomain::Corners(1), &opts).unwrap();
        let point = NeighbourhoodBox::new(vec![0.4], 0.0).unwrap();
        let e = eta_bound(&m, &point, &[0.0], &CovariateDomain::Corners(1), &opts).unwrap();
        assert!((r.log_alpha - e.log_sup).abs() < 1e-9);
        assert!((r.log_beta - e.log_inf).abs() < 1e-9);
    }

    #[test]
    fn alpha_beta_two_particle_logistic_brute_force() {
        let m = logistic(0.3);
        let c = cloud(vec![vec![0.7], vec![-0.4]], vec![0.5, 0.5]);
        let r = expectation_ratio(&c, &m, &[0.1], &CovariateDomain::Corners(1), &SearchOptions::default()).unwrap();
        let g = |x: f64| {
            0.5 * m.likelihood_ratio(x, Some(&[1.0]), &[0.7], &[0.1]).unwrap()
                + 0.5 * m.likelihood_ratio(x, Some(&[1.0]), &[-0.4], &[0.1]).unwrap()
        };
        assert!((r.alpha() - g(0.0).max(g(1.0))).abs() < 1e-12);
        assert!((r.beta() - g(0.0).min(g(1.0))).abs() < 1e-12);
    }
}
