//! Property suites shared by the `properties` and `acceptance` targets.

use contamdp::analysis::{hellinger, hellinger_quad, prior_mass_bounds, IntegrationDomain};
use contamdp::baselines::{clipped_mean, coinpress_mean, gaussian_mechanism_mean, CoinPressConfig};
use contamdp::inference::{
    laplace_approximation, map_estimate, CloudTarget, GaussianPrior, LaplaceOptions, MapOptions, ParticleCloud,
    Posterior,
};
use contamdp::models::{ContaminatedModel, ContaminationDensity, Covariates, Dataset, LikelihoodModel, Location};
use contamdp::privacy::{
    choose_phi, dp_from_zcdp, estimate_epsilon_once, percentile_nearest_rank, zcdp_from_dp, EpsilonSetup,
    PrivacyBudget, ZcdpBudget,
};
use contamdp::ObservationDomain;
use proptest::prelude::*;

// Shrunk failures are reported, not persisted; the shared module has no
// source root proptest can locate.
fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(n)
    }
}

fn linear(p: f64, dim: usize) -> ContaminatedModel {
    ContaminatedModel::new(
        LikelihoodModel::GaussianLinear { sigma: 1.5, dim },
        ContaminationDensity::StudentT {
            nu: 5.0,
            scale: 5.0,
            location: Location::Predictor(vec![0.3; dim]),
        },
        p,
    )
    .unwrap()
}

fn log_normal(x: f64, m: f64, s: f64) -> f64 {
    -0.5 * ((x - m) / s).powi(2) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

pub fn mixture_identity() {
    proptest!(cases(64), |(x in -30.0..30.0f64, t0 in -3.0..3.0f64, t1 in -3.0..3.0f64, w1 in -1.0..1.0f64, p in 0.0..1.0f64)| {
        let m = linear(p, 2);
        let w = [1.0, w1];
        let theta = [t0, t1];
        let lin = t0 + t1 * w1;
        let f = m.base().log_pdf(x, lin).exp();
        let g = m.contamination().log_pdf(x, Some(&w)).exp();
        let k = m.log_density(x, Some(&w), &theta).unwrap().exp();
        prop_assert!((k - ((1.0 - p) * f + p * g)).abs() <= 1e-12 * k.max(1e-300) + 1e-300);
    });
}

pub fn mixture_identity_truncated() {
    proptest!(cases(64), |(x in -270.0..330.0f64, theta in 0.0..60.0f64, p in 0.0..1.0f64)| {
        let m = ContaminatedModel::new(
            LikelihoodModel::TruncatedNormalMean { sigma: 8.0, lower: -270.0, upper: 330.0 },
            ContaminationDensity::TruncatedStudentT { nu: 5.0, scale: 8.0, location: Location::Global(30.0), lower: -270.0, upper: 330.0 },
            p,
        ).unwrap();
        let f = m.base().log_pdf(x, theta).exp();
        let g = m.contamination().log_pdf(x, None).exp();
        let k = m.log_density(x, None, &[theta]).unwrap().exp();
        prop_assert!((k - ((1.0 - p) * f + p * g)).abs() <= 1e-12 * k.max(1e-300) + 1e-300);
    });
}

pub fn weights_normalize() {
    proptest!(cases(64), |(lw in prop::collection::vec(-700.0..700.0f64, 1..200))| {
        let particles: Vec<Vec<f64>> = (0..lw.len()).map(|i| vec![i as f64]).collect();
        let c = ParticleCloud::from_log_weights(particles, &lw, CloudTarget::Full).unwrap();
        let s: f64 = c.weights.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(c.weights.iter().all(|w| *w >= 0.0));
    });
}

pub fn choose_phi_tail_bound() {
    proptest!(cases(64), |(pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -3.0..3.0f64), 5..120), delta in 0.001..0.9f64)| {
        let particles: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0, p.1]).collect();
        let lw: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let c = ParticleCloud::from_log_weights(particles, &lw, CloudTarget::Full).unwrap();
        let (phi, delta_hat) = choose_phi(&c, &[0.0, 0.0], delta).unwrap();
        prop_assert!(delta_hat <= delta + 1e-12);
        let outside: f64 = c.particles.iter().zip(&c.weights)
            .filter(|(q, _)| q.iter().fold(0.0f64, |m, v| m.max(v.abs())) > phi)
            .map(|(_, w)| w)
            .sum();
        prop_assert!((outside - delta_hat).abs() < 1e-12);
    });
}

pub fn percentile_monotone() {
    proptest!(cases(64), |(v in prop::collection::vec(-1e3..1e3f64, 1..300), a in 0.1..100.0f64, b in 0.1..100.0f64)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(percentile_nearest_rank(&v, lo).unwrap() <= percentile_nearest_rank(&v, hi).unwrap());
    });
}

pub fn gradient_matches_finite_differences() {
    proptest!(cases(64), |(seed in 0u64..1000, p in 0.0..0.95f64, t0 in -2.0..2.0f64, t1 in -2.0..2.0f64, t2 in -2.0..2.0f64, model_kind in 0usize..3)| {
        let dim = 3;
        let model = match model_kind {
            0 => linear(p, dim),
            1 => ContaminatedModel::new(LikelihoodModel::Logistic { dim }, ContaminationDensity::BernoulliHalf, p).unwrap(),
            _ => ContaminatedModel::new(
                LikelihoodModel::CauchyRegression { dim },
                ContaminationDensity::Cauchy { scale: 5.0, location: Location::Predictor(vec![0.5, -0.5, 0.5]) },
                p,
            ).unwrap(),
        };
        let prior = GaussianPrior::isotropic(dim, 0.0, 10.0).unwrap();
        let mut rng = contamdp::models::rng_from_seed(seed);
        let cov = Covariates::random(40, dim, &mut rng);
        let data = contamdp::models::sample_dataset(model.base(), &[0.5, -0.5, 0.5], Some(cov), 40, seed).unwrap();
        let post = Posterior::new(&model, &prior, &data).unwrap();
        let theta = [t0, t1, t2];
        let (_, g) = post.log_density_and_gradient(&theta);
        for j in 0..dim {
            let h = 1e-5;
            let mut a = theta; a[j] += h;
            let mut b = theta; b[j] -= h;
            let fd = (post.log_density(&a) - post.log_density(&b)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()), "coord {j}: fd {fd} analytic {}", g[j]);
        }
    });
}

pub fn laplace_exact_on_conjugate() {
    proptest!(cases(64), |(ys in prop::collection::vec(-10.0..10.0f64, 2..60), m0 in -5.0..5.0f64, s0 in 0.5..10.0f64)| {
        let sigma = 1.5;
        let model = ContaminatedModel::new(
            LikelihoodModel::GaussianLinear { sigma, dim: 1 },
            ContaminationDensity::StudentT { nu: 5.0, scale: 1.0, location: Location::Global(0.0) },
            0.0,
        ).unwrap();
        let prior = GaussianPrior::new(vec![m0], vec![s0]).unwrap();
        let data = Dataset::from_observations(ys.clone());
        let n = ys.len() as f64;
        let prec = 1.0 / (s0 * s0) + n / (sigma * sigma);
        let mean = (m0 / (s0 * s0) + ys.iter().sum::<f64>() / (sigma * sigma)) / prec;
        let map = map_estimate(&model, &prior, &data, &[m0], &MapOptions { tol: 1e-10, max_iter: 500 }).unwrap();
        let la = laplace_approximation(&model, &prior, &data, &map.theta, &LaplaceOptions { grad_tol: 1e-8 }).unwrap();
        prop_assert!((la.mode[0] - mean).abs() < 1e-8 * (1.0 + mean.abs()));
        let var = la.marginal_sd()[0].powi(2);
        prop_assert!((var - 1.0 / prec).abs() < 1e-8 * (1.0 / prec).max(1.0) , "var {var} exact {}", 1.0 / prec);
    });
}

pub fn hellinger_gaussian_closed_form() {
    proptest!(cases(64), |(m1 in -5.0..5.0f64, m2 in -5.0..5.0f64, s1 in 0.3..4.0f64, s2 in 0.3..4.0f64)| {
        let dom = IntegrationDomain { domain: ObservationDomain::Real, center: 0.5 * (m1 + m2), scale: s1.max(s2) + 0.5 * (m1 - m2).abs() };
        let h = hellinger(|x| log_normal(x, m1, s1), |x| log_normal(x, m2, s2), &dom, &hellinger_quad()).unwrap();
        let v = s1 * s1 + s2 * s2;
        let exact = (1.0 - (2.0 * s1 * s2 / v).sqrt() * (-(m1 - m2).powi(2) / (4.0 * v)).exp()).max(0.0).sqrt();
        prop_assert!((h - exact).abs() < 1e-6, "quad {h} exact {exact}");
    });
}

pub fn budget_accounting_exact() {
    proptest!(cases(64), |(rho in 1e-4..10.0f64, t in 1usize..15, eps in 0.01..5.0f64, delta in 1e-9..0.1f64)| {
        let split = CoinPressConfig::new(t, 0.0, 100.0, 1.0).split(rho);
        prop_assert_eq!(split.len(), t);
        prop_assert!((split.iter().sum::<f64>() - rho).abs() <= 1e-15 * rho.max(1.0));
        let z = zcdp_from_dp(PrivacyBudget::new(eps, delta).unwrap()).unwrap();
        let back = dp_from_zcdp(z, delta).unwrap();
        prop_assert!(back.epsilon >= eps * (1.0 - 1e-12));
        prop_assert!(ZcdpBudget::new(rho).is_ok());
    });
}

pub fn estimators_spend_granted_budget() {
    proptest!(cases(16), |(seed in 0u64..10_000, rho in 1e-3..5.0f64)| {
        let data: Vec<f64> = (0..200).map(|i| 30.0 + ((i * 37 + seed as usize) % 50) as f64 / 5.0 - 5.0).collect();
        for r in [
            coinpress_mean(&data, rho, &CoinPressConfig::new(3, 0.0, 600.0, 8.0), seed).unwrap(),
            coinpress_mean(&data, rho, &CoinPressConfig::new(10, 0.0, 600.0, 8.0), seed).unwrap(),
            clipped_mean(&data, rho, (-270.0, 330.0), seed).unwrap(),
            gaussian_mechanism_mean(&data, rho, (-270.0, 330.0), seed).unwrap(),
        ] {
            prop_assert!(r.spent <= r.granted * (1.0 + 1e-15));
            prop_assert!((r.spent - rho).abs() <= 1e-15 * rho.max(1.0));
        }
    });
}

pub fn prior_mass_bounds_below_mass() {
    proptest!(cases(16), |(t in prop::collection::vec(-2.0..2.0f64, 1..4), r in 0.05..4.0f64, seed in 0u64..1000)| {
        let b = prior_mass_bounds(&t, r, 40_000, seed).unwrap();
        let slack = 4.0 * b.mc_se + 1e-3;
        prop_assert!(b.small_r <= b.mc + slack, "{b:?}");
        if let Some(l) = b.large_r {
            prop_assert!(l <= b.mc + slack, "{b:?}");
        }
    });
}

pub fn epsilon_hat_nonnegative() {
    proptest!(cases(16), |(seed in 0u64..1_000_000, n in 30usize..200, p in 0.05..0.9f64)| {
        let model = ContaminatedModel::new(
            LikelihoodModel::TruncatedNormalMean { sigma: 8.0, lower: -270.0, upper: 330.0 },
            ContaminationDensity::TruncatedStudentT { nu: 5.0, scale: 8.0, location: Location::Global(30.0), lower: -270.0, upper: 330.0 },
            p,
        ).unwrap();
        let prior = GaussianPrior::new(vec![40.0], vec![40.0]).unwrap();
        let mut s = EpsilonSetup::new(model, prior, vec![30.0], n, 1.0 / (10.0 * n as f64));
        s.particles = 300;
        let o = estimate_epsilon_once(&s, None, seed).unwrap();
        prop_assert!(o.epsilon >= 0.0);
        prop_assert!(o.log_eta >= 0.0);
    });
}

pub fn prior_mass_one_dimensional_exact() {
    // N(0,1) mass of [t − r, t + r] in closed form.
    let phi = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
    for (t, r) in [(0.0, 0.5), (1.0, 0.3), (-1.5, 2.0), (0.5, 3.0)] {
        let exact = phi(t + r) - phi(t - r);
        let b = prior_mass_bounds(&[t], r, 0, 0).unwrap();
        assert!(b.small_r <= exact + 1e-12, "{t} {r}");
        if let Some(l) = b.large_r {
            assert!(l <= exact + 1e-12, "{t} {r}");
        }
    }
}

/// Every suite with its name.
pub const SUITES: &[(&str, fn())] = &[
    ("mixture_identity", mixture_identity),
    ("mixture_identity_truncated", mixture_identity_truncated),
    ("weights_normalize", weights_normalize),
    ("choose_phi_tail_bound", choose_phi_tail_bound),
    ("percentile_monotone", percentile_monotone),
    ("gradient_matches_finite_differences", gradient_matches_finite_differences),
    ("laplace_exact_on_conjugate", laplace_exact_on_conjugate),
    ("hellinger_gaussian_closed_form", hellinger_gaussian_closed_form),
    ("budget_accounting_exact", budget_accounting_exact),
    ("estimators_spend_granted_budget", estimators_spend_granted_budget),
    ("prior_mass_bounds_below_mass", prior_mass_bounds_below_mass),
    ("epsilon_hat_nonnegative", epsilon_hat_nonnegative),
    ("prior_mass_one_dimensional_exact", prior_mass_one_dimensional_exact),
];
