//! Python bindings for `contamdp`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use contamdp::analysis::{self, IntegrationDomain};
use contamdp::baselines;
use contamdp::harness::{self, ExperimentKind, Overrides};
use contamdp::inference::{self, LaplaceOptions, MapOptions};
use contamdp::models::{self, ContaminationDensity, Covariates, Dataset, LikelihoodModel, Location};
use contamdp::privacy::{self, EpsilonSetup, PrivacyBudget, ZcdpBudget};
use contamdp::quadrature::QuadConfig;
use contamdp::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn dataset(y: Vec<f64>, w: Option<Vec<Vec<f64>>>) -> PyResult<Dataset> {
    let cov = w.map(|rows| Covariates::from_rows(&rows)).transpose().map_err(to_py)?;
    Dataset::new(y, cov).map_err(to_py)
}

/// A likelihood `f` mixed with a contamination density `g` at rate `p`.
#[pyclass(name = "ContaminatedModel", frozen)]
struct PyModel {
    inner: models::ContaminatedModel,
}

#[pymethods]
impl PyModel {
    /// Truncated normal mean with truncated t contamination at `location`.
    #[staticmethod]
    #[pyo3(signature = (p, sigma=8.0, lower=-270.0, upper=330.0, nu=5.0, g_scale=8.0, location=30.0))]
    fn truncated_normal_mean(p: f64, sigma: f64, lower: f64, upper: f64, nu: f64, g_scale: f64, location: f64) -> PyResult<Self> {
        let inner = models::ContaminatedModel::new(
            LikelihoodModel::TruncatedNormalMean { sigma, lower, upper },
            ContaminationDensity::TruncatedStudentT {
                nu,
                scale: g_scale,
                location: Location::Global(location),
                lower,
                upper,
            },
            p,
        )
        .map_err(to_py)?;
        Ok(PyModel { inner })
    }

    /// `N(θ, σ²)` with t contamination at a fixed location.
    #[staticmethod]
    #[pyo3(signature = (p, sigma=1.0, nu=5.0, g_scale=1.0, location=0.0))]
    fn gaussian_mean(p: f64, sigma: f64, nu: f64, g_scale: f64, location: f64) -> PyResult<Self> {
        let inner = models::ContaminatedModel::new(
            LikelihoodModel::GaussianLinear { sigma, dim: 1 },
            ContaminationDensity::StudentT {
                nu,
                scale: g_scale,
                location: Location::Global(location),
            },
            p,
        )
        .map_err(to_py)?;
        Ok(PyModel { inner })
    }

    /// Linear regression, unit noise, t₅ contamination centred at `θ*ᵀw`.
    #[staticmethod]
    #[pyo3(signature = (theta_star, p, g_scale=5.0))]
    fn linear(theta_star: Vec<f64>, p: f64, g_scale: f64) -> PyResult<Self> {
        let dim = theta_star.len();
        let inner = models::ContaminatedModel::new(
            LikelihoodModel::GaussianLinear { sigma: 1.0, dim },
            ContaminationDensity::StudentT {
                nu: 5.0,
                scale: g_scale,
                location: Location::Predictor(theta_star),
            },
            p,
        )
        .map_err(to_py)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    fn logistic(dim: usize, p: f64) -> PyResult<Self> {
        let inner =
            models::ContaminatedModel::new(LikelihoodModel::Logistic { dim }, ContaminationDensity::BernoulliHalf, p)
                .map_err(to_py)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (theta_star, p, g_scale=5.0))]
    fn cauchy(theta_star: Vec<f64>, p: f64, g_scale: f64) -> PyResult<Self> {
        let dim = theta_star.len();
        let inner = models::ContaminatedModel::new(
            LikelihoodModel::CauchyRegression { dim },
            ContaminationDensity::Cauchy {
                scale: g_scale,
                location: Location::Predictor(theta_star),
            },
            p,
        )
        .map_err(to_py)?;
        Ok(PyModel { inner })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn with_rate(&self, p: f64) -> PyResult<Self> {
        Ok(PyModel {
            inner: self.inner.with_rate(p).map_err(to_py)?,
        })
    }

    #[pyo3(signature = (x, theta, w=None))]
    fn log_density(&self, x: f64, theta: Vec<f64>, w: Option<Vec<f64>>) -> PyResult<f64> {
        self.inner.log_density(x, w.as_deref(), &theta).map_err(to_py)
    }

    /// Draws `n` clean observations; returns `(y, w)` with `w` `None` for
    /// models without covariates.
    #[pyo3(signature = (theta_star, n, seed))]
    fn sample(&self, theta_star: Vec<f64>, n: usize, seed: u64) -> PyResult<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
        let base = self.inner.base();
        let cov = match base {
            LikelihoodModel::TruncatedNormalMean { .. } => None,
            _ if base.dim() == 1 => None,
            _ => Some(Covariates::random(n, base.dim(), &mut models::rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15))),
        };
        let d = models::sample_dataset(base, &theta_star, cov, n, seed).map_err(to_py)?;
        let w = d.covariates().map(|c| (0..c.rows()).map(|i| c.row(i).to_vec()).collect());
        Ok((d.observations().to_vec(), w))
    }

    /// Replaces each observation by a draw from `g` with probability `p`.
    #[pyo3(signature = (y, seed, w=None))]
    fn contaminate(&self, y: Vec<f64>, seed: u64, w: Option<Vec<Vec<f64>>>) -> PyResult<Vec<f64>> {
        let d = self.inner.contaminate(&dataset(y, w)?, seed).map_err(to_py)?;
        Ok(d.observations().to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "ContaminatedModel(kind={}, contamination={}, p={}, dim={})",
            self.inner.base().kind(),
            self.inner.contamination().kind(),
            self.inner.p(),
            self.inner.dim()
        )
    }
}

/// Independent Gaussian prior.
#[pyclass(name = "GaussianPrior", frozen)]
struct PyPrior {
    inner: inference::GaussianPrior,
}

#[pymethods]
impl PyPrior {
    #[new]
    fn new(mean: Vec<f64>, sd: Vec<f64>) -> PyResult<Self> {
        Ok(PyPrior {
            inner: inference::GaussianPrior::new(mean, sd).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn isotropic(dim: usize, mean: f64, sd: f64) -> PyResult<Self> {
        Ok(PyPrior {
            inner: inference::GaussianPrior::isotropic(dim, mean, sd).map_err(to_py)?,
        })
    }

    fn log_density(&self, theta: Vec<f64>) -> f64 {
        self.inner.log_density(&theta)
    }
}

#[pyfunction]
#[pyo3(signature = (model, prior, y, w=None, init=None))]
fn map_estimate(model: &PyModel, prior: &PyPrior, y: Vec<f64>, w: Option<Vec<Vec<f64>>>, init: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
    let data = dataset(y, w)?;
    let init = init.unwrap_or_else(|| prior.inner.mean().to_vec());
    let m = inference::map_estimate(&model.inner, &prior.inner, &data, &init, &MapOptions::default()).map_err(to_py)?;
    Ok(m.theta)
}

/// Returns `(mode, covariance)` of the Laplace approximation.
#[pyfunction]
#[pyo3(signature = (model, prior, y, w=None))]
fn laplace(model: &PyModel, prior: &PyPrior, y: Vec<f64>, w: Option<Vec<Vec<f64>>>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let data = dataset(y, w)?;
    let m = inference::map_estimate(&model.inner, &prior.inner, &data, prior.inner.mean(), &MapOptions::default())
        .map_err(to_py)?;
    let la = inference::laplace_approximation(&model.inner, &prior.inner, &data, &m.theta, &LaplaceOptions { grad_tol: 1e-5 })
        .map_err(to_py)?;
    let cov = &la.cov_factor * la.cov_factor.transpose();
    let d = la.dim();
    Ok((la.mode.clone(), (0..d).map(|i| (0..d).map(|j| cov[(i, j)]).collect()).collect()))
}

#[pyclass(name = "EpsilonEstimate", frozen, get_all)]
struct PyEpsilonEstimate {
    epsilon: f64,
    n: usize,
    p: f64,
    delta: f64,
    q: f64,
    /// Per-repeat ε̂; `None` marks an invalid repeat.
    values: Vec<Option<f64>>,
    phis: Vec<f64>,
    errors: Vec<String>,
}

#[pymethods]
impl PyEpsilonEstimate {
    fn __repr__(&self) -> String {
        format!(
            "EpsilonEstimate(epsilon={:.4}, n={}, p={:.4}, delta={:e}, valid={}/{})",
            self.epsilon,
            self.n,
            self.p,
            self.delta,
            self.values.iter().flatten().count(),
            self.values.len()
        )
    }
}

/// q-th percentile of ε̂ over `repeats` independent runs.
#[pyfunction]
#[pyo3(signature = (model, prior, theta_star, n, delta, repeats=200, q=99.0, seed=0, particles=2000, workers=1))]
#[allow(clippy::too_many_arguments)]
fn estimate_epsilon(
    py: Python<'_>,
    model: &PyModel,
    prior: &PyPrior,
    theta_star: Vec<f64>,
    n: usize,
    delta: f64,
    repeats: usize,
    q: f64,
    seed: u64,
    particles: usize,
    workers: usize,
) -> PyResult<PyEpsilonEstimate> {
    let mut setup = EpsilonSetup::new(model.inner.clone(), prior.inner.clone(), theta_star, n, delta);
    setup.particles = particles;
    let est = py
        .detach(|| privacy::estimate_epsilon(&setup, repeats, q, seed, workers))
        .map_err(to_py)?;
    Ok(PyEpsilonEstimate {
        epsilon: est.epsilon,
        n: est.n,
        p: est.p,
        delta: est.delta,
        q: est.q,
        values: est.values(),
        phis: est.phis(),
        errors: est
            .repeats
            .iter()
            .filter_map(|r| r.outcome.as_ref().err().cloned())
            .collect(),
    })
}

#[pyfunction]
fn zcdp_from_dp(epsilon: f64, delta: f64) -> PyResult<f64> {
    let b = PrivacyBudget::new(epsilon, delta).map_err(to_py)?;
    Ok(privacy::zcdp_from_dp(b).map_err(to_py)?.rho)
}

#[pyfunction]
fn dp_from_zcdp(rho: f64, delta: f64) -> PyResult<f64> {
    let r = ZcdpBudget::new(rho).map_err(to_py)?;
    Ok(privacy::dp_from_zcdp(r, delta).map_err(to_py)?.epsilon)
}

#[pyfunction]
#[pyo3(signature = (data, rho, iterations, seed, center=0.0, radius=600.0, sigma=1.0))]
fn coinpress_mean(data: Vec<f64>, rho: f64, iterations: usize, seed: u64, center: f64, radius: f64, sigma: f64) -> PyResult<f64> {
    let cfg = baselines::CoinPressConfig::new(iterations, center, radius, sigma);
    Ok(baselines::coinpress_mean(&data, rho, &cfg, seed).map_err(to_py)?.estimate)
}

#[pyfunction]
fn clipped_mean(data: Vec<f64>, rho: f64, lower: f64, upper: f64, seed: u64) -> PyResult<f64> {
    Ok(baselines::clipped_mean(&data, rho, (lower, upper), seed).map_err(to_py)?.estimate)
}

#[pyfunction]
fn gaussian_mechanism_mean(data: Vec<f64>, rho: f64, lower: f64, upper: f64, seed: u64) -> PyResult<f64> {
    Ok(baselines::gaussian_mechanism_mean(&data, rho, (lower, upper), seed)
        .map_err(to_py)?
        .estimate)
}

/// One posterior draw given already contaminated data.
#[pyfunction]
fn bayes_mean_draw(model: &PyModel, prior: &PyPrior, y: Vec<f64>, seed: u64) -> PyResult<f64> {
    let d = Dataset::from_observations(y);
    Ok(baselines::bayes_mean_draw(&model.inner, &prior.inner, &d, seed).map_err(to_py)?.estimate)
}

#[pyfunction]
#[pyo3(signature = (model, theta1, theta2, w=None))]
fn hellinger(model: &PyModel, theta1: Vec<f64>, theta2: Vec<f64>, w: Option<Vec<f64>>) -> PyResult<f64> {
    analysis::hellinger_between(&model.inner, &theta1, &theta2, w.as_deref(), &analysis::hellinger_quad()).map_err(to_py)
}

/// Hellinger distance between two `N(μ, σ²)` densities by quadrature.
#[pyfunction]
fn hellinger_gaussians(mu1: f64, sd1: f64, mu2: f64, sd2: f64) -> PyResult<f64> {
    let lp = |x: f64, m: f64, s: f64| -0.5 * ((x - m) / s).powi(2) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let dom = IntegrationDomain {
        domain: models::ObservationDomain::Real,
        center: 0.5 * (mu1 + mu2),
        scale: sd1.max(sd2) + 0.5 * (mu1 - mu2).abs(),
    };
    analysis::hellinger(|x| lp(x, mu1, sd1), |x| lp(x, mu2, sd2), &dom, &analysis::hellinger_quad()).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (model, theta, w=None, tol=1e-10))]
fn fisher_gap(model: &PyModel, theta: Vec<f64>, w: Option<Vec<f64>>, tol: f64) -> PyResult<f64> {
    analysis::fisher_gap(&model.inner, &theta, w.as_deref(), &QuadConfig::with_tol(tol)).map_err(to_py)
}

/// Least-squares fit of `ln ε = a + b ln n`; returns `(slope, intercept, extrapolated)`.
#[pyfunction]
#[pyo3(signature = (ns, epsilons, targets=vec![]))]
fn decay_fit(ns: Vec<f64>, epsilons: Vec<f64>, targets: Vec<f64>) -> PyResult<(f64, f64, Vec<f64>)> {
    if ns.len() != epsilons.len() {
        return Err(PyValueError::new_err("ns and epsilons differ in length"));
    }
    let pairs: Vec<(f64, f64)> = ns.into_iter().zip(epsilons).collect();
    let (fit, ext) = analysis::decay_fit(&pairs, &targets).map_err(to_py)?;
    Ok((fit.slope, fit.intercept, ext.into_iter().map(|(_, e)| e).collect()))
}

/// Runs a harness experiment from a JSON config string. Returns the exit
/// code and `(name, csv_text)` for every table; writes them when `write` is set.
#[pyfunction]
#[pyo3(signature = (kind, config="{}", seed=None, workers=None, out=None, write=false))]
fn run_experiment(
    py: Python<'_>,
    kind: &str,
    config: &str,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<std::path::PathBuf>,
    write: bool,
) -> PyResult<(i32, Vec<(String, String)>)> {
    let kind: ExperimentKind =
        serde_json::from_value(serde_json::Value::String(kind.to_string())).map_err(|_| PyValueError::new_err(format!("unknown experiment '{kind}'")))?;
    let ov = Overrides { seed, workers, out };
    let res = py.detach(|| harness::run_experiment(kind, config, &ov)).map_err(to_py)?;
    if write {
        res.write().map_err(to_py)?;
    }
    let mut tables = Vec::new();
    for t in &res.tables {
        let text = String::from_utf8(t.to_bytes().map_err(to_py)?).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        tables.push((t.name.clone(), text));
    }
    Ok((res.exit_code, tables))
}

#[pymodule]
fn contamdp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyPrior>()?;
    m.add_class::<PyEpsilonEstimate>()?;
    m.add_function(wrap_pyfunction!(map_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(laplace, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(zcdp_from_dp, m)?)?;
    m.add_function(wrap_pyfunction!(dp_from_zcdp, m)?)?;
    m.add_function(wrap_pyfunction!(coinpress_mean, m)?)?;
    m.add_function(wrap_pyfunction!(clipped_mean, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_mechanism_mean, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_mean_draw, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger_gaussians, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_gap, m)?)?;
    m.add_function(wrap_pyfunction!(decay_fit, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
