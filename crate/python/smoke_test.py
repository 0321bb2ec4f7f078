"""Smoke test for the contamdp_py extension.

Build it first, e.g. `maturin develop -m crates/python/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import math
import random

import contamdp_py as cd


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def conjugate_laplace():
    # N(θ, 1) data with a N(0, 1) prior: posterior N(Σy/(n+1), 1/(n+1)).
    rng = random.Random(7)
    y = [rng.gauss(0.3, 1.0) for _ in range(50)]
    model = cd.ContaminatedModel.gaussian_mean(0.0)
    prior = cd.GaussianPrior([0.0], [1.0])
    mode, cov = cd.laplace(model, prior, y)
    close(mode[0], sum(y) / (len(y) + 1), 1e-8)
    close(cov[0][0], 1.0 / (len(y) + 1), 1e-8)


def accounting():
    rho = cd.zcdp_from_dp(0.94, 1e-4)
    close(rho, 0.94**2 / (2 * math.log(1e4)), 1e-15)
    close(cd.dp_from_zcdp(rho, 1e-4), 0.94, 1e-12)


def hellinger():
    # Closed form for two Gaussians.
    m1, s1, m2, s2 = 0.0, 1.0, 1.5, 2.0
    bc = math.sqrt(2 * s1 * s2 / (s1**2 + s2**2)) * math.exp(-((m1 - m2) ** 2) / (4 * (s1**2 + s2**2)))
    close(cd.hellinger_gaussians(m1, s1, m2, s2), math.sqrt(1 - bc), 1e-6)


def decay():
    ns = [1e3, 1e4, 1e5]
    slope, _, ext = cd.decay_fit(ns, [n**-0.5 for n in ns], [1e6])
    close(slope, -0.5, 1e-12)
    close(ext[0], 1e-3, 1e-12)


def epsilon():
    model = cd.ContaminatedModel.truncated_normal_mean(100 ** -0.125)
    prior = cd.GaussianPrior([40.0], [40.0])
    est = cd.estimate_epsilon(model, prior, [30.0], 100, 1e-3, repeats=20, particles=200, seed=1)
    assert est.epsilon >= 0.0
    assert len(est.values) == 20
    print(est)


def harness():
    code, tables = cd.run_experiment("fisher-check")
    assert code == 0
    name, text = tables[0]
    assert name == "fisher_check"
    assert text.startswith("#")
    try:
        cd.run_experiment("table1", '{"n_grid": []}')
    except ValueError:
        pass
    else:
        raise AssertionError("empty grid accepted")


def baselines():
    rng = random.Random(3)
    data = [rng.gauss(30.0, 8.0) for _ in range(5000)]
    rho = cd.zcdp_from_dp(0.46, 2e-5)
    for est in (
        cd.coinpress_mean(data, rho, 10, seed=1),
        cd.clipped_mean(data, rho, -270.0, 330.0, 1),
        cd.gaussian_mechanism_mean(data, rho, -270.0, 330.0, 1),
    ):
        assert math.isfinite(est)


if __name__ == "__main__":
    for check in (conjugate_laplace, accounting, hellinger, decay, epsilon, harness, baselines):
        check()
        print(f"ok {check.__name__}")
