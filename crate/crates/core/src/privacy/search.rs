//! Bounded searches over observations, linear predictors and parameter boxes.

use rand::Rng;

use crate::models::{rng_from_seed, ContaminatedModel, ObservationDomain};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Tuning for the ratio searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Grid size over a continuous observation interval before golden-section refinement.
    pub x_grid: usize,
    /// Grid size over the linear-predictor interval of a box.
    pub predictor_grid: usize,
    /// Half-width of the observation search interval on an unbounded domain,
    /// in units of the model's noise scale, beyond the extreme predictions.
    pub widen: f64,
    /// Random interior starts for [`multistart_box`].
    pub random_starts: usize,
    /// Largest tolerated `|log d|` when `p > 0`.
    pub log_ratio_limit: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            x_grid: 512,
            predictor_grid: 17,
            widen: 20.0,
            random_starts: 32,
            log_ratio_limit: 50.0,
        }
    }
}

/// Where the observation search runs.
#[derive(Debug, Clone, PartialEq)]
pub enum XSearch {
    Discrete(Vec<f64>),
    Interval { lo: f64, hi: f64 },
}

impl XSearch {
    /// Search region for observations given the range of linear predictors in play.
    pub fn for_model(model: &ContaminatedModel, pred_lo: f64, pred_hi: f64, widen: f64) -> Self {
        match model.domain() {
            ObservationDomain::Binary => XSearch::Discrete(vec![0.0, 1.0]),
            ObservationDomain::Interval { lower, upper } => XSearch::Interval { lo: lower, hi: upper },
            ObservationDomain::Real => {
                let pad = widen * model.base().noise_scale();
                XSearch::Interval {
                    lo: pred_lo - pad,
                    hi: pred_hi + pad,
                }
            }
        }
    }
}

/// Covariate rows the ratio searches range over.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateDomain {
    /// Data carry no covariates; the parameter is scalar.
    None,
    /// Corners of `[-1, 1]^d` with the intercept fixed at 1.
    Corners(usize),
    /// An explicit list of rows.
    Rows(Vec<Vec<f64>>),
}

impl CovariateDomain {
    pub fn rows(&self) -> Vec<Option<Vec<f64>>> {
        match self {
            CovariateDomain::None => vec![None],
            CovariateDomain::Corners(d) => covariate_corners(*d).into_iter().map(Some).collect(),
            CovariateDomain::Rows(rows) => rows.iter().cloned().map(Some).collect(),
        }
    }
}

/// All `2^(d-1)` sign patterns with a leading 1.
pub fn covariate_corners(dim: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 1);
    let free = dim - 1;
    (0..1usize << free)
        .map(|mask| {
            let mut row = Vec::with_capacity(dim);
            row.push(1.0);
            for j in 0..free {
                row.push(if mask >> j & 1 == 1 { 1.0 } else { -1.0 });
            }
            row
        })
        .collect()
}

/// Grid search on `[lo, hi]` followed by golden-section refinement inside the
/// cells adjacent to the best grid point. Returns `(argument, value)`.
pub fn extremize<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, grid: usize, maximize: bool) -> (f64, f64) {
    let sign = if maximize { 1.0 } else { -1.0 };
    if hi <= lo {
        return (lo, f(lo));
    }
    let grid = grid.max(3);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best = (lo, sign * f(lo));
    let mut best_idx = 0;
    for i in 1..grid {
        let x = if i + 1 == grid { hi } else { lo + step * i as f64 };
        let v = sign * f(x);
        if v > best.1 {
            best = (x, v);
            best_idx = i;
        }
    }
    let a = lo + step * best_idx.saturating_sub(1) as f64;
    let b = (lo + step * (best_idx + 1) as f64).min(hi);
    let (x, v) = golden_max(|x| sign * f(x), a, b);
    if v > best.1 {
        best = (x, v);
    }
    (best.0, sign * best.1)
}

fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let tol = 1e-10 * (1.0 + a.abs().max(b.abs()));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Multi-start coordinate search for the extremum of `f` over the box
/// `Πⱼ [centerⱼ − half_width, centerⱼ + half_width]`.
///
/// Starts from every corner (all `2^d` for `d <= 10`, otherwise a random
/// subset of 1024), the centre and `random_starts` uniform interior points,
/// then runs golden-section sweeps along each coordinate until no coordinate
/// improves. Returns the best point and value.
pub fn multistart_box<F: Fn(&[f64]) -> f64>(
    f: F,
    center: &[f64],
    half_width: f64,
    maximize: bool,
    random_starts: usize,
    seed: u64,
) -> (Vec<f64>, f64) {
    let d = center.len();
    let sign = if maximize { 1.0 } else { -1.0 };
    let g = |x: &[f64]| sign * f(x);
    if half_width == 0.0 {
        return (center.to_vec(), f(center));
    }
    let mut rng = rng_from_seed(seed);
    let mut starts = Vec::new();
    let corner = |mask: usize| -> Vec<f64> {
        (0..d)
            .map(|j| center[j] + if mask >> j & 1 == 1 { half_width } else { -half_width })
            .collect()
    };
    if d <= 10 {
        for mask in 0..1usize << d {
            starts.push(corner(mask));
        }
    } else {
        for _ in 0..1024 {
            starts.push(
                (0..d)
                    .map(|j| center[j] + if rng.random::<bool>() { half_width } else { -half_width })
                    .collect(),
            );
        }
    }
    starts.push(center.to_vec());
    for _ in 0..random_starts {
        starts.push((0..d).map(|j| center[j] + half_width * rng.random_range(-1.0..=1.0)).collect());
    }
    let mut best_x = center.to_vec();
    let mut best_v = g(center);
    for mut x in starts {
        let mut v = g(&x);
        for _sweep in 0..50 {
            let before = v;
            for j in 0..d {
                let lo = center[j] - half_width;
                let hi = center[j] + half_width;
                let mut probe = x.clone();
                let (xj, vj) = extremize(
                    |t| {
                        probe[j] = t;
                        g(&probe)
                    },
                    lo,
                    hi,
                    9,
                    true,
                );
                if vj > v {
                    x[j] = xj;
                    v = vj;
                }
            }
            if v - before <= 1e-14 * (1.0 + v.abs()) {
                break;
            }
        }
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    (best_x, sign * best_v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremize_interior_and_boundary() {
        let (x, v) = extremize(|x| -(x - 0.3).powi(2), -1.0, 1.0, 11, true);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(v.abs() < 1e-12);
        let (x, v) = extremize(|x| x * x, -1.0, 2.0, 7, false);
        assert!(x.abs() < 1e-6 && v < 1e-12);
        let (x, _) = extremize(|x| x, -1.0, 2.0, 7, true);
        assert_eq!(x, 2.0);
    }

    #[test]
    fn corners_cover_sign_patterns() {
        let c = covariate_corners(3);
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|r| r[0] == 1.0 && r.len() == 3));
        assert_eq!(covariate_corners(1), vec![vec![1.0]]);
    }

    #[test]
    fn multistart_finds_box_extrema() {
        let f = |x: &[f64]| -(x[0] - 0.2).powi(2) - (x[1] + 0.1).powi(2) + 0.5 * x[0] * x[1];
        let (x, _) = multistart_box(f, &[0.0, 0.0], 1.0, true, 8, 1);
        // Concave quadratic: stationary point solves the 2x2 system.
        let det = 4.0 - 0.25;
        let want = [(2.0 * 0.4 + 0.5 * -0.2) / det, (0.5 * 0.4 + 2.0 * -0.2) / det];
        assert!((x[0] - want[0]).abs() < 1e-5 && (x[1] - want[1]).abs() < 1e-5);
        let (x, v) = multistart_box(|x: &[f64]| x[0] + 2.0 * x[1], &[1.0, 1.0], 0.5, false, 4, 2);
        assert_eq!(x, vec![0.5, 0.5]);
        assert!((v - 1.5).abs() < 1e-12);
    }
}
