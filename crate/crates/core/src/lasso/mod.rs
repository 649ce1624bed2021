//! Coordinate-descent LASSO with regularization paths and K-fold
//! cross-validation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_N_LAMBDA: usize = 100;
pub const DEFAULT_LAMBDA_MIN_RATIO: f64 = 1e-3;
pub const MAX_SWEEPS: usize = 10_000;
pub const COORD_TOL: f64 = 1e-9;

/// Smallest `alpha` used when computing the top of a ridge grid.
const RIDGE_ALPHA_FLOOR: f64 = 1e-3;

pub fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// `max_j |x_j^T y| / n`.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.dot(y).abs()).fold(0.0, f64::max) / n
}

struct Solver<'a> {
    x: &'a DMatrix<f64>,
    /// `||x_j||^2 / n`.
    col_sq: Vec<f64>,
    n: f64,
}

impl<'a> Solver<'a> {
    fn new(x: &'a DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let col_sq = x.column_iter().map(|c| c.norm_squared() / n).collect();
        Self { x, col_sq, n }
    }

    fn objective(&self, r: &DVector<f64>, beta: &DVector<f64>, l1: f64, l2: f64) -> f64 {
        r.norm_squared() / (2.0 * self.n) + l1 * beta.iter().map(|b| b.abs()).sum::<f64>() + 0.5 * l2 * beta.norm_squared()
    }

    /// One pass over `coords`; returns the largest coefficient change.
    fn sweep(
        &self,
        coords: impl Iterator<Item = usize>,
        beta: &mut DVector<f64>,
        r: &mut DVector<f64>,
        l1: f64,
        l2: f64,
    ) -> f64 {
        let mut max_delta: f64 = 0.0;
        for j in coords {
            let cj = self.col_sq[j];
            if cj == 0.0 {
                continue;
            }
            let col = self.x.column(j);
            let old = beta[j];
            let rho = col.dot(r) / self.n + cj * old;
            let new = soft_threshold(rho, l1) / (cj + l2);
            if new != old {
                r.axpy(old - new, &col, 1.0);
                beta[j] = new;
                max_delta = max_delta.max((new - old).abs());
            }
        }
        max_delta
    }

    /// Minimizes `(1/2n)||y - Xb||^2 + l1 ||b||_1 + (l2/2) ||b||^2`.
    fn solve(&self, y: &DVector<f64>, l1: f64, l2: f64, warm: Option<&DVector<f64>>) -> (DVector<f64>, bool) {
        let p = self.x.ncols();
        let mut beta = warm.cloned().unwrap_or_else(|| DVector::zeros(p));
        let mut r = y - self.x * &beta;
        let mut sweeps = 0;
        let mut last = self.objective(&r, &beta, l1, l2);
        let mut check = |r: &DVector<f64>, beta: &DVector<f64>| {
            if cfg!(debug_assertions) {
                let obj = self.objective(r, beta, l1, l2);
                debug_assert!(obj <= last + 1e-12 * last.abs().max(1e-300), "objective increased");
                last = obj;
            }
        };
        loop {
            let delta = self.sweep(0..p, &mut beta, &mut r, l1, l2);
            sweeps += 1;
            check(&r, &beta);
            if delta < COORD_TOL {
                return (beta, true);
            }
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            loop {
                if sweeps >= MAX_SWEEPS {
                    return (beta, false);
                }
                let delta = self.sweep(active.iter().copied(), &mut beta, &mut r, l1, l2);
                sweeps += 1;
                check(&r, &beta);
                if delta < COORD_TOL {
                    break;
                }
            }
            if sweeps >= MAX_SWEEPS {
                return (beta, false);
            }
        }
    }
}

/// LASSO coefficients at a single `lambda`, no intercept.
pub fn lasso_fit(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    match Solver::new(x).solve(y, lambda, 0.0, None) {
        (beta, true) => Ok(beta),
        (_, false) => Err(Error::DidNotConverge { sweeps: MAX_SWEEPS }),
    }
}

#[derive(Debug, Clone)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    pub coefs: Vec<DVector<f64>>,
    pub support_sizes: Vec<usize>,
    pub(crate) alpha: f64,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn index_of(&self, lambda: f64) -> Option<usize> {
        self.lambdas.iter().position(|&l| l == lambda)
    }

    pub fn support(&self, idx: usize) -> Vec<usize> {
        self.coefs[idx]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

fn log_grid(top: f64, n_lambda: usize, ratio: f64) -> Vec<f64> {
    let top = if top > 0.0 { top } else { 1.0 };
    let step = ratio.ln() / (n_lambda - 1) as f64;
    (0..n_lambda).map(|i| top * (step * i as f64).exp()).collect()
}

fn grid_for(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64, n_lambda: usize, ratio: f64) -> Result<Vec<f64>> {
    if n_lambda < 2 {
        return Err(Error::InvalidSpec("n_lambda must be at least 2".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidSpec("lambda_min_ratio must lie in (0, 1)".into()));
    }
    Ok(log_grid(lambda_max(x, y) / alpha.max(RIDGE_ALPHA_FLOOR), n_lambda, ratio))
}

fn path_on_grid(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64, lambdas: Vec<f64>) -> Result<LassoPath> {
    let solver = Solver::new(x);
    let mut coefs: Vec<DVector<f64>> = Vec::with_capacity(lambdas.len());
    for &lam in &lambdas {
        let (beta, converged) = solver.solve(y, lam * alpha, lam * (1.0 - alpha), coefs.last());
        if !converged {
            log::warn!("path fit at lambda {lam:.3e} stopped after {MAX_SWEEPS} sweeps");
        }
        coefs.push(beta);
    }
    let support_sizes = coefs.iter().map(|b| b.iter().filter(|v| **v != 0.0).count()).collect();
    Ok(LassoPath {
        lambdas,
        coefs,
        support_sizes,
        alpha,
    })
}

/// Warm-started path over a log-spaced grid from `lambda_max` down to
/// `lambda_max * lambda_min_ratio`.
pub fn lasso_path(x: &DMatrix<f64>, y: &DVector<f64>, n_lambda: usize, lambda_min_ratio: f64) -> Result<LassoPath> {
    enet_path(x, y, 1.0, n_lambda, lambda_min_ratio)
}

pub(crate) fn enet_path(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    alpha: f64,
    n_lambda: usize,
    lambda_min_ratio: f64,
) -> Result<LassoPath> {
    let lambdas = grid_for(x, y, alpha, n_lambda, lambda_min_ratio)?;
    path_on_grid(x, y, alpha, lambdas)
}

#[derive(Debug, Clone)]
pub struct CvCurve {
    pub lambdas: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub se_error: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_1se: f64,
}

/// Deterministic fold labels: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![0; n];
    for (pos, &i) in idx.iter().enumerate() {
        out[i] = pos % folds;
    }
    out
}

fn rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |r, c| m[(idx[r], c)])
}

/// K-fold cross-validation of `path`'s grid. Each training fold is
/// centered before fitting.
pub fn cross_validate(x: &DMatrix<f64>, y: &DVector<f64>, folds: usize, path: &LassoPath, seed: u64) -> Result<CvCurve> {
    let n = x.nrows();
    if folds < 2 || folds > n || (n < 2 * folds && folds != n) {
        return Err(Error::TooFewObservations {
            needed: 2 * folds.max(2),
            have: n,
        });
    }
    let labels = fold_assignment(n, folds, seed);
    let fold_errors: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| labels[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| labels[i] == f).collect();
            let mut xt = rows(x, &train);
            let mut yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
            let x_mean: Vec<f64> = xt.column_iter().map(|c| c.mean()).collect();
            let y_mean = yt.mean();
            for (j, m) in x_mean.iter().enumerate() {
                xt.column_mut(j).add_scalar_mut(-m);
            }
            yt.add_scalar_mut(-y_mean);
            let fit = path_on_grid(&xt, &yt, path.alpha, path.lambdas.clone())?;
            let errs = fit
                .coefs
                .iter()
                .map(|b| {
                    let offset = y_mean - x_mean.iter().zip(b.iter()).map(|(m, b)| m * b).sum::<f64>();
                    test.iter()
                        .map(|&i| {
                            let pred = offset + x.row(i).transpose().dot(b);
                            (y[i] - pred).powi(2)
                        })
                        .sum::<f64>()
                        / test.len() as f64
                })
                .collect();
            Ok(errs)
        })
        .collect::<Result<_>>()?;

    let k = folds as f64;
    let n_l = path.lambdas.len();
    let mut mean_error = Vec::with_capacity(n_l);
    let mut se_error = Vec::with_capacity(n_l);
    for l in 0..n_l {
        let e: Vec<f64> = fold_errors.iter().map(|f| f[l]).collect();
        let m = e.iter().sum::<f64>() / k;
        let var = e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0);
        mean_error.push(m);
        se_error.push((var / k).sqrt());
    }
    let mut best = 0;
    for l in 1..n_l {
        if mean_error[l] < mean_error[best] {
            best = l;
        }
    }
    let bound = mean_error[best] + se_error[best];
    let one_se = (0..n_l).find(|&l| mean_error[l] <= bound).unwrap_or(best);
    Ok(CvCurve {
        lambdas: path.lambdas.clone(),
        mean_error,
        se_error,
        lambda_min: path.lambdas[best],
        lambda_1se: path.lambdas[one_se],
    })
}

/// `max(lambda_1se, min{lambda : support <= cap})` on the path grid.
///
/// When the support at that value still exceeds `cap` the next larger grid
/// value with a small enough support is returned instead.
pub fn select_lambda_gibs(curve: &CvCurve, path: &LassoPath, cap: usize) -> f64 {
    let capped = (0..path.len())
        .filter(|&l| path.support_sizes[l] <= cap)
        .last()
        .unwrap_or(0);
    let one_se = path.index_of(curve.lambda_1se).unwrap_or(0);
    let mut idx = capped.min(one_se);
    while idx > 0 && path.support_sizes[idx] > cap {
        idx -= 1;
    }
    path.lambdas[idx]
}

/// Column-standardized design and centered response.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_mean: Vec<f64>,
    /// Population standard deviation; zero-variance columns keep scale 1.
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
}

impl Standardized {
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut xs = x.clone();
        let mut x_mean = Vec::with_capacity(x.ncols());
        let mut x_scale = Vec::with_capacity(x.ncols());
        for (j, mut col) in xs.column_iter_mut().enumerate() {
            let m = x.column(j).mean();
            col.add_scalar_mut(-m);
            let sd = (col.norm_squared() / n).sqrt();
            let s = if sd > 0.0 { sd } else { 1.0 };
            col /= s;
            x_mean.push(m);
            x_scale.push(s);
        }
        let y_mean = y.mean();
        Self {
            x: xs,
            y: y.add_scalar(-y_mean),
            x_mean,
            x_scale,
            y_mean,
        }
    }

    /// Maps standardized coefficients back to `(intercept, slopes)` on the
    /// original scale.
    pub fn unscale(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        let slopes = DVector::from_fn(beta.len(), |j, _| beta[j] / self.x_scale[j]);
        let icpt = self.y_mean - slopes.iter().zip(&self.x_mean).map(|(b, m)| b * m).sum::<f64>();
        (icpt, slopes)
    }
}

/// Path, CV curve and the capped 1se choice on standardized data.
#[derive(Debug, Clone)]
pub struct CappedSelection {
    pub path: LassoPath,
    pub curve: CvCurve,
    pub lambda: f64,
    /// Column indices with nonzero coefficient at `lambda`.
    pub support: Vec<usize>,
}

pub fn capped_lasso(x: &DMatrix<f64>, y: &DVector<f64>, folds: usize, cap: usize, seed: u64) -> Result<CappedSelection> {
    let st = Standardized::new(x, y);
    let path = lasso_path(&st.x, &st.y, DEFAULT_N_LAMBDA, DEFAULT_LAMBDA_MIN_RATIO)?;
    let curve = cross_validate(&st.x, &st.y, folds, &path, seed)?;
    let lambda = select_lambda_gibs(&curve, &path, cap);
    let support = path.support(path.index_of(lambda).unwrap_or(0));
    Ok(CappedSelection {
        path,
        curve,
        lambda,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shrinkage_at_lambda_max() {
        let x = DMatrix::from_fn(20, 3, |i, j| ((i * (j + 2)) % 7) as f64 - 3.0);
        let y = DVector::from_fn(20, |i, _| (i as f64).sin());
        let lmax = lambda_max(&x, &y);
        assert_eq!(lasso_fit(&x, &y, lmax).unwrap().amax(), 0.0);
        assert_eq!(lasso_fit(&x, &y, 2.0 * lmax).unwrap().amax(), 0.0);
    }

    #[test]
    fn orthonormal_design_soft_thresholds() {
        let n = 4;
        let x = DMatrix::from_row_slice(n, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![3.0, 1.0, -0.5, 0.2]);
        let z = x.transpose() * &y / n as f64;
        let lam = 0.4;
        let b = lasso_fit(&x, &y, lam).unwrap();
        for j in 0..2 {
            assert!((b[j] - soft_threshold(z[j], lam)).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_zero_returns_top_of_grid() {
        let x = DMatrix::from_fn(40, 4, |i, j| ((i * 31 + j * 17) % 11) as f64 - 5.0);
        let y = DVector::from_fn(40, |i, _| x[(i, 0)] + 0.3 * ((i * 7) % 5) as f64);
        let st = Standardized::new(&x, &y);
        let path = lasso_path(&st.x, &st.y, 30, 1e-3).unwrap();
        let curve = cross_validate(&st.x, &st.y, 4, &path, 1).unwrap();
        assert_eq!(select_lambda_gibs(&curve, &path, 0), path.lambdas[0]);
        assert!(curve.lambda_1se >= curve.lambda_min);
    }

    #[test]
    fn unscale_round_trip() {
        let x = DMatrix::from_fn(10, 2, |i, j| (i as f64) * (j as f64 + 1.0) + 3.0 * j as f64);
        let y = DVector::from_fn(10, |i, _| 2.0 + i as f64);
        let st = Standardized::new(&x, &y);
        let beta = DVector::from_vec(vec![0.5, -0.25]);
        let (b0, b) = st.unscale(&beta);
        let direct = &st.x * &beta;
        for i in 0..10 {
            let orig = b0 + x.row(i).transpose().dot(&b) - st.y_mean;
            assert!((orig - direct[i]).abs() < 1e-12);
        }
    }
}
