//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| normal(rng))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

/// OLS through the normal equations.
pub fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    xtx.cholesky().expect("full rank design").solve(&xty)
}

/// Step-up q-values written straight from the definition:
/// `q_i = min_{j : p_j >= p_i} min(1, c m p_j / rank_j)`.
pub fn step_up_q(p: &[f64], dependent: bool) -> Vec<f64> {
    let m = p.len();
    let c: f64 = if dependent { (1..=m).map(|k| 1.0 / k as f64).sum() } else { 1.0 };
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut rank = vec![0usize; m];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r + 1;
    }
    (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| rank[j] >= rank[i])
                .map(|j| (c * m as f64 * p[j] / rank[j] as f64).min(1.0))
                .fold(1.0, f64::min)
        })
        .collect()
}

/// Classical step-up rejection: reject the `k` smallest p-values, where `k`
/// is the largest rank with `p_(k) <= k alpha / (c m)`.
pub fn step_up_reject(p: &[f64], alpha: f64, dependent: bool) -> Vec<usize> {
    let m = p.len();
    let c: f64 = if dependent { (1..=m).map(|k| 1.0 / k as f64).sum() } else { 1.0 };
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let k = (1..=m)
        .rev()
        .find(|&k| p[idx[k - 1]] <= k as f64 * alpha / (c * m as f64))
        .unwrap_or(0);
    let mut out: Vec<usize> = idx[..k].to_vec();
    out.sort_unstable();
    out
}

/// `(1/2n)||y - Xb||^2 + lambda ||b||_1`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, lambda: f64) -> f64 {
    let r = y - x * b;
    r.norm_squared() / (2.0 * x.nrows() as f64) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

/// Largest KKT violation of `b` for the LASSO at `lambda`.
pub fn kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let g = x.transpose() * (y - x * b) / n;
    (0..b.len())
        .map(|j| {
            if b[j] != 0.0 {
                (g[j] - lambda * b[j].signum()).abs()
            } else {
                (g[j].abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Lattice minimizer of the LASSO objective: a coarse scan, then a full
/// scan at `step` around the coarse winner. Uses the Gram form so each
/// evaluation costs `O(p^2)`.
pub fn lattice_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, step: f64) -> DVector<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let g = x.transpose() * x / n;
    let c = x.transpose() * y / n;
    let obj = |b: &[f64]| -> f64 {
        let mut q = 0.0;
        for i in 0..p {
            q -= 2.0 * b[i] * c[i];
            for j in 0..p {
                q += b[i] * g[(i, j)] * b[j];
            }
        }
        0.5 * q + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    };
    let scan = |center: &[f64], half: i64, h: f64| -> Vec<f64> {
        let mut best = (f64::INFINITY, center.to_vec());
        let mut k = vec![-half; p];
        loop {
            let b: Vec<f64> = (0..p).map(|i| center[i] + k[i] as f64 * h).collect();
            let v = obj(&b);
            if v < best.0 {
                best = (v, b);
            }
            let mut d = 0;
            while d < p {
                k[d] += 1;
                if k[d] <= half {
                    break;
                }
                k[d] = -half;
                d += 1;
            }
            if d == p {
                break;
            }
        }
        best.1
    };
    let bound = 4.0;
    let coarse_h = 0.05;
    let coarse = scan(&vec![0.0; p], (bound / coarse_h) as i64, coarse_h);
    let snapped: Vec<f64> = coarse.iter().map(|v| (v / step).round() * step).collect();
    DVector::from_vec(scan(&snapped, (2.0 * coarse_h / step).round() as i64, step))
}

/// Minimax-linkage agglomeration recomputed from scratch at every step.
/// Returns `(members_a, members_b, height, prototype)` per merge.
pub fn brute_minimax(d: &DMatrix<f64>) -> Vec<(Vec<usize>, Vec<usize>, f64, usize)> {
    let n = d.nrows();
    let radius = |c: &[usize]| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for &x in c {
            let r = c.iter().map(|&y| d[(x, y)]).fold(0.0, f64::max);
            if r < best.0 || (r == best.0 && x < best.1) {
                best = (r, x);
            }
        }
        best
    };
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut u = clusters[a].clone();
                u.extend(&clusters[b]);
                let (h, proto) = radius(&u);
                let (ma, mb) = (clusters[a][0], clusters[b][0]);
                let key = (ma.min(mb), ma.max(mb));
                if best.map_or(true, |(bh, bk, ..)| h < bh || (h == bh && key < bk)) {
                    best = Some((h, key, a, b, proto));
                }
            }
        }
        let (h, _, a, b, proto) = best.unwrap();
        let (ca, cb) = (clusters[a].clone(), clusters[b].clone());
        let (lo, hi) = if ca[0] < cb[0] { (ca, cb) } else { (cb, ca) };
        let mut u = lo.clone();
        u.extend(&hi);
        u.sort_unstable();
        clusters.remove(b);
        clusters.remove(a);
        clusters.push(u);
        out.push((lo, hi, h, proto));
    }
    out
}

/// Random symmetric distance matrix with entries in `[0, 1]`; values are
/// drawn from a small set when `coarse` so ties occur.
pub fn random_distance(rng: &mut ChaCha8Rng, n: usize, coarse: bool) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = if coarse {
                rng.gen_range(1..=5) as f64 / 5.0
            } else {
                rng.gen::<f64>()
            };
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Student-t two-sided 5% critical values from printed tables.
pub const T_975: [(f64, f64); 4] = [(5.0, 2.5706), (10.0, 2.2281), (30.0, 2.0423), (120.0, 1.9799)];
/// F 95% critical values `(d1, d2, f)` from printed tables.
pub const F_95: [(f64, f64, f64); 3] = [(2.0, 10.0, 4.1028), (3.0, 20.0, 3.0984), (5.0, 60.0, 2.3683)];
