//! Dense linear-model inference: OLS, projections, nested F-tests, the
//! Welch test and out-of-sample R².

mod dist;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};

pub use dist::{f_sf, student_t_sf, student_t_two_sided};

use crate::error::{Error, Result};
use crate::linalg::PivotedQr;

/// Ordinary least squares fit with classical inference.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub stderr: DVector<f64>,
    pub t_stats: DVector<f64>,
    /// Two-sided, Student-t with `df_resid` degrees of freedom.
    pub p_values: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub df_resid: usize,
    pub intercept_included: bool,
    column_keys: Vec<u64>,
    y_key: u64,
}

impl OlsFit {
    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }

    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    /// Residual variance estimate `RSS / (n - k)`.
    pub fn sigma2(&self) -> f64 {
        self.rss / self.df_resid as f64
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x * &self.coefficients
    }
}

fn key_of(values: impl Iterator<Item = f64>) -> u64 {
    let mut h = DefaultHasher::new();
    for v in values {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn is_constant_nonzero(col: nalgebra::DVectorView<'_, f64>) -> bool {
    let first = col[0];
    first != 0.0 && col.iter().all(|&v| v == first)
}

/// Fits `y = X b + e` by pivoted QR.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n <= k {
        return Err(Error::TooFewObservations {
            needed: k + 1,
            have: n,
        });
    }
    let qr = PivotedQr::new(x);
    let beta = qr.solve(y)?;
    let xtx_inv = qr.xtx_inverse()?;

    let residuals = y - x * &beta;
    let rss = residuals.norm_squared();
    let df_resid = n - k;
    let sigma2 = rss / df_resid as f64;

    let intercept_included = (0..k).any(|j| is_constant_nonzero(x.column(j)));
    let tss = if intercept_included {
        let m = y.mean();
        y.iter().map(|v| (v - m).powi(2)).sum::<f64>()
    } else {
        y.norm_squared()
    };
    let (r2, adj_r2) = if tss > 0.0 {
        let r2 = 1.0 - rss / tss;
        let base = if intercept_included { n - 1 } else { n };
        (r2, 1.0 - (1.0 - r2) * base as f64 / df_resid as f64)
    } else {
        (f64::NAN, f64::NAN)
    };

    let stderr = DVector::from_fn(k, |j, _| (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt());
    let t_stats = DVector::from_fn(k, |j, _| {
        let (b, s) = (beta[j], stderr[j]);
        if s > 0.0 {
            b / s
        } else if b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        }
    });
    let p_values = t_stats.map(|t| student_t_two_sided(t, df_resid as f64));

    Ok(OlsFit {
        coefficients: beta,
        stderr,
        t_stats,
        p_values,
        residuals,
        rss,
        r2,
        adj_r2,
        df_resid,
        intercept_included,
        column_keys: (0..k).map(|j| key_of(x.column(j).iter().copied())).collect(),
        y_key: key_of(y.iter().copied()),
    })
}

/// Prepends a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(0, 1.0)
}

/// Residual of regressing `target` on `direction` without an intercept.
pub fn project_out(target: &DVector<f64>, direction: &DVector<f64>) -> Result<DVector<f64>> {
    if target.len() != direction.len() {
        return Err(Error::LengthMismatch {
            expected: direction.len(),
            got: target.len(),
        });
    }
    let dd = direction.norm_squared();
    if dd == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let c = target.dot(direction) / dd;
    Ok(target - direction * c)
}

/// Nested-model F statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTestResult {
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
}

/// Compares a restricted fit against a full fit on the same response.
pub fn nested_f_test(restricted: &OlsFit, full: &OlsFit) -> Result<FTestResult> {
    if restricted.y_key != full.y_key || restricted.n_params() >= full.n_params() {
        return Err(Error::NotNested);
    }
    let mut pool = full.column_keys.clone();
    for key in &restricted.column_keys {
        match pool.iter().position(|k| k == key) {
            Some(pos) => {
                pool.swap_remove(pos);
            }
            None => return Err(Error::NotNested),
        }
    }
    if full.rss == 0.0 || full.rss < 1e-24 * restricted.rss {
        return Err(Error::ZeroResidual);
    }
    let df1 = full.n_params() - restricted.n_params();
    let df2 = full.df_resid;
    let f = ((restricted.rss - full.rss) / df1 as f64) / (full.rss / df2 as f64);
    let f = f.max(0.0);
    Ok(FTestResult {
        f_stat: f,
        df1,
        df2,
        p_value: f_sf(f, df1 as f64, df2 as f64),
    })
}

/// Direction of the alternative hypothesis for [`welch_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alternative {
    /// `mean(a) > mean(b)`.
    #[default]
    Greater,
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Unequal-variance two-sample t-test.
///
/// Two constant samples give `t = 0` and `p = 0.5` when their means agree.
pub fn welch_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WelchResult> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                have: s.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_var(a) / na, sample_var(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    let (t, df) = if se2 > 0.0 {
        let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
        (diff / se2.sqrt(), df)
    } else if diff == 0.0 {
        (0.0, na + nb - 2.0)
    } else {
        (diff.signum() * f64::INFINITY, na + nb - 2.0)
    };
    let p = match alternative {
        Alternative::Greater => student_t_sf(t, df),
        Alternative::Less => student_t_sf(-t, df),
        Alternative::TwoSided => student_t_two_sided(t, df),
    };
    Ok(WelchResult {
        t_stat: t,
        df,
        p_value: p,
    })
}

/// `1 - SSE(predicted) / SSE(baseline)`.
pub fn out_of_sample_r2(predicted: &[f64], realized: &[f64], baseline: &[f64]) -> Result<f64> {
    if realized.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, have: 0 });
    }
    for s in [predicted, baseline] {
        if s.len() != realized.len() {
            return Err(Error::LengthMismatch {
                expected: realized.len(),
                got: s.len(),
            });
        }
    }
    let sse = |f: &[f64]| -> f64 { realized.iter().zip(f).map(|(r, p)| (r - p).powi(2)).sum() };
    let base = sse(baseline);
    if base == 0.0 {
        return Err(Error::ZeroBaselineSse);
    }
    Ok(1.0 - sse(predicted) / base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> DMatrix<f64> {
        DMatrix::from_fn(12, 2, |i, j| if j == 0 { 1.0 } else { (i as f64).sin() + 0.1 * i as f64 })
    }

    #[test]
    fn noiseless_fit_is_exact() {
        let x = design();
        let y = &x * DVector::from_vec(vec![2.0, -1.0]);
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((fit.coefficients[1] + 1.0).abs() < 1e-10);
        assert!((fit.adj_r2 - 1.0).abs() < 1e-10);
        assert!(fit.intercept_included);
    }

    #[test]
    fn intercept_only_gives_mean() {
        let x = DMatrix::from_element(5, 1, 1.0);
        let y = DVector::from_vec(vec![1.0, 4.0, 2.0, 8.0, 0.5]);
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 3.1).abs() < 1e-12);
        assert_eq!(fit.df_resid, 4);
        assert_eq!(fit.r2, fit.adj_r2);
    }

    #[test]
    fn too_few_rows() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::zeros(2);
        assert!(matches!(ols(&x, &y), Err(Error::TooFewObservations { .. })));
    }

    #[test]
    fn projection_examples() {
        let t = DVector::from_vec(vec![1.0, 2.0]);
        let d = DVector::from_vec(vec![1.0, 1.0]);
        let r = project_out(&t, &d).unwrap();
        assert!((r[0] + 0.5).abs() < 1e-15 && (r[1] - 0.5).abs() < 1e-15);
        assert!(project_out(&d, &d).unwrap().amax() < 1e-15);
        let perp = DVector::from_vec(vec![1.0, -1.0]);
        assert_eq!(project_out(&perp, &d).unwrap(), perp);
        assert!(matches!(
            project_out(&t, &DVector::zeros(2)),
            Err(Error::ZeroDirection)
        ));
    }

    #[test]
    fn f_equals_t_squared() {
        let n = 30;
        let x = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => (i as f64 * 0.7).cos(),
            _ => ((i * i) % 7) as f64,
        });
        let y = DVector::from_fn(n, |i, _| (i as f64 * 1.3).sin() + 0.05 * i as f64);
        let full = ols(&x, &y).unwrap();
        let restricted = ols(&x.columns(0, 2).into_owned(), &y).unwrap();
        let f = nested_f_test(&restricted, &full).unwrap();
        assert_eq!((f.df1, f.df2), (1, n - 3));
        let t2 = full.t_stats[2].powi(2);
        assert!((f.f_stat - t2).abs() < 1e-8 * t2);
        assert!((f.p_value - full.p_values[2]).abs() < 1e-10);
    }

    #[test]
    fn identical_models_are_not_nested() {
        let x = design();
        let y = DVector::from_fn(12, |i, _| (i as f64).cos());
        let fit = ols(&x, &y).unwrap();
        assert!(matches!(nested_f_test(&fit, &fit), Err(Error::NotNested)));
    }

    #[test]
    fn welch_conventions() {
        let a = [0.3, -1.0, 2.0, 0.7];
        let r = welch_test(&a, &a, Alternative::Greater).unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert!((r.p_value - 0.5).abs() < 1e-15);
        let z = welch_test(&[0.0, 0.0], &[0.0, 0.0], Alternative::Greater).unwrap();
        assert_eq!((z.t_stat, z.p_value), (0.0, 0.5));
        assert!(welch_test(&[1.0], &a, Alternative::Greater).is_err());
    }

    #[test]
    fn welch_matches_hand_computation() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [0.0, 0.5, 1.0];
        // var(a)=5/3, var(b)=0.25
        let (va, vb) = (5.0 / 3.0 / 4.0, 0.25 / 3.0);
        let t = (2.5 - 0.5) / f64::sqrt(va + vb);
        let df = (va + vb).powi(2) / (va * va / 3.0 + vb * vb / 2.0);
        let r = welch_test(&a, &b, Alternative::Greater).unwrap();
        assert!((r.t_stat - t).abs() < 1e-12);
        assert!((r.df - df).abs() < 1e-12);
        let two = welch_test(&a, &b, Alternative::TwoSided).unwrap();
        assert!((two.p_value - 2.0 * r.p_value).abs() < 1e-12);
    }

    #[test]
    fn oos_r2_examples() {
        assert_eq!(out_of_sample_r2(&[1.0, 2.0], &[1.0, 2.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(out_of_sample_r2(&[0.0, 0.0], &[1.0, 2.0], &[0.0, 0.0]).unwrap(), 0.0);
        let r = out_of_sample_r2(&[1.0, 1.0], &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-15);
        assert!(matches!(
            out_of_sample_r2(&[1.0], &[1.0], &[1.0]),
            Err(Error::ZeroBaselineSse)
        ));
    }
}
