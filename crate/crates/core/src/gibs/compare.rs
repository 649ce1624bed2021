//! Side-by-side comparison of selection methods on a train/holdout split.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{avg, entity_seed, BasisDesign, GibsConfig, GibsModel, SelectionResult};
use crate::error::{Error, Result};
use crate::lasso::{cross_validate, enet_path, Standardized, DEFAULT_LAMBDA_MIN_RATIO, DEFAULT_N_LAMBDA};
use crate::panel::{excess_returns, BasisUniverse, ReturnsPanel, RiskFreeSeries};
use crate::regression::{mean, out_of_sample_r2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// OLS on the configured fixed factors.
    FixedOnly,
    Gibs,
    /// GIBS with the fixed factors forced into every selected set.
    GibsFixed,
    /// LASSO on the prototypes at the CV-minimizing lambda, then OLS.
    LassoCv,
    /// Elastic net with mixing `alpha` at the CV minimum, then OLS.
    Enet(f64),
    /// Ridge on the prototypes, predicting with the penalized coefficients.
    Ridge,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::FixedOnly => write!(f, "FF5"),
            Method::Gibs => write!(f, "GIBS"),
            Method::GibsFixed => write!(f, "GIBS + FF5"),
            Method::LassoCv => write!(f, "LASSO"),
            Method::Enet(a) => write!(f, "E-Net (alpha={a:.2})"),
            Method::Ridge => write!(f, "Ridge"),
        }
    }
}

impl Method {
    /// The full line-up of the comparison table.
    pub fn all() -> Vec<Method> {
        vec![
            Method::FixedOnly,
            Method::Gibs,
            Method::GibsFixed,
            Method::LassoCv,
            Method::Enet(0.75),
            Method::Enet(0.5),
            Method::Enet(0.25),
            Method::Ridge,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: Method,
    pub avg_selected: f64,
    /// `None` for methods without an OLS refit.
    pub avg_significant: Option<f64>,
    pub avg_adj_r2: Option<f64>,
    pub avg_oos_r2: f64,
    /// Per-security out-of-sample R² in input order; `NaN` on failure.
    pub oos_r2: Vec<f64>,
    pub failures: usize,
}

struct Outcome {
    selected: usize,
    significant: Option<usize>,
    adj_r2: Option<f64>,
    oos: f64,
}

struct Split<'a> {
    test: &'a BasisDesign,
    y_train: DVector<f64>,
    y_test: DVector<f64>,
}

impl Split<'_> {
    fn oos(&self, pred: &DVector<f64>) -> Result<f64> {
        let base = mean(self.y_train.as_slice());
        out_of_sample_r2(pred.as_slice(), self.y_test.as_slice(), &vec![base; self.y_test.len()])
    }
}

fn from_refit(model: &GibsModel, r: &SelectionResult, s: &Split<'_>) -> Result<Outcome> {
    let pred = model.predict(r, s.test)?;
    Ok(Outcome {
        selected: r.selected.len(),
        significant: Some(r.significant.len()),
        adj_r2: Some(r.fit.adj_r2),
        oos: s.oos(&pred)?,
    })
}

fn run_one(method: Method, id: &str, s: &Split<'_>, gibs: &GibsModel, gibs_fixed: Option<&GibsModel>) -> Result<Outcome> {
    let n = s.y_train.len();
    let rows: Vec<usize> = (0..n).collect();
    match method {
        Method::Gibs => from_refit(gibs, &gibs.select(id, &s.y_train)?, s),
        Method::GibsFixed => {
            let m = gibs_fixed.ok_or_else(|| Error::Config("no fixed factors configured".into()))?;
            from_refit(m, &m.select(id, &s.y_train)?, s)
        }
        Method::FixedOnly => {
            let cols = gibs
                .config
                .fixed_factors
                .iter()
                .map(|f| {
                    gibs.orth
                        .design
                        .index_of(f)
                        .ok_or_else(|| Error::Config(format!("fixed factor {f} not in the basis")))
                })
                .collect::<Result<Vec<_>>>()?;
            from_refit(gibs, &gibs.refit(id, &rows, &s.y_train, &cols, f64::NAN)?, s)
        }
        Method::LassoCv | Method::Enet(_) => {
            let alpha = if let Method::Enet(a) = method { a } else { 1.0 };
            let u = &gibs.prototypes.universe;
            let xt = DMatrix::from_fn(n, u.len(), |r, c| gibs.orth.transformed[(r, u[c])]);
            let st = Standardized::new(&xt, &s.y_train);
            let path = enet_path(&st.x, &st.y, alpha, DEFAULT_N_LAMBDA, DEFAULT_LAMBDA_MIN_RATIO)?;
            let curve = cross_validate(&st.x, &st.y, gibs.config.cv_folds, &path, entity_seed(gibs.config.seed, id))?;
            let idx = path.index_of(curve.lambda_min).unwrap_or(0);
            let cols: Vec<usize> = path.support(idx).iter().map(|&k| u[k]).collect();
            from_refit(gibs, &gibs.refit(id, &rows, &s.y_train, &cols, curve.lambda_min)?, s)
        }
        Method::Ridge => {
            let u = &gibs.prototypes.universe;
            let x = gibs.orth.design.columns(u);
            let st = Standardized::new(&x, &s.y_train);
            let path = enet_path(&st.x, &st.y, 0.0, DEFAULT_N_LAMBDA, DEFAULT_LAMBDA_MIN_RATIO)?;
            let curve = cross_validate(&st.x, &st.y, gibs.config.cv_folds, &path, entity_seed(gibs.config.seed, id))?;
            let idx = path.index_of(curve.lambda_min).unwrap_or(0);
            let (b0, b) = st.unscale(&path.coefs[idx]);
            let test_cols = u
                .iter()
                .map(|&j| s.test.index_of(&gibs.orth.design.ids[j]).expect("holdout shares the design"))
                .collect::<Vec<_>>();
            let pred = s.test.columns(&test_cols) * &b;
            Ok(Outcome {
                selected: b.iter().filter(|v| **v != 0.0).count(),
                significant: None,
                adj_r2: None,
                oos: s.oos(&pred.add_scalar(b0))?,
            })
        }
    }
}

/// Fits every method on the first `T - holdout` rows and scores the last
/// `holdout` rows.
pub fn compare_methods(
    securities: &ReturnsPanel,
    universe: &BasisUniverse,
    rf: &RiskFreeSeries,
    config: &GibsConfig,
    methods: &[Method],
    holdout: usize,
) -> Result<Vec<MethodSummary>> {
    let t_len = securities.n_periods();
    if holdout == 0 || holdout >= t_len {
        return Err(Error::Config(format!("holdout {holdout} must lie in 1..{t_len}")));
    }
    let split_at = t_len - holdout;
    let design = BasisDesign::from_excess(universe, rf)?;
    let train: Vec<usize> = (0..split_at).collect();
    let test: Vec<usize> = (split_at..t_len).collect();
    let (x_train, x_test) = (design.rows(&train), design.rows(&test));
    let y = excess_returns(securities, rf)?;

    let gibs = GibsModel::new(&x_train, config)?;
    let wants_fixed = methods.contains(&Method::GibsFixed);
    let gibs_fixed = if wants_fixed {
        let mut c = config.clone();
        c.include_fixed_factors = true;
        Some(GibsModel::new(&x_train, &c)?)
    } else {
        None
    };

    let per_security: Vec<Vec<Option<Outcome>>> = (0..y.n_assets())
        .into_par_iter()
        .map(|i| {
            let col = y.column(i);
            let split = Split {
                test: &x_test,
                y_train: DVector::from_fn(split_at, |t, _| col[t]),
                y_test: DVector::from_fn(holdout, |t, _| col[split_at + t]),
            };
            methods
                .iter()
                .map(|&m| {
                    run_one(m, &y.assets()[i], &split, &gibs, gibs_fixed.as_ref())
                        .map_err(|e| log::warn!("{m} failed for {}: {e}", y.assets()[i]))
                        .ok()
                })
                .collect()
        })
        .collect();

    Ok(methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let ok: Vec<&Outcome> = per_security.iter().filter_map(|o| o[k].as_ref()).collect();
            MethodSummary {
                method,
                avg_selected: avg(ok.iter().map(|o| o.selected as f64)),
                avg_significant: ok
                    .first()
                    .and_then(|o| o.significant)
                    .map(|_| avg(ok.iter().filter_map(|o| o.significant.map(|v| v as f64)))),
                avg_adj_r2: ok
                    .first()
                    .and_then(|o| o.adj_r2)
                    .map(|_| avg(ok.iter().filter_map(|o| o.adj_r2))),
                avg_oos_r2: avg(ok.iter().map(|o| o.oos)),
                oos_r2: per_security
                    .iter()
                    .map(|o| o[k].as_ref().map_or(f64::NAN, |o| o.oos))
                    .collect(),
                failures: per_security.len() - ok.len(),
            }
        })
        .collect())
}

fn pct_change(v: f64, base: f64) -> String {
    if base != 0.0 && base.is_finite() && v.is_finite() {
        format!("{:+.2}%", 100.0 * (v - base) / base.abs())
    } else {
        String::new()
    }
}

/// `method,selected,significant,adj_r2,adj_r2_change,oos_r2,oos_r2_change`;
/// changes are relative to the first row.
pub fn write_comparison_csv(rows: &[MethodSummary], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record([
        "method",
        "selected",
        "significant",
        "adj_r2",
        "adj_r2_change",
        "oos_r2",
        "oos_r2_change",
    ])
    .map_err(|e| Error::csv(path, e))?;
    let base = rows.first();
    for r in rows {
        let na = || "NA".to_string();
        let adj_base = base.and_then(|b| b.avg_adj_r2).unwrap_or(f64::NAN);
        let oos_base = base.map_or(f64::NAN, |b| b.avg_oos_r2);
        w.write_record([
            r.method.to_string(),
            format!("{:.2}", r.avg_selected),
            r.avg_significant.map_or_else(na, |v| format!("{v:.2}")),
            r.avg_adj_r2.map_or_else(na, |v| format!("{v:.3}")),
            r.avg_adj_r2.map_or_else(na, |v| pct_change(v, adj_base)),
            format!("{:.3}", r.avg_oos_r2),
            pct_change(r.avg_oos_r2, oos_base),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
