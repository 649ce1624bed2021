//! Groupwise interpretable basis selection.
//!
//! The pipeline orthogonalizes every unprotected basis column against the
//! market, reduces each category to minimax prototypes, prototypes the pooled
//! representatives once more, runs the capped 1se LASSO on the transformed
//! prototypes and finally refits OLS on the original selected columns.

mod compare;
mod summary;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::cluster::{correlation_distance, minimax_cluster, Cluster};
use crate::error::{Error, Result};
use crate::lasso::capped_lasso;
use crate::panel::{
    adjusted_prices, excess_returns, first_differences, money_market, BasisUniverse,
    ReturnsPanel, RiskFreeSeries,
};
use crate::regression::{ols, with_intercept, OlsFit};

pub use compare::{compare_methods, write_comparison_csv, Method, MethodSummary};
pub use summary::{summarize_selection, write_summary_csv, SelectionSummary};

/// Identifier given to the money-market column of price-difference designs.
pub const MONEY_MARKET_ID: &str = "MMA";

#[derive(Debug, Clone, PartialEq)]
pub struct GibsConfig {
    pub category_threshold: f64,
    pub global_threshold: f64,
    pub support_cap: usize,
    pub cv_folds: usize,
    pub sig_level: f64,
    pub seed: u64,
    /// Columns kept out of orthogonalization and clustering besides the
    /// market.
    pub protected_assets: Vec<String>,
    pub fixed_factors: Vec<String>,
    /// Unions `fixed_factors` into every selected set before the refit.
    pub include_fixed_factors: bool,
    pub refit_intercept: bool,
    /// Per-category prototype counts overriding the threshold cut.
    pub category_counts: BTreeMap<String, usize>,
}

impl Default for GibsConfig {
    fn default() -> Self {
        Self {
            category_threshold: 0.5,
            global_threshold: 0.5,
            support_cap: 20,
            cv_folds: 10,
            sig_level: 0.05,
            seed: 0,
            protected_assets: Vec::new(),
            fixed_factors: Vec::new(),
            include_fixed_factors: false,
            refit_intercept: true,
            category_counts: BTreeMap::new(),
        }
    }
}

impl GibsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("category_threshold", self.category_threshold),
            ("global_threshold", self.global_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} not in [0, 1]")));
            }
        }
        if !(self.sig_level > 0.0 && self.sig_level < 1.0) {
            return Err(Error::Config(format!("sig_level {} not in (0, 1)", self.sig_level)));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be at least 2".into()));
        }
        Ok(())
    }
}

/// Dense basis matrix with identifiers and categories.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisDesign {
    pub ids: Vec<String>,
    pub categories: Vec<String>,
    pub x: DMatrix<f64>,
    pub market: usize,
}

impl BasisDesign {
    pub fn new(ids: Vec<String>, categories: Vec<String>, x: DMatrix<f64>, market: &str) -> Result<Self> {
        if ids.len() != x.ncols() || categories.len() != x.ncols() {
            return Err(Error::LengthMismatch {
                expected: x.ncols(),
                got: ids.len(),
            });
        }
        let market = ids
            .iter()
            .position(|i| i == market)
            .ok_or_else(|| Error::MissingMarketIndex(market.to_string()))?;
        Ok(Self {
            ids,
            categories,
            x,
            market,
        })
    }

    fn from_panel(panel: &ReturnsPanel, universe: &BasisUniverse) -> Result<Self> {
        let keep = panel.fully_observed_assets();
        if keep.len() < panel.n_assets() {
            warn!(
                "dropping {} basis assets with gaps in the window",
                panel.n_assets() - keep.len()
            );
        }
        let ids: Vec<String> = keep.iter().map(|&j| panel.assets()[j].clone()).collect();
        let categories = ids
            .iter()
            .map(|a| universe.category_of(a).unwrap_or_default().to_string())
            .collect();
        let x = DMatrix::from_fn(panel.n_periods(), keep.len(), |t, c| panel.values()[(t, keep[c])]);
        Self::new(ids, categories, x, universe.market_index())
    }

    /// Basis excess returns over fully observed columns.
    pub fn from_excess(universe: &BasisUniverse, rf: &RiskFreeSeries) -> Result<Self> {
        let excess = excess_returns(universe.panel(), rf)?;
        Self::from_panel(&excess, universe)
    }

    /// First differences of adjusted basis prices (initial level 1) plus the
    /// money-market account's differences under [`MONEY_MARKET_ID`].
    pub fn from_price_differences(universe: &BasisUniverse, rf: &RiskFreeSeries) -> Result<Self> {
        let panel = universe.panel();
        let keep = panel.fully_observed_assets();
        let sub = panel.select_assets(&keep)?;
        let prices = adjusted_prices(&sub, &vec![1.0; sub.n_assets()])?;
        let diffs = first_differences(&prices)?;
        let mut design = Self::from_panel(&diffs, universe)?;
        let b = money_market(rf);
        let db = DVector::from_fn(b.len() - 1, |t, _| b[t + 1] - b[t]);
        design.x = design.x.insert_column(0, 0.0);
        design.x.set_column(0, &db);
        design.ids.insert(0, MONEY_MARKET_ID.to_string());
        design.categories.insert(0, "money_market".to_string());
        design.market += 1;
        Ok(design)
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    pub fn rows(&self, idx: &[usize]) -> Self {
        Self {
            ids: self.ids.clone(),
            categories: self.categories.clone(),
            x: DMatrix::from_fn(idx.len(), self.x.ncols(), |r, c| self.x[(idx[r], c)]),
            market: self.market,
        }
    }

    pub fn columns(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.x.nrows(), cols.len(), |r, c| self.x[(r, cols[c])])
    }

    /// Drops the listed columns; the market must survive.
    pub fn without(&self, ids: &BTreeSet<String>) -> Result<Self> {
        let keep: Vec<usize> = (0..self.ids.len()).filter(|&j| !ids.contains(&self.ids[j])).collect();
        Self::new(
            keep.iter().map(|&j| self.ids[j].clone()).collect(),
            keep.iter().map(|&j| self.categories[j].clone()).collect(),
            self.columns(&keep),
            &self.ids[self.market],
        )
    }
}

/// A design whose unprotected columns have been orthogonalized against the
/// market.
#[derive(Debug, Clone)]
pub struct Orthogonalized {
    pub design: BasisDesign,
    pub transformed: DMatrix<f64>,
    /// Column flags for the market and other protected assets.
    pub protected: Vec<bool>,
}

/// Relative norm below which an orthogonalized column counts as zero.
const ZERO_COLUMN_TOL: f64 = 1e-10;

/// Projects the market out of every unprotected column.
///
/// Columns that vanish or become constant are dropped with a warning.
pub fn orthogonalize(design: &BasisDesign, protected: &[String]) -> Result<Orthogonalized> {
    let n = design.n_obs();
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, have: n });
    }
    let m = design.x.column(design.market).into_owned();
    let mm = m.norm_squared();
    if mm == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let mut keep = Vec::new();
    let mut cols = Vec::new();
    let mut flags = Vec::new();
    for j in 0..design.ids.len() {
        let orig = design.x.column(j);
        let is_protected = j == design.market || protected.contains(&design.ids[j]);
        let col = if is_protected {
            orig.into_owned()
        } else {
            let c = orig.dot(&m) / mm;
            orig - &m * c
        };
        let scale = orig.norm();
        let mean = col.mean();
        let spread = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
        if !is_protected && (scale == 0.0 || spread <= ZERO_COLUMN_TOL * scale) {
            warn!("dropping basis asset {} after orthogonalization", design.ids[j]);
            continue;
        }
        keep.push(j);
        cols.push(col);
        flags.push(is_protected);
    }
    let transformed = DMatrix::from_columns(&cols);
    let design = BasisDesign {
        ids: keep.iter().map(|&j| design.ids[j].clone()).collect(),
        categories: keep.iter().map(|&j| design.categories[j].clone()).collect(),
        x: design.columns(&keep),
        market: keep.iter().position(|&j| j == design.market).expect("market kept"),
    };
    Ok(Orthogonalized {
        design,
        transformed,
        protected: flags,
    })
}

/// Excess-return orthogonalization of a basis universe.
pub fn orthogonalize_universe(
    universe: &BasisUniverse,
    rf: &RiskFreeSeries,
    protected: &[String],
) -> Result<Orthogonalized> {
    orthogonalize(&BasisDesign::from_excess(universe, rf)?, protected)
}

/// Prototype set `U` with the per-category representatives it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototypes {
    /// Sorted column indices into the orthogonalized design.
    pub universe: Vec<usize>,
    pub per_category: BTreeMap<String, Vec<usize>>,
}

fn prototype_pass(orth: &Orthogonalized, cols: &[usize], cut: impl Fn(&crate::cluster::Dendrogram) -> Vec<Cluster>) -> Result<Vec<usize>> {
    if cols.len() <= 1 {
        return Ok(cols.to_vec());
    }
    let ids: Vec<String> = cols.iter().map(|&j| orth.design.ids[j].clone()).collect();
    let x = DMatrix::from_fn(orth.transformed.nrows(), cols.len(), |r, c| orth.transformed[(r, cols[c])]);
    let labels: Vec<String> = (0..x.nrows()).map(|t| format!("{t:08}")).collect();
    let panel = ReturnsPanel::dense(labels, ids, x)?;
    let dend = minimax_cluster(&correlation_distance(&panel)?);
    let mut out: Vec<usize> = cut(&dend).iter().map(|c| cols[c.prototype]).collect();
    out.sort_unstable();
    Ok(out)
}

/// Two-stage minimax prototyping: within categories, then across the pooled
/// representatives. Protected columns bypass both stages.
pub fn select_prototypes(orth: &Orthogonalized, config: &GibsConfig) -> Result<Prototypes> {
    let mut by_cat: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for j in 0..orth.design.ids.len() {
        if !orth.protected[j] {
            by_cat.entry(orth.design.categories[j].clone()).or_default().push(j);
        }
    }
    let mut per_category = BTreeMap::new();
    let mut pooled = Vec::new();
    for (cat, cols) in &by_cat {
        let reps = match config.category_counts.get(cat) {
            Some(&k) => prototype_pass(orth, cols, |d| d.cut_to_count(k))?,
            None => prototype_pass(orth, cols, |d| d.cut_by_threshold(config.category_threshold))?,
        };
        pooled.extend_from_slice(&reps);
        per_category.insert(cat.clone(), reps);
    }
    pooled.sort_unstable();
    let mut universe = prototype_pass(orth, &pooled, |d| d.cut_by_threshold(config.global_threshold))?;
    universe.extend((0..orth.protected.len()).filter(|&j| orth.protected[j]));
    universe.sort_unstable();
    Ok(Prototypes {
        universe,
        per_category,
    })
}

/// Per-security outcome of the selection and refit.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub security: String,
    /// `S_i` in design order.
    pub selected: Vec<String>,
    /// `S_i*`: refit coefficients with p-value below the significance level.
    pub significant: Vec<String>,
    /// Names of the refit columns, `"(intercept)"` first when present.
    pub regressors: Vec<String>,
    pub fit: OlsFit,
    pub lambda: f64,
    pub oos_r2: Option<f64>,
}

pub const INTERCEPT: &str = "(intercept)";

impl SelectionResult {
    /// Intercept estimate and its two-sided p-value.
    pub fn alpha(&self) -> Option<(f64, f64)> {
        (self.regressors.first().map(String::as_str) == Some(INTERCEPT))
            .then(|| (self.fit.coefficients[0], self.fit.p_values[0]))
    }

    pub fn coefficient(&self, id: &str) -> Option<f64> {
        self.regressors
            .iter()
            .position(|r| r == id)
            .map(|k| self.fit.coefficients[k])
    }
}

/// Stable 64-bit FNV-1a hash used to derive per-entity seeds.
pub fn entity_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Orthogonalized design, prototypes and the matrices the per-security
/// step needs, computed once per window.
#[derive(Debug, Clone)]
pub struct GibsModel {
    pub orth: Orthogonalized,
    pub prototypes: Prototypes,
    pub config: GibsConfig,
    fixed: Vec<usize>,
}

impl GibsModel {
    pub fn new(design: &BasisDesign, config: &GibsConfig) -> Result<Self> {
        config.validate()?;
        let protected: Vec<String> = config
            .protected_assets
            .iter()
            .filter(|p| design.index_of(p).is_some())
            .cloned()
            .collect();
        let orth = orthogonalize(design, &protected)?;
        let prototypes = select_prototypes(&orth, config)?;
        let fixed = if config.include_fixed_factors {
            config
                .fixed_factors
                .iter()
                .map(|f| {
                    orth.design
                        .index_of(f)
                        .ok_or_else(|| Error::Config(format!("fixed factor {f} not in the basis")))
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            orth,
            prototypes,
            config: config.clone(),
            fixed,
        })
    }

    /// Identifiers of the prototype set `U`.
    pub fn universe_ids(&self) -> Vec<String> {
        self.prototypes
            .universe
            .iter()
            .map(|&j| self.orth.design.ids[j].clone())
            .collect()
    }

    pub fn dimension(&self) -> usize {
        self.prototypes.universe.len()
    }

    /// Drops prototypes whose id fails `keep` from the LASSO candidates.
    pub fn restrict_candidates(&mut self, keep: impl Fn(&str) -> bool) {
        let ids = &self.orth.design.ids;
        self.prototypes.universe.retain(|&j| keep(&ids[j]));
    }

    /// Capped 1se LASSO on `U` followed by the OLS refit. Rows where `y` is
    /// not finite are dropped.
    pub fn select(&self, security: &str, y: &DVector<f64>) -> Result<SelectionResult> {
        let n_all = self.orth.design.n_obs();
        if y.len() != n_all {
            return Err(Error::LengthMismatch {
                expected: n_all,
                got: y.len(),
            });
        }
        let rows: Vec<usize> = (0..n_all).filter(|&t| y[t].is_finite()).collect();
        let yy = DVector::from_iterator(rows.len(), rows.iter().map(|&t| y[t]));
        let u = &self.prototypes.universe;
        let xt_u = DMatrix::from_fn(rows.len(), u.len(), |r, c| self.orth.transformed[(rows[r], u[c])]);
        let seed = entity_seed(self.config.seed, security);
        let lasso = capped_lasso(&xt_u, &yy, self.config.cv_folds, self.config.support_cap, seed)?;
        let mut chosen: BTreeSet<usize> = lasso.support.iter().map(|&k| u[k]).collect();
        chosen.extend(self.fixed.iter().copied());
        let chosen: Vec<usize> = chosen.into_iter().collect();
        self.refit(security, &rows, &yy, &chosen, lasso.lambda)
    }

    /// OLS of `y` on original columns `cols` (design indices) over `rows`.
    pub fn refit(
        &self,
        security: &str,
        rows: &[usize],
        y: &DVector<f64>,
        cols: &[usize],
        lambda: f64,
    ) -> Result<SelectionResult> {
        let design = &self.orth.design;
        let x = DMatrix::from_fn(rows.len(), cols.len(), |r, c| design.x[(rows[r], cols[c])]);
        let (x, offset) = if self.config.refit_intercept {
            (with_intercept(&x), 1)
        } else {
            (x, 0)
        };
        if rows.len() <= x.ncols() {
            return Err(Error::DegenerateAfterSelection {
                selected: cols.len(),
                n: rows.len(),
            });
        }
        let fit = ols(&x, y)?;
        let selected: Vec<String> = cols.iter().map(|&j| design.ids[j].clone()).collect();
        let significant = (0..cols.len())
            .filter(|&k| fit.p_values[k + offset] < self.config.sig_level)
            .map(|k| selected[k].clone())
            .collect();
        let mut regressors = Vec::with_capacity(x.ncols());
        if offset == 1 {
            regressors.push(INTERCEPT.to_string());
        }
        regressors.extend(selected.iter().cloned());
        Ok(SelectionResult {
            security: security.to_string(),
            selected,
            significant,
            regressors,
            fit,
            lambda,
            oos_r2: None,
        })
    }

    /// Predictions of a fitted result for original design rows `x`.
    pub fn predict(&self, result: &SelectionResult, x: &BasisDesign) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(x.n_obs());
        for (k, name) in result.regressors.iter().enumerate() {
            let b = result.fit.coefficients[k];
            if name == INTERCEPT {
                out.add_scalar_mut(b);
            } else {
                let j = x
                    .index_of(name)
                    .ok_or_else(|| Error::Config(format!("basis asset {name} missing from holdout")))?;
                out.axpy(b, &x.x.column(j), 1.0);
            }
        }
        Ok(out)
    }
}

/// One fitted window: prototypes plus per-security results in input order.
#[derive(Debug)]
pub struct GibsRun {
    pub universe: Vec<String>,
    pub results: Vec<SelectionResult>,
    pub failures: Vec<(String, Error)>,
}

impl GibsRun {
    /// Union of every security's selected set, sorted.
    pub fn union_selected(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.results.iter().flat_map(|r| r.selected.iter()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn avg_selected(&self) -> f64 {
        avg(self.results.iter().map(|r| r.selected.len() as f64))
    }

    pub fn avg_significant(&self) -> f64 {
        avg(self.results.iter().map(|r| r.significant.len() as f64))
    }
}

pub(crate) fn avg(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Fits every column of `y` (aligned with the design rows) in parallel.
/// When `holdout` is given, out-of-sample R² is computed against its rows
/// with the training mean as baseline.
pub fn run_gibs(
    y: &ReturnsPanel,
    design: &BasisDesign,
    config: &GibsConfig,
    holdout: Option<(&ReturnsPanel, &BasisDesign)>,
) -> Result<GibsRun> {
    if y.n_periods() != design.n_obs() {
        return Err(Error::LengthMismatch {
            expected: design.n_obs(),
            got: y.n_periods(),
        });
    }
    let model = GibsModel::new(design, config)?;
    let outcomes: Vec<(String, Result<SelectionResult>)> = (0..y.n_assets())
        .into_par_iter()
        .map(|i| {
            let id = y.assets()[i].clone();
            let col = DVector::from_vec(y.column(i));
            let res = model.select(&id, &col).and_then(|mut r| {
                if let Some((y_out, x_out)) = holdout {
                    r.oos_r2 = Some(holdout_r2(&model, &r, &col, y_out, x_out, i)?);
                }
                Ok(r)
            });
            (id, res)
        })
        .collect();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in outcomes {
        match r {
            Ok(r) => results.push(r),
            Err(e) => {
                warn!("selection failed for {id}: {e}");
                failures.push((id, e));
            }
        }
    }
    Ok(GibsRun {
        universe: model.universe_ids(),
        results,
        failures,
    })
}

fn holdout_r2(
    model: &GibsModel,
    r: &SelectionResult,
    y_train: &DVector<f64>,
    y_out: &ReturnsPanel,
    x_out: &BasisDesign,
    i: usize,
) -> Result<f64> {
    let baseline = crate::regression::mean(&y_train.iter().copied().filter(|v| v.is_finite()).collect::<Vec<_>>());
    let pred = model.predict(r, x_out)?;
    let realized = y_out.column(i);
    let rows: Vec<usize> = (0..realized.len()).filter(|&t| realized[t].is_finite()).collect();
    let p: Vec<f64> = rows.iter().map(|&t| pred[t]).collect();
    let a: Vec<f64> = rows.iter().map(|&t| realized[t]).collect();
    crate::regression::out_of_sample_r2(&p, &a, &vec![baseline; a.len()])
}

/// Number of prototypes `|U|` for a window.
pub fn gibs_dimension(universe: &BasisUniverse, rf: &RiskFreeSeries, config: &GibsConfig) -> Result<usize> {
    Ok(GibsModel::new(&BasisDesign::from_excess(universe, rf)?, config)?.dimension())
}

/// Smallest number of principal components whose eigenvalues reach
/// `variance_frac` of the total variance of the columns of `x`.
pub fn pca_dimension(x: &DMatrix<f64>, variance_frac: f64) -> Result<usize> {
    let n = x.nrows();
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, have: n });
    }
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let cov = c.transpose() * &c / (n as f64 - 1.0);
    let mut eig: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = eig.iter().sum();
    if total == 0.0 {
        return Ok(0);
    }
    let mut acc = 0.0;
    for (k, v) in eig.iter().enumerate() {
        acc += v;
        if acc >= variance_frac * total * (1.0 - 1e-12) {
            return Ok(k + 1);
        }
    }
    Ok(eig.len())
}

/// PCA dimension of a universe's fully observed basis excess returns.
pub fn pca_dimension_universe(universe: &BasisUniverse, rf: &RiskFreeSeries, variance_frac: f64) -> Result<usize> {
    pca_dimension(&BasisDesign::from_excess(universe, rf)?.x, variance_frac)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

/// `security,selected,significant,adj_r2,oos_r2` with `;`-joined sets.
pub fn write_selection_csv(results: &[SelectionResult], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["security", "selected", "significant", "adj_r2", "oos_r2"])
        .map_err(|e| Error::csv(path, e))?;
    for r in results {
        let adj = if r.fit.adj_r2.is_finite() {
            format!("{}", r.fit.adj_r2)
        } else {
            String::new()
        };
        w.write_record([
            r.security.as_str(),
            &r.selected.join(";"),
            &r.significant.join(";"),
            &adj,
            &fmt_opt(r.oos_r2),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads back a selection table as `(security, selected, significant)`.
pub fn read_selection_csv(path: impl AsRef<Path>) -> Result<Vec<(String, Vec<String>, Vec<String>)>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let split = |s: &str| -> Vec<String> {
        s.split(';').filter(|p| !p.is_empty()).map(str::to_string).collect()
    };
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            if rec.len() < 3 {
                return Err(Error::csv(path, "selection row needs at least 3 fields"));
            }
            Ok((rec[0].to_string(), split(&rec[1]), split(&rec[2])))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: Vec<DVector<f64>>, ids: &[&str], cats: &[&str]) -> BasisDesign {
        BasisDesign::new(
            ids.iter().map(|s| s.to_string()).collect(),
            cats.iter().map(|s| s.to_string()).collect(),
            DMatrix::from_columns(&cols),
            ids[0],
        )
        .unwrap()
    }

    fn wave(n: usize, f: f64, phase: f64) -> DVector<f64> {
        DVector::from_fn(n, |t, _| (f * t as f64 + phase).sin())
    }

    #[test]
    fn orthogonalization_examples() {
        let n = 40;
        let m = wave(n, 0.3, 0.0);
        let e = crate::regression::project_out(&wave(n, 0.71, 1.0), &m).unwrap();
        let d = design(
            vec![m.clone(), &m + &e, m.clone(), e.clone()],
            &["MKT", "A", "COPY", "PERP"],
            &["m", "c", "c", "c"],
        );
        let orth = orthogonalize(&d, &[]).unwrap();
        assert_eq!(orth.design.ids, vec!["MKT", "A", "PERP"]);
        assert!((orth.transformed.column(1) - &e).amax() < 1e-10);
        assert!((orth.transformed.column(2) - &e).amax() < 1e-12);
        assert_eq!(orth.transformed.column(0), m.column(0));
    }

    #[test]
    fn near_duplicates_collapse_to_one_prototype() {
        let n = 60;
        let m = wave(n, 0.37, 0.0);
        let base = wave(n, 1.1, 0.5);
        let mut cols = vec![m];
        for k in 0..10 {
            cols.push(&base + wave(n, 2.3 + k as f64, k as f64) * 0.01);
        }
        let ids: Vec<String> = std::iter::once("MKT".to_string())
            .chain((0..10).map(|k| format!("D{k}")))
            .collect();
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let mut cats = vec!["market"];
        cats.extend(std::iter::repeat("dup").take(10));
        let d = design(cols, &id_refs, &cats);
        let orth = orthogonalize(&d, &[]).unwrap();
        let protos = select_prototypes(&orth, &GibsConfig::default()).unwrap();
        assert_eq!(protos.per_category["dup"].len(), 1);
        assert_eq!(protos.universe.len(), 2);
        assert!(protos.universe.contains(&orth.design.market));
    }

    #[test]
    fn pca_examples() {
        let n = 200;
        let five = DMatrix::from_fn(n, 5, |t, j| {
            let s = if (t >> j) & 1 == 1 { 1.0 } else { -1.0 };
            s
        });
        assert_eq!(pca_dimension(&five, 0.9).unwrap(), 5);
        let base = wave(n, 0.4, 0.0);
        let copies = DMatrix::from_fn(n, 10, |t, j| base[t] + 1e-6 * ((t * 7 + j * 13) % 11) as f64);
        assert_eq!(pca_dimension(&copies, 0.9).unwrap(), 1);
    }

    #[test]
    fn entity_seed_is_stable() {
        assert_eq!(entity_seed(7, "S0001"), entity_seed(7, "S0001"));
        assert_ne!(entity_seed(7, "S0001"), entity_seed(7, "S0002"));
    }
}
