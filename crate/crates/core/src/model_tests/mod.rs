//! Batch hypothesis tests on fitted factor models.

pub mod backtest;
pub mod batch;
pub mod grid;
pub mod spline;

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fdr::{adjust, FdrMethod};
use crate::gibs::{BasisDesign, GibsConfig, GibsModel};
use crate::panel::ReturnsPanel;
use crate::regression::{nested_f_test, ols, with_intercept, FTestResult};

pub use backtest::{
    alpha_backtest, rolling_alpha_stream, write_backtest_csv, AlphaEstimate, BacktestResult, LegRanking, WeeklyAlphas,
};
pub use batch::{run_window_test, window_test_grid, PriceWindow, WindowTest};
pub use grid::{period_grid_run, write_grid_csv, PeriodGrid};
pub use spline::{varying_coefficient_test, VaryingCoefResult};

/// p-values with both FDR adjustments, ordered by entity id.
///
/// A `None` p-value means the entity was examined but had nothing to test;
/// it still counts in rejection fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub label: String,
    pub entities: Vec<String>,
    pub p_values: Vec<Option<f64>>,
    pub q_bh: Vec<Option<f64>>,
    pub q_bhy: Vec<Option<f64>>,
}

impl TestReport {
    pub fn new(label: impl Into<String>, rows: Vec<(String, Option<f64>)>) -> Result<Self> {
        let mut rows = rows;
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let present: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
        let bh = adjust(&present, FdrMethod::Bh)?.q_values;
        let bhy = adjust(&present, FdrMethod::Bhy)?.q_values;
        let (mut q_bh, mut q_bhy) = (Vec::new(), Vec::new());
        let mut k = 0;
        for r in &rows {
            if r.1.is_some() {
                q_bh.push(Some(bh[k]));
                q_bhy.push(Some(bhy[k]));
                k += 1;
            } else {
                q_bh.push(None);
                q_bhy.push(None);
            }
        }
        Ok(Self {
            label: label.into(),
            entities: rows.iter().map(|r| r.0.clone()).collect(),
            p_values: rows.into_iter().map(|r| r.1).collect(),
            q_bh,
            q_bhy,
        })
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Share of entities with q strictly below `alpha`; zero when empty.
    pub fn reject_frac_at(&self, alpha: f64, method: FdrMethod) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let q = match method {
            FdrMethod::Bh => &self.q_bh,
            FdrMethod::Bhy => &self.q_bhy,
        };
        q.iter().filter(|v| v.is_some_and(|v| v < alpha)).count() as f64 / self.len() as f64
    }

    /// Share of entities with raw p strictly below `alpha`.
    pub fn raw_reject_frac(&self, alpha: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.p_values.iter().filter(|v| v.is_some_and(|v| v < alpha)).count() as f64 / self.len() as f64
    }
}

/// `entity,p,q_bh,q_bhy`; untested entities have empty cells.
pub fn write_report_csv(report: &TestReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["entity", "p", "q_bh", "q_bhy"])
        .map_err(|e| Error::csv(path, e))?;
    let cell = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v}"));
    for k in 0..report.len() {
        w.write_record([
            report.entities[k].clone(),
            cell(report.p_values[k]),
            cell(report.q_bh[k]),
            cell(report.q_bhy[k]),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// OLS of `y` on an intercept plus `x`; returns the intercept and its
/// two-sided p-value.
pub fn intercept_test(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<(f64, f64)> {
    let fit = ols(&with_intercept(x), y)?;
    Ok((fit.coefficients[0], fit.p_values[0]))
}

/// Regresses price levels on `v` (money-market column included by the
/// caller) without an intercept, then tests the mean of the residuals.
pub fn intercept_test_two_step(y: &DVector<f64>, v: &DMatrix<f64>) -> Result<(f64, f64)> {
    let step1 = ols(v, y)?;
    let ones = DMatrix::from_element(y.len(), 1, 1.0);
    let step2 = ols(&ones, &step1.residuals)?;
    Ok((step2.coefficients[0], step2.p_values[0]))
}

/// Indicator of the second half: the first `ceil(m / 2)` rows are zero.
pub fn half_indicator(m: usize) -> DVector<f64> {
    let first = m.div_ceil(2);
    DVector::from_fn(m, |t, _| if t < first { 0.0 } else { 1.0 })
}

/// ANOVA of `dy ~ dv` against `dy ~ dv + dv * h`, no intercept.
pub fn time_invariance_linear(dy: &DVector<f64>, dv: &DMatrix<f64>, h: &DVector<f64>) -> Result<FTestResult> {
    let (n, s) = dv.shape();
    if h.len() != n || dy.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: h.len().min(dy.len()),
        });
    }
    if s == 0 {
        return Err(Error::DegenerateAfterSelection { selected: 0, n });
    }
    let second = h.iter().filter(|v| **v != 0.0).count();
    let first = n - second;
    if first.min(second) < s + 1 && second > 0 {
        return Err(Error::TooFewObservations {
            needed: s,
            have: first.min(second),
        });
    }
    let mut full = DMatrix::zeros(n, 2 * s);
    full.view_mut((0, 0), (n, s)).copy_from(dv);
    for j in 0..s {
        full.set_column(s + j, &dv.column(j).component_mul(h));
    }
    let restricted = ols(dv, dy)?;
    let full = ols(&full, dy)?;
    nested_f_test(&restricted, &full)
}

/// Second-half residual analysis for one security.
///
/// `dy` and `design` cover the second half only. The security's first
/// stage set `selected` is fitted by OLS, then GIBS runs on the residuals
/// with candidates limited to `new_assets` minus `selected`. Returns `None`
/// when nothing new is selected.
pub fn residual_expansion_test(
    security: &str,
    dy: &DVector<f64>,
    design: &BasisDesign,
    selected: &[String],
    new_assets: &BTreeSet<String>,
    config: &GibsConfig,
) -> Result<Option<FTestResult>> {
    let cols = selected
        .iter()
        .map(|id| {
            design
                .index_of(id)
                .ok_or_else(|| Error::Config(format!("selected asset {id} missing from the second half")))
        })
        .collect::<Result<Vec<_>>>()?;
    let chosen: BTreeSet<&String> = selected.iter().collect();
    let candidates: BTreeSet<String> = new_assets
        .iter()
        .filter(|a| !chosen.contains(a) && design.index_of(a).is_some())
        .cloned()
        .collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let x_s = design.columns(&cols);
    let base = ols(&x_s, dy)?;

    let market = design.ids[design.market].clone();
    let drop: BTreeSet<String> = chosen.iter().filter(|a| **a != &market).map(|a| (*a).clone()).collect();
    let mut model = GibsModel::new(&design.without(&drop)?, config)?;
    model.restrict_candidates(|id| candidates.contains(id));
    if model.dimension() == 0 {
        return Ok(None);
    }
    let extra = model.select(security, &base.residuals)?;
    if extra.selected.is_empty() {
        return Ok(None);
    }
    let mut all = cols;
    all.extend(extra.selected.iter().map(|id| design.index_of(id).expect("candidate from design")));
    let full = ols(&design.columns(&all), dy)?;
    nested_f_test(&base, &full).map(Some)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskPremium {
    pub asset: String,
    /// Per-period mean excess return times the annualization factor.
    pub premium: f64,
    pub is_factor: bool,
}

/// Annualized mean excess returns of `selected`, flagged when
/// `|premium| >= threshold`.
pub fn risk_premium(
    excess: &ReturnsPanel,
    selected: &[String],
    periods_per_year: f64,
    threshold: f64,
) -> Result<Vec<RiskPremium>> {
    if selected.is_empty() {
        return Err(Error::Config("risk premia need a nonempty selected set".into()));
    }
    selected
        .iter()
        .map(|id| {
            let j = excess
                .asset_index(id)
                .ok_or_else(|| Error::Config(format!("asset {id} not in the panel")))?;
            let obs: Vec<f64> = excess.column(j).into_iter().filter(|v| v.is_finite()).collect();
            if obs.is_empty() {
                return Err(Error::EmptyPanel);
            }
            let premium = obs.iter().sum::<f64>() / obs.len() as f64 * periods_per_year;
            Ok(RiskPremium {
                asset: id.clone(),
                premium,
                is_factor: premium.abs() >= threshold,
            })
        })
        .collect()
}

/// Smallest absolute premium among `reference`, the usual flagging cut.
pub fn reference_threshold(premia: &[RiskPremium]) -> Option<f64> {
    premia.iter().map(|p| p.premium.abs()).min_by(f64::total_cmp)
}
