//! Per-window batch runners over the price-difference model.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::grid::{period_grid_run, year_rows, PeriodGrid};
use super::spline::{varying_coefficient_test, DEFAULT_BASIS_SIZE, DEFAULT_PENALTY};
use super::{half_indicator, intercept_test_two_step, residual_expansion_test, time_invariance_linear, TestReport};
use crate::error::{Error, Result};
use crate::fdr::FdrMethod;
use crate::gibs::{BasisDesign, GibsConfig, GibsRun, SelectionResult, MONEY_MARKET_ID};
use crate::panel::{adjusted_prices, first_differences, money_market, BasisUniverse, ReturnsPanel, RiskFreeSeries};

/// Price levels and first differences of one window, every series starting
/// at 1.
#[derive(Debug, Clone)]
pub struct PriceWindow {
    /// Security price differences, `T - 1` rows.
    pub dy: ReturnsPanel,
    /// Basis price differences with the money-market column first.
    pub dv: BasisDesign,
    /// Security price levels, `T` rows.
    pub y_levels: ReturnsPanel,
    /// Basis price levels with the money-market column first.
    pub v_levels: BasisDesign,
}

impl PriceWindow {
    /// Securities and basis assets with gaps in the window are dropped.
    pub fn new(securities: &ReturnsPanel, universe: &BasisUniverse, rf: &RiskFreeSeries) -> Result<Self> {
        let keep = securities.fully_observed_assets();
        if keep.is_empty() {
            return Err(Error::EmptyPanel);
        }
        let sec = securities.select_assets(&keep)?;
        let prices = adjusted_prices(&sec, &vec![1.0; sec.n_assets()])?;
        let y_levels = ReturnsPanel::dense(
            prices.timestamps().to_vec(),
            prices.assets().to_vec(),
            prices.prices().clone(),
        )?;
        let dy = first_differences(&prices)?;
        let dv = BasisDesign::from_price_differences(universe, rf)?;

        let panel = universe.panel();
        let sub = panel.select_assets(&panel.fully_observed_assets())?;
        let levels = adjusted_prices(&sub, &vec![1.0; sub.n_assets()])?;
        let b = money_market(rf);
        let t_len = b.len();
        let mut x = DMatrix::zeros(t_len, sub.n_assets() + 1);
        x.set_column(0, &DVector::from_vec(b));
        x.view_mut((0, 1), (t_len, sub.n_assets())).copy_from(levels.prices());
        let mut ids = vec![MONEY_MARKET_ID.to_string()];
        ids.extend(sub.assets().iter().cloned());
        let mut cats = vec!["money_market".to_string()];
        cats.extend(ids[1..].iter().map(|a| universe.category_of(a).unwrap_or_default().to_string()));
        let v_levels = BasisDesign::new(ids, cats, x, universe.market_index())?;
        Ok(Self {
            dy,
            dv,
            y_levels,
            v_levels,
        })
    }

    /// Window over return rows `range` of the inputs.
    pub fn slice(
        securities: &ReturnsPanel,
        universe: &BasisUniverse,
        rf: &RiskFreeSeries,
        range: std::ops::Range<usize>,
    ) -> Result<Self> {
        Self::new(
            &securities.slice_rows(range.clone())?,
            &universe.slice_rows(range.clone())?,
            &rf.slice(range)?,
        )
    }

    /// Runs GIBS on the differences with no refit intercept.
    pub fn select(&self, config: &GibsConfig) -> Result<GibsRun> {
        let mut config = config.clone();
        config.refit_intercept = false;
        crate::gibs::run_gibs(&self.dy, &self.dv, &config, None)
    }

    pub fn dy_of(&self, security: &str) -> Result<DVector<f64>> {
        let j = self
            .dy
            .asset_index(security)
            .ok_or_else(|| Error::Config(format!("security {security} not in the window")))?;
        Ok(DVector::from_vec(self.dy.column(j)))
    }

    pub fn columns_of(design: &BasisDesign, ids: &[String]) -> Result<DMatrix<f64>> {
        let cols = ids
            .iter()
            .map(|id| {
                design
                    .index_of(id)
                    .ok_or_else(|| Error::Config(format!("basis asset {id} not in the window")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(design.columns(&cols))
    }
}

/// Hypothesis tests that can be run per window and summarized in a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowTest {
    TwoStepIntercept,
    Invariance,
    VaryingCoef { basis_size: usize, penalty: f64 },
    ResidualExpansion,
}

impl WindowTest {
    pub const NAMES: [&'static str; 4] = ["intercept", "invariance", "varying-coef", "residual-expansion"];
}

impl FromStr for WindowTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intercept" => Ok(Self::TwoStepIntercept),
            "invariance" => Ok(Self::Invariance),
            "varying-coef" => Ok(Self::VaryingCoef {
                basis_size: DEFAULT_BASIS_SIZE,
                penalty: DEFAULT_PENALTY,
            }),
            "residual-expansion" => Ok(Self::ResidualExpansion),
            other => Err(Error::Config(format!(
                "unknown window test `{other}`; expected one of {}",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for WindowTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TwoStepIntercept => "intercept",
            Self::Invariance => "invariance",
            Self::VaryingCoef { .. } => "varying-coef",
            Self::ResidualExpansion => "residual-expansion",
        })
    }
}

fn collect(
    label: &str,
    results: &[SelectionResult],
    f: impl Fn(&SelectionResult) -> Result<Option<f64>> + Sync,
) -> Result<TestReport> {
    let rows: Vec<(String, Option<f64>)> = results
        .par_iter()
        .filter_map(|r| match f(r) {
            Ok(p) => Some((r.security.clone(), p)),
            Err(e) => {
                log::warn!("{label} skipped {}: {e}", r.security);
                None
            }
        })
        .collect();
    TestReport::new(label, rows)
}

/// Two-step intercept test on price levels with `S_i` plus the money
/// market column.
pub fn two_step_intercept_report(window: &PriceWindow, run: &GibsRun) -> Result<TestReport> {
    collect("intercept", &run.results, |r| {
        let j = window
            .y_levels
            .asset_index(&r.security)
            .ok_or_else(|| Error::Config(format!("no price levels for {}", r.security)))?;
        let y = DVector::from_vec(window.y_levels.column(j));
        let mut ids = vec![MONEY_MARKET_ID.to_string()];
        ids.extend(r.selected.iter().filter(|s| *s != MONEY_MARKET_ID).cloned());
        let v = PriceWindow::columns_of(&window.v_levels, &ids)?;
        intercept_test_two_step(&y, &v).map(|(_, p)| Some(p))
    })
}

/// Half-interaction ANOVA for every security; empty `S_i` is untested.
pub fn invariance_report(window: &PriceWindow, run: &GibsRun) -> Result<TestReport> {
    let h = half_indicator(window.dv.n_obs());
    collect("invariance", &run.results, |r| {
        if r.selected.is_empty() {
            return Ok(None);
        }
        let v = PriceWindow::columns_of(&window.dv, &r.selected)?;
        time_invariance_linear(&window.dy_of(&r.security)?, &v, &h).map(|f| Some(f.p_value))
    })
}

pub fn varying_coef_report(window: &PriceWindow, run: &GibsRun, basis_size: usize, penalty: f64) -> Result<TestReport> {
    collect("varying-coef", &run.results, |r| {
        if r.selected.is_empty() {
            return Ok(None);
        }
        let v = PriceWindow::columns_of(&window.dv, &r.selected)?;
        varying_coefficient_test(&window.dy_of(&r.security)?, &v, basis_size, penalty).map(|f| Some(f.p_value))
    })
}

/// Residual expansion against the assets of `second` that `full` lacks.
pub fn residual_expansion_report(
    full_run: &GibsRun,
    full: &PriceWindow,
    second: &PriceWindow,
    config: &GibsConfig,
) -> Result<TestReport> {
    let old: BTreeSet<&String> = full.dv.ids.iter().collect();
    let new_assets: BTreeSet<String> = second.dv.ids.iter().filter(|a| !old.contains(a)).cloned().collect();
    let mut config = config.clone();
    config.refit_intercept = false;
    collect("residual-expansion", &full_run.results, |r| {
        let dy = second.dy_of(&r.security)?;
        let f = residual_expansion_test(&r.security, &dy, &second.dv, &r.selected, &new_assets, &config)?;
        Ok(f.map(|f| f.p_value))
    })
}

/// Fits the window and runs `test` on every security.
pub fn run_window_test(
    test: WindowTest,
    securities: &ReturnsPanel,
    universe: &BasisUniverse,
    rf: &RiskFreeSeries,
    config: &GibsConfig,
) -> Result<TestReport> {
    let window = PriceWindow::new(securities, universe, rf)?;
    let run = window.select(config)?;
    match test {
        WindowTest::TwoStepIntercept => two_step_intercept_report(&window, &run),
        WindowTest::Invariance => invariance_report(&window, &run),
        WindowTest::VaryingCoef { basis_size, penalty } => varying_coef_report(&window, &run, basis_size, penalty),
        WindowTest::ResidualExpansion => {
            let t_len = securities.n_periods();
            let start = (t_len - 1).div_ceil(2);
            let second = PriceWindow::slice(securities, universe, rf, start..t_len)?;
            residual_expansion_report(&run, &window, &second, config)
        }
    }
}

/// Runs `test` on every calendar-year window and stores the share of
/// securities with BHY q below 0.05.
pub fn window_test_grid(
    test: WindowTest,
    securities: &ReturnsPanel,
    universe: &BasisUniverse,
    rf: &RiskFreeSeries,
    config: &GibsConfig,
    years: (i32, i32),
    min_len: usize,
) -> PeriodGrid {
    period_grid_run(years.0, years.1, min_len, |s, e| {
        let rows = year_rows(securities.timestamps(), s, e)?;
        let report = run_window_test(
            test,
            &securities.slice_rows(rows.clone())?,
            &universe.slice_rows(rows.clone())?,
            &rf.slice(rows)?,
            config,
        )?;
        Ok(report.reject_frac_at(0.05, FdrMethod::Bhy))
    })
}
