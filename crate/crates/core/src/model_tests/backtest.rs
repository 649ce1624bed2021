//! Zero-investment long/short portfolio on significant intercepts.

use std::ops::Range;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibs::{BasisDesign, GibsConfig, GibsModel};
use crate::panel::ReturnsPanel;
use crate::regression::{mean, sample_var, student_t_sf};

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimate {
    pub security: String,
    pub alpha: f64,
    pub p_value: f64,
}

/// Estimates available before `row`, traded at the returns of `row`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyAlphas {
    pub row: usize,
    pub estimates: Vec<AlphaEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LegRanking {
    /// Top quantile of the significant-positive names.
    #[default]
    WithinSignificant,
    /// Top quantile of all names, then keep the significant-positive ones.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub weeks: Vec<String>,
    pub long_ret: Vec<f64>,
    pub short_ret: Vec<f64>,
    pub value_change: Vec<f64>,
    /// Weeks where a leg was empty.
    pub flagged: Vec<bool>,
    pub long_members: Vec<Vec<String>>,
    pub short_members: Vec<Vec<String>>,
    pub terminal_value: f64,
}

impl BacktestResult {
    /// One-sample t statistic and one-sided p-value for a positive mean
    /// weekly value change.
    pub fn mean_change_test(&self) -> (f64, f64) {
        let n = self.value_change.len();
        if n < 2 {
            return (0.0, 0.5);
        }
        let m = mean(&self.value_change);
        let se = (sample_var(&self.value_change) / n as f64).sqrt();
        let t = if se > 0.0 {
            m / se
        } else if m == 0.0 {
            0.0
        } else {
            m.signum() * f64::INFINITY
        };
        (t, student_t_sf(t, (n - 1) as f64))
    }
}

fn leg(estimates: &[AlphaEstimate], quantile: f64, sig: f64, ranking: LegRanking, positive: bool) -> Vec<String> {
    let keep = |e: &AlphaEstimate| e.p_value < sig && if positive { e.alpha > 0.0 } else { e.alpha < 0.0 };
    let mut sorted: Vec<&AlphaEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| {
        let o = if positive { b.alpha.total_cmp(&a.alpha) } else { a.alpha.total_cmp(&b.alpha) };
        o.then_with(|| a.security.cmp(&b.security))
    });
    match ranking {
        LegRanking::WithinSignificant => {
            let sig: Vec<&AlphaEstimate> = sorted.into_iter().filter(|e| keep(e)).collect();
            let k = (quantile * sig.len() as f64).ceil() as usize;
            sig.into_iter().take(k).map(|e| e.security.clone()).collect()
        }
        LegRanking::Global => {
            let k = (quantile * sorted.len() as f64).ceil() as usize;
            sorted.into_iter().take(k).filter(|e| keep(e)).map(|e| e.security.clone()).collect()
        }
    }
}

fn leg_return(members: &[String], returns: &ReturnsPanel, row: usize) -> Option<f64> {
    let obs: Vec<f64> = members
        .iter()
        .filter_map(|id| returns.asset_index(id).and_then(|j| returns.get(row, j)))
        .collect();
    (!obs.is_empty()).then(|| mean(&obs))
}

/// Equal-weighted $1 long in the top `quantile` of significant positive
/// alphas and $1 short in the bottom `quantile` of significant negative
/// alphas, rebalanced each week. Empty legs contribute zero and flag the
/// week.
pub fn alpha_backtest(
    stream: &[WeeklyAlphas],
    returns: &ReturnsPanel,
    quantile: f64,
    sig_level: f64,
    ranking: LegRanking,
) -> Result<BacktestResult> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::Config(format!("quantile {quantile} outside (0, 1]")));
    }
    let mut out = BacktestResult {
        weeks: Vec::new(),
        long_ret: Vec::new(),
        short_ret: Vec::new(),
        value_change: Vec::new(),
        flagged: Vec::new(),
        long_members: Vec::new(),
        short_members: Vec::new(),
        terminal_value: 0.0,
    };
    for w in stream {
        if w.row >= returns.n_periods() {
            return Err(Error::LengthMismatch {
                expected: returns.n_periods(),
                got: w.row + 1,
            });
        }
        let long = leg(&w.estimates, quantile, sig_level, ranking, true);
        let short = leg(&w.estimates, quantile, sig_level, ranking, false);
        let lr = leg_return(&long, returns, w.row);
        let sr = leg_return(&short, returns, w.row);
        let change = lr.unwrap_or(0.0) - sr.unwrap_or(0.0);
        out.weeks.push(returns.timestamps()[w.row].clone());
        out.long_ret.push(lr.unwrap_or(0.0));
        out.short_ret.push(sr.unwrap_or(0.0));
        out.value_change.push(change);
        out.flagged.push(lr.is_none() || sr.is_none());
        out.long_members.push(long);
        out.short_members.push(short);
        out.terminal_value += change;
    }
    Ok(out)
}

/// Refits GIBS on the `window` rows before each row of `rows` and records
/// every security's intercept. `y` and `design` share row indexing.
pub fn rolling_alpha_stream(
    y: &ReturnsPanel,
    design: &BasisDesign,
    config: &GibsConfig,
    window: usize,
    rows: Range<usize>,
) -> Result<Vec<WeeklyAlphas>> {
    if rows.start < window || rows.end > design.n_obs() || y.n_periods() != design.n_obs() {
        return Err(Error::Config(format!(
            "backtest rows {rows:?} need {window} prior rows inside {} periods",
            design.n_obs()
        )));
    }
    let mut config = config.clone();
    config.refit_intercept = true;
    rows.into_par_iter()
        .map(|t| {
            let idx: Vec<usize> = (t - window..t).collect();
            let model = GibsModel::new(&design.rows(&idx), &config)?;
            let estimates = (0..y.n_assets())
                .filter_map(|i| {
                    let col = y.column(i);
                    let yy = DVector::from_fn(window, |r, _| col[idx[r]]);
                    let id = &y.assets()[i];
                    match model.select(id, &yy) {
                        Ok(r) => r.alpha().map(|(alpha, p_value)| AlphaEstimate {
                            security: id.clone(),
                            alpha,
                            p_value,
                        }),
                        Err(e) => {
                            log::warn!("week {t}: {id} skipped: {e}");
                            None
                        }
                    }
                })
                .collect();
            Ok(WeeklyAlphas { row: t, estimates })
        })
        .collect()
}

/// `week,long_ret,short_ret,value_change,flag`.
pub fn write_backtest_csv(result: &BacktestResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["week", "long_ret", "short_ret", "value_change", "flag"])
        .map_err(|e| Error::csv(path, e))?;
    for k in 0..result.weeks.len() {
        w.write_record([
            result.weeks[k].clone(),
            format!("{}", result.long_ret[k]),
            format!("{}", result.short_ret[k]),
            format!("{}", result.value_change[k]),
            (result.flagged[k] as u8).to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
