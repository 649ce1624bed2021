//! Volatility-sorted portfolios and the low-volatility anomaly study.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibs::{BasisDesign, GibsConfig, GibsModel};
use crate::panel::{label_year, BasisUniverse, ReturnsPanel, RiskFreeSeries};
use crate::regression::{mean, nested_f_test, ols, sample_var, welch_test, Alternative, FTestResult, WelchResult};

#[derive(Debug, Clone, PartialEq)]
pub struct VolConfig {
    pub lookback: usize,
    /// Observed weeks required inside the lookback.
    pub min_obs: usize,
    pub quantile: f64,
    pub min_universe: usize,
}

impl Default for VolConfig {
    fn default() -> Self {
        Self {
            lookback: 52,
            min_obs: 42,
            quantile: 0.25,
            min_universe: 8,
        }
    }
}

/// Weekly low- and high-volatility memberships with their equal-weighted
/// raw returns.
#[derive(Debug, Clone, PartialEq)]
pub struct VolPortfolios {
    /// Panel rows at which each portfolio is held.
    pub rows: Vec<usize>,
    pub weeks: Vec<String>,
    pub low: Vec<Vec<String>>,
    pub high: Vec<Vec<String>>,
    pub low_ret: Vec<f64>,
    pub high_ret: Vec<f64>,
    /// Eligible assets and their formation volatility, ascending.
    pub formation_vols: Vec<Vec<(String, f64)>>,
}

pub const LOW: &str = "low";
pub const HIGH: &str = "high";

impl VolPortfolios {
    /// Both return series on the full row grid of `timestamps`, masked
    /// outside the holding rows.
    pub fn returns_panel(&self, timestamps: &[String]) -> Result<ReturnsPanel> {
        let t_len = timestamps.len();
        let mut values = DMatrix::zeros(t_len, 2);
        let mut mask = DMatrix::from_element(t_len, 2, false);
        for (k, &r) in self.rows.iter().enumerate() {
            if r >= t_len {
                return Err(Error::LengthMismatch { expected: t_len, got: r + 1 });
            }
            for (c, v) in [self.low_ret[k], self.high_ret[k]].into_iter().enumerate() {
                if v.is_finite() {
                    values[(r, c)] = v;
                    mask[(r, c)] = true;
                }
            }
        }
        ReturnsPanel::new(timestamps.to_vec(), vec![LOW.into(), HIGH.into()], values, mask)
    }
}

fn sd(x: &[f64]) -> f64 {
    sample_var(x).sqrt()
}

/// Sorts eligible assets by the SD of their excess returns over the
/// `lookback` rows before each holding row. Ties go to the smaller id.
/// `eligible` further restricts the universe when given.
pub fn form_vol_portfolios(
    panel: &ReturnsPanel,
    rf: &RiskFreeSeries,
    config: &VolConfig,
    eligible: Option<&BTreeSet<String>>,
) -> Result<VolPortfolios> {
    if rf.len() != panel.n_periods() {
        return Err(Error::LengthMismatch {
            expected: panel.n_periods(),
            got: rf.len(),
        });
    }
    if !(config.quantile > 0.0 && config.quantile <= 0.5) {
        return Err(Error::Config(format!("quantile {} outside (0, 0.5]", config.quantile)));
    }
    if config.lookback < 2 || config.min_obs < 2 || config.min_obs > config.lookback {
        return Err(Error::Config("need 2 <= min_obs <= lookback".into()));
    }
    let t_len = panel.n_periods();
    if t_len <= config.lookback {
        return Err(Error::TooFewObservations {
            needed: config.lookback,
            have: t_len,
        });
    }
    let assets: Vec<usize> = (0..panel.n_assets())
        .filter(|&j| eligible.is_none_or(|e| e.contains(&panel.assets()[j])))
        .collect();
    let weeks: Vec<(usize, Vec<(String, f64)>)> = (config.lookback..t_len)
        .into_par_iter()
        .map(|t| {
            let mut vols: Vec<(String, f64)> = assets
                .iter()
                .filter_map(|&j| {
                    let obs: Vec<f64> = (t - config.lookback..t)
                        .filter_map(|s| panel.get(s, j).map(|r| r - rf.rate()[s]))
                        .collect();
                    (obs.len() >= config.min_obs).then(|| (panel.assets()[j].clone(), sd(&obs)))
                })
                .collect();
            vols.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            (t, vols)
        })
        .collect();

    let mut out = VolPortfolios {
        rows: Vec::new(),
        weeks: Vec::new(),
        low: Vec::new(),
        high: Vec::new(),
        low_ret: Vec::new(),
        high_ret: Vec::new(),
        formation_vols: Vec::new(),
    };
    let leg_ret = |members: &[String], t: usize| {
        let obs: Vec<f64> = members
            .iter()
            .filter_map(|id| panel.asset_index(id).and_then(|j| panel.get(t, j)))
            .collect();
        if obs.is_empty() {
            f64::NAN
        } else {
            mean(&obs)
        }
    };
    for (t, vols) in weeks {
        let n = vols.len();
        if n < config.min_universe {
            return Err(Error::UniverseTooSmall(n));
        }
        let k = (config.quantile * n as f64).floor() as usize;
        let low: Vec<String> = vols[..k].iter().map(|v| v.0.clone()).collect();
        // The high leg takes the last k in the same order, so ties at the
        // boundary fall to the larger id.
        let high: Vec<String> = vols[n - k..].iter().map(|v| v.0.clone()).collect();
        out.low_ret.push(leg_ret(&low, t));
        out.high_ret.push(leg_ret(&high, t));
        out.rows.push(t);
        out.weeks.push(panel.timestamps()[t].clone());
        out.low.push(low);
        out.high.push(high);
        out.formation_vols.push(vols);
    }
    Ok(out)
}

/// Capital path of $1 compounded at `returns`; one entry longer than the
/// input.
#[derive(Debug, Clone, PartialEq)]
pub struct CumCapital {
    pub values: Vec<f64>,
}

pub fn cumulative_capital(returns: &[f64]) -> Result<CumCapital> {
    let mut values = Vec::with_capacity(returns.len() + 1);
    let mut level = 1.0;
    values.push(level);
    for (k, &r) in returns.iter().enumerate() {
        if r <= -1.0 || !r.is_finite() {
            return Err(Error::TotalLoss(k));
        }
        level *= 1.0 + r;
        values.push(level);
    }
    Ok(CumCapital { values })
}

/// One-sided Welch test that the low path's mean capital exceeds the high
/// path's.
pub fn anomaly_test(low: &[f64], high: &[f64]) -> Result<WelchResult> {
    if low.len() != high.len() {
        return Err(Error::LengthMismatch {
            expected: low.len(),
            got: high.len(),
        });
    }
    let a = cumulative_capital(low)?;
    let b = cumulative_capital(high)?;
    welch_test(&a.values, &b.values, Alternative::Greater)
}

/// Stacked regression of both portfolios on the union of their selected
/// sets, with and without high-portfolio interactions. No intercept.
pub fn loading_difference_test(
    y_low: &DVector<f64>,
    y_high: &DVector<f64>,
    x: &BasisDesign,
    s_low: &[String],
    s_high: &[String],
) -> Result<FTestResult> {
    let n = x.n_obs();
    if y_low.len() != n || y_high.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: y_low.len().min(y_high.len()),
        });
    }
    let union: BTreeSet<&String> = s_low.iter().chain(s_high).collect();
    if union.is_empty() {
        return Err(Error::Config("loading difference needs a nonempty selected set".into()));
    }
    let cols = union
        .iter()
        .map(|id| {
            x.index_of(id)
                .ok_or_else(|| Error::Config(format!("basis asset {id} not in the design")))
        })
        .collect::<Result<Vec<_>>>()?;
    let xs = x.columns(&cols);
    let s = cols.len();
    let mut w = DMatrix::zeros(2 * n, s);
    w.view_mut((0, 0), (n, s)).copy_from(&xs);
    w.view_mut((n, 0), (n, s)).copy_from(&xs);
    let mut full = DMatrix::zeros(2 * n, 2 * s);
    full.view_mut((0, 0), (2 * n, s)).copy_from(&w);
    full.view_mut((n, s), (n, s)).copy_from(&xs);
    let mut z = DVector::zeros(2 * n);
    z.rows_mut(0, n).copy_from(y_low);
    z.rows_mut(n, n).copy_from(y_high);
    nested_f_test(&ols(&w, &z)?, &ols(&full, &z)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RollingModel {
    /// OLS on the configured fixed factors.
    Fixed,
    Amf,
}

impl fmt::Display for RollingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fixed => "fixed",
            Self::Amf => "amf",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioFit {
    pub portfolio: String,
    pub model: RollingModel,
    pub selected: Vec<String>,
    pub significant: Vec<String>,
    pub alpha: f64,
    pub alpha_p: f64,
    pub adj_r2: f64,
    /// In-sample residual at the window's last row.
    pub residual: f64,
    /// Excess return predicted for the next row, when it exists.
    pub next_prediction: Option<f64>,
    /// Mean excess return over the window.
    pub window_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingWeek {
    pub row: usize,
    pub week: String,
    /// `|U|` of the window, `None` if the window failed.
    pub dimension: Option<usize>,
    pub fits: Vec<PortfolioFit>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingStudy {
    pub weeks: Vec<RollingWeek>,
}

impl RollingStudy {
    pub fn fits(&self, portfolio: &str, model: RollingModel) -> impl Iterator<Item = (&RollingWeek, &PortfolioFit)> {
        let portfolio = portfolio.to_string();
        self.weeks.iter().flat_map(move |w| {
            let p = portfolio.clone();
            w.fits
                .iter()
                .filter(move |f| f.portfolio == p && f.model == model)
                .map(move |f| (w, f))
        })
    }

    /// Residuals at each window end.
    pub fn residuals(&self, portfolio: &str, model: RollingModel) -> Vec<f64> {
        self.fits(portfolio, model).map(|(_, f)| f.residual).collect()
    }

    /// One-step-ahead R² against each window's mean, pooled over the
    /// horizon.
    pub fn oos_r2(&self, portfolio: &str, model: RollingModel, excess: &ReturnsPanel) -> Option<f64> {
        let j = excess.asset_index(portfolio)?;
        let (mut sse, mut sst) = (0.0, 0.0);
        for (w, f) in self.fits(portfolio, model) {
            let (Some(pred), Some(real)) = (f.next_prediction, excess.get(w.row + 1, j)) else {
                continue;
            };
            sse += (real - pred).powi(2);
            sst += (real - f.window_mean).powi(2);
        }
        (sst > 0.0).then(|| 1.0 - sse / sst)
    }

    /// Mean Jaccard similarity of consecutive selected sets.
    pub fn jaccard_stability(&self, portfolio: &str, model: RollingModel) -> f64 {
        let sets: Vec<BTreeSet<&String>> = self
            .fits(portfolio, model)
            .map(|(_, f)| f.selected.iter().collect())
            .collect();
        let sims: Vec<f64> = sets
            .windows(2)
            .map(|p| {
                let inter = p[0].intersection(&p[1]).count();
                let uni = p[0].union(&p[1]).count();
                if uni == 0 {
                    1.0
                } else {
                    inter as f64 / uni as f64
                }
            })
            .collect();
        crate::gibs::avg(sims.into_iter())
    }
}

fn fit_week(
    y: &ReturnsPanel,
    universe: &BasisUniverse,
    rf: &RiskFreeSeries,
    config: &GibsConfig,
    window: usize,
    t: usize,
    models: &[RollingModel],
) -> RollingWeek {
    let start = t + 1 - window;
    let mut week = RollingWeek {
        row: t,
        week: y.timestamps()[t].clone(),
        dimension: None,
        fits: Vec::new(),
        failures: Vec::new(),
    };
    let built = (|| -> Result<(GibsModel, BasisDesign)> {
        let uni = universe.slice_rows(start..t + 1)?;
        let design = BasisDesign::from_excess(&uni, &rf.slice(start..t + 1)?)?;
        let mut cfg = config.clone();
        cfg.refit_intercept = true;
        let model = GibsModel::new(&design, &cfg)?;
        let next = if t + 1 < y.n_periods() {
            BasisDesign::from_excess(&universe.slice_rows(t + 1..t + 2)?, &rf.slice(t + 1..t + 2)?)?
        } else {
            design.rows(&[])
        };
        Ok((model, next))
    })();
    let (model, next) = match built {
        Ok(v) => v,
        Err(e) => {
            week.failures.push(format!("window: {e}"));
            return week;
        }
    };
    week.dimension = Some(model.dimension());
    for (j, name) in y.assets().iter().enumerate() {
        let col = y.column(j);
        let yy = DVector::from_fn(window, |r, _| col[start + r] - rf.rate()[start + r]);
        for &m in models {
            let res = match m {
                RollingModel::Amf => model.select(name, &yy),
                RollingModel::Fixed => (|| {
                    let cols = config
                        .fixed_factors
                        .iter()
                        .map(|f| {
                            model
                                .orth
                                .design
                                .index_of(f)
                                .ok_or_else(|| Error::Config(format!("fixed factor {f} not in the window")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let rows: Vec<usize> = (0..window).filter(|&r| yy[r].is_finite()).collect();
                    let y_obs = DVector::from_iterator(rows.len(), rows.iter().map(|&r| yy[r]));
                    model.refit(name, &rows, &y_obs, &cols, f64::NAN)
                })(),
            };
            let fit = res.and_then(|r| {
                let last = r.fit.residuals.len().checked_sub(1).ok_or(Error::EmptyPanel)?;
                if !yy[window - 1].is_finite() {
                    return Err(Error::Config("portfolio return missing at the window end".into()));
                }
                let (alpha, alpha_p) = r.alpha().unwrap_or((0.0, 1.0));
                let next_prediction = if next.n_obs() == 1 {
                    model.predict(&r, &next).ok().map(|p| p[0])
                } else {
                    None
                };
                Ok(PortfolioFit {
                    portfolio: name.clone(),
                    model: m,
                    selected: r.selected.clone(),
                    significant: r.significant.clone(),
                    alpha,
                    alpha_p,
                    adj_r2: r.fit.adj_r2,
                    residual: r.fit.residuals[last],
                    next_prediction,
                    window_mean: mean(&yy.iter().copied().filter(|v| v.is_finite()).collect::<Vec<_>>()),
                })
            });
            match fit {
                Ok(f) => week.fits.push(f),
                Err(e) => week.failures.push(format!("{name}/{m}: {e}")),
            }
        }
    }
    week
}

/// Re-estimates every column of `y` (raw returns) on the trailing `window`
/// rows ending at each row of `horizon`, under each model.
pub fn rolling_study(
    y: &ReturnsPanel,
    universe: &BasisUniverse,
    rf: &RiskFreeSeries,
    config: &GibsConfig,
    window: usize,
    horizon: Range<usize>,
    models: &[RollingModel],
) -> Result<RollingStudy> {
    if window < 2 || horizon.start + 1 < window || horizon.end > y.n_periods() || horizon.is_empty() {
        return Err(Error::Config(format!(
            "horizon {horizon:?} must end within {} rows and leave {window} rows of history",
            y.n_periods()
        )));
    }
    if universe.panel().n_periods() != y.n_periods() || rf.len() != y.n_periods() {
        return Err(Error::LengthMismatch {
            expected: y.n_periods(),
            got: universe.panel().n_periods().min(rf.len()),
        });
    }
    let weeks = horizon
        .into_par_iter()
        .map(|t| fit_week(y, universe, rf, config, window, t, models))
        .collect::<Vec<_>>();
    for w in &weeks {
        for f in &w.failures {
            log::warn!("{}: {f}", w.week);
        }
    }
    Ok(RollingStudy { weeks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnomalyMode {
    Excess,
    ResidualFixed,
    ResidualAmf,
}

impl FromStr for AnomalyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "excess" => Ok(Self::Excess),
            "residual-fixed" | "residual_ff5" => Ok(Self::ResidualFixed),
            "residual-amf" | "residual_amf" => Ok(Self::ResidualAmf),
            other => Err(Error::Config(format!(
                "unknown anomaly mode `{other}`; expected excess, residual-fixed or residual-amf"
            ))),
        }
    }
}

impl fmt::Display for AnomalyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Excess => "excess",
            Self::ResidualFixed => "residual-fixed",
            Self::ResidualAmf => "residual-amf",
        })
    }
}

/// Low-versus-high series for `mode` over the study horizon: excess
/// returns, or the rolling residuals of the matching model.
pub fn anomaly_series(
    study: &RollingStudy,
    excess: &ReturnsPanel,
    mode: AnomalyMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pick = |name: &str| -> Result<Vec<f64>> {
        match mode {
            AnomalyMode::Excess => {
                let j = excess
                    .asset_index(name)
                    .ok_or_else(|| Error::Config(format!("no series {name}")))?;
                Ok(study
                    .weeks
                    .iter()
                    .filter_map(|w| excess.get(w.row, j))
                    .collect())
            }
            AnomalyMode::ResidualFixed => Ok(study.residuals(name, RollingModel::Fixed)),
            AnomalyMode::ResidualAmf => Ok(study.residuals(name, RollingModel::Amf)),
        }
    };
    let (a, b) = (pick(LOW)?, pick(HIGH)?);
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok((a, b))
}

/// Share of significant selections by basis category in each half-year,
/// as a percentage. Rows follow `categories`' sorted labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub categories: Vec<String>,
    pub periods: Vec<String>,
    pub percent: DMatrix<f64>,
}

/// `2019-H1` style label; weeks 1..=26 form the first half.
pub fn half_year(label: &str) -> String {
    let year = label_year(label).map_or_else(|| label.to_string(), |y| y.to_string());
    let week: u32 = label
        .split_once("-W")
        .and_then(|(_, w)| w.parse().ok())
        .unwrap_or(1);
    format!("{year}-H{}", if week <= 26 { 1 } else { 2 })
}

pub fn significance_heatmap(
    study: &RollingStudy,
    portfolio: &str,
    model: RollingModel,
    basis_categories: &BTreeMap<String, String>,
) -> Result<Heatmap> {
    let categories: Vec<String> = basis_categories.values().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut counts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (w, f) in study.fits(portfolio, model) {
        let col = counts.entry(half_year(&w.week)).or_insert_with(|| vec![0; categories.len()]);
        for a in &f.significant {
            let c = basis_categories
                .get(a)
                .ok_or_else(|| Error::UnclassifiedEntity(a.clone()))?;
            col[categories.binary_search(c).expect("category collected")] += 1;
        }
    }
    let periods: Vec<String> = counts.keys().cloned().collect();
    let mut percent = DMatrix::zeros(categories.len(), periods.len());
    for (p, col) in counts.values().enumerate() {
        let total: usize = col.iter().sum();
        if total > 0 {
            for (c, &n) in col.iter().enumerate() {
                percent[(c, p)] = 100.0 * n as f64 / total as f64;
            }
        }
    }
    Ok(Heatmap {
        categories,
        periods,
        percent,
    })
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    Ok(w)
}

/// `week,portfolio,asset,volatility`.
pub fn write_membership_csv(p: &VolPortfolios, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path, &["week", "portfolio", "asset", "volatility"])?;
    for k in 0..p.rows.len() {
        let vol: BTreeMap<&str, f64> = p.formation_vols[k].iter().map(|(a, v)| (a.as_str(), *v)).collect();
        for (name, members) in [(LOW, &p.low[k]), (HIGH, &p.high[k])] {
            for a in members {
                w.write_record([p.weeks[k].as_str(), name, a, &format!("{}", vol[a.as_str()])])
                    .map_err(|e| Error::csv(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `week,low,high`.
pub fn write_portfolio_returns_csv(p: &VolPortfolios, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path, &["week", LOW, HIGH])?;
    for k in 0..p.rows.len() {
        w.write_record([p.weeks[k].clone(), format!("{}", p.low_ret[k]), format!("{}", p.high_ret[k])])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per week, portfolio and model.
pub fn write_diagnostics_csv(study: &RollingStudy, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(
        path,
        &[
            "week",
            "portfolio",
            "model",
            "selected",
            "significant",
            "alpha",
            "alpha_p",
            "adj_r2",
            "residual",
            "dimension",
        ],
    )?;
    for wk in &study.weeks {
        let dim = wk.dimension.map_or_else(|| "NA".to_string(), |d| d.to_string());
        for f in &wk.fits {
            w.write_record([
                wk.week.clone(),
                f.portfolio.clone(),
                f.model.to_string(),
                f.selected.join(";"),
                f.significant.join(";"),
                format!("{}", f.alpha),
                format!("{}", f.alpha_p),
                format!("{}", f.adj_r2),
                format!("{}", f.residual),
                dim.clone(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `category,<periods...>` with percentages to two decimals.
pub fn write_heatmap_csv(h: &Heatmap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut header = vec!["category"];
    header.extend(h.periods.iter().map(String::as_str));
    let mut w = writer(path, &header)?;
    for (c, cat) in h.categories.iter().enumerate() {
        let mut row = vec![cat.clone()];
        row.extend((0..h.periods.len()).map(|p| format!("{:.2}", h.percent[(c, p)])));
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capital_examples() {
        assert_eq!(cumulative_capital(&[0.0, 0.0]).unwrap().values, vec![1.0; 3]);
        let c = cumulative_capital(&[0.1, -0.1]).unwrap().values;
        assert!((c[1] - 1.1).abs() < 1e-15 && (c[2] - 0.99).abs() < 1e-15);
        assert!(matches!(cumulative_capital(&[0.1, -1.0]), Err(Error::TotalLoss(1))));
    }

    #[test]
    fn identical_series_give_half() {
        let s = [0.01, -0.02, 0.03, 0.0];
        assert!((anomaly_test(&s, &s).unwrap().p_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn four_assets_split_by_extremes() {
        let t_len = 60;
        let scales = [0.03, 0.01, 0.04, 0.02];
        let vals = DMatrix::from_fn(t_len, 4, |t, j| scales[j] * if t % 2 == 0 { 1.0 } else { -1.0 });
        let panel = ReturnsPanel::dense(
            (0..t_len).map(|t| format!("t{t:03}")).collect(),
            ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect(),
            vals,
        )
        .unwrap();
        let rf = RiskFreeSeries::constant(panel.timestamps().to_vec(), 0.0).unwrap();
        let cfg = VolConfig {
            min_universe: 4,
            ..VolConfig::default()
        };
        let p = form_vol_portfolios(&panel, &rf, &cfg, None).unwrap();
        assert_eq!(p.rows.len(), t_len - 52);
        assert!(p.low.iter().all(|l| l == &["B"]));
        assert!(p.high.iter().all(|h| h == &["C"]));
        let err = form_vol_portfolios(&panel, &rf, &VolConfig::default(), None).unwrap_err();
        assert!(matches!(err, Error::UniverseTooSmall(4)));
    }

    #[test]
    fn equal_vols_use_id_order() {
        let t_len = 54;
        let vals = DMatrix::from_fn(t_len, 9, |t, _| if t % 2 == 0 { 0.01 } else { -0.01 });
        let ids: Vec<String> = (0..9).map(|j| format!("X{j}")).collect();
        let panel = ReturnsPanel::dense((0..t_len).map(|t| format!("t{t:03}")).collect(), ids, vals).unwrap();
        let rf = RiskFreeSeries::constant(panel.timestamps().to_vec(), 0.0).unwrap();
        let p = form_vol_portfolios(&panel, &rf, &VolConfig::default(), None).unwrap();
        assert_eq!(p.low[0], vec!["X0", "X1"]);
        assert_eq!(p.high[0], vec!["X7", "X8"]);
    }

    #[test]
    fn half_year_labels() {
        assert_eq!(half_year("2010-W05"), "2010-H1");
        assert_eq!(half_year("2010-W27"), "2010-H2");
    }
}
