//! Return panels and the series derived from them.
//!
//! A [`ReturnsPanel`] is a `T x N` matrix of periodic simple returns indexed
//! by ordered period labels and asset identifiers, with an observation mask.
//! Masked cells hold `NaN` in the value matrix and must never be read as data.
//!
//! Price-like series ([`PricePanel`], [`money_market`]) share the panel's
//! timestamps: the level at row `t` compounds the returns of rows `0..t`, so
//! the first row is the initial level and the last return of a panel does not
//! enter any level.

mod io;
mod synth;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use io::{
    load_categories, load_classes, load_eligibility, load_panel, load_risk_free, write_panel, write_risk_free,
    write_categories, Layout,
};
pub use synth::{synthesize, GroundTruth, Regime, SyntheticData, SyntheticSpec, MARKET_ID};

/// Aligned time x asset matrix of simple returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    timestamps: Vec<String>,
    assets: Vec<String>,
    values: DMatrix<f64>,
    mask: DMatrix<bool>,
}

impl ReturnsPanel {
    /// Builds a panel, checking label ordering, shapes and finiteness of
    /// observed cells. Unobserved cells are overwritten with `NaN`.
    pub fn new(
        timestamps: Vec<String>,
        assets: Vec<String>,
        mut values: DMatrix<f64>,
        mask: DMatrix<bool>,
    ) -> Result<Self> {
        if timestamps.is_empty() || assets.is_empty() {
            return Err(Error::EmptyPanel);
        }
        if values.nrows() != timestamps.len() {
            return Err(Error::LengthMismatch {
                expected: timestamps.len(),
                got: values.nrows(),
            });
        }
        if values.ncols() != assets.len() {
            return Err(Error::LengthMismatch {
                expected: assets.len(),
                got: values.ncols(),
            });
        }
        if mask.shape() != values.shape() {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                got: mask.len(),
            });
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::csv(
                "<panel>",
                format!("timestamps not strictly increasing at {} -> {}", w[0], w[1]),
            ));
        }
        for j in 0..values.ncols() {
            for t in 0..values.nrows() {
                if mask[(t, j)] {
                    if !values[(t, j)].is_finite() {
                        return Err(Error::csv(
                            "<panel>",
                            format!("non-finite value for {} at {}", assets[j], timestamps[t]),
                        ));
                    }
                } else {
                    values[(t, j)] = f64::NAN;
                }
            }
        }
        Ok(Self {
            timestamps,
            assets,
            values,
            mask,
        })
    }

    /// Fully observed panel.
    pub fn dense(timestamps: Vec<String>, assets: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let mask = DMatrix::from_element(values.nrows(), values.ncols(), true);
        Self::new(timestamps, assets, values, mask)
    }

    pub fn n_periods(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    /// Raw value matrix; masked cells are `NaN`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn get(&self, t: usize, asset: usize) -> Option<f64> {
        self.mask[(t, asset)].then(|| self.values[(t, asset)])
    }

    pub fn asset_index(&self, id: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == id)
    }

    pub fn is_fully_observed(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Number of observed periods of one asset.
    pub fn observed_count(&self, asset: usize) -> usize {
        self.mask.column(asset).iter().filter(|&&m| m).count()
    }

    /// Fraction of periods in which an asset is observed.
    pub fn coverage(&self, asset: usize) -> f64 {
        self.observed_count(asset) as f64 / self.n_periods() as f64
    }

    /// Column as a dense vector (masked cells `NaN`).
    pub fn column(&self, asset: usize) -> Vec<f64> {
        self.values.column(asset).iter().copied().collect()
    }

    /// Sub-panel with the given columns, in the given order.
    pub fn select_assets(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyPanel);
        }
        let values = self.values.select_columns(columns.iter());
        let mask = self.mask.select_columns(columns.iter());
        let assets = columns.iter().map(|&j| self.assets[j].clone()).collect();
        Self::new(self.timestamps.clone(), assets, values, mask)
    }

    /// Sub-panel restricted to assets matching `keep`.
    pub fn select_by_id<F: Fn(&str) -> bool>(&self, keep: F) -> Result<Self> {
        let cols: Vec<usize> = (0..self.n_assets())
            .filter(|&j| keep(&self.assets[j]))
            .collect();
        self.select_assets(&cols)
    }

    /// Rows `range.start..range.end`.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n_periods() {
            return Err(Error::EmptyPanel);
        }
        let len = range.end - range.start;
        let values = self.values.rows(range.start, len).into_owned();
        let mask = self.mask.rows(range.start, len).into_owned();
        Self::new(
            self.timestamps[range].to_vec(),
            self.assets.clone(),
            values,
            mask,
        )
    }

    /// Assets observed in every row of the panel.
    pub fn fully_observed_assets(&self) -> Vec<usize> {
        (0..self.n_assets())
            .filter(|&j| self.observed_count(j) == self.n_periods())
            .collect()
    }
}

/// Per-period risk-free return, aligned with a panel's timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskFreeSeries {
    timestamps: Vec<String>,
    rate: Vec<f64>,
}

impl RiskFreeSeries {
    pub fn new(timestamps: Vec<String>, rate: Vec<f64>) -> Result<Self> {
        if timestamps.len() != rate.len() {
            return Err(Error::LengthMismatch {
                expected: timestamps.len(),
                got: rate.len(),
            });
        }
        if let Some(t) = rate.iter().position(|r| !r.is_finite()) {
            return Err(Error::csv(
                "<risk-free>",
                format!("non-finite rate at {}", timestamps[t]),
            ));
        }
        Ok(Self { timestamps, rate })
    }

    /// Constant rate over the given labels.
    pub fn constant(timestamps: Vec<String>, rate: f64) -> Result<Self> {
        let r = vec![rate; timestamps.len()];
        Self::new(timestamps, r)
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn rate(&self) -> &[f64] {
        &self.rate
    }

    pub fn len(&self) -> usize {
        self.rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(
            self.timestamps[range.clone()].to_vec(),
            self.rate[range].to_vec(),
        )
    }
}

/// Basis assets with their category labels and the market identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisUniverse {
    panel: ReturnsPanel,
    categories: BTreeMap<String, String>,
    market_index: String,
}

impl BasisUniverse {
    pub fn new(
        panel: ReturnsPanel,
        categories: BTreeMap<String, String>,
        market_index: impl Into<String>,
    ) -> Result<Self> {
        let market_index = market_index.into();
        if panel.asset_index(&market_index).is_none() {
            return Err(Error::MissingMarketIndex(market_index));
        }
        if let Some(a) = panel.assets().iter().find(|a| !categories.contains_key(*a)) {
            return Err(Error::UnclassifiedEntity(a.clone()));
        }
        Ok(Self {
            panel,
            categories,
            market_index,
        })
    }

    pub fn panel(&self) -> &ReturnsPanel {
        &self.panel
    }

    pub fn categories(&self) -> &BTreeMap<String, String> {
        &self.categories
    }

    pub fn category_of(&self, asset: &str) -> Option<&str> {
        self.categories.get(asset).map(String::as_str)
    }

    pub fn market_index(&self) -> &str {
        &self.market_index
    }

    pub fn market_column(&self) -> usize {
        self.panel
            .asset_index(&self.market_index)
            .expect("market index checked at construction")
    }

    /// Same universe over a row range.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Ok(Self {
            panel: self.panel.slice_rows(range)?,
            categories: self.categories.clone(),
            market_index: self.market_index.clone(),
        })
    }

    /// Restricts the universe to a subset of columns; the market must survive.
    pub fn select_assets(&self, columns: &[usize]) -> Result<Self> {
        let panel = self.panel.select_assets(columns)?;
        let categories = panel
            .assets()
            .iter()
            .map(|a| (a.clone(), self.categories[a].clone()))
            .collect();
        Self::new(panel, categories, self.market_index.clone())
    }
}

/// Adjusted price levels (currency units) aligned with a returns panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    timestamps: Vec<String>,
    assets: Vec<String>,
    prices: DMatrix<f64>,
    mask: DMatrix<bool>,
}

impl PricePanel {
    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn n_periods(&self) -> usize {
        self.timestamps.len()
    }
}

/// Keeps assets observed in at least `min_frac` of the periods (inclusive).
pub fn filter_coverage(panel: &ReturnsPanel, min_frac: f64) -> Result<ReturnsPanel> {
    if !(min_frac > 0.0 && min_frac <= 1.0) {
        return Err(Error::Config(format!("min_frac {min_frac} not in (0, 1]")));
    }
    let need = min_frac * panel.n_periods() as f64;
    let keep: Vec<usize> = (0..panel.n_assets())
        .filter(|&j| panel.observed_count(j) as f64 >= need - 1e-9)
        .collect();
    panel.select_assets(&keep)
}

/// Subtracts the risk-free rate from every observed cell.
pub fn excess_returns(panel: &ReturnsPanel, rf: &RiskFreeSeries) -> Result<ReturnsPanel> {
    if rf.len() != panel.n_periods() {
        return Err(Error::LengthMismatch {
            expected: panel.n_periods(),
            got: rf.len(),
        });
    }
    if rf.timestamps() != panel.timestamps() {
        return Err(Error::csv(
            "<risk-free>",
            "risk-free timestamps do not match the panel",
        ));
    }
    let mut values = panel.values().clone();
    for (t, mut row) in values.row_iter_mut().enumerate() {
        let r = rf.rate()[t];
        for v in row.iter_mut() {
            *v -= r;
        }
    }
    ReturnsPanel::new(
        panel.timestamps().to_vec(),
        panel.assets().to_vec(),
        values,
        panel.mask().clone(),
    )
}

/// Compounds returns into adjusted price levels starting from `initial`.
///
/// For each asset the level is `initial` at its first observed row and
/// `Y(t) = Y(t-1) * (1 + R(t-1))` afterwards, up to its last observed row.
pub fn adjusted_prices(panel: &ReturnsPanel, initial: &[f64]) -> Result<PricePanel> {
    if initial.len() != panel.n_assets() {
        return Err(Error::LengthMismatch {
            expected: panel.n_assets(),
            got: initial.len(),
        });
    }
    let (t_len, n) = (panel.n_periods(), panel.n_assets());
    let mut prices = DMatrix::from_element(t_len, n, f64::NAN);
    let mut mask = DMatrix::from_element(t_len, n, false);
    for j in 0..n {
        let asset = &panel.assets()[j];
        if !(initial[j] > 0.0) {
            return Err(Error::NonPositivePrice {
                asset: asset.clone(),
                row: 0,
            });
        }
        let observed: Vec<usize> = (0..t_len).filter(|&t| panel.mask()[(t, j)]).collect();
        let (Some(&first), Some(&last)) = (observed.first(), observed.last()) else {
            continue;
        };
        let mut level = initial[j];
        for t in first..=last {
            prices[(t, j)] = level;
            mask[(t, j)] = true;
            let r = panel.get(t, j).ok_or_else(|| Error::InteriorGap {
                asset: asset.clone(),
                row: t,
            })?;
            let gross = 1.0 + r;
            if gross <= 0.0 {
                return Err(Error::NonPositivePrice {
                    asset: asset.clone(),
                    row: t,
                });
            }
            level *= gross;
        }
    }
    Ok(PricePanel {
        timestamps: panel.timestamps().to_vec(),
        assets: panel.assets().to_vec(),
        prices,
        mask,
    })
}

/// Value of a money-market account worth 1 at the first period.
pub fn money_market(rf: &RiskFreeSeries) -> Vec<f64> {
    let mut out = Vec::with_capacity(rf.len());
    let mut level = 1.0;
    for &r in rf.rate() {
        out.push(level);
        level *= 1.0 + r;
    }
    out
}

/// First-order differences `Y(t+1) - Y(t)`, labelled by the earlier period.
pub fn first_differences(prices: &PricePanel) -> Result<ReturnsPanel> {
    let t_len = prices.n_periods();
    if t_len < 2 {
        return Err(Error::EmptyPanel);
    }
    let n = prices.assets.len();
    let mut values = DMatrix::zeros(t_len - 1, n);
    let mut mask = DMatrix::from_element(t_len - 1, n, false);
    for j in 0..n {
        for t in 0..t_len - 1 {
            if prices.mask[(t, j)] && prices.mask[(t + 1, j)] {
                values[(t, j)] = prices.prices[(t + 1, j)] - prices.prices[(t, j)];
                mask[(t, j)] = true;
            }
        }
    }
    ReturnsPanel::new(
        prices.timestamps[..t_len - 1].to_vec(),
        prices.assets.clone(),
        values,
        mask,
    )
}

/// Calendar year of a period label (`YYYY-...`).
pub fn label_year(label: &str) -> Option<i32> {
    label.get(..4)?.parse().ok()
}

/// ISO-style weekly label for period `t` counted from the first week of
/// `start_year`, assuming 52 weeks per year.
pub fn week_label(start_year: i32, t: usize) -> String {
    format!("{}-W{:02}", start_year + (t / 52) as i32, t % 52 + 1)
}
