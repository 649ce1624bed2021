//! Synthetic return panels with known sparse factor structure.
//!
//! Basis assets follow a block-equicorrelated Gaussian design: every
//! non-market basis asset loads on the market with weight `MARKET_LOADING`,
//! on its block's latent factor with weight `sqrt(rho)` and on its own noise
//! with weight `sqrt(1 - rho)`. After projecting out the market, assets in
//! the same block therefore have correlation close to `rho` and assets in
//! different blocks are close to uncorrelated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{week_label, BasisUniverse, ReturnsPanel, RiskFreeSeries};
use crate::error::{Error, Result};

pub const MARKET_ID: &str = "MKT";
const MARKET_LOADING: f64 = 0.5;
const BASIS_SD: f64 = 0.02;
const MARKET_PREMIUM: f64 = 0.0015;

/// How factor loadings evolve over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ConstantBeta,
    /// Loadings double from row `T/2` on.
    BreakAtMidpoint,
    /// `beta(t) = beta * (1 + 0.75 sin(2 pi t / T))`.
    SmoothDrift,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant-beta" => Ok(Regime::ConstantBeta),
            "break-at-midpoint" => Ok(Regime::BreakAtMidpoint),
            "smooth-drift" => Ok(Regime::SmoothDrift),
            other => Err(Error::InvalidSpec(format!("unknown regime {other:?}"))),
        }
    }
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::ConstantBeta => "constant-beta",
            Regime::BreakAtMidpoint => "break-at-midpoint",
            Regime::SmoothDrift => "smooth-drift",
        }
    }

    /// Multiplier applied to the base loading at row `t` of `n_obs`.
    pub fn multiplier(self, t: usize, n_obs: usize) -> f64 {
        match self {
            Regime::ConstantBeta => 1.0,
            Regime::BreakAtMidpoint => {
                if t >= n_obs / 2 {
                    2.0
                } else {
                    1.0
                }
            }
            Regime::SmoothDrift => {
                1.0 + 0.75 * (2.0 * std::f64::consts::PI * t as f64 / n_obs as f64).sin()
            }
        }
    }
}

/// Parameters of a synthetic panel. The key=value file format uses exactly
/// these field names.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_obs: usize,
    pub n_securities: usize,
    /// Number of basis assets including the market.
    pub n_basis: usize,
    pub sparsity: usize,
    pub beta_scale: f64,
    pub noise_sd: f64,
    pub correlation: f64,
    pub seed: u64,
    pub regime: Regime,
    /// Non-market basis assets per correlated block.
    pub block_size: usize,
    pub start_year: i32,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_obs: 300,
            n_securities: 20,
            n_basis: 50,
            sparsity: 3,
            beta_scale: 1.0,
            noise_sd: 0.005,
            correlation: 0.5,
            seed: 0,
            regime: Regime::ConstantBeta,
            block_size: 5,
            start_year: 2007,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.n_obs < 2 {
            return bad("n_obs must be at least 2");
        }
        if self.n_securities == 0 || self.n_basis == 0 {
            return bad("n_securities and n_basis must be positive");
        }
        if self.sparsity > self.n_basis {
            return bad("sparsity exceeds n_basis");
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return bad("correlation must lie in [0, 1)");
        }
        if !(self.noise_sd > 0.0) || !self.noise_sd.is_finite() {
            return bad("noise_sd must be positive");
        }
        if !self.beta_scale.is_finite() {
            return bad("beta_scale must be finite");
        }
        if self.block_size == 0 {
            return bad("block_size must be positive");
        }
        Ok(())
    }

    /// Parses a flat `key = value` file; `#` starts a comment. Missing keys
    /// keep their defaults.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidSpec(format!("line {}: expected key=value", lineno + 1))
            })?;
            spec.set(key.trim(), value.trim())?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidSpec(format!("{key}: cannot parse {v:?}")))
        }
        match key {
            "n_obs" => self.n_obs = num(key, value)?,
            "n_securities" => self.n_securities = num(key, value)?,
            "n_basis" => self.n_basis = num(key, value)?,
            "sparsity" => self.sparsity = num(key, value)?,
            "beta_scale" => self.beta_scale = num(key, value)?,
            "noise_sd" => self.noise_sd = num(key, value)?,
            "correlation" => self.correlation = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "regime" => self.regime = value.parse()?,
            "block_size" => self.block_size = num(key, value)?,
            "start_year" => self.start_year = num(key, value)?,
            other => return Err(Error::InvalidSpec(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_obs = {}", self.n_obs);
        let _ = writeln!(s, "n_securities = {}", self.n_securities);
        let _ = writeln!(s, "n_basis = {}", self.n_basis);
        let _ = writeln!(s, "sparsity = {}", self.sparsity);
        let _ = writeln!(s, "beta_scale = {}", self.beta_scale);
        let _ = writeln!(s, "noise_sd = {}", self.noise_sd);
        let _ = writeln!(s, "correlation = {}", self.correlation);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "regime = {}", self.regime.as_str());
        let _ = writeln!(s, "block_size = {}", self.block_size);
        let _ = writeln!(s, "start_year = {}", self.start_year);
        s
    }
}

/// True loadings of the generated securities.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `n_securities x n_basis` base loadings (zero off the support).
    pub betas: DMatrix<f64>,
    /// Sorted basis column indices of each security's support.
    pub supports: Vec<Vec<usize>>,
    pub regime: Regime,
    pub n_obs: usize,
}

impl GroundTruth {
    /// Loading of security `i` on basis `j` at row `t`.
    pub fn beta_at(&self, i: usize, j: usize, t: usize) -> f64 {
        self.betas[(i, j)] * self.regime.multiplier(t, self.n_obs)
    }

    /// Support of security `i` as basis identifiers.
    pub fn support_ids<'a>(&self, i: usize, basis: &'a ReturnsPanel) -> Vec<&'a str> {
        self.supports[i]
            .iter()
            .map(|&j| basis.assets()[j].as_str())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub securities: ReturnsPanel,
    pub universe: BasisUniverse,
    pub risk_free: RiskFreeSeries,
    pub truth: GroundTruth,
}

/// Generates a panel under `spec`; identical specs give identical output.
pub fn synthesize(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (t_len, p, n_sec) = (spec.n_obs, spec.n_basis, spec.n_securities);
    let timestamps: Vec<String> = (0..t_len).map(|t| week_label(spec.start_year, t)).collect();

    let rf: Vec<f64> = (0..t_len)
        .map(|t| 0.0004 * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * t as f64 / 52.0).sin()))
        .collect();

    let n_blocks = (p.saturating_sub(1)).div_ceil(spec.block_size);
    let rho = spec.correlation;
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    let premia: Vec<f64> = (0..p)
        .map(|j| {
            if j == 0 {
                MARKET_PREMIUM
            } else {
                0.0005 * normal(&mut rng)
            }
        })
        .collect();

    // Basis excess returns.
    let mut basis_x = DMatrix::zeros(t_len, p);
    for t in 0..t_len {
        let market = BASIS_SD * normal(&mut rng);
        let blocks: Vec<f64> = (0..n_blocks).map(|_| normal(&mut rng)).collect();
        basis_x[(t, 0)] = premia[0] + market;
        for j in 1..p {
            let b = (j - 1) / spec.block_size;
            let own = normal(&mut rng);
            basis_x[(t, j)] = premia[j]
                + MARKET_LOADING * market
                + BASIS_SD * (rho.sqrt() * blocks[b] + (1.0 - rho).sqrt() * own);
        }
    }

    let mut betas = DMatrix::zeros(n_sec, p);
    let mut supports = Vec::with_capacity(n_sec);
    for i in 0..n_sec {
        let mut support: Vec<usize> = sample(&mut rng, p, spec.sparsity).into_vec();
        support.sort_unstable();
        for &j in &support {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            betas[(i, j)] = sign * spec.beta_scale * rng.gen_range(0.5..1.5);
        }
        supports.push(support);
    }
    let truth = GroundTruth {
        betas,
        supports,
        regime: spec.regime,
        n_obs: t_len,
    };

    let mut sec = DMatrix::zeros(t_len, n_sec);
    for t in 0..t_len {
        for i in 0..n_sec {
            let signal: f64 = truth.supports[i]
                .iter()
                .map(|&j| truth.beta_at(i, j, t) * basis_x[(t, j)])
                .sum();
            sec[(t, i)] = rf[t] + signal + spec.noise_sd * normal(&mut rng);
        }
    }

    let mut basis_raw = basis_x;
    for (t, mut row) in basis_raw.row_iter_mut().enumerate() {
        row.add_scalar_mut(rf[t]);
    }

    let basis_ids: Vec<String> = (0..p)
        .map(|j| {
            if j == 0 {
                MARKET_ID.to_string()
            } else {
                format!("B{j:03}")
            }
        })
        .collect();
    let categories: BTreeMap<String, String> = basis_ids
        .iter()
        .enumerate()
        .map(|(j, id)| {
            let cat = if j == 0 {
                "market".to_string()
            } else {
                format!("block{:02}", (j - 1) / spec.block_size)
            };
            (id.clone(), cat)
        })
        .collect();
    let sec_ids: Vec<String> = (0..n_sec).map(|i| format!("S{i:04}")).collect();

    let securities = ReturnsPanel::dense(timestamps.clone(), sec_ids, sec)?;
    let basis = ReturnsPanel::dense(timestamps.clone(), basis_ids, basis_raw)?;
    let universe = BasisUniverse::new(basis, categories, MARKET_ID)?;
    let risk_free = RiskFreeSeries::new(timestamps, rf)?;
    Ok(SyntheticData {
        securities,
        universe,
        risk_free,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::excess_returns;

    #[test]
    fn kv_round_trip() {
        let spec = SyntheticSpec {
            regime: Regime::SmoothDrift,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(SyntheticSpec::from_kv(&spec.to_kv()).unwrap(), spec);
        assert!(SyntheticSpec::from_kv("bogus = 1").is_err());
        assert!(SyntheticSpec::from_kv("sparsity = 60\nn_basis = 50").is_err());
        assert!(SyntheticSpec::from_kv("correlation = 1.0").is_err());
    }

    #[test]
    fn noiseless_single_factor() {
        let spec = SyntheticSpec {
            noise_sd: 1e-300,
            sparsity: 1,
            n_obs: 60,
            n_securities: 5,
            n_basis: 11,
            ..Default::default()
        };
        let data = synthesize(&spec).unwrap();
        let y = excess_returns(&data.securities, &data.risk_free).unwrap();
        let x = excess_returns(data.universe.panel(), &data.risk_free).unwrap();
        for i in 0..spec.n_securities {
            let j = data.truth.supports[i][0];
            let b = data.truth.betas[(i, j)];
            for t in 0..spec.n_obs {
                let diff = y.get(t, i).unwrap() - b * x.get(t, j).unwrap();
                assert!(diff.abs() < 1e-10, "security {i} row {t}: {diff}");
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SyntheticSpec {
            seed: 9,
            ..Default::default()
        };
        let a = synthesize(&spec).unwrap();
        let b = synthesize(&spec).unwrap();
        assert_eq!(a.securities, b.securities);
        assert_eq!(a.universe, b.universe);
        assert_eq!(a.truth, b.truth);
        let c = synthesize(&SyntheticSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a.securities, c.securities);
    }

    #[test]
    fn regime_paths() {
        assert_eq!(Regime::BreakAtMidpoint.multiplier(49, 100), 1.0);
        assert_eq!(Regime::BreakAtMidpoint.multiplier(50, 100), 2.0);
        assert_eq!(Regime::SmoothDrift.multiplier(0, 100), 1.0);
        assert!((Regime::SmoothDrift.multiplier(25, 100) - 1.75).abs() < 1e-12);
    }
}
