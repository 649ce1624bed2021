//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gibs::GibsConfig;
use crate::panel::Layout;

/// Every key of the configuration file has the name of a field here.
/// Relative paths are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub securities: Option<PathBuf>,
    pub basis: Option<PathBuf>,
    pub rf: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub classes: Option<PathBuf>,
    /// `asset,cap_rank` file for the volatility universe.
    pub eligibility: Option<PathBuf>,
    pub layout: Layout,
    pub market: String,
    pub min_coverage: f64,

    pub category_threshold: f64,
    pub global_threshold: f64,
    pub support_cap: usize,
    pub cv_folds: usize,
    pub sig_level: f64,
    pub protected_assets: Vec<String>,
    pub fixed_factors: Vec<String>,
    pub include_fixed_factors: bool,

    pub test: Option<String>,
    pub years: Option<(i32, i32)>,
    pub min_len: usize,
    pub basis_size: usize,
    pub penalty: f64,
    pub holdout: usize,
    pub window: usize,
    pub lookback: usize,
    pub min_obs: usize,
    pub vol_quantile: f64,
    pub min_universe: usize,
    pub max_cap_rank: usize,
    pub premium_threshold: Option<f64>,
    pub periods_per_year: f64,

    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Zero lets the pool pick.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GibsConfig::default();
        Self {
            securities: None,
            basis: None,
            rf: None,
            categories: None,
            classes: None,
            eligibility: None,
            layout: Layout::Wide,
            market: crate::panel::MARKET_ID.to_string(),
            min_coverage: 0.8,
            category_threshold: g.category_threshold,
            global_threshold: g.global_threshold,
            support_cap: g.support_cap,
            cv_folds: g.cv_folds,
            sig_level: g.sig_level,
            protected_assets: Vec::new(),
            fixed_factors: Vec::new(),
            include_fixed_factors: false,
            test: None,
            years: None,
            min_len: 3,
            basis_size: crate::model_tests::spline::DEFAULT_BASIS_SIZE,
            penalty: crate::model_tests::spline::DEFAULT_PENALTY,
            holdout: 52,
            window: 156,
            lookback: 52,
            min_obs: 42,
            vol_quantile: 0.25,
            min_universe: 8,
            max_cap_rank: 2500,
            premium_threshold: None,
            periods_per_year: 52.0,
            out: PathBuf::from("out"),
            seed: None,
            threads: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Parses `text`; `#` starts a comment.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim(), base)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        let path = |v: &str| (!v.is_empty()).then(|| base.join(v));
        match key {
            "securities" => self.securities = path(v),
            "basis" => self.basis = path(v),
            "rf" => self.rf = path(v),
            "categories" => self.categories = path(v),
            "classes" => self.classes = path(v),
            "eligibility" => self.eligibility = path(v),
            "layout" => self.layout = v.parse()?,
            "market" => self.market = v.to_string(),
            "min_coverage" => self.min_coverage = parse(key, v)?,
            "category_threshold" => self.category_threshold = parse(key, v)?,
            "global_threshold" => self.global_threshold = parse(key, v)?,
            "support_cap" => self.support_cap = parse(key, v)?,
            "cv_folds" => self.cv_folds = parse(key, v)?,
            "sig_level" => self.sig_level = parse(key, v)?,
            "protected_assets" => self.protected_assets = list(v),
            "fixed_factors" => self.fixed_factors = list(v),
            "include_fixed_factors" => self.include_fixed_factors = parse(key, v)?,
            "test" => self.test = (!v.is_empty()).then(|| v.to_string()),
            "years" => {
                self.years = if v.is_empty() {
                    None
                } else {
                    let (a, b) = v
                        .split_once('-')
                        .ok_or_else(|| Error::Config(format!("years: expected START-END, got {v:?}")))?;
                    Some((parse(key, a.trim())?, parse(key, b.trim())?))
                }
            }
            "min_len" => self.min_len = parse(key, v)?,
            "basis_size" => self.basis_size = parse(key, v)?,
            "penalty" => self.penalty = parse(key, v)?,
            "holdout" => self.holdout = parse(key, v)?,
            "window" => self.window = parse(key, v)?,
            "lookback" => self.lookback = parse(key, v)?,
            "min_obs" => self.min_obs = parse(key, v)?,
            "vol_quantile" => self.vol_quantile = parse(key, v)?,
            "min_universe" => self.min_universe = parse(key, v)?,
            "max_cap_rank" => self.max_cap_rank = parse(key, v)?,
            "premium_threshold" => self.premium_threshold = (!v.is_empty()).then(|| parse(key, v)).transpose()?,
            "periods_per_year" => self.periods_per_year = parse(key, v)?,
            "out" => self.out = base.join(v),
            "seed" => self.seed = (!v.is_empty()).then(|| parse(key, v)).transpose()?,
            "threads" => self.threads = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Serializes every key except `threads`, which never affects results.
    pub fn to_kv(&self) -> String {
        let p = |v: &Option<PathBuf>| v.as_ref().map_or_else(String::new, |p| p.display().to_string());
        let o = |v: Option<String>| v.unwrap_or_default();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("securities", p(&self.securities));
        kv("basis", p(&self.basis));
        kv("rf", p(&self.rf));
        kv("categories", p(&self.categories));
        kv("classes", p(&self.classes));
        kv("eligibility", p(&self.eligibility));
        kv(
            "layout",
            match self.layout {
                Layout::Wide => "wide",
                Layout::Long => "long",
            }
            .into(),
        );
        kv("market", self.market.clone());
        kv("min_coverage", self.min_coverage.to_string());
        kv("category_threshold", self.category_threshold.to_string());
        kv("global_threshold", self.global_threshold.to_string());
        kv("support_cap", self.support_cap.to_string());
        kv("cv_folds", self.cv_folds.to_string());
        kv("sig_level", self.sig_level.to_string());
        kv("protected_assets", self.protected_assets.join(","));
        kv("fixed_factors", self.fixed_factors.join(","));
        kv("include_fixed_factors", self.include_fixed_factors.to_string());
        kv("test", o(self.test.clone()));
        kv("years", o(self.years.map(|(a, b)| format!("{a}-{b}"))));
        kv("min_len", self.min_len.to_string());
        kv("basis_size", self.basis_size.to_string());
        kv("penalty", self.penalty.to_string());
        kv("holdout", self.holdout.to_string());
        kv("window", self.window.to_string());
        kv("lookback", self.lookback.to_string());
        kv("min_obs", self.min_obs.to_string());
        kv("vol_quantile", self.vol_quantile.to_string());
        kv("min_universe", self.min_universe.to_string());
        kv("max_cap_rank", self.max_cap_rank.to_string());
        kv("premium_threshold", o(self.premium_threshold.map(|v| v.to_string())));
        kv("periods_per_year", self.periods_per_year.to_string());
        kv("out", self.out.display().to_string());
        kv("seed", o(self.seed.map(|v| v.to_string())));
        s
    }

    pub fn gibs_config(&self, seed: u64) -> GibsConfig {
        GibsConfig {
            category_threshold: self.category_threshold,
            global_threshold: self.global_threshold,
            support_cap: self.support_cap,
            cv_folds: self.cv_folds,
            sig_level: self.sig_level,
            seed,
            protected_assets: self.protected_assets.clone(),
            fixed_factors: self.fixed_factors.clone(),
            include_fixed_factors: self.include_fixed_factors,
            ..GibsConfig::default()
        }
    }

    pub fn input_paths(&self) -> Vec<(&'static str, &Path)> {
        [
            ("securities", &self.securities),
            ("basis", &self.basis),
            ("rf", &self.rf),
            ("categories", &self.categories),
            ("classes", &self.classes),
            ("eligibility", &self.eligibility),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.as_deref().map(|p| (k, p)))
        .collect()
    }
}
