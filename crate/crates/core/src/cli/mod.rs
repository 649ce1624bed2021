//! Batch front end behind the `gibs` binary.

mod config;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use sha2::{Digest, Sha256};

pub use config::RunConfig;

use crate::error::{Error, Result};
use crate::gibs::{
    compare_methods, run_gibs, summarize_selection, write_comparison_csv, write_selection_csv, write_summary_csv,
    BasisDesign, GibsModel, Method,
};
use crate::model_tests::batch::{run_window_test, window_test_grid, WindowTest};
use crate::model_tests::grid::write_grid_csv;
use crate::model_tests::{reference_threshold, risk_premium, write_report_csv, TestReport};
use crate::panel::{load_categories, load_classes, load_eligibility, load_panel, load_risk_free, write_categories, write_panel, write_risk_free, Layout};
use crate::panel::{synthesize, SyntheticSpec};
use crate::panel::{excess_returns, filter_coverage, BasisUniverse, ReturnsPanel, RiskFreeSeries};
use crate::vol::{
    anomaly_series, anomaly_test, form_vol_portfolios, loading_difference_test, rolling_study, significance_heatmap,
    write_diagnostics_csv, write_heatmap_csv, write_membership_csv, write_portfolio_returns_csv, AnomalyMode,
    RollingModel, VolConfig, HIGH, LOW,
};

#[derive(Debug, Parser)]
#[command(name = "gibs", version, about = "Sparse multi-factor asset pricing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key=value run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Select and refit factor models for every security.
    Fit,
    /// Run a named hypothesis test.
    Test {
        /// intercept, invariance, residual-expansion, varying-coef, anomaly
        /// or loading-diff; defaults to the config's `test`.
        name: Option<String>,
    },
    /// Turn stored results into long-format plot tables.
    Report,
    /// Write a synthetic panel; `--config` is a synthetic spec file.
    Synth,
    /// Compare selection methods on a holdout.
    Compare,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Test { .. } => "test",
            Command::Report => "report",
            Command::Synth => "synth",
            Command::Compare => "compare",
        }
    }
}

pub const TEST_NAMES: [&str; 6] = [
    "intercept",
    "invariance",
    "residual-expansion",
    "varying-coef",
    "anomaly",
    "loading-diff",
];

/// A failed run with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// 2 for configuration problems, 3 for data problems, 4 for numerical
/// failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::MissingInput(_) | Error::InvalidSpec(_) => 2,
        Error::MalformedCsv { .. }
        | Error::DuplicateCell { .. }
        | Error::EmptyPanel
        | Error::LengthMismatch { .. }
        | Error::NonPositivePrice { .. }
        | Error::InteriorGap { .. }
        | Error::MissingMarketIndex(_)
        | Error::UnclassifiedEntity(_)
        | Error::UniverseTooSmall(_)
        | Error::InsufficientOverlap { .. }
        | Error::Io { .. } => 3,
        _ => 4,
    }
}

/// Parses the configuration, applies the global flags and runs the
/// subcommand on a pool of the requested size.
pub fn run(cli: Cli) -> std::result::Result<(), Failure> {
    if let Command::Synth = cli.command {
        return cmd_synth(&cli).map_err(Failure::from);
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Failure {
            code: 2,
            message: format!("cannot start {} threads: {e}", cfg.threads),
        })?;
    pool.install(|| {
        fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
        match &cli.command {
            Command::Fit => cmd_fit(&cfg)?,
            Command::Test { name } => {
                let name = name.clone().or_else(|| cfg.test.clone()).ok_or_else(|| {
                    Error::Config(format!("no test named; expected one of {}", TEST_NAMES.join(", ")))
                })?;
                cmd_test(&cfg, &name)?
            }
            Command::Report => report::cmd_report(&cfg)?,
            Command::Compare => cmd_compare(&cfg)?,
            Command::Synth => unreachable!("handled above"),
        }
        write_manifest(&cfg, cli.command.name()).map_err(Failure::from)
    })
}

/// Inputs shared by the estimating subcommands.
pub(crate) struct Inputs {
    pub securities: ReturnsPanel,
    pub universe: BasisUniverse,
    pub rf: RiskFreeSeries,
    pub classes: Option<BTreeMap<String, String>>,
}

fn require<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("`{key}` is not set")))
}

pub(crate) fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let paths = [
        ("securities", &cfg.securities),
        ("basis", &cfg.basis),
        ("rf", &cfg.rf),
        ("categories", &cfg.categories),
    ];
    for (key, p) in paths {
        let p = require(p, key)?;
        if !p.exists() {
            return Err(Error::MissingInput(p.to_path_buf()));
        }
    }
    for p in [&cfg.classes, &cfg.eligibility].into_iter().flatten() {
        if !p.exists() {
            return Err(Error::MissingInput(p.clone()));
        }
    }
    let securities = filter_coverage(&load_panel(require(&cfg.securities, "securities")?, cfg.layout)?, cfg.min_coverage)?;
    let basis = filter_coverage(&load_panel(require(&cfg.basis, "basis")?, cfg.layout)?, cfg.min_coverage)?;
    let categories = load_categories(require(&cfg.categories, "categories")?)?;
    let universe = BasisUniverse::new(basis, categories, cfg.market.clone())?;
    let rf = load_risk_free(require(&cfg.rf, "rf")?)?;
    let classes = cfg.classes.as_ref().map(load_classes).transpose()?;
    Ok(Inputs {
        securities,
        universe,
        rf,
        classes,
    })
}

fn seed_of(cfg: &RunConfig) -> Result<u64> {
    cfg.seed
        .ok_or_else(|| Error::Config("a seed is required (`seed` key or --seed)".into()))
}

fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let seed = seed_of(cfg)?;
    let inputs = load_inputs(cfg)?;
    let gcfg = cfg.gibs_config(seed);
    let design = BasisDesign::from_excess(&inputs.universe, &inputs.rf)?;
    let y = excess_returns(&inputs.securities, &inputs.rf)?;
    let run = run_gibs(&y, &design, &gcfg, None)?;
    write_selection_csv(&run.results, cfg.out.join("selection.csv"))?;

    let classes = inputs.classes.clone().unwrap_or_else(|| {
        y.assets().iter().map(|a| (a.clone(), "all".to_string())).collect()
    });
    let summary = summarize_selection(&run.results, &classes, inputs.universe.categories())?;
    write_summary_csv(&summary, cfg.out.join("summary_counts.csv"), cfg.out.join("summary_proportions.csv"))?;

    let rows = run
        .results
        .iter()
        .map(|r| (r.security.clone(), r.alpha().map(|a| a.1)))
        .collect();
    write_report_csv(&TestReport::new("alpha", rows)?, cfg.out.join("alpha_test.csv"))?;

    let union = run.union_selected();
    if !union.is_empty() {
        let excess_basis = excess_returns(inputs.universe.panel(), &inputs.rf)?;
        let threshold = match cfg.premium_threshold {
            Some(t) => t,
            None if !gcfg.fixed_factors.is_empty() => {
                let reference = risk_premium(&excess_basis, &gcfg.fixed_factors, cfg.periods_per_year, 0.0)?;
                reference_threshold(&reference).unwrap_or(0.0)
            }
            None => f64::INFINITY,
        };
        let premia = risk_premium(&excess_basis, &union, cfg.periods_per_year, threshold)?;
        let path = cfg.out.join("risk_premia.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["asset", "premium", "is_factor"]).map_err(|e| Error::csv(&path, e))?;
        for p in &premia {
            w.write_record([p.asset.clone(), format!("{}", p.premium), p.is_factor.to_string()])
                .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    log::info!(
        "fit {} securities, {} failed, avg |S| {:.2}",
        run.results.len(),
        run.failures.len(),
        run.avg_selected()
    );
    Ok(())
}

fn cmd_test(cfg: &RunConfig, name: &str) -> Result<()> {
    if !TEST_NAMES.contains(&name) {
        return Err(Error::Config(format!(
            "unknown test `{name}`; expected one of {}",
            TEST_NAMES.join(", ")
        )));
    }
    let seed = seed_of(cfg)?;
    let inputs = load_inputs(cfg)?;
    let gcfg = cfg.gibs_config(seed);
    match name {
        "anomaly" | "loading-diff" => vol_test(cfg, &inputs, &gcfg, name),
        _ => {
            let test: WindowTest = match name {
                "varying-coef" => WindowTest::VaryingCoef {
                    basis_size: cfg.basis_size,
                    penalty: cfg.penalty,
                },
                other => other.parse()?,
            };
            let report = run_window_test(test, &inputs.securities, &inputs.universe, &inputs.rf, &gcfg)?;
            write_report_csv(&report, cfg.out.join(format!("test_{name}.csv")))?;
            if let Some(years) = cfg.years {
                let grid = window_test_grid(test, &inputs.securities, &inputs.universe, &inputs.rf, &gcfg, years, cfg.min_len);
                write_grid_csv(&grid, cfg.out.join(format!("grid_{name}.csv")))?;
            }
            Ok(())
        }
    }
}

fn eligible_set(cfg: &RunConfig) -> Result<Option<BTreeSet<String>>> {
    let Some(path) = &cfg.eligibility else {
        return Ok(None);
    };
    let out = load_eligibility(path)?
        .into_iter()
        .filter(|(_, rank)| *rank <= cfg.max_cap_rank)
        .map(|(a, _)| a)
        .collect();
    Ok(Some(out))
}

fn vol_test(cfg: &RunConfig, inputs: &Inputs, gcfg: &crate::gibs::GibsConfig, name: &str) -> Result<()> {
    let vcfg = VolConfig {
        lookback: cfg.lookback,
        min_obs: cfg.min_obs,
        quantile: cfg.vol_quantile,
        min_universe: cfg.min_universe,
    };
    let eligible = eligible_set(cfg)?;
    let ports = form_vol_portfolios(&inputs.securities, &inputs.rf, &vcfg, eligible.as_ref())?;
    write_membership_csv(&ports, cfg.out.join("vol_membership.csv"))?;
    write_portfolio_returns_csv(&ports, cfg.out.join("vol_returns.csv"))?;
    let y = ports.returns_panel(inputs.securities.timestamps())?;
    let excess = excess_returns(&y, &inputs.rf)?;
    let first = ports.rows[0];
    let t_len = y.n_periods();

    if name == "loading-diff" {
        let rows: Vec<usize> = (first..t_len).collect();
        let uni = inputs.universe.slice_rows(first..t_len)?;
        let design = BasisDesign::from_excess(&uni, &inputs.rf.slice(first..t_len)?)?;
        let model = GibsModel::new(&design, gcfg)?;
        let col = |j: usize| DVector::from_iterator(rows.len(), rows.iter().map(|&t| excess.values()[(t, j)]));
        let (yl, yh) = (col(0), col(1));
        let sl = model.select(LOW, &yl)?;
        let sh = model.select(HIGH, &yh)?;
        let f = loading_difference_test(&yl, &yh, &design, &sl.selected, &sh.selected)?;
        let path = cfg.out.join("loading_diff.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["s_low", "s_high", "f_stat", "df1", "df2", "p_value"])
            .map_err(|e| Error::csv(&path, e))?;
        w.write_record([
            sl.selected.join(";"),
            sh.selected.join(";"),
            format!("{}", f.f_stat),
            f.df1.to_string(),
            f.df2.to_string(),
            format!("{}", f.p_value),
        ])
        .map_err(|e| Error::csv(&path, e))?;
        return w.flush().map_err(|e| Error::io(&path, e));
    }

    let start = first + cfg.window - 1;
    if start >= t_len {
        return Err(Error::Config(format!(
            "window {} leaves no horizon after the {}-week lookback",
            cfg.window, cfg.lookback
        )));
    }
    let models: Vec<RollingModel> = if gcfg.fixed_factors.is_empty() {
        vec![RollingModel::Amf]
    } else {
        vec![RollingModel::Fixed, RollingModel::Amf]
    };
    let study = rolling_study(&y, &inputs.universe, &inputs.rf, gcfg, cfg.window, start..t_len, &models)?;
    write_diagnostics_csv(&study, cfg.out.join("vol_diagnostics.csv"))?;
    for p in [LOW, HIGH] {
        let h = significance_heatmap(&study, p, RollingModel::Amf, inputs.universe.categories())?;
        write_heatmap_csv(&h, cfg.out.join(format!("vol_heatmap_{p}.csv")))?;
    }
    let path = cfg.out.join("anomaly.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    w.write_record(["mode", "t_stat", "df", "p_value"]).map_err(|e| Error::csv(&path, e))?;
    for mode in [AnomalyMode::Excess, AnomalyMode::ResidualFixed, AnomalyMode::ResidualAmf] {
        if mode == AnomalyMode::ResidualFixed && !models.contains(&RollingModel::Fixed) {
            continue;
        }
        let (a, b) = anomaly_series(&study, &excess, mode)?;
        let r = anomaly_test(&a, &b)?;
        w.write_record([mode.to_string(), format!("{}", r.t_stat), format!("{}", r.df), format!("{}", r.p_value)])
            .map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

fn cmd_compare(cfg: &RunConfig) -> Result<()> {
    let seed = seed_of(cfg)?;
    let inputs = load_inputs(cfg)?;
    let gcfg = cfg.gibs_config(seed);
    let methods: Vec<Method> = Method::all()
        .into_iter()
        .filter(|m| !gcfg.fixed_factors.is_empty() || !matches!(m, Method::FixedOnly | Method::GibsFixed))
        .collect();
    let rows = compare_methods(&inputs.securities, &inputs.universe, &inputs.rf, &gcfg, &methods, cfg.holdout)?;
    write_comparison_csv(&rows, cfg.out.join("comparison.csv"))
}

fn cmd_synth(cli: &Cli) -> Result<()> {
    let mut spec = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingInput(p.clone()),
                _ => Error::io(p, e),
            })?;
            SyntheticSpec::from_kv(&text)?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let data = synthesize(&spec)?;
    write_panel(&data.securities, out.join("securities.csv"), Layout::Wide)?;
    write_panel(data.universe.panel(), out.join("basis.csv"), Layout::Wide)?;
    write_risk_free(&data.risk_free, out.join("rf.csv"))?;
    write_categories(data.universe.categories(), out.join("categories.csv"), ["asset", "category"])?;

    let path = out.join("truth.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    w.write_record(["security", "basis", "beta"]).map_err(|e| Error::csv(&path, e))?;
    for (i, sec) in data.securities.assets().iter().enumerate() {
        for &j in &data.truth.supports[i] {
            w.write_record([
                sec.clone(),
                data.universe.panel().assets()[j].clone(),
                format!("{}", data.truth.betas[(i, j)]),
            ])
            .map_err(|e| Error::csv(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    fs::write(out.join("spec.conf"), spec.to_kv()).map_err(|e| Error::io(out.join("spec.conf"), e))?;
    let run = RunConfig {
        securities: Some("securities.csv".into()),
        basis: Some("basis.csv".into()),
        rf: Some("rf.csv".into()),
        categories: Some("categories.csv".into()),
        seed: Some(spec.seed),
        ..RunConfig::default()
    };
    fs::write(out.join("run.conf"), run.to_kv()).map_err(|e| Error::io(out.join("run.conf"), e))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes `manifest-<command>.conf`: comment lines with the version and
/// input digests, then the resolved configuration, which can be passed
/// back through `--config`.
fn write_manifest(cfg: &RunConfig, command: &str) -> Result<()> {
    let mut text = format!("# gibs {}\n# command: {command}\n", env!("CARGO_PKG_VERSION"));
    for (key, p) in cfg.input_paths() {
        if p.exists() {
            text.push_str(&format!("# sha256 {key}: {}\n", sha256_file(p)?));
        }
    }
    text.push_str(&cfg.to_kv());
    let path = cfg.out.join(format!("manifest-{command}.conf"));
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(exit_code(&Error::MissingInput("x".into())), 2);
        assert_eq!(exit_code(&Error::EmptyPanel), 3);
        assert_eq!(exit_code(&Error::RankDeficient { rank: 1, cols: 2 }), 4);
    }
}
