//! Long-format plot tables built from a finished output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use super::{Failure, RunConfig};
use crate::error::{Error, Result};
use crate::gibs::read_selection_csv;
use crate::panel::{load_categories, load_classes};
use crate::vol::cumulative_capital;

pub const P_BINS: usize = 20;

pub fn cmd_report(cfg: &RunConfig) -> std::result::Result<(), Failure> {
    let selection = cfg.out.join("selection.csv");
    if !selection.exists() {
        return Err(Failure {
            code: 3,
            message: format!("{} not found; run `fit` first", selection.display()),
        });
    }
    heatmap(cfg, &selection)?;
    p_histogram(&cfg.out)?;
    capital(&cfg.out)?;
    Ok(())
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    Ok(w)
}

/// `category,class,count,percent`; percent is the column share times 100.
fn heatmap(cfg: &RunConfig, selection: &Path) -> Result<()> {
    let rows = read_selection_csv(selection)?;
    let categories = match &cfg.categories {
        Some(p) => load_categories(p)?,
        None => return Err(Error::Config("`categories` is not set".into())),
    };
    let classes = cfg.classes.as_ref().map(load_classes).transpose()?;
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    let cats: BTreeSet<&String> = categories.values().collect();
    for (security, _, significant) in &rows {
        let class = match &classes {
            Some(c) => c
                .get(security)
                .ok_or_else(|| Error::UnclassifiedEntity(security.clone()))?
                .clone(),
            None => "all".to_string(),
        };
        totals.entry(class.clone()).or_default();
        for asset in significant {
            let cat = categories
                .get(asset)
                .ok_or_else(|| Error::UnclassifiedEntity(asset.clone()))?;
            *counts.entry((cat.clone(), class.clone())).or_default() += 1;
            *totals.get_mut(&class).expect("inserted") += 1;
        }
    }
    let path = cfg.out.join("report_heatmap.csv");
    let mut w = writer(&path, &["category", "class", "count", "percent"])?;
    for cat in &cats {
        for (class, &total) in &totals {
            let n = counts.get(&((*cat).clone(), class.clone())).copied().unwrap_or(0);
            let pct = if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
            w.write_record([(*cat).clone(), class.clone(), n.to_string(), format!("{pct:.2}")])
                .map_err(|e| Error::csv(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

fn test_files(out: &Path) -> Result<Vec<(String, std::path::PathBuf)>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(out).map_err(|e| Error::io(out, e))? {
        let path = entry.map_err(|e| Error::io(out, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(test) = name.strip_prefix("test_").and_then(|n| n.strip_suffix(".csv")) {
            found.push((test.to_string(), path.clone()));
        }
    }
    found.sort();
    Ok(found)
}

/// Histogram of raw p-values per stored test, `P_BINS` equal bins.
fn p_histogram(out: &Path) -> Result<()> {
    let files = test_files(out)?;
    if files.is_empty() {
        return Ok(());
    }
    let path = out.join("report_pvalues.csv");
    let mut w = writer(&path, &["test", "bin_lo", "bin_hi", "count"])?;
    for (test, file) in files {
        let mut rdr = csv::Reader::from_path(&file).map_err(|e| Error::csv(&file, e))?;
        let mut bins = [0usize; P_BINS];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::csv(&file, e))?;
            let Some(p) = rec.get(1).filter(|s| !s.is_empty()) else {
                continue;
            };
            let p: f64 = p.parse().map_err(|_| Error::csv(&file, format!("bad p-value {p:?}")))?;
            bins[((p * P_BINS as f64) as usize).min(P_BINS - 1)] += 1;
        }
        for (b, n) in bins.iter().enumerate() {
            w.write_record([
                test.clone(),
                format!("{:.2}", b as f64 / P_BINS as f64),
                format!("{:.2}", (b + 1) as f64 / P_BINS as f64),
                n.to_string(),
            ])
            .map_err(|e| Error::csv(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Cumulative capital of the volatility legs, one row per week.
fn capital(out: &Path) -> Result<()> {
    let file = out.join("vol_returns.csv");
    if !file.exists() {
        return Ok(());
    }
    let mut rdr = csv::Reader::from_path(&file).map_err(|e| Error::csv(&file, e))?;
    let mut weeks = Vec::new();
    let (mut low, mut high) = (Vec::new(), Vec::new());
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::csv(&file, format!("bad return {s:?}"))) };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(&file, e))?;
        if rec.len() < 3 {
            return Err(Error::csv(&file, "expected week,low,high"));
        }
        weeks.push(rec[0].to_string());
        // empty legs hold cash
        let cash = |r: f64| if r.is_finite() { r } else { 0.0 };
        low.push(cash(num(&rec[1])?));
        high.push(cash(num(&rec[2])?));
    }
    let (cl, ch) = (cumulative_capital(&low)?, cumulative_capital(&high)?);
    let path = out.join("report_capital.csv");
    let mut w = writer(&path, &["week", "low", "high"])?;
    for (k, week) in weeks.iter().enumerate() {
        w.write_record([week.clone(), format!("{:.6}", cl.values[k + 1]), format!("{:.6}", ch.values[k + 1])])
            .map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
