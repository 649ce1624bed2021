//! Count and proportion matrices of significant basis assets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::DMatrix;

use super::SelectionResult;
use crate::error::{Error, Result};

/// Rows are basis categories, columns security classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSummary {
    pub categories: Vec<String>,
    pub classes: Vec<String>,
    /// `a[b, d]`: significant selections of category `b` by securities of
    /// class `d`.
    pub counts: DMatrix<usize>,
    /// Column-normalized counts; all-zero columns stay zero.
    pub proportions: DMatrix<f64>,
    pub avg_selected: f64,
    pub avg_significant: f64,
}

pub fn summarize_selection(
    results: &[SelectionResult],
    security_classes: &BTreeMap<String, String>,
    basis_categories: &BTreeMap<String, String>,
) -> Result<SelectionSummary> {
    let categories: Vec<String> = basis_categories
        .values()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut classes = BTreeSet::new();
    for r in results {
        let class = security_classes
            .get(&r.security)
            .ok_or_else(|| Error::UnclassifiedEntity(r.security.clone()))?;
        classes.insert(class.clone());
    }
    let classes: Vec<String> = classes.into_iter().collect();
    let mut counts = DMatrix::zeros(categories.len(), classes.len());
    for r in results {
        let d = classes.binary_search(&security_classes[&r.security]).expect("class collected");
        for asset in &r.significant {
            let cat = basis_categories
                .get(asset)
                .ok_or_else(|| Error::UnclassifiedEntity(asset.clone()))?;
            let b = categories.binary_search(cat).expect("category collected");
            counts[(b, d)] += 1;
        }
    }
    let mut proportions = DMatrix::zeros(categories.len(), classes.len());
    for d in 0..classes.len() {
        let total: usize = counts.column(d).iter().sum();
        if total > 0 {
            for b in 0..categories.len() {
                proportions[(b, d)] = counts[(b, d)] as f64 / total as f64;
            }
        }
    }
    Ok(SelectionSummary {
        categories,
        classes,
        counts,
        proportions,
        avg_selected: super::avg(results.iter().map(|r| r.selected.len() as f64)),
        avg_significant: super::avg(results.iter().map(|r| r.significant.len() as f64)),
    })
}

/// Writes the count matrix and the proportion matrix, each with a
/// `category,<classes...>` header.
pub fn write_summary_csv(
    summary: &SelectionSummary,
    counts_path: impl AsRef<Path>,
    proportions_path: impl AsRef<Path>,
) -> Result<()> {
    let write = |path: &Path, cell: &dyn Fn(usize, usize) -> String| -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header = vec!["category".to_string()];
        header.extend(summary.classes.iter().cloned());
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for (b, cat) in summary.categories.iter().enumerate() {
            let mut row = vec![cat.clone()];
            row.extend((0..summary.classes.len()).map(|d| cell(b, d)));
            w.write_record(&row).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    };
    write(counts_path.as_ref(), &|b, d| summary.counts[(b, d)].to_string())?;
    write(proportions_path.as_ref(), &|b, d| format!("{}", summary.proportions[(b, d)]))
}
