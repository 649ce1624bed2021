//! Start-year by end-year grids of window results.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::panel::label_year;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodGrid {
    pub first_year: i32,
    pub last_year: i32,
    /// Minimum window length in calendar years, both ends inclusive.
    pub min_len: usize,
    /// `None` marks a window whose computation failed.
    pub cells: BTreeMap<(i32, i32), Option<f64>>,
}

impl PeriodGrid {
    /// All `(start, end)` windows with `end - start + 1 >= min_len`.
    pub fn windows(first_year: i32, last_year: i32, min_len: usize) -> Vec<(i32, i32)> {
        let min_len = min_len.max(1) as i32;
        (first_year..=last_year)
            .flat_map(|s| (s + min_len - 1..=last_year).map(move |e| (s, e)))
            .collect()
    }

    pub fn get(&self, start: i32, end: i32) -> Option<f64> {
        self.cells.get(&(start, end)).copied().flatten()
    }

    /// Windows with a value.
    pub fn populated(&self) -> usize {
        self.cells.values().filter(|v| v.is_some()).count()
    }

    /// Windows of length `k + min_len` years, by start year.
    pub fn skew_diagonal(&self, k: usize) -> Vec<((i32, i32), Option<f64>)> {
        let span = (k + self.min_len.max(1) - 1) as i32;
        self.cells
            .iter()
            .filter(|((s, e), _)| e - s == span)
            .map(|(w, v)| (*w, *v))
            .collect()
    }

    /// Distinct `start + end` sums in increasing order; each identifies a
    /// mid-year.
    pub fn anti_diagonal_keys(&self) -> Vec<i32> {
        let mut sums: Vec<i32> = self.cells.keys().map(|(s, e)| s + e).collect();
        sums.sort_unstable();
        sums.dedup();
        sums
    }

    /// Windows sharing the `k`-th smallest mid-year, by start year.
    pub fn skew_anti_diagonal(&self, k: usize) -> Vec<((i32, i32), Option<f64>)> {
        let Some(&sum) = self.anti_diagonal_keys().get(k) else {
            return Vec::new();
        };
        self.cells
            .iter()
            .filter(|((s, e), _)| s + e == sum)
            .map(|(w, v)| (*w, *v))
            .collect()
    }
}

/// Evaluates `cell` on every window in parallel. Failed windows are logged
/// and stored as `None`.
pub fn period_grid_run<F>(first_year: i32, last_year: i32, min_len: usize, cell: F) -> PeriodGrid
where
    F: Fn(i32, i32) -> Result<f64> + Sync,
{
    let cells = PeriodGrid::windows(first_year, last_year, min_len)
        .into_par_iter()
        .map(|(s, e)| {
            let v = cell(s, e)
                .map_err(|err| log::warn!("window {s}-{e} failed: {err}"))
                .ok();
            ((s, e), v)
        })
        .collect();
    PeriodGrid {
        first_year,
        last_year,
        min_len,
        cells,
    }
}

/// Contiguous rows whose label year lies in `start..=end`.
pub fn year_rows(timestamps: &[String], start: i32, end: i32) -> Result<Range<usize>> {
    let inside = |l: &String| label_year(l).is_some_and(|y| (start..=end).contains(&y));
    let first = timestamps
        .iter()
        .position(inside)
        .ok_or_else(|| Error::Config(format!("no periods in {start}-{end}")))?;
    let len = timestamps[first..].iter().take_while(|l| inside(l)).count();
    Ok(first..first + len)
}

/// Rows are start years, columns end years, values times 100 to two
/// decimals. Failed windows print `NA`; non-windows are empty.
pub fn write_grid_csv(grid: &PeriodGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let years: Vec<i32> = (grid.first_year..=grid.last_year).collect();
    let mut header = vec!["start".to_string()];
    header.extend(years.iter().map(|y| y.to_string()));
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for &s in &years {
        let mut row = vec![s.to_string()];
        row.extend(years.iter().map(|&e| match grid.cells.get(&(s, e)) {
            Some(Some(v)) => format!("{:.2}", v * 100.0),
            Some(None) => "NA".to_string(),
            None => String::new(),
        }));
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
