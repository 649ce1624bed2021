use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use nalgebra::DMatrix;

use super::{ReturnsPanel, RiskFreeSeries};
use crate::error::{Error, Result};

/// CSV layout of a returns file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `date,<asset>,<asset>,...`; empty cell = missing.
    Wide,
    /// `date,asset,value`; absent or empty value = missing.
    Long,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wide" => Ok(Layout::Wide),
            "long" => Ok(Layout::Long),
            other => Err(Error::Config(format!("unknown layout {other:?}"))),
        }
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_cell(path: &Path, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::csv(path, format!("cannot parse {raw:?} as a number")))
}

/// Reads a returns panel. Periods are aligned on the union of all dates,
/// sorted by label; cells never supplied are masked.
pub fn load_panel(path: impl AsRef<Path>, layout: Layout) -> Result<ReturnsPanel> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.get(0) != Some("date") {
        return Err(Error::csv(path, "first column must be `date`"));
    }

    let mut assets: Vec<String> = Vec::new();
    let mut asset_pos: HashMap<String, usize> = HashMap::new();
    let mut cells: HashMap<(String, usize), Option<f64>> = HashMap::new();
    let mut dates: BTreeSet<String> = BTreeSet::new();

    match layout {
        Layout::Wide => {
            if headers.len() < 2 {
                return Err(Error::EmptyPanel);
            }
            for (k, h) in headers.iter().enumerate().skip(1) {
                if asset_pos.insert(h.to_string(), k - 1).is_some() {
                    return Err(Error::csv(path, format!("asset {h} appears twice in header")));
                }
                assets.push(h.to_string());
            }
            for record in reader.records() {
                let record = record.map_err(|e| Error::csv(path, e))?;
                let date = record[0].to_string();
                if !dates.insert(date.clone()) {
                    return Err(Error::DuplicateCell {
                        date,
                        asset: assets[0].clone(),
                    });
                }
                for (j, raw) in record.iter().skip(1).enumerate() {
                    cells.insert((date.clone(), j), parse_cell(path, raw)?);
                }
            }
        }
        Layout::Long => {
            if headers.len() != 3 || &headers[1] != "asset" || &headers[2] != "value" {
                return Err(Error::csv(path, "long layout header must be date,asset,value"));
            }
            for record in reader.records() {
                let record = record.map_err(|e| Error::csv(path, e))?;
                let date = record[0].to_string();
                let asset = record[1].to_string();
                let j = *asset_pos.entry(asset.clone()).or_insert_with(|| {
                    assets.push(asset.clone());
                    assets.len() - 1
                });
                let value = parse_cell(path, &record[2])?;
                if cells.insert((date.clone(), j), value).is_some() {
                    return Err(Error::DuplicateCell { date, asset });
                }
                dates.insert(date);
            }
        }
    }

    if dates.is_empty() || assets.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let timestamps: Vec<String> = dates.into_iter().collect();
    let mut values = DMatrix::from_element(timestamps.len(), assets.len(), f64::NAN);
    let mut mask = DMatrix::from_element(timestamps.len(), assets.len(), false);
    for (t, date) in timestamps.iter().enumerate() {
        for j in 0..assets.len() {
            if let Some(Some(v)) = cells.get(&(date.clone(), j)) {
                values[(t, j)] = *v;
                mask[(t, j)] = true;
            }
        }
    }
    ReturnsPanel::new(timestamps, assets, values, mask)
}

/// Writes a panel; values use the shortest round-tripping decimal form so a
/// write/read cycle is bit-exact.
pub fn write_panel(panel: &ReturnsPanel, path: impl AsRef<Path>, layout: Layout) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let fail = |e: csv::Error| Error::csv(path, e);
    match layout {
        Layout::Wide => {
            let mut header = vec!["date".to_string()];
            header.extend(panel.assets().iter().cloned());
            w.write_record(&header).map_err(fail)?;
            for (t, date) in panel.timestamps().iter().enumerate() {
                let mut row = vec![date.clone()];
                row.extend((0..panel.n_assets()).map(|j| match panel.get(t, j) {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                }));
                w.write_record(&row).map_err(fail)?;
            }
        }
        Layout::Long => {
            w.write_record(["date", "asset", "value"]).map_err(fail)?;
            for (t, date) in panel.timestamps().iter().enumerate() {
                for (j, asset) in panel.assets().iter().enumerate() {
                    if let Some(v) = panel.get(t, j) {
                        w.write_record([date.as_str(), asset.as_str(), &format!("{v}")])
                            .map_err(fail)?;
                    }
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `date,rf`.
pub fn load_risk_free(path: impl AsRef<Path>) -> Result<RiskFreeSeries> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "rf" {
        return Err(Error::csv(path, "risk-free header must be date,rf"));
    }
    let mut rows: BTreeMap<String, f64> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let value = parse_cell(path, &record[1])?
            .ok_or_else(|| Error::csv(path, format!("missing rate at {}", &record[0])))?;
        if rows.insert(record[0].to_string(), value).is_some() {
            return Err(Error::DuplicateCell {
                date: record[0].to_string(),
                asset: "rf".into(),
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let (timestamps, rate) = rows.into_iter().unzip();
    RiskFreeSeries::new(timestamps, rate)
}

pub fn write_risk_free(rf: &RiskFreeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["date", "rf"]).map_err(|e| Error::csv(path, e))?;
    for (d, r) in rf.timestamps().iter().zip(rf.rate()) {
        w.write_record([d.as_str(), &format!("{r}")])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn load_label_map(path: &Path, key: &str, value: &str) -> Result<BTreeMap<String, String>> {
    let mut reader = open(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != key || &headers[1] != value {
        return Err(Error::csv(path, format!("header must be {key},{value}")));
    }
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if out
            .insert(record[0].to_string(), record[1].to_string())
            .is_some()
        {
            return Err(Error::csv(path, format!("{} listed twice", &record[0])));
        }
    }
    Ok(out)
}

/// Reads `asset,category`.
pub fn load_categories(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    load_label_map(path.as_ref(), "asset", "category")
}

/// Reads `asset,class` (security classes used in selection summaries).
pub fn load_classes(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    load_label_map(path.as_ref(), "asset", "class")
}

/// Reads `asset,cap_rank`.
pub fn load_eligibility(path: impl AsRef<Path>) -> Result<BTreeMap<String, usize>> {
    let path = path.as_ref();
    load_label_map(path, "asset", "cap_rank")?
        .into_iter()
        .map(|(a, r)| {
            let rank = r
                .parse()
                .map_err(|_| Error::csv(path, format!("cap_rank {r:?} for {a} is not an integer")))?;
            Ok((a, rank))
        })
        .collect()
}

/// Writes a two-column label map with the given header.
pub fn write_categories(
    map: &BTreeMap<String, String>,
    path: impl AsRef<Path>,
    header: [&str; 2],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for (k, v) in map {
        w.write_record([k, v]).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        let mut f = File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn wide_fully_observed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "w.csv", "date,A,B\nd1,0.1,0.2\nd2,0.3,0.4\nd3,0.5,0.6\n");
        let panel = load_panel(&p, Layout::Wide).unwrap();
        assert_eq!((panel.n_periods(), panel.n_assets()), (3, 2));
        assert!(panel.is_fully_observed());
        assert_eq!(panel.get(2, 1), Some(0.6));
    }

    #[test]
    fn long_with_gap() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "l.csv",
            "date,asset,value\nd1,A,0.1\nd1,B,0.2\nd2,B,0.3\nd3,A,0.4\nd3,B,0.5\n",
        );
        let panel = load_panel(&p, Layout::Long).unwrap();
        assert_eq!(panel.assets(), ["A", "B"]);
        assert_eq!(panel.get(1, 0), None);
        assert_eq!(panel.get(1, 1), Some(0.3));
    }

    #[test]
    fn long_duplicate_cell() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "l.csv", "date,asset,value\nd1,A,0.1\nd1,A,0.2\n");
        assert!(matches!(
            load_panel(&p, Layout::Long),
            Err(Error::DuplicateCell { .. })
        ));
    }

    #[test]
    fn malformed_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(&dir, "bad.csv", "date,A,B\nd1,0.1\n");
        assert!(matches!(
            load_panel(&bad, Layout::Wide),
            Err(Error::MalformedCsv { .. })
        ));
        let header = write(&dir, "h.csv", "when,A\nd1,0.1\n");
        assert!(matches!(
            load_panel(&header, Layout::Wide),
            Err(Error::MalformedCsv { .. })
        ));
        let empty = write(&dir, "e.csv", "date,A\n");
        assert!(matches!(load_panel(&empty, Layout::Wide), Err(Error::EmptyPanel)));
        assert!(matches!(
            load_panel(dir.path().join("nope.csv"), Layout::Wide),
            Err(Error::MissingInput(_))
        ));
    }

    #[test]
    fn risk_free_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let rf = write(&dir, "rf.csv", "date,rf\nd2,0.002\nd1,0.001\n");
        let rf = load_risk_free(&rf).unwrap();
        assert_eq!(rf.timestamps(), ["d1", "d2"]);
        assert_eq!(rf.rate(), [0.001, 0.002]);
        let cats = write(&dir, "c.csv", "asset,category\nA,bond\nB,equity\n");
        let cats = load_categories(&cats).unwrap();
        assert_eq!(cats["B"], "equity");
    }
}
