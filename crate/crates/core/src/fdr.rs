//! Benjamini–Hochberg and Benjamini–Hochberg–Yekutieli q-values.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdrMethod {
    #[default]
    Bh,
    Bhy,
}

impl FromStr for FdrMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bh" => Ok(Self::Bh),
            "bhy" | "by" => Ok(Self::Bhy),
            other => Err(Error::Config(format!("unknown FDR method `{other}`"))),
        }
    }
}

impl fmt::Display for FdrMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bh => "BH",
            Self::Bhy => "BHY",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QValues {
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub method: FdrMethod,
}

impl QValues {
    /// Indices with `q <= alpha`.
    pub fn rejected(&self, alpha: f64) -> Vec<usize> {
        (0..self.q_values.len()).filter(|&i| self.q_values[i] <= alpha).collect()
    }
}

/// Step-up adjusted p-values.
pub fn adjust(p: &[f64], method: FdrMethod) -> Result<QValues> {
    if let Some(&bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidPValue(bad));
    }
    let m = p.len();
    let c = match method {
        FdrMethod::Bh => 1.0,
        FdrMethod::Bhy => (1..=m).map(|k| 1.0 / k as f64).sum(),
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut q = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        let v = c * m as f64 * p[i] / (rank + 1) as f64;
        running = running.min(v);
        q[i] = running.max(p[i]);
    }
    Ok(QValues {
        p_values: p.to_vec(),
        q_values: q,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let q = adjust(&[0.01, 0.02, 0.03, 0.04], FdrMethod::Bh).unwrap();
        for v in &q.q_values {
            assert!((v - 0.04).abs() < 1e-15);
        }
        let q = adjust(&[0.01, 0.02, 0.03, 0.04], FdrMethod::Bhy).unwrap();
        for v in &q.q_values {
            assert!((v - 0.04 * 25.0 / 12.0).abs() < 1e-15);
        }
        assert_eq!(adjust(&[0.03], FdrMethod::Bhy).unwrap().q_values, vec![0.03]);
        assert_eq!(adjust(&[1.0; 5], FdrMethod::Bh).unwrap().q_values, vec![1.0; 5]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            adjust(&[0.5, 1.2], FdrMethod::Bh),
            Err(Error::InvalidPValue(v)) if v == 1.2
        ));
        assert!(adjust(&[f64::NAN], FdrMethod::Bh).is_err());
    }

    #[test]
    fn empty_input() {
        assert!(adjust(&[], FdrMethod::Bh).unwrap().q_values.is_empty());
    }
}
