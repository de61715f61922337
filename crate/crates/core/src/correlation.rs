//! Kendall's τ between a metric series and a performance series.
//!
//! The statistic is τ-a over all pairs: tied pairs contribute zero and the
//! denominator is always `n(n−1)/2`. Significance uses the normal
//! approximation of τ under independence.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{DseError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauReport {
    pub tau: f64,
    pub n: usize,
    pub p_value: f64,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in either series.
    pub tied: u64,
}

pub fn kendall_tau(metric: &[f64], perf: &[f64]) -> Result<TauReport> {
    if metric.len() != perf.len() {
        return Err(DseError::Length(format!(
            "metric has {} values, performance has {}",
            metric.len(),
            perf.len()
        )));
    }
    let n = metric.len();
    if n < 2 {
        return Err(DseError::Length(format!("need at least 2 paired values, got {n}")));
    }
    if metric.iter().chain(perf).any(|v| !v.is_finite()) {
        return Err(DseError::Data("non-finite value in tau input".into()));
    }

    let (mut concordant, mut discordant, mut tied) = (0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let a = metric[i] - metric[j];
            let b = perf[i] - perf[j];
            match (a.partial_cmp(&0.0).unwrap() as i8) * (b.partial_cmp(&0.0).unwrap() as i8) {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => tied += 1,
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let tau = (concordant as f64 - discordant as f64) / pairs;
    Ok(TauReport {
        tau,
        n,
        p_value: tau_pvalue(tau, n),
        concordant,
        discordant,
        tied,
    })
}

/// Two-sided p-value with `z = 3τ√(n(n−1)) / √(2(2n+5))`.
pub fn tau_pvalue(tau: f64, n: usize) -> f64 {
    let n = n as f64;
    let z = 3.0 * tau * (n * (n - 1.0)).sqrt() / (2.0 * (2.0 * n + 5.0)).sqrt();
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Reads a `source_id,value` CSV with a header row.
pub fn read_performance_csv<R: Read>(reader: R) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DseError::Format(format!("performance csv: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DseError::Format(format!("performance csv lacks a '{name}' column")))
    };
    let (id_col, value_col) = (col("source_id")?, col("value")?);
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| DseError::Format(format!("performance csv: {e}")))?;
        let id = row.get(id_col).unwrap_or_default().to_string();
        let raw = row.get(value_col).unwrap_or_default();
        let value: f64 = raw
            .parse()
            .map_err(|_| DseError::Format(format!("performance value {raw:?} for {id} is not a number")))?;
        if out.insert(id.clone(), value).is_some() {
            return Err(DseError::Format(format!("duplicate source_id {id} in performance csv")));
        }
    }
    Ok(out)
}

/// Performance values in the order of `ids`. Every id must appear on both sides.
pub fn join_performance<'a>(ids: impl IntoIterator<Item = &'a str>, perf: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let ids: Vec<&str> = ids.into_iter().collect();
    let known: HashSet<&str> = ids.iter().copied().collect();
    if let Some(extra) = perf.keys().find(|k| !known.contains(k.as_str())) {
        return Err(DseError::Series(format!("performance csv has unknown source_id {extra}")));
    }
    ids.iter()
        .map(|id| {
            perf.get(*id)
                .copied()
                .ok_or_else(|| DseError::Series(format!("no performance value for source_id {id}")))
        })
        .collect()
}
