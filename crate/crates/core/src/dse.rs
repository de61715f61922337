//! Per-checkpoint DSE components and their combination across a checkpoint
//! series: `score = (M_inter − M_intra) + λ · M_dim`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dimensionality::m_dim;
use crate::error::{DseError, Result};
use crate::separability::{class_separability, SeparabilityConfig};
use crate::tensor_io::{EmbeddingBatch, DEFAULT_B_PRIME};

/// Below this spread of `M_dim` across checkpoints, λ is set to 0.
pub const MIN_DIM_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    #[serde(default)]
    pub separability: SeparabilityConfig,
    /// Cap on the rows sampled for the effective rank; the sample size is
    /// `min(images, b_prime)`.
    #[serde(default = "default_b_prime")]
    pub b_prime: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            separability: SeparabilityConfig::default(),
            b_prime: DEFAULT_B_PRIME,
        }
    }
}

fn default_b_prime() -> usize {
    DEFAULT_B_PRIME
}

impl MetricConfig {
    pub fn b_prime_for(&self, batch: &EmbeddingBatch) -> usize {
        batch.images().min(self.b_prime)
    }

    /// Hex SHA-256 over the config and seed.
    pub fn digest(&self, seed: u64) -> String {
        #[derive(Serialize)]
        struct Knobs<'a> {
            cfg: &'a MetricConfig,
            seed: u64,
        }
        let json = serde_json::to_vec(&Knobs { cfg: self, seed }).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub source_id: String,
    /// `M_inter − M_intra`.
    pub cls_sep: f64,
    pub m_dim: f64,
    pub config_digest: String,
}

pub fn dse_components(batch: &EmbeddingBatch, cfg: &MetricConfig, seed: u64) -> Result<ComponentRecord> {
    let id = batch.source_id();
    let cls_sep = class_separability(batch, &cfg.separability, seed).map_err(|e| e.with_source_id(id))?;
    let m_dim = m_dim(batch, cfg.b_prime_for(batch), seed).map_err(|e| e.with_source_id(id))?;
    if !cls_sep.is_finite() || !m_dim.is_finite() {
        return Err(DseError::Data(format!("{id}: non-finite component")));
    }
    Ok(ComponentRecord {
        source_id: id.to_string(),
        cls_sep,
        m_dim,
        config_digest: cfg.digest(seed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSeries {
    pub records: Vec<ComponentRecord>,
    pub lambda: f64,
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CheckpointSeries {
    pub fn source_ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.source_id.as_str())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("series serializes");
        s.push('\n');
        s
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let series: CheckpointSeries =
            serde_json::from_reader(reader).map_err(|e| DseError::Format(format!("series json: {e}")))?;
        if series.records.len() != series.scores.len() {
            return Err(DseError::Series(format!(
                "{} records but {} scores",
                series.records.len(),
                series.scores.len()
            )));
        }
        Ok(series)
    }

    /// One row per checkpoint: `source_id, cls_sep, m_dim, dse`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| DseError::Format(format!("csv: {e}"));
        w.write_record(["source_id", "cls_sep", "m_dim", "dse"]).map_err(io)?;
        for (r, s) in self.records.iter().zip(&self.scores) {
            w.write_record([r.source_id.clone(), r.cls_sep.to_string(), r.m_dim.to_string(), s.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| DseError::Format(format!("csv: {e}")))
    }
}

/// Writes `source_id, cls_sep, m_dim` rows.
pub fn write_components_csv<W: Write>(records: &[ComponentRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| DseError::Format(format!("csv: {e}"));
    w.write_record(["source_id", "cls_sep", "m_dim"]).map_err(io)?;
    for r in records {
        w.write_record([r.source_id.clone(), r.cls_sep.to_string(), r.m_dim.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| DseError::Format(format!("csv: {e}")))
}

fn check_series(records: &[ComponentRecord], min_len: usize) -> Result<()> {
    if records.len() < min_len {
        return Err(DseError::Series(format!(
            "need at least {min_len} checkpoints, got {}",
            records.len()
        )));
    }
    if let Some(first) = records.first() {
        if let Some(bad) = records.iter().find(|r| r.config_digest != first.config_digest) {
            return Err(DseError::Series(format!(
                "{} was computed with a different configuration than {}",
                bad.source_id, first.source_id
            )));
        }
    }
    Ok(())
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaEstimate {
    pub lambda: f64,
    /// `M_dim` was (numerically) constant, so λ fell back to 0.
    pub degenerate: bool,
}

/// `Std(cls_sep) / Std(m_dim)` over all records, population std.
pub fn lambda_from_series(records: &[ComponentRecord]) -> Result<f64> {
    Ok(estimate_lambda(records)?.lambda)
}

pub fn estimate_lambda(records: &[ComponentRecord]) -> Result<LambdaEstimate> {
    check_series(records, 2)?;
    let sep_std = population_std(records.iter().map(|r| r.cls_sep));
    let dim_std = population_std(records.iter().map(|r| r.m_dim));
    if dim_std < MIN_DIM_STD {
        log::warn!("M_dim is constant across {} checkpoints; using lambda = 0", records.len());
        return Ok(LambdaEstimate {
            lambda: 0.0,
            degenerate: true,
        });
    }
    Ok(LambdaEstimate {
        lambda: sep_std / dim_std,
        degenerate: false,
    })
}

pub fn scores(records: &[ComponentRecord], lambda: f64) -> Vec<f64> {
    records.iter().map(|r| r.cls_sep + lambda * r.m_dim).collect()
}

pub fn dse_series(records: Vec<ComponentRecord>, lambda_override: Option<f64>) -> Result<CheckpointSeries> {
    let mut warnings = Vec::new();
    let lambda = match lambda_override {
        Some(l) => {
            if !l.is_finite() {
                return Err(DseError::Config(format!("lambda must be finite, got {l}")));
            }
            check_series(&records, 1)?;
            l
        }
        None => {
            let est = estimate_lambda(&records)?;
            if est.degenerate {
                warnings.push("M_dim constant across checkpoints; lambda set to 0".to_string());
            }
            est.lambda
        }
    };
    Ok(CheckpointSeries {
        scores: scores(&records, lambda),
        records,
        lambda,
        warnings,
    })
}
