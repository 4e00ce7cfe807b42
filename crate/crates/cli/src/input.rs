use std::path::Path;

use medsens::prob::{estimate_from_records, ConditionalModel, RecordTable};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::SourceArgs;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub sha256: String,
    pub rows: usize,
    pub total_count: u64,
    pub strata: usize,
}

/// Parsed records and their estimated tables.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub table: RecordTable,
    pub model: ConditionalModel,
    pub digest: InputDigest,
    /// Record count per stratum, aligned with `model.strata`.
    pub counts: Vec<u64>,
}

impl Dataset {
    pub fn load(path: &Path, smoothing: f64, relabel: bool) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes, smoothing, relabel)
    }

    pub fn from_bytes(bytes: &[u8], smoothing: f64, relabel: bool) -> Result<Self, CliError> {
        let mut table = RecordTable::from_csv(bytes)?;
        if relabel {
            table = table.relabel_exposure();
        }
        let model = estimate_from_records(&table, smoothing)?;
        let counts = model
            .strata
            .iter()
            .map(|s| {
                table
                    .rows()
                    .iter()
                    .filter(|r| r.c == s.c)
                    .map(|r| r.count)
                    .sum()
            })
            .collect();
        let digest = InputDigest {
            sha256: hex::encode(Sha256::digest(bytes)),
            rows: table.rows().len(),
            total_count: table.total_count(),
            strata: model.strata.len(),
        };
        Ok(Self {
            table,
            model,
            digest,
            counts,
        })
    }

    /// Stratum weights `pr(c)` from the record counts.
    pub fn weights(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        self.counts
            .iter()
            .map(|&n| n as f64 / total as f64)
            .collect()
    }
}

/// A published ratio-scale estimate with optional confidence limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub point: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_upper: Option<f64>,
}

impl Estimate {
    fn parse(name: &str, point: f64, ci: Option<&[f64]>) -> Result<Self, CliError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(point) {
            return Err(CliError::Input(format!(
                "--{name} must be a positive number, got {point}"
            )));
        }
        let (lo, hi) = match ci {
            None => (None, None),
            Some(&[lo, hi]) => {
                if !(positive(lo) && positive(hi) && lo <= point && point <= hi) {
                    return Err(CliError::Input(format!(
                        "--{name}-ci must be positive limits around the point estimate, got ({lo}, {hi})"
                    )));
                }
                (Some(lo), Some(hi))
            }
            Some(other) => {
                return Err(CliError::Input(format!(
                    "--{name}-ci needs two values, got {}",
                    other.len()
                )));
            }
        };
        Ok(Self {
            point,
            ci_lower: lo,
            ci_upper: hi,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            point: f(self.point),
            ci_lower: self.ci_lower.map(&f),
            ci_upper: self.ci_upper.map(&f),
        }
    }
}

/// Ratio-scale estimates supplied directly instead of records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimates {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nde_rr: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nie_rr: Option<Estimate>,
}

pub enum Source {
    Records(Box<Dataset>),
    Estimates(Estimates),
}

impl Source {
    pub fn load(args: &SourceArgs, smoothing: f64, relabel: bool) -> Result<Self, CliError> {
        if let Some(path) = &args.data {
            return Ok(Source::Records(Box::new(Dataset::load(
                path, smoothing, relabel,
            )?)));
        }
        if relabel {
            return Err(CliError::Input(
                "--relabel-exposure needs --data; published estimates cannot be relabeled".into(),
            ));
        }
        let nde_rr = args
            .nde_rr
            .map(|p| Estimate::parse("nde-rr", p, args.nde_rr_ci.as_deref()))
            .transpose()?;
        let nie_rr = args
            .nie_rr
            .map(|p| Estimate::parse("nie-rr", p, args.nie_rr_ci.as_deref()))
            .transpose()?;
        if nde_rr.is_none() && nie_rr.is_none() {
            return Err(CliError::Input("need --data, --nde-rr or --nie-rr".into()));
        }
        Ok(Source::Estimates(Estimates { nde_rr, nie_rr }))
    }
}
