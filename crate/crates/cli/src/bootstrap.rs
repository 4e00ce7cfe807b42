//! Percentile bootstrap over record units.
//!
//! Each replicate draws `N` units with replacement from the `N` units of the
//! table (a multinomial resample of the row counts) and re-estimates every
//! stratum. Replicate `b` uses ChaCha stream `b` of the seed, so intervals
//! do not depend on thread count. A replicate in which a required cell is
//! empty, or a stratum vanishes, is redrawn from the same stream.

use medsens::bounds::{bound_nde_rd, bound_nie_rd, SensitivitySpec};
use medsens::identification::observed_effects;
use medsens::oracle::sample_rng;
use medsens::prob::{estimate_from_records, ConditionalModel, Record, RecordTable, StratumModel};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;

/// Per-stratum quantities of one replicate, and how many redraws it took.
type Draw = (Vec<[f64; 10]>, u64);

pub const MIN_REPLICATES: usize = 100;
/// Draws allowed per replicate before the resample is declared degenerate.
pub const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub smoothing: f64,
    pub spec: SensitivitySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub quantity: &'static str,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumIntervals {
    pub stratum: usize,
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Replicates redrawn because the resample could not be estimated.
    pub redraws: u64,
    pub strata: Vec<StratumIntervals>,
}

/// Names of the per-stratum quantities, in output order.
pub const QUANTITIES: [&str; 10] = [
    "nde_rr",
    "nie_rr",
    "te_rr",
    "nde_rr_lower",
    "nie_rr_upper",
    "nde_rd",
    "nie_rd",
    "te_rd",
    "nde_rd_lower",
    "nie_rd_upper",
];

pub fn is_rr(quantity: &str) -> bool {
    quantity.contains("_rr")
}

fn quantities(model: &StratumModel, bf: f64) -> medsens::Result<[f64; 10]> {
    let e = observed_effects(model)?.effects;
    Ok([
        e.nde_rr,
        e.nie_rr,
        e.te_rr,
        e.nde_rr / bf,
        e.nie_rr * bf,
        e.nde_rd,
        e.nie_rd,
        e.te_rd,
        bound_nde_rd(model, bf),
        bound_nie_rd(model, bf),
    ])
}

fn all_quantities(
    model: &ConditionalModel,
    strata: &[usize],
    bf: f64,
) -> medsens::Result<Vec<[f64; 10]>> {
    strata
        .iter()
        .map(|&c| {
            let s = model.stratum(c).ok_or_else(|| medsens::Error::EmptyCell {
                cell: format!("(c={c})"),
            })?;
            quantities(s, bf)
        })
        .collect()
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn resample<R: Rng>(rng: &mut R, table: &RecordTable, cumulative: &[u64]) -> RecordTable {
    let rows = table.rows();
    let total = *cumulative.last().unwrap_or(&0);
    let mut counts = vec![0u64; rows.len()];
    for _ in 0..total {
        let unit = rng.gen_range(0..total);
        counts[cumulative.partition_point(|&c| c <= unit)] += 1;
    }
    let drawn = rows
        .iter()
        .zip(counts)
        .filter(|(_, n)| *n > 0)
        .map(|(r, count)| Record { count, ..*r })
        .collect();
    table.with_rows(drawn)
}

pub fn run_bootstrap(
    table: &RecordTable,
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary, CliError> {
    if cfg.replicates < MIN_REPLICATES {
        return Err(CliError::Input(format!(
            "need at least {MIN_REPLICATES} replicates, got {}",
            cfg.replicates
        )));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(CliError::Input(format!(
            "level must be in (0, 1), got {}",
            cfg.level
        )));
    }
    let bf = cfg.spec.bounding_factor()?;
    let table = table.merged();
    let full = estimate_from_records(&table, cfg.smoothing)?;
    let strata: Vec<usize> = full.strata.iter().map(|s| s.c).collect();
    let point = all_quantities(&full, &strata, bf)?;

    let cumulative: Vec<u64> = table
        .rows()
        .iter()
        .scan(0u64, |acc, r| {
            *acc += r.count;
            Some(*acc)
        })
        .collect();

    let draws: Vec<Result<Draw, CliError>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = sample_rng(cfg.seed, b as u64);
            let mut last = None;
            for attempt in 0..MAX_ATTEMPTS {
                let sample = resample(&mut rng, &table, &cumulative);
                let outcome = estimate_from_records(&sample, cfg.smoothing).and_then(|model| {
                    if model.strata.len() != strata.len() {
                        return Err(medsens::Error::EmptyCell {
                            cell: "a covariate stratum".into(),
                        });
                    }
                    all_quantities(&model, &strata, bf)
                });
                match outcome {
                    Ok(values) => return Ok((values, attempt as u64)),
                    Err(e) => last = Some(e),
                }
            }
            Err(CliError::DegenerateResample {
                replicate: b,
                attempts: MAX_ATTEMPTS,
                last: last.expect("at least one attempt"),
            })
        })
        .collect();

    let mut redraws = 0;
    let mut replicates = Vec::with_capacity(cfg.replicates);
    for draw in draws {
        let (values, extra) = draw?;
        redraws += extra;
        replicates.push(values);
    }

    let alpha = (1.0 - cfg.level) / 2.0;
    let strata_out = strata
        .iter()
        .enumerate()
        .map(|(si, &c)| {
            let intervals = QUANTITIES
                .iter()
                .enumerate()
                .map(|(qi, &quantity)| {
                    let mut values: Vec<f64> = replicates.iter().map(|r| r[si][qi]).collect();
                    values.sort_by(f64::total_cmp);
                    Interval {
                        quantity,
                        estimate: point[si][qi],
                        lower: quantile_sorted(&values, alpha),
                        upper: quantile_sorted(&values, 1.0 - alpha),
                    }
                })
                .collect();
            StratumIntervals {
                stratum: c,
                intervals,
            }
        })
        .collect();

    Ok(BootstrapSummary {
        level: cfg.level,
        replicates: cfg.replicates,
        seed: cfg.seed,
        redraws,
        strata: strata_out,
    })
}
