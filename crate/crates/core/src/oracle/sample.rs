//! Random structural models and batched property runs.
//!
//! Every sample `i` of a batch draws from its own ChaCha stream
//! `(seed, i)`, so results do not depend on thread scheduling; per-sample
//! outcomes are computed in parallel and folded in index order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lemma::{bernoulli_instance, lemma3_check, random_instance};
use super::verify::{unexposed_nde_check, verify_theorems, Theorem, TheoremCheck, ValidityReport};
use super::{observed_model, rr_au_mediator_ratio_by_m, rr_au_posterior_by_m, Scm, DEFINITION_TOL};
use crate::error::Result;
use crate::identification::observed_effects;
use crate::parametric::interaction_bound;
use crate::prob::OutcomeMode;

/// The RNG for sample `index` of a batch.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws random structural models with given cardinalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScmSampler {
    pub u_levels: usize,
    pub m_levels: usize,
    pub mode: OutcomeMode,
    /// Lower floor on each drawn cell before normalization.
    pub floor: f64,
    /// No floor; cells are skewed toward zero and mediator laws under no
    /// exposure are sometimes nearly degenerate.
    pub extreme: bool,
    /// Let `pr(A=1 | u)` vary with `u`.
    pub a_depends_on_u: bool,
}

impl ScmSampler {
    pub const DEFAULT_FLOOR: f64 = 1e-4;
    /// Upper end of outcome means in mean-ratio mode.
    pub const MEAN_MAX: f64 = 5.0;

    pub fn new(u_levels: usize, m_levels: usize) -> Self {
        Self {
            u_levels,
            m_levels,
            mode: OutcomeMode::Probability,
            floor: Self::DEFAULT_FLOOR,
            extreme: false,
            a_depends_on_u: false,
        }
    }

    pub fn mean_ratio(mut self) -> Self {
        self.mode = OutcomeMode::MeanRatio;
        self
    }

    pub fn extreme(mut self) -> Self {
        self.extreme = true;
        self
    }

    pub fn dependent(mut self) -> Self {
        self.a_depends_on_u = true;
        self
    }

    // A cell in (0, 1].
    fn cell<R: Rng>(&self, rng: &mut R) -> f64 {
        let v = 1.0 - rng.gen::<f64>();
        if self.extreme {
            v.powi(4)
        } else {
            v.max(self.floor)
        }
    }

    fn distribution<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| self.cell(rng)).collect();
        let total: f64 = raw.iter().sum();
        let mut out: Vec<f64> = raw.iter().map(|v| v / total).collect();
        // Put the rounding residue on the largest entry so the sum is exact
        // to within a few ulps.
        let residue = 1.0 - out.iter().sum::<f64>();
        let (imax, _) = out
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
        out[imax] += residue;
        out
    }

    fn near_degenerate<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let eps = 1e-9;
        let hot = rng.gen_range(0..n);
        (0..n)
            .map(|m| {
                if m == hot {
                    1.0 - eps * (n - 1) as f64
                } else {
                    eps
                }
            })
            .collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Scm {
        let (ku, km) = (self.u_levels, self.m_levels);
        let u_prior = self.distribution(rng, ku);
        let a_given_u = if self.a_depends_on_u {
            (0..ku).map(|_| rng.gen_range(0.02..0.98)).collect()
        } else {
            vec![rng.gen_range(0.05..0.95); ku]
        };
        let degenerate_control = self.extreme && rng.gen_bool(0.1);
        let m_given = [0, 1].map(|a| {
            (0..ku)
                .map(|_| {
                    if a == 0 && degenerate_control {
                        self.near_degenerate(rng, km)
                    } else {
                        self.distribution(rng, km)
                    }
                })
                .collect::<Vec<_>>()
        });
        let y_given = [0, 1].map(|_| {
            (0..km)
                .map(|_| {
                    (0..ku)
                        .map(|_| match self.mode {
                            OutcomeMode::Probability => self.cell(rng),
                            OutcomeMode::MeanRatio => Self::MEAN_MAX * self.cell(rng),
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        });
        Scm {
            u_prior,
            a_given_u,
            m_given,
            y_given,
            mode: self.mode,
            a_independent_u: !self.a_depends_on_u,
        }
    }

    pub fn sample_at(&self, seed: u64, index: u64) -> Scm {
        self.sample(&mut sample_rng(seed, index))
    }
}

/// Violation counts and extremes for one bound over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremTally {
    pub theorem: Theorem,
    pub violations: u64,
    /// Smallest slack relative to `max(1, |truth|, |bound|)`.
    pub min_relative_slack: f64,
    pub max_attainment: f64,
}

impl TheoremTally {
    fn new(theorem: Theorem) -> Self {
        Self {
            theorem,
            violations: 0,
            min_relative_slack: f64::INFINITY,
            max_attainment: f64::NEG_INFINITY,
        }
    }

    fn absorb(&mut self, check: &TheoremCheck) {
        if !check.holds {
            self.violations += 1;
        }
        let scale = 1f64.max(check.truth.abs()).max(check.bound.abs());
        self.min_relative_slack = self.min_relative_slack.min(check.slack / scale);
        self.max_attainment = self.max_attainment.max(check.attainment);
    }
}

/// Aggregate of a validity property run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityBatch {
    pub samples: u64,
    /// Samples whose quantities could not be computed.
    pub errors: u64,
    pub tallies: Vec<TheoremTally>,
    /// Largest relative error of `TE = NDE·NIE` over observed and true effects.
    pub max_decomposition_rr: f64,
    /// Largest absolute error of `TE = NDE + NIE` over observed and true effects.
    pub max_decomposition_rd: f64,
    /// Index of the first violating sample, if any.
    pub first_violation: Option<u64>,
}

impl ValidityBatch {
    pub fn violations(&self) -> u64 {
        self.tallies.iter().map(|t| t.violations).sum()
    }

    pub fn tally(&self, theorem: Theorem) -> Option<&TheoremTally> {
        self.tallies.iter().find(|t| t.theorem == theorem)
    }

    fn fold(theorems: &[Theorem], outcomes: Vec<Result<ValidityReport>>) -> Self {
        let mut batch = Self {
            samples: outcomes.len() as u64,
            errors: 0,
            tallies: theorems.iter().map(|&t| TheoremTally::new(t)).collect(),
            max_decomposition_rr: 0.0,
            max_decomposition_rd: 0.0,
            first_violation: None,
        };
        for (i, outcome) in outcomes.into_iter().enumerate() {
            let Ok(report) = outcome else {
                batch.errors += 1;
                continue;
            };
            for (tally, check) in batch.tallies.iter_mut().zip(&report.checks) {
                tally.absorb(check);
            }
            if !report.all_hold() && batch.first_violation.is_none() {
                batch.first_violation = Some(i as u64);
            }
            for effects in std::iter::once(report.observed).chain(report.truth) {
                let (rr, rd) = effects.decomposition_error();
                batch.max_decomposition_rr = batch.max_decomposition_rr.max(rr);
                batch.max_decomposition_rd = batch.max_decomposition_rd.max(rd);
            }
        }
        batch
    }
}

fn run<F>(sampler: &ScmSampler, seed: u64, count: u64, check: F) -> Vec<Result<ValidityReport>>
where
    F: Fn(&Scm) -> Result<ValidityReport> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| check(&sampler.sample_at(seed, i)))
        .collect()
}

/// Checks the four population bounds on `count` sampled models. The sampler
/// must keep exposure independent of the confounder.
pub fn validity_batch(sampler: &ScmSampler, seed: u64, count: u64) -> ValidityBatch {
    ValidityBatch::fold(&Theorem::MAIN, run(sampler, seed, count, verify_theorems))
}

/// Checks the two unexposed-population bounds on `count` sampled models.
pub fn unexposed_batch(sampler: &ScmSampler, seed: u64, count: u64) -> ValidityBatch {
    ValidityBatch::fold(
        &Theorem::UNEXPOSED,
        run(sampler, seed, count, unexposed_nde_check),
    )
}

/// The two forms of the collider-bias parameter on one model, against the
/// interaction bound of each mediator level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmExamination {
    pub rr_au_posterior: f64,
    pub rr_au_ratio: f64,
    /// `|posterior − ratio| / max(1, posterior, ratio)`, worst over mediator levels.
    pub definition_gap: f64,
    /// Every per-level value of both forms is at most that level's interaction bound.
    pub within_interaction_bound: bool,
}

impl ScmExamination {
    pub fn forms_agree(&self) -> bool {
        self.definition_gap <= DEFINITION_TOL
    }
}

pub fn examine_scm(scm: &Scm) -> Result<ScmExamination> {
    let post = rr_au_posterior_by_m(scm)?;
    let ratio = rr_au_mediator_ratio_by_m(scm)?;
    let mut gap: f64 = 0.0;
    let mut within = true;
    for m in 0..scm.m_levels() {
        let (p, r) = (post[m], ratio[m]);
        gap = gap.max((p - r).abs() / 1f64.max(p).max(r));
        let bound = interaction_bound(&scm.mediator_grid(m)?);
        let slack = DEFINITION_TOL * 1f64.max(bound);
        within &= p <= bound + slack && r <= bound + slack;
    }
    Ok(ScmExamination {
        rr_au_posterior: post.iter().copied().fold(1.0, f64::max),
        rr_au_ratio: ratio.iter().copied().fold(1.0, f64::max),
        definition_gap: gap,
        within_interaction_bound: within,
    })
}

/// Aggregate of a definition-equivalence run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefinitionBatch {
    pub samples: u64,
    pub errors: u64,
    /// Models whose two forms differ by more than the tolerance.
    pub disagreements: u64,
    /// Models where either form exceeds an interaction bound.
    pub above_interaction_bound: u64,
    pub max_gap: f64,
}

/// Compares the two forms of the collider-bias parameter on `count` sampled
/// models. The sampler must keep exposure independent of the confounder.
pub fn definition_batch(sampler: &ScmSampler, seed: u64, count: u64) -> DefinitionBatch {
    let outcomes: Vec<_> = (0..count)
        .into_par_iter()
        .map(|i| examine_scm(&sampler.sample_at(seed, i)))
        .collect();
    let mut batch = DefinitionBatch {
        samples: count,
        errors: 0,
        disagreements: 0,
        above_interaction_bound: 0,
        max_gap: 0.0,
    };
    for outcome in outcomes {
        let Ok(exam) = outcome else {
            batch.errors += 1;
            continue;
        };
        batch.disagreements += u64::from(!exam.forms_agree());
        batch.above_interaction_bound += u64::from(!exam.within_interaction_bound);
        batch.max_gap = batch.max_gap.max(exam.definition_gap);
    }
    batch
}

/// Aggregate of a Lemma-3 property run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Batch {
    pub instances: u64,
    pub violations: u64,
    pub errors: u64,
    /// Largest `lhs / rhs` seen.
    pub max_ratio: f64,
}

/// Checks the ratio inequality on `count` random instances with 2 to 6 points.
pub fn lemma3_batch(seed: u64, count: u64) -> Lemma3Batch {
    let outcomes: Vec<_> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let size = rng.gen_range(2..=6);
            lemma3_check(&random_instance(&mut rng, size))
        })
        .collect();
    let mut batch = Lemma3Batch {
        instances: count,
        violations: 0,
        errors: 0,
        max_ratio: 0.0,
    };
    for outcome in outcomes {
        match outcome {
            Ok(out) => {
                if !out.holds {
                    batch.violations += 1;
                }
                batch.max_ratio = batch.max_ratio.max(out.lhs / out.rhs);
            }
            Err(_) => batch.errors += 1,
        }
    }
    batch
}

/// Largest `|lhs − rhs|` over `count` two-point attaining instances with
/// `γ, δ` drawn from `[1, 20]`.
pub fn bernoulli_max_gap(seed: u64, count: u64) -> f64 {
    let gaps: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let (g, d) = (rng.gen_range(1.0..20.0), rng.gen_range(1.0..20.0));
            bernoulli_instance(g, d)
                .and_then(|inst| lemma3_check(&inst))
                .map_or(f64::INFINITY, |out| (out.lhs - out.rhs).abs())
        })
        .collect();
    gaps.into_iter().fold(0.0, f64::max)
}

/// Observed effects of the model fed through `identification`, for
/// cross-module consistency checks.
pub fn observed_of(scm: &Scm) -> Result<crate::identification::Effects> {
    let model = observed_model(scm)?;
    Ok(observed_effects(&model.strata[0])?.effects)
}
