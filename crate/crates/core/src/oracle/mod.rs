//! Ground truth from fully specified discrete structural models.
//!
//! An [`Scm`] fixes, within one covariate stratum, the joint law
//! `pr(u) · pr(a | u) · pr(m | a, u) · pr(y | a, m, u)`. From it the oracle
//! computes exactly the observable tables, the true natural effects, and both
//! sensitivity parameters, and checks every bound against them.

mod lemma;
mod sample;
mod sharpness;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identification::Effects;
use crate::parametric::MediatorProbGrid;
use crate::prob::{validate, ConditionalModel, OutcomeMode, StratumModel, NORMALIZATION_TOL};

pub use lemma::{
    bernoulli_instance, lemma3_check, random_instance, DiscreteRatioInstance, Lemma3Outcome,
};
pub use sample::{
    bernoulli_max_gap, definition_batch, examine_scm, lemma3_batch, observed_of, sample_rng,
    unexposed_batch, validity_batch, DefinitionBatch, Lemma3Batch, ScmExamination, ScmSampler,
    TheoremTally, ValidityBatch,
};
pub use sharpness::{
    recipe_scm, sharpness_search, Attainment, RecipeConfig, SharpnessReport, P1_GRID,
};
pub use verify::{
    unexposed_nde_check, verify_theorems, Theorem, TheoremCheck, ValidityReport, VALIDITY_TOL,
};

/// Tolerance for agreement between the two forms of the collider-bias parameter.
pub const DEFINITION_TOL: f64 = 1e-10;

/// A discrete structural model over `(A, M, Y, U)` within one stratum.
///
/// Indexing: `u_prior[u]`, `a_given_u[u] = pr(A=1 | u)`,
/// `m_given[a][u][m] = pr(m | a, u)`, `y_given[a][m][u] = pr(Y=1 | a, m, u)`
/// (a conditional mean in [`OutcomeMode::MeanRatio`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scm {
    pub u_prior: Vec<f64>,
    pub a_given_u: Vec<f64>,
    pub m_given: [Vec<Vec<f64>>; 2],
    pub y_given: [Vec<Vec<f64>>; 2],
    pub mode: OutcomeMode,
    /// Exposure is independent of the unmeasured confounder.
    pub a_independent_u: bool,
}

impl Scm {
    pub fn new(
        u_prior: Vec<f64>,
        a_given_u: Vec<f64>,
        m_given: [Vec<Vec<f64>>; 2],
        y_given: [Vec<Vec<f64>>; 2],
        mode: OutcomeMode,
        a_independent_u: bool,
    ) -> Result<Self> {
        let scm = Self {
            u_prior,
            a_given_u,
            m_given,
            y_given,
            mode,
            a_independent_u,
        };
        scm.validate()?;
        Ok(scm)
    }

    pub fn u_levels(&self) -> usize {
        self.u_prior.len()
    }

    pub fn m_levels(&self) -> usize {
        self.y_given[0].len()
    }

    fn validate(&self) -> Result<()> {
        let ku = self.u_levels();
        if ku == 0 || self.a_given_u.len() != ku {
            return Err(Error::Shape(
                "u_prior and a_given_u need the same positive length".into(),
            ));
        }
        let km = self.m_levels();
        if km == 0 {
            return Err(Error::Shape("need at least one mediator level".into()));
        }
        check_distribution(&self.u_prior, "u_prior")?;
        for (u, &p) in self.a_given_u.iter().enumerate() {
            check_probability(p, &format!("a_given_u[{u}]"))?;
        }
        if self.a_independent_u && self.a_given_u.iter().any(|&p| p != self.a_given_u[0]) {
            return Err(Error::Shape(
                "a_given_u must be constant when A is independent of U".into(),
            ));
        }
        for a in 0..2 {
            if self.m_given[a].len() != ku || self.y_given[a].len() != km {
                return Err(Error::Shape(format!(
                    "tables for a={a} have the wrong shape"
                )));
            }
            for (u, row) in self.m_given[a].iter().enumerate() {
                if row.len() != km {
                    return Err(Error::Shape(format!(
                        "m_given[{a}][{u}] has {} levels, expected {km}",
                        row.len()
                    )));
                }
                check_distribution(row, &format!("m_given[{a}][{u}]"))?;
            }
            for (m, row) in self.y_given[a].iter().enumerate() {
                if row.len() != ku {
                    return Err(Error::Shape(format!(
                        "y_given[{a}][{m}] has {} levels, expected {ku}",
                        row.len()
                    )));
                }
                for (u, &y) in row.iter().enumerate() {
                    let path = format!("y_given[{a}][{m}][{u}]");
                    match self.mode {
                        OutcomeMode::Probability => check_probability(y, &path)?,
                        OutcomeMode::MeanRatio => {
                            if !(y.is_finite() && y >= 0.0) {
                                return Err(Error::OutOfRangeProbability { path, value: y });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `pr(u | A=a)` by Bayes' rule.
    pub fn u_given_a(&self, a: usize) -> Result<Vec<f64>> {
        let weights: Vec<f64> = self
            .u_prior
            .iter()
            .zip(&self.a_given_u)
            .map(|(p, pa)| p * if a == 1 { *pa } else { 1.0 - pa })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroProbability(format!("pr(A={a})")));
        }
        Ok(weights.into_iter().map(|w| w / total).collect())
    }

    /// `pr(m | A=a)` under a given confounder law.
    fn mediator_marginal(&self, a: usize, u_law: &[f64]) -> Vec<f64> {
        (0..self.m_levels())
            .map(|m| {
                u_law
                    .iter()
                    .zip(&self.m_given[a])
                    .map(|(pu, row)| pu * row[m])
                    .sum()
            })
            .collect()
    }

    /// `Σ_u Σ_m pr(Y=1 | a_y, m, u) pr(m | a_m, u) law(u)`.
    fn potential_mean(&self, a_y: usize, a_m: usize, u_law: &[f64]) -> f64 {
        let mut total = 0.0;
        for (u, pu) in u_law.iter().enumerate() {
            for m in 0..self.m_levels() {
                total += self.y_given[a_y][m][u] * self.m_given[a_m][u][m] * pu;
            }
        }
        total
    }

    /// The fixed-`m` slice `pr(m | A=a, u)` as a [`MediatorProbGrid`].
    pub fn mediator_grid(&self, m: usize) -> Result<MediatorProbGrid> {
        let row = |a: usize| self.m_given[a].iter().map(|r| r[m]).collect::<Vec<_>>();
        MediatorProbGrid::new(row(0), row(1))
    }
}

fn check_probability(p: f64, path: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::OutOfRangeProbability {
            path: path.to_string(),
            value: p,
        })
    }
}

fn check_distribution(p: &[f64], path: &str) -> Result<()> {
    for (i, &v) in p.iter().enumerate() {
        check_probability(v, &format!("{path}[{i}]"))?;
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized {
            path: path.to_string(),
            sum,
        });
    }
    Ok(())
}

/// Marginalizes `U` out to obtain the observable tables `pr(Y=1 | a, m)` and
/// `pr(m | a)` as a single-stratum model with `c = 0`.
pub fn observed_model(scm: &Scm) -> Result<ConditionalModel> {
    let km = scm.m_levels();
    let mut y_prob: [Vec<f64>; 2] = [vec![0.0; km], vec![0.0; km]];
    let mut m_prob: [Vec<f64>; 2] = [vec![0.0; km], vec![0.0; km]];
    for a in 0..2 {
        let u_law = scm.u_given_a(a)?;
        m_prob[a] = scm.mediator_marginal(a, &u_law);
        for m in 0..km {
            if !(m_prob[a][m] > 0.0) {
                return Err(Error::UnreachableCell { a, m });
            }
            let joint: f64 = u_law
                .iter()
                .enumerate()
                .map(|(u, pu)| scm.y_given[a][m][u] * pu * scm.m_given[a][u][m])
                .sum();
            let y = joint / m_prob[a][m];
            y_prob[a][m] = match scm.mode {
                OutcomeMode::Probability => y.min(1.0),
                OutcomeMode::MeanRatio => y,
            };
        }
    }
    validate(ConditionalModel {
        mode: scm.mode,
        strata: vec![StratumModel::new(0, y_prob, m_prob)],
    })
}

fn effects_from_sums(cross: f64, control: f64, treated: f64) -> Result<Effects> {
    if !(control > 0.0) {
        return Err(Error::ZeroDenominator("true NDE: pr(Y_{0M_0}=1)".into()));
    }
    if !(cross > 0.0) {
        return Err(Error::ZeroDenominator("true NIE: pr(Y_{1M_0}=1)".into()));
    }
    Ok(Effects {
        nde_rr: cross / control,
        nie_rr: treated / cross,
        te_rr: treated / control,
        nde_rd: cross - control,
        nie_rd: treated - cross,
        te_rd: treated - control,
    })
}

/// True natural effects, averaging over the confounder prior.
///
/// Requires `A ⊥ U`: the prior is then also the confounder law within each
/// exposure arm.
pub fn true_effects(scm: &Scm) -> Result<Effects> {
    if !scm.a_independent_u {
        return Err(Error::RequiresIndependence);
    }
    let prior = &scm.u_prior;
    effects_from_sums(
        scm.potential_mean(1, 0, prior),
        scm.potential_mean(0, 0, prior),
        scm.potential_mean(1, 1, prior),
    )
}

/// True natural direct effect among the unexposed, `(RR, RD)`: every
/// confounder average is taken under `pr(u | A=0)`.
pub fn unexposed_true_nde(scm: &Scm) -> Result<(f64, f64)> {
    let law = scm.u_given_a(0)?;
    let cross = scm.potential_mean(1, 0, &law);
    let control = scm.potential_mean(0, 0, &law);
    if !(control > 0.0) {
        return Err(Error::ZeroDenominator(
            "unexposed NDE: pr(Y_{0M_0}=1 | A=0)".into(),
        ));
    }
    Ok((cross / control, cross - control))
}

/// `max_m max_u pr(Y=1|1,m,u) / min_u pr(Y=1|1,m,u)`.
pub fn rr_uy(scm: &Scm) -> Result<f64> {
    let mut best: f64 = 1.0;
    for (m, row) in scm.y_given[1].iter().enumerate() {
        if let Some(u) = row.iter().position(|&y| !(y > 0.0)) {
            return Err(Error::ZeroProbability(format!("y_given[1][{m}][{u}]")));
        }
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        best = best.max(hi / lo);
    }
    Ok(best)
}

/// Collider-bias parameter from its definition:
/// `max_m max_u pr(u | A=1, m) / pr(u | A=0, m)`, restricted to confounder
/// levels with positive prior mass.
pub fn rr_au_posterior(scm: &Scm) -> Result<f64> {
    Ok(rr_au_posterior_by_m(scm)?.into_iter().fold(1.0, f64::max))
}

/// The inner maximum over `u` of [`rr_au_posterior`], one entry per mediator level.
pub fn rr_au_posterior_by_m(scm: &Scm) -> Result<Vec<f64>> {
    let laws = [scm.u_given_a(0)?, scm.u_given_a(1)?];
    let marginals = [
        scm.mediator_marginal(0, &laws[0]),
        scm.mediator_marginal(1, &laws[1]),
    ];
    (0..scm.m_levels())
        .map(|m| {
            for a in 0..2 {
                if !(marginals[a][m] > 0.0) {
                    return Err(Error::ZeroProbability(format!("pr(M={m} | A={a})")));
                }
            }
            let mut best: f64 = 0.0;
            for u in 0..scm.u_levels() {
                if !(scm.u_prior[u] > 0.0) {
                    continue;
                }
                let post = |a: usize| laws[a][u] * scm.m_given[a][u][m] / marginals[a][m];
                let (p1, p0) = (post(1), post(0));
                if p0 > 0.0 {
                    best = best.max(p1 / p0);
                } else if p1 > 0.0 {
                    return Err(Error::ZeroProbability(format!("pr(U={u} | A=0, M={m})")));
                }
            }
            Ok(best)
        })
        .collect()
}

/// Collider-bias parameter in its mediator-ratio form:
/// `max_m max_u [pr(m|1,u)/pr(m|0,u)] / [pr(m|1)/pr(m|0)]`. Requires `A ⊥ U`.
pub fn rr_au_mediator_ratio(scm: &Scm) -> Result<f64> {
    Ok(rr_au_mediator_ratio_by_m(scm)?
        .into_iter()
        .fold(1.0, f64::max))
}

/// The inner maximum over `u` of [`rr_au_mediator_ratio`], one entry per mediator level.
pub fn rr_au_mediator_ratio_by_m(scm: &Scm) -> Result<Vec<f64>> {
    if !scm.a_independent_u {
        return Err(Error::RequiresIndependence);
    }
    let prior = &scm.u_prior;
    let marginals = [
        scm.mediator_marginal(0, prior),
        scm.mediator_marginal(1, prior),
    ];
    (0..scm.m_levels())
        .map(|m| {
            if !(marginals[0][m] > 0.0 && marginals[1][m] > 0.0) {
                return Err(Error::ZeroProbability(format!("pr(M={m} | A=a)")));
            }
            let marginal_rr = marginals[1][m] / marginals[0][m];
            let mut best: f64 = 0.0;
            for u in 0..scm.u_levels() {
                if !(prior[u] > 0.0) {
                    continue;
                }
                let (p1, p0) = (scm.m_given[1][u][m], scm.m_given[0][u][m]);
                if p0 > 0.0 {
                    best = best.max(p1 / p0 / marginal_rr);
                } else if p1 > 0.0 {
                    return Err(Error::ZeroProbability(format!("pr(M={m} | A=0, U={u})")));
                }
            }
            Ok(best)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identification::observed_effects;

    pub(crate) fn binary_scm(
        y1: [[f64; 2]; 2],
        y0: [[f64; 2]; 2],
        m0: [[f64; 2]; 2],
        m1: [[f64; 2]; 2],
    ) -> Scm {
        Scm::new(
            vec![0.4, 0.6],
            vec![0.5, 0.5],
            [
                m0.iter().map(|r| r.to_vec()).collect(),
                m1.iter().map(|r| r.to_vec()).collect(),
            ],
            [
                y0.iter().map(|r| r.to_vec()).collect(),
                y1.iter().map(|r| r.to_vec()).collect(),
            ],
            OutcomeMode::Probability,
            true,
        )
        .unwrap()
    }

    fn generic() -> Scm {
        binary_scm(
            [[0.2, 0.5], [0.4, 0.9]],
            [[0.1, 0.3], [0.25, 0.6]],
            [[0.7, 0.3], [0.4, 0.6]],
            [[0.5, 0.5], [0.1, 0.9]],
        )
    }

    // Full-joint enumeration over (u, m, y) for the three potential-outcome
    // means, written independently of `potential_mean`.
    fn enumerate_means(scm: &Scm) -> (f64, f64, f64) {
        let mut cross = 0.0;
        let mut control = 0.0;
        let mut treated = 0.0;
        for u in 0..scm.u_levels() {
            for m in 0..scm.m_levels() {
                for y in 0..2 {
                    let py = |a: usize| {
                        let p = scm.y_given[a][m][u];
                        if y == 1 {
                            p
                        } else {
                            1.0 - p
                        }
                    };
                    let w = |a_y: usize, a_m: usize| {
                        scm.u_prior[u] * scm.m_given[a_m][u][m] * py(a_y) * y as f64
                    };
                    cross += w(1, 0);
                    control += w(0, 0);
                    treated += w(1, 1);
                }
            }
        }
        (cross, control, treated)
    }

    #[test]
    fn true_effects_match_enumeration() {
        let scm = generic();
        let (cross, control, treated) = enumerate_means(&scm);
        let e = true_effects(&scm).unwrap();
        assert!((e.nde_rr - cross / control).abs() < 1e-14);
        assert!((e.nie_rr - treated / cross).abs() < 1e-14);
        assert!((e.nde_rd - (cross - control)).abs() < 1e-15);
        assert!(e.decomposes());
    }

    #[test]
    fn irrelevant_confounder_gives_observed_effects() {
        let scm = binary_scm(
            [[0.3, 0.3], [0.7, 0.7]],
            [[0.2, 0.2], [0.4, 0.4]],
            [[0.6, 0.4], [0.6, 0.4]],
            [[0.3, 0.7], [0.3, 0.7]],
        );
        let truth = true_effects(&scm).unwrap();
        let obs = observed_effects(&observed_model(&scm).unwrap().strata[0])
            .unwrap()
            .effects;
        assert!((truth.nde_rr - obs.nde_rr).abs() < 1e-14);
        assert!((truth.nie_rr - obs.nie_rr).abs() < 1e-14);
        assert!((truth.nde_rd - obs.nde_rd).abs() < 1e-15);
        assert!((truth.nie_rd - obs.nie_rd).abs() < 1e-15);
        assert_eq!(rr_uy(&scm).unwrap(), 1.0);
        assert!((rr_au_posterior(&scm).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn null_scm() {
        let scm = binary_scm(
            [[0.2, 0.5], [0.4, 0.9]],
            [[0.2, 0.5], [0.4, 0.9]],
            [[0.7, 0.3], [0.4, 0.6]],
            [[0.7, 0.3], [0.4, 0.6]],
        );
        let e = true_effects(&scm).unwrap();
        assert!(
            (e.nde_rr - 1.0).abs() < 1e-15
                && (e.nie_rr - 1.0).abs() < 1e-15
                && (e.te_rr - 1.0).abs() < 1e-15
        );
        assert!(e.nde_rd.abs() < 1e-15 && e.nie_rd.abs() < 1e-15 && e.te_rd.abs() < 1e-15);
    }

    #[test]
    fn degenerate_prior_gives_slice() {
        let mut scm = generic();
        scm.u_prior = vec![0.0, 1.0];
        let obs = observed_model(&scm).unwrap();
        let s = &obs.strata[0];
        for a in 0..2 {
            for m in 0..2 {
                assert!((s.m_prob[a][m] - scm.m_given[a][1][m]).abs() < 1e-15);
                assert!((s.y_prob[a][m] - scm.y_given[a][m][1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn total_probability_two_orders() {
        let scm = generic();
        let obs = observed_model(&scm).unwrap();
        for a in 0..2 {
            let via_tables = obs.strata[0].outcome_marginal(a);
            let law = scm.u_given_a(a).unwrap();
            // Sum over u first, then m.
            let mut direct = 0.0;
            for (u, pu) in law.iter().enumerate() {
                let mut inner = 0.0;
                for m in 0..scm.m_levels() {
                    inner += scm.m_given[a][u][m] * scm.y_given[a][m][u];
                }
                direct += pu * inner;
            }
            assert!((via_tables - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_everything() {
        let scm = binary_scm([[0.5; 2]; 2], [[0.5; 2]; 2], [[0.5; 2]; 2], [[0.5; 2]; 2]);
        let obs = observed_model(&scm).unwrap();
        for a in 0..2 {
            assert_eq!(obs.strata[0].m_prob[a], vec![0.5, 0.5]);
            assert_eq!(obs.strata[0].y_prob[a], vec![0.5, 0.5]);
        }
    }

    #[test]
    fn unreachable_mediator_level() {
        let scm = binary_scm(
            [[0.2, 0.5], [0.4, 0.9]],
            [[0.1, 0.3], [0.25, 0.6]],
            [[1.0, 0.0], [1.0, 0.0]],
            [[0.5, 0.5], [0.1, 0.9]],
        );
        assert_eq!(
            observed_model(&scm).unwrap_err(),
            Error::UnreachableCell { a: 0, m: 1 }
        );
    }

    #[test]
    fn rr_uy_examples() {
        let scm = binary_scm(
            [[0.3, 0.3], [0.2, 0.5]],
            [[0.1, 0.3], [0.25, 0.6]],
            [[0.7, 0.3], [0.4, 0.6]],
            [[0.5, 0.5], [0.1, 0.9]],
        );
        assert!((rr_uy(&scm).unwrap() - 2.5).abs() < 1e-15);
        let zero = binary_scm(
            [[0.0, 0.3], [0.2, 0.5]],
            [[0.1, 0.3], [0.25, 0.6]],
            [[0.7, 0.3], [0.4, 0.6]],
            [[0.5, 0.5], [0.1, 0.9]],
        );
        assert!(matches!(rr_uy(&zero), Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn rr_uy_pairwise_enumeration() {
        let scm = generic();
        let mut best: f64 = 1.0;
        for m in 0..2 {
            for u in 0..2 {
                for v in 0..2 {
                    best = best.max(scm.y_given[1][m][u] / scm.y_given[1][m][v]);
                }
            }
        }
        assert_eq!(rr_uy(&scm).unwrap(), best);
    }

    #[test]
    fn collider_forms() {
        // Mediator law constant in a: no collider path.
        let scm = binary_scm(
            [[0.2, 0.5], [0.4, 0.9]],
            [[0.1, 0.3], [0.25, 0.6]],
            [[0.7, 0.3], [0.4, 0.6]],
            [[0.7, 0.3], [0.4, 0.6]],
        );
        assert!((rr_au_posterior(&scm).unwrap() - 1.0).abs() < 1e-14);
        assert!((rr_au_mediator_ratio(&scm).unwrap() - 1.0).abs() < 1e-14);
        // Mediator law constant in u.
        let scm = binary_scm(
            [[0.2, 0.5], [0.4, 0.9]],
            [[0.1, 0.3], [0.25, 0.6]],
            [[0.7, 0.3], [0.7, 0.3]],
            [[0.2, 0.8], [0.2, 0.8]],
        );
        assert!((rr_au_posterior(&scm).unwrap() - 1.0).abs() < 1e-14);

        let scm = generic();
        let post = rr_au_posterior(&scm).unwrap();
        let ratio = rr_au_mediator_ratio(&scm).unwrap();
        assert!((post - ratio).abs() < DEFINITION_TOL);
        let by_m = rr_au_posterior_by_m(&scm).unwrap();
        for (m, value) in by_m.iter().enumerate() {
            let bound = crate::parametric::interaction_bound(&scm.mediator_grid(m).unwrap());
            assert!(*value <= bound + 1e-12, "m={m}: {value} > {bound}");
        }
    }

    #[test]
    fn ratio_form_requires_independence() {
        let mut scm = generic();
        scm.a_given_u = vec![0.2, 0.7];
        scm.a_independent_u = false;
        assert_eq!(rr_au_mediator_ratio(&scm), Err(Error::RequiresIndependence));
        assert_eq!(true_effects(&scm), Err(Error::RequiresIndependence));
        assert!(rr_au_posterior(&scm).is_ok());
    }

    #[test]
    fn invalid_scms_rejected() {
        let bad = Scm::new(
            vec![0.5, 0.6],
            vec![0.5, 0.5],
            [vec![vec![1.0], vec![1.0]], vec![vec![1.0], vec![1.0]]],
            [vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]],
            OutcomeMode::Probability,
            true,
        );
        assert!(matches!(bad, Err(Error::NotNormalized { .. })));
        let dependent_flagged = Scm::new(
            vec![0.5, 0.5],
            vec![0.2, 0.5],
            [vec![vec![1.0], vec![1.0]], vec![vec![1.0], vec![1.0]]],
            [vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]],
            OutcomeMode::Probability,
            true,
        );
        assert!(matches!(dependent_flagged, Err(Error::Shape(_))));
        let big_y = Scm::new(
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            [vec![vec![1.0], vec![1.0]], vec![vec![1.0], vec![1.0]]],
            [vec![vec![0.5, 2.5]], vec![vec![0.5, 0.5]]],
            OutcomeMode::Probability,
            true,
        );
        assert!(matches!(big_y, Err(Error::OutOfRangeProbability { .. })));
    }
}
