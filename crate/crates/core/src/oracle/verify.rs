use serde::{Deserialize, Serialize};

use super::{observed_model, rr_au_posterior, rr_uy, true_effects, unexposed_true_nde, Scm};
use crate::bounds::{
    adjust_nde_rr, adjust_nie_rr, bound_nde_rd, bound_nie_rd, bounding_factor, SensitivitySpec,
};
use crate::error::Result;
use crate::identification::{observed_effects, Effects};

/// Slack allowed when comparing a true effect with its bound, scaled by the
/// magnitude of the operands when they exceed one.
pub const VALIDITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    NdeRr,
    NieRr,
    NdeRd,
    NieRd,
    UnexposedNdeRr,
    UnexposedNdeRd,
}

impl Theorem {
    pub const MAIN: [Theorem; 4] = [
        Theorem::NdeRr,
        Theorem::NieRr,
        Theorem::NdeRd,
        Theorem::NieRd,
    ];
    pub const UNEXPOSED: [Theorem; 2] = [Theorem::UnexposedNdeRr, Theorem::UnexposedNdeRd];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::NdeRr => "nde_rr",
            Theorem::NieRr => "nie_rr",
            Theorem::NdeRd => "nde_rd",
            Theorem::NieRd => "nie_rd",
            Theorem::UnexposedNdeRr => "unexposed_nde_rr",
            Theorem::UnexposedNdeRd => "unexposed_nde_rd",
        }
    }

    fn is_lower(self) -> bool {
        !matches!(self, Theorem::NieRr | Theorem::NieRd)
    }
}

/// One bound compared with the truth.
///
/// `slack` is `truth − bound` for lower bounds and `bound − truth` for upper
/// bounds, so it is nonnegative whenever the bound holds. `attainment` is the
/// ratio that reaches 1 when the bound is tight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub theorem: Theorem,
    pub truth: f64,
    pub bound: f64,
    pub slack: f64,
    pub attainment: f64,
    pub holds: bool,
}

fn tolerance(a: f64, b: f64) -> f64 {
    VALIDITY_TOL * 1f64.max(a.abs()).max(b.abs())
}

impl TheoremCheck {
    fn new(theorem: Theorem, truth: f64, bound: f64, attainment: f64) -> Self {
        let slack = if theorem.is_lower() {
            truth - bound
        } else {
            bound - truth
        };
        Self {
            theorem,
            truth,
            bound,
            slack,
            attainment,
            holds: slack >= -tolerance(truth, bound),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub observed: Effects,
    /// Population-level true effects; absent for the unexposed-population check.
    pub truth: Option<Effects>,
    pub rr_uy: f64,
    pub rr_au: f64,
    pub bf: f64,
    pub checks: Vec<TheoremCheck>,
}

impl ValidityReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn check(&self, theorem: Theorem) -> Option<&TheoremCheck> {
        self.checks.iter().find(|c| c.theorem == theorem)
    }
}

struct Ingredients {
    observed: Effects,
    p0: f64,
    p1: f64,
    nde_rd_lower: f64,
    nie_rd_upper: f64,
    rr_uy: f64,
    rr_au: f64,
    bf: f64,
}

fn ingredients(scm: &Scm) -> Result<Ingredients> {
    let model = observed_model(scm)?;
    let stratum = &model.strata[0];
    let observed = observed_effects(stratum)?.effects;
    let rr_uy = rr_uy(scm)?;
    let rr_au = rr_au_posterior(scm)?;
    let bf = bounding_factor(SensitivitySpec::new(rr_au, rr_uy)?)?;
    Ok(Ingredients {
        observed,
        p0: stratum.outcome_marginal(0),
        p1: stratum.outcome_marginal(1),
        nde_rd_lower: bound_nde_rd(stratum, bf),
        nie_rd_upper: bound_nie_rd(stratum, bf),
        rr_uy,
        rr_au,
        bf,
    })
}

/// Checks all four population bounds on one structural model, using the exact
/// sensitivity parameters of that model.
pub fn verify_theorems(scm: &Scm) -> Result<ValidityReport> {
    let truth = true_effects(scm)?;
    let ing = ingredients(scm)?;
    let obs = &ing.observed;

    let nde_lower = adjust_nde_rr(obs.nde_rr, ing.bf);
    let nie_upper = adjust_nie_rr(obs.nie_rr, ing.bf);
    let checks = vec![
        TheoremCheck::new(
            Theorem::NdeRr,
            truth.nde_rr,
            nde_lower,
            nde_lower / truth.nde_rr,
        ),
        TheoremCheck::new(
            Theorem::NieRr,
            truth.nie_rr,
            nie_upper,
            truth.nie_rr / nie_upper,
        ),
        TheoremCheck::new(
            Theorem::NdeRd,
            truth.nde_rd,
            ing.nde_rd_lower,
            (ing.nde_rd_lower + ing.p0) / (truth.nde_rd + ing.p0),
        ),
        TheoremCheck::new(
            Theorem::NieRd,
            truth.nie_rd,
            ing.nie_rd_upper,
            (ing.p1 - ing.nie_rd_upper) / (ing.p1 - truth.nie_rd),
        ),
    ];
    Ok(ValidityReport {
        observed: ing.observed,
        truth: Some(truth),
        rr_uy: ing.rr_uy,
        rr_au: ing.rr_au,
        bf: ing.bf,
        checks,
    })
}

/// Checks the two direct-effect bounds for the unexposed population. Exposure
/// may depend on the unmeasured confounder.
pub fn unexposed_nde_check(scm: &Scm) -> Result<ValidityReport> {
    let (nde_rr, nde_rd) = unexposed_true_nde(scm)?;
    let ing = ingredients(scm)?;
    let lower = adjust_nde_rr(ing.observed.nde_rr, ing.bf);
    let checks = vec![
        TheoremCheck::new(Theorem::UnexposedNdeRr, nde_rr, lower, lower / nde_rr),
        TheoremCheck::new(
            Theorem::UnexposedNdeRd,
            nde_rd,
            ing.nde_rd_lower,
            (ing.nde_rd_lower + ing.p0) / (nde_rd + ing.p0),
        ),
    ];
    Ok(ValidityReport {
        observed: ing.observed,
        truth: None,
        rr_uy: ing.rr_uy,
        rr_au: ing.rr_au,
        bf: ing.bf,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::tests::binary_scm;
    use crate::prob::OutcomeMode;

    #[test]
    fn irrelevant_confounder_is_tight() {
        let scm = binary_scm(
            [[0.3, 0.3], [0.7, 0.7]],
            [[0.2, 0.2], [0.4, 0.4]],
            [[0.6, 0.4], [0.6, 0.4]],
            [[0.3, 0.7], [0.3, 0.7]],
        );
        let report = verify_theorems(&scm).unwrap();
        assert_eq!(report.bf, 1.0);
        assert!(report.all_hold());
        for c in &report.checks {
            assert!(c.slack.abs() < 1e-14, "{c:?}");
            assert!((c.attainment - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn generic_model_holds_with_positive_slack() {
        let scm = binary_scm(
            [[0.2, 0.5], [0.4, 0.9]],
            [[0.1, 0.3], [0.25, 0.6]],
            [[0.7, 0.3], [0.4, 0.6]],
            [[0.5, 0.5], [0.1, 0.9]],
        );
        let report = verify_theorems(&scm).unwrap();
        assert!(report.all_hold(), "{report:?}");
        assert!(report.bf > 1.0);
        for c in &report.checks {
            assert!(c.attainment <= 1.0 + 1e-10);
        }
        assert!(report.truth.unwrap().decomposes());
    }

    #[test]
    fn independence_reduces_unexposed_to_population() {
        let scm = binary_scm(
            [[0.2, 0.5], [0.4, 0.9]],
            [[0.1, 0.3], [0.25, 0.6]],
            [[0.7, 0.3], [0.4, 0.6]],
            [[0.5, 0.5], [0.1, 0.9]],
        );
        let full = verify_theorems(&scm).unwrap();
        let unexposed = unexposed_nde_check(&scm).unwrap();
        let a = full.check(Theorem::NdeRr).unwrap();
        let b = unexposed.check(Theorem::UnexposedNdeRr).unwrap();
        assert!((a.truth - b.truth).abs() < 1e-14);
        assert_eq!(a.bound, b.bound);
        let a = full.check(Theorem::NdeRd).unwrap();
        let b = unexposed.check(Theorem::UnexposedNdeRd).unwrap();
        assert!((a.truth - b.truth).abs() < 1e-14);
    }

    #[test]
    fn dependent_exposure_with_irrelevant_confounder() {
        let scm = Scm::new(
            vec![0.5, 0.5],
            vec![0.05, 0.95],
            [
                vec![vec![0.7, 0.3], vec![0.2, 0.8]],
                vec![vec![0.4, 0.6], vec![0.1, 0.9]],
            ],
            [
                vec![vec![0.2, 0.2], vec![0.3, 0.3]],
                vec![vec![0.5, 0.5], vec![0.6, 0.6]],
            ],
            OutcomeMode::Probability,
            false,
        )
        .unwrap();
        let report = unexposed_nde_check(&scm).unwrap();
        assert_eq!(report.bf, 1.0);
        for c in &report.checks {
            assert!(c.holds);
            assert!(c.slack.abs() < 1e-14, "{c:?}");
        }
    }

    #[test]
    fn a_violation_is_reported() {
        let check = TheoremCheck::new(Theorem::NdeRr, 1.0, 1.1, 1.1);
        assert!(!check.holds);
        let check = TheoremCheck::new(Theorem::NieRr, 1.0, 1.0 - 1e-12, 1.0);
        assert!(check.holds);
    }
}
