//! Observed natural direct, indirect and total effects within a stratum.
//!
//! These are the effects identified when the measured covariates are assumed
//! to remove all mediator-outcome confounding. With `y1m0 = Σ_m pr(Y=1|1,m,c) pr(m|0,c)`:
//!
//! * `NDE_RR = y1m0 / pr(Y=1|0,c)`, `NIE_RR = pr(Y=1|1,c) / y1m0`
//! * `NDE_RD = y1m0 - pr(Y=1|0,c)`, `NIE_RD = pr(Y=1|1,c) - y1m0`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::StratumModel;

/// Relative tolerance for `TE = NDE × NIE` on the ratio scale.
pub const DECOMPOSITION_RR_TOL: f64 = 1e-12;
/// Absolute tolerance for `TE = NDE + NIE` on the difference scale.
pub const DECOMPOSITION_RD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectScale {
    RiskRatio,
    RiskDifference,
}

/// Direct, indirect and total effects on both scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effects {
    pub nde_rr: f64,
    pub nie_rr: f64,
    pub te_rr: f64,
    pub nde_rd: f64,
    pub nie_rd: f64,
    pub te_rd: f64,
}

impl Effects {
    /// Largest deviations from the two decomposition identities:
    /// `(relative RR error, absolute RD error)`.
    pub fn decomposition_error(&self) -> (f64, f64) {
        let rr = (self.te_rr - self.nde_rr * self.nie_rr).abs()
            / self.te_rr.abs().max(f64::MIN_POSITIVE);
        let rd = (self.te_rd - (self.nde_rd + self.nie_rd)).abs();
        (rr, rd)
    }

    pub fn decomposes(&self) -> bool {
        let (rr, rd) = self.decomposition_error();
        rr <= DECOMPOSITION_RR_TOL && rd <= DECOMPOSITION_RD_TOL
    }

    pub fn get(&self, scale: EffectScale) -> [f64; 3] {
        match scale {
            EffectScale::RiskRatio => [self.nde_rr, self.nie_rr, self.te_rr],
            EffectScale::RiskDifference => [self.nde_rd, self.nie_rd, self.te_rd],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedEffects {
    pub stratum: usize,
    #[serde(flatten)]
    pub effects: Effects,
}

fn cross_world(model: &StratumModel) -> f64 {
    model.mixed_mean(1, 0)
}

fn nonzero(value: f64, what: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::ZeroDenominator(what.to_string()))
    }
}

pub fn nde_rr_obs(model: &StratumModel) -> Result<f64> {
    let denom = nonzero(model.mixed_mean(0, 0), "NDE_RR: pr(Y=1 | A=0, c)")?;
    Ok(cross_world(model) / denom)
}

pub fn nie_rr_obs(model: &StratumModel) -> Result<f64> {
    let denom = nonzero(
        cross_world(model),
        "NIE_RR: Σ_m pr(Y=1 | 1, m, c) pr(m | 0, c)",
    )?;
    Ok(model.mixed_mean(1, 1) / denom)
}

pub fn nde_rd_obs(model: &StratumModel) -> f64 {
    model.y_prob[1]
        .iter()
        .zip(&model.y_prob[0])
        .zip(&model.m_prob[0])
        .map(|((y1, y0), m0)| (y1 - y0) * m0)
        .sum()
}

pub fn nie_rd_obs(model: &StratumModel) -> f64 {
    model.y_prob[1]
        .iter()
        .zip(model.m_prob[1].iter().zip(&model.m_prob[0]))
        .map(|(y1, (m1, m0))| y1 * (m1 - m0))
        .sum()
}

/// All six observed effects for one stratum.
///
/// The two totals are computed from `pr(Y=1 | a, c)`, and the difference
/// components reuse the same three sums so both decompositions hold up to
/// rounding; they are asserted before returning.
pub fn observed_effects(model: &StratumModel) -> Result<ObservedEffects> {
    let p0 = model.outcome_marginal(0);
    let p1 = model.outcome_marginal(1);
    let y1m0 = cross_world(model);
    let nde_rr = nde_rr_obs(model)?;
    let nie_rr = nie_rr_obs(model)?;
    let te_rr = p1 / nonzero(p0, "TE_RR: pr(Y=1 | A=0, c)")?;
    let effects = Effects {
        nde_rr,
        nie_rr,
        te_rr,
        nde_rd: y1m0 - p0,
        nie_rd: p1 - y1m0,
        te_rd: p1 - p0,
    };
    debug_assert!(effects.decomposes(), "decomposition failed: {effects:?}");
    Ok(ObservedEffects {
        stratum: model.c,
        effects,
    })
}

/// Averages a difference-scale effect over a stratum distribution.
///
/// `weights` pairs each stratum's value with its probability; weights must
/// be nonnegative and sum to one.
pub fn average_rd(values_and_weights: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = values_and_weights.iter().map(|(_, w)| w).sum();
    if values_and_weights.iter().any(|(_, w)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized {
            path: "stratum weights".into(),
            sum: total,
        });
    }
    Ok(values_and_weights.iter().map(|(v, w)| v * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{ConditionalModel, OutcomeMode};

    fn example() -> StratumModel {
        StratumModel::new(
            0,
            [vec![0.2, 0.5], vec![0.4, 0.8]],
            [vec![0.75, 0.25], vec![0.25, 0.75]],
        )
    }

    // Independent summation written term by term for the two-level example.
    fn hand_sums() -> (f64, f64, f64) {
        let y1m0 = 0.4 * 0.75 + 0.8 * 0.25;
        let y0m0 = 0.2 * 0.75 + 0.5 * 0.25;
        let y1m1 = 0.4 * 0.25 + 0.8 * 0.75;
        (y1m0, y0m0, y1m1)
    }

    #[test]
    fn worked_example() {
        let (y1m0, y0m0, y1m1) = hand_sums();
        let m = example();
        assert!((nde_rr_obs(&m).unwrap() - y1m0 / y0m0).abs() < 1e-15);
        assert!((nde_rr_obs(&m).unwrap() - 1.818182).abs() < 1e-6);
        assert!((nie_rr_obs(&m).unwrap() - 1.4).abs() < 1e-12);
        assert!((nie_rr_obs(&m).unwrap() - y1m1 / y1m0).abs() < 1e-15);
        assert!((nde_rd_obs(&m) - 0.225).abs() < 1e-12);
        assert!((nie_rd_obs(&m) - 0.2).abs() < 1e-12);
        let e = observed_effects(&m).unwrap().effects;
        assert!((e.te_rr - 2.545455).abs() < 1e-6);
        assert!((e.te_rr - 0.7 / 0.275).abs() < 1e-12);
        assert!(e.decomposes());
    }

    #[test]
    fn no_direct_pathway() {
        let m = StratumModel::new(
            0,
            [vec![0.4, 0.8], vec![0.4, 0.8]],
            [vec![0.75, 0.25], vec![0.25, 0.75]],
        );
        assert_eq!(nde_rr_obs(&m).unwrap(), 1.0);
        assert_eq!(nde_rd_obs(&m), 0.0);
    }

    #[test]
    fn degenerate_control_mediator() {
        let m = StratumModel::new(
            0,
            [vec![0.2, 0.5], vec![0.4, 0.8]],
            [vec![0.0, 1.0], vec![0.25, 0.75]],
        );
        assert!((nde_rr_obs(&m).unwrap() - 0.8 / 0.5).abs() < 1e-15);
        assert!((nde_rd_obs(&m) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn no_exposure_mediator_association() {
        let m = StratumModel::new(
            0,
            [vec![0.2, 0.5], vec![0.4, 0.8]],
            [vec![0.6, 0.4], vec![0.6, 0.4]],
        );
        assert_eq!(nie_rr_obs(&m).unwrap(), 1.0);
        assert_eq!(nie_rd_obs(&m), 0.0);
    }

    #[test]
    fn constant_exposed_outcome_cancels() {
        let m = StratumModel::new(
            0,
            [vec![0.2, 0.5], vec![0.6, 0.6]],
            [vec![0.75, 0.25], vec![0.25, 0.75]],
        );
        assert!((nie_rr_obs(&m).unwrap() - 1.0).abs() < 1e-15);
        assert!(nie_rd_obs(&m).abs() < 1e-15);
    }

    #[test]
    fn null_model() {
        let m = StratumModel::new(
            0,
            [vec![0.3, 0.6], vec![0.3, 0.6]],
            [vec![0.5, 0.5], vec![0.5, 0.5]],
        );
        let e = observed_effects(&m).unwrap().effects;
        assert_eq!(
            (e.nde_rr, e.nie_rr, e.te_rr, e.nde_rd, e.nie_rd, e.te_rd),
            (1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let m = StratumModel::new(
            0,
            [vec![0.0, 0.0], vec![0.4, 0.8]],
            [vec![0.75, 0.25], vec![0.25, 0.75]],
        );
        assert!(matches!(nde_rr_obs(&m), Err(Error::ZeroDenominator(_))));
        let m = StratumModel::new(
            0,
            [vec![0.1, 0.1], vec![0.0, 0.0]],
            [vec![0.75, 0.25], vec![0.25, 0.75]],
        );
        assert!(matches!(nie_rr_obs(&m), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn relabeling_exchanges_roles() {
        let m = example();
        let swapped = m.relabeled();
        // NDE of the relabeled problem: Σ y0·m1 / Σ y1·m1 in the original labels.
        let expected = (0.2 * 0.25 + 0.5 * 0.75) / (0.4 * 0.25 + 0.8 * 0.75);
        assert!((nde_rr_obs(&swapped).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn mean_ratio_mode_identities() {
        let s = StratumModel::new(
            0,
            [vec![1.5, 3.0], vec![2.5, 4.2]],
            [vec![0.6, 0.4], vec![0.3, 0.7]],
        );
        let model = ConditionalModel::new(OutcomeMode::MeanRatio, vec![s]).unwrap();
        let e = observed_effects(&model.strata[0]).unwrap().effects;
        assert!(e.decomposes());
        assert!(e.te_rd > 1.0);
    }

    #[test]
    fn averaging_rd() {
        let avg = average_rd(&[(0.2, 0.25), (0.4, 0.75)]).unwrap();
        assert!((avg - 0.35).abs() < 1e-15);
        assert!(average_rd(&[(0.2, 0.5), (0.4, 0.4)]).is_err());
    }
}
