//! Bounding factor, sharp bounds on the true effects, and Cornfield-type
//! thresholds.
//!
//! The two sensitivity parameters are `rr_au`, the largest exposure-confounder
//! risk ratio induced within mediator strata (collider bias), and `rr_uy`, the
//! largest confounder-outcome risk ratio among the exposed within mediator
//! strata. They combine into the bounding factor
//!
//! ```text
//! BF = rr_au · rr_uy / (rr_au + rr_uy − 1)
//! ```
//!
//! which caps how far unmeasured mediator-outcome confounding can inflate the
//! observed natural direct effect on the ratio scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identification::{observed_effects, ObservedEffects};
use crate::prob::StratumModel;

/// Strength of unmeasured mediator-outcome confounding. Either parameter may
/// be `f64::INFINITY` to leave it unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySpec {
    pub rr_au: f64,
    pub rr_uy: f64,
}

impl SensitivitySpec {
    pub fn new(rr_au: f64, rr_uy: f64) -> Result<Self> {
        check_parameter("rr_au", rr_au)?;
        check_parameter("rr_uy", rr_uy)?;
        Ok(Self { rr_au, rr_uy })
    }

    pub fn bounding_factor(&self) -> Result<f64> {
        bounding_factor(*self)
    }
}

fn check_parameter(name: &str, value: f64) -> Result<()> {
    if value.is_nan() || value < 1.0 {
        return Err(Error::BadParameter(format!(
            "{name} must be >= 1, got {value}"
        )));
    }
    Ok(())
}

/// `g(x, y) = xy / (x + y − 1)`, with `g(∞, y) = y` and `g(x, 1) = 1`.
pub fn bounding_factor(spec: SensitivitySpec) -> Result<f64> {
    let SensitivitySpec { rr_au: x, rr_uy: y } = spec;
    check_parameter("rr_au", x)?;
    check_parameter("rr_uy", y)?;
    if x == 1.0 || y == 1.0 {
        return Ok(1.0);
    }
    match (x.is_infinite(), y.is_infinite()) {
        (true, _) => Ok(y),
        (false, true) => Ok(x),
        (false, false) => Ok(x * y / (x + y - 1.0)),
    }
}

/// Lower bound on the true ratio-scale NDE: `NDE_obs / BF`.
pub fn adjust_nde_rr(nde_rr_obs: f64, bf: f64) -> f64 {
    nde_rr_obs / bf
}

/// Upper bound on the true ratio-scale NIE: `NIE_obs · BF`.
pub fn adjust_nie_rr(nie_rr_obs: f64, bf: f64) -> f64 {
    nie_rr_obs * bf
}

/// Lower bound on the true difference-scale NDE:
/// `Σ_m pr(Y=1|1,m,c) pr(m|0,c) / BF − pr(Y=1|0,c)`.
pub fn bound_nde_rd(model: &StratumModel, bf: f64) -> f64 {
    model.mixed_mean(1, 0) / bf - model.outcome_marginal(0)
}

/// Upper bound on the true difference-scale NIE:
/// `pr(Y=1|1,c) − Σ_m pr(Y=1|1,m,c) pr(m|0,c) / BF`.
pub fn bound_nie_rd(model: &StratumModel, bf: f64) -> f64 {
    model.outcome_marginal(1) - model.mixed_mean(1, 0) / bf
}

/// Minimum confounding strength needed to move an observed effect to a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornfieldThresholds {
    /// Both sensitivity parameters must exceed this.
    pub both_must_exceed: f64,
    /// The larger sensitivity parameter must exceed this.
    pub max_must_exceed: f64,
}

impl CornfieldThresholds {
    pub const NONE: Self = Self {
        both_must_exceed: 1.0,
        max_must_exceed: 1.0,
    };

    /// Thresholds implied by `BF ≥ ratio`. The larger parameter solves
    /// `t² / (2t − 1) = ratio`.
    pub fn from_ratio(ratio: f64) -> Self {
        if !(ratio > 1.0) {
            return Self::NONE;
        }
        if ratio.is_infinite() {
            return Self {
                both_must_exceed: f64::INFINITY,
                max_must_exceed: f64::INFINITY,
            };
        }
        Self {
            both_must_exceed: ratio,
            max_must_exceed: ratio + (ratio * (ratio - 1.0)).sqrt(),
        }
    }
}

/// Cornfield-type thresholds for reducing `nde_rr_obs` to `nde_rr_true`
/// (pass `1.0` to explain the effect away). Returns the trivial `(1, 1)` when
/// the observed effect does not exceed the target.
pub fn cornfield_rr(nde_rr_obs: f64, nde_rr_true: f64) -> Result<CornfieldThresholds> {
    if !(nde_rr_true > 0.0) {
        return Err(Error::BadTarget(nde_rr_true));
    }
    if !(nde_rr_obs > 0.0) {
        return Err(Error::BadParameter(format!(
            "observed NDE must be positive, got {nde_rr_obs}"
        )));
    }
    Ok(CornfieldThresholds::from_ratio(nde_rr_obs / nde_rr_true))
}

/// Difference-scale version: the bounding factor must exceed
/// `Δ = Σ_m pr(Y=1|1,m,c) pr(m|0,c) / (NDE_RD_true + pr(Y=1|0,c))`.
pub fn cornfield_rd(model: &StratumModel, nde_rd_true: f64) -> Result<CornfieldThresholds> {
    let denom = nde_rd_true + model.outcome_marginal(0);
    if !(denom > 0.0) {
        return Err(Error::ZeroDenominator(format!(
            "Cornfield RD: target NDE_RD + pr(Y=1 | A=0, c) = {denom}"
        )));
    }
    Ok(CornfieldThresholds::from_ratio(
        model.mixed_mean(1, 0) / denom,
    ))
}

/// Result of solving `BF(fixed, y) ≥ target` for the partner parameter `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Partner {
    Finite {
        value: f64,
    },
    /// No partner reaches the target: the bounding factor stays below `fixed`.
    Infeasible {
        cap: f64,
    },
}

impl Partner {
    pub fn value(&self) -> Option<f64> {
        match self {
            Partner::Finite { value } => Some(*value),
            Partner::Infeasible { .. } => None,
        }
    }
}

/// Smallest `y` with `bounding_factor(fixed, y) ≥ target_bf`.
pub fn required_partner(fixed: f64, target_bf: f64) -> Result<Partner> {
    check_parameter("fixed", fixed)?;
    check_parameter("target_bf", target_bf)?;
    if target_bf == 1.0 {
        return Ok(Partner::Finite { value: 1.0 });
    }
    if fixed.is_infinite() {
        return Ok(Partner::Finite { value: target_bf });
    }
    if fixed <= target_bf {
        return Ok(Partner::Infeasible { cap: fixed });
    }
    Ok(Partner::Finite {
        value: target_bf * (fixed - 1.0) / (fixed - target_bf),
    })
}

/// Stratum envelope of ratio-scale bounds on an unconditional effect.
///
/// `heterogeneous` is the conservative bound (effects may differ across
/// strata); `homogeneous` applies when a common conditional effect is assumed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub heterogeneous: f64,
    pub homogeneous: f64,
}

/// Envelope for lower bounds (NDE): heterogeneous = min, homogeneous = max.
pub fn lower_bound_envelope(bounds: &[f64]) -> Option<Envelope> {
    let min = bounds.iter().copied().reduce(f64::min)?;
    let max = bounds.iter().copied().reduce(f64::max)?;
    Some(Envelope {
        heterogeneous: min,
        homogeneous: max,
    })
}

/// Envelope for upper bounds (NIE): heterogeneous = max, homogeneous = min.
pub fn upper_bound_envelope(bounds: &[f64]) -> Option<Envelope> {
    let min = bounds.iter().copied().reduce(f64::min)?;
    let max = bounds.iter().copied().reduce(f64::max)?;
    Some(Envelope {
        heterogeneous: max,
        homogeneous: min,
    })
}

/// Observed effects, adjusted bounds and explain-away thresholds for a stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub stratum: usize,
    pub observed: ObservedEffects,
    pub spec: SensitivitySpec,
    pub bf: f64,
    pub nde_rr_lower: f64,
    pub nie_rr_upper: f64,
    pub nde_rd_lower: f64,
    pub nie_rd_upper: f64,
    pub cornfield_rr: CornfieldThresholds,
    pub cornfield_rd: CornfieldThresholds,
}

impl BoundReport {
    pub fn compute(model: &StratumModel, spec: SensitivitySpec) -> Result<Self> {
        let observed = observed_effects(model)?;
        let bf = bounding_factor(spec)?;
        Ok(Self {
            stratum: model.c,
            observed,
            spec,
            bf,
            nde_rr_lower: adjust_nde_rr(observed.effects.nde_rr, bf),
            nie_rr_upper: adjust_nie_rr(observed.effects.nie_rr, bf),
            nde_rd_lower: bound_nde_rd(model, bf),
            nie_rd_upper: bound_nie_rd(model, bf),
            cornfield_rr: cornfield_rr(observed.effects.nde_rr, 1.0)?,
            cornfield_rd: cornfield_rd(model, 0.0)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(x: f64, y: f64) -> SensitivitySpec {
        SensitivitySpec::new(x, y).unwrap()
    }

    fn bf(x: f64, y: f64) -> f64 {
        bounding_factor(spec(x, y)).unwrap()
    }

    fn example() -> StratumModel {
        StratumModel::new(
            0,
            [vec![0.2, 0.5], vec![0.4, 0.8]],
            [vec![0.75, 0.25], vec![0.25, 0.75]],
        )
    }

    #[test]
    fn bounding_factor_values() {
        for x in [1.0, 1.5, 7.0, f64::INFINITY] {
            assert_eq!(bf(1.0, x), 1.0);
            assert_eq!(bf(x, 1.0), 1.0);
        }
        assert_eq!(bf(2.0, 3.0), 1.5);
        assert!((bf(1.4, 8.933) - 1.34).abs() < 1e-3);
        assert_eq!(bf(f64::INFINITY, 2.5), 2.5);
        assert_eq!(bf(2.5, f64::INFINITY), 2.5);
        assert_eq!(bf(f64::INFINITY, f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn bad_parameters() {
        assert!(SensitivitySpec::new(0.9, 2.0).is_err());
        assert!(SensitivitySpec::new(2.0, f64::NAN).is_err());
        assert!(bounding_factor(SensitivitySpec {
            rr_au: 0.5,
            rr_uy: 2.0
        })
        .is_err());
        assert!(required_partner(0.99, 1.2).is_err());
    }

    #[test]
    fn adjustments() {
        assert_eq!(adjust_nde_rr(1.72, 1.0), 1.72);
        assert!((adjust_nde_rr(1.72, 1.5) - 1.146667).abs() < 1e-6);
        let ci = (adjust_nde_rr(1.34, 1.2), adjust_nde_rr(2.21, 1.2));
        assert!((ci.0 - 1.116667).abs() < 1e-6);
        assert!((ci.1 - 1.841667).abs() < 1e-6);
        assert_eq!(adjust_nie_rr(1.03, 1.0), 1.03);
        assert!((adjust_nie_rr(1.4, 1.5) - 2.1).abs() < 1e-12);
    }

    #[test]
    fn difference_scale_bounds() {
        let m = example();
        assert!((bound_nde_rd(&m, 1.0) - 0.225).abs() < 1e-12);
        assert!((bound_nde_rd(&m, 1.25) - 0.125).abs() < 1e-12);
        assert!((bound_nde_rd(&m, f64::INFINITY) + 0.275).abs() < 1e-12);
        assert!((bound_nie_rd(&m, 1.0) - 0.2).abs() < 1e-12);
        assert!((bound_nie_rd(&m, 1.25) - 0.3).abs() < 1e-12);
        for b in [1.0, 1.25, 3.0] {
            let te = m.outcome_marginal(1) - m.outcome_marginal(0);
            assert!((bound_nde_rd(&m, b) + bound_nie_rd(&m, b) - te).abs() < 1e-15);
        }
    }

    #[test]
    fn cornfield_ratio_scale() {
        let t = cornfield_rr(1.72, 1.0).unwrap();
        assert!((t.both_must_exceed - 1.72).abs() < 1e-12);
        assert!((t.max_must_exceed - (1.72 + (1.72f64 * 0.72).sqrt())).abs() < 1e-12);
        assert_eq!(cornfield_rr(1.3, 1.3).unwrap(), CornfieldThresholds::NONE);
        assert_eq!(cornfield_rr(0.8, 1.0).unwrap(), CornfieldThresholds::NONE);
        assert!(matches!(cornfield_rr(1.5, 0.0), Err(Error::BadTarget(_))));
    }

    #[test]
    fn cornfield_difference_scale() {
        let m = example();
        let null = cornfield_rd(&m, 0.0).unwrap();
        let rr = cornfield_rr(0.5 / 0.275, 1.0).unwrap();
        assert!((null.both_must_exceed - rr.both_must_exceed).abs() < 1e-12);
        assert!((null.max_must_exceed - rr.max_must_exceed).abs() < 1e-12);

        let t = cornfield_rd(&m, 0.125).unwrap();
        assert!((t.both_must_exceed - 1.25).abs() < 1e-12);
        assert!((t.max_must_exceed - 1.809017).abs() < 1e-6);

        // Target equal to the observed effect: nothing to explain.
        assert_eq!(cornfield_rd(&m, 0.225).unwrap(), CornfieldThresholds::NONE);
        assert!(matches!(
            cornfield_rd(&m, -0.275),
            Err(Error::ZeroDenominator(_))
        ));
    }

    #[test]
    fn partner_solutions() {
        let p = required_partner(1.40, 1.34).unwrap().value().unwrap();
        assert!((p - 8.93).abs() < 0.005);
        assert_eq!(
            required_partner(3.0, 1.0).unwrap(),
            Partner::Finite { value: 1.0 }
        );
        assert_eq!(
            required_partner(1.40, 1.72).unwrap(),
            Partner::Infeasible { cap: 1.40 }
        );
        assert_eq!(
            required_partner(f64::INFINITY, 2.0).unwrap(),
            Partner::Finite { value: 2.0 }
        );
    }

    #[test]
    fn report_matches_components() {
        let r = BoundReport::compute(&example(), spec(2.0, 3.0)).unwrap();
        assert_eq!(r.bf, 1.5);
        assert_eq!(r.nde_rr_lower, r.observed.effects.nde_rr / 1.5);
        assert_eq!(r.nie_rr_upper, r.observed.effects.nie_rr * 1.5);
        assert_eq!(
            r.cornfield_rr,
            cornfield_rr(r.observed.effects.nde_rr, 1.0).unwrap()
        );
    }

    #[test]
    fn envelopes() {
        let e = lower_bound_envelope(&[1.2, 0.9, 1.5]).unwrap();
        assert_eq!((e.heterogeneous, e.homogeneous), (0.9, 1.5));
        let e = upper_bound_envelope(&[1.2, 0.9, 1.5]).unwrap();
        assert_eq!((e.heterogeneous, e.homogeneous), (1.5, 0.9));
        assert!(lower_bound_envelope(&[]).is_none());
    }

    fn param() -> impl Strategy<Value = f64> {
        prop_oneof![
            9 => 1.0f64..100.0,
            1 => Just(1.0),
        ]
    }

    proptest! {
        #[test]
        fn monotone_in_each_argument(x in param(), y in param(), dx in 0.0f64..10.0, dy in 0.0f64..10.0) {
            prop_assert!(bf(x + dx, y) >= bf(x, y) - 1e-12);
            prop_assert!(bf(x, y + dy) >= bf(x, y) - 1e-12);
        }

        #[test]
        fn capped_by_smaller_parameter(x in param(), y in param()) {
            let b = bf(x, y);
            prop_assert!(b >= 1.0);
            prop_assert!(b <= x.min(y) * (1.0 + 1e-15));
            if x.min(y) > 1.0 {
                prop_assert!(b < x.min(y));
            }
        }

        #[test]
        fn symmetric(x in param(), y in param()) {
            prop_assert_eq!(bf(x, y), bf(y, x));
        }

        #[test]
        fn partner_inverts(fixed in 1.0f64..50.0, frac in 0.0f64..0.999) {
            let target = 1.0 + (fixed - 1.0) * frac;
            match required_partner(fixed, target).unwrap() {
                Partner::Finite { value } => {
                    prop_assert!(value >= 1.0);
                    prop_assert!((bf(fixed, value) - target).abs() <= 1e-9 * target);
                }
                Partner::Infeasible { .. } => prop_assert!(fixed <= target),
            }
        }

        #[test]
        fn thresholds_are_ordered(r in 1.0f64..100.0) {
            let t = CornfieldThresholds::from_ratio(r);
            prop_assert!(t.max_must_exceed >= t.both_must_exceed);
            if r > 1.0 {
                prop_assert!(t.max_must_exceed > t.both_must_exceed);
            }
            let at_threshold = bf(t.max_must_exceed, t.max_must_exceed);
            prop_assert!((at_threshold - r).abs() <= 1e-9 * r);
        }
    }
}
