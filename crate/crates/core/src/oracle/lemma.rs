use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::NORMALIZATION_TOL;

const LEMMA_TOL: f64 = 1e-12;

/// Two distributions on a finite set and a positive weight function:
/// the discrete setting of the ratio inequality
/// `Σ r f1 / Σ r f0 ≤ γδ / (γ + δ − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRatioInstance {
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
    pub r: Vec<f64>,
}

impl DiscreteRatioInstance {
    pub fn new(f0: Vec<f64>, f1: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        let n = f0.len();
        if n == 0 || f1.len() != n || r.len() != n {
            return Err(Error::Shape(
                "f0, f1 and r need the same positive length".into(),
            ));
        }
        for (name, f) in [("f0", &f0), ("f1", &f1)] {
            if f.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::BadParameter(format!(
                    "{name} has an entry outside [0, 1]"
                )));
            }
            let sum: f64 = f.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized {
                    path: name.into(),
                    sum,
                });
            }
        }
        if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::BadParameter(
                "r must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { f0, f1, r })
    }

    /// `max_x f1(x) / f0(x)`; infinite if `f1` puts mass where `f0` does not.
    pub fn gamma(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (p1, p0) in self.f1.iter().zip(&self.f0) {
            if *p0 > 0.0 {
                best = best.max(p1 / p0);
            } else if *p1 > 0.0 {
                return f64::INFINITY;
            }
        }
        best.max(1.0)
    }

    /// `max r / min r`, taken as 1 for a constant `r`.
    pub fn delta(&self) -> f64 {
        let hi = self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.r.iter().copied().fold(f64::INFINITY, f64::min);
        if hi == lo {
            1.0
        } else if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub gamma: f64,
    pub delta: f64,
    pub holds: bool,
}

fn joint_factor(gamma: f64, delta: f64) -> f64 {
    if gamma == 1.0 || delta == 1.0 {
        1.0
    } else if gamma.is_infinite() {
        delta
    } else if delta.is_infinite() {
        gamma
    } else {
        gamma * delta / (gamma + delta - 1.0)
    }
}

pub fn lemma3_check(inst: &DiscreteRatioInstance) -> Result<Lemma3Outcome> {
    let num: f64 = inst.r.iter().zip(&inst.f1).map(|(r, f)| r * f).sum();
    let den: f64 = inst.r.iter().zip(&inst.f0).map(|(r, f)| r * f).sum();
    if !(den > 0.0) || !num.is_finite() {
        return Err(Error::ZeroDenominator("Σ r·f0".into()));
    }
    let lhs = num / den;
    let gamma = inst.gamma();
    let delta = inst.delta();
    let rhs = joint_factor(gamma, delta);
    Ok(Lemma3Outcome {
        lhs,
        rhs,
        gamma,
        delta,
        holds: lhs <= rhs + LEMMA_TOL,
    })
}

/// The two-point instance that attains the bound:
/// `f1 = (0, 1)`, `f0 = (1 − 1/γ, 1/γ)`, `r = (1, δ)`.
pub fn bernoulli_instance(gamma: f64, delta: f64) -> Result<DiscreteRatioInstance> {
    if !(gamma >= 1.0 && gamma.is_finite() && delta >= 1.0 && delta.is_finite()) {
        return Err(Error::BadParameter(format!(
            "need finite γ, δ ≥ 1, got ({gamma}, {delta})"
        )));
    }
    DiscreteRatioInstance::new(
        vec![1.0 - 1.0 / gamma, 1.0 / gamma],
        vec![0.0, 1.0],
        vec![1.0, delta],
    )
}

fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// A random instance on `size` points with weights spread over `[e^-3, e^3]`.
pub fn random_instance<R: Rng>(rng: &mut R, size: usize) -> DiscreteRatioInstance {
    let f0 = random_simplex(rng, size);
    let f1 = random_simplex(rng, size);
    let r = (0..size)
        .map(|_| rng.gen_range(-3.0f64..3.0).exp())
        .collect();
    DiscreteRatioInstance { f0, f1, r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_weights() {
        let inst =
            DiscreteRatioInstance::new(vec![0.2, 0.8], vec![0.6, 0.4], vec![2.0, 2.0]).unwrap();
        let out = lemma3_check(&inst).unwrap();
        assert!((out.lhs - 1.0).abs() < 1e-15);
        assert_eq!(out.delta, 1.0);
        assert_eq!(out.rhs, 1.0);
        assert!(out.holds);
    }

    #[test]
    fn equal_distributions() {
        let inst =
            DiscreteRatioInstance::new(vec![0.3, 0.7], vec![0.3, 0.7], vec![1.0, 5.0]).unwrap();
        let out = lemma3_check(&inst).unwrap();
        assert!((out.lhs - 1.0).abs() < 1e-15);
        assert_eq!(out.gamma, 1.0);
        assert_eq!(out.rhs, 1.0);
    }

    #[test]
    fn bernoulli_attains() {
        for (g, d) in [(2.0, 3.0), (1.5, 1.5), (10.0, 1.2), (1.0, 4.0), (7.3, 7.3)] {
            let out = lemma3_check(&bernoulli_instance(g, d).unwrap()).unwrap();
            assert!((out.lhs - out.rhs).abs() < 1e-12, "{g} {d}: {out:?}");
            assert!((out.gamma - g).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weight_denominator() {
        let inst =
            DiscreteRatioInstance::new(vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            lemma3_check(&inst),
            Err(Error::ZeroDenominator(_))
        ));
    }

    #[test]
    fn unbounded_gamma_reduces_to_delta() {
        let inst =
            DiscreteRatioInstance::new(vec![1.0, 0.0], vec![0.5, 0.5], vec![1.0, 3.0]).unwrap();
        let out = lemma3_check(&inst).unwrap();
        assert_eq!(out.gamma, f64::INFINITY);
        assert_eq!(out.rhs, 3.0);
        assert!((out.lhs - 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn random_instances_hold(seed in any::<u64>(), size in 2usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = lemma3_check(&random_instance(&mut rng, size)).unwrap();
            prop_assert!(out.holds, "{:?}", out);
        }

        #[test]
        fn bernoulli_family_attains(g in 1.0f64..50.0, d in 1.0f64..50.0) {
            let out = lemma3_check(&bernoulli_instance(g, d).unwrap()).unwrap();
            prop_assert!((out.lhs - out.rhs).abs() < 1e-12);
        }
    }
}
