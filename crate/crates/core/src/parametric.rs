//! The collider-bias parameter under parametric mediator models.
//!
//! For a binary mediator following the log-linear model
//! `pr(M=1 | a, c, u) = exp(β0 + β1·a + βc + β3·u)` with `U ~ Bernoulli(1/2)`
//! independent of `(A, C)`, the marginal model is again log-linear with
//! intercept `β0' = β0 + K(β3)`, where `K(t) = log((1 + e^t) / 2)` is the
//! cumulant generating function of `U`. Stratum `M=1` carries no collider
//! bias; stratum `M=0` does, and its maximum over `u` sits at `u=0` when
//! `β1·β3 ≥ 0` and at `u=1` otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log((1 + e^t) / 2)`, evaluated without overflow for large `|t|`.
pub fn cumulant_k(t: f64) -> f64 {
    // softplus(t) − log 2
    t.max(0.0) + (-t.abs()).exp().ln_1p() - std::f64::consts::LN_2
}

/// Coefficients of the conditional log-linear mediator model for one stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLinearSpec {
    pub beta0: f64,
    pub beta1: f64,
    /// The stratum's covariate contribution `β2ᵀc`, as a scalar offset.
    pub beta_c: f64,
    pub beta3: f64,
}

impl LogLinearSpec {
    pub fn new(beta0: f64, beta1: f64, beta_c: f64, beta3: f64) -> Result<Self> {
        let spec = Self {
            beta0,
            beta1,
            beta_c,
            beta3,
        };
        spec.check_feasible()?;
        Ok(spec)
    }

    /// Intercept of the marginal model of `M` given `(A, C)`.
    pub fn marginal_intercept(&self) -> f64 {
        self.beta0 + cumulant_k(self.beta3)
    }

    /// `pr(M=1 | a, c, u)`.
    pub fn conditional_prob(&self, a: u8, u: u8) -> f64 {
        (self.beta0 + self.beta_c + self.beta1 * a as f64 + self.beta3 * u as f64).exp()
    }

    /// `pr(M=1 | a, c)` from the marginal log-linear model.
    pub fn marginal_prob(&self, a: u8) -> f64 {
        (self.marginal_intercept() + self.beta_c + self.beta1 * a as f64).exp()
    }

    /// Every linear predictor (conditional and marginal) must be negative so
    /// that `pr(M=1 | ·) < 1` and `pr(M=0 | ·) > 0`.
    pub fn check_feasible(&self) -> Result<()> {
        let values = [self.beta0, self.beta1, self.beta_c, self.beta3];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InfeasibleModel("coefficients must be finite".into()));
        }
        let worst = self.beta0 + self.beta_c + self.beta1.max(0.0) + self.beta3.max(0.0);
        if worst >= 0.0 {
            return Err(Error::InfeasibleModel(format!(
                "largest conditional linear predictor is {worst} (needs < 0)"
            )));
        }
        let marginal = self.marginal_intercept() + self.beta_c + self.beta1.max(0.0);
        if marginal >= 0.0 {
            return Err(Error::InfeasibleModel(format!(
                "largest marginal linear predictor is {marginal} (needs < 0)"
            )));
        }
        Ok(())
    }
}

/// Closed-form `RR_AU|(M,c)` under the log-linear model.
pub fn rr_au_loglinear(spec: &LogLinearSpec) -> Result<f64> {
    spec.check_feasible()?;
    let b = spec;
    let level = if b.beta1 * b.beta3 >= 0.0 {
        b.beta0 + b.beta_c
    } else {
        b.beta0 + b.beta_c + b.beta3
    };
    let marginal = b.marginal_intercept() + b.beta_c;
    let conditional_rr0 = (-(level + b.beta1).exp_m1()) / (-level.exp_m1());
    let marginal_rr0 = (-(marginal + b.beta1).exp_m1()) / (-marginal.exp_m1());
    Ok((conditional_rr0 / marginal_rr0).max(1.0))
}

/// `RR_AU|(M,c)` evaluated from its definition: the largest posterior ratio
/// `pr(u | A=1, m, c) / pr(u | A=0, m, c)` over `m, u ∈ {0, 1}`, with the
/// posterior computed by Bayes' rule from the conditional model and the
/// Bernoulli(1/2) prior on `U`.
pub fn rr_au_loglinear_bruteforce(spec: &LogLinearSpec) -> Result<f64> {
    spec.check_feasible()?;
    // pr(m | a, u) for m, a, u ∈ {0, 1}.
    let pm = |m: u8, a: u8, u: u8| {
        let p1 = spec.conditional_prob(a, u);
        if m == 1 {
            p1
        } else {
            1.0 - p1
        }
    };
    let prior = [0.5, 0.5];
    let mut best = f64::NEG_INFINITY;
    for m in 0..2u8 {
        let posterior = |a: u8| {
            let joint = [prior[0] * pm(m, a, 0), prior[1] * pm(m, a, 1)];
            let total = joint[0] + joint[1];
            [joint[0] / total, joint[1] / total]
        };
        let (post1, post0) = (posterior(1), posterior(0));
        for u in 0..2 {
            best = best.max(post1[u] / post0[u]);
        }
    }
    Ok(best)
}

/// `p[a][u] = pr(m | A=a, u)` for one fixed mediator level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediatorProbGrid {
    p: [Vec<f64>; 2],
}

impl MediatorProbGrid {
    pub fn new(unexposed: Vec<f64>, exposed: Vec<f64>) -> Result<Self> {
        if unexposed.is_empty() || unexposed.len() != exposed.len() {
            return Err(Error::Shape(
                "mediator grid rows must be nonempty and of equal length".into(),
            ));
        }
        for (a, row) in [&unexposed, &exposed].into_iter().enumerate() {
            for (u, &v) in row.iter().enumerate() {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::OutOfRangeProbability {
                        path: format!("p[{a}][{u}]"),
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            p: [unexposed, exposed],
        })
    }

    pub fn get(&self, a: usize, u: usize) -> f64 {
        self.p[a][u]
    }

    pub fn u_levels(&self) -> usize {
        self.p[0].len()
    }
}

/// Largest `A`-`U` interaction on the mediator, on the ratio scale:
/// `max_{u≠u'} p[1][u] p[0][u'] / (p[0][u] p[1][u'])`. With a single
/// confounder level there is nothing to interact and the result is 1.
pub fn interaction_bound(grid: &MediatorProbGrid) -> f64 {
    let k = grid.u_levels();
    let mut best: f64 = 1.0;
    for u in 0..k {
        for v in 0..k {
            if u != v {
                let ratio = grid.get(1, u) * grid.get(0, v) / (grid.get(0, u) * grid.get(1, v));
                best = best.max(ratio);
            }
        }
    }
    best
}

/// Coefficient rows `(β0, β1)` and `β3` columns of the reference grid.
pub const TABLE_ROWS: [(f64, f64); 6] = [
    (-2.3, 0.2),
    (-2.0, 0.2),
    (-2.3, 0.4),
    (-2.0, 0.4),
    (-2.3, 0.7),
    (-2.0, 0.7),
];
pub const TABLE_BETA3: [f64; 7] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];

/// One cell of the reference grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub beta0: f64,
    pub beta1: f64,
    pub beta3: f64,
    pub rr_au: f64,
    pub rr_au_bruteforce: f64,
    /// `RR_AU / e^{β3}`.
    pub ratio_to_confounder: f64,
    /// `RR_AU / e^{β1}`.
    pub ratio_to_exposure: f64,
}

/// The `(β0, β1) × β3` grid relating the collider-bias parameter to the
/// confounder-mediator and exposure-mediator risk ratios, without covariates.
pub fn reference_grid() -> Result<Vec<TableCell>> {
    let mut cells = Vec::with_capacity(TABLE_ROWS.len() * TABLE_BETA3.len());
    for &(beta0, beta1) in &TABLE_ROWS {
        for &beta3 in &TABLE_BETA3 {
            let spec = LogLinearSpec::new(beta0, beta1, 0.0, beta3)?;
            let rr_au = rr_au_loglinear(&spec)?;
            cells.push(TableCell {
                beta0,
                beta1,
                beta3,
                rr_au,
                rr_au_bruteforce: rr_au_loglinear_bruteforce(&spec)?,
                ratio_to_confounder: rr_au / beta3.exp(),
                ratio_to_exposure: rr_au / beta1.exp(),
            });
        }
    }
    Ok(cells)
}
