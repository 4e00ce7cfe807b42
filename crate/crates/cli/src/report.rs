use medsens::bounds::{
    bound_nde_rd, bound_nie_rd, cornfield_rd, cornfield_rr, lower_bound_envelope,
    upper_bound_envelope, CornfieldThresholds, Envelope, Partner,
};
use medsens::identification::{average_rd, observed_effects};
use medsens::prob::StratumModel;
use serde::{Serialize, Serializer};

use crate::args::Scale;
use crate::bootstrap::BootstrapSummary;
use crate::error::CliError;
use crate::input::{Estimate, InputDigest};

pub const SCHEMA: &str = "medsens.report/v1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes non-finite values as the strings `"inf"`, `"-inf"` and `"nan"`,
/// which JSON numbers cannot carry.
pub fn real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&real_text(*v))
    }
}

pub fn real_text(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub schema: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: InputSummary,
    pub settings: Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<Sensitivity>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub strata: Vec<StratumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelopes: Option<Envelopes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimates: Option<EstimatesReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
    pub warnings: Vec<String>,
}

impl ReportDocument {
    pub fn new(command: &'static str, input: InputSummary, settings: Settings) -> Self {
        Self {
            schema: SCHEMA,
            version: VERSION,
            command,
            input,
            settings,
            sensitivity: None,
            strata: Vec::new(),
            envelopes: None,
            estimates: None,
            bootstrap: None,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSummary {
    Records(InputDigest),
    Estimates,
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub scale: Scale,
    pub smoothing: f64,
    pub relabeled_exposure: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sensitivity {
    #[serde(serialize_with = "real")]
    pub rr_au: f64,
    #[serde(serialize_with = "real")]
    pub rr_uy: f64,
    #[serde(serialize_with = "real")]
    pub bf: f64,
}

/// Effects on one scale, with optional bounds and thresholds.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleBlock {
    pub nde: f64,
    pub nie: f64,
    pub te: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nde_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nie_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cornfield: Option<CornfieldBlock>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CornfieldBlock {
    pub target: f64,
    /// Both sensitivity parameters must exceed this.
    #[serde(serialize_with = "real")]
    pub both_must_exceed: f64,
    /// The larger sensitivity parameter must exceed this.
    #[serde(serialize_with = "real")]
    pub max_must_exceed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner: Option<PartnerBlock>,
}

impl CornfieldBlock {
    pub fn new(target: f64, t: CornfieldThresholds) -> Self {
        Self {
            target,
            both_must_exceed: t.both_must_exceed,
            max_must_exceed: t.max_must_exceed,
            partner: None,
        }
    }
}

/// The smallest confounder-outcome parameter that, paired with a capped
/// collider-bias parameter, reaches the required bounding factor.
#[derive(Debug, Clone, Serialize)]
pub struct PartnerBlock {
    pub rr_au_cap: f64,
    pub required_bf: f64,
    pub rr_uy: Partner,
}

#[derive(Debug, Clone, Serialize)]
pub struct StratumReport {
    pub stratum: usize,
    pub count: u64,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rr: Option<ScaleBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rd: Option<ScaleBlock>,
}

impl StratumReport {
    /// Observed effects on the requested scales; bounds are added when `bf`
    /// is given.
    pub fn build(
        model: &StratumModel,
        count: u64,
        weight: f64,
        scale: Scale,
        bf: Option<f64>,
    ) -> Result<Self, CliError> {
        let e = observed_effects(model)?.effects;
        let rr = scale.rr().then(|| ScaleBlock {
            nde: e.nde_rr,
            nie: e.nie_rr,
            te: e.te_rr,
            nde_lower: bf.map(|bf| e.nde_rr / bf),
            nie_upper: bf.map(|bf| e.nie_rr * bf),
            cornfield: None,
        });
        let rd = scale.rd().then(|| ScaleBlock {
            nde: e.nde_rd,
            nie: e.nie_rd,
            te: e.te_rd,
            nde_lower: bf.map(|bf| bound_nde_rd(model, bf)),
            nie_upper: bf.map(|bf| bound_nie_rd(model, bf)),
            cornfield: None,
        });
        Ok(Self {
            stratum: model.c,
            count,
            weight,
            rr,
            rd,
        })
    }

    pub fn add_cornfield(
        &mut self,
        model: &StratumModel,
        target_rr: f64,
        target_rd: f64,
    ) -> Result<(), CliError> {
        if let Some(rr) = &mut self.rr {
            rr.cornfield = Some(CornfieldBlock::new(
                target_rr,
                cornfield_rr(rr.nde, target_rr)?,
            ));
        }
        if let Some(rd) = &mut self.rd {
            rd.cornfield = Some(CornfieldBlock::new(
                target_rd,
                cornfield_rd(model, target_rd)?,
            ));
        }
        Ok(())
    }
}

/// Bounds on the unconditional effects, across strata.
#[derive(Debug, Clone, Serialize)]
pub struct Envelopes {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nde_rr_lower: Option<Envelope>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nie_rr_upper: Option<Envelope>,
    /// Stratum-weighted average of the difference-scale lower bounds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nde_rd_lower_average: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nie_rd_upper_average: Option<f64>,
}

impl Envelopes {
    pub fn from_strata(strata: &[StratumReport]) -> Result<Option<Self>, CliError> {
        if strata.is_empty() {
            return Ok(None);
        }
        let pick = |f: &dyn Fn(&StratumReport) -> Option<f64>| {
            strata.iter().map(f).collect::<Option<Vec<f64>>>()
        };
        let nde_rr = pick(&|s| s.rr.as_ref()?.nde_lower);
        let nie_rr = pick(&|s| s.rr.as_ref()?.nie_upper);
        let weighted =
            |f: &dyn Fn(&StratumReport) -> Option<f64>| -> Result<Option<f64>, CliError> {
                match strata
                    .iter()
                    .map(|s| Some((f(s)?, s.weight)))
                    .collect::<Option<Vec<_>>>()
                {
                    Some(pairs) => Ok(Some(average_rd(&pairs)?)),
                    None => Ok(None),
                }
            };
        let env = Self {
            nde_rr_lower: nde_rr.as_deref().and_then(lower_bound_envelope),
            nie_rr_upper: nie_rr.as_deref().and_then(upper_bound_envelope),
            nde_rd_lower_average: weighted(&|s| s.rd.as_ref()?.nde_lower)?,
            nie_rd_upper_average: weighted(&|s| s.rd.as_ref()?.nie_upper)?,
        };
        let empty = env.nde_rr_lower.is_none()
            && env.nie_rr_upper.is_none()
            && env.nde_rd_lower_average.is_none()
            && env.nie_rd_upper_average.is_none();
        Ok((!empty).then_some(env))
    }
}

/// Bounds and thresholds computed from published estimates.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatesReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nde_rr: Option<EstimateBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nie_rr: Option<EstimateBlock>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateBlock {
    pub observed: Estimate,
    /// Point and limits divided (NDE) or multiplied (NIE) by the bounding factor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjusted: Option<Estimate>,
    /// Thresholds for the point estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cornfield: Option<CornfieldBlock>,
    /// Thresholds for the confidence limit nearer the target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cornfield_ci: Option<CornfieldBlock>,
}

impl EstimateBlock {
    pub fn observed(observed: Estimate) -> Self {
        Self {
            observed,
            adjusted: None,
            cornfield: None,
            cornfield_ci: None,
        }
    }
}
