use std::io::Write;

use medsens::bounds::{bounding_factor, cornfield_rr, required_partner, Partner, SensitivitySpec};
use medsens::oracle::{
    bernoulli_max_gap, definition_batch, lemma3_batch, sharpness_search, unexposed_batch,
    validity_batch, DefinitionBatch, Lemma3Batch, ScmSampler, SharpnessReport, ValidityBatch,
};
use medsens::parametric::reference_grid;
use serde::Serialize;

use crate::args::{
    BootstrapArgs, BoundArgs, Cli, Command, CornfieldArgs, Format, OracleArgs, Scale, SweepArgs,
};
use crate::bootstrap::{is_rr, run_bootstrap, BootstrapConfig};
use crate::error::{CliError, Status};
use crate::input::{Dataset, Estimates, Source};
use crate::output::{write_json, Cell, Table};
use crate::report::{
    CornfieldBlock, Envelopes, EstimateBlock, EstimatesReport, InputSummary, PartnerBlock,
    ReportDocument, Sensitivity, Settings, StratumReport, VERSION,
};

/// Runs one command, writing its report to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<Status, CliError> {
    if !(cli.smoothing.is_finite() && cli.smoothing >= 0.0) {
        return Err(CliError::Input(format!(
            "--smoothing must be finite and >= 0, got {}",
            cli.smoothing
        )));
    }
    match &cli.command {
        Command::Estimate(args) => {
            let data = Dataset::load(&args.data, cli.smoothing, cli.relabel_exposure)?;
            let mut doc = records_document("estimate", cli, &data);
            doc.strata = stratum_reports(&data, cli.scale, None)?;
            emit_document(out, cli, &doc)?;
            Ok(Status::Success)
        }
        Command::Bound(args) => bound(cli, args, out),
        Command::Cornfield(args) => cornfield(cli, args, out),
        Command::Sweep(args) => sweep(cli, args, out),
        Command::Parametric => parametric(cli, out),
        Command::Oracle(args) => oracle(cli, args, out),
        Command::Bootstrap(args) => bootstrap(cli, args, out),
    }
}

fn settings(cli: &Cli, seed: bool) -> Settings {
    Settings {
        scale: cli.scale,
        smoothing: cli.smoothing,
        relabeled_exposure: cli.relabel_exposure,
        seed: seed.then_some(cli.seed),
    }
}

fn records_document(command: &'static str, cli: &Cli, data: &Dataset) -> ReportDocument {
    let mut doc = ReportDocument::new(
        command,
        InputSummary::Records(data.digest.clone()),
        settings(cli, false),
    );
    if cli.relabel_exposure {
        doc.warnings
            .push("exposure codes were swapped: effects compare level 0 against level 1 of the original coding".into());
    }
    doc
}

fn estimates_document(command: &'static str, cli: &Cli) -> Result<ReportDocument, CliError> {
    let mut doc = ReportDocument::new(command, InputSummary::Estimates, settings(cli, false));
    match cli.scale {
        Scale::Rd => {
            return Err(CliError::Input(
                "difference-scale quantities need the full tables; pass --data".into(),
            ))
        }
        Scale::Both => doc.warnings.push(
            "published estimates carry only the risk-ratio scale; difference-scale output omitted"
                .into(),
        ),
        Scale::Rr => {}
    }
    Ok(doc)
}

fn stratum_reports(
    data: &Dataset,
    scale: Scale,
    bf: Option<f64>,
) -> Result<Vec<StratumReport>, CliError> {
    let weights = data.weights();
    data.model
        .strata
        .iter()
        .zip(&data.counts)
        .zip(weights)
        .map(|((s, &n), w)| StratumReport::build(s, n, w, scale, bf))
        .collect()
}

fn format_or(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

fn emit_document<W: Write>(out: &mut W, cli: &Cli, doc: &ReportDocument) -> Result<(), CliError> {
    match format_or(cli, Format::Json) {
        Format::Json => write_json(out, doc),
        Format::Csv => {
            for w in &doc.warnings {
                eprintln!("warning: {w}");
            }
            document_table(doc).write(out, Format::Csv)
        }
    }
}

// Flattens the per-stratum or per-estimate part of a report into rows.
fn document_table(doc: &ReportDocument) -> Table {
    if let Some(boot) = &doc.bootstrap {
        let mut t = Table::new(["stratum", "quantity", "estimate", "lower", "upper"]);
        for s in &boot.strata {
            for i in &s.intervals {
                t.push(vec![
                    Cell::Int(s.stratum as u64),
                    Cell::Text(i.quantity.into()),
                    i.estimate.into(),
                    i.lower.into(),
                    i.upper.into(),
                ]);
            }
        }
        return t;
    }
    if let Some(est) = &doc.estimates {
        let mut t = Table::new([
            "quantity",
            "point",
            "ci_lower",
            "ci_upper",
            "adjusted_point",
            "adjusted_ci_lower",
            "adjusted_ci_upper",
            "both_must_exceed",
            "max_must_exceed",
            "ci_both_must_exceed",
            "ci_max_must_exceed",
            "required_rr_uy",
            "ci_required_rr_uy",
        ]);
        for (name, block) in [("nde_rr", &est.nde_rr), ("nie_rr", &est.nie_rr)] {
            let Some(b) = block else { continue };
            let adj = b.adjusted.as_ref();
            let cf = b.cornfield.as_ref();
            let cf_ci = b.cornfield_ci.as_ref();
            t.push(vec![
                Cell::Text(name.into()),
                b.observed.point.into(),
                b.observed.ci_lower.into(),
                b.observed.ci_upper.into(),
                adj.map(|a| a.point).into(),
                adj.and_then(|a| a.ci_lower).into(),
                adj.and_then(|a| a.ci_upper).into(),
                cf.map(|c| c.both_must_exceed).into(),
                cf.map(|c| c.max_must_exceed).into(),
                cf_ci.map(|c| c.both_must_exceed).into(),
                cf_ci.map(|c| c.max_must_exceed).into(),
                partner_cell(cf),
                partner_cell(cf_ci),
            ]);
        }
        return t;
    }
    let mut headers = vec!["stratum".to_string(), "count".into(), "weight".into()];
    let first = doc.strata.first();
    for (suffix, present) in [
        ("rr", first.and_then(|s| s.rr.as_ref())),
        ("rd", first.and_then(|s| s.rd.as_ref())),
    ] {
        let Some(block) = present else { continue };
        for name in ["nde", "nie", "te"] {
            headers.push(format!("{name}_{suffix}"));
        }
        if block.nde_lower.is_some() {
            headers.push(format!("nde_{suffix}_lower"));
            headers.push(format!("nie_{suffix}_upper"));
        }
        if let Some(cf) = &block.cornfield {
            headers.push(format!("cornfield_{suffix}_both"));
            headers.push(format!("cornfield_{suffix}_max"));
            if cf.partner.is_some() {
                headers.push(format!("required_rr_uy_{suffix}"));
            }
        }
    }
    let mut t = Table::new(headers);
    for s in &doc.strata {
        let mut row = vec![
            Cell::Int(s.stratum as u64),
            Cell::Int(s.count),
            s.weight.into(),
        ];
        for block in [s.rr.as_ref(), s.rd.as_ref()].into_iter().flatten() {
            row.extend([block.nde.into(), block.nie.into(), block.te.into()]);
            if block.nde_lower.is_some() {
                row.extend([block.nde_lower.into(), block.nie_upper.into()]);
            }
            if let Some(cf) = &block.cornfield {
                row.extend([cf.both_must_exceed.into(), cf.max_must_exceed.into()]);
                if cf.partner.is_some() {
                    row.push(partner_cell(Some(cf)));
                }
            }
        }
        t.push(row);
    }
    t
}

fn partner_cell(cf: Option<&CornfieldBlock>) -> Cell {
    match cf.and_then(|c| c.partner.as_ref()).map(|p| p.rr_uy) {
        Some(Partner::Finite { value }) => Cell::Num(value),
        Some(Partner::Infeasible { .. }) => Cell::Text("infeasible".into()),
        None => Cell::Empty,
    }
}

fn bound<W: Write>(cli: &Cli, args: &BoundArgs, out: &mut W) -> Result<Status, CliError> {
    let spec = SensitivitySpec::new(args.rr_au, args.rr_uy)?;
    let bf = bounding_factor(spec)?;
    let source = Source::load(&args.source, cli.smoothing, cli.relabel_exposure)?;
    let mut doc = match &source {
        Source::Records(data) => {
            let mut doc = records_document("bound", cli, data);
            doc.strata = stratum_reports(data, cli.scale, Some(bf))?;
            doc.envelopes = Envelopes::from_strata(&doc.strata)?;
            doc
        }
        Source::Estimates(est) => {
            let mut doc = estimates_document("bound", cli)?;
            doc.estimates = Some(EstimatesReport {
                nde_rr: est.nde_rr.map(|e| EstimateBlock {
                    adjusted: Some(e.map(|v| v / bf)),
                    ..EstimateBlock::observed(e)
                }),
                nie_rr: est.nie_rr.map(|e| EstimateBlock {
                    adjusted: Some(e.map(|v| v * bf)),
                    ..EstimateBlock::observed(e)
                }),
            });
            doc
        }
    };
    doc.sensitivity = Some(Sensitivity {
        rr_au: spec.rr_au,
        rr_uy: spec.rr_uy,
        bf,
    });
    emit_document(out, cli, &doc)?;
    Ok(Status::Success)
}

/// The partner value quoted for the capped example in published analyses,
/// kept here only so the report can explain why it is not reproduced.
const QUOTED_PARTNER: (f64, f64, f64) = (1.40, 1.72, 11.47);

fn infeasible_warning(what: &str, cap: f64, required: f64) -> String {
    let mut msg = format!(
        "{what}: with rr_au capped at {cap}, the bounding factor stays below {cap} for every rr_uy, \
         so it never reaches the required {required:.6}; no finite rr_uy suffices"
    );
    let (q_cap, q_required, q_partner) = QUOTED_PARTNER;
    if (cap - q_cap).abs() < 1e-9 && (required - q_required).abs() < 1e-9 {
        let bf = bounding_factor(SensitivitySpec {
            rr_au: cap,
            rr_uy: q_partner,
        })
        .unwrap_or(f64::NAN);
        let needed_au = required_partner(q_partner, required)
            .ok()
            .and_then(|p| p.value())
            .unwrap_or(f64::NAN);
        msg.push_str(&format!(
            ". The partner {q_partner} sometimes quoted for this case is inconsistent with the cap: \
             BF({cap}, {q_partner}) = {bf:.4}, and rr_uy = {q_partner} reaches {required} only when rr_au >= {needed_au:.4}"
        ));
    }
    msg
}

// Attaches the partner for a capped collider-bias parameter, recording a
// warning when none exists.
fn attach_partner(
    block: &mut CornfieldBlock,
    cap: Option<f64>,
    what: &str,
    warnings: &mut Vec<String>,
) -> Result<bool, CliError> {
    let Some(cap) = cap else { return Ok(true) };
    let required = block.both_must_exceed;
    let partner = required_partner(cap, required)?;
    if matches!(partner, Partner::Infeasible { .. }) {
        warnings.push(infeasible_warning(what, cap, required));
    }
    block.partner = Some(PartnerBlock {
        rr_au_cap: cap,
        required_bf: required,
        rr_uy: partner,
    });
    Ok(matches!(partner, Partner::Finite { .. }))
}

fn cornfield<W: Write>(cli: &Cli, args: &CornfieldArgs, out: &mut W) -> Result<Status, CliError> {
    let source = Source::load(&args.source, cli.smoothing, cli.relabel_exposure)?;
    let mut feasible = true;
    let doc = match &source {
        Source::Records(data) => {
            let mut doc = records_document("cornfield", cli, data);
            let mut strata = stratum_reports(data, cli.scale, None)?;
            for (report, model) in strata.iter_mut().zip(&data.model.strata) {
                report.add_cornfield(model, args.target_rr, args.target_rd)?;
                let c = report.stratum;
                for (suffix, block) in [("rr", report.rr.as_mut()), ("rd", report.rd.as_mut())] {
                    if let Some(cf) = block.and_then(|b| b.cornfield.as_mut()) {
                        feasible &= attach_partner(
                            cf,
                            args.rr_au_cap,
                            &format!("stratum {c}, nde_{suffix}"),
                            &mut doc.warnings,
                        )?;
                    }
                }
            }
            doc.strata = strata;
            doc
        }
        Source::Estimates(Estimates { nde_rr, .. }) => {
            let mut doc = estimates_document("cornfield", cli)?;
            let est = nde_rr.ok_or_else(|| {
                CliError::Input("cornfield thresholds need --nde-rr or --data".into())
            })?;
            let target = args.target_rr;
            let mut block = EstimateBlock::observed(est);
            let mut point = CornfieldBlock::new(target, cornfield_rr(est.point, target)?);
            feasible &= attach_partner(
                &mut point,
                args.rr_au_cap,
                "nde_rr point estimate",
                &mut doc.warnings,
            )?;
            block.cornfield = Some(point);
            if let Some(lo) = est.ci_lower {
                let mut ci = CornfieldBlock::new(target, cornfield_rr(lo, target)?);
                feasible &= attach_partner(
                    &mut ci,
                    args.rr_au_cap,
                    "nde_rr lower confidence limit",
                    &mut doc.warnings,
                )?;
                block.cornfield_ci = Some(ci);
            }
            doc.estimates = Some(EstimatesReport {
                nde_rr: Some(block),
                nie_rr: None,
            });
            doc
        }
    };
    emit_document(out, cli, &doc)?;
    Ok(if feasible {
        Status::Success
    } else {
        Status::Infeasible
    })
}

/// Ascending, finite grids of sensitivity parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub rr_au: Vec<f64>,
    pub rr_uy: Vec<f64>,
}

impl SweepGrid {
    pub fn new(rr_au: Vec<f64>, rr_uy: Vec<f64>) -> Result<Self, CliError> {
        for (name, values) in [("rr-au", &rr_au), ("rr-uy", &rr_uy)] {
            if values.is_empty() {
                return Err(CliError::Input(format!("--{name} grid is empty")));
            }
            if values.iter().any(|v| !(v.is_finite() && *v >= 1.0)) {
                return Err(CliError::Input(format!(
                    "--{name} values must be finite and >= 1"
                )));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Input(format!(
                    "--{name} values must be strictly ascending"
                )));
            }
        }
        Ok(Self { rr_au, rr_uy })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rr_au
            .iter()
            .flat_map(move |&x| self.rr_uy.iter().map(move |&y| (x, y)))
    }
}

fn sweep<W: Write>(cli: &Cli, args: &SweepArgs, out: &mut W) -> Result<Status, CliError> {
    let grid = SweepGrid::new(args.rr_au.clone(), args.rr_uy.clone())?;
    let source = Source::load(&args.source, cli.smoothing, cli.relabel_exposure)?;
    let table = match &source {
        Source::Records(data) => {
            let mut headers = vec!["stratum", "rr_au", "rr_uy", "bf"];
            if cli.scale.rr() {
                headers.extend(["nde_rr_lower", "nie_rr_upper"]);
            }
            if cli.scale.rd() {
                headers.extend(["nde_rd_lower", "nie_rd_upper"]);
            }
            let mut t = Table::new(headers);
            for (x, y) in grid.pairs() {
                let bf = bounding_factor(SensitivitySpec::new(x, y)?)?;
                for r in stratum_reports(data, cli.scale, Some(bf))? {
                    let mut row = vec![Cell::Int(r.stratum as u64), x.into(), y.into(), bf.into()];
                    for block in [r.rr, r.rd].into_iter().flatten() {
                        row.extend([block.nde_lower.into(), block.nie_upper.into()]);
                    }
                    t.push(row);
                }
            }
            t
        }
        Source::Estimates(est) => {
            if cli.scale == Scale::Rd {
                return Err(CliError::Input(
                    "difference-scale sweeps need --data".into(),
                ));
            }
            let mut headers = vec!["rr_au", "rr_uy", "bf"];
            if est.nde_rr.is_some() {
                headers.extend(["nde_rr_lower", "nde_rr_ci_lower", "nde_rr_ci_upper"]);
            }
            if est.nie_rr.is_some() {
                headers.extend(["nie_rr_upper", "nie_rr_ci_lower", "nie_rr_ci_upper"]);
            }
            let mut t = Table::new(headers);
            for (x, y) in grid.pairs() {
                let bf = bounding_factor(SensitivitySpec::new(x, y)?)?;
                let mut row = vec![x.into(), y.into(), bf.into()];
                if let Some(e) = est.nde_rr {
                    let a = e.map(|v| v / bf);
                    row.extend([a.point.into(), a.ci_lower.into(), a.ci_upper.into()]);
                }
                if let Some(e) = est.nie_rr {
                    let a = e.map(|v| v * bf);
                    row.extend([a.point.into(), a.ci_lower.into(), a.ci_upper.into()]);
                }
                t.push(row);
            }
            t
        }
    };
    if cli.relabel_exposure {
        eprintln!("warning: exposure codes were swapped before estimation");
    }
    table.write(out, format_or(cli, Format::Csv))?;
    Ok(Status::Success)
}

fn parametric<W: Write>(cli: &Cli, out: &mut W) -> Result<Status, CliError> {
    let format = format_or(cli, Format::Csv);
    let cells = reference_grid()?;
    // The closed form is only published after it matches direct enumeration.
    for cell in &cells {
        let scale = 1f64.max(cell.rr_au.abs()).max(cell.rr_au_bruteforce.abs());
        if (cell.rr_au - cell.rr_au_bruteforce).abs() > 1e-10 * scale {
            return Err(CliError::Violation(format!(
                "closed-form rr_au {} disagrees with enumeration {} at {:?}",
                cell.rr_au, cell.rr_au_bruteforce, cell
            )));
        }
    }
    let mut t = Table::new([
        "beta0",
        "beta1",
        "beta3",
        "rr_au",
        "rr_au_bruteforce",
        "ratio_to_confounder",
        "ratio_to_exposure",
    ]);
    let ratio = |v: f64| match format {
        Format::Csv => Cell::Text(format!("{v:.2}")),
        Format::Json => Cell::Num(v),
    };
    for c in &cells {
        t.push(vec![
            c.beta0.into(),
            c.beta1.into(),
            c.beta3.into(),
            c.rr_au.into(),
            c.rr_au_bruteforce.into(),
            ratio(c.ratio_to_confounder),
            ratio(c.ratio_to_exposure),
        ]);
    }
    t.write(out, format)?;
    Ok(Status::Success)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSettings {
    pub iterations: u64,
    pub u_levels: usize,
    pub m_levels: Vec<usize>,
    pub extreme: bool,
    pub lemma_instances: u64,
    pub sharpness_iterations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityRun {
    pub sampler: ScmSampler,
    pub seed: u64,
    pub batch: ValidityBatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefinitionRun {
    pub sampler: ScmSampler,
    pub seed: u64,
    pub batch: DefinitionBatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaRun {
    pub seed: u64,
    pub batch: Lemma3Batch,
    /// Largest `|lhs − rhs|` over the two-point attaining family.
    pub bernoulli_max_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub schema: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub settings: OracleSettings,
    pub validity: Vec<ValidityRun>,
    pub unexposed: Vec<ValidityRun>,
    pub definition: Vec<DefinitionRun>,
    pub lemma3: LemmaRun,
    pub sharpness: SharpnessReport,
    pub max_decomposition_rr: f64,
    pub max_decomposition_rd: f64,
    pub violations: u64,
    pub errors: u64,
    pub passed: bool,
}

pub const ORACLE_SCHEMA: &str = "medsens.oracle/v1";

/// Runs every oracle property check with seeds derived from `seed`.
pub fn oracle_report(seed: u64, args: &OracleArgs) -> Result<OracleReport, CliError> {
    if args.u_levels < 2 {
        return Err(CliError::Input("--u-levels must be at least 2".into()));
    }
    if args.m_levels.is_empty() || args.m_levels.iter().any(|&m| m < 2) {
        return Err(CliError::Input(
            "--m-levels must list values of at least 2".into(),
        ));
    }
    let mut next = 0u64;
    let mut derive = || {
        next += 1;
        seed.wrapping_add(next.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    };

    let mut validity = Vec::new();
    let mut unexposed = Vec::new();
    let mut definition = Vec::new();
    for &km in &args.m_levels {
        let base = ScmSampler::new(args.u_levels, km);
        let mut samplers = vec![base, base.mean_ratio()];
        if args.extreme {
            samplers.push(base.extreme());
        }
        for sampler in samplers {
            let s = derive();
            validity.push(ValidityRun {
                sampler,
                seed: s,
                batch: validity_batch(&sampler, s, args.iterations),
            });
        }
        let dependent = base.dependent();
        let s = derive();
        unexposed.push(ValidityRun {
            sampler: dependent,
            seed: s,
            batch: unexposed_batch(&dependent, s, args.iterations),
        });
        let s = derive();
        definition.push(DefinitionRun {
            sampler: base,
            seed: s,
            batch: definition_batch(&base, s, args.iterations),
        });
    }
    let s = derive();
    let lemma3 = LemmaRun {
        seed: s,
        batch: lemma3_batch(s, args.lemma_instances),
        bernoulli_max_gap: bernoulli_max_gap(s, args.lemma_instances),
    };
    let sharpness = sharpness_search(derive(), args.sharpness_iterations);

    let batches = || validity.iter().chain(&unexposed).map(|r| &r.batch);
    let violations = batches().map(ValidityBatch::violations).sum::<u64>()
        + definition
            .iter()
            .map(|d| d.batch.disagreements + d.batch.above_interaction_bound)
            .sum::<u64>()
        + lemma3.batch.violations
        + sharpness.violations;
    let errors = batches().map(|b| b.errors).sum::<u64>()
        + definition.iter().map(|d| d.batch.errors).sum::<u64>()
        + lemma3.batch.errors;
    let max_decomposition_rr = batches()
        .map(|b| b.max_decomposition_rr)
        .fold(0.0, f64::max);
    let max_decomposition_rd = batches()
        .map(|b| b.max_decomposition_rd)
        .fold(0.0, f64::max);
    let passed = violations == 0
        && errors == 0
        && max_decomposition_rr <= medsens::identification::DECOMPOSITION_RR_TOL
        && max_decomposition_rd <= medsens::identification::DECOMPOSITION_RD_TOL;
    Ok(OracleReport {
        schema: ORACLE_SCHEMA,
        version: VERSION,
        seed,
        settings: OracleSettings {
            iterations: args.iterations,
            u_levels: args.u_levels,
            m_levels: args.m_levels.clone(),
            extreme: args.extreme,
            lemma_instances: args.lemma_instances,
            sharpness_iterations: args.sharpness_iterations,
        },
        validity,
        unexposed,
        definition,
        lemma3,
        sharpness,
        max_decomposition_rr,
        max_decomposition_rd,
        violations,
        errors,
        passed,
    })
}

fn oracle<W: Write>(cli: &Cli, args: &OracleArgs, out: &mut W) -> Result<Status, CliError> {
    if format_or(cli, Format::Json) != Format::Json {
        return Err(CliError::Input("the oracle report is JSON only".into()));
    }
    let report = oracle_report(cli.seed, args)?;
    write_json(out, &report)?;
    if report.passed {
        Ok(Status::Success)
    } else {
        eprintln!(
            "error: oracle found {} violations and {} uncomputable samples",
            report.violations, report.errors
        );
        Ok(Status::Violation)
    }
}

fn bootstrap<W: Write>(cli: &Cli, args: &BootstrapArgs, out: &mut W) -> Result<Status, CliError> {
    let data = Dataset::load(&args.data, cli.smoothing, cli.relabel_exposure)?;
    let spec = SensitivitySpec::new(args.rr_au, args.rr_uy)?;
    let cfg = BootstrapConfig {
        replicates: args.replicates,
        level: args.level,
        seed: cli.seed,
        smoothing: cli.smoothing,
        spec,
    };
    let mut summary = run_bootstrap(&data.table, &cfg)?;
    for s in &mut summary.strata {
        s.intervals.retain(|i| {
            if is_rr(i.quantity) {
                cli.scale.rr()
            } else {
                cli.scale.rd()
            }
        });
    }
    let mut doc = records_document("bootstrap", cli, &data);
    doc.settings.seed = Some(cli.seed);
    let bf = spec.bounding_factor()?;
    doc.sensitivity = Some(Sensitivity {
        rr_au: spec.rr_au,
        rr_uy: spec.rr_uy,
        bf,
    });
    doc.strata = stratum_reports(&data, cli.scale, Some(bf))?;
    if summary.redraws > 0 {
        doc.warnings.push(format!(
            "{} bootstrap draws were degenerate and redrawn",
            summary.redraws
        ));
    }
    doc.bootstrap = Some(summary);
    emit_document(out, cli, &doc)?;
    Ok(Status::Success)
}
