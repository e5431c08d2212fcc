//! Assessment bundles and their text, JSON and CSV renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bayes::{BayesResult, BetaPrior};
use crate::classify::Decision;
use crate::ingest::DEFAULT_FWSI_WEIGHT;
use crate::rate_ratio::{round_half_up, CountWindow, RateRatioResult};
use crate::simulate::{CompoundPoissonSpec, ErrorRateReport, MomentCheckReport};

/// Value of the `spec_version` field in every JSON document.
pub const REPORT_SPEC_VERSION: u32 = 1;

pub const REPORT_SCHEMA: &str = include_str!("../schemas/report.schema.json");
pub const SIMULATION_SCHEMA: &str = include_str!("../schemas/simulation.schema.json");
pub const POWER_SCHEMA: &str = include_str!("../schemas/power.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

/// Which p-value drove the rate-ratio decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    Greater,
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRatioSection {
    pub result: RateRatioResult,
    pub alternative: Alternative,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesSection {
    pub prior: BetaPrior,
    pub result: BayesResult,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label: String,
    pub basis: String,
    pub reference: CountWindow,
    pub target: CountWindow,
    /// Unrounded totals when the basis is weighted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_reference_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_target_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_ratio: Option<RateRatioSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes: Option<BayesSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableLookup {
    pub table: String,
    pub n_ref: usize,
    pub n_target: usize,
    pub value: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableBlock {
    pub name: String,
    pub reference_exposure: f64,
    pub target_exposure: f64,
    /// `values[n_ref][n_target]`.
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markers: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentBundle {
    pub spec_version: u32,
    pub fwsi_weight: f64,
    pub results: Vec<Comparison>,
    #[serde(default)]
    pub lookups: Vec<TableLookup>,
    #[serde(default)]
    pub tables: Vec<TableBlock>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Default for AssessmentBundle {
    fn default() -> Self {
        Self::new(DEFAULT_FWSI_WEIGHT)
    }
}

impl AssessmentBundle {
    pub fn new(fwsi_weight: f64) -> Self {
        Self {
            spec_version: REPORT_SPEC_VERSION,
            fwsi_weight,
            results: Vec::new(),
            lookups: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
        }
    }
}

/// Output of a moment-check simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationDocument {
    pub spec_version: u32,
    pub seed: u64,
    pub process: CompoundPoissonSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_class_boundaries: Option<[f64; 6]>,
    pub moment_check: MomentCheckReport,
}

/// Output of an error-rate study, optionally with a sweep over alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDocument {
    pub spec_version: u32,
    pub seed: u64,
    pub study: ErrorRateReport,
    #[serde(default)]
    pub sweep: Vec<ErrorRateReport>,
}

/// Key/value CSV of a simulation run.
pub fn simulation_csv(doc: &SimulationDocument) -> Vec<u8> {
    let m = &doc.moment_check;
    let mut rows: Vec<(String, String)> = vec![
        ("seed".into(), doc.seed.to_string()),
        ("replications".into(), m.replications.to_string()),
        ("theoretical_mean".into(), m.theoretical_mean.to_string()),
        ("sample_mean".into(), m.sample_mean.to_string()),
        ("stderr_mean".into(), m.stderr_mean.to_string()),
        ("z_mean".into(), m.z_mean.to_string()),
        ("theoretical_variance".into(), m.theoretical_variance.to_string()),
        ("sample_variance".into(), m.sample_variance.to_string()),
        ("stderr_variance".into(), m.stderr_variance.to_string()),
        ("z_variance".into(), m.z_variance.to_string()),
        ("mean_count".into(), m.mean_count.to_string()),
        ("count_gof_p_value".into(), m.count_gof.p_value.to_string()),
        ("position_ks_p_value".into(), m.position_uniformity.p_value.to_string()),
    ];
    if let Some(h) = &m.loss_classes {
        rows.extend(h.labeled().map(|(c, n)| (format!("loss_class_{c}"), n.to_string())));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "value"]).expect("in-memory write");
    for (k, v) in rows {
        w.write_record([k, v]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub const POWER_CSV_COLUMNS: [&str; 10] = [
    "procedure_id",
    "decision_counted",
    "rate_ref",
    "rate_target_null",
    "rate_target_alt",
    "alpha_hat",
    "mc_stderr_alpha",
    "power_hat",
    "mc_stderr_power",
    "replications",
];

/// One row per study: the main one first, then the sweep.
pub fn power_csv(doc: &PowerDocument) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(POWER_CSV_COLUMNS).expect("in-memory write");
    for r in std::iter::once(&doc.study).chain(&doc.sweep) {
        let counted = serde_json::to_value(r.decision_counted)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        w.write_record([
            r.procedure_id.clone(),
            counted,
            r.rate_ref.to_string(),
            r.rate_target_null.to_string(),
            r.rate_target_alt.to_string(),
            r.alpha_hat.to_string(),
            r.mc_stderr_alpha.to_string(),
            r.power_hat.to_string(),
            r.mc_stderr_power.to_string(),
            r.replications.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Text rendering options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TextStyle {
    /// Use a decimal comma in numbers.
    pub decimal_comma: bool,
}

/// Half-up rounding to `decimals`, rendered with a fixed number of digits.
pub fn fmt_fixed(x: f64, decimals: u32, style: TextStyle) -> String {
    let s = format!("{:.*}", decimals as usize, round_half_up(x, decimals));
    if style.decimal_comma {
        s.replace('.', ",")
    } else {
        s
    }
}

/// A table cell such as `* 0.200` or `  0.423`.
pub fn fmt_cell(value: f64, marker: &str, style: TextStyle) -> String {
    format!("{:1} {}", marker, fmt_fixed(value, 3, style))
}

fn fmt_general(x: f64, style: TextStyle) -> String {
    let s = format!("{}", round_half_up(x, 6));
    if style.decimal_comma {
        s.replace('.', ",")
    } else {
        s
    }
}

pub fn emit_report(bundle: &AssessmentBundle, format: ReportFormat) -> Vec<u8> {
    emit_report_styled(bundle, format, TextStyle::default())
}

pub fn emit_report_styled(bundle: &AssessmentBundle, format: ReportFormat, style: TextStyle) -> Vec<u8> {
    match format {
        ReportFormat::Text => render_text(bundle, style).into_bytes(),
        ReportFormat::Json => {
            let mut v = serde_json::to_vec_pretty(bundle).expect("bundle serializes");
            v.push(b'\n');
            v
        }
        ReportFormat::Csv => render_csv(bundle),
    }
}

pub fn parse_json_report(bytes: &[u8]) -> serde_json::Result<AssessmentBundle> {
    serde_json::from_slice(bytes)
}

fn decision_text(d: &Decision) -> String {
    if d.marker.is_empty() {
        d.category.to_string()
    } else {
        format!("{} {}", d.category, d.marker)
    }
}

fn render_text(bundle: &AssessmentBundle, style: TextStyle) -> String {
    let mut out = String::new();
    for c in &bundle.results {
        let _ = writeln!(out, "{} [{}]", c.label, c.basis);
        let _ = writeln!(
            out,
            "  reference: events {}, exposure {}",
            fmt_general(c.reference.events as f64, style),
            fmt_general(c.reference.exposure, style)
        );
        let _ = writeln!(
            out,
            "  target:    events {}, exposure {}",
            fmt_general(c.target.events as f64, style),
            fmt_general(c.target.exposure, style)
        );
        if let (Some(r), Some(t)) = (c.raw_reference_total, c.raw_target_total) {
            let _ = writeln!(
                out,
                "  unrounded totals: {} / {} (FWSI weight {})",
                fmt_general(r, style),
                fmt_general(t, style),
                fmt_general(bundle.fwsi_weight, style)
            );
        }
        if let Some(rr) = &c.rate_ratio {
            let r = &rr.result;
            let _ = writeln!(
                out,
                "  rate ratio: p = {} (one-sided), {} (two-sided, {}), n = {}, p0 = {}",
                fmt_fixed(r.p_one_sided, 3, style),
                fmt_fixed(r.p_two_sided, 3, style),
                match r.two_sided_method {
                    crate::rate_ratio::TwoSidedMethod::Central => "central",
                    crate::rate_ratio::TwoSidedMethod::MinLikelihood => "minimum likelihood",
                },
                r.conditional_n,
                fmt_general(r.p0, style)
            );
            let _ = writeln!(out, "    decision: {}", decision_text(&rr.decision));
        }
        if let Some(b) = &c.bayes {
            let _ = writeln!(
                out,
                "  bayes: P(deterioration) = {} with Beta({}, {}) prior",
                fmt_fixed(b.result.posterior_deterioration, 3, style),
                fmt_general(b.prior.alpha, style),
                fmt_general(b.prior.beta, style)
            );
            let _ = writeln!(out, "    decision: {}", decision_text(&b.decision));
        }
    }
    for l in &bundle.lookups {
        let _ = writeln!(
            out,
            "{} [{}][{}] = {}  {}",
            l.table,
            l.n_ref,
            l.n_target,
            fmt_fixed(l.value, 2, style),
            l.decision.category
        );
    }
    for t in &bundle.tables {
        let _ = writeln!(
            out,
            "{} (reference exposure {}, target exposure {})",
            t.name,
            fmt_general(t.reference_exposure, style),
            fmt_general(t.target_exposure, style)
        );
        let cols = t.values.first().map_or(0, Vec::len);
        let mut header = String::from("ref/tgt");
        for j in 0..cols {
            let _ = write!(header, " {:>7}", j);
        }
        let _ = writeln!(out, "{header}");
        for (i, row) in t.values.iter().enumerate() {
            let mut line = format!("{i:>7}");
            for (j, &v) in row.iter().enumerate() {
                let marker = t
                    .markers
                    .as_ref()
                    .and_then(|m| m.get(i))
                    .and_then(|r| r.get(j))
                    .map_or("", String::as_str);
                let _ = write!(line, " {:>7}", fmt_cell(v, marker, style));
            }
            let _ = writeln!(out, "{line}");
        }
    }
    for n in &bundle.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

pub const CSV_COLUMNS: [&str; 16] = [
    "label",
    "basis",
    "reference_events",
    "reference_exposure",
    "target_events",
    "target_exposure",
    "raw_reference_total",
    "raw_target_total",
    "p0",
    "p_one_sided",
    "p_two_sided",
    "rate_ratio_category",
    "posterior_deterioration",
    "prior_alpha",
    "prior_beta",
    "bayes_category",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn render_csv(bundle: &AssessmentBundle) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for c in &bundle.results {
        let rr = c.rate_ratio.as_ref();
        let b = c.bayes.as_ref();
        w.write_record([
            c.label.clone(),
            c.basis.clone(),
            c.reference.events.to_string(),
            c.reference.exposure.to_string(),
            c.target.events.to_string(),
            c.target.exposure.to_string(),
            opt(c.raw_reference_total),
            opt(c.raw_target_total),
            opt(rr.map(|r| r.result.p0)),
            opt(rr.map(|r| r.result.p_one_sided)),
            opt(rr.map(|r| r.result.p_two_sided)),
            rr.map(|r| r.decision.category.label().to_string()).unwrap_or_default(),
            opt(b.map(|b| b.result.posterior_deterioration)),
            opt(b.map(|b| b.prior.alpha)),
            opt(b.map(|b| b.prior.beta)),
            b.map(|b| b.decision.category.label().to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Grid CSV of a table: header `n_ref,0,1,...`, full-precision values.
pub fn table_grid_csv(table: &TableBlock) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let cols = table.values.first().map_or(0, Vec::len);
    let mut header = vec!["n_ref".to_string()];
    header.extend((0..cols).map(|j| j.to_string()));
    w.write_record(&header).expect("in-memory write");
    for (i, row) in table.values.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Inverse of [`table_grid_csv`].
pub fn parse_table_grid_csv(bytes: &[u8]) -> Result<Vec<Vec<f64>>, String> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let idx: usize = rec.get(0).unwrap_or("").parse().map_err(|_| format!("row {i}: bad index"))?;
        if idx != i {
            return Err(format!("row {i}: index {idx} out of order"));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().map_err(|_| format!("row {i}: bad value `{f}`")))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Long-form CSV `n_ref,n_target,value,marker`, for plotting.
pub fn table_tidy_csv(table: &TableBlock) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n_ref", "n_target", "value", "marker"]).expect("in-memory write");
    for (i, row) in table.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let marker = table
                .markers
                .as_ref()
                .and_then(|m| m.get(i))
                .and_then(|r| r.get(j))
                .cloned()
                .unwrap_or_default();
            w.write_record([i.to_string(), j.to_string(), v.to_string(), marker])
                .expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory flush")
}
