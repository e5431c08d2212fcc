//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or data error. With `--gate` the decision
//! sets the code instead: 0 no deterioration, 3 potential, 4 probable.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bayes::{calibrate_prior, posterior_deterioration_prob, BetaPrior};
use crate::classify::{classify_p, classify_posterior, Category, PThresholds, PosteriorThresholds, TieRule};
use crate::ingest::{aggregate, read_accidents, read_exposures, Basis, DateRange, DEFAULT_FWSI_WEIGHT};
use crate::probkit::RandomStream;
use crate::rate_ratio::{generate_p_table, rate_ratio_test_with, CountWindow, TwoSidedMethod};
use crate::report::{
    emit_report_styled, power_csv, simulation_csv, table_grid_csv, table_tidy_csv, Alternative, AssessmentBundle,
    BayesSection, Comparison, PowerDocument, RateRatioSection, ReportFormat, SimulationDocument, TableBlock,
    TableLookup, TextStyle, REPORT_SPEC_VERSION,
};
use crate::simulate::{
    estimate_error_rates, moment_check_with_loss_classes, sweep_alternatives, SimulationConfig, DEFAULT_REPLICATIONS,
};

pub const SEED_ENV: &str = "SAFELEVEL_SEED";

/// Stream id reserved for moment-check runs.
pub const SIMULATE_STREAM: u64 = 1;
/// Stream id reserved for error-rate studies.
pub const POWER_STREAM: u64 = 2;

#[derive(Debug, Parser)]
#[command(name = "safelevel", version, about = "Assess whether a safety level has deteriorated between periods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact rate-ratio test of two count windows.
    Test(TestArgs),
    /// Matrix of one-sided rate-ratio p-values.
    Table(TableArgs),
    /// Beta-Binomial posterior probability of deterioration.
    Bayes(BayesArgs),
    /// Simulate a compound Poisson process and check its moments.
    Simulate(SimArgs),
    /// Monte-Carlo type-I / type-II error rates of a decision procedure.
    Power(SimArgs),
    /// Ingest accident and exposure files and assess one operator.
    Assess(AssessArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AltArg {
    Greater,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TwoSidedArg {
    Central,
    MinLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TiesArg {
    Severe,
    Strict,
}

impl From<TiesArg> for TieRule {
    fn from(t: TiesArg) -> Self {
        match t {
            TiesArg::Severe => TieRule::TowardSevere,
            TiesArg::Strict => TieRule::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Events,
    Fatalities,
    Fwsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    RateRatio,
    Bayes,
    Both,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Render decimals with a comma in text output.
    #[arg(long)]
    locale_decimal: bool,
}

impl OutputArgs {
    fn style(&self) -> TextStyle {
        TextStyle {
            decimal_comma: self.locale_decimal,
        }
    }
}

#[derive(Debug, Args)]
struct WindowArgs {
    #[arg(long)]
    ref_events: u64,
    #[arg(long)]
    ref_exposure: f64,
    #[arg(long)]
    target_events: u64,
    #[arg(long)]
    target_exposure: f64,
}

#[derive(Debug, Args)]
struct PThresholdArgs {
    /// Probable and potential p-value limits.
    #[arg(long, value_name = "PROBABLE,POTENTIAL", default_value = "0.1,0.25")]
    thresholds: String,
    /// Tier for p-values exactly on a limit.
    #[arg(long, value_enum, default_value_t = TiesArg::Severe)]
    ties: TiesArg,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    windows: WindowArgs,
    #[arg(long, default_value_t = 1.0)]
    null_ratio: f64,
    /// Which p-value drives the decision.
    #[arg(long, value_enum, default_value_t = AltArg::Greater)]
    alternative: AltArg,
    #[arg(long, value_enum, default_value_t = TwoSidedArg::Central)]
    two_sided_method: TwoSidedArg,
    #[command(flatten)]
    thresholds: PThresholdArgs,
    /// Exit 3 on potential and 4 on probable deterioration.
    #[arg(long)]
    gate: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long, default_value_t = 5)]
    max_ref: u64,
    #[arg(long, default_value_t = 7)]
    max_target: u64,
    #[arg(long, default_value_t = 4.0)]
    ref_exposure: f64,
    #[arg(long, default_value_t = 1.0)]
    target_exposure: f64,
    /// Mark cells with "*" (potential) and "+" (probable).
    #[arg(long)]
    markers: bool,
    #[command(flatten)]
    thresholds: PThresholdArgs,
    /// With --format csv, emit long-form rows instead of a grid.
    #[arg(long)]
    tidy: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct PosteriorThresholdArgs {
    /// Alert and warning posterior limits.
    #[arg(long, value_name = "ALERT,WARNING", default_value = "0.9,0.75")]
    posterior_thresholds: String,
}

#[derive(Debug, Args)]
struct BayesArgs {
    #[arg(long, default_value_t = 1.0)]
    prior_alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    prior_beta: f64,
    #[arg(long)]
    ref_events: Option<u64>,
    #[arg(long)]
    ref_exposure: Option<f64>,
    #[arg(long)]
    target_events: Option<u64>,
    #[arg(long)]
    target_exposure: Option<f64>,
    /// Read the embedded posterior table instead of computing.
    #[arg(long, num_args = 2, value_names = ["N_REF", "N_TARGET"], conflicts_with_all = ["ref_events", "target_events", "calibrate"])]
    lookup: Option<Vec<usize>>,
    /// Fit a Beta prior to the embedded table and print the residuals.
    #[arg(long)]
    calibrate: bool,
    #[command(flatten)]
    thresholds: PosteriorThresholdArgs,
    #[arg(long)]
    gate: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u64>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for the JSON and CSV result files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct AssessArgs {
    #[arg(long)]
    accidents: PathBuf,
    #[arg(long)]
    exposure: PathBuf,
    #[arg(long)]
    operator: String,
    #[arg(long)]
    category: Option<String>,
    /// Reference period START..END (end exclusive).
    #[arg(long)]
    reference: String,
    /// Target period START..END (end exclusive).
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value_t = BasisArg::Events)]
    basis: BasisArg,
    #[arg(long, default_value_t = DEFAULT_FWSI_WEIGHT)]
    fwsi_weight: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::RateRatio)]
    method: MethodArg,
    #[arg(long, default_value_t = 1.0)]
    prior_alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    prior_beta: f64,
    #[arg(long, value_enum, default_value_t = AltArg::Greater)]
    alternative: AltArg,
    #[command(flatten)]
    thresholds: PThresholdArgs,
    #[command(flatten)]
    posterior: PosteriorThresholdArgs,
    /// Exit with the most severe decision across the methods run.
    #[arg(long)]
    gate: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Test(a) => cmd_test(&a, out),
        Command::Table(a) => cmd_table(&a, out),
        Command::Bayes(a) => cmd_bayes(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Power(a) => cmd_power(&a, out),
        Command::Assess(a) => cmd_assess(&a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn parse_pair(text: &str, flag: &str) -> std::result::Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Failure(format!("--{flag} expects two comma-separated numbers, got `{text}`")));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Failure(format!("--{flag}: `{s}` is not a number")))
    };
    Ok((num(parts[0])?, num(parts[1])?))
}

fn p_thresholds(a: &PThresholdArgs) -> std::result::Result<PThresholds, Failure> {
    let (probable, potential) = parse_pair(&a.thresholds, "thresholds")?;
    Ok(PThresholds::new(probable, potential)?.with_ties(a.ties.into()))
}

fn posterior_thresholds(a: &PosteriorThresholdArgs) -> std::result::Result<PosteriorThresholds, Failure> {
    let (alert, warning) = parse_pair(&a.posterior_thresholds, "posterior-thresholds")?;
    Ok(PosteriorThresholds::new(alert, warning)?)
}

fn emit(bundle: &AssessmentBundle, output: &OutputArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    out.write_all(&emit_report_styled(bundle, output.format.into(), output.style()))?;
    Ok(())
}

fn gate_code(gate: bool, category: Category) -> i32 {
    if gate {
        category.exit_code()
    } else {
        0
    }
}

fn rate_ratio_section(
    reference: &CountWindow,
    target: &CountWindow,
    null_ratio: f64,
    alternative: AltArg,
    method: TwoSidedMethod,
    thresholds: &PThresholds,
) -> std::result::Result<RateRatioSection, Failure> {
    let result = rate_ratio_test_with(reference, target, null_ratio, method)?;
    let (p, alternative) = match alternative {
        AltArg::Greater => (result.p_one_sided, Alternative::Greater),
        AltArg::TwoSided => (result.p_two_sided, Alternative::TwoSided),
    };
    Ok(RateRatioSection {
        decision: classify_p(p, thresholds)?,
        alternative,
        result,
    })
}

fn cmd_test(a: &TestArgs, out: &mut dyn Write) -> Outcome {
    let w = &a.windows;
    let reference = CountWindow::new(w.ref_events, w.ref_exposure, "reference")?;
    let target = CountWindow::new(w.target_events, w.target_exposure, "target")?;
    let method = match a.two_sided_method {
        TwoSidedArg::Central => TwoSidedMethod::Central,
        TwoSidedArg::MinLikelihood => TwoSidedMethod::MinLikelihood,
    };
    let section = rate_ratio_section(
        &reference,
        &target,
        a.null_ratio,
        a.alternative,
        method,
        &p_thresholds(&a.thresholds)?,
    )?;
    let category = section.decision.category;
    let mut bundle = AssessmentBundle::default();
    bundle.results.push(Comparison {
        label: "rate ratio test".into(),
        basis: "events".into(),
        reference,
        target,
        raw_reference_total: None,
        raw_target_total: None,
        rate_ratio: Some(section),
        bayes: None,
    });
    emit(&bundle, &a.output, out)?;
    Ok(gate_code(a.gate, category))
}

fn cmd_table(a: &TableArgs, out: &mut dyn Write) -> Outcome {
    let table = generate_p_table(a.max_ref, a.max_target, a.ref_exposure, a.target_exposure)?;
    let markers = if a.markers {
        let th = p_thresholds(&a.thresholds)?;
        Some(
            table
                .values
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&p| classify_p(p, &th).map(|d| d.marker))
                        .collect::<crate::Result<Vec<_>>>()
                })
                .collect::<crate::Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let block = TableBlock {
        name: "rate ratio p-levels".into(),
        reference_exposure: a.ref_exposure,
        target_exposure: a.target_exposure,
        values: table.values,
        markers,
    };
    match a.output.format {
        Format::Csv if a.tidy => out.write_all(&table_tidy_csv(&block))?,
        Format::Csv => out.write_all(&table_grid_csv(&block))?,
        _ => {
            let mut bundle = AssessmentBundle::default();
            bundle.tables.push(block);
            emit(&bundle, &a.output, out)?;
        }
    }
    Ok(0)
}

fn cmd_bayes(a: &BayesArgs, out: &mut dyn Write) -> Outcome {
    let thresholds = posterior_thresholds(&a.thresholds)?;
    if a.calibrate {
        let report = calibrate_prior();
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        out.write_all(text.as_bytes())?;
        return Ok(0);
    }
    let mut bundle = AssessmentBundle::default();
    let category = if let Some(idx) = &a.lookup {
        let (n_ref, n_target) = (idx[0], idx[1]);
        let value = crate::bayes::andrasik_lookup(n_ref, n_target)?;
        let decision = classify_posterior(value, &thresholds)?;
        let category = decision.category;
        bundle.lookups.push(TableLookup {
            table: "andrasik".into(),
            n_ref,
            n_target,
            value,
            decision,
        });
        category
    } else {
        let missing = |name: &str| Failure(format!("--{name} is required unless --lookup or --calibrate is given"));
        let reference = CountWindow::new(
            a.ref_events.ok_or_else(|| missing("ref-events"))?,
            a.ref_exposure.ok_or_else(|| missing("ref-exposure"))?,
            "reference",
        )?;
        let target = CountWindow::new(
            a.target_events.ok_or_else(|| missing("target-events"))?,
            a.target_exposure.ok_or_else(|| missing("target-exposure"))?,
            "target",
        )?;
        let prior = BetaPrior::new(a.prior_alpha, a.prior_beta)?;
        let result = posterior_deterioration_prob(&prior, &reference, &target)?;
        let decision = classify_posterior(result.posterior_deterioration, &thresholds)?;
        let category = decision.category;
        bundle.results.push(Comparison {
            label: "bayes comparator".into(),
            basis: "events".into(),
            reference,
            target,
            raw_reference_total: None,
            raw_target_total: None,
            rate_ratio: None,
            bayes: Some(BayesSection { prior, result, decision }),
        });
        category
    };
    emit(&bundle, &a.output, out)?;
    Ok(gate_code(a.gate, category))
}

struct SimSetup {
    config: SimulationConfig,
    seed: u64,
    replications: u64,
    workers: usize,
}

fn sim_setup(a: &SimArgs) -> std::result::Result<SimSetup, Failure> {
    let config = SimulationConfig::from_path(&a.config)?;
    let seed = a.seed.or(config.seed).unwrap_or(0);
    let replications = a.replications.or(config.replications).unwrap_or(DEFAULT_REPLICATIONS);
    if replications == 0 {
        return Err(Failure("--replications must be at least 1".into()));
    }
    let workers = a.workers.or(config.workers).unwrap_or(0);
    Ok(SimSetup {
        config,
        seed,
        replications,
        workers,
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> std::result::Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

fn json_bytes<T: serde::Serialize>(value: &T) -> std::result::Result<Vec<u8>, Failure> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn cmd_simulate(a: &SimArgs, out: &mut dyn Write) -> Outcome {
    let s = sim_setup(a)?;
    let process = s
        .config
        .process
        .clone()
        .ok_or_else(|| Failure("config field `process`: required for simulate".into()))?;
    let stream = RandomStream::new(s.seed, SIMULATE_STREAM);
    let boundaries = s.config.loss_class_boundaries;
    let report = moment_check_with_loss_classes(&process, s.replications, &stream, s.workers, boundaries.as_ref())?;
    let doc = SimulationDocument {
        spec_version: REPORT_SPEC_VERSION,
        seed: s.seed,
        process,
        loss_class_boundaries: boundaries,
        moment_check: report,
    };
    let json = json_bytes(&doc)?;
    let csv = simulation_csv(&doc);
    if let Some(dir) = &a.out {
        write_file(dir, "simulation.json", &json)?;
        write_file(dir, "simulation.csv", &csv)?;
    }
    match a.format {
        Format::Json => out.write_all(&json)?,
        Format::Csv => out.write_all(&csv)?,
        Format::Text => {
            let m = &doc.moment_check;
            writeln!(out, "replications {} (seed {})", m.replications, doc.seed)?;
            writeln!(
                out,
                "mean     theoretical {:.6}  sample {:.6}  stderr {:.6}  z {:.3}",
                m.theoretical_mean, m.sample_mean, m.stderr_mean, m.z_mean
            )?;
            writeln!(
                out,
                "variance theoretical {:.6}  sample {:.6}  stderr {:.6}  z {:.3}",
                m.theoretical_variance, m.sample_variance, m.stderr_variance, m.z_variance
            )?;
            writeln!(
                out,
                "count goodness of fit: chi2 {:.3} on {} dof, p {:.4}",
                m.count_gof.statistic, m.count_gof.dof, m.count_gof.p_value
            )?;
            writeln!(
                out,
                "position uniformity: KS D {:.5} over {} events, p {:.4}",
                m.position_uniformity.statistic, m.position_uniformity.n, m.position_uniformity.p_value
            )?;
            if let Some(h) = &m.loss_classes {
                let parts: Vec<String> = h.labeled().map(|(c, n)| format!("{c}={n}")).collect();
                writeln!(out, "loss classes: {}", parts.join(" "))?;
            }
        }
    }
    Ok(0)
}

fn cmd_power(a: &SimArgs, out: &mut dyn Write) -> Outcome {
    let s = sim_setup(a)?;
    let study_cfg = s
        .config
        .study
        .clone()
        .ok_or_else(|| Failure("config field `study`: required for power".into()))?;
    let study = study_cfg.to_study(s.replications);
    let stream = RandomStream::new(s.seed, POWER_STREAM);
    let main = estimate_error_rates(&study, &stream, s.workers)?;
    let sweep = sweep_alternatives(&study, &study_cfg.alt_sweep, &stream, s.workers)?;
    let doc = PowerDocument {
        spec_version: REPORT_SPEC_VERSION,
        seed: s.seed,
        study: main,
        sweep,
    };
    let json = json_bytes(&doc)?;
    let csv = power_csv(&doc);
    if let Some(dir) = &a.out {
        write_file(dir, "power.json", &json)?;
        write_file(dir, "power.csv", &csv)?;
    }
    match a.format {
        Format::Json => out.write_all(&json)?,
        Format::Csv => out.write_all(&csv)?,
        Format::Text => {
            writeln!(out, "{} (seed {})", doc.study.procedure_id, doc.seed)?;
            for r in std::iter::once(&doc.study).chain(&doc.sweep) {
                writeln!(
                    out,
                    "alt rate {:<8} alpha {:.5} ± {:.5}  power {:.5} ± {:.5}  ({} replications)",
                    r.rate_target_alt, r.alpha_hat, r.mc_stderr_alpha, r.power_hat, r.mc_stderr_power, r.replications
                )?;
            }
            for w in &doc.study.warnings {
                writeln!(out, "warning: {w}")?;
            }
        }
    }
    Ok(0)
}

fn cmd_assess(a: &AssessArgs, out: &mut dyn Write) -> Outcome {
    let records = read_accidents(&a.accidents)?;
    let exposures = read_exposures(&a.exposure)?;
    let reference_range: DateRange = a.reference.parse()?;
    let target_range: DateRange = a.target.parse()?;
    let (basis, basis_name) = match a.basis {
        BasisArg::Events => (Basis::Events, "events"),
        BasisArg::Fatalities => (Basis::Fatalities, "fatalities"),
        BasisArg::Fwsi => (Basis::Fwsi { weight: a.fwsi_weight }, "fwsi"),
    };
    let category = a.category.as_deref();
    let r = aggregate(&records, &exposures, &reference_range, &a.operator, category, basis)?;
    let t = aggregate(&records, &exposures, &target_range, &a.operator, category, basis)?;
    let weighted = matches!(basis, Basis::Fwsi { .. });

    let rate_ratio = match a.method {
        MethodArg::RateRatio | MethodArg::Both => Some(rate_ratio_section(
            &r.window,
            &t.window,
            1.0,
            a.alternative,
            TwoSidedMethod::Central,
            &p_thresholds(&a.thresholds)?,
        )?),
        MethodArg::Bayes => None,
    };
    let bayes = match a.method {
        MethodArg::Bayes | MethodArg::Both => {
            let prior = BetaPrior::new(a.prior_alpha, a.prior_beta)?;
            let result = posterior_deterioration_prob(&prior, &r.window, &t.window)?;
            let decision = classify_posterior(result.posterior_deterioration, &posterior_thresholds(&a.posterior)?)?;
            Some(BayesSection { prior, result, decision })
        }
        MethodArg::RateRatio => None,
    };
    let worst = rate_ratio
        .iter()
        .map(|s| s.decision.category)
        .chain(bayes.iter().map(|s| s.decision.category))
        .max()
        .unwrap_or(Category::NoDeterioration);

    let label = match category {
        Some(c) => format!("{} / {}", a.operator, c),
        None => a.operator.clone(),
    };
    let mut bundle = AssessmentBundle::new(a.fwsi_weight);
    bundle.results.push(Comparison {
        label,
        basis: basis_name.into(),
        reference: r.window,
        target: t.window,
        raw_reference_total: weighted.then_some(r.raw_total),
        raw_target_total: weighted.then_some(t.raw_total),
        rate_ratio,
        bayes,
    });
    emit(&bundle, &a.output, out)?;
    Ok(gate_code(a.gate, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["safelevel"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pair("0.1, 0.25", "x").unwrap(), (0.1, 0.25));
        assert!(parse_pair("0.1", "x").is_err());
        assert!(parse_pair("a,b", "x").is_err());
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("assess"));
    }

    #[test]
    fn unknown_flag_exits_one() {
        let (code, _, err) = run_str(&["test", "--bogus"]);
        assert_eq!(code, 1);
        assert!(!err.is_empty());
    }

    #[test]
    fn thresholds_validated() {
        let (code, _, err) = run_str(&[
            "test",
            "--ref-events",
            "1",
            "--ref-exposure",
            "1",
            "--target-events",
            "1",
            "--target-exposure",
            "1",
            "--thresholds",
            "0.3,0.2",
        ]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error:"), "{err}");
    }
}
