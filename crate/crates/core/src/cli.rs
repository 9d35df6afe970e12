//! Command-line front end.
//!
//! Each subcommand parses its inputs, calls one library operation and
//! writes the result. Human-readable summaries go to the supplied writer
//! (stdout in the binary); machine-readable output goes only to `--output`.
//!
//! Exit codes: 0 on success, 1 on runtime failures, 2 on usage and
//! validation errors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::curves::{
    curve_ips_global, curve_ips_local, curve_rebalanced, curve_v1, curve_v2, curve_vnu, interpolate_iso_uplift,
    table1_curve, Curve, CurveHeader, KernelSpec, Ranking, Table1Grid, Table1Variant,
};
use crate::data::{load_dataset, rank_by_score, write_dataset, LoggedBanditDataset};
use crate::error::UpliftError;
use crate::experiments::{
    default_nus, nu_surface_sweep, run_counterexample, variance_study, CounterexampleConfig, CounterexampleCurve,
    SweepConfig, Toy, VarianceStudyConfig,
};
use crate::generators::{generate, heterogeneous, toy1_spec, toy2_spec, toy3_spec, write_ground_truth, PopulationSpec};
use crate::metrics::{pehe, MetricReport};

pub const SEED_ENV: &str = "UPLIFT_EVAL_SEED";

// ── Errors ──────────────────────────────────────────────────────────────

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Uplift(#[from] UpliftError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Uplift(e) if e.is_validation() => 2,
            CliError::Uplift(_) => 1,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Uplift(UpliftError::Io(e))
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ── Arguments ───────────────────────────────────────────────────────────

#[derive(Debug, Parser)]
#[command(name = "uplift-eval", version, about = "Uplift-model evaluation on logged-bandit feedback")]
pub struct Cli {
    /// Master seed [env: UPLIFT_EVAL_SEED, default 0].
    #[arg(long, global = true, env = SEED_ENV)]
    pub seed: Option<u64>,

    /// Destination of the machine-readable result.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic logged dataset and its ground-truth sidecar.
    Generate(GenerateArgs),
    /// Build an uplift curve from a dataset and report its areas.
    Evaluate(EvaluateArgs),
    /// Run one of the archetype counterexamples.
    Counterexample(CounterexampleArgs),
    /// AUUC variance across the V_nu family for one population.
    VarianceStudy(VarianceStudyArgs),
    /// Variance studies over a grid of response rates.
    NuSweep(NuSweepArgs),
    /// Mean squared error between predicted and true effects.
    Pehe(PeheArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Toy1,
    Toy2,
    Toy3,
    Hetero,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, conflicts_with = "spec", required_unless_present = "spec")]
    pub builtin: Option<Builtin>,
    /// Population spec as JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Ground-truth sidecar path [default: <output stem>.truth.csv].
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Number of segments of the heterogeneous population.
    #[arg(long, default_value_t = 10)]
    pub segments: usize,
    /// Treatment probability of the heterogeneous population.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Target P(Y=1) of the heterogeneous population.
    #[arg(long, default_value_t = 0.4)]
    pub p_y1: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub dataset: PathBuf,
    /// v1, v2, vnu, rebalanced, ips-local, ips-global or table1:<variant>.
    #[arg(long, default_value = "rebalanced")]
    pub estimator: String,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Boxcar half width in ranks for ips-local.
    #[arg(long)]
    pub kernel_width: Option<usize>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub interpolate_ties: bool,
    /// Also report the area over [0, upto].
    #[arg(long)]
    pub upto: Option<f64>,
    /// CSV with `unit_id` and a score column, joined on `unit_id`.
    #[arg(long)]
    pub scores_file: Option<PathBuf>,
    #[arg(long, default_value = "score")]
    pub score_column: String,
    /// Proportion grid size for the separate table variants.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Also write the curve as CSV here.
    #[arg(long)]
    pub curve_output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveArg {
    V1,
    Rebalanced,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(value_parser = parse_toy)]
    pub id: Toy,
    #[arg(long, default_value_t = 40_000)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub realizations: usize,
    #[arg(long, value_enum, default_value_t = CurveArg::V1)]
    pub estimator: CurveArg,
    /// Overrides every group's treatment probability.
    #[arg(long)]
    pub treatment_prob: Option<f64>,
}

fn parse_toy(s: &str) -> Result<Toy, String> {
    s.parse().map_err(|e: UpliftError| e.to_string())
}

#[derive(Debug, Args)]
pub struct VarianceStudyArgs {
    /// Study configuration as JSON.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct NuSweepArgs {
    /// Comma-separated P(Y=1) targets [default: 0.2, 0.25, ..., 0.8].
    #[arg(long, value_delimiter = ',')]
    pub p_y1: Vec<f64>,
    /// Comma-separated nu grid [default: 0, 0.05, ..., 1].
    #[arg(long, value_delimiter = ',')]
    pub nus: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub segments: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 101)]
    pub realizations: usize,
    /// good or bad.
    #[arg(long, default_value = "good")]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct PeheArgs {
    pub truth: PathBuf,
    pub predictions: PathBuf,
    #[arg(long, default_value = "tau")]
    pub truth_column: String,
    #[arg(long, default_value = "tau")]
    pub pred_column: String,
}

// ── Dispatch ────────────────────────────────────────────────────────────

pub fn run<W: Write>(cli: Cli, out: &mut W) -> CliResult {
    let seed = cli.seed.unwrap_or(0);
    writeln!(out, "seed: {seed}")?;
    let ctx = Context { seed, seed_given: cli.seed.is_some(), output: cli.output.as_deref(), format: cli.format };
    match cli.command {
        Command::Generate(args) => cmd_generate(&ctx, args, out),
        Command::Evaluate(args) => cmd_evaluate(&ctx, args, out),
        Command::Counterexample(args) => cmd_counterexample(&ctx, args, out),
        Command::VarianceStudy(args) => cmd_variance_study(&ctx, args, out),
        Command::NuSweep(args) => cmd_nu_sweep(&ctx, args, out),
        Command::Pehe(args) => cmd_pehe(&ctx, args, out),
    }
}

struct Context<'a> {
    seed: u64,
    seed_given: bool,
    output: Option<&'a Path>,
    format: Format,
}

impl Context<'_> {
    /// Writes `value` as JSON, or through `csv` when CSV output is requested.
    fn emit<T: Serialize>(
        &self,
        value: &T,
        csv: impl FnOnce(&mut BufWriter<File>) -> crate::error::Result<()>,
    ) -> CliResult {
        let Some(path) = self.output else { return Ok(()) };
        let mut sink = BufWriter::new(File::create(path)?);
        match self.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut sink, value).map_err(UpliftError::from)?;
                writeln!(sink)?;
            }
            Format::Csv => csv(&mut sink)?,
        }
        sink.flush()?;
        Ok(())
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    Ok(serde_json::from_reader(open(path)?).map_err(UpliftError::from)?)
}

// ── generate ────────────────────────────────────────────────────────────

fn cmd_generate<W: Write>(ctx: &Context, args: GenerateArgs, out: &mut W) -> CliResult {
    let output = ctx.output.ok_or_else(|| usage("generate needs --output for the dataset CSV"))?;
    let mut spec: PopulationSpec = match (&args.builtin, &args.spec) {
        (Some(Builtin::Toy1), _) => toy1_spec(),
        (Some(Builtin::Toy2), _) => toy2_spec(),
        (Some(Builtin::Toy3), _) => toy3_spec(),
        (Some(Builtin::Hetero), _) => heterogeneous(args.segments, args.alpha, args.p_y1, ctx.seed)?.population,
        (None, Some(path)) => read_json(path)?,
        (None, None) => return Err(usage("one of --builtin or --spec is required")),
    };
    if args.spec.is_none() || ctx.seed_given {
        spec = spec.with_seed(ctx.seed);
    }
    if let Some(n) = args.n {
        spec = spec.with_n(n);
    }
    let data = generate(&spec)?;

    write_dataset(BufWriter::new(File::create(output)?), &data.logged, Some(&data.scores))?;
    let truth = args.truth.unwrap_or_else(|| output.with_extension("truth.csv"));
    write_ground_truth(BufWriter::new(File::create(&truth)?), &spec, &data)?;

    let treated = data.logged.treated_count() as f64 / data.logged.len() as f64;
    writeln!(out, "units: {}", data.logged.len())?;
    writeln!(out, "treated fraction: {treated:.6}")?;
    writeln!(out, "dataset: {}", output.display())?;
    writeln!(out, "ground truth: {}", truth.display())?;
    Ok(())
}

// ── evaluate ────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
enum EstimatorChoice {
    V1,
    V2,
    Vnu(f64),
    Rebalanced,
    IpsLocal(usize),
    IpsGlobal,
    Table1(Table1Variant),
}

fn resolve_estimator(args: &EvaluateArgs) -> CliResult<EstimatorChoice> {
    let name = args.estimator.trim();
    if args.nu.is_some() && name != "vnu" {
        return Err(usage("--nu is only valid with --estimator vnu"));
    }
    if args.kernel_width.is_some() && name != "ips-local" {
        return Err(usage("--kernel-width is only valid with --estimator ips-local"));
    }
    Ok(match name {
        "v1" => EstimatorChoice::V1,
        "v2" => EstimatorChoice::V2,
        "vnu" => EstimatorChoice::Vnu(args.nu.ok_or_else(|| usage("--estimator vnu needs --nu"))?),
        "rebalanced" => EstimatorChoice::Rebalanced,
        "ips-local" => EstimatorChoice::IpsLocal(
            args.kernel_width.ok_or_else(|| usage("--estimator ips-local needs --kernel-width"))?,
        ),
        "ips-global" => EstimatorChoice::IpsGlobal,
        other => match other.strip_prefix("table1:") {
            Some(variant) => EstimatorChoice::Table1(variant.parse().map_err(|e: UpliftError| usage(e.to_string()))?),
            None => return Err(usage(format!("unknown estimator {other:?}"))),
        },
    })
}

/// Reads `unit_id` and one numeric column into a map.
fn read_column(path: &Path, column: &str) -> CliResult<HashMap<u64, f64>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = reader.headers().map_err(UpliftError::from)?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Uplift(UpliftError::Parse {
                line: 1,
                message: format!("{}: missing column {name:?}", path.display()),
            })
        })
    };
    let (id_col, value_col) = (find("unit_id")?, find(column)?);
    let mut values = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(UpliftError::from)?;
        let line = row.position().map_or(0, |p| p.line());
        let parse_err =
            |what: &str| UpliftError::Parse { line, message: format!("{}: cannot parse {what}", path.display()) };
        let id: u64 = row[id_col].parse().map_err(|_| parse_err("unit_id"))?;
        let value: f64 = row[value_col].parse().map_err(|_| parse_err(column))?;
        values.insert(id, value);
    }
    Ok(values)
}

fn join_on_unit_id(dataset: &LoggedBanditDataset, values: &HashMap<u64, f64>, what: &str) -> CliResult<Vec<f64>> {
    dataset
        .records()
        .iter()
        .map(|r| {
            values.get(&r.unit_id).copied().ok_or_else(|| {
                CliError::Uplift(UpliftError::Domain(format!("{what}: no value for unit {}", r.unit_id)))
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct EvaluationOutput {
    header: CurveHeader,
    metrics: MetricReport,
}

fn cmd_evaluate<W: Write>(ctx: &Context, args: EvaluateArgs, out: &mut W) -> CliResult {
    let choice = resolve_estimator(&args)?;
    let dataset = load_dataset(open(&args.dataset)?)?;
    let scores = match (&args.scores_file, args.score_column.as_str(), dataset.scores()) {
        (Some(path), column, _) => join_on_unit_id(&dataset, &read_column(path, column)?, "scores file")?,
        (None, "score", Some(s)) => s.to_vec(),
        (None, column, _) => join_on_unit_id(&dataset, &read_column(&args.dataset, column)?, "dataset")?,
    };
    let scored = rank_by_score(&dataset, &scores)?;

    let mut curve: Curve = match choice {
        EstimatorChoice::V1 => curve_v1(&scored)?,
        EstimatorChoice::V2 => curve_v2(&scored)?,
        EstimatorChoice::Vnu(nu) => curve_vnu(&scored, nu)?,
        EstimatorChoice::Rebalanced => curve_rebalanced(&scored)?,
        EstimatorChoice::IpsLocal(w) => curve_ips_local(&scored, KernelSpec::boxcar(w))?,
        EstimatorChoice::IpsGlobal => curve_ips_global(&scored)?,
        EstimatorChoice::Table1(variant) => {
            let grid = match variant.ranking() {
                Ranking::Joint => Table1Grid::Ranks,
                Ranking::Separate => Table1Grid::uniform(args.points),
            };
            table1_curve(&scored, variant, &grid)?.bridged()?
        }
    };
    let full_rank_curve = curve.len() == scored.len()
        && !matches!(choice, EstimatorChoice::Table1(v) if v.ranking() == Ranking::Separate);
    if args.interpolate_ties && full_rank_curve {
        curve = interpolate_iso_uplift(&curve, &scored)?;
    }

    let mut metrics = MetricReport::from_curve(&curve);
    if let Some(upto) = args.upto {
        metrics = metrics.with_partial(&curve, upto)?;
    }
    if let Some(path) = &args.curve_output {
        curve.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let report = EvaluationOutput { header: curve.header(), metrics };
    ctx.emit(&report, |sink| curve.write_csv(sink))?;

    let m = &report.metrics;
    writeln!(out, "estimator: {}", report.header.constructor)?;
    writeln!(out, "units: {}", scored.len())?;
    writeln!(out, "ties interpolated: {}", curve.is_interpolated())?;
    writeln!(out, "AUUC: {}", m.auuc)?;
    writeln!(out, "delta AUUC: {}", m.delta_auuc)?;
    writeln!(out, "end value: {}", m.endpoint)?;
    if let Some((upto, area)) = m.partial_auuc {
        writeln!(out, "AUUC up to {upto}: {area}")?;
    }
    Ok(())
}

// ── counterexample ──────────────────────────────────────────────────────

fn cmd_counterexample<W: Write>(ctx: &Context, args: CounterexampleArgs, out: &mut W) -> CliResult {
    let config = CounterexampleConfig {
        toy: args.id,
        n: args.n,
        realizations: args.realizations,
        seed: ctx.seed,
        curve: match args.estimator {
            CurveArg::V1 => CounterexampleCurve::V1,
            CurveArg::Rebalanced => CounterexampleCurve::Rebalanced,
        },
        treatment_prob_override: args.treatment_prob,
    };
    let report = run_counterexample(&config)?;
    ctx.emit(&report, |sink| {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["model", "analytic_auuc", "mc_auuc_mean", "mc_auuc_stderr"])?;
        for m in [&report.true_model, &report.challenger] {
            w.write_record([
                m.name.clone(),
                m.analytic_auuc.to_string(),
                m.mc_auuc_mean.to_string(),
                m.mc_auuc_stderr.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;

    writeln!(
        out,
        "counterexample: {} ({:?} curve, N = {}, {} realizations)",
        report.toy, report.curve, report.n, report.realizations
    )?;
    writeln!(out, "{:<8} {:>10} {:>10}", "group", "slope", "uplift")?;
    for g in &report.analytic_slopes {
        writeln!(out, "{:<8} {:>10.6} {:>10.6}", g.label, g.slope, g.true_uplift)?;
    }
    writeln!(out, "{:<8} {:>14} {:>14} {:>12}", "model", "analytic AUUC", "MC mean", "MC stderr")?;
    for m in [&report.true_model, &report.challenger] {
        writeln!(out, "{:<8} {:>14.8} {:>14.8} {:>12.2e}", m.name, m.analytic_auuc, m.mc_auuc_mean, m.mc_auuc_stderr)?;
    }
    writeln!(out, "AUUC misranks: {}", report.verdict)?;
    writeln!(out, "MC agrees with analytic difference: {} (z = {:.2})", report.mc_agrees, report.mc_agreement_z)?;
    Ok(())
}

// ── variance-study / nu-sweep ───────────────────────────────────────────

fn cmd_variance_study<W: Write>(ctx: &Context, args: VarianceStudyArgs, out: &mut W) -> CliResult {
    let mut config: VarianceStudyConfig = read_json(&args.config)?;
    if ctx.seed_given {
        config.seed = ctx.seed;
    }
    let report = variance_study(&config)?;
    ctx.emit(&report, |sink| report.write_tidy_csv(sink))?;

    writeln!(out, "realizations: {}", report.realizations)?;
    writeln!(out, "{:>6} {:>14} {:>14}", "nu", "mean AUUC", "var AUUC")?;
    for i in 0..report.nus.len() {
        writeln!(out, "{:>6.3} {:>14.8} {:>14.6e}", report.nus[i], report.mean[i], report.variance[i])?;
    }
    writeln!(out, "empirical argmin nu: {}", report.argmin_nu_empirical)?;
    writeln!(out, "theoretical argmin nu: {:.6}", report.argmin_nu_theoretical)?;
    Ok(())
}

fn cmd_nu_sweep<W: Write>(ctx: &Context, args: NuSweepArgs, out: &mut W) -> CliResult {
    let p_grid = if args.p_y1.is_empty() { (0..=12).map(|i| 0.2 + 0.05 * i as f64).collect() } else { args.p_y1 };
    let config = SweepConfig {
        n_segments: args.segments,
        alpha: args.alpha,
        n: args.n,
        model: args.model,
        nus: if args.nus.is_empty() { default_nus() } else { args.nus },
        realizations: args.realizations,
        seed: ctx.seed,
        ..SweepConfig::default()
    };
    let report = nu_surface_sweep(&p_grid, &config)?;
    ctx.emit(&report, |sink| report.write_tidy_csv(sink))?;

    writeln!(out, "{:>8} {:>12} {:>12}", "P(Y=1)", "argmin emp", "argmin th")?;
    for row in &report.rows {
        writeln!(out, "{:>8.3} {:>12.3} {:>12.4}", row.p_y1, row.argmin_nu_empirical, row.argmin_nu_theoretical)?;
    }
    if let Some(slope) = report.argmin_slope {
        writeln!(out, "argmin slope against P(Y=1): {slope:.4}")?;
    }
    Ok(())
}

// ── pehe ────────────────────────────────────────────────────────────────

#[derive(Debug, Serialize)]
struct PeheOutput {
    units: usize,
    pehe: f64,
}

fn cmd_pehe<W: Write>(ctx: &Context, args: PeheArgs, out: &mut W) -> CliResult {
    let truth = read_column(&args.truth, &args.truth_column)?;
    let preds = read_column(&args.predictions, &args.pred_column)?;
    let mut ids: Vec<u64> = truth.keys().copied().collect();
    ids.sort_unstable();
    let tau: Vec<f64> = ids.iter().map(|id| truth[id]).collect();
    let tau_hat = ids
        .iter()
        .map(|id| preds.get(id).copied().ok_or_else(|| UpliftError::Domain(format!("no prediction for unit {id}"))))
        .collect::<Result<Vec<f64>, _>>()?;
    let value = pehe(&tau_hat, &tau)?;
    let report = PeheOutput { units: ids.len(), pehe: value };
    ctx.emit(&report, |sink| {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["units", "pehe"])?;
        w.write_record([report.units.to_string(), report.pehe.to_string()])?;
        w.flush()?;
        Ok(())
    })?;
    writeln!(out, "units: {}", report.units)?;
    writeln!(out, "PEHE: {value}")?;
    Ok(())
}
