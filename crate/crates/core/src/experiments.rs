//! Monte Carlo harness: the archetype counterexamples, unbiasedness of the
//! rescaled curve estimators, and the variance of AUUC along the V_ν family.
//!
//! Realization `r` of a study seeded with `s` draws its dataset from seed
//! `s ⊕ r`. Realizations run in parallel and are collected in index order
//! before any aggregation, so reports are bit-identical across thread counts.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{curve_rebalanced, curve_v1, curve_v2_rebalanced, interpolate_iso_uplift};
use crate::data::rank_by_score;
use crate::error::{Result, UpliftError};
use crate::generators::{generate, heterogeneous, toy1, toy2, toy3, GeneratedData, PopulationSpec, Scenario};
use crate::metrics::{
    auuc, expected_slope, merged_slope, optimal_nu, q_increment, theoretical_moments, Increment, Quadrature,
};

/// Absolute tolerance under which two analytic AUUCs count as equal.
pub const VERDICT_TOLERANCE: f64 = 1e-12;
/// |z| bound for Monte Carlo agreement checks.
pub const Z_BOUND: f64 = 4.0;

// ── Shared statistics ───────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub stderr: f64,
}

impl SampleSummary {
    pub fn of(xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let variance = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
        Self { mean, variance, stderr: (variance / m).sqrt() }
    }

    /// `(mean − target) / stderr`; zero when both the spread and the
    /// deviation vanish.
    pub fn z_against(&self, target: f64) -> f64 {
        let dev = self.mean - target;
        if self.stderr > 0.0 {
            dev / self.stderr
        } else if dev.abs() <= VERDICT_TOLERANCE {
            0.0
        } else {
            dev.signum() * f64::INFINITY
        }
    }
}

fn require_realizations(m: usize) -> Result<()> {
    if m < 2 {
        return Err(UpliftError::InvalidSpec(format!("at least 2 realizations are required, got {m}")));
    }
    Ok(())
}

fn require_nus(nus: &[f64]) -> Result<()> {
    if nus.is_empty() {
        return Err(UpliftError::InvalidSpec("the nu grid is empty".into()));
    }
    if let Some(nu) = nus.iter().find(|nu| !(0.0..=1.0).contains(*nu)) {
        return Err(UpliftError::InvalidSpec(format!("nu {nu} outside [0, 1]")));
    }
    Ok(())
}

fn run_realizations<T: Send>(
    spec: &PopulationSpec,
    m: usize,
    f: impl Fn(&GeneratedData) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..m as u64).into_par_iter().map(|r| generate(&spec.realization(r)).and_then(|data| f(&data))).collect()
}

/// Groups ordered by decreasing score, equal scores merged into one block.
fn ranked_blocks(group_scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..group_scores.len()).collect();
    order.sort_by(|&a, &b| group_scores[b].total_cmp(&group_scores[a]).then(a.cmp(&b)));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for g in order {
        match blocks.last_mut() {
            Some(block) if group_scores[block[0]] == group_scores[g] => block.push(g),
            _ => blocks.push(vec![g]),
        }
    }
    blocks
}

fn check_group_scores(spec: &PopulationSpec, group_scores: &[f64]) -> Result<()> {
    if group_scores.len() != spec.groups.len() {
        return Err(UpliftError::Dimension { expected: spec.groups.len(), got: group_scores.len() });
    }
    Ok(())
}

// ── Counterexamples ─────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Toy {
    Toy1,
    Toy2,
    Toy3,
}

impl Toy {
    pub fn scenario(self) -> Scenario {
        match self {
            Toy::Toy1 => toy1(),
            Toy::Toy2 => toy2(),
            Toy::Toy3 => toy3(),
        }
    }

    /// The model whose AUUC is compared against the true uplift `u`.
    pub fn challenger(self) -> &'static str {
        match self {
            Toy::Toy1 => "u_hat_n",
            Toy::Toy2 => "u_hat_d",
            Toy::Toy3 => "u_hat",
        }
    }
}

impl fmt::Display for Toy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Toy::Toy1 => "toy1",
            Toy::Toy2 => "toy2",
            Toy::Toy3 => "toy3",
        })
    }
}

impl FromStr for Toy {
    type Err = UpliftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy1" => Ok(Toy::Toy1),
            "toy2" => Ok(Toy::Toy2),
            "toy3" => Ok(Toy::Toy3),
            _ => Err(UpliftError::InvalidSpec(format!("unknown counterexample {s:?}; expected toy1, toy2 or toy3"))),
        }
    }
}

/// Curve estimator compared in a counterexample run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleCurve {
    #[default]
    V1,
    Rebalanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub toy: Toy,
    pub n: usize,
    pub realizations: usize,
    pub seed: u64,
    pub curve: CounterexampleCurve,
    /// Replaces every group's treatment probability.
    pub treatment_prob_override: Option<f64>,
}

impl CounterexampleConfig {
    pub fn new(toy: Toy) -> Self {
        Self {
            toy,
            n: 40_000,
            realizations: 200,
            seed: 0,
            curve: CounterexampleCurve::V1,
            treatment_prob_override: None,
        }
    }
}

/// A run of consecutive ranks covering one score level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub groups: Vec<String>,
    pub share: f64,
    /// Expected curve slope per unit of population share.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSlope {
    pub label: String,
    pub slope: f64,
    pub true_uplift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub name: String,
    pub group_scores: Vec<f64>,
    pub segments: Vec<Segment>,
    pub analytic_auuc: f64,
    pub mc_auuc_mean: f64,
    pub mc_auuc_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub toy: Toy,
    pub curve: CounterexampleCurve,
    pub n: usize,
    pub realizations: usize,
    pub seed: u64,
    pub treatment_probs: Vec<f64>,
    pub analytic_slopes: Vec<GroupSlope>,
    pub true_model: ModelOutcome,
    pub challenger: ModelOutcome,
    /// Analytic `AUUC(challenger) − AUUC(u)`.
    pub analytic_difference: f64,
    /// Does the AUUC score the challenger strictly above the true uplift?
    pub verdict: bool,
    /// Paired per-dataset `AUUC(challenger) − AUUC(u)`.
    pub mc_difference: SampleSummary,
    /// Paired difference mean over its standard error.
    pub mc_separation_z: f64,
    /// Deviation of the paired difference from the analytic one, in standard errors.
    pub mc_agreement_z: f64,
    pub mc_agrees: bool,
}

/// Expected slope of each group under `curve`: `q (β¹ + β⁰) − β⁰` for the
/// classical curve, the true uplift `β¹ − β⁰` for the rebalanced one.
pub fn group_slopes(spec: &PopulationSpec, curve: CounterexampleCurve) -> Vec<GroupSlope> {
    spec.groups
        .iter()
        .map(|g| GroupSlope {
            label: g.label.clone(),
            slope: match curve {
                CounterexampleCurve::V1 => expected_slope(g.treatment_prob, g.beta_treated, g.beta_control),
                CounterexampleCurve::Rebalanced => g.true_uplift(),
            },
            true_uplift: g.true_uplift(),
        })
        .collect()
}

/// The expected curve of a model as consecutive segments in ranking order.
/// Groups with equal scores form one segment whose slope is the
/// share-weighted mean of theirs.
pub fn analytic_segments(
    spec: &PopulationSpec,
    group_scores: &[f64],
    curve: CounterexampleCurve,
) -> Result<Vec<Segment>> {
    check_group_scores(spec, group_scores)?;
    let slopes = group_slopes(spec, curve);
    Ok(ranked_blocks(group_scores)
        .into_iter()
        .map(|block| {
            let parts: Vec<(f64, f64)> = block.iter().map(|&g| (spec.groups[g].share, slopes[g].slope)).collect();
            Segment {
                groups: block.iter().map(|&g| spec.groups[g].label.clone()).collect(),
                share: parts.iter().map(|p| p.0).sum(),
                slope: merged_slope(&parts),
            }
        })
        .collect())
}

/// Area under the piecewise-linear curve through the origin and the segment ends.
pub fn analytic_auuc(segments: &[Segment]) -> f64 {
    let mut value = 0.0;
    let mut area = 0.0;
    for s in segments {
        let next = value + s.share * s.slope;
        area += 0.5 * s.share * (value + next);
        value = next;
    }
    area
}

/// AUUC of one model on one dataset, ties interpolated, on the `1/N` scale.
pub fn realized_auuc(data: &GeneratedData, group_scores: &[f64], curve: CounterexampleCurve) -> Result<f64> {
    let scores = data.scores_for(group_scores)?;
    let scored = rank_by_score(&data.logged, &scores)?;
    let raw = match curve {
        CounterexampleCurve::V1 => curve_v1(&scored)?,
        CounterexampleCurve::Rebalanced => curve_rebalanced(&scored)?.normalized(),
    };
    Ok(auuc(&interpolate_iso_uplift(&raw, &scored)?))
}

pub fn run_counterexample(config: &CounterexampleConfig) -> Result<CounterexampleReport> {
    require_realizations(config.realizations)?;
    let scenario = config.toy.scenario();
    let mut spec = scenario.population.clone().with_n(config.n).with_seed(config.seed);
    if let Some(q) = config.treatment_prob_override {
        spec = spec.with_uniform_treatment_prob(q);
    }
    spec.validate()?;

    let model = |name: &str| {
        scenario
            .model(name)
            .map(|m| m.group_scores.clone())
            .ok_or_else(|| UpliftError::InvalidSpec(format!("missing model {name}")))
    };
    let truth = model("u")?;
    let challenger = model(config.toy.challenger())?;

    let pairs = run_realizations(&spec, config.realizations, |data| {
        Ok((realized_auuc(data, &truth, config.curve)?, realized_auuc(data, &challenger, config.curve)?))
    })?;
    let truth_mc = SampleSummary::of(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let challenger_mc = SampleSummary::of(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let diff = SampleSummary::of(&pairs.iter().map(|p| p.1 - p.0).collect::<Vec<_>>());

    let outcome = |name: &str, scores: Vec<f64>, mc: SampleSummary| -> Result<ModelOutcome> {
        let segments = analytic_segments(&spec, &scores, config.curve)?;
        Ok(ModelOutcome {
            name: name.to_owned(),
            analytic_auuc: analytic_auuc(&segments),
            group_scores: scores,
            segments,
            mc_auuc_mean: mc.mean,
            mc_auuc_stderr: mc.stderr,
        })
    };
    let true_model = outcome("u", truth, truth_mc)?;
    let challenger = outcome(config.toy.challenger(), challenger, challenger_mc)?;
    let analytic_difference = challenger.analytic_auuc - true_model.analytic_auuc;
    let mc_agreement_z = diff.z_against(analytic_difference);

    Ok(CounterexampleReport {
        toy: config.toy,
        curve: config.curve,
        n: config.n,
        realizations: config.realizations,
        seed: config.seed,
        treatment_probs: spec.groups.iter().map(|g| g.treatment_prob).collect(),
        analytic_slopes: group_slopes(&spec, config.curve),
        true_model,
        challenger,
        analytic_difference,
        verdict: analytic_difference > VERDICT_TOLERANCE,
        mc_difference: diff,
        mc_separation_z: diff.z_against(0.0),
        mc_agreement_z,
        mc_agrees: mc_agreement_z.abs() <= Z_BOUND,
    })
}

// ── Unbiasedness ────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessConfig {
    pub population: PopulationSpec,
    /// Ranking model, one score per group; defaults to the population's model scores.
    #[serde(default)]
    pub group_scores: Option<Vec<f64>>,
    pub r_grid: Vec<f64>,
    pub nus: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessCell {
    pub r: f64,
    pub k: usize,
    pub nu: f64,
    /// `(1/N) Σ_{i≤k} E[uᵢ]` from the group parameters in ranking order.
    pub target: f64,
    pub mean: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub alpha: f64,
    pub n: usize,
    pub realizations: usize,
    pub seed: u64,
    pub cells: Vec<UnbiasednessCell>,
}

impl UnbiasednessReport {
    pub fn max_abs_z(&self) -> f64 {
        self.cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// `k = ⌈r N⌉`, at least 1.
pub fn prefix_length(r: f64, n: usize) -> usize {
    ((r * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Expected `(1/N) Σ_{i≤k} uᵢ` when units are ranked by `group_scores`.
/// Groups are sized by [`PopulationSpec::allocation`]; inside a block of
/// tied groups every position carries the block's mean uplift.
pub fn expected_prefix_uplift(spec: &PopulationSpec, group_scores: &[f64], k: usize) -> Result<f64> {
    check_group_scores(spec, group_scores)?;
    let counts = spec.allocation();
    let mut remaining = k.min(spec.n);
    let mut total = 0.0;
    for block in ranked_blocks(group_scores) {
        let size: usize = block.iter().map(|&g| counts[g]).sum();
        if size == 0 {
            continue;
        }
        let mass: f64 = block.iter().map(|&g| counts[g] as f64 * spec.groups[g].true_uplift()).sum();
        let take = remaining.min(size);
        total += take as f64 * mass / size as f64;
        remaining -= take;
        if remaining == 0 {
            break;
        }
    }
    Ok(total / spec.n as f64)
}

/// Monte Carlo means of the rescaled V₁, V₂ and V_ν curves at `k = ⌈rN⌉`,
/// normalized by `1/N`, against their common expectation.
pub fn unbiasedness_check(config: &UnbiasednessConfig) -> Result<UnbiasednessReport> {
    require_realizations(config.realizations)?;
    require_nus(&config.nus)?;
    let spec = config.population.clone().with_seed(config.seed);
    spec.validate()?;
    let alpha = spec
        .rct_alpha()
        .ok_or_else(|| UpliftError::Precondition("unbiasedness_check needs an RCT population".into()))?;
    if let Some(r) = config.r_grid.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(UpliftError::InvalidSpec(format!("r = {r} outside (0, 1]")));
    }
    let scores = config.group_scores.clone().unwrap_or_else(|| spec.model_scores());
    check_group_scores(&spec, &scores)?;

    let n = spec.n;
    let ks: Vec<usize> = config.r_grid.iter().map(|&r| prefix_length(r, n)).collect();
    let samples = run_realizations(&spec, config.realizations, |data| {
        let scored = rank_by_score(&data.logged, &data.scores_for(&scores)?)?;
        let v1 = curve_rebalanced(&scored)?;
        let v2 = curve_v2_rebalanced(&scored)?;
        Ok(ks.iter().map(|&k| (v1.values()[k - 1] / n as f64, v2.values()[k - 1] / n as f64)).collect::<Vec<_>>())
    })?;

    let mut cells = Vec::new();
    for (j, (&r, &k)) in config.r_grid.iter().zip(&ks).enumerate() {
        let target = expected_prefix_uplift(&spec, &scores, k)?;
        for &nu in &config.nus {
            let values: Vec<f64> = samples.iter().map(|s| (1.0 - nu) * s[j].0 + nu * s[j].1).collect();
            let summary = SampleSummary::of(&values);
            cells.push(UnbiasednessCell {
                r,
                k,
                nu,
                target,
                mean: summary.mean,
                stderr: summary.stderr,
                z: summary.z_against(target),
            });
        }
    }
    Ok(UnbiasednessReport { alpha, n, realizations: config.realizations, seed: config.seed, cells })
}

// ── Variance of AUUC along V_ν ──────────────────────────────────────────

fn default_realizations() -> usize {
    101
}

/// `0, 0.05, …, 1`.
pub fn default_nus() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceStudyConfig {
    pub population: PopulationSpec,
    /// Ranking model, one score per group; defaults to the population's model scores.
    #[serde(default)]
    pub group_scores: Option<Vec<f64>>,
    #[serde(default = "default_nus")]
    pub nus: Vec<f64>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metric: Quadrature,
}

impl VarianceStudyConfig {
    pub fn new(population: PopulationSpec) -> Self {
        Self {
            population,
            group_scores: None,
            nus: default_nus(),
            realizations: 101,
            seed: 0,
            metric: Quadrature::Trapezoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_realizations(self.realizations)?;
        require_nus(&self.nus)?;
        self.population.validate()?;
        if let Some(s) = &self.group_scores {
            check_group_scores(&self.population, s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub nus: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Estimated sampling variance of each entry of `variance`.
    pub variance_of_variance: Vec<f64>,
    /// Grid point with the smallest sample variance.
    pub argmin_nu_empirical: f64,
    /// Vertex of the sample-variance parabola (the sample variance is
    /// exactly quadratic in ν); unclamped.
    pub argmin_nu_fitted: f64,
    /// `p₁ (1 − α) + p₀ α` with population-level rates.
    pub argmin_nu_theoretical: f64,
    pub p0: f64,
    pub p1: f64,
    pub alpha: f64,
    pub p_y1: f64,
    pub realizations: usize,
    pub seed: u64,
    pub metric: Quadrature,
}

impl ExperimentReport {
    /// Grid indices that are strict local minima of the variance curve.
    pub fn local_minima(&self) -> Vec<usize> {
        let v = &self.variance;
        (0..v.len()).filter(|&i| (i == 0 || v[i] < v[i - 1]) && (i + 1 == v.len() || v[i] < v[i + 1])).collect()
    }

    pub fn write_tidy_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["nu", "p_y1", "mean", "var"])?;
        self.tidy_rows(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn tidy_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for i in 0..self.nus.len() {
            w.write_record([
                self.nus[i].to_string(),
                self.p_y1.to_string(),
                self.mean[i].to_string(),
                self.variance[i].to_string(),
            ])?;
        }
        Ok(())
    }
}

/// Spread estimate `Var(s²) ≈ (m₄ − (M−3)/(M−1) m₂²) / M`.
fn variance_of_variance(xs: &[f64], mean: f64) -> f64 {
    let m = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m;
    ((m4 - (m - 3.0) / (m - 1.0) * m2 * m2) / m).max(0.0)
}

/// Sample variance of the AUUC of the rescaled V_ν curve for each ν.
///
/// Both curves share their x grid, so the area of V_ν is the same convex
/// combination of the V₁ and V₂ areas; each realization computes those two
/// areas once.
pub fn variance_study(config: &VarianceStudyConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let spec = config.population.clone().with_seed(config.seed);
    let scores = config.group_scores.clone().unwrap_or_else(|| spec.model_scores());
    let n = spec.n as f64;
    let metric = config.metric;

    let areas = run_realizations(&spec, config.realizations, |data| {
        let scored = rank_by_score(&data.logged, &data.scores_for(&scores)?)?;
        let a1 = metric.area(&curve_rebalanced(&scored)?) / n;
        let a2 = metric.area(&curve_v2_rebalanced(&scored)?) / n;
        Ok((a1, a2))
    })?;

    let mut mean = Vec::with_capacity(config.nus.len());
    let mut variance = Vec::with_capacity(config.nus.len());
    let mut var_of_var = Vec::with_capacity(config.nus.len());
    for &nu in &config.nus {
        let xs: Vec<f64> = areas.iter().map(|(a1, a2)| (1.0 - nu) * a1 + nu * a2).collect();
        let s = SampleSummary::of(&xs);
        mean.push(s.mean);
        variance.push(s.variance);
        var_of_var.push(variance_of_variance(&xs, s.mean));
    }
    let argmin = variance.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);

    let s1 = SampleSummary::of(&areas.iter().map(|a| a.0).collect::<Vec<_>>());
    let diffs: Vec<f64> = areas.iter().map(|(a1, a2)| a1 - a2).collect();
    let sd = SampleSummary::of(&diffs);
    let cov_1d = areas.iter().zip(&diffs).map(|((a1, _), d)| (a1 - s1.mean) * (d - sd.mean)).sum::<f64>()
        / (areas.len() as f64 - 1.0);
    let argmin_nu_fitted = if sd.variance > 0.0 { cov_1d / sd.variance } else { f64::NAN };

    let (p0, p1) = spec.mean_response_rates();
    let alpha = spec.groups.iter().map(|g| g.share * g.treatment_prob).sum::<f64>();
    Ok(ExperimentReport {
        nus: config.nus.clone(),
        mean,
        variance,
        variance_of_variance: var_of_var,
        argmin_nu_empirical: config.nus[argmin],
        argmin_nu_fitted,
        argmin_nu_theoretical: optimal_nu(p0, p1, alpha)?,
        p0,
        p1,
        alpha,
        p_y1: spec.mean_response_rate(),
        realizations: config.realizations,
        seed: config.seed,
        metric,
    })
}

// ── P(Y=1) sweep ────────────────────────────────────────────────────────

/// Heterogeneous RCT populations swept over their response rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_segments: usize,
    pub alpha: f64,
    pub n: usize,
    /// `good` ranks segments by their true uplift, `bad` by a permutation of it.
    pub model: String,
    pub nus: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub metric: Quadrature,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_segments: 10,
            alpha: 0.5,
            n: crate::generators::DEFAULT_HETEROGENEOUS_SIZE,
            model: "good".into(),
            nus: default_nus(),
            realizations: 101,
            seed: 0,
            metric: Quadrature::Trapezoid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub p_y1_grid: Vec<f64>,
    pub nus: Vec<f64>,
    pub rows: Vec<ExperimentReport>,
    /// Least-squares slope of the empirical argmin against P(Y=1).
    pub argmin_slope: Option<f64>,
    pub argmin_intercept: Option<f64>,
}

impl SweepReport {
    /// `variance[i][j]` for `p_y1_grid[i]`, `nus[j]`.
    pub fn variance_surface(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.variance.clone()).collect()
    }

    pub fn write_tidy_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["nu", "p_y1", "mean", "var"])?;
        for row in &self.rows {
            row.tidy_rows(&mut w)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// One variance study per target P(Y=1). Every row shares the sweep seed,
/// so rows differ only through the response rate.
pub fn nu_surface_sweep(p_y1_grid: &[f64], config: &SweepConfig) -> Result<SweepReport> {
    if p_y1_grid.is_empty() {
        return Err(UpliftError::InvalidSpec("the P(Y=1) grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(p_y1_grid.len());
    for &p in p_y1_grid {
        let scenario = heterogeneous(config.n_segments, config.alpha, p, config.seed)?;
        let scores = scenario
            .model(&config.model)
            .ok_or_else(|| UpliftError::InvalidSpec(format!("unknown model {:?}; expected good or bad", config.model)))?
            .group_scores
            .clone();
        rows.push(variance_study(&VarianceStudyConfig {
            population: scenario.population.with_n(config.n),
            group_scores: Some(scores),
            nus: config.nus.clone(),
            realizations: config.realizations,
            seed: config.seed,
            metric: config.metric,
        })?);
    }
    let argmins: Vec<f64> = rows.iter().map(|r| r.argmin_nu_empirical).collect();
    let fit = least_squares(p_y1_grid, &argmins);
    Ok(SweepReport {
        p_y1_grid: p_y1_grid.to_vec(),
        nus: config.nus.clone(),
        rows,
        argmin_slope: fit.map(|f| f.0),
        argmin_intercept: fit.map(|f| f.1),
    })
}

// ── Increment covariance ────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// `−(p₁ − p₀)²`.
    pub theoretical: f64,
    pub z: f64,
}

/// Sample covariance of `Q₁(α)` and `Q₂(α)` over `samples` units with
/// Bernoulli treatment and outcomes.
pub fn increment_covariance(p0: f64, p1: f64, alpha: f64, samples: usize, seed: u64) -> Result<CovarianceEstimate> {
    let theory = theoretical_moments(p0, p1, alpha)?;
    require_realizations(samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            let t = rng.gen_bool(alpha);
            let y = rng.gen_bool(if t { p1 } else { p0 });
            (q_increment(y, t, alpha, Increment::Q1), q_increment(y, t, alpha, Increment::Q2))
        })
        .collect();
    let m = samples as f64;
    let m1 = draws.iter().map(|d| d.0).sum::<f64>() / m;
    let m2 = draws.iter().map(|d| d.1).sum::<f64>() / m;
    let products: Vec<f64> = draws.iter().map(|(a, b)| (a - m1) * (b - m2)).collect();
    let s = SampleSummary::of(&products);
    let estimate = s.mean * m / (m - 1.0);
    let summary = SampleSummary { mean: estimate, ..s };
    Ok(CovarianceEstimate {
        estimate,
        stderr: s.stderr,
        theoretical: theory.cov_q1q2,
        z: summary.z_against(theory.cov_q1q2),
    })
}
