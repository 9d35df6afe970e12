//! Synthetic logged-bandit populations built from piecewise-constant groups.
//!
//! Each group has a population share, a treatment probability and two
//! Bernoulli potential-outcome rates. Noiseless archetypes are the corners
//! of that model: convincing (β¹=1, β⁰=0), sure thing (1, 1), lost cause
//! (0, 0) and sleeping dog (0, 1).
//!
//! Group sizes use exact proportional allocation (largest remainder), and
//! units are shuffled so that groups sharing a score interleave randomly in
//! the ranking. Treatment and outcomes are Bernoulli draws from a ChaCha8
//! stream seeded by the spec.

use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Features, FullFeedbackDataset, FullFeedbackRecord, LoggedBanditDataset, LoggedBanditRecord};
use crate::error::{Result, UpliftError};

pub const DEFAULT_TOY_SIZE: usize = 40_000;
pub const DEFAULT_HETEROGENEOUS_SIZE: usize = 10_000;

// ── Specs ───────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    /// Population fraction.
    pub share: f64,
    /// `P(t = 1 | x)` inside the group.
    pub treatment_prob: f64,
    /// `P(y¹ = 1)`.
    pub beta_treated: f64,
    /// `P(y⁰ = 1)`.
    pub beta_control: f64,
    /// Constant score the evaluated model assigns to the group.
    pub model_score: f64,
}

impl GroupSpec {
    pub fn new(
        label: &str,
        share: f64,
        treatment_prob: f64,
        beta_treated: f64,
        beta_control: f64,
        model_score: f64,
    ) -> Self {
        Self { label: label.to_owned(), share, treatment_prob, beta_treated, beta_control, model_score }
    }

    pub fn true_uplift(&self) -> f64 {
        self.beta_treated - self.beta_control
    }

    /// `P(y = 1)` of a unit of the group under its logging policy.
    pub fn response_rate(&self) -> f64 {
        self.treatment_prob * self.beta_treated + (1.0 - self.treatment_prob) * self.beta_control
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub groups: Vec<GroupSpec>,
    pub n: usize,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(UpliftError::InvalidSpec(msg));
        if self.groups.is_empty() {
            return invalid("at least one group is required".into());
        }
        if self.n == 0 {
            return invalid("n must be at least 1".into());
        }
        for g in &self.groups {
            if !(g.share > 0.0 && g.share <= 1.0) {
                return invalid(format!("group {}: share {} outside (0, 1]", g.label, g.share));
            }
            if !(g.treatment_prob > 0.0 && g.treatment_prob < 1.0) {
                return invalid(format!("group {}: treatment_prob {} outside (0, 1)", g.label, g.treatment_prob));
            }
            for (name, b) in [("beta_treated", g.beta_treated), ("beta_control", g.beta_control)] {
                if !(0.0..=1.0).contains(&b) {
                    return invalid(format!("group {}: {name} {b} outside [0, 1]", g.label));
                }
            }
            if !g.model_score.is_finite() {
                return invalid(format!("group {}: model_score is not finite", g.label));
            }
        }
        let total: f64 = self.groups.iter().map(|g| g.share).sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("group shares sum to {total}, not 1"));
        }
        Ok(())
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same population with the treatment probability of every group set to `q`.
    pub fn with_uniform_treatment_prob(mut self, q: f64) -> Self {
        for g in &mut self.groups {
            g.treatment_prob = q;
        }
        self
    }

    /// Spec of Monte Carlo realization `r`: seed `seed ⊕ r`.
    pub fn realization(&self, r: u64) -> Self {
        self.clone().with_seed(self.seed ^ r)
    }

    /// Common treatment probability, when the population is an RCT.
    pub fn rct_alpha(&self) -> Option<f64> {
        let alpha = self.groups.first()?.treatment_prob;
        self.groups.iter().all(|g| (g.treatment_prob - alpha).abs() <= 1e-12).then_some(alpha)
    }

    /// Group sizes: `⌊share · n⌋`, the remainder going to the largest
    /// fractional parts (ties to the earlier group).
    pub fn allocation(&self) -> Vec<usize> {
        let exact: Vec<f64> = self.groups.iter().map(|g| g.share * self.n as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut by_remainder: Vec<usize> = (0..counts.len()).collect();
        by_remainder.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &g in by_remainder.iter().cycle().take(self.n.saturating_sub(assigned)) {
            counts[g] += 1;
        }
        counts
    }

    pub fn model_scores(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.model_score).collect()
    }

    pub fn true_uplift_scores(&self) -> Vec<f64> {
        self.groups.iter().map(GroupSpec::true_uplift).collect()
    }

    /// Population-level `(p₀, p₁) = (P(y⁰ = 1), P(y¹ = 1))`, share-weighted.
    pub fn mean_response_rates(&self) -> (f64, f64) {
        self.groups
            .iter()
            .fold((0.0, 0.0), |(p0, p1), g| (p0 + g.share * g.beta_control, p1 + g.share * g.beta_treated))
    }

    /// Population-level `P(y = 1)`.
    pub fn mean_response_rate(&self) -> f64 {
        self.groups.iter().map(|g| g.share * g.response_rate()).sum()
    }
}

/// Constant per-group scores of one uplift model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    pub name: String,
    pub group_scores: Vec<f64>,
}

impl ScoringModel {
    pub fn new(name: &str, group_scores: Vec<f64>) -> Self {
        Self { name: name.to_owned(), group_scores }
    }
}

/// A population with the named models evaluated on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub population: PopulationSpec,
    pub models: Vec<ScoringModel>,
}

impl Scenario {
    pub fn model(&self, name: &str) -> Option<&ScoringModel> {
        self.models.iter().find(|m| m.name == name)
    }
}

// ── Generation ──────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub logged: LoggedBanditDataset,
    pub full: FullFeedbackDataset,
    /// Evaluated-model score of each unit.
    pub scores: Vec<f64>,
    /// Group index of each unit.
    pub groups: Vec<usize>,
}

impl GeneratedData {
    /// Per-unit scores of a model given as one score per group.
    pub fn scores_for(&self, group_scores: &[f64]) -> Result<Vec<f64>> {
        let n_groups = self.groups.iter().max().map_or(0, |g| g + 1);
        if group_scores.len() < n_groups {
            return Err(UpliftError::Dimension { expected: n_groups, got: group_scores.len() });
        }
        Ok(self.groups.iter().map(|&g| group_scores[g]).collect())
    }
}

pub fn generate(spec: &PopulationSpec) -> Result<GeneratedData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut groups: Vec<usize> =
        spec.allocation().iter().enumerate().flat_map(|(g, &count)| std::iter::repeat_n(g, count)).collect();
    groups.shuffle(&mut rng);

    let labels: Vec<Arc<str>> = spec.groups.iter().map(|g| Arc::from(g.label.as_str())).collect();
    let mut logged = Vec::with_capacity(spec.n);
    let mut full = Vec::with_capacity(spec.n);
    let mut scores = Vec::with_capacity(spec.n);
    for (i, &g) in groups.iter().enumerate() {
        let group = &spec.groups[g];
        let treated = rng.gen_bool(group.treatment_prob);
        let y1 = f64::from(u8::from(rng.gen_bool(group.beta_treated)));
        let y0 = f64::from(u8::from(rng.gen_bool(group.beta_control)));
        let features = Features::Label(labels[g].clone());
        let (outcome, propensity) = if treated { (y1, group.treatment_prob) } else { (y0, 1.0 - group.treatment_prob) };
        logged.push(LoggedBanditRecord::new(i as u64, features.clone(), treated, outcome, propensity));
        full.push(FullFeedbackRecord { unit_id: i as u64, features, outcome_treated: y1, outcome_control: y0 });
        scores.push(group.model_score);
    }

    Ok(GeneratedData {
        logged: LoggedBanditDataset::new(logged)?,
        full: FullFeedbackDataset { records: full },
        scores,
        groups,
    })
}

/// Writes the `unit_id,y1,y0,tau,score_u_true,score_model` sidecar.
pub fn write_ground_truth<W: Write>(sink: W, spec: &PopulationSpec, data: &GeneratedData) -> Result<()> {
    let true_scores = data.scores_for(&spec.true_uplift_scores())?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["unit_id", "y1", "y0", "tau", "score_u_true", "score_model"])?;
    for (i, r) in data.full.records.iter().enumerate() {
        w.write_record([
            r.unit_id.to_string(),
            r.outcome_treated.to_string(),
            r.outcome_control.to_string(),
            r.true_ite().to_string(),
            true_scores[i].to_string(),
            data.scores[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ── Counterexample populations ──────────────────────────────────────────

fn archetypes(q: [f64; 4], scores: [f64; 4]) -> Vec<GroupSpec> {
    vec![
        GroupSpec::new("CO", 0.25, q[0], 1.0, 0.0, scores[0]),
        GroupSpec::new("ST", 0.25, q[1], 1.0, 1.0, scores[1]),
        GroupSpec::new("LC", 0.25, q[2], 0.0, 0.0, scores[2]),
        GroupSpec::new("SD", 0.25, q[3], 0.0, 1.0, scores[3]),
    ]
}

/// Four noiseless archetype groups with feature-dependent treatment
/// probabilities (1/4, 5/6, 5/12, 1/2), overall treated fraction 1/2.
/// The evaluated model `u_hat_n` cannot separate ST from LC.
pub fn toy1() -> Scenario {
    let u_hat_n = [0.0, 1.0, 1.0, -1.0];
    let groups = archetypes([0.25, 5.0 / 6.0, 5.0 / 12.0, 0.5], u_hat_n);
    let population = PopulationSpec { groups, n: DEFAULT_TOY_SIZE, seed: 0 };
    Scenario {
        models: vec![
            ScoringModel::new("u", population.true_uplift_scores()),
            ScoringModel::new("u_hat_n", u_hat_n.to_vec()),
        ],
        population,
    }
}

/// The archetypes under a uniform treatment probability of 3/4. The
/// evaluated model `u_hat_d` separates ST from LC; `u_hat_n` does not.
pub fn toy2() -> Scenario {
    let u_hat_d = [1.0, 0.5, -0.5, -1.0];
    let groups = archetypes([0.75; 4], u_hat_d);
    let population = PopulationSpec { groups, n: DEFAULT_TOY_SIZE, seed: 0 };
    Scenario {
        models: vec![
            ScoringModel::new("u", population.true_uplift_scores()),
            ScoringModel::new("u_hat_d", u_hat_d.to_vec()),
            ScoringModel::new("u_hat_n", vec![1.0, 0.5, 0.5, -1.0]),
        ],
        population,
    }
}

/// Two equal noisy groups treated with probability 0.1, with
/// `(β¹, β⁰) = (0.4, 0.2)` and `(0.2, 0.1)`. The evaluated model `u_hat`
/// ranks them in the reverse order of their true uplift.
pub fn toy3() -> Scenario {
    let u_hat = [0.1, 0.2];
    let groups =
        vec![GroupSpec::new("X1", 0.5, 0.1, 0.4, 0.2, u_hat[0]), GroupSpec::new("X2", 0.5, 0.1, 0.2, 0.1, u_hat[1])];
    let population = PopulationSpec { groups, n: DEFAULT_TOY_SIZE, seed: 0 };
    Scenario {
        models: vec![ScoringModel::new("u", vec![0.2, 0.1]), ScoringModel::new("u_hat", u_hat.to_vec())],
        population,
    }
}

pub fn toy1_spec() -> PopulationSpec {
    toy1().population
}

pub fn toy2_spec() -> PopulationSpec {
    toy2().population
}

pub fn toy3_spec() -> PopulationSpec {
    toy3().population
}

// ── Heterogeneous RCT population ────────────────────────────────────────

const MAX_ATTEMPTS: u64 = 100;
const BASELINE_SPREAD: f64 = 0.05;
const UPLIFT_RANGE: (f64, f64) = (-0.1, 0.3);

/// Equal-share segments of an RCT with treatment probability `alpha`.
///
/// Each segment draws a baseline offset and an uplift; potential-outcome
/// rates are placed so that `α β¹ + (1 − α) β⁰` equals the shifted
/// baseline, and the baselines are shifted so that the population `P(y = 1)`
/// equals `p_y1_target`. The `good` model scores each segment by its true
/// uplift; the `bad` model uses a random permutation of those scores.
pub fn heterogeneous(n_segments: usize, alpha: f64, p_y1_target: f64, seed: u64) -> Result<Scenario> {
    if n_segments < 2 {
        return Err(UpliftError::InvalidSpec("at least two segments are required".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(UpliftError::InvalidSpec(format!("alpha {alpha} outside (0, 1)")));
    }
    if !(p_y1_target > 0.0 && p_y1_target < 1.0) {
        return Err(UpliftError::InvalidSpec(format!("p_y1_target {p_y1_target} outside (0, 1)")));
    }

    for attempt in 0..MAX_ATTEMPTS {
        let derived = seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(derived);
        let baselines: Vec<f64> = (0..n_segments).map(|_| rng.gen_range(-BASELINE_SPREAD..BASELINE_SPREAD)).collect();
        let uplifts: Vec<f64> = (0..n_segments).map(|_| rng.gen_range(UPLIFT_RANGE.0..UPLIFT_RANGE.1)).collect();
        let shift = p_y1_target - baselines.iter().sum::<f64>() / n_segments as f64;

        let share = 1.0 / n_segments as f64;
        let groups: Vec<GroupSpec> = baselines
            .iter()
            .zip(&uplifts)
            .enumerate()
            .map(|(s, (b, u))| {
                let rate = b + shift;
                let beta1 = rate + (1.0 - alpha) * u;
                let beta0 = rate - alpha * u;
                GroupSpec::new(&format!("S{s}"), share, alpha, beta1, beta0, beta1 - beta0)
            })
            .collect();

        let feasible =
            groups.iter().all(|g| (0.0..=1.0).contains(&g.beta_treated) && (0.0..=1.0).contains(&g.beta_control));
        let mut good: Vec<f64> = groups.iter().map(|g| g.model_score).collect();
        good.sort_by(f64::total_cmp);
        let distinct = good.windows(2).all(|w| w[0] < w[1]);
        if !(feasible && distinct) {
            continue;
        }

        let good: Vec<f64> = groups.iter().map(|g| g.model_score).collect();
        let mut bad = good.clone();
        while bad == good {
            bad.shuffle(&mut rng);
        }
        let population = PopulationSpec { groups, n: DEFAULT_HETEROGENEOUS_SIZE, seed };
        return Ok(Scenario {
            population,
            models: vec![ScoringModel::new("good", good), ScoringModel::new("bad", bad)],
        });
    }
    Err(UpliftError::InvalidSpec(format!(
        "no feasible heterogeneous population for alpha {alpha}, P(y=1) {p_y1_target} after {MAX_ATTEMPTS} attempts"
    )))
}

pub fn heterogeneous_spec(n_segments: usize, alpha: f64, p_y1_target: f64, seed: u64) -> Result<PopulationSpec> {
    heterogeneous(n_segments, alpha, p_y1_target, seed).map(|s| s.population)
}
