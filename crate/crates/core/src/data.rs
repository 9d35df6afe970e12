//! Logged-bandit datasets, CSV ingestion, ranking by predicted uplift and
//! the top-k counting primitives every curve formula consumes.
//!
//! A logged record carries the treatment actually applied, the outcome
//! observed under that treatment and the logging propensity
//! `q = π(t | x)` of the applied treatment (not of treatment itself: a
//! control unit from a group treated with probability 0.9 has `q = 0.1`).
//!
//! Ranks are 0-based in this API. Prefix lengths `k` run over `1..=N`, so
//! the end of an iso-uplift group expressed as a prefix length is also its
//! 1-based last position.

use std::fmt;
use std::io::{Read, Write};
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UpliftError};

// ── Records ─────────────────────────────────────────────────────────────

/// Unit features. Metrics never look at them; they only travel with the
/// record for bookkeeping and serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Features {
    Label(Arc<str>),
    Vector(Vec<f64>),
}

impl Features {
    pub fn label(s: &str) -> Self {
        Features::Label(Arc::from(s))
    }

    /// Parses the CSV representation: `|`-joined reals become a vector,
    /// anything else is a label.
    pub fn parse(raw: &str) -> Self {
        let parts: Option<Vec<f64>> = raw.split('|').map(|p| p.trim().parse().ok()).collect();
        match parts {
            Some(v) if !raw.trim().is_empty() => Features::Vector(v),
            _ => Features::label(raw),
        }
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Features::Label(s) => f.write_str(s),
            Features::Vector(v) => {
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

/// One logged observation `(x, t, y, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedBanditRecord {
    pub unit_id: u64,
    pub features: Features,
    pub treated: bool,
    pub outcome: f64,
    /// Probability the logging policy assigned to the treatment actually applied.
    pub propensity: f64,
}

impl LoggedBanditRecord {
    pub fn new(unit_id: u64, features: Features, treated: bool, outcome: f64, propensity: f64) -> Self {
        Self { unit_id, features, treated, outcome, propensity }
    }

    fn validate(&self) -> Result<()> {
        if !(self.propensity > 0.0 && self.propensity < 1.0) {
            return Err(UpliftError::OverlapViolation { unit_id: self.unit_id, value: self.propensity });
        }
        if !self.outcome.is_finite() {
            return Err(UpliftError::Domain(format!("unit {}: outcome {} is not finite", self.unit_id, self.outcome)));
        }
        Ok(())
    }

    /// Probability that this unit's logging policy treats it.
    pub fn treatment_probability(&self) -> f64 {
        if self.treated {
            self.propensity
        } else {
            1.0 - self.propensity
        }
    }
}

/// Both potential outcomes of a unit, available only for synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct FullFeedbackRecord {
    pub unit_id: u64,
    pub features: Features,
    pub outcome_treated: f64,
    pub outcome_control: f64,
}

impl FullFeedbackRecord {
    /// Individual treatment effect `y¹ − y⁰`.
    pub fn true_ite(&self) -> f64 {
        self.outcome_treated - self.outcome_control
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FullFeedbackDataset {
    pub records: Vec<FullFeedbackRecord>,
}

impl FullFeedbackDataset {
    pub fn true_ite(&self) -> Vec<f64> {
        self.records.iter().map(FullFeedbackRecord::true_ite).collect()
    }
}

// ── Dataset ─────────────────────────────────────────────────────────────

/// A validated logged-bandit dataset. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedBanditDataset {
    records: Vec<LoggedBanditRecord>,
    scores: Option<Vec<f64>>,
    binary_outcome: bool,
}

impl LoggedBanditDataset {
    pub fn new(records: Vec<LoggedBanditRecord>) -> Result<Self> {
        for r in &records {
            r.validate()?;
        }
        let binary_outcome = records.iter().all(|r| r.outcome == 0.0 || r.outcome == 1.0);
        Ok(Self { records, scores: None, binary_outcome })
    }

    /// Attaches per-record predicted uplifts carried alongside the data.
    pub fn with_scores(mut self, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != self.records.len() {
            return Err(UpliftError::Dimension { expected: self.records.len(), got: scores.len() });
        }
        self.scores = Some(scores);
        Ok(self)
    }

    /// Builds a dataset with label-less records from parallel arrays.
    pub fn from_columns(treated: &[bool], outcomes: &[f64], propensities: &[f64]) -> Result<Self> {
        let n = treated.len();
        for len in [outcomes.len(), propensities.len()] {
            if len != n {
                return Err(UpliftError::Dimension { expected: n, got: len });
            }
        }
        let records = (0..n)
            .map(|i| LoggedBanditRecord::new(i as u64, Features::label(""), treated[i], outcomes[i], propensities[i]))
            .collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[LoggedBanditRecord] {
        &self.records
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_binary_outcome(&self) -> bool {
        self.binary_outcome
    }

    pub fn treated_count(&self) -> usize {
        self.records.iter().filter(|r| r.treated).count()
    }
}

// ── CSV ─────────────────────────────────────────────────────────────────

#[derive(Debug, Deserialize)]
struct CsvRow {
    unit_id: String,
    features: String,
    treatment: String,
    outcome: String,
    propensity: String,
    #[serde(default)]
    score: Option<String>,
}

fn parse_field<T: std::str::FromStr>(raw: &str, name: &str, line: u64) -> Result<T> {
    raw.trim().parse().map_err(|_| UpliftError::Parse { line, message: format!("cannot parse {name} from {raw:?}") })
}

/// Reads a dataset in the `unit_id,features,treatment,outcome,propensity[,score]`
/// schema. The header row is required.
pub fn load_dataset<R: Read>(source: R) -> Result<LoggedBanditDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    for required in ["unit_id", "features", "treatment", "outcome", "propensity"] {
        if !headers.iter().any(|h| h == required) {
            return Err(UpliftError::Parse { line: 1, message: format!("missing column {required:?}") });
        }
    }
    let has_score = headers.iter().any(|h| h == "score");

    let mut records = Vec::new();
    let mut scores = Vec::new();
    for raw in reader.records() {
        let raw = raw.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            UpliftError::Parse { line, message: e.to_string() }
        })?;
        let line = raw.position().map_or(0, |p| p.line());
        let row: CsvRow =
            raw.deserialize(Some(&headers)).map_err(|e| UpliftError::Parse { line, message: e.to_string() })?;
        let unit_id: u64 = parse_field(&row.unit_id, "unit_id", line)?;
        let treated = match row.treatment.trim() {
            "1" => true,
            "0" => false,
            other => return Err(UpliftError::Domain(format!("line {line}: treatment must be 0 or 1, got {other:?}"))),
        };
        let outcome: f64 = parse_field(&row.outcome, "outcome", line)?;
        let propensity: f64 = parse_field(&row.propensity, "propensity", line)?;
        let record = LoggedBanditRecord::new(unit_id, Features::parse(&row.features), treated, outcome, propensity);
        record.validate()?;
        records.push(record);
        if has_score {
            let raw = row.score.unwrap_or_default();
            scores.push(parse_field(&raw, "score", line)?);
        }
    }
    let dataset = LoggedBanditDataset::new(records)?;
    if has_score {
        dataset.with_scores(scores)
    } else {
        Ok(dataset)
    }
}

/// Writes a dataset in the ingestion schema, with a `score` column when
/// scores are given (explicitly or attached to the dataset).
pub fn write_dataset<W: Write>(sink: W, dataset: &LoggedBanditDataset, scores: Option<&[f64]>) -> Result<()> {
    let scores = scores.or(dataset.scores());
    if let Some(s) = scores {
        if s.len() != dataset.len() {
            return Err(UpliftError::Dimension { expected: dataset.len(), got: s.len() });
        }
    }
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["unit_id", "features", "treatment", "outcome", "propensity"];
    if scores.is_some() {
        header.push("score");
    }
    w.write_record(&header)?;
    for (i, r) in dataset.records().iter().enumerate() {
        let mut row = vec![
            r.unit_id.to_string(),
            r.features.to_string(),
            u8::from(r.treated).to_string(),
            r.outcome.to_string(),
            r.propensity.to_string(),
        ];
        if let Some(s) = scores {
            row.push(s[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

// ── Ranking ─────────────────────────────────────────────────────────────

/// The fields of a record that curve estimators read, in ranked order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedUnit {
    pub treated: bool,
    pub outcome: f64,
    pub propensity: f64,
    pub score: f64,
}

impl RankedUnit {
    pub fn is_responder(&self) -> bool {
        self.outcome == 1.0
    }
}

/// A dataset sorted by non-increasing predicted uplift, with its
/// iso-uplift groups (maximal runs of equal score).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    units: Vec<RankedUnit>,
    order: Vec<usize>,
    group_ends: Vec<usize>,
    binary_outcome: bool,
}

/// Sorts by decreasing score. Ties keep the original record order, so the
/// permutation is deterministic.
pub fn rank_by_score(dataset: &LoggedBanditDataset, scores: &[f64]) -> Result<ScoredDataset> {
    if scores.len() != dataset.len() {
        return Err(UpliftError::Dimension { expected: dataset.len(), got: scores.len() });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(UpliftError::Domain(format!("score at index {i} is not finite: {}", scores[i])));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort: equal scores keep ascending original index.
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let records = dataset.records();
    let units: Vec<RankedUnit> = order
        .iter()
        .map(|&i| {
            let r = &records[i];
            RankedUnit { treated: r.treated, outcome: r.outcome, propensity: r.propensity, score: scores[i] }
        })
        .collect();

    let mut group_ends = Vec::new();
    for k in 1..=units.len() {
        if k == units.len() || units[k].score != units[k - 1].score {
            group_ends.push(k);
        }
    }

    Ok(ScoredDataset { units, order, group_ends, binary_outcome: dataset.is_binary_outcome() })
}

impl ScoredDataset {
    /// Units in ranked order.
    pub fn units(&self) -> &[RankedUnit] {
        &self.units
    }

    /// The sorting permutation: `order()[rank]` is the original (0-based) index.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Prefix lengths at which an iso-uplift group ends (the set `L`).
    pub fn group_ends(&self) -> &[usize] {
        &self.group_ends
    }

    /// Iso-uplift groups as ranges of sorted positions.
    pub fn iso_groups(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let starts = std::iter::once(0).chain(self.group_ends.iter().copied());
        starts.zip(self.group_ends.iter().copied()).map(|(s, e)| s..e)
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn is_binary_outcome(&self) -> bool {
        self.binary_outcome
    }

    pub fn treated_count(&self) -> usize {
        self.units.iter().filter(|u| u.treated).count()
    }

    pub(crate) fn require_binary(&self, what: &str) -> Result<()> {
        if self.binary_outcome {
            Ok(())
        } else {
            Err(UpliftError::Domain(format!("{what} requires binary outcomes")))
        }
    }

    /// Counts over the top `k` ranked units, `1 <= k <= N`.
    pub fn top_k_counts(&self, k: usize) -> Result<TopKCounts> {
        if k == 0 || k > self.len() {
            return Err(UpliftError::Bounds { index: k, len: self.len() });
        }
        Ok(self.units[..k].iter().fold(TopKCounts::default(), |acc, u| acc.push(u)))
    }

    /// `top_k_counts(k)` for every `k` in `1..=N`, in one pass.
    pub fn prefix_counts(&self) -> Vec<TopKCounts> {
        self.units
            .iter()
            .scan(TopKCounts::default(), |acc, u| {
                *acc = acc.push(u);
                Some(*acc)
            })
            .collect()
    }
}

/// Treated/control sizes and responder counts among the top-k units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKCounts {
    pub n_treated: usize,
    pub n_control: usize,
    pub responders_treated: usize,
    pub responders_control: usize,
}

impl TopKCounts {
    fn push(mut self, u: &RankedUnit) -> Self {
        let responder = usize::from(u.is_responder());
        if u.treated {
            self.n_treated += 1;
            self.responders_treated += responder;
        } else {
            self.n_control += 1;
            self.responders_control += responder;
        }
        self
    }

    pub fn k(&self) -> usize {
        self.n_treated + self.n_control
    }
}
