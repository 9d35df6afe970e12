//! Evaluation of uplift models from logged bandit feedback.
//!
//! Scores rank a population; cumulative uplift curves estimated from the
//! observed (treatment, outcome, propensity) triples summarize how well the
//! ranking targets units that respond to treatment. The crate covers the
//! curve estimators, their areas, synthetic populations with known ground
//! truth, and the Monte Carlo studies built on top of them.

pub mod cli;
pub mod curves;
pub mod data;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod metrics;

pub use curves::{Curve, Estimator, GappedCurve, KernelSpec, Scale, Table1Grid, Table1Variant};
pub use data::{
    load_dataset, rank_by_score, write_dataset, Features, FullFeedbackDataset, FullFeedbackRecord, LoggedBanditDataset,
    LoggedBanditRecord, ScoredDataset, TopKCounts,
};
pub use error::{Result, UpliftError};
pub use generators::{generate, GeneratedData, GroupSpec, PopulationSpec, Scenario};
pub use metrics::{area_under_curve, auuc, delta_auuc, pehe, MetricReport};
