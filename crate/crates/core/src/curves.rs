//! Discrete uplift / Qini curve estimators.
//!
//! Every constructor walks the units in ranked order and accumulates a
//! per-unit contribution. A virtual origin `(0, 0)` precedes the first
//! point; `xs[k-1]` is the x coordinate after the top `k` units.
//!
//! Cumulative values at the end of each iso-uplift group are summed in a
//! canonical order (contributions sorted by value), so they are bitwise
//! independent of how records inside a group happen to be ordered.
//!
//! Scales:
//! - [`Scale::Normalized`]: the `1/N` convention, `V̂(k) = (1/N) Σ_{i≤k} …`.
//! - [`Scale::Absolute`]: raw sums, e.g. the propensity-rebalanced
//!   `V(k) = Σ_{i≤k} (1/qᵢ)(yᵢ tᵢ − yᵢ (1 − tᵢ))`, which is `N` times its
//!   normalized counterpart. Model comparison is unaffected by the scale.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{RankedUnit, ScoredDataset};
use crate::error::{Result, UpliftError};

// ── Curve ───────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Normalized,
    Absolute,
}

/// Which estimator built a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    /// Classical rule: up on treated responders, down on control responders.
    V1,
    /// Inverted labels: up on control non-responders, down on treated non-responders.
    V2,
    Vnu {
        nu: f64,
    },
    /// `V1` with every increment weighted by `1/q` and x steps of `1/(2q)`.
    Rebalanced,
    RebalancedV2,
    RebalancedVnu {
        nu: f64,
    },
    IpsLocal {
        half_width: usize,
    },
    IpsGlobal,
    Table1 {
        variant: Table1Variant,
    },
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::V1 => f.write_str("v1"),
            Estimator::V2 => f.write_str("v2"),
            Estimator::Vnu { nu } => write!(f, "vnu(nu={nu})"),
            Estimator::Rebalanced => f.write_str("rebalanced"),
            Estimator::RebalancedV2 => f.write_str("rebalanced-v2"),
            Estimator::RebalancedVnu { nu } => write!(f, "rebalanced-vnu(nu={nu})"),
            Estimator::IpsLocal { half_width } => write!(f, "ips-local(w={half_width})"),
            Estimator::IpsGlobal => f.write_str("ips-global"),
            Estimator::Table1 { variant } => write!(f, "table1:{variant}"),
        }
    }
}

/// A discrete curve over the ranked population.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    xs: Vec<f64>,
    values: Vec<f64>,
    scale: Scale,
    estimator: Estimator,
    population: usize,
    interpolated: bool,
}

impl Curve {
    fn new(xs: Vec<f64>, values: Vec<f64>, scale: Scale, estimator: Estimator, population: usize) -> Self {
        debug_assert_eq!(xs.len(), values.len());
        Self { xs, values, scale, estimator, population, interpolated: false }
    }

    /// Builds a curve from raw points, e.g. for tests or external data.
    pub fn from_points(xs: Vec<f64>, values: Vec<f64>, scale: Scale, estimator: Estimator) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(UpliftError::Dimension { expected: xs.len(), got: values.len() });
        }
        if xs.is_empty() {
            return Err(UpliftError::Domain("a curve needs at least one point".into()));
        }
        if xs.windows(2).any(|w| w[1] < w[0]) || xs[0] < 0.0 {
            return Err(UpliftError::Domain("curve xs must be non-negative and non-decreasing".into()));
        }
        let n = xs.len();
        Ok(Self::new(xs, values, scale, estimator, n))
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    /// Size of the dataset the curve was built from.
    pub fn population(&self) -> usize {
        self.population
    }

    pub fn is_interpolated(&self) -> bool {
        self.interpolated
    }

    /// Last x coordinate.
    pub fn x_end(&self) -> f64 {
        self.xs.last().copied().unwrap_or(0.0)
    }

    /// Value after the whole population, `V(N)`.
    pub fn endpoint(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// The same curve on the `1/N` scale.
    pub fn normalized(&self) -> Curve {
        match self.scale {
            Scale::Normalized => self.clone(),
            Scale::Absolute => {
                let n = self.population as f64;
                Curve { values: self.values.iter().map(|v| v / n).collect(), scale: Scale::Normalized, ..self.clone() }
            }
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Curve {
        Curve { values: self.values.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    pub fn header(&self) -> CurveHeader {
        let (nu, kernel) = match self.estimator {
            Estimator::Vnu { nu } | Estimator::RebalancedVnu { nu } => (Some(nu), None),
            Estimator::IpsLocal { half_width } => (None, Some(KernelSpec::boxcar(half_width))),
            _ => (None, None),
        };
        CurveHeader {
            constructor: self.estimator.to_string(),
            scale: self.scale,
            n: self.population,
            nu,
            kernel,
            interpolated: self.interpolated,
        }
    }

    /// Writes `k,x,value` rows, `k` being 1-based.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["k", "x", "value"])?;
        for (i, (x, v)) in self.xs.iter().zip(&self.values).enumerate() {
            w.write_record([(i + 1).to_string(), x.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// JSON metadata written next to a curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveHeader {
    pub constructor: String,
    pub scale: Scale,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel: Option<KernelSpec>,
    pub interpolated: bool,
}

// ── Accumulation helpers ────────────────────────────────────────────────

fn cumulate(scored: &ScoredDataset, contribution: impl Fn(&RankedUnit) -> f64) -> Vec<f64> {
    let units = scored.units();
    let mut out = vec![0.0; units.len()];
    let mut anchor = 0.0;
    let mut group = Vec::new();
    for range in scored.iso_groups() {
        group.clear();
        let mut running = anchor;
        for i in range.clone() {
            let c = contribution(&units[i]);
            group.push(c);
            running += c;
            out[i] = running;
        }
        group.sort_by(f64::total_cmp);
        anchor += group.iter().sum::<f64>();
        out[range.end - 1] = anchor;
    }
    out
}

fn rank_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / n as f64).collect()
}

fn check_nu(nu: f64) -> Result<()> {
    if (0.0..=1.0).contains(&nu) {
        Ok(())
    } else {
        Err(UpliftError::Domain(format!("nu must lie in [0, 1], got {nu}")))
    }
}

fn check_nonempty(scored: &ScoredDataset) -> Result<()> {
    if scored.is_empty() {
        Err(UpliftError::Domain("empty dataset".into()))
    } else {
        Ok(())
    }
}

fn combine(a: &[f64], b: &[f64], nu: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - nu) * x + nu * y).collect()
}

/// Signed V1 increment: +1 treated responder, −1 control responder.
fn v1_step(u: &RankedUnit) -> f64 {
    match (u.treated, u.is_responder()) {
        (true, true) => 1.0,
        (false, true) => -1.0,
        _ => 0.0,
    }
}

/// Signed V2 increment: +1 control non-responder, −1 treated non-responder.
fn v2_step(u: &RankedUnit) -> f64 {
    match (u.treated, u.is_responder()) {
        (false, false) => 1.0,
        (true, false) => -1.0,
        _ => 0.0,
    }
}

/// Rebalanced V1 increment `(1/q)(y t − y (1 − t))`; accepts real outcomes.
fn rebalanced_step(u: &RankedUnit) -> f64 {
    if u.treated {
        u.outcome / u.propensity
    } else {
        -u.outcome / u.propensity
    }
}

fn rebalanced_x_grid(scored: &ScoredDataset) -> Vec<f64> {
    let n = scored.len() as f64;
    cumulate(scored, |u| 1.0 / (2.0 * u.propensity)).into_iter().map(|x| x / n).collect()
}

// ── Classical and inverted-label curves ─────────────────────────────────

/// Classical curve `V̂₁(k) = (1/N) Σ_{i≤k} 1(t=1 ∧ y=1) − 1(t=0 ∧ y=1)`.
pub fn curve_v1(scored: &ScoredDataset) -> Result<Curve> {
    check_nonempty(scored)?;
    scored.require_binary("curve_v1")?;
    let n = scored.len();
    let values = cumulate(scored, v1_step).into_iter().map(|v| v / n as f64).collect();
    Ok(Curve::new(rank_grid(n), values, Scale::Normalized, Estimator::V1, n))
}

/// Inverted-label curve `V̂₂(k) = (1/N) Σ_{i≤k} 1(t=0 ∧ y=0) − 1(t=1 ∧ y=0)`.
pub fn curve_v2(scored: &ScoredDataset) -> Result<Curve> {
    check_nonempty(scored)?;
    scored.require_binary("curve_v2")?;
    let n = scored.len();
    let values = cumulate(scored, v2_step).into_iter().map(|v| v / n as f64).collect();
    Ok(Curve::new(rank_grid(n), values, Scale::Normalized, Estimator::V2, n))
}

/// Convex combination `(1 − ν) V̂₁ + ν V̂₂`.
pub fn curve_vnu(scored: &ScoredDataset, nu: f64) -> Result<Curve> {
    check_nu(nu)?;
    let v1 = curve_v1(scored)?;
    let v2 = curve_v2(scored)?;
    let n = scored.len();
    Ok(Curve::new(rank_grid(n), combine(&v1.values, &v2.values, nu), Scale::Normalized, Estimator::Vnu { nu }, n))
}

// ── Propensity-rebalanced curves ────────────────────────────────────────

/// `V(k) = Σ_{i≤k} (1/qᵢ)(yᵢ tᵢ − yᵢ (1 − tᵢ))` on the absolute scale, with
/// x coordinates `(1/N) Σ_{i≤k} 1/(2qᵢ)` so that integrating over `xs`
/// realizes the x-axis rebalancing of the area.
///
/// On an RCT with treatment probability `α` the increments are exactly the
/// rescaled `Q₁(α)` of [`crate::metrics::q_increment`].
pub fn curve_rebalanced(scored: &ScoredDataset) -> Result<Curve> {
    check_nonempty(scored)?;
    let values = cumulate(scored, rebalanced_step);
    Ok(Curve::new(rebalanced_x_grid(scored), values, Scale::Absolute, Estimator::Rebalanced, scored.len()))
}

/// Inverted-label counterpart of [`curve_rebalanced`]: increments are the
/// rescaled `Q₂`, `+1/q` on control non-responders and `−1/q` on treated
/// non-responders.
pub fn curve_v2_rebalanced(scored: &ScoredDataset) -> Result<Curve> {
    check_nonempty(scored)?;
    scored.require_binary("curve_v2_rebalanced")?;
    let values = cumulate(scored, |u| v2_step(u) / u.propensity);
    Ok(Curve::new(rebalanced_x_grid(scored), values, Scale::Absolute, Estimator::RebalancedV2, scored.len()))
}

/// `(1 − ν)` [`curve_rebalanced`] `+ ν` [`curve_v2_rebalanced`].
pub fn curve_vnu_rebalanced(scored: &ScoredDataset, nu: f64) -> Result<Curve> {
    check_nu(nu)?;
    scored.require_binary("curve_vnu_rebalanced")?;
    let v1 = curve_rebalanced(scored)?;
    let v2 = curve_v2_rebalanced(scored)?;
    let values = combine(&v1.values, &v2.values, nu);
    Ok(Curve::new(v1.xs, values, Scale::Absolute, Estimator::RebalancedVnu { nu }, scored.len()))
}

// ── Empirical-rate rebalancing ──────────────────────────────────────────

/// Propensities of an RCT estimated by the arm sizes: `|T|/N` for treated
/// units and `|C|/N` for control units. Both arms must be non-empty.
pub fn empirical_rct_propensities(treated: &[bool]) -> Result<Vec<f64>> {
    let n = treated.len();
    let n_t = treated.iter().filter(|t| **t).count();
    if n_t == 0 || n_t == n {
        return Err(UpliftError::Domain("both arms must be non-empty".into()));
    }
    let (q_t, q_c) = (n_t as f64 / n as f64, (n - n_t) as f64 / n as f64);
    Ok(treated.iter().map(|&t| if t { q_t } else { q_c }).collect())
}

/// Sums of the per-unit scaling factors `tᵢ/|T| + (1 − tᵢ)/|C|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingChecksums {
    /// `Σᵢ (tᵢ/|T| + (1 − tᵢ)/|C|)(|T| + |C|)`, equal to `2(|T| + |C|)`.
    pub weighted_total: f64,
    /// `(1/2) Σᵢ (tᵢ/|T| + (1 − tᵢ)/|C|)`, equal to 1.
    pub half_sum: f64,
}

/// Evaluates the scaling-factor sums. Numerators are accumulated as integer
/// counts per arm before dividing, so the results carry no rounding error.
pub fn scaling_checksums(treated: &[bool]) -> Result<ScalingChecksums> {
    let n = treated.len();
    let n_t = treated.iter().filter(|t| **t).count();
    let n_c = n - n_t;
    if n_t == 0 || n_c == 0 {
        return Err(UpliftError::Domain("both arms must be non-empty".into()));
    }
    let (num_t, num_c) = treated.iter().fold((0usize, 0usize), |(a, b), &t| if t { (a + 1, b) } else { (a, b + 1) });
    let factor_sum = num_t as f64 / n_t as f64 + num_c as f64 / n_c as f64;
    Ok(ScalingChecksums { weighted_total: factor_sum * (n_t + n_c) as f64, half_sum: factor_sum / 2.0 })
}

// ── IPS curves ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Boxcar,
}

/// Normalized kernel used to estimate the local treated fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Window radius in ranks.
    pub half_width: usize,
}

impl KernelSpec {
    pub fn boxcar(half_width: usize) -> Self {
        Self { kind: KernelKind::Boxcar, half_width }
    }
}

/// Boxcar average of `1(t = 1)` over ranks `[k − w, k + w]`, clipped to the
/// dataset and renormalized over the clipped window. Indexed by `k − 1`.
pub fn local_treated_fraction(scored: &ScoredDataset, kernel: KernelSpec) -> Vec<f64> {
    let n = scored.len();
    let mut prefix = vec![0usize; n + 1];
    for (i, u) in scored.units().iter().enumerate() {
        prefix[i + 1] = prefix[i] + usize::from(u.treated);
    }
    let w = kernel.half_width;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) as f64 / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Joint absolute curve with a local IPS correction:
/// `V_IPS(k) = R_T(k) / e_T(k) − R_C(k) / (1 − e_T(k))`.
pub fn curve_ips_local(scored: &ScoredDataset, kernel: KernelSpec) -> Result<Curve> {
    check_nonempty(scored)?;
    scored.require_binary("curve_ips_local")?;
    if kernel.half_width == 0 {
        return Err(UpliftError::Domain("kernel half_width must be positive".into()));
    }
    let e_t = local_treated_fraction(scored, kernel);
    let counts = scored.prefix_counts();
    let mut values = Vec::with_capacity(scored.len());
    for (i, (e, c)) in e_t.iter().zip(&counts).enumerate() {
        if *e <= 0.0 || *e >= 1.0 {
            return Err(UpliftError::DegenerateWindow { k: i + 1, treated_fraction: *e });
        }
        values.push(c.responders_treated as f64 / e - c.responders_control as f64 / (1.0 - e));
    }
    let n = scored.len();
    Ok(Curve::new(rank_grid(n), values, Scale::Absolute, Estimator::IpsLocal { half_width: kernel.half_width }, n))
}

/// Importance-weighted V1 towards a 50% RCT target policy: each increment
/// is weighted by `0.5 / qᵢ`, normalized by `1/N`. Values equal
/// [`curve_rebalanced`]`/ (2N)` exactly.
pub fn curve_ips_global(scored: &ScoredDataset) -> Result<Curve> {
    check_nonempty(scored)?;
    let n = scored.len();
    let values = cumulate(scored, |u| 0.5 * rebalanced_step(u)).into_iter().map(|v| v / n as f64).collect();
    Ok(Curve::new(rank_grid(n), values, Scale::Normalized, Estimator::IpsGlobal, n))
}

// ── Tabulated Qini / uplift variants ────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFamily {
    Qini,
    Uplift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Treatment and control groups ranked independently, indexed by a proportion `p`.
    Separate,
    /// One shared ranking, indexed by `k`.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counting {
    Absolute,
    Relative,
}

/// One populated cell of the Qini/uplift × separate/joint × absolute/relative
/// table. The two relative Qini cells are empty and cannot be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Table1Variant {
    family: CurveFamily,
    ranking: Ranking,
    counting: Counting,
}

impl Table1Variant {
    pub const QINI_SEP_ABS: Self = Self::raw(CurveFamily::Qini, Ranking::Separate, Counting::Absolute);
    pub const UPLIFT_SEP_ABS: Self = Self::raw(CurveFamily::Uplift, Ranking::Separate, Counting::Absolute);
    pub const UPLIFT_SEP_REL: Self = Self::raw(CurveFamily::Uplift, Ranking::Separate, Counting::Relative);
    pub const QINI_JOINT_ABS: Self = Self::raw(CurveFamily::Qini, Ranking::Joint, Counting::Absolute);
    pub const UPLIFT_JOINT_ABS: Self = Self::raw(CurveFamily::Uplift, Ranking::Joint, Counting::Absolute);
    pub const UPLIFT_JOINT_REL: Self = Self::raw(CurveFamily::Uplift, Ranking::Joint, Counting::Relative);

    pub const ALL: [Self; 6] = [
        Self::QINI_SEP_ABS,
        Self::UPLIFT_SEP_ABS,
        Self::UPLIFT_SEP_REL,
        Self::QINI_JOINT_ABS,
        Self::UPLIFT_JOINT_ABS,
        Self::UPLIFT_JOINT_REL,
    ];

    const fn raw(family: CurveFamily, ranking: Ranking, counting: Counting) -> Self {
        Self { family, ranking, counting }
    }

    pub fn new(family: CurveFamily, ranking: Ranking, counting: Counting) -> Result<Self> {
        if family == CurveFamily::Qini && counting == Counting::Relative {
            return Err(UpliftError::Domain("the relative Qini variants are not defined".into()));
        }
        Ok(Self::raw(family, ranking, counting))
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn ranking(&self) -> Ranking {
        self.ranking
    }

    pub fn counting(&self) -> Counting {
        self.counting
    }
}

impl fmt::Display for Table1Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.family {
            CurveFamily::Qini => "qini",
            CurveFamily::Uplift => "uplift",
        };
        let ranking = match self.ranking {
            Ranking::Separate => "sep",
            Ranking::Joint => "joint",
        };
        let counting = match self.counting {
            Counting::Absolute => "abs",
            Counting::Relative => "rel",
        };
        write!(f, "{family}-{ranking}-{counting}")
    }
}

impl FromStr for Table1Variant {
    type Err = UpliftError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let mut it = lower.split('-');
        let family = match it.next() {
            Some("qini") => CurveFamily::Qini,
            Some("uplift") => CurveFamily::Uplift,
            _ => return Err(UpliftError::Domain(format!("unknown curve variant {s:?}"))),
        };
        let ranking = match it.next() {
            Some("sep") | Some("separate") => Ranking::Separate,
            Some("joint") => Ranking::Joint,
            _ => return Err(UpliftError::Domain(format!("unknown curve variant {s:?}"))),
        };
        let counting = match it.next() {
            Some("abs") | Some("absolute") => Counting::Absolute,
            Some("rel") | Some("relative") => Counting::Relative,
            _ => return Err(UpliftError::Domain(format!("unknown curve variant {s:?}"))),
        };
        if it.next().is_some() {
            return Err(UpliftError::Domain(format!("unknown curve variant {s:?}")));
        }
        Self::new(family, ranking, counting)
    }
}

impl TryFrom<String> for Table1Variant {
    type Error = UpliftError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Table1Variant> for String {
    fn from(v: Table1Variant) -> String {
        v.to_string()
    }
}

/// Evaluation grid: every rank `k` for joint variants, proportions `p ∈ (0, 1]`
/// for separate ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Table1Grid {
    Ranks,
    Proportions(Vec<f64>),
}

impl Table1Grid {
    /// `p = 1/points, 2/points, …, 1`.
    pub fn uniform(points: usize) -> Self {
        Table1Grid::Proportions((1..=points).map(|i| i as f64 / points as f64).collect())
    }
}

/// A curve whose value may be undefined at some grid points (an empty
/// treated or control prefix in a denominator).
#[derive(Debug, Clone, PartialEq)]
pub struct GappedCurve {
    pub xs: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub variant: Table1Variant,
    pub population: usize,
}

impl GappedCurve {
    /// Drops undefined points; integrating the result bridges each gap linearly.
    pub fn bridged(&self) -> Result<Curve> {
        let (xs, values): (Vec<f64>, Vec<f64>) =
            self.xs.iter().zip(&self.values).filter_map(|(x, v)| v.map(|v| (*x, v))).unzip();
        if xs.is_empty() {
            return Err(UpliftError::Domain(format!("{} is undefined at every grid point", self.variant)));
        }
        let scale = match self.variant.counting {
            Counting::Absolute => Scale::Absolute,
            Counting::Relative => Scale::Normalized,
        };
        Ok(Curve::new(xs, values, scale, Estimator::Table1 { variant: self.variant }, self.population))
    }
}

fn ratio(num: f64, den: usize) -> Option<f64> {
    (den > 0).then(|| num / den as f64)
}

/// Evaluates one tabulated Qini/uplift formula on `grid`.
///
/// Separate variants take the top `⌊p·|T|⌋` treated and `⌊p·|C|⌋` control
/// units of the shared ranking restricted to each group.
pub fn table1_curve(scored: &ScoredDataset, variant: Table1Variant, grid: &Table1Grid) -> Result<GappedCurve> {
    check_nonempty(scored)?;
    scored.require_binary("table1_curve")?;
    let n = scored.len();
    let total_t = scored.treated_count();
    let total_c = n - total_t;

    let (xs, values) = match (variant.ranking, grid) {
        (Ranking::Joint, Table1Grid::Ranks) => {
            let xs = rank_grid(n);
            let values = scored
                .prefix_counts()
                .iter()
                .map(|c| {
                    let (rt, rc) = (c.responders_treated as f64, c.responders_control as f64);
                    match (variant.family, variant.counting) {
                        (CurveFamily::Qini, _) => ratio(rc * c.n_treated as f64, c.n_control).map(|x| rt - x),
                        (CurveFamily::Uplift, Counting::Absolute) => {
                            match (ratio(rt, c.n_treated), ratio(rc, c.n_control)) {
                                (Some(a), Some(b)) => Some((a - b) * c.k() as f64),
                                _ => None,
                            }
                        }
                        (CurveFamily::Uplift, Counting::Relative) => Some(ratio(rt, total_t)? - ratio(rc, total_c)?),
                    }
                })
                .collect();
            (xs, values)
        }
        (Ranking::Separate, Table1Grid::Proportions(ps)) => {
            let mut resp_t = vec![0usize];
            let mut resp_c = vec![0usize];
            for u in scored.units() {
                let list = if u.treated { &mut resp_t } else { &mut resp_c };
                let last = *list.last().unwrap();
                list.push(last + usize::from(u.is_responder()));
            }
            let take = |p: f64, size: usize| ((p * size as f64 + 1e-9).floor() as usize).min(size);
            let mut values = Vec::with_capacity(ps.len());
            for &p in ps {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(UpliftError::Domain(format!("proportion {p} outside (0, 1]")));
                }
                let rt = resp_t[take(p, total_t)] as f64;
                let rc = resp_c[take(p, total_c)] as f64;
                values.push(match (variant.family, variant.counting) {
                    (CurveFamily::Qini, _) => ratio(rc * total_t as f64, total_c).map(|x| rt - x),
                    (CurveFamily::Uplift, Counting::Absolute) => Some(rt - rc),
                    (CurveFamily::Uplift, Counting::Relative) => match (ratio(rt, total_t), ratio(rc, total_c)) {
                        (Some(a), Some(b)) => Some(a - b),
                        _ => None,
                    },
                });
            }
            (ps.clone(), values)
        }
        (Ranking::Joint, _) => return Err(UpliftError::Domain("joint variants are evaluated on ranks".into())),
        (Ranking::Separate, _) => {
            return Err(UpliftError::Domain("separate variants are evaluated on proportions".into()))
        }
    };
    Ok(GappedCurve { xs, values, variant, population: n })
}

// ── Iso-uplift interpolation ────────────────────────────────────────────

/// Replaces the points inside each iso-uplift group by the chord joining
/// the group's end point to the previous group's end point (the origin for
/// the first group). Group end points are kept as is.
///
/// Inner points are spaced evenly along the chord, so the result depends
/// only on the group end points and group sizes.
pub fn interpolate_iso_uplift(curve: &Curve, scored: &ScoredDataset) -> Result<Curve> {
    if curve.len() != scored.len() {
        return Err(UpliftError::Dimension { expected: scored.len(), got: curve.len() });
    }
    let mut xs = curve.xs.clone();
    let mut values = curve.values.clone();
    let (mut x0, mut v0) = (0.0, 0.0);
    for range in scored.iso_groups() {
        let last = range.end - 1;
        let (x1, v1) = (curve.xs[last], curve.values[last]);
        let size = range.len() as f64;
        for (j, i) in range.clone().enumerate().take(range.len() - 1) {
            let frac = (j + 1) as f64 / size;
            xs[i] = x0 + frac * (x1 - x0);
            values[i] = v0 + frac * (v1 - v0);
        }
        x0 = x1;
        v0 = v1;
    }
    Ok(Curve { xs, values, interpolated: true, ..curve.clone() })
}
