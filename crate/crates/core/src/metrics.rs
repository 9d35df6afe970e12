//! Scalar metrics over curves, plus the closed-form moments of the
//! rescaled per-unit increments behind the V₁ / V₂ / V_ν estimators.

use serde::{Deserialize, Serialize};

use crate::curves::{Curve, Estimator};
use crate::error::{Result, UpliftError};

const EXTENT_TOLERANCE: f64 = 1e-12;

// ── Areas ───────────────────────────────────────────────────────────────

/// Trapezoidal area under the piecewise-linear curve through the origin
/// and every curve point, over `[0, upto]` in the curve's x coordinate.
pub fn area_under_curve(curve: &Curve, upto: f64) -> Result<f64> {
    let extent = curve.x_end();
    if upto.is_nan() || upto <= 0.0 || upto > extent + EXTENT_TOLERANCE {
        return Err(UpliftError::BeyondExtent { requested: upto, extent });
    }
    let mut area = 0.0;
    let (mut x0, mut v0) = (0.0, 0.0);
    for (&x1, &v1) in curve.xs().iter().zip(curve.values()) {
        if x1 >= upto {
            if x1 > x0 {
                let v_cut = v0 + (upto - x0) / (x1 - x0) * (v1 - v0);
                area += 0.5 * (upto - x0) * (v0 + v_cut);
            }
            return Ok(area);
        }
        area += 0.5 * (x1 - x0) * (v0 + v1);
        x0 = x1;
        v0 = v1;
    }
    Ok(area)
}

/// Trapezoidal area over the whole curve.
pub fn auuc(curve: &Curve) -> f64 {
    curve
        .xs()
        .iter()
        .zip(curve.values())
        .scan((0.0, 0.0), |prev, (&x, &v)| {
            let piece = 0.5 * (x - prev.0) * (prev.1 + v);
            *prev = (x, v);
            Some(piece)
        })
        .sum()
}

/// Right-endpoint sum `Σ_k V(k) (x_k − x_{k−1})`. On a rebalanced curve this
/// is exactly `(1/N) Σ V(k) / (2 q_k)`; on a `k/N` grid it is `(1/N) Σ V(k)`.
pub fn riemann_right(curve: &Curve) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for (&x, &v) in curve.xs().iter().zip(curve.values()) {
        total += v * (x - prev);
        prev = x;
    }
    total
}

/// Area between the curve and the straight line from the origin to the
/// curve's end point (uniformly random targeting).
pub fn delta_auuc(curve: &Curve) -> f64 {
    auuc(curve) - curve.x_end() * curve.endpoint() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Trapezoid,
    RiemannRight,
}

impl Quadrature {
    pub fn area(self, curve: &Curve) -> f64 {
        match self {
            Quadrature::Trapezoid => auuc(curve),
            Quadrature::RiemannRight => riemann_right(curve),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Trapezoidal area, the reference quadrature.
    pub auuc: f64,
    pub auuc_riemann: f64,
    pub delta_auuc: f64,
    /// `V(N)`.
    pub endpoint: f64,
    pub x_end: f64,
    pub constructor: Estimator,
    pub interpolated: bool,
    /// Area over `[0, upto]`, when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partial_auuc: Option<(f64, f64)>,
}

impl MetricReport {
    pub fn from_curve(curve: &Curve) -> Self {
        Self {
            auuc: auuc(curve),
            auuc_riemann: riemann_right(curve),
            delta_auuc: delta_auuc(curve),
            endpoint: curve.endpoint(),
            x_end: curve.x_end(),
            constructor: curve.estimator(),
            interpolated: curve.is_interpolated(),
            partial_auuc: None,
        }
    }

    pub fn with_partial(mut self, curve: &Curve, upto: f64) -> Result<Self> {
        self.partial_auuc = Some((upto, area_under_curve(curve, upto)?));
        Ok(self)
    }
}

// ── PEHE ────────────────────────────────────────────────────────────────

/// Mean squared error between estimated and true individual effects.
pub fn pehe(tau_hat: &[f64], tau: &[f64]) -> Result<f64> {
    if tau_hat.len() != tau.len() {
        return Err(UpliftError::Dimension { expected: tau.len(), got: tau_hat.len() });
    }
    if tau.is_empty() {
        return Err(UpliftError::Domain("pehe needs at least one unit".into()));
    }
    let sse: f64 = tau_hat.iter().zip(tau).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(sse / tau.len() as f64)
}

// ── Variance-minimizing combination ─────────────────────────────────────

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(UpliftError::Domain(format!("treatment probability must lie in (0, 1), got {alpha}")))
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(UpliftError::Domain(format!("{name} must lie in [0, 1], got {p}")))
    }
}

/// The `ν` minimizing `Var(Q_ν)`: `p₁ (1 − α) + p₀ α`, where
/// `p₁ = P(y=1 | t=1)`, `p₀ = P(y=1 | t=0)`, `α = P(t=1)`.
pub fn optimal_nu(p0: f64, p1: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_probability("p0", p0)?;
    check_probability("p1", p1)?;
    Ok(p1 * (1.0 - alpha) + p0 * alpha)
}

/// Expected per-unit slope of the classical curve over a homogeneous group
/// treated with probability `q`: `q (β¹ + β⁰) − β⁰`.
pub fn expected_slope(q: f64, beta1: f64, beta0: f64) -> f64 {
    q * (beta1 + beta0) - beta0
}

/// Population-weighted mean slope of groups sharing one score.
/// Takes `(share, slope)` pairs.
pub fn merged_slope(parts: &[(f64, f64)]) -> f64 {
    let total: f64 = parts.iter().map(|p| p.0).sum();
    parts.iter().map(|(w, s)| w * s).sum::<f64>() / total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Increment {
    Q1,
    Q2,
}

/// Rescaled per-unit increment.
///
/// | y | t | Q₁(α)      | Q₂(α)      |
/// |---|---|------------|------------|
/// | 0 | 0 | 0          | +1/(1−α)   |
/// | 0 | 1 | 0          | −1/α       |
/// | 1 | 0 | −1/(1−α)   | 0          |
/// | 1 | 1 | +1/α       | 0          |
pub fn q_increment(responder: bool, treated: bool, alpha: f64, which: Increment) -> f64 {
    match (which, responder, treated) {
        (Increment::Q1, true, true) => 1.0 / alpha,
        (Increment::Q1, true, false) => -1.0 / (1.0 - alpha),
        (Increment::Q2, false, false) => 1.0 / (1.0 - alpha),
        (Increment::Q2, false, true) => -1.0 / alpha,
        _ => 0.0,
    }
}

/// Moments of `Q₁(α)` and `Q₂(α)` for one unit drawn with response rates
/// `p₁` (treated) and `p₀` (control) under treatment probability `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalMoments {
    pub e_q1: f64,
    pub e_q2: f64,
    pub e_q1_sq: f64,
    pub e_q2_sq: f64,
    /// `Q₁ Q₂ = 0` pointwise (disjoint supports on y = 1 and y = 0), so the
    /// covariance is `−E[Q₁] E[Q₂]`.
    pub cov_q1q2: f64,
}

pub fn theoretical_moments(p0: f64, p1: f64, alpha: f64) -> Result<TheoreticalMoments> {
    check_alpha(alpha)?;
    check_probability("p0", p0)?;
    check_probability("p1", p1)?;
    let uplift = p1 - p0;
    Ok(TheoreticalMoments {
        e_q1: uplift,
        e_q2: uplift,
        e_q1_sq: p1 / alpha + p0 / (1.0 - alpha),
        e_q2_sq: (1.0 - p0) / (1.0 - alpha) + (1.0 - p1) / alpha,
        cov_q1q2: -uplift * uplift,
    })
}

impl TheoreticalMoments {
    pub fn var_q1(&self) -> f64 {
        self.e_q1_sq - self.e_q1 * self.e_q1
    }

    pub fn var_q2(&self) -> f64 {
        self.e_q2_sq - self.e_q2 * self.e_q2
    }

    /// `(a, b, c)` with `Var(Q_ν) = a ν² + b ν + c`.
    pub fn var_qnu_coefficients(&self) -> (f64, f64, f64) {
        let (v1, v2, c) = (self.var_q1(), self.var_q2(), self.cov_q1q2);
        (v1 + v2 - 2.0 * c, 2.0 * (c - v1), v1)
    }

    /// `(1−ν)² Var(Q₁) + ν² Var(Q₂) + 2ν(1−ν) Cov(Q₁, Q₂)`.
    pub fn var_qnu(&self, nu: f64) -> f64 {
        (1.0 - nu).powi(2) * self.var_q1() + nu * nu * self.var_q2() + 2.0 * nu * (1.0 - nu) * self.cov_q1q2
    }

    pub fn dvar_dnu(&self, nu: f64) -> f64 {
        let (a, b, _) = self.var_qnu_coefficients();
        2.0 * a * nu + b
    }

    /// Vertex of the variance parabola.
    pub fn argmin_nu(&self) -> f64 {
        let (a, b, _) = self.var_qnu_coefficients();
        -b / (2.0 * a)
    }
}
