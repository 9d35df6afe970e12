//! Independent oracles for the integration tests. Nothing here calls the
//! library's numeric code: expectations are derived from first principles,
//! in exact rational arithmetic where the inputs allow it.

#![allow(dead_code)]

use num_rational::Ratio;

pub type Q = Ratio<i64>;

pub fn q(num: i64, den: i64) -> Q {
    Ratio::new(num, den)
}

pub fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// A homogeneous group with exact parameters.
#[derive(Debug, Clone, Copy)]
pub struct ExactGroup {
    pub share: Q,
    /// P(t = 1).
    pub treat: Q,
    /// P(y = 1 | do(t = 1)).
    pub b1: Q,
    /// P(y = 1 | do(t = 0)).
    pub b0: Q,
}

impl ExactGroup {
    pub fn new(share: Q, treat: Q, b1: Q, b0: Q) -> Self {
        Self { share, treat, b1, b0 }
    }

    pub fn uplift(&self) -> Q {
        self.b1 - self.b0
    }
}

/// Mean classical increment of a unit: `P(t=1, y=1) − P(t=0, y=1)`.
pub fn classical_increment(g: &ExactGroup) -> Q {
    g.treat * g.b1 - (Q::from_integer(1) - g.treat) * g.b0
}

/// Mean of `y t / P(t=1) − y (1−t) / P(t=0)`, cell by cell.
pub fn rebalanced_increment(g: &ExactGroup) -> Q {
    let one = Q::from_integer(1);
    let treated_cell = g.treat * g.b1 / g.treat;
    let control_cell = (one - g.treat) * g.b0 / (one - g.treat);
    treated_cell - control_cell
}

/// Consecutive `(share, mean increment)` blocks of the ranking induced by
/// `scores` (descending); groups with equal scores share one block.
pub fn ranked_blocks(groups: &[ExactGroup], scores: &[f64], inc: fn(&ExactGroup) -> Q) -> Vec<(Q, Q)> {
    let mut idx: Vec<usize> = (0..groups.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut blocks: Vec<(f64, Q, Q)> = Vec::new();
    for i in idx {
        let g = &groups[i];
        match blocks.last_mut() {
            Some(b) if b.0 == scores[i] => {
                b.1 += g.share;
                b.2 += g.share * inc(g);
            }
            _ => blocks.push((scores[i], g.share, g.share * inc(g))),
        }
    }
    blocks.into_iter().map(|(_, share, mass)| (share, mass / share)).collect()
}

/// Trapezoid area of the expected curve through the origin and the block ends.
pub fn expected_auuc(groups: &[ExactGroup], scores: &[f64], inc: fn(&ExactGroup) -> Q) -> Q {
    let mut v = Q::from_integer(0);
    let mut area = Q::from_integer(0);
    for (share, slope) in ranked_blocks(groups, scores, inc) {
        let next = v + share * slope;
        area += share * (v + next) / 2;
        v = next;
    }
    area
}

fn archetypes(treat: [Q; 4]) -> Vec<ExactGroup> {
    let (zero, one, quarter) = (q(0, 1), q(1, 1), q(1, 4));
    vec![
        ExactGroup::new(quarter, treat[0], one, zero),
        ExactGroup::new(quarter, treat[1], one, one),
        ExactGroup::new(quarter, treat[2], zero, zero),
        ExactGroup::new(quarter, treat[3], zero, one),
    ]
}

/// CO, ST, LC, SD with treatment probabilities 1/4, 5/6, 5/12, 1/2.
pub fn toy1_exact() -> Vec<ExactGroup> {
    archetypes([q(1, 4), q(5, 6), q(5, 12), q(1, 2)])
}

pub fn toy2_exact(treat: Q) -> Vec<ExactGroup> {
    archetypes([treat; 4])
}

pub fn toy3_exact(treat: Q) -> Vec<ExactGroup> {
    vec![ExactGroup::new(q(1, 2), treat, q(2, 5), q(1, 5)), ExactGroup::new(q(1, 2), treat, q(1, 5), q(1, 10))]
}

/// Moments of the rescaled increments by enumerating the four (t, y) cells.
/// Returns `(E[Q1], E[Q2], Var Q1, Var Q2, Cov(Q1, Q2))`.
pub fn increment_moments(p0: f64, p1: f64, alpha: f64) -> (f64, f64, f64, f64, f64) {
    // (probability, Q1, Q2) for cells (t=1,y=1), (t=1,y=0), (t=0,y=1), (t=0,y=0).
    let cells = [
        (alpha * p1, 1.0 / alpha, 0.0),
        (alpha * (1.0 - p1), 0.0, -1.0 / alpha),
        ((1.0 - alpha) * p0, -1.0 / (1.0 - alpha), 0.0),
        ((1.0 - alpha) * (1.0 - p0), 0.0, 1.0 / (1.0 - alpha)),
    ];
    let e1: f64 = cells.iter().map(|c| c.0 * c.1).sum();
    let e2: f64 = cells.iter().map(|c| c.0 * c.2).sum();
    let v1: f64 = cells.iter().map(|c| c.0 * (c.1 - e1).powi(2)).sum();
    let v2: f64 = cells.iter().map(|c| c.0 * (c.2 - e2).powi(2)).sum();
    let cov: f64 = cells.iter().map(|c| c.0 * (c.1 - e1) * (c.2 - e2)).sum();
    (e1, e2, v1, v2, cov)
}

/// Vertex of `ν ↦ Var((1−ν) Q1 + ν Q2)` from enumerated moments.
pub fn enumerated_argmin(p0: f64, p1: f64, alpha: f64) -> f64 {
    let (_, _, v1, v2, c) = increment_moments(p0, p1, alpha);
    (v1 - c) / (v1 + v2 - 2.0 * c)
}

/// Trapezoid area over `(0,0), (xs[0], vs[0]), …`.
pub fn trapezoid(xs: &[f64], vs: &[f64]) -> f64 {
    let (mut x0, mut v0, mut area) = (0.0, 0.0, 0.0);
    for (&x, &v) in xs.iter().zip(vs) {
        area += (x - x0) * (v + v0) / 2.0;
        x0 = x;
        v0 = v;
    }
    area
}
