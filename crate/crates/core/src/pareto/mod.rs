//! Pareto-front tooling: dominance filtering, exact 3-D hypervolume and
//! best-versus-best improvement percentages.
//!
//! Objectives are oriented as (power ↑, AAPFD ↓, water revenue ↑)
//! throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hydro::ObjectiveTriple;

#[derive(Debug, Error, PartialEq)]
pub enum ParetoError {
    #[error("{0} front is empty")]
    EmptyFront(&'static str),
    #[error("point {index} ({point:?}) does not dominate the reference point {reference:?}")]
    NotDominatingReference {
        index: usize,
        point: ObjectiveTriple,
        reference: ObjectiveTriple,
    },
}

/// Indices of the points not dominated by any other point, in input order.
/// Exact duplicates are all kept.
pub fn nondominated_indices(points: &[ObjectiveTriple]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Sorting by power descending means a dominator always precedes the
    // points it dominates, so each point is checked against kept ones only.
    order.sort_by(|&a, &b| {
        let (p, q) = (&points[a], &points[b]);
        q.power
            .total_cmp(&p.power)
            .then(p.aapfd.total_cmp(&q.aapfd))
            .then(q.water_revenue.total_cmp(&p.water_revenue))
    });
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        if !kept.iter().any(|&k| points[k].dominates(&points[i])) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// The nondominated subset of `points`, in input order.
pub fn dominance_filter(points: &[ObjectiveTriple]) -> Vec<ObjectiveTriple> {
    nondominated_indices(points).into_iter().map(|i| points[i]).collect()
}

/// Exact hypervolume dominated by `front` and bounded by `reference`.
///
/// Every point must be at least as good as the reference in all three
/// objectives. Computed by slicing along water revenue and summing the
/// 2-D union areas of each slab.
pub fn hypervolume_3d(front: &[ObjectiveTriple], reference: &ObjectiveTriple) -> Result<f64, ParetoError> {
    let mut boxes = Vec::with_capacity(front.len());
    for (index, p) in front.iter().enumerate() {
        let v = [
            p.power - reference.power,
            reference.aapfd - p.aapfd,
            p.water_revenue - reference.water_revenue,
        ];
        if v.iter().any(|x| !(*x >= 0.0)) {
            return Err(ParetoError::NotDominatingReference {
                index,
                point: *p,
                reference: *reference,
            });
        }
        boxes.push(v);
    }
    let mut levels: Vec<f64> = boxes.iter().map(|b| b[2]).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let mut volume = 0.0;
    for (k, &z) in levels.iter().enumerate() {
        let below = levels.get(k + 1).copied().unwrap_or(0.0);
        let slab: Vec<[f64; 2]> = boxes.iter().filter(|b| b[2] >= z).map(|b| [b[0], b[1]]).collect();
        volume += union_area(slab) * (z - below);
    }
    Ok(volume)
}

/// Area of the union of anchored rectangles `[0, x] × [0, y]`.
fn union_area(mut rects: Vec<[f64; 2]>) -> f64 {
    rects.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let mut area = 0.0;
    let mut max_y: f64 = 0.0;
    for (k, r) in rects.iter().enumerate() {
        max_y = max_y.max(r[1]);
        let next_x = rects.get(k + 1).map_or(0.0, |n| n[0]);
        area += (r[0] - next_x) * max_y;
    }
    area
}

/// Best-versus-best percentage differences of front `a` over front `b`.
///
/// Positive values favour `a`: more power, lower AAPFD, more revenue.
/// A component is `None` when `b`'s best value is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub power_pct: Option<f64>,
    pub aapfd_reduction_pct: Option<f64>,
    pub water_pct: Option<f64>,
    pub best_a: ObjectiveTriple,
    pub best_b: ObjectiveTriple,
}

fn pct(delta: f64, denom: f64) -> Option<f64> {
    (denom != 0.0).then(|| 100.0 * delta / denom.abs())
}

/// Per-objective best of a front: max power, min AAPFD, max revenue (the
/// three need not come from one point).
pub fn best_per_objective(front: &[ObjectiveTriple]) -> Option<ObjectiveTriple> {
    let first = front.first()?;
    Some(front.iter().fold(*first, |acc, p| ObjectiveTriple {
        power: acc.power.max(p.power),
        aapfd: acc.aapfd.min(p.aapfd),
        water_revenue: acc.water_revenue.max(p.water_revenue),
    }))
}

pub fn improvement_report(a: &[ObjectiveTriple], b: &[ObjectiveTriple]) -> Result<ImprovementReport, ParetoError> {
    let best_a = best_per_objective(a).ok_or(ParetoError::EmptyFront("first"))?;
    let best_b = best_per_objective(b).ok_or(ParetoError::EmptyFront("second"))?;
    Ok(ImprovementReport {
        power_pct: pct(best_a.power - best_b.power, best_b.power),
        aapfd_reduction_pct: pct(best_b.aapfd - best_a.aapfd, best_b.aapfd),
        water_pct: pct(best_a.water_revenue - best_b.water_revenue, best_b.water_revenue),
        best_a,
        best_b,
    })
}

impl std::fmt::Display for ImprovementReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:+.4}%"));
        write!(
            f,
            "power {}, AAPFD reduction {}, water revenue {}",
            show(self.power_pct),
            show(self.aapfd_reduction_pct),
            show(self.water_pct)
        )
    }
}
