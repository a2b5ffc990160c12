//! Weighted-sum decomposition of the three-objective problem.
//!
//! Each [`WeightVector`] of [`weight_grid`] defines one single-objective
//! subproblem whose reward is [`scalarize`]: a weighted sum of min-max
//! normalized objectives, with AAPFD entering through its reciprocal so
//! that smaller deviations score higher. Normalization uses one shared
//! [`ObjectiveBounds`] for every subproblem.

mod bounds;
mod weights;

pub use bounds::{
    estimate_bounds, BoundMethod, BoundSource, BoundsError, ObjectiveBounds, ObjectiveRange, AAPFD_FLOOR,
};
pub use weights::{weight_grid, WeightVector};

use crate::hydro::ObjectiveTriple;

fn unit_clamp(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Normalized power term in `[0, 1]`.
pub fn normalized_power(obj: &ObjectiveTriple, bounds: &ObjectiveBounds) -> f64 {
    let r = &bounds.power;
    unit_clamp((obj.power - r.min) / (r.max - r.min))
}

/// Normalized reciprocal-AAPFD term in `[0, 1]`; 1 at the AAPFD minimum.
pub fn normalized_aapfd(obj: &ObjectiveTriple, bounds: &ObjectiveBounds) -> f64 {
    let r = &bounds.aapfd;
    let inv = 1.0 / obj.aapfd.max(AAPFD_FLOOR);
    let inv_max = 1.0 / r.max;
    let inv_min = 1.0 / r.min.max(AAPFD_FLOOR);
    unit_clamp((inv - inv_max) / (inv_min - inv_max))
}

/// Normalized water-revenue term in `[0, 1]`.
pub fn normalized_water(obj: &ObjectiveTriple, bounds: &ObjectiveBounds) -> f64 {
    let r = &bounds.water;
    unit_clamp((obj.water_revenue - r.min) / (r.max - r.min))
}

/// Weighted sum of the three normalized objective terms, in `[0, 1]`.
pub fn scalarize(obj: &ObjectiveTriple, weights: &WeightVector, bounds: &ObjectiveBounds) -> f64 {
    let [w1, w2, w3] = weights.components();
    w1 * normalized_power(obj, bounds) + w2 * normalized_aapfd(obj, bounds) + w3 * normalized_water(obj, bounds)
}
