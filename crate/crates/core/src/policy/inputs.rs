use crate::hydro::SystemInstance;
use crate::tensor::Tensor;

/// Scaled static inputs of one instance.
///
/// Every feature is min-max scaled over all its (entity, period) values;
/// a constant feature maps to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticInputs {
    pub horizon: usize,
    /// `[I·T, 3]`: `[P_min, P_max, Q_r]`, row `i·T + t`.
    pub reservoirs: Tensor,
    /// `[J·T, 2]`: `[W_min, W_max]`, row `j·T + t`.
    pub areas: Tensor,
}

fn scale_columns(rows: Vec<Vec<f64>>, width: usize) -> Tensor {
    let n = rows.len();
    let mut data = vec![0.0; n * width];
    for c in 0..width {
        let lo = rows.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
        for (r, row) in rows.iter().enumerate() {
            data[r * width + c] = if hi > lo { (row[c] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    Tensor::matrix(n, width, data)
}

impl StaticInputs {
    pub fn new(inst: &SystemInstance) -> Self {
        let t_len = inst.horizon;
        let mut res = Vec::new();
        for r in &inst.reservoirs {
            for t in 0..t_len {
                res.push(vec![r.power_min[t], r.power_max[t], r.inflow[t]]);
            }
        }
        let mut areas = Vec::new();
        for a in &inst.areas {
            for t in 0..t_len {
                areas.push(vec![a.supply_min[t], a.supply_max[t]]);
            }
        }
        Self {
            horizon: t_len,
            reservoirs: scale_columns(res, 3),
            areas: scale_columns(areas, 2),
        }
    }
}
