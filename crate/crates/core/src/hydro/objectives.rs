use serde::{Deserialize, Serialize};

use super::{aapfd, supply_revenue, HydroError, OperationSchedule, SystemInstance};

/// The three objective values of a schedule.
///
/// `power` and `water_revenue` are maximized, `aapfd` is minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTriple {
    pub power: f64,
    pub aapfd: f64,
    pub water_revenue: f64,
}

impl ObjectiveTriple {
    pub fn new(power: f64, aapfd: f64, water_revenue: f64) -> Self {
        Self {
            power,
            aapfd,
            water_revenue,
        }
    }

    /// Orientation where every component is maximized.
    pub fn as_maximization(&self) -> [f64; 3] {
        [self.power, -self.aapfd, self.water_revenue]
    }

    /// Orientation where every component is minimized.
    pub fn as_minimization(&self) -> [f64; 3] {
        [-self.power, self.aapfd, -self.water_revenue]
    }

    /// Weak dominance in every objective and strict in at least one.
    pub fn dominates(&self, other: &Self) -> bool {
        let a = self.as_maximization();
        let b = other.as_maximization();
        a.iter().zip(&b).all(|(x, y)| x >= y) && a.iter().zip(&b).any(|(x, y)| x > y)
    }
}

/// Total power, summed AAPFD and total supply revenue of a derived schedule.
pub fn objective_triple(
    inst: &SystemInstance,
    sched: &OperationSchedule,
) -> Result<ObjectiveTriple, HydroError> {
    let power = sched.power.iter().flatten().sum();
    let mut total_aapfd = 0.0;
    for (i, res) in inst.reservoirs.iter().enumerate() {
        total_aapfd += aapfd(&sched.decisions.qp[i], &res.ecological_flow)?;
    }
    let dt = inst.period_seconds;
    let mut water = 0.0;
    for i in 0..inst.num_reservoirs() {
        for (j, area) in inst.areas.iter().enumerate() {
            for t in 0..inst.horizon {
                water += supply_revenue(
                    area.unit_benefit[t],
                    area.unit_cost[i][t],
                    area.distance[i],
                    sched.decisions.qs[i][j][t],
                    sched.decisions.x[i][j][t],
                    dt,
                );
            }
        }
    }
    Ok(ObjectiveTriple::new(power, total_aapfd, water))
}
