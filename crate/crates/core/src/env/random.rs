use rand::Rng;

use super::ActionSpace;
use crate::hydro::{check_constraints, derive_trajectory, Decisions, OperationSchedule, SystemInstance, BOUND_TOLERANCE};

/// Redraws allowed per area and period before moving on.
const LOCAL_RETRIES: usize = 100;

/// Draws a schedule uniformly over the action grids, rejecting it unless
/// it satisfies every constraint.
///
/// Aggregate supply bounds are enforced period by period: the supply
/// decisions of every reservoir towards one area are redrawn together
/// until their sum lies within `[W_min, W_max]`, up to a fixed number of
/// retries. The full schedule is then checked and rejected if any
/// constraint fails. Returns `None` if `max_attempts` schedules are all
/// rejected.
pub fn random_feasible_schedule<R: Rng + ?Sized>(
    inst: &SystemInstance,
    space: &ActionSpace,
    rng: &mut R,
    max_attempts: usize,
) -> Option<OperationSchedule> {
    let (ni, nj, nt) = (inst.num_reservoirs(), inst.num_areas(), inst.horizon);
    let dt = inst.period_seconds;
    for _ in 0..max_attempts {
        let mut d = Decisions::zeros(ni, nj, nt);
        for t in 0..nt {
            for i in 0..ni {
                d.qp[i][t] = space.qp_value(inst, i, rng.random_range(0..space.qp_bins));
            }
            for j in 0..nj {
                let (lo, hi) = (inst.areas[j].supply_min[t], inst.areas[j].supply_max[t]);
                for _ in 0..LOCAL_RETRIES {
                    let mut total = 0.0;
                    for i in 0..ni {
                        let on = rng.random_bool(0.5);
                        d.x[i][j][t] = on;
                        d.qs[i][j][t] = if on {
                            space.qs_value(inst, j, t, rng.random_range(0..space.qs_bins))
                        } else {
                            0.0
                        };
                        total += d.qs[i][j][t] * dt;
                    }
                    if total >= lo - BOUND_TOLERANCE && total <= hi + BOUND_TOLERANCE {
                        break;
                    }
                }
            }
        }
        let sched = derive_trajectory(inst, d).expect("decisions shaped for instance");
        if check_constraints(inst, &sched).is_feasible() {
            return Some(sched);
        }
    }
    None
}
