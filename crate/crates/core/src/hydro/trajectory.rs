use super::{power_generation, water_balance_step, HydroError, SystemInstance};

/// Raw decision variables: turbine flow `qp[i][t]` (m³/s), supply flags
/// `x[i][j][t]` and supply flows `qs[i][j][t]` (m³/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Decisions {
    pub qp: Vec<Vec<f64>>,
    pub x: Vec<Vec<Vec<bool>>>,
    pub qs: Vec<Vec<Vec<f64>>>,
}

impl Decisions {
    pub fn zeros(reservoirs: usize, areas: usize, horizon: usize) -> Self {
        Self {
            qp: vec![vec![0.0; horizon]; reservoirs],
            x: vec![vec![vec![false; horizon]; areas]; reservoirs],
            qs: vec![vec![vec![0.0; horizon]; areas]; reservoirs],
        }
    }

    pub fn zeros_for(inst: &SystemInstance) -> Self {
        Self::zeros(inst.num_reservoirs(), inst.num_areas(), inst.horizon)
    }

    /// Water actually delivered from reservoir `i` in period `t` (m³/s),
    /// `Σ_j qs·x`.
    pub fn supply_sum(&self, i: usize, t: usize) -> f64 {
        self.qs[i]
            .iter()
            .zip(&self.x[i])
            .filter(|(_, x)| x[t])
            .map(|(qs, _)| qs[t])
            .sum()
    }

    fn check_shape(&self, inst: &SystemInstance) -> Result<(), HydroError> {
        let (ni, nj, nt) = (inst.num_reservoirs(), inst.num_areas(), inst.horizon);
        let mismatch = |what: &str, expected, actual| HydroError::LengthMismatch {
            what: what.to_string(),
            expected,
            actual,
        };
        for (what, len) in [("qp", self.qp.len()), ("x", self.x.len()), ("qs", self.qs.len())] {
            if len != ni {
                return Err(mismatch(what, ni, len));
            }
        }
        for i in 0..ni {
            if self.qp[i].len() != nt {
                return Err(mismatch("qp periods", nt, self.qp[i].len()));
            }
            if self.x[i].len() != nj {
                return Err(mismatch("x areas", nj, self.x[i].len()));
            }
            if self.qs[i].len() != nj {
                return Err(mismatch("qs areas", nj, self.qs[i].len()));
            }
            for j in 0..nj {
                if self.x[i][j].len() != nt {
                    return Err(mismatch("x periods", nt, self.x[i][j].len()));
                }
                if self.qs[i][j].len() != nt {
                    return Err(mismatch("qs periods", nt, self.qs[i][j].len()));
                }
            }
        }
        Ok(())
    }
}

/// Storage left the tabulated curve range; the elevation was clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryIssue {
    pub reservoir: usize,
    pub period: usize,
    pub storage: f64,
    pub message: String,
}

/// Decisions plus the trajectories they induce.
///
/// `storage[i][t]` and `elevation[i][t]` are end-of-period values.
/// `head[i][t]` is taken from the start-of-period elevation, i.e. the
/// surface the turbines see when the period's release begins.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationSchedule {
    pub decisions: Decisions,
    pub initial_storage: Vec<f64>,
    pub storage: Vec<Vec<f64>>,
    pub elevation: Vec<Vec<f64>>,
    pub head: Vec<Vec<f64>>,
    pub power: Vec<Vec<f64>>,
    pub issues: Vec<TrajectoryIssue>,
}

/// Simulates the water balance and power output of `decisions`.
///
/// Supply flows whose flag is off are zeroed. A storage outside the curve
/// range does not abort the simulation: the elevation is clamped to the
/// curve and the event is recorded in `issues`.
pub fn derive_trajectory(
    inst: &SystemInstance,
    mut decisions: Decisions,
) -> Result<OperationSchedule, HydroError> {
    decisions.check_shape(inst)?;
    for (x_i, qs_i) in decisions.x.iter().zip(decisions.qs.iter_mut()) {
        for (x_ij, qs_ij) in x_i.iter().zip(qs_i.iter_mut()) {
            for (x, qs) in x_ij.iter().zip(qs_ij.iter_mut()) {
                if !*x {
                    *qs = 0.0;
                }
            }
        }
    }
    let nt = inst.horizon;
    let dt = inst.period_seconds;
    let ni = inst.num_reservoirs();
    let mut storage = vec![vec![0.0; nt]; ni];
    let mut elevation = vec![vec![0.0; nt]; ni];
    let mut head = vec![vec![0.0; nt]; ni];
    let mut power = vec![vec![0.0; nt]; ni];
    let mut issues = Vec::new();
    let mut initial_storage = Vec::with_capacity(ni);

    for (i, res) in inst.reservoirs.iter().enumerate() {
        initial_storage.push(res.initial_storage);
        let mut v_prev = res.initial_storage;
        let mut l_prev = elevation_or_clamp(inst, i, 0, v_prev, &mut issues);
        for t in 0..nt {
            let qp = decisions.qp[i][t];
            let v = water_balance_step(v_prev, res.inflow[t], qp, decisions.supply_sum(i, t), dt);
            let h = (l_prev - res.tailwater_elevation).max(0.0);
            let l = elevation_or_clamp(inst, i, t, v, &mut issues);
            storage[i][t] = v;
            elevation[i][t] = l;
            head[i][t] = h;
            power[i][t] = power_generation(res.power_coefficient, qp, h, dt);
            v_prev = v;
            l_prev = l;
        }
    }

    Ok(OperationSchedule {
        decisions,
        initial_storage,
        storage,
        elevation,
        head,
        power,
        issues,
    })
}

fn elevation_or_clamp(
    inst: &SystemInstance,
    i: usize,
    t: usize,
    v: f64,
    issues: &mut Vec<TrajectoryIssue>,
) -> f64 {
    let curve = &inst.reservoirs[i].curve;
    match curve.elevation_of_storage(v) {
        Ok(l) => l,
        Err(e) => {
            issues.push(TrajectoryIssue {
                reservoir: i,
                period: t,
                storage: v,
                message: e.with_context(i, t).to_string(),
            });
            curve.elevation_clamped(v)
        }
    }
}
