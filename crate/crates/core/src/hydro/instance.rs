use super::{ElevationStorageCurve, HydroError};

/// Static parameters of one reservoir. Per-period vectors have length `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirSpec {
    pub id: String,
    /// Energy per (m³/s · m · s).
    pub power_coefficient: f64,
    /// Storage at the start of the horizon (m³).
    pub initial_storage: f64,
    /// Tailwater elevation used to derive the head (m).
    pub tailwater_elevation: f64,
    pub curve: ElevationStorageCurve,
    pub elevation_min: Vec<f64>,
    pub elevation_max: Vec<f64>,
    pub power_min: Vec<f64>,
    pub power_max: Vec<f64>,
    /// Exogenous inflow (m³/s).
    pub inflow: Vec<f64>,
    /// Ecological target outflow (m³/s); strictly positive.
    pub ecological_flow: Vec<f64>,
    /// Range `[lo, hi]` sampled for turbine flow decisions (m³/s).
    pub turbine_flow_range: (f64, f64),
}

/// Static parameters of one residential area.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaSpec {
    pub id: String,
    /// Lower bound on water delivered per period (m³).
    pub supply_min: Vec<f64>,
    /// Upper bound on water delivered per period (m³).
    pub supply_max: Vec<f64>,
    /// Benefit per m³ delivered.
    pub unit_benefit: Vec<f64>,
    /// Distance to each reservoir (km), indexed by reservoir.
    pub distance: Vec<f64>,
    /// Transport cost per m³·km, indexed `[reservoir][period]`.
    pub unit_cost: Vec<Vec<f64>>,
}

/// A complete problem instance: `I` reservoirs, `J` areas, `T` periods.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemInstance {
    pub reservoirs: Vec<ReservoirSpec>,
    pub areas: Vec<AreaSpec>,
    pub horizon: usize,
    pub period_seconds: f64,
}

impl SystemInstance {
    /// Validates every structural invariant and returns the instance.
    pub fn new(
        reservoirs: Vec<ReservoirSpec>,
        areas: Vec<AreaSpec>,
        horizon: usize,
        period_seconds: f64,
    ) -> Result<Self, HydroError> {
        let inst = Self {
            reservoirs,
            areas,
            horizon,
            period_seconds,
        };
        let issues = inst.validate();
        if issues.is_empty() {
            Ok(inst)
        } else {
            Err(HydroError::InvalidInstance(issues))
        }
    }

    pub fn num_reservoirs(&self) -> usize {
        self.reservoirs.len()
    }

    pub fn num_areas(&self) -> usize {
        self.areas.len()
    }

    /// Lists every violated invariant; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let t_len = self.horizon;
        if self.reservoirs.is_empty() {
            issues.push("at least one reservoir is required".to_string());
        }
        if t_len == 0 {
            issues.push("horizon must be at least one period".to_string());
        }
        if !(self.period_seconds > 0.0 && self.period_seconds.is_finite()) {
            issues.push(format!("period length must be positive, got {}", self.period_seconds));
        }
        let check_len = |owner: &str, what: &str, v: &[f64], issues: &mut Vec<String>| {
            if v.len() != t_len {
                issues.push(format!("{owner}: {what} has {} periods, expected {t_len}", v.len()));
                return false;
            }
            if let Some(k) = v.iter().position(|x| !x.is_finite()) {
                issues.push(format!("{owner}: {what} is not finite at period {}", k + 1));
                return false;
            }
            true
        };
        for r in &self.reservoirs {
            let owner = format!("reservoir {}", r.id);
            let mut ok = true;
            for (what, v) in [
                ("l_min", &r.elevation_min),
                ("l_max", &r.elevation_max),
                ("p_min", &r.power_min),
                ("p_max", &r.power_max),
                ("qr", &r.inflow),
                ("qe", &r.ecological_flow),
            ] {
                ok &= check_len(&owner, what, v, &mut issues);
            }
            if !ok {
                continue;
            }
            for t in 0..t_len {
                if r.elevation_min[t] > r.elevation_max[t] {
                    issues.push(format!("{owner}: l_min > l_max at period {}", t + 1));
                }
                if r.power_min[t] > r.power_max[t] {
                    issues.push(format!("{owner}: p_min > p_max at period {}", t + 1));
                }
                if !(r.ecological_flow[t] > 0.0) {
                    issues.push(format!(
                        "{owner}: qe must be > 0 (AAPFD divides by the ecological flow), got {} at period {}",
                        r.ecological_flow[t],
                        t + 1
                    ));
                }
            }
            let (lo, hi) = r.turbine_flow_range;
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                issues.push(format!("{owner}: turbine flow range [{lo}, {hi}] must satisfy 0 <= lo < hi"));
            }
            if !r.power_coefficient.is_finite() {
                issues.push(format!("{owner}: power coefficient is not finite"));
            }
            let (smin, smax) = r.curve.storage_range();
            if !(r.initial_storage >= smin && r.initial_storage <= smax) {
                issues.push(format!(
                    "{owner}: initial storage {} outside curve range [{smin}, {smax}]",
                    r.initial_storage
                ));
            }
        }
        for a in &self.areas {
            let owner = format!("area {}", a.id);
            let mut ok = true;
            for (what, v) in [("w_min", &a.supply_min), ("w_max", &a.supply_max), ("b", &a.unit_benefit)] {
                ok &= check_len(&owner, what, v, &mut issues);
            }
            if ok {
                for t in 0..t_len {
                    if a.supply_min[t] > a.supply_max[t] {
                        issues.push(format!("{owner}: w_min > w_max at period {}", t + 1));
                    }
                    if a.supply_min[t] < 0.0 {
                        issues.push(format!("{owner}: w_min negative at period {}", t + 1));
                    }
                }
            }
            if a.distance.len() != self.reservoirs.len() {
                issues.push(format!(
                    "{owner}: {} distances, expected one per reservoir ({})",
                    a.distance.len(),
                    self.reservoirs.len()
                ));
            } else if let Some(i) = a.distance.iter().position(|d| !(*d >= 0.0 && d.is_finite())) {
                issues.push(format!("{owner}: distance to reservoir {} must be nonnegative", self.reservoirs[i].id));
            }
            if a.unit_cost.len() != self.reservoirs.len() {
                issues.push(format!("{owner}: unit costs missing for some reservoirs"));
            } else {
                for (i, c) in a.unit_cost.iter().enumerate() {
                    let who = format!("{owner} / reservoir {}", self.reservoirs[i].id);
                    if check_len(&who, "c", c, &mut issues) {
                        if let Some(t) = c.iter().position(|x| *x < 0.0) {
                            issues.push(format!("{who}: unit cost negative at period {}", t + 1));
                        }
                    }
                }
            }
        }
        issues
    }
}
