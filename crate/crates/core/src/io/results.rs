use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, IoError};
use crate::decomposition::ObjectiveBounds;
use crate::hydro::{Decisions, ObjectiveTriple, OperationSchedule, SystemInstance};
use crate::trainer::CurvePoint;

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => IoError::read(path, io),
            other => IoError::invalid(path, format!("{other:?}")),
        })?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: T = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::data(path, line, e.to_string())
        })?;
        out.push(row);
    }
    Ok(out)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), IoError> {
    write_atomic(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        for r in rows {
            wtr.serialize(r)?;
        }
        wtr.flush()
    })
}

/// Bounds file: TOML with one table per objective.
pub fn write_bounds(path: &Path, bounds: &ObjectiveBounds) -> Result<(), IoError> {
    let text = toml::to_string(bounds).map_err(|e| IoError::invalid(path, e.to_string()))?;
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

pub fn read_bounds(path: &Path) -> Result<ObjectiveBounds, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::read(path, e))?;
    let b: ObjectiveBounds = toml::from_str(&text).map_err(|e| IoError::invalid(path, e.to_string()))?;
    b.validate().map_err(|e| IoError::invalid(path, e.to_string()))?;
    Ok(b)
}

/// One row of a front CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub method: String,
    /// Weight vector `a;b;c` for decomposition runs, rank or index otherwise.
    pub weight_or_rank: String,
    pub power: f64,
    pub aapfd: f64,
    pub water_revenue: f64,
    pub feasible: bool,
    pub seed: Option<u64>,
}

impl FrontRow {
    pub fn objectives(&self) -> ObjectiveTriple {
        ObjectiveTriple::new(self.power, self.aapfd, self.water_revenue)
    }
}

pub fn write_front(path: &Path, rows: &[FrontRow]) -> Result<(), IoError> {
    if rows.is_empty() {
        return write_atomic(path, |w| {
            w.write_all(b"method,weight_or_rank,power,aapfd,water_revenue,feasible,seed\n")
        });
    }
    write_csv(path, rows)
}

pub fn read_front(path: &Path) -> Result<Vec<FrontRow>, IoError> {
    read_csv(path)
}

pub fn write_curve(path: &Path, curve: &[CurvePoint]) -> Result<(), IoError> {
    #[derive(Serialize)]
    struct Row {
        iteration: usize,
        mean_reward: f64,
        baseline_reward: f64,
        lr: f64,
    }
    let rows: Vec<Row> = curve
        .iter()
        .map(|c| Row {
            iteration: c.iteration,
            mean_reward: c.mean_reward,
            baseline_reward: c.baseline_reward,
            lr: c.lr,
        })
        .collect();
    if rows.is_empty() {
        return write_atomic(path, |w| w.write_all(b"iteration,mean_reward,baseline_reward,lr\n"));
    }
    write_csv(path, &rows)
}

/// Reads a reward-curve CSV as `(iteration, mean_reward, baseline_reward, lr)`.
pub fn read_curve(path: &Path) -> Result<Vec<(usize, f64, f64, f64)>, IoError> {
    read_csv(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScheduleRow {
    reservoir: String,
    area: String,
    period: usize,
    qp: f64,
    x: u8,
    qs: f64,
    #[serde(rename = "V")]
    v: f64,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "P")]
    p: f64,
}

/// Schedule CSV: one row per reservoir, area and period (a single row
/// with an empty area per reservoir and period when there are no areas).
/// `V` is the end-of-period storage, `L` the end-of-period elevation and
/// `P` the period's power.
pub fn write_schedule(path: &Path, inst: &SystemInstance, sched: &OperationSchedule) -> Result<(), IoError> {
    let d = &sched.decisions;
    let mut rows = Vec::new();
    for (i, r) in inst.reservoirs.iter().enumerate() {
        for t in 0..inst.horizon {
            let base = ScheduleRow {
                reservoir: r.id.clone(),
                area: String::new(),
                period: t + 1,
                qp: d.qp[i][t],
                x: 0,
                qs: 0.0,
                v: sched.storage[i][t],
                l: sched.elevation[i][t],
                p: sched.power[i][t],
            };
            if inst.areas.is_empty() {
                rows.push(base);
                continue;
            }
            for (j, a) in inst.areas.iter().enumerate() {
                rows.push(ScheduleRow {
                    area: a.id.clone(),
                    x: d.x[i][j][t] as u8,
                    qs: d.qs[i][j][t],
                    ..base.clone()
                });
            }
        }
    }
    write_csv(path, &rows)
}

/// Reads the decisions back from a schedule CSV.
pub fn read_schedule(path: &Path, inst: &SystemInstance) -> Result<Decisions, IoError> {
    let rows: Vec<ScheduleRow> = read_csv(path)?;
    let (ni, nj, nt) = (inst.num_reservoirs(), inst.num_areas(), inst.horizon);
    let mut d = Decisions::zeros(ni, nj, nt);
    let mut seen_qp = vec![vec![false; nt]; ni];
    let mut seen_supply = vec![vec![vec![false; nt]; nj]; ni];
    for (k, r) in rows.iter().enumerate() {
        let line = k as u64 + 2;
        let i = inst
            .reservoirs
            .iter()
            .position(|x| x.id == r.reservoir)
            .ok_or_else(|| IoError::data(path, line, format!("unknown reservoir {:?}", r.reservoir)))?;
        if r.period == 0 || r.period > nt {
            return Err(IoError::data(path, line, format!("period {} outside 1..={nt}", r.period)));
        }
        let t = r.period - 1;
        if seen_qp[i][t] && d.qp[i][t] != r.qp {
            return Err(IoError::data(path, line, "qp differs between rows of the same reservoir and period"));
        }
        d.qp[i][t] = r.qp;
        seen_qp[i][t] = true;
        if r.area.is_empty() {
            continue;
        }
        let j = inst
            .areas
            .iter()
            .position(|a| a.id == r.area)
            .ok_or_else(|| IoError::data(path, line, format!("unknown area {:?}", r.area)))?;
        if seen_supply[i][j][t] {
            return Err(IoError::data(path, line, "duplicate row"));
        }
        seen_supply[i][j][t] = true;
        if r.x > 1 {
            return Err(IoError::data(path, line, "x must be 0 or 1"));
        }
        d.x[i][j][t] = r.x == 1;
        d.qs[i][j][t] = r.qs;
    }
    for i in 0..ni {
        if let Some(t) = seen_qp[i].iter().position(|s| !s) {
            return Err(IoError::invalid(
                path,
                format!("no row for reservoir {:?} period {}", inst.reservoirs[i].id, t + 1),
            ));
        }
    }
    Ok(d)
}

/// Objective triple of a decoded schedule, with its feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivesRecord {
    pub power: f64,
    pub aapfd: f64,
    pub water_revenue: f64,
    pub feasible: bool,
}

pub fn write_objectives(path: &Path, rec: &ObjectivesRecord) -> Result<(), IoError> {
    write_csv(path, std::slice::from_ref(rec))
}

pub fn read_objectives(path: &Path) -> Result<ObjectivesRecord, IoError> {
    let rows: Vec<ObjectivesRecord> = read_csv(path)?;
    match rows.as_slice() {
        [r] => Ok(*r),
        _ => Err(IoError::invalid(path, format!("expected exactly one row, found {}", rows.len()))),
    }
}
