//! Dataset directory layout (periods are 1-based):
//!
//! | file | columns | rows |
//! |---|---|---|
//! | `reservoir_static.csv` | `id,A,v_beg,tailwater,qp_lo,qp_hi` | one per reservoir, in model order |
//! | `reservoirs.csv` | `id,t,qr,qe,l_min,l_max,p_min,p_max` | one per reservoir and period |
//! | `curves.csv` | `id,storage,elevation` | curve knots, storage increasing |
//! | `areas.csv` | `id,t,w_min,w_max,b` | one per area and period (optional when there are no areas) |
//! | `links.csv` | `reservoir_id,area_id,t,distance,c` | one per reservoir, area and period |
//! | `instance.csv` | `key,value` | optional; `period_seconds` defaults to 2 592 000 |
//!
//! The horizon is the largest period index in `reservoirs.csv`. Distances
//! must not vary with the period.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use super::{write_atomic, IoError};
use crate::hydro::{AreaSpec, ElevationStorageCurve, HydroError, ReservoirSpec, SystemInstance};

/// Seconds in a 30-day month.
pub const DEFAULT_PERIOD_SECONDS: f64 = 2_592_000.0;

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, required: bool) -> Result<Vec<(u64, T)>, IoError> {
    if !path.exists() {
        if required {
            return Err(IoError::invalid(path, "file not found"));
        }
        return Ok(Vec::new());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IoError::invalid(path, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| IoError::data(path, 1, e.to_string()))?.clone();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::data(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: T = rec
            .deserialize(Some(&headers))
            .map_err(|e| IoError::data(path, line, format!("malformed row: {e}")))?;
        out.push((line, row));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct StaticRow {
    id: String,
    #[serde(rename = "A")]
    a: f64,
    v_beg: f64,
    tailwater: f64,
    qp_lo: f64,
    qp_hi: f64,
}

#[derive(Deserialize)]
struct PeriodRow {
    id: String,
    t: usize,
    qr: f64,
    qe: f64,
    l_min: f64,
    l_max: f64,
    p_min: f64,
    p_max: f64,
}

#[derive(Deserialize)]
struct CurveRow {
    id: String,
    storage: f64,
    elevation: f64,
}

#[derive(Deserialize)]
struct AreaRow {
    id: String,
    t: usize,
    w_min: f64,
    w_max: f64,
    b: f64,
}

#[derive(Deserialize)]
struct LinkRow {
    reservoir_id: String,
    area_id: String,
    t: usize,
    distance: f64,
    c: f64,
}

#[derive(Deserialize)]
struct KeyValue {
    key: String,
    value: String,
}

fn finite(path: &Path, line: u64, values: &[(&str, f64)]) -> Result<(), IoError> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(IoError::data(path, line, format!("{name} must be finite, got {v}")));
        }
    }
    Ok(())
}

/// Per-period table filled from rows, checking period range and duplicates.
struct Grid {
    values: Vec<Option<Vec<f64>>>,
}

impl Grid {
    fn new(horizon: usize) -> Self {
        Self {
            values: vec![None; horizon],
        }
    }

    fn set(&mut self, path: &Path, line: u64, t: usize, row: Vec<f64>) -> Result<(), IoError> {
        if t == 0 || t > self.values.len() {
            return Err(IoError::data(
                path,
                line,
                format!("period t={t} outside 1..={}", self.values.len()),
            ));
        }
        if self.values[t - 1].is_some() {
            return Err(IoError::data(path, line, format!("duplicate row for period t={t}")));
        }
        self.values[t - 1] = Some(row);
        Ok(())
    }

    fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|r| r.as_ref().map_or(f64::NAN, |r| r[k])).collect()
    }

    fn missing(&self) -> Option<usize> {
        self.values.iter().position(Option::is_none).map(|t| t + 1)
    }
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<SystemInstance, IoError> {
    if !dir.is_dir() {
        return Err(IoError::invalid(dir, "dataset directory not found"));
    }
    let p_static = dir.join("reservoir_static.csv");
    let p_res = dir.join("reservoirs.csv");
    let p_curve = dir.join("curves.csv");
    let p_area = dir.join("areas.csv");
    let p_link = dir.join("links.csv");
    let p_inst = dir.join("instance.csv");

    let statics: Vec<(u64, StaticRow)> = read_rows(&p_static, true)?;
    let periods: Vec<(u64, PeriodRow)> = read_rows(&p_res, true)?;
    let curves: Vec<(u64, CurveRow)> = read_rows(&p_curve, true)?;
    let area_rows: Vec<(u64, AreaRow)> = read_rows(&p_area, false)?;
    let links: Vec<(u64, LinkRow)> = read_rows(&p_link, false)?;
    let settings: Vec<(u64, KeyValue)> = read_rows(&p_inst, false)?;

    let mut period_seconds = DEFAULT_PERIOD_SECONDS;
    for (line, kv) in &settings {
        match kv.key.as_str() {
            "period_seconds" => {
                period_seconds = kv
                    .value
                    .parse()
                    .map_err(|_| IoError::data(&p_inst, *line, format!("period_seconds {:?} is not a number", kv.value)))?;
                if !(period_seconds > 0.0 && f64::is_finite(period_seconds)) {
                    return Err(IoError::data(&p_inst, *line, "period_seconds must be positive"));
                }
            }
            other => return Err(IoError::data(&p_inst, *line, format!("unknown setting {other:?}"))),
        }
    }

    if statics.is_empty() {
        return Err(IoError::invalid(&p_static, "at least one reservoir is required"));
    }
    let mut res_index: BTreeMap<String, usize> = BTreeMap::new();
    for (line, s) in &statics {
        if res_index.insert(s.id.clone(), res_index.len()).is_some() {
            return Err(IoError::data(&p_static, *line, format!("duplicate reservoir id {:?}", s.id)));
        }
        finite(&p_static, *line, &[("A", s.a), ("v_beg", s.v_beg), ("tailwater", s.tailwater), ("qp_lo", s.qp_lo), ("qp_hi", s.qp_hi)])?;
        if !(s.qp_lo >= 0.0 && s.qp_lo < s.qp_hi) {
            return Err(IoError::data(&p_static, *line, "turbine flow range must satisfy 0 <= qp_lo < qp_hi"));
        }
    }
    let horizon = periods.iter().map(|(_, r)| r.t).max().unwrap_or(0);
    if horizon == 0 {
        return Err(IoError::invalid(&p_res, "no periods defined"));
    }

    let mut grids: Vec<Grid> = (0..statics.len()).map(|_| Grid::new(horizon)).collect();
    for (line, r) in &periods {
        let i = *res_index
            .get(&r.id)
            .ok_or_else(|| IoError::data(&p_res, *line, format!("unknown reservoir id {:?}", r.id)))?;
        finite(&p_res, *line, &[("qr", r.qr), ("qe", r.qe), ("l_min", r.l_min), ("l_max", r.l_max), ("p_min", r.p_min), ("p_max", r.p_max)])?;
        if !(r.qe > 0.0) {
            return Err(IoError::data(
                &p_res,
                *line,
                format!("qe must be > 0 (AAPFD divides by the ecological flow), got {}", r.qe),
            ));
        }
        if r.l_min > r.l_max {
            return Err(IoError::data(&p_res, *line, "l_min must not exceed l_max"));
        }
        if r.p_min > r.p_max {
            return Err(IoError::data(&p_res, *line, "p_min must not exceed p_max"));
        }
        grids[i].set(&p_res, *line, r.t, vec![r.qr, r.qe, r.l_min, r.l_max, r.p_min, r.p_max])?;
    }

    let mut knots: Vec<Vec<(f64, f64)>> = vec![Vec::new(); statics.len()];
    let mut knot_lines: Vec<u64> = vec![0; statics.len()];
    for (line, c) in &curves {
        let i = *res_index
            .get(&c.id)
            .ok_or_else(|| IoError::data(&p_curve, *line, format!("unknown reservoir id {:?}", c.id)))?;
        finite(&p_curve, *line, &[("storage", c.storage), ("elevation", c.elevation)])?;
        if let Some(&(s, e)) = knots[i].last() {
            if !(c.storage > s && c.elevation > e) {
                return Err(IoError::data(
                    &p_curve,
                    *line,
                    "curve knots must have strictly increasing storage and elevation",
                ));
            }
        }
        knots[i].push((c.storage, c.elevation));
        knot_lines[i] = *line;
    }

    let mut reservoirs = Vec::with_capacity(statics.len());
    for (i, (line, s)) in statics.iter().enumerate() {
        if let Some(t) = grids[i].missing() {
            return Err(IoError::invalid(&p_res, format!("reservoir {:?} has no row for period t={t}", s.id)));
        }
        let curve = ElevationStorageCurve::new(knots[i].clone()).map_err(|e| match e {
            HydroError::InvalidCurve(m) => IoError::data(&p_curve, knot_lines[i], format!("reservoir {:?}: {m}", s.id)),
            other => IoError::invalid(&p_curve, other.to_string()),
        })?;
        let (smin, smax) = curve.storage_range();
        if !(s.v_beg >= smin && s.v_beg <= smax) {
            return Err(IoError::data(
                &p_static,
                *line,
                format!("v_beg {} outside the curve's storage range [{smin}, {smax}]", s.v_beg),
            ));
        }
        let g = &grids[i];
        reservoirs.push(ReservoirSpec {
            id: s.id.clone(),
            power_coefficient: s.a,
            initial_storage: s.v_beg,
            tailwater_elevation: s.tailwater,
            curve,
            elevation_min: g.column(2),
            elevation_max: g.column(3),
            power_min: g.column(4),
            power_max: g.column(5),
            inflow: g.column(0),
            ecological_flow: g.column(1),
            turbine_flow_range: (s.qp_lo, s.qp_hi),
        });
    }

    let mut area_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut area_ids: Vec<String> = Vec::new();
    let mut area_grids: Vec<Grid> = Vec::new();
    for (line, a) in &area_rows {
        let j = *area_index.entry(a.id.clone()).or_insert_with(|| {
            area_ids.push(a.id.clone());
            area_grids.push(Grid::new(horizon));
            area_ids.len() - 1
        });
        finite(&p_area, *line, &[("w_min", a.w_min), ("w_max", a.w_max), ("b", a.b)])?;
        if a.w_min < 0.0 || a.w_min > a.w_max {
            return Err(IoError::data(&p_area, *line, "supply bounds must satisfy 0 <= w_min <= w_max"));
        }
        area_grids[j].set(&p_area, *line, a.t, vec![a.w_min, a.w_max, a.b])?;
    }

    let ni = statics.len();
    let nj = area_ids.len();
    let mut distance: Vec<Vec<Option<f64>>> = vec![vec![None; ni]; nj];
    let mut cost: Vec<Vec<Grid>> = (0..nj).map(|_| (0..ni).map(|_| Grid::new(horizon)).collect()).collect();
    for (line, l) in &links {
        let i = *res_index
            .get(&l.reservoir_id)
            .ok_or_else(|| IoError::data(&p_link, *line, format!("unknown reservoir id {:?}", l.reservoir_id)))?;
        let j = *area_index
            .get(&l.area_id)
            .ok_or_else(|| IoError::data(&p_link, *line, format!("unknown area id {:?}", l.area_id)))?;
        finite(&p_link, *line, &[("distance", l.distance), ("c", l.c)])?;
        if l.distance < 0.0 || l.c < 0.0 {
            return Err(IoError::data(&p_link, *line, "distance and c must be nonnegative"));
        }
        match distance[j][i] {
            Some(d) if d != l.distance => {
                return Err(IoError::data(
                    &p_link,
                    *line,
                    format!("distance {} differs from {d} given earlier for the same pair", l.distance),
                ))
            }
            _ => distance[j][i] = Some(l.distance),
        }
        cost[j][i].set(&p_link, *line, l.t, vec![l.c])?;
    }

    let mut areas = Vec::with_capacity(nj);
    for j in 0..nj {
        if let Some(t) = area_grids[j].missing() {
            return Err(IoError::invalid(&p_area, format!("area {:?} has no row for period t={t}", area_ids[j])));
        }
        let mut dist = Vec::with_capacity(ni);
        let mut unit_cost = Vec::with_capacity(ni);
        for i in 0..ni {
            let rid = &statics[i].1.id;
            let d = distance[j][i].ok_or_else(|| {
                IoError::invalid(&p_link, format!("no link between reservoir {rid:?} and area {:?}", area_ids[j]))
            })?;
            if let Some(t) = cost[j][i].missing() {
                return Err(IoError::invalid(
                    &p_link,
                    format!("link {rid:?} -> {:?} has no row for period t={t}", area_ids[j]),
                ));
            }
            dist.push(d);
            unit_cost.push(cost[j][i].column(0));
        }
        let g = &area_grids[j];
        areas.push(AreaSpec {
            id: area_ids[j].clone(),
            supply_min: g.column(0),
            supply_max: g.column(1),
            unit_benefit: g.column(2),
            distance: dist,
            unit_cost,
        });
    }

    SystemInstance::new(reservoirs, areas, horizon, period_seconds).map_err(|e| match e {
        HydroError::InvalidInstance(issues) => IoError::invalid(dir, issues.join("; ")),
        other => IoError::invalid(dir, other.to_string()),
    })
}

fn csv_file<F>(path: &Path, header: &[&str], rows: F) -> Result<(), IoError>
where
    F: FnOnce(&mut csv::Writer<&mut dyn Write>) -> csv::Result<()>,
{
    write_atomic(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(header)?;
        rows(&mut wtr)?;
        wtr.flush()
    })
}

fn num(x: f64) -> String {
    x.to_string()
}

/// Writes `inst` in the layout read by [`load_dataset`].
pub fn write_dataset(dir: &Path, inst: &SystemInstance) -> Result<(), IoError> {
    let t_len = inst.horizon;
    csv_file(&dir.join("reservoir_static.csv"), &["id", "A", "v_beg", "tailwater", "qp_lo", "qp_hi"], |w| {
        for r in &inst.reservoirs {
            let (lo, hi) = r.turbine_flow_range;
            w.write_record([
                r.id.clone(),
                num(r.power_coefficient),
                num(r.initial_storage),
                num(r.tailwater_elevation),
                num(lo),
                num(hi),
            ])?;
        }
        Ok(())
    })?;
    csv_file(&dir.join("reservoirs.csv"), &["id", "t", "qr", "qe", "l_min", "l_max", "p_min", "p_max"], |w| {
        for r in &inst.reservoirs {
            for t in 0..t_len {
                w.write_record([
                    r.id.clone(),
                    (t + 1).to_string(),
                    num(r.inflow[t]),
                    num(r.ecological_flow[t]),
                    num(r.elevation_min[t]),
                    num(r.elevation_max[t]),
                    num(r.power_min[t]),
                    num(r.power_max[t]),
                ])?;
            }
        }
        Ok(())
    })?;
    csv_file(&dir.join("curves.csv"), &["id", "storage", "elevation"], |w| {
        for r in &inst.reservoirs {
            for (s, e) in r.curve.points() {
                w.write_record([r.id.clone(), num(s), num(e)])?;
            }
        }
        Ok(())
    })?;
    csv_file(&dir.join("areas.csv"), &["id", "t", "w_min", "w_max", "b"], |w| {
        for a in &inst.areas {
            for t in 0..t_len {
                w.write_record([
                    a.id.clone(),
                    (t + 1).to_string(),
                    num(a.supply_min[t]),
                    num(a.supply_max[t]),
                    num(a.unit_benefit[t]),
                ])?;
            }
        }
        Ok(())
    })?;
    csv_file(&dir.join("links.csv"), &["reservoir_id", "area_id", "t", "distance", "c"], |w| {
        for a in &inst.areas {
            for (i, r) in inst.reservoirs.iter().enumerate() {
                for t in 0..t_len {
                    w.write_record([
                        r.id.clone(),
                        a.id.clone(),
                        (t + 1).to_string(),
                        num(a.distance[i]),
                        num(a.unit_cost[i][t]),
                    ])?;
                }
            }
        }
        Ok(())
    })?;
    csv_file(&dir.join("instance.csv"), &["key", "value"], |w| {
        w.write_record(["period_seconds".to_string(), num(inst.period_seconds)])
    })
}
