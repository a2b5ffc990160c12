//! Small hand-sized instances shared by tests, benches and examples.

use crate::hydro::{AreaSpec, ElevationStorageCurve, ReservoirSpec, SystemInstance};

/// Linear curve: 10 000 m³ per metre, elevation 100 m at empty storage.
pub fn linear_curve() -> ElevationStorageCurve {
    ElevationStorageCurve::new(vec![(0.0, 100.0), (1.0e6, 200.0)]).unwrap()
}

/// One reservoir on [`linear_curve`], `Δt = 100 s`, storage starting at
/// 5·10⁵ m³ (150 m), tailwater 90 m, inflow 10 m³/s, ecological flow
/// 10 m³/s, turbine range `[0, 20]`, loose bounds everywhere.
pub fn single_reservoir(horizon: usize) -> SystemInstance {
    let res = ReservoirSpec {
        id: "r0".into(),
        power_coefficient: 1.0,
        initial_storage: 5.0e5,
        tailwater_elevation: 90.0,
        curve: linear_curve(),
        elevation_min: vec![100.0; horizon],
        elevation_max: vec![200.0; horizon],
        power_min: vec![0.0; horizon],
        power_max: vec![1.0e9; horizon],
        inflow: vec![10.0; horizon],
        ecological_flow: vec![10.0; horizon],
        turbine_flow_range: (0.0, 20.0),
    };
    SystemInstance::new(vec![res], vec![], horizon, 100.0).unwrap()
}

/// One reservoir and one area over two periods, with bounds that make a
/// meaningful share of schedules infeasible.
///
/// The area may receive between 0 and 1 000 m³ per period; supplying is
/// profitable (benefit 2 per m³, transport cost 0.01 per m³·km over 50 km).
pub fn tiny_instance() -> SystemInstance {
    let horizon = 2;
    let res = ReservoirSpec {
        id: "r0".into(),
        power_coefficient: 1.0e-3,
        initial_storage: 5.0e5,
        tailwater_elevation: 90.0,
        curve: ElevationStorageCurve::new(vec![(0.0, 100.0), (4.0e5, 150.0), (1.0e6, 200.0)]).unwrap(),
        elevation_min: vec![140.0, 140.0],
        elevation_max: vec![200.0, 200.0],
        power_min: vec![10.0, 10.0],
        power_max: vec![1.0e6, 1.0e6],
        inflow: vec![10.0, 12.0],
        ecological_flow: vec![10.0, 8.0],
        turbine_flow_range: (0.0, 20.0),
    };
    let area = AreaSpec {
        id: "a0".into(),
        supply_min: vec![0.0, 0.0],
        supply_max: vec![1000.0, 1000.0],
        unit_benefit: vec![2.0, 2.0],
        distance: vec![50.0],
        unit_cost: vec![vec![0.01, 0.01]],
    };
    SystemInstance::new(vec![res], vec![area], horizon, 100.0).unwrap()
}

/// Synthetic instance of arbitrary shape with loose bounds, used for
/// structural tests of the decision process.
pub fn grid_instance(reservoirs: usize, areas: usize, horizon: usize) -> SystemInstance {
    let res = (0..reservoirs)
        .map(|i| ReservoirSpec {
            id: format!("r{i}"),
            power_coefficient: 1.0 + i as f64,
            initial_storage: 5.0e5,
            tailwater_elevation: 90.0,
            curve: linear_curve(),
            elevation_min: vec![100.0; horizon],
            elevation_max: vec![200.0; horizon],
            power_min: vec![0.0; horizon],
            power_max: vec![1.0e12; horizon],
            inflow: (0..horizon).map(|t| 10.0 + t as f64).collect(),
            ecological_flow: vec![10.0; horizon],
            turbine_flow_range: (0.0, 20.0),
        })
        .collect();
    let area = (0..areas)
        .map(|j| AreaSpec {
            id: format!("a{j}"),
            supply_min: vec![0.0; horizon],
            supply_max: vec![500.0 * (j + 1) as f64; horizon],
            unit_benefit: vec![1.0; horizon],
            distance: (0..reservoirs).map(|i| 10.0 * (i + j + 1) as f64).collect(),
            unit_cost: vec![vec![0.01; horizon]; reservoirs],
        })
        .collect();
    SystemInstance::new(res, area, horizon, 100.0).unwrap()
}
