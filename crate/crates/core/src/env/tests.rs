use std::sync::Mutex;

use super::*;
use crate::decomposition::{BoundSource, ObjectiveBounds, ObjectiveRange, WeightVector};
use crate::fixtures::{grid_instance, single_reservoir, tiny_instance};
use crate::hydro::{check_constraints, derive_trajectory};
use crate::rng::rng_from_seed;

/// Records every step it is asked about and answers with a fixed table.
struct Scripted {
    space: ActionSpace,
    seen: Mutex<Vec<(StepKind, Observation)>>,
    flag: usize,
}

impl Policy for Scripted {
    fn distribution(&self, kind: &StepKind, obs: &Observation) -> Vec<f64> {
        self.seen.lock().unwrap().push((*kind, *obs));
        let n = self.space.arity(kind);
        let mut p = vec![0.0; n];
        match kind {
            StepKind::SupplyFlag { .. } => p[self.flag] = 1.0,
            _ => p[n - 1] = 1.0,
        }
        p
    }
}

fn scripted(space: ActionSpace, flag: usize) -> Scripted {
    Scripted {
        space,
        seen: Mutex::new(Vec::new()),
        flag,
    }
}

#[test]
fn grid_values_hit_both_ends() {
    let inst = tiny_instance();
    let s = ActionSpace::new(5, 3);
    assert_eq!(s.qp_grid(&inst, 0), vec![0.0, 5.0, 10.0, 15.0, 20.0]);
    assert_eq!(s.qs_grid(&inst, 0, 1), vec![0.0, 5.0, 10.0]);
}

#[test]
fn step_count_with_all_flags_off_and_on() {
    let inst = grid_instance(2, 3, 4);
    let space = ActionSpace::new(3, 3);
    let off = greedy_rollout(&inst, &space, &scripted(space, 0)).unwrap();
    assert_eq!(off.steps.len(), 4 * 2 * (1 + 3));
    let on = greedy_rollout(&inst, &space, &scripted(space, 1)).unwrap();
    assert_eq!(on.steps.len(), 4 * 2 * (1 + 2 * 3));
}

#[test]
fn loop_order_is_period_reservoir_area() {
    let inst = grid_instance(2, 2, 2);
    let space = ActionSpace::new(3, 3);
    let ep = greedy_rollout(&inst, &space, &scripted(space, 1)).unwrap();
    let mut expected = Vec::new();
    for t in 0..2 {
        for i in 0..2 {
            expected.push(StepKind::Power { reservoir: i, period: t });
            for j in 0..2 {
                expected.push(StepKind::SupplyFlag {
                    reservoir: i,
                    area: j,
                    period: t,
                });
                expected.push(StepKind::SupplyAmount {
                    reservoir: i,
                    area: j,
                    period: t,
                });
            }
        }
    }
    let got: Vec<StepKind> = ep.steps.iter().map(|s| s.kind).collect();
    assert_eq!(got, expected);
}

#[test]
fn delivered_water_accumulates_within_period_and_resets() {
    let inst = grid_instance(3, 1, 2);
    let space = ActionSpace::new(3, 3);
    let policy = scripted(space, 1);
    greedy_rollout(&inst, &space, &policy).unwrap();
    let full = inst.areas[0].supply_max[0];
    let flags: Vec<f64> = policy
        .seen
        .lock()
        .unwrap()
        .iter()
        .filter(|(k, _)| matches!(k, StepKind::SupplyFlag { .. }))
        .map(|(_, o)| o.delivered)
        .collect();
    // Each reservoir sends the full cap: 0, W, 2W in period 0, then again.
    assert_eq!(flags, vec![0.0, full, 2.0 * full, 0.0, full, 2.0 * full]);
}

#[test]
fn observed_elevation_reflects_earlier_decisions() {
    let inst = single_reservoir(3);
    let space = ActionSpace::new(3, 3);
    let policy = scripted(space, 0);
    let ep = greedy_rollout(&inst, &space, &policy).unwrap();
    // Always the top bin: 20 m³/s out, 10 in, Δt 100 s ⇒ −1000 m³ ⇒ −0.1 m.
    let elev: Vec<f64> = ep.steps.iter().map(|s| s.observation.elevation).collect();
    for (t, e) in elev.iter().enumerate() {
        assert!((e - (150.0 - 0.1 * t as f64)).abs() < 1e-9, "t={t}: {e}");
    }
}

#[test]
fn rollout_schedule_matches_trajectory_of_its_decisions() {
    let inst = grid_instance(2, 2, 3);
    let space = ActionSpace::new(5, 4);
    let ep = rollout(&inst, &space, &UniformPolicy { space }, &mut rng_from_seed(3)).unwrap();
    let again = derive_trajectory(&inst, ep.schedule.decisions.clone()).unwrap();
    assert_eq!(again, ep.schedule);
    let sum: f64 = ep.steps.iter().map(|s| s.log_prob).sum();
    assert!((sum - ep.log_prob).abs() < 1e-12);
}

#[test]
fn rollout_is_reproducible_per_seed() {
    let inst = grid_instance(2, 2, 3);
    let space = ActionSpace::new(5, 4);
    let p = UniformPolicy { space };
    let a = rollout(&inst, &space, &p, &mut rng_from_seed(1)).unwrap();
    let b = rollout(&inst, &space, &p, &mut rng_from_seed(1)).unwrap();
    assert_eq!(a.steps, b.steps);
}

#[test]
fn greedy_ties_go_to_lowest_index() {
    let inst = grid_instance(1, 1, 2);
    let space = ActionSpace::new(4, 4);
    let ep = greedy_rollout(&inst, &space, &UniformPolicy { space }).unwrap();
    assert!(ep.steps.iter().all(|s| s.choice == 0));
}

#[test]
fn degenerate_policy_reproduces_its_choices() {
    let inst = grid_instance(1, 2, 2);
    let space = ActionSpace::new(3, 3);
    let mut rng = rng_from_seed(0);
    let ep = rollout(&inst, &space, &scripted(space, 1), &mut rng).unwrap();
    assert_eq!(ep.log_prob, 0.0);
    assert!(ep.schedule.decisions.qp[0].iter().all(|&q| q == 20.0));
    assert!(ep.schedule.decisions.x[0].iter().flatten().all(|&x| x));
}

struct Broken(Vec<f64>);

impl Policy for Broken {
    fn distribution(&self, _: &StepKind, _: &Observation) -> Vec<f64> {
        self.0.clone()
    }
}

#[test]
fn malformed_distributions_are_rejected() {
    let inst = single_reservoir(1);
    let space = ActionSpace::new(3, 3);
    let err = greedy_rollout(&inst, &space, &Broken(vec![0.5, 0.5])).unwrap_err();
    assert!(matches!(err, EnvError::WrongArity { expected: 3, actual: 2, .. }), "{err}");
    let err = greedy_rollout(&inst, &space, &Broken(vec![0.5, 0.6, -0.1])).unwrap_err();
    assert!(matches!(err, EnvError::InvalidDistribution { .. }), "{err}");
    let err = greedy_rollout(&inst, &space, &Broken(vec![0.2, 0.2, 0.2])).unwrap_err();
    assert!(err.to_string().contains("sum"), "{err}");
    let err = greedy_rollout(&inst, &space, &Broken(vec![f64::NAN, 0.5, 0.5])).unwrap_err();
    assert!(matches!(err, EnvError::InvalidDistribution { .. }));
}

fn tiny_bounds() -> ObjectiveBounds {
    let r = |min, max| ObjectiveRange {
        min,
        max,
        source: BoundSource::UserSupplied,
    };
    ObjectiveBounds::new(r(0.0, 100.0), r(0.01, 2.0), r(0.0, 4000.0), None).unwrap()
}

#[test]
fn hard_reward_is_zero_exactly_when_infeasible() {
    let inst = tiny_instance();
    let space = ActionSpace::new(5, 5);
    let w = WeightVector::new(0.5, 0.25, 0.25).unwrap();
    let b = tiny_bounds();
    let mut rng = rng_from_seed(4);
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..500 {
        let ep = rollout(&inst, &space, &UniformPolicy { space }, &mut rng).unwrap();
        let r = episode_reward(&inst, &ep.schedule, &w, &b, RewardMode::Hard).unwrap();
        if check_constraints(&inst, &ep.schedule).is_feasible() {
            feasible += 1;
            assert!(r > 0.0);
        } else {
            infeasible += 1;
            assert_eq!(r, 0.0);
        }
    }
    assert!(feasible > 0 && infeasible > 0, "{feasible} feasible, {infeasible} infeasible");
}

#[test]
fn soft_penalty_subtracts_scaled_violation() {
    let inst = tiny_instance();
    let space = ActionSpace::new(5, 5);
    let w = WeightVector::new(0.2, 0.3, 0.5).unwrap();
    let b = tiny_bounds();
    let mut rng = rng_from_seed(5);
    let mut checked = 0;
    while checked < 20 {
        let ep = rollout(&inst, &space, &UniformPolicy { space }, &mut rng).unwrap();
        let report = check_constraints(&inst, &ep.schedule);
        if report.is_feasible() {
            continue;
        }
        let hard_free = crate::decomposition::scalarize(
            &crate::hydro::objective_triple(&inst, &ep.schedule).unwrap(),
            &w,
            &b,
        );
        let soft = episode_reward(&inst, &ep.schedule, &w, &b, RewardMode::SoftPenalty { lambda: 2.0 }).unwrap();
        assert!((soft - (hard_free - 2.0 * report.total_violation())).abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn random_feasible_schedules_are_feasible() {
    let inst = tiny_instance();
    let space = ActionSpace::new(5, 5);
    let mut rng = rng_from_seed(6);
    for _ in 0..50 {
        let s = random_feasible_schedule(&inst, &space, &mut rng, 100).expect("tiny instance has feasible schedules");
        assert!(check_constraints(&inst, &s).is_feasible());
    }
}

#[test]
fn trace_has_one_row_per_step() {
    let inst = grid_instance(1, 2, 2);
    let space = ActionSpace::new(3, 3);
    let ep = greedy_rollout(&inst, &space, &scripted(space, 1)).unwrap();
    let mut buf = Vec::new();
    write_trace(&mut buf, &inst, &space, &ep.steps).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,reservoir,area,period,choice,value,log_prob");
    assert_eq!(lines.len(), 1 + ep.steps.len());
    assert!(lines[1].starts_with("power,0,,0,2,20,"));
}
