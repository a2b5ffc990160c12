//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed.
//! Pass criterion numbers as arguments to run a subset, for example
//! `cargo test -p resopt-cli --test acceptance -- 3 10`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use resopt_core::decomposition::{
    estimate_bounds, scalarize, weight_grid, BoundMethod, BoundSource, ObjectiveBounds, ObjectiveRange, WeightVector,
    AAPFD_FLOOR,
};
use resopt_core::env::{
    episode_reward, greedy_rollout, random_feasible_schedule, rollout, ActionSpace, Episode, RewardMode, StepKind,
    UniformPolicy,
};
use resopt_core::fixtures::{grid_instance, tiny_instance};
use resopt_core::hydro::{
    aapfd, check_constraints, derive_trajectory, objective_triple, power_generation, supply_revenue,
    water_balance_step, Decisions, ObjectiveTriple, SystemInstance,
};
use resopt_core::io::{load_dataset, read_objectives, read_schedule, RunSnapshot};
use resopt_core::moea::{moead_run, nsga3_run, MoeaConfig, Solution};
use resopt_core::pareto::{dominance_filter, hypervolume_3d};
use resopt_core::policy::{EncoderConfig, EncoderVariant, PolicyModel};
use resopt_core::rng::{rng_from_seed, SimRng};
use resopt_core::tensor::{Gradients, Graph};
use resopt_core::trainer::{
    greedy_decode, paired_t_test, train_policy, train_subproblem, ScalarizedReward, TrainConfig,
};

type Verdict = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Verdict,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn desk_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/desk")
}

fn desk() -> SystemInstance {
    load_dataset(&desk_dir()).expect("bundled desk dataset loads")
}

fn desk_bounds(inst: &SystemInstance, space: &ActionSpace) -> ObjectiveBounds {
    let method = BoundMethod::Sample { budget: 2000 };
    estimate_bounds(inst, space, &method, 42, &mut rng_from_seed(42)).expect("desk bounds")
}

// ---------------------------------------------------------------- 1

/// Piecewise-linear interpolation clamped to the covered range.
fn interp_oracle(points: &[(f64, f64)], v: f64) -> f64 {
    let (first, last) = (points[0], points[points.len() - 1]);
    if v <= first.0 {
        return first.1;
    }
    if v >= last.0 {
        return last.1;
    }
    let k = points.iter().position(|p| p.0 >= v).unwrap();
    let (a, b) = (points[k - 1], points[k]);
    a.1 + (b.1 - a.1) * (v - a.0) / (b.0 - a.0)
}

/// Objectives recomputed from the decisions alone.
fn objectives_oracle(inst: &SystemInstance, d: &Decisions) -> (f64, f64, f64) {
    let dt = inst.period_seconds;
    let (mut power, mut eco, mut water) = (0.0, 0.0, 0.0);
    for (i, r) in inst.reservoirs.iter().enumerate() {
        let pts: Vec<(f64, f64)> = r.curve.points().collect();
        let mut v = r.initial_storage;
        let mut sq = 0.0;
        for t in 0..inst.horizon {
            let head = (interp_oracle(&pts, v) - r.tailwater_elevation).max(0.0);
            power += r.power_coefficient * d.qp[i][t] * head * dt;
            let mut out = d.qp[i][t];
            for (j, a) in inst.areas.iter().enumerate() {
                if d.x[i][j][t] {
                    out += d.qs[i][j][t];
                    water += d.qs[i][j][t] * dt * (a.unit_benefit[t] - a.unit_cost[i][t] * a.distance[i]);
                }
            }
            v += r.inflow[t] * dt - out * dt;
            let dev = d.qp[i][t] / r.ecological_flow[t] - 1.0;
            sq += dev * dev;
        }
        eco += sq.sqrt();
    }
    (power, eco, water)
}

fn formula_oracles() -> Verdict {
    let mut rng = rng_from_seed(101);
    let tol = 1e-9;
    for n in 0..1000 {
        let (a, qp, h, dt) = (
            rng.random_range(1e-7..10.0),
            rng.random_range(0.0..2000.0),
            rng.random_range(0.0..300.0),
            rng.random_range(1.0..3e6),
        );
        let oracle = (a * h) * (qp * dt);
        let got = power_generation(a, qp, h, dt);
        ensure(rel_close(got, oracle, tol), || format!("power #{n}: {got} vs {oracle}"))?;

        let len = rng.random_range(1..=24);
        let qe: Vec<f64> = (0..len).map(|_| rng.random_range(1.0..900.0)).collect();
        let qpv: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1200.0)).collect();
        let oracle = qpv
            .iter()
            .zip(&qe)
            .map(|(p, e)| (p / e - 1.0).powi(2))
            .sum::<f64>()
            .sqrt();
        let got = aapfd(&qpv, &qe).map_err(|e| e.to_string())?;
        ensure(rel_close(got, oracle, tol) || (got - oracle).abs() < 1e-12, || {
            format!("AAPFD #{n}: {got} vs {oracle}")
        })?;

        let (b, c, l, qs) = (
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..0.01),
            rng.random_range(0.0..1500.0),
            rng.random_range(0.0..500.0),
        );
        let on = rng.random_bool(0.7);
        let oracle = if on { qs * dt * b - qs * dt * c * l } else { 0.0 };
        let got = supply_revenue(b, c, l, qs, on, dt);
        ensure(rel_close(got, oracle, tol) || (got - oracle).abs() < 1e-6, || {
            format!("revenue #{n}: {got} vs {oracle}")
        })?;

        let (v, qr, qsum) = (rng.random_range(0.0..4e10), rng.random_range(0.0..1000.0), rng.random_range(0.0..800.0));
        let oracle = v + qr * dt - qp * dt - qsum * dt;
        let got = water_balance_step(v, qr, qp, qsum, dt);
        ensure(rel_close(got, oracle, tol) || (got - oracle).abs() < 1e-3, || {
            format!("balance #{n}: {got} vs {oracle}")
        })?;
    }

    let inst = desk();
    let space = ActionSpace::default();
    let mut checked = 0;
    for k in 0..200 {
        let sched = if k % 2 == 0 {
            rollout(&inst, &space, &UniformPolicy { space }, &mut rng)
                .map_err(|e| e.to_string())?
                .schedule
        } else {
            random_feasible_schedule(&inst, &space, &mut rng, 100).ok_or("no feasible desk schedule")?
        };
        let got = objective_triple(&inst, &sched).map_err(|e| e.to_string())?;
        let (p, a, w) = objectives_oracle(&inst, &sched.decisions);
        ensure(
            rel_close(got.power, p, tol) && rel_close(got.aapfd, a, tol) && rel_close(got.water_revenue, w, tol),
            || format!("schedule #{k}: {got:?} vs ({p}, {a}, {w})"),
        )?;
        checked += 1;
    }
    Ok(format!("4000 formula evaluations and {checked} desk schedules agree within 1e-9 relative"))
}

// ---------------------------------------------------------------- 2

fn finite_differences(variant: EncoderVariant, probes: usize, seed: u64) -> Result<usize, String> {
    let inst = grid_instance(2, 2, 3);
    let space = ActionSpace::new(5, 4);
    let encoder = EncoderConfig {
        embedding_size: 16,
        num_heads: 4,
        variant,
        layers: 2,
    };
    let mut m = PolicyModel::new(encoder, space, seed).map_err(|e| e.to_string())?;
    let mut rng = rng_from_seed(seed);
    let eps: Vec<Episode> = {
        let runner = m.runner(&inst).map_err(|e| e.to_string())?;
        (0..3).map(|_| rollout(&inst, &space, &runner, &mut rng).unwrap()).collect()
    };
    let coefs = [0.7, -1.3, 0.4];
    let items: Vec<_> = eps.iter().zip(coefs).map(|(e, c)| (e.steps.as_slice(), c)).collect();
    let loss_of = |m: &PolicyModel| {
        let mut g = Graph::inference(m.params());
        let l = m.weighted_log_prob(&mut g, &inst, &items).unwrap();
        g.value(l).item()
    };
    let mut grads = Gradients::zeros_like(m.params());
    {
        let mut g = Graph::new(m.params());
        let l = m.weighted_log_prob(&mut g, &inst, &items).map_err(|e| e.to_string())?;
        g.backward(l, &mut grads).map_err(|e| e.to_string())?;
    }
    let ids: Vec<_> = m.params().ids().collect();
    let h = 1e-5;
    let mut nonzero = 0;
    for _ in 0..probes {
        let id = ids[rng.random_range(0..ids.len())];
        let k = rng.random_range(0..m.params().get(id).len());
        let orig = m.params().get(id).data()[k];
        m.params_mut().get_mut(id).data_mut()[k] = orig + h;
        let up = loss_of(&m);
        m.params_mut().get_mut(id).data_mut()[k] = orig - h;
        let down = loss_of(&m);
        m.params_mut().get_mut(id).data_mut()[k] = orig;
        let fd = (up - down) / (2.0 * h);
        let an = grads.get(id).data()[k];
        if an.abs() > 1e-6 {
            nonzero += 1;
        }
        ensure((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()) + 1e-6, || {
            format!("{variant:?} {}[{k}]: analytic {an}, finite difference {fd}", m.params().name(id))
        })?;
    }
    Ok(nonzero)
}

fn gradient_correctness() -> Verdict {
    let mut notes = Vec::new();
    for variant in [EncoderVariant::TwoStage, EncoderVariant::Direct] {
        let nonzero = finite_differences(variant, 96, 21)?;
        notes.push(format!("{}: 96 probes, {nonzero} with nonzero gradient", variant.as_str()));
    }
    Ok(notes.join("; "))
}

// ---------------------------------------------------------------- 3

fn eq_reward_oracle(o: &ObjectiveTriple, w: [f64; 3], b: &ObjectiveBounds) -> f64 {
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    let p = (o.power - b.power.min) / (b.power.max - b.power.min);
    let inv = 1.0 / o.aapfd.max(AAPFD_FLOOR);
    let a = (inv - 1.0 / b.aapfd.max) / (1.0 / b.aapfd.min - 1.0 / b.aapfd.max);
    let q = (o.water_revenue - b.water.min) / (b.water.max - b.water.min);
    w[0] * clamp(p) + w[1] * clamp(a) + w[2] * clamp(q)
}

fn decomposition() -> Verdict {
    let grid = weight_grid();
    ensure(grid.len() == 171, || format!("{} weight vectors", grid.len()))?;
    for w in &grid {
        let s: f64 = w.components().iter().sum();
        ensure((s - 1.0).abs() <= 1e-12, || format!("{w} sums to {s}"))?;
    }
    let mut rng = rng_from_seed(303);
    let range = |min: f64, max: f64| ObjectiveRange {
        min,
        max,
        source: BoundSource::UserSupplied,
    };
    let mut worst: f64 = 0.0;
    for n in 0..100 {
        let p0 = rng.random_range(-1e6..1e6);
        let a0 = rng.random_range(0.01..5.0);
        let w0 = rng.random_range(-1e6..1e6);
        let b = ObjectiveBounds::new(
            range(p0, p0 + rng.random_range(1.0..1e6)),
            range(a0, a0 + rng.random_range(0.01..5.0)),
            range(w0, w0 + rng.random_range(1.0..1e6)),
            None,
        )
        .map_err(|e| e.to_string())?;
        let o = ObjectiveTriple::new(
            rng.random_range(-2e6..3e6),
            rng.random_range(0.0..12.0),
            rng.random_range(-2e6..3e6),
        );
        let w = if n % 2 == 0 {
            grid[rng.random_range(0..grid.len())]
        } else {
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            let (x, y) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
            WeightVector::new(x, y, (1.0 - x - y).max(0.0)).map_err(|e| e.to_string())?
        };
        let got = scalarize(&o, &w, &b);
        let want = eq_reward_oracle(&o, w.components(), &b);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-12, || format!("tuple #{n}: {got} vs {want}"))?;
    }
    Ok(format!("171 vectors; 100 scalarizations, worst deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- 4

fn expected_steps(inst: &SystemInstance, flags: &[usize]) -> Vec<StepKind> {
    let mut out = Vec::new();
    let mut next_flag = flags.iter();
    for t in 0..inst.horizon {
        for i in 0..inst.num_reservoirs() {
            out.push(StepKind::Power { reservoir: i, period: t });
            for j in 0..inst.num_areas() {
                out.push(StepKind::SupplyFlag {
                    reservoir: i,
                    area: j,
                    period: t,
                });
                if *next_flag.next().unwrap_or(&0) == 1 {
                    out.push(StepKind::SupplyAmount {
                        reservoir: i,
                        area: j,
                        period: t,
                    });
                }
            }
        }
    }
    out
}

fn decision_loop_fidelity() -> Verdict {
    let mut rng = rng_from_seed(404);
    let mut episodes = 0;
    for ni in 1..=4 {
        for nj in 1..=4 {
            for nt in 1..=4 {
                let inst = grid_instance(ni, nj, nt);
                let space = ActionSpace::new(4, 4);
                let dt = inst.period_seconds;
                for _ in 0..5 {
                    let ep = rollout(&inst, &space, &UniformPolicy { space }, &mut rng).map_err(|e| e.to_string())?;
                    let flags: Vec<usize> = ep
                        .steps
                        .iter()
                        .filter(|s| matches!(s.kind, StepKind::SupplyFlag { .. }))
                        .map(|s| s.choice)
                        .collect();
                    let got: Vec<StepKind> = ep.steps.iter().map(|s| s.kind).collect();
                    ensure(got == expected_steps(&inst, &flags), || {
                        format!("I={ni} J={nj} T={nt}: step sequence differs from the loop nest")
                    })?;
                    let d = &ep.schedule.decisions;
                    for s in &ep.steps {
                        let (i, t) = (s.kind.reservoir(), s.kind.period());
                        let r = &inst.reservoirs[i];
                        let mut v = r.initial_storage;
                        for u in 0..t {
                            v += (r.inflow[u] - d.qp[i][u] - d.supply_sum(i, u)) * dt;
                        }
                        let expected_delivered = match s.kind {
                            StepKind::Power { .. } => 0.0,
                            StepKind::SupplyFlag { area: j, .. } | StepKind::SupplyAmount { area: j, .. } => {
                                v += (r.inflow[t] - d.qp[i][t]) * dt;
                                for jj in 0..j {
                                    v -= d.qs[i][jj][t] * dt;
                                }
                                (0..i).map(|ii| d.qs[ii][j][t] * dt).sum()
                            }
                        };
                        let pts: Vec<(f64, f64)> = r.curve.points().collect();
                        let elev = interp_oracle(&pts, v);
                        ensure((s.observation.delivered - expected_delivered).abs() < 1e-9, || {
                            format!("{}: delivered {} vs {expected_delivered}", s.kind, s.observation.delivered)
                        })?;
                        ensure((s.observation.elevation - elev).abs() < 1e-9, || {
                            format!("{}: elevation {} vs {elev}", s.kind, s.observation.elevation)
                        })?;
                    }
                    episodes += 1;
                }
            }
        }
    }
    Ok(format!("{episodes} episodes over all 64 shapes"))
}

// ---------------------------------------------------------------- 5

fn feasibility_gating() -> Verdict {
    let inst = desk();
    let space = ActionSpace::default();
    let bounds = desk_bounds(&inst, &space);
    let w = WeightVector::new(0.5, 0.25, 0.25).unwrap();
    let mut rng = rng_from_seed(505);
    let mut feasible = 0;
    for n in 0..10_000 {
        let ep = rollout(&inst, &space, &UniformPolicy { space }, &mut rng).map_err(|e| e.to_string())?;
        let r = episode_reward(&inst, &ep.schedule, &w, &bounds, RewardMode::Hard).map_err(|e| e.to_string())?;
        let ok = check_constraints(&inst, &ep.schedule).is_feasible();
        feasible += ok as usize;
        ensure((r > 0.0) == ok, || format!("rollout #{n}: reward {r}, feasible {ok}"))?;
    }
    let mut positive = 0;
    for n in 0..500 {
        let s = random_feasible_schedule(&inst, &space, &mut rng, 100).ok_or("no feasible desk schedule")?;
        let r = episode_reward(&inst, &s, &w, &bounds, RewardMode::Hard).map_err(|e| e.to_string())?;
        ensure(r > 0.0, || format!("feasible schedule #{n} earned {r}"))?;
        positive += 1;
    }
    Ok(format!(
        "10000 uniform rollouts ({feasible} feasible) and {positive} feasible schedules all gate correctly"
    ))
}

// ---------------------------------------------------------------- 6

fn enumerate_tiny(inst: &SystemInstance, space: &ActionSpace) -> Vec<Decisions> {
    // Per period: qp bin, then supply off or one of the amount bins.
    let per_period: Vec<(usize, Option<usize>)> = (0..space.qp_bins)
        .flat_map(|p| std::iter::once(None).chain((0..space.qs_bins).map(Some)).map(move |s| (p, s)))
        .collect();
    let mut out = Vec::new();
    for a in &per_period {
        for b in &per_period {
            let mut d = Decisions::zeros_for(inst);
            for (t, (p, s)) in [a, b].into_iter().enumerate() {
                d.qp[0][t] = space.qp_value(inst, 0, *p);
                if let Some(k) = s {
                    d.x[0][0][t] = true;
                    d.qs[0][0][t] = space.qs_value(inst, 0, t, *k);
                }
            }
            out.push(d);
        }
    }
    out
}

fn tiny_optimality() -> Verdict {
    let inst = tiny_instance();
    let space = ActionSpace::new(5, 5);
    let schedules: Vec<_> = enumerate_tiny(&inst, &space)
        .into_iter()
        .map(|d| derive_trajectory(&inst, d).unwrap())
        .collect();
    let feasible: Vec<ObjectiveTriple> = schedules
        .iter()
        .filter(|s| check_constraints(&inst, s).is_feasible())
        .map(|s| objective_triple(&inst, s).unwrap())
        .collect();
    let bounds = ObjectiveBounds::from_observations(&feasible, BoundSource::UserSupplied, None)
        .map_err(|e| e.to_string())?;
    let w = WeightVector::new(0.5, 0.25, 0.25).unwrap();
    let optimum = schedules
        .iter()
        .map(|s| episode_reward(&inst, s, &w, &bounds, RewardMode::Hard).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let cfg = TrainConfig {
        batch_size: 32,
        epochs: 2,
        iterations_per_epoch: 100,
        eval_batch: 32,
        seed: 0,
        reward: RewardMode::Hard,
        ..TrainConfig::default()
    };
    let out = train_subproblem(&inst, &space, EncoderConfig::default(), w, &bounds, &cfg).map_err(|e| e.to_string())?;
    let (ep, _, _) = greedy_decode(&inst, &space, &out.model).map_err(|e| e.to_string())?;
    let got = episode_reward(&inst, &ep.schedule, &w, &bounds, RewardMode::Hard).map_err(|e| e.to_string())?;
    let detail = format!(
        "{} schedules, {} feasible, optimum {optimum:.4}, greedy {got:.4} ({:.1}%)",
        schedules.len(),
        feasible.len(),
        100.0 * got / optimum
    );
    ensure(got >= 0.9 * optimum, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 7

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn learning_signal() -> Verdict {
    let inst = desk();
    let space = ActionSpace::default();
    let bounds = desk_bounds(&inst, &space);
    let w = WeightVector::new(0.5, 0.25, 0.25).unwrap();
    let hard = |e: &Episode| episode_reward(&inst, &e.schedule, &w, &bounds, RewardMode::Hard).unwrap();

    let mut rng = rng_from_seed(707);
    let random: Vec<f64> = (0..100)
        .map(|_| {
            let s = random_feasible_schedule(&inst, &space, &mut rng, 100).expect("feasible desk schedule");
            episode_reward(&inst, &s, &w, &bounds, RewardMode::Hard).unwrap()
        })
        .collect();
    let random_mean = random.iter().sum::<f64>() / random.len() as f64;

    let mut finals = [Vec::new(), Vec::new()];
    let mut first_p = None;
    for (slot, variant) in [EncoderVariant::TwoStage, EncoderVariant::Direct].into_iter().enumerate() {
        for seed in 0..5u64 {
            let encoder = EncoderConfig {
                embedding_size: 32,
                num_heads: 4,
                variant,
                layers: 1,
            };
            let cfg = TrainConfig {
                batch_size: 32,
                epochs: 3,
                iterations_per_epoch: 100,
                lr_switch_epoch: 2,
                eval_batch: 32,
                seed,
                reward: RewardMode::SoftPenalty { lambda: 1.0 },
                ..TrainConfig::default()
            };
            let out = train_subproblem(&inst, &space, encoder, w, &bounds, &cfg).map_err(|e| e.to_string())?;
            let runner = out.model.runner(&inst).map_err(|e| e.to_string())?;
            let greedy = greedy_rollout(&inst, &space, &runner).map_err(|e| e.to_string())?;
            let r = hard(&greedy);
            if slot == 0 && seed == 0 {
                let trained = vec![r; random.len()];
                let t = paired_t_test(&trained, &random, 0.05).map_err(|e| e.to_string())?;
                first_p = Some((r, t.p));
            }
            finals[slot].push(r);
        }
    }
    let (greedy0, p) = first_p.expect("two-stage seed 0 ran");
    let (two, direct) = (median(finals[0].clone()), median(finals[1].clone()));
    let detail = format!(
        "two-stage greedy {greedy0:.4} vs random feasible mean {random_mean:.4}, one-sided p = {p:.2e}; \
         median final reward two-stage {two:.4} vs direct {direct:.4} (two-stage {:?}, direct {:?})",
        finals[0].iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
        finals[1].iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
    );
    ensure(p < 0.05 && two >= direct, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 8

fn baseline_swap() -> Verdict {
    const SLEEP_A: [f64; 10] = [1.9, 0.8, 1.1, 0.1, -0.1, 4.4, 5.5, 1.6, 4.6, 3.4];
    const SLEEP_B: [f64; 10] = [0.7, -1.6, -0.2, -1.2, -0.1, 3.4, 3.7, 0.8, 0.0, 2.0];
    let r = paired_t_test(&SLEEP_A, &SLEEP_B, 0.05).map_err(|e| e.to_string())?;
    ensure((r.t - 4.0621).abs() < 1e-3 && (r.p - 0.00141).abs() < 1e-3, || {
        format!("sleep data gave t = {}, p = {}", r.t, r.p)
    })?;

    let inst = tiny_instance();
    let space = ActionSpace::new(5, 5);
    let range = |min, max| ObjectiveRange {
        min,
        max,
        source: BoundSource::UserSupplied,
    };
    let bounds = ObjectiveBounds::new(range(0.0, 100.0), range(0.01, 2.0), range(0.0, 4000.0), None).unwrap();
    let reward = ScalarizedReward {
        weights: WeightVector::new(0.5, 0.25, 0.25).unwrap(),
        bounds,
        mode: RewardMode::Hard,
    };
    let encoder = EncoderConfig {
        embedding_size: 8,
        num_heads: 2,
        ..EncoderConfig::default()
    };
    let cfg = |epochs| TrainConfig {
        batch_size: 16,
        epochs,
        iterations_per_epoch: 30,
        lr_high: 5e-2,
        lr_low: 1e-2,
        lr_switch_epoch: 2,
        eval_batch: 16,
        seed: 4,
        ..TrainConfig::default()
    };
    let full = train_policy(&inst, &space, encoder, &reward, &cfg(4)).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for &s in full.swaps.iter().filter(|&&s| s + 1 < 4) {
        // Training is deterministic, so the prefix run ends with the learner
        // that the full run copied into its baseline at epoch `s`.
        let prefix = train_policy(&inst, &space, encoder, &reward, &cfg(s + 1)).map_err(|e| e.to_string())?;
        let runner = prefix.model.runner(&inst).map_err(|e| e.to_string())?;
        let learner = episode_reward(
            &inst,
            &greedy_rollout(&inst, &space, &runner).map_err(|e| e.to_string())?.schedule,
            &reward.weights,
            &bounds,
            RewardMode::Hard,
        )
        .map_err(|e| e.to_string())?;
        let baseline = full.curve[(s + 1) * 30].baseline_reward;
        ensure(learner == baseline, || format!("swap after epoch {s}: learner {learner}, baseline {baseline}"))?;
        checked += 1;
    }
    ensure(checked > 0, || format!("no mid-run swap to check (swaps {:?})", full.swaps))?;
    Ok(format!("t = {:.4}, p = {:.5}; {checked} swap(s) checked", r.t, r.p))
}

// ---------------------------------------------------------------- 9

fn no_dominated_pair(points: &[ObjectiveTriple]) -> bool {
    let dominates = |a: &ObjectiveTriple, b: &ObjectiveTriple| {
        a.power >= b.power
            && a.aapfd <= b.aapfd
            && a.water_revenue >= b.water_revenue
            && (a.power > b.power || a.aapfd < b.aapfd || a.water_revenue > b.water_revenue)
    };
    points.iter().all(|a| points.iter().all(|b| !dominates(a, b)))
}

fn check_front(inst: &SystemInstance, name: &str, sols: &[Solution]) -> Result<(), String> {
    ensure(!sols.is_empty(), || format!("{name} returned nothing"))?;
    for (k, s) in sols.iter().enumerate() {
        let sched = derive_trajectory(inst, s.decisions.clone()).map_err(|e| e.to_string())?;
        let report = check_constraints(inst, &sched);
        ensure(report.is_feasible(), || format!("{name} solution {k} is infeasible"))?;
        ensure(objective_triple(inst, &sched).unwrap() == s.objectives, || {
            format!("{name} solution {k} reports stale objectives")
        })?;
    }
    let objs: Vec<ObjectiveTriple> = sols.iter().map(|s| s.objectives).collect();
    ensure(no_dominated_pair(&objs), || format!("{name} front has a dominated pair"))
}

fn evolutionary_baselines() -> Verdict {
    let inst = desk();
    let cfg = MoeaConfig::default();
    let bounds = desk_bounds(&inst, &ActionSpace::default());
    let a = nsga3_run(&inst, &cfg, &[], &mut rng_from_seed(9)).map_err(|e| e.to_string())?;
    check_front(&inst, "NSGA-III", &a)?;
    let b = nsga3_run(&inst, &cfg, &[], &mut rng_from_seed(9)).map_err(|e| e.to_string())?;
    ensure(a == b, || "NSGA-III differs between runs with one seed".into())?;
    let c = moead_run(&inst, &cfg, &bounds, &[], &mut rng_from_seed(9)).map_err(|e| e.to_string())?;
    check_front(&inst, "MOEA/D", &c)?;
    let d = moead_run(&inst, &cfg, &bounds, &[], &mut rng_from_seed(9)).map_err(|e| e.to_string())?;
    ensure(c == d, || "MOEA/D differs between runs with one seed".into())?;
    Ok(format!("NSGA-III {} and MOEA/D {} feasible nondominated solutions, reproducible", a.len(), c.len()))
}

// ---------------------------------------------------------------- 10

fn random_points(rng: &mut SimRng, n: usize, ties: bool) -> Vec<ObjectiveTriple> {
    (0..n)
        .map(|_| {
            if ties {
                ObjectiveTriple::new(
                    rng.random_range(0..5) as f64,
                    rng.random_range(0..5) as f64,
                    rng.random_range(0..5) as f64,
                )
            } else {
                ObjectiveTriple::new(rng.random(), rng.random(), rng.random())
            }
        })
        .collect()
}

fn brute_force_front(points: &[ObjectiveTriple]) -> Vec<ObjectiveTriple> {
    points
        .iter()
        .filter(|p| {
            !points.iter().any(|q| {
                let ge = q.power >= p.power && q.aapfd <= p.aapfd && q.water_revenue >= p.water_revenue;
                ge && (q.power != p.power || q.aapfd != p.aapfd || q.water_revenue != p.water_revenue)
            })
        })
        .copied()
        .collect()
}

fn front_tooling() -> Verdict {
    let mut rng = rng_from_seed(1010);
    for n in 0..1000 {
        let size = rng.random_range(0..80);
        let pts = random_points(&mut rng, size, n % 2 == 0);
        ensure(dominance_filter(&pts) == brute_force_front(&pts), || format!("set #{n} filters differently"))?;
    }
    let reference = ObjectiveTriple::new(0.0, 1.0, 0.0);
    let mut worst: f64 = 0.0;
    for n in 0..20 {
        let size = rng.random_range(1..30);
        let front = dominance_filter(&random_points(&mut rng, size, false));
        let exact = hypervolume_3d(&front, &reference).map_err(|e| e.to_string())?;
        let samples = 1_000_000;
        let mut hits = 0usize;
        for _ in 0..samples {
            let (x, y, z): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            if front.iter().any(|p| x <= p.power && y >= p.aapfd && z <= p.water_revenue) {
                hits += 1;
            }
        }
        let mc = hits as f64 / samples as f64;
        let rel = (exact - mc).abs() / exact;
        worst = worst.max(rel);
        ensure(rel <= 0.01, || format!("front #{n}: exact {exact}, Monte Carlo {mc}"))?;
    }
    Ok(format!("1000 filter sets agree; 20 hypervolumes within {:.3}% of Monte Carlo", 100.0 * worst))
}

// ---------------------------------------------------------------- 11

fn resopt(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_resopt"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "resopt {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn same_bytes(a: &Path, b: &Path) -> Result<(), String> {
    let x = std::fs::read(a).map_err(|e| format!("{}: {e}", a.display()))?;
    let y = std::fs::read(b).map_err(|e| format!("{}: {e}", b.display()))?;
    ensure(x == y, || format!("{} and {} differ", a.display(), b.display()))
}

fn end_to_end() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let config = root.join("run.toml");
    let dataset = desk_dir().canonicalize().map_err(|e| e.to_string())?;
    let text = format!(
        "dataset = {:?}\nseed = 5\n\n[model]\nembedding_size = 16\nnum_heads = 4\n\n\
         [train]\nbatch_size = 8\nepochs = 2\niterations_per_epoch = 8\neval_batch = 8\nseed = 3\n\
         reward = {{ mode = \"soft_penalty\", lambda = 1.0 }}\n\n[bounds]\nbudget = 300\n",
        dataset.display().to_string()
    );
    std::fs::write(&config, text).map_err(|e| e.to_string())?;
    let s = |p: &Path| p.to_str().unwrap().to_string();

    let first = root.join("first");
    resopt(&["--config", &s(&config), "train", "--weights", "0.5,0.25,0.25", "-o", &s(&first)])?;
    let schedule = root.join("eval/schedule.csv");
    let objectives = root.join("eval/objectives.csv");
    resopt(&[
        "--config",
        &s(&config),
        "evaluate",
        &s(&first.join("model.ckpt")),
        "-o",
        &s(&schedule),
        "--objectives",
        &s(&objectives),
    ])?;
    let inst = load_dataset(&dataset).map_err(|e| e.to_string())?;
    let decisions = read_schedule(&schedule, &inst).map_err(|e| e.to_string())?;
    let sched = derive_trajectory(&inst, decisions).map_err(|e| e.to_string())?;
    let again = objective_triple(&inst, &sched).map_err(|e| e.to_string())?;
    let recorded = read_objectives(&objectives).map_err(|e| e.to_string())?;
    ensure(
        rel_close(again.power, recorded.power, 1e-9)
            && (rel_close(again.aapfd, recorded.aapfd, 1e-9))
            && (rel_close(again.water_revenue, recorded.water_revenue, 1e-9) || again.water_revenue == recorded.water_revenue),
        || format!("re-ingested {again:?} vs recorded {recorded:?}"),
    )?;
    same_bytes(&objectives, &first.join("objectives.csv"))?;

    // Repeat the training run from nothing but its snapshot.
    let snap = RunSnapshot::read(&first.join("model.ckpt.run.toml")).map_err(|e| e.to_string())?;
    let replay_config = root.join("replay.toml");
    std::fs::write(&replay_config, snap.config.to_toml()).map_err(|e| e.to_string())?;
    let second = root.join("second");
    let mut args = vec!["--config".to_string(), s(&replay_config)];
    let mut it = snap.args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--config" => {
                it.next();
            }
            "-o" | "--out" => {
                it.next();
                args.push(a.clone());
                args.push(s(&second));
            }
            _ => args.push(a.clone()),
        }
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    resopt(&args)?;
    for f in ["model.ckpt", "curve.csv", "schedule.csv", "objectives.csv", "bounds.toml"] {
        same_bytes(&first.join(f), &second.join(f))?;
    }
    Ok(format!(
        "objectives reproduced from the schedule CSV; snapshot replay of `{}` is byte-identical",
        snap.args.join(" ").replace(&s(&first), "<out>").replace(&s(&config), "<config>")
    ))
}

// ----------------------------------------------------------------

fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, name: "formula oracles", limit: secs(5), run: formula_oracles },
        Criterion { id: 2, name: "gradient correctness", limit: secs(60), run: gradient_correctness },
        Criterion { id: 3, name: "decomposition", limit: secs(5), run: decomposition },
        Criterion { id: 4, name: "decision loop fidelity", limit: secs(30), run: decision_loop_fidelity },
        Criterion { id: 5, name: "feasibility gating", limit: secs(120), run: feasibility_gating },
        Criterion { id: 6, name: "tiny-instance optimality", limit: secs(600), run: tiny_optimality },
        Criterion { id: 7, name: "learning signal", limit: secs(3600), run: learning_signal },
        Criterion { id: 8, name: "baseline swap mechanics", limit: secs(5), run: baseline_swap },
        Criterion { id: 9, name: "evolutionary baselines", limit: secs(900), run: evolutionary_baselines },
        Criterion { id: 10, name: "front tooling", limit: secs(120), run: front_tooling },
        Criterion { id: 11, name: "end-to-end round trip", limit: secs(60), run: end_to_end },
    ]
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let listing = std::env::args().any(|a| a == "--list");
    if listing {
        for c in criteria() {
            println!("criterion_{}: test", c.id);
        }
        return;
    }
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    for c in criteria() {
        if !selected.is_empty() && !selected.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let verdict = match verdict {
            Ok(d) if took > c.limit => Err(format!("{d}; exceeded the {}s limit", c.limit.as_secs())),
            v => v,
        };
        match &verdict {
            Ok(d) => println!("criterion {:>2} PASS ({:.1}s) {}: {d}", c.id, took.as_secs_f64(), c.name),
            Err(d) => {
                println!("criterion {:>2} FAIL ({:.1}s) {}: {d}", c.id, took.as_secs_f64(), c.name);
                failed.push(c.id);
            }
        }
    }
    if !failed.is_empty() {
        println!("acceptance: {} criteria failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
