use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use resopt_core::decomposition::{estimate_bounds, weight_grid, BoundMethod, ObjectiveBounds, WeightVector};
use resopt_core::env::{write_trace, ActionSpace};
use resopt_core::hydro::{check_constraints, objective_triple, SystemInstance};
use resopt_core::io::{
    load_dataset, read_bounds, read_curve, read_front, write_atomic, write_bounds, write_curve, write_front,
    write_objectives, write_schedule, BoundsMethodName, FrontRow, IoError, ObjectivesRecord, RunConfig, RunSnapshot,
};
use resopt_core::moea::{moead_run, nsga3_run, Solution};
use resopt_core::pareto::{improvement_report, nondominated_indices};
use resopt_core::policy::PolicyModel;
use resopt_core::rng::{derive_seed, rng_from_seed};
use resopt_core::tensor::{read_checkpoint, write_checkpoint};
use resopt_core::trainer::{greedy_decode, train_subproblem, train_sweep, TrainError, TrainOutcome};
use resopt_core::ObjectiveTriple;

use crate::{Algo, BoundsArg, Cli, Command, Failure};

type Outcome = Result<(), Failure>;

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Classifies file errors: unreadable or malformed inputs are data errors,
/// failed writes are runtime errors.
fn io_failure(e: IoError) -> Failure {
    if e.is_data_error() {
        data(e)
    } else {
        runtime(e)
    }
}

struct RunContext {
    config: RunConfig,
    args: Vec<String>,
}

impl RunContext {
    fn new(cli: &Cli, dataset: Option<&Path>) -> Result<Self, Failure> {
        let mut config = match &cli.config {
            Some(path) => RunConfig::load(path).map_err(io_failure)?,
            None => {
                let ds = dataset
                    .or(cli.dataset.as_deref())
                    .ok_or_else(|| data(anyhow!("no dataset given: pass --dataset or --config")))?;
                RunConfig::with_dataset(ds.to_path_buf())
            }
        };
        if let Some(ds) = dataset.or(cli.dataset.as_deref()) {
            config.dataset = ds.to_path_buf();
        }
        if let Some(seed) = cli.seed {
            config.seed = seed;
            config.train.seed = seed;
        }
        config.validate().map_err(|m| data(anyhow!("invalid configuration: {m}")))?;
        config.dataset = std::fs::canonicalize(&config.dataset)
            .with_context(|| format!("dataset directory {}", config.dataset.display()))
            .map_err(data)?;
        Ok(Self {
            config,
            args: std::env::args().skip(1).collect(),
        })
    }

    fn instance(&self) -> Result<SystemInstance, Failure> {
        load_dataset(&self.config.dataset).map_err(io_failure)
    }

    fn space(&self) -> ActionSpace {
        self.config.action_space
    }

    fn snapshot(&self, command: &str, output: &Path) -> Outcome {
        RunSnapshot::new(command, self.args.clone(), self.config.clone())
            .write_beside(output)
            .map(|_| ())
            .map_err(io_failure)
    }

    /// Bounds from `path`, or sampled with the configured budget.
    fn bounds(&self, inst: &SystemInstance, path: Option<&Path>) -> Result<ObjectiveBounds, Failure> {
        if let Some(p) = path {
            return read_bounds(p).map_err(io_failure);
        }
        let mut rng = rng_from_seed(self.config.seed);
        let method = BoundMethod::Sample {
            budget: self.config.bounds.budget,
        };
        estimate_bounds(inst, &self.space(), &method, self.config.seed, &mut rng).map_err(runtime)
    }
}

pub fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Validate { dataset } => validate(dataset),
        Command::Bounds {
            dataset,
            method,
            budget,
            out,
        } => {
            let ctx = RunContext::new(&cli, dataset.as_deref())?;
            bounds(ctx, *method, *budget, out)
        }
        Command::Train { weights, bounds, out } => train(RunContext::new(&cli, None)?, weights, bounds.as_deref(), out),
        Command::Sweep { bounds, limit, out } => sweep(RunContext::new(&cli, None)?, bounds.as_deref(), *limit, out),
        Command::Moea { algo, bounds, out } => moea(RunContext::new(&cli, None)?, *algo, bounds.as_deref(), out),
        Command::Pareto {
            inputs,
            reference,
            out,
        } => pareto(inputs, reference, out),
        Command::Evaluate {
            checkpoint,
            out,
            objectives,
            trace,
        } => evaluate(
            RunContext::new(&cli, None)?,
            checkpoint,
            out,
            objectives.as_deref(),
            trace.as_deref(),
        ),
        Command::ExportPlots { curves, fronts, out } => export_plots(curves, fronts, out),
    }
}

fn validate(dataset: &Path) -> Outcome {
    let inst = load_dataset(dataset).map_err(io_failure)?;
    println!("dataset {} is valid", dataset.display());
    println!(
        "I={} reservoirs, J={} areas, T={} periods, period length {} s",
        inst.num_reservoirs(),
        inst.num_areas(),
        inst.horizon,
        inst.period_seconds
    );
    for r in &inst.reservoirs {
        let (lo, hi) = r.curve.storage_range();
        println!(
            "  reservoir {}: initial storage {:e} m3, curve storage [{:e}, {:e}], turbine flow [{}, {}] m3/s",
            r.id, r.initial_storage, lo, hi, r.turbine_flow_range.0, r.turbine_flow_range.1
        );
    }
    for a in &inst.areas {
        let total: f64 = a.supply_max.iter().sum();
        println!("  area {}: annual supply cap {:e} m3", a.id, total);
    }
    Ok(())
}

fn bounds(mut ctx: RunContext, method: Option<BoundsArg>, budget: Option<usize>, out: &Path) -> Outcome {
    if let Some(m) = method {
        ctx.config.bounds.method = match m {
            BoundsArg::Sample => BoundsMethodName::Sample,
            BoundsArg::Train => BoundsMethodName::Train,
        };
    }
    if let Some(b) = budget {
        ctx.config.bounds.budget = b;
    }
    let inst = ctx.instance()?;
    let cfg = &ctx.config;
    let method = match cfg.bounds.method {
        BoundsMethodName::Sample => BoundMethod::Sample {
            budget: cfg.bounds.budget,
        },
        BoundsMethodName::Train => BoundMethod::Train {
            budget: cfg.bounds.budget,
            encoder: cfg.model,
            train: cfg.train.clone(),
        },
    };
    let mut rng = rng_from_seed(cfg.seed);
    let b = estimate_bounds(&inst, &ctx.space(), &method, cfg.seed, &mut rng).map_err(runtime)?;
    write_bounds(out, &b).map_err(io_failure)?;
    ctx.snapshot("bounds", out)?;
    println!("power  [{:.6e}, {:.6e}]", b.power.min, b.power.max);
    println!("aapfd  [{:.6e}, {:.6e}]", b.aapfd.min, b.aapfd.max);
    println!("water  [{:.6e}, {:.6e}]", b.water.min, b.water.max);
    println!("wrote {}", out.display());
    Ok(())
}

fn save_model(path: &Path, model: &PolicyModel) -> Outcome {
    let ckpt = model.to_checkpoint();
    write_atomic(path, |w| write_checkpoint(w, &ckpt)).map_err(io_failure)
}

fn train(ctx: RunContext, weights: &str, bounds_path: Option<&Path>, out: &Path) -> Outcome {
    let w = WeightVector::parse(weights).map_err(data)?;
    let inst = ctx.instance()?;
    let space = ctx.space();
    let b = ctx.bounds(&inst, bounds_path)?;
    let cfg = &ctx.config;
    let outcome = match train_subproblem(&inst, &space, cfg.model, w, &b, &cfg.train) {
        Ok(o) => o,
        Err(TrainError::Diverged {
            iteration,
            detail,
            last_good,
        }) => {
            let path = out.join("last_good.ckpt");
            save_model(&path, &last_good)?;
            return Err(runtime(anyhow!(
                "training diverged at iteration {iteration}: {detail}; last finite parameters saved to {}",
                path.display()
            )));
        }
        Err(e) => return Err(runtime(e)),
    };
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    let model_path = out.join("model.ckpt");
    save_model(&model_path, &outcome.model)?;
    write_curve(&out.join("curve.csv"), &outcome.curve).map_err(io_failure)?;
    write_bounds(&out.join("bounds.toml"), &b).map_err(io_failure)?;
    let (ep, obj, diagnostic) = greedy_decode(&inst, &space, &outcome.model).map_err(runtime)?;
    write_schedule(&out.join("schedule.csv"), &inst, &ep.schedule).map_err(io_failure)?;
    let record = ObjectivesRecord {
        power: obj.power,
        aapfd: obj.aapfd,
        water_revenue: obj.water_revenue,
        feasible: diagnostic.is_none(),
    };
    write_objectives(&out.join("objectives.csv"), &record).map_err(io_failure)?;
    ctx.snapshot("train", &model_path)?;
    report_training(&outcome);
    println!(
        "greedy schedule: power {:.6e}, AAPFD {:.6}, water revenue {:.6e}, {}",
        obj.power,
        obj.aapfd,
        obj.water_revenue,
        diagnostic.as_deref().unwrap_or("feasible")
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn report_training(outcome: &TrainOutcome) {
    for (epoch, t) in outcome.ttests.iter().enumerate() {
        let swapped = if outcome.swaps.contains(&epoch) { ", baseline replaced" } else { "" };
        println!("epoch {epoch}: t = {:.4}, p = {:.4}{swapped}", t.t, t.p);
    }
    if let Some(last) = outcome.curve.last() {
        println!("final mean reward {:.6}", last.mean_reward);
    }
}

/// `n` indices spread evenly over `0..len`, always including both ends.
fn spread(len: usize, n: usize) -> Vec<usize> {
    if n >= len {
        return (0..len).collect();
    }
    if n == 1 {
        return vec![0];
    }
    (0..n).map(|k| k * (len - 1) / (n - 1)).collect()
}

fn weight_label(w: &WeightVector) -> String {
    let [a, b, c] = w.components();
    format!("{a};{b};{c}")
}

fn sweep(ctx: RunContext, bounds_path: Option<&Path>, limit: Option<usize>, out: &Path) -> Outcome {
    let inst = ctx.instance()?;
    let space = ctx.space();
    let b = ctx.bounds(&inst, bounds_path)?;
    let cfg = &ctx.config;
    let grid = weight_grid();
    let picked = spread(grid.len(), limit.unwrap_or(grid.len()));
    let weights: Vec<WeightVector> = picked.iter().map(|&k| grid[k]).collect();
    let write_errors = Mutex::new(Vec::new());
    let results = train_sweep(&inst, &space, cfg.model, &b, &cfg.train, &weights, |k, _, outcome| {
        let name = format!("w{:03}", picked[k]);
        let res = save_model(&out.join("checkpoints").join(format!("{name}.ckpt")), &outcome.model)
            .and_then(|_| write_curve(&out.join("curves").join(format!("{name}.csv")), &outcome.curve).map_err(io_failure));
        if let Err(e) = res {
            let e = match e {
                Failure::Data(e) | Failure::Runtime(e) => e,
            };
            write_errors.lock().expect("no panics while holding the lock").push(format!("{e:#}"));
        }
    });
    if let Some(e) = write_errors.into_inner().expect("lock released").first() {
        return Err(runtime(anyhow!("{e}")));
    }

    let mut rows = Vec::new();
    let mut summary = String::from("index,weights,seed,feasible,baseline_swaps,diagnostic\n");
    for r in &results {
        let label = weight_label(&r.weights);
        summary.push_str(&format!(
            "{},{},{},{},{},\"{}\"\n",
            picked[r.index],
            label,
            r.seed,
            r.feasible,
            r.baseline_swaps,
            r.diagnostic.as_deref().unwrap_or("").replace('"', "'")
        ));
        if let Some(obj) = r.objectives {
            rows.push(FrontRow {
                method: "drl".into(),
                weight_or_rank: label,
                power: obj.power,
                aapfd: obj.aapfd,
                water_revenue: obj.water_revenue,
                feasible: r.feasible,
                seed: Some(r.seed),
            });
        }
    }
    let front_path = out.join("front.csv");
    write_front(&front_path, &rows).map_err(io_failure)?;
    write_atomic(&out.join("subproblems.csv"), |w| w.write_all(summary.as_bytes())).map_err(io_failure)?;
    write_bounds(&out.join("bounds.toml"), &b).map_err(io_failure)?;
    ctx.snapshot("sweep", &front_path)?;
    println!(
        "{} of {} subproblems decoded to feasible schedules",
        rows.len(),
        results.len()
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn moea(ctx: RunContext, algo: Algo, bounds_path: Option<&Path>, out: &Path) -> Outcome {
    let inst = ctx.instance()?;
    let cfg = &ctx.config;
    let (name, solutions): (&str, Vec<Solution>) = match algo {
        Algo::Nsga3 => {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, 11));
            ("nsga3", nsga3_run(&inst, &cfg.moea, &[], &mut rng).map_err(runtime)?)
        }
        Algo::Moead => {
            let b = ctx.bounds(&inst, bounds_path)?;
            let mut rng = rng_from_seed(derive_seed(cfg.seed, 12));
            ("moead", moead_run(&inst, &cfg.moea, &b, &[], &mut rng).map_err(runtime)?)
        }
    };
    let rows: Vec<FrontRow> = solutions
        .iter()
        .enumerate()
        .map(|(k, s)| FrontRow {
            method: name.into(),
            weight_or_rank: k.to_string(),
            power: s.objectives.power,
            aapfd: s.objectives.aapfd,
            water_revenue: s.objectives.water_revenue,
            feasible: true,
            seed: Some(cfg.seed),
        })
        .collect();
    write_front(out, &rows).map_err(io_failure)?;
    ctx.snapshot("moea", out)?;
    println!("{name}: {} feasible nondominated solutions", rows.len());
    println!("wrote {}", out.display());
    Ok(())
}

fn pareto(inputs: &[PathBuf], reference: &str, out: &Path) -> Outcome {
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(read_front(p).map_err(io_failure)?);
    }
    let feasible: Vec<FrontRow> = rows.into_iter().filter(|r| r.feasible).collect();
    let objs: Vec<ObjectiveTriple> = feasible.iter().map(FrontRow::objectives).collect();
    let merged: Vec<FrontRow> = nondominated_indices(&objs).into_iter().map(|k| feasible[k].clone()).collect();
    write_front(out, &merged).map_err(io_failure)?;
    println!("merged front: {} of {} feasible rows are nondominated", merged.len(), feasible.len());

    let front_of = |m: &str| -> Vec<ObjectiveTriple> {
        feasible.iter().filter(|r| r.method == m).map(FrontRow::objectives).collect()
    };
    let mut methods: Vec<&str> = feasible.iter().map(|r| r.method.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();
    for m in &methods {
        let kept = merged.iter().filter(|r| r.method == *m).count();
        println!("  {m}: {kept} rows on the merged front");
    }
    let ours = front_of(reference);
    if !ours.is_empty() {
        for m in methods.iter().filter(|m| **m != reference) {
            let report = improvement_report(&ours, &front_of(m)).map_err(data)?;
            println!("{reference} vs {m}: {report}");
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<PolicyModel, Failure> {
    let file = File::open(path)
        .with_context(|| format!("cannot open checkpoint {}", path.display()))
        .map_err(data)?;
    let ckpt = read_checkpoint(BufReader::new(file))
        .with_context(|| format!("checkpoint {}", path.display()))
        .map_err(data)?;
    PolicyModel::from_checkpoint(&ckpt)
        .with_context(|| format!("checkpoint {}", path.display()))
        .map_err(data)
}

fn evaluate(ctx: RunContext, checkpoint: &Path, out: &Path, objectives: Option<&Path>, trace: Option<&Path>) -> Outcome {
    let inst = ctx.instance()?;
    let model = load_model(checkpoint)?;
    let space = *model.action_space();
    let (ep, obj, _) = greedy_decode(&inst, &space, &model).map_err(runtime)?;
    let report = check_constraints(&inst, &ep.schedule);
    debug_assert_eq!(objective_triple(&inst, &ep.schedule).ok(), Some(obj));
    write_schedule(out, &inst, &ep.schedule).map_err(io_failure)?;
    let obj_path = objectives.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("objectives.csv"));
    let record = ObjectivesRecord {
        power: obj.power,
        aapfd: obj.aapfd,
        water_revenue: obj.water_revenue,
        feasible: report.is_feasible(),
    };
    write_objectives(&obj_path, &record).map_err(io_failure)?;
    if let Some(tp) = trace {
        write_atomic(tp, |w| {
            write_trace(w, &inst, &space, &ep.steps).map_err(|e| std::io::Error::other(e.to_string()))
        })
        .map_err(io_failure)?;
    }
    ctx.snapshot("evaluate", out)?;
    println!(
        "power {:.6e}, AAPFD {:.6}, water revenue {:.6e}, {}",
        obj.power,
        obj.aapfd,
        obj.water_revenue,
        if report.is_feasible() {
            "feasible".to_string()
        } else {
            format!("{} constraint violations", report.violations.len())
        }
    );
    for v in report.violations.iter().take(5) {
        println!("  {v}");
    }
    println!("wrote {} and {}", out.display(), obj_path.display());
    Ok(())
}

fn export_plots(curves: &[PathBuf], fronts: &[PathBuf], out: &Path) -> Outcome {
    if curves.is_empty() && fronts.is_empty() {
        return Err(data(anyhow!("nothing to export: pass --curves and/or --fronts")));
    }
    if !curves.is_empty() {
        let mut text = String::from("run,iteration,mean_reward,baseline_reward,lr\n");
        for p in curves {
            let run = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let run = match p.parent().and_then(|d| d.file_name()) {
                Some(dir) if run == "curve" => dir.to_string_lossy().into_owned(),
                _ => run,
            };
            for (it, mean, base, lr) in read_curve(p).map_err(io_failure)? {
                text.push_str(&format!("{run},{it},{mean},{base},{lr}\n"));
            }
        }
        write_atomic(&out.join("reward_curves.csv"), |w| w.write_all(text.as_bytes())).map_err(io_failure)?;
    }
    if !fronts.is_empty() {
        let mut rows = Vec::new();
        for p in fronts {
            rows.extend(read_front(p).map_err(io_failure)?);
        }
        let mut text = String::from("method,weight_or_rank,power,aapfd,water_revenue,feasible\n");
        for r in &rows {
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.method, r.weight_or_rank, r.power, r.aapfd, r.water_revenue, r.feasible
            ));
        }
        write_atomic(&out.join("front_scatter.csv"), |w| w.write_all(text.as_bytes())).map_err(io_failure)?;
    }
    println!("wrote plot data to {}", out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::spread;

    #[test]
    fn spread_keeps_both_ends() {
        assert_eq!(spread(171, 3), vec![0, 85, 170]);
        assert_eq!(spread(5, 10), vec![0, 1, 2, 3, 4]);
        assert_eq!(spread(10, 1), vec![0]);
    }
}
