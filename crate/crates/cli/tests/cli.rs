use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use resopt_core::io::{load_dataset, read_front, write_dataset};

fn desk_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/desk")
        .canonicalize()
        .unwrap()
}

fn resopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resopt")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A quick config over the desk dataset.
fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    let text = format!(
        "dataset = {:?}\nseed = 11\n\n[action_space]\nqp_bins = 11\nqs_bins = 11\n\n\
         [model]\nembedding_size = 8\nnum_heads = 2\n\n\
         [train]\nbatch_size = 4\nepochs = 1\niterations_per_epoch = 3\neval_batch = 4\n\
         reward = {{ mode = \"soft_penalty\", lambda = 1.0 }}\n\n\
         [bounds]\nbudget = 100\n\n[moea]\npopulation = 40\ngenerations = 30\nneighborhood = 8\n",
        desk_dir().display().to_string()
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_reports_dimensions() {
    let out = resopt(&["validate", s(&desk_dir())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("I=2 reservoirs, J=5 areas, T=12 periods"), "{text}");
    assert!(text.contains("reservoir powell"), "{text}");
}

#[test]
fn zero_ecological_flow_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = load_dataset(&desk_dir()).unwrap();
    inst.reservoirs[1].ecological_flow[3] = 0.0;
    write_dataset(dir.path(), &inst).unwrap();
    let out = resopt(&["validate", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("reservoirs.csv:") && err.contains("AAPFD"), "{err}");
}

#[test]
fn missing_dataset_is_a_data_error() {
    let out = resopt(&["validate", "/nonexistent/dataset"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(resopt(&["train"]).status.code(), Some(2));
    assert_eq!(resopt(&["moea", "--algo", "spea2", "-o", "x"]).status.code(), Some(2));
    assert_eq!(resopt(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_weights_are_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = resopt(&["--config", s(&cfg), "train", "--weights", "0.5,0.5,0.5", "-o", s(&dir.path().join("t"))]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn moea_runs_are_reproducible_and_snapshotted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for algo in ["nsga3", "moead"] {
        let a = dir.path().join(format!("{algo}_a.csv"));
        let b = dir.path().join(format!("{algo}_b.csv"));
        for p in [&a, &b] {
            let out = resopt(&["--config", s(&cfg), "moea", "--algo", algo, "-o", s(p)]);
            assert!(out.status.success(), "{}", stderr(&out));
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let rows = read_front(&a).unwrap();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.method == algo && r.feasible && r.seed == Some(11)));
        assert!(dir.path().join(format!("{algo}_a.csv.run.toml")).exists());
    }
}

#[test]
fn sweep_pareto_and_export_chain() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = small_config(root);
    let bounds = root.join("bounds.toml");
    let out = resopt(&["--config", s(&cfg), "bounds", "-o", s(&bounds)]);
    assert!(out.status.success(), "{}", stderr(&out));

    let sweep = root.join("sweep");
    let out = resopt(&["--config", s(&cfg), "sweep", "--bounds", s(&bounds), "--limit", "3", "-o", s(&sweep)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(sweep.join("subproblems.csv").exists());
    let curves: Vec<PathBuf> = std::fs::read_dir(sweep.join("curves"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(curves.len(), 3);

    let nsga = root.join("nsga3.csv");
    let out = resopt(&["--config", s(&cfg), "moea", "--algo", "nsga3", "-o", s(&nsga)]);
    assert!(out.status.success(), "{}", stderr(&out));

    let merged = root.join("merged.csv");
    let drl_front = sweep.join("front.csv");
    let out = resopt(&["pareto", "--inputs", s(&drl_front), s(&nsga), "-o", s(&merged)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_front(&merged).unwrap();
    assert!(!rows.is_empty());
    for a in &rows {
        for b in &rows {
            assert!(!a.objectives().dominates(&b.objectives()));
        }
    }
    assert!(stdout(&out).contains("nsga3: "), "{}", stdout(&out));

    let plots = root.join("plots");
    let mut args = vec!["export-plots", "--curves"];
    args.extend(curves.iter().map(|p| s(p)));
    args.extend(["--fronts", s(&merged), "-o", s(&plots)]);
    let out = resopt(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let curve_csv = std::fs::read_to_string(plots.join("reward_curves.csv")).unwrap();
    assert_eq!(curve_csv.lines().count(), 1 + 3 * 3);
    let scatter = std::fs::read_to_string(plots.join("front_scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 1 + rows.len());
}

#[test]
fn evaluate_rejects_a_corrupt_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let ckpt = dir.path().join("bad.ckpt");
    std::fs::write(&ckpt, "not a checkpoint\n").unwrap();
    let out = resopt(&["--config", s(&cfg), "evaluate", s(&ckpt), "-o", s(&dir.path().join("s.csv"))]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}
