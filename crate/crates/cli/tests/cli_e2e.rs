//! End-to-end tests that drive the compiled `gcca` binary: exit codes,
//! stdout report content, file outputs, and the warning policy.

use gcca_cli::mm;
use gcca_core::identifiability::certificate_factors;
use gcca_core::linalg::{subspace_angle, SubspaceBasis};
use gcca_core::model::{synthesize, ModelDims, SynthesisMode};
use ndarray::{concatenate, s, Axis};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::tempdir;

fn gcca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcca"))
        .args(args)
        .output()
        .expect("spawning gcca")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes noiseless identifiable views (I=60, R=5, L=20, N=3) and returns
/// their paths plus the ground-truth basis.
fn write_identifiable_views(dir: &Path) -> (Vec<PathBuf>, SubspaceBasis) {
    let dims = ModelDims::new(60, 5, vec![20; 3], vec![25; 3]).unwrap();
    let (model, views) = synthesize(&dims, 2024, SynthesisMode::FullRank).unwrap();
    let mut paths = Vec::new();
    for (n, v) in views.x.iter().enumerate() {
        let p = dir.join(format!("view_{}.mtx", n + 1));
        mm::write_view(&p, v).unwrap();
        paths.push(p);
    }
    (paths, model.common_basis().unwrap())
}

#[test]
fn help_lists_all_subcommands() {
    let out = gcca(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for cmd in ["synth", "run", "sweep", "check", "plotdata"] {
        assert!(text.contains(cmd), "`{cmd}` missing from help:\n{text}");
    }
}

#[test]
fn run_racing_recovers_and_reports_a_tiny_gap() {
    let dir = tempdir().unwrap();
    let (views, truth) = write_identifiable_views(dir.path());
    let out_dir = dir.path().join("run");

    let out = gcca(&[
        "run",
        "--method",
        "racing",
        "--rank",
        "5",
        "--extra-ranks",
        "20,20,20",
        "--out",
        path_str(&out_dir),
        path_str(&views[0]),
        path_str(&views[1]),
        path_str(&views[2]),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    let gap = summary["gap_ratio"].as_f64().unwrap();
    assert!(gap < 1e-6, "gap_ratio {gap}");
    assert_eq!(summary["warnings"].as_array().unwrap().len(), 0);
    assert!(!summary["theta_spectrum"].as_array().unwrap().is_empty());

    let m_hat = mm::read_dense(&out_dir.join("m_hat.mtx")).unwrap();
    let estimate = SubspaceBasis::new(m_hat).unwrap();
    let angle = subspace_angle(&truth, &estimate).unwrap();
    assert!(angle <= 1e-8, "recovery angle {angle:.3e}");

    for n in 1..=3 {
        assert!(out_dir.join(format!("q_{n}.mtx")).exists(), "q_{n}.mtx missing");
    }
}

#[test]
fn run_methods_agree_on_noiseless_input() {
    let dir = tempdir().unwrap();
    let (views, _) = write_identifiable_views(dir.path());
    let view_args: Vec<&str> = views.iter().map(|p| p.to_str().unwrap()).collect();

    let mut bases = Vec::new();
    for method in ["racing", "maxvar"] {
        let out_dir = dir.path().join(method);
        let mut args = vec![
            "run",
            "--method",
            method,
            "--rank",
            "5",
            "--extra-ranks",
            "20,20,20",
            "--out",
            path_str(&out_dir),
        ];
        args.extend(&view_args);
        let out = gcca(&args);
        assert!(out.status.success(), "{method} failed: {}", stderr(&out));
        let m_hat = mm::read_dense(&out_dir.join("m_hat.mtx")).unwrap();
        bases.push(SubspaceBasis::new(m_hat).unwrap());
    }
    let angle = subspace_angle(&bases[0], &bases[1]).unwrap();
    assert!(angle <= 1e-6, "racing vs maxvar angle {angle:.3e}");
}

#[test]
fn cca2_rejects_three_views() {
    let dir = tempdir().unwrap();
    let (views, _) = write_identifiable_views(dir.path());
    let out = gcca(&[
        "run",
        "--method",
        "cca2",
        "--rank",
        "5",
        "--extra-ranks",
        "20,20,20",
        "--out",
        path_str(&dir.path().join("x")),
        path_str(&views[0]),
        path_str(&views[1]),
        path_str(&views[2]),
    ]);
    assert!(!out.status.success(), "cca2 accepted 3 views");
    assert!(stderr(&out).contains("cca2"), "stderr: {}", stderr(&out));
}

#[test]
fn ill_posed_instances_warn_but_exit_zero() {
    // two wide views at I = 20 leave no slack for a 5-dimensional common part
    let dims = ModelDims::new(20, 5, vec![10; 2], vec![15; 2]).unwrap();
    let (_, views) = synthesize(&dims, 5, SynthesisMode::FullRank).unwrap();
    let dir = tempdir().unwrap();
    let mut paths = Vec::new();
    for (n, v) in views.x.iter().enumerate() {
        let p = dir.path().join(format!("v{n}.mtx"));
        mm::write_view(&p, v).unwrap();
        paths.push(p);
    }
    let out_dir = dir.path().join("run");
    let out = gcca(&[
        "run",
        "--method",
        "racing",
        "--rank",
        "5",
        "--extra-ranks",
        "10,10",
        "--out",
        path_str(&out_dir),
        path_str(&paths[0]),
        path_str(&paths[1]),
    ]);
    assert!(out.status.success(), "warning treated as failure: {}", stderr(&out));
    assert!(stderr(&out).contains("warning"), "stderr: {}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert!(!summary["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn check_reports_necessary_bounds_from_dims_alone() {
    let out = gcca(&[
        "check",
        "--rank",
        "100",
        "--extra-ranks",
        "100,100,100",
        "--entities",
        "250",
        "--features",
        "200,200,200",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("necessary bounds: pass"), "stdout: {text}");

    // two views at the same dims violate the row bound
    let out = gcca(&[
        "check",
        "--rank",
        "100",
        "--extra-ranks",
        "100,100",
        "--entities",
        "250",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("necessary bounds: FAIL"), "stdout: {text}");
}

#[test]
fn check_verifies_the_certificate_factors() {
    let dir = tempdir().unwrap();
    let (m, c) = certificate_factors(22, 10, 8).unwrap();
    let m_path = dir.path().join("m.mtx");
    mm::write_dense(&m_path, m.view()).unwrap();
    let mut factor_args = vec![m_path.clone()];
    for (n, cn) in c.iter().enumerate() {
        let p = dir.path().join(format!("c_{}.mtx", n + 1));
        mm::write_dense(&p, cn.view()).unwrap();
        factor_args.push(p);
    }
    let report_path = dir.path().join("report.json");

    let mut args: Vec<String> = vec![
        "check".into(),
        "--rank".into(),
        "10".into(),
        "--extra-ranks".into(),
        "8,8,8".into(),
        "--out".into(),
        report_path.to_str().unwrap().into(),
        "--factors".into(),
    ];
    args.extend(factor_args.iter().map(|p| p.to_str().unwrap().to_string()));
    let out = gcca(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("staircase rank 44"), "stdout: {text}");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["theorem2"]["gamma_rank"].as_u64(), Some(44));
    assert_eq!(report["theorem2"]["holds"].as_bool(), Some(true));
    assert_eq!(report["theorem1"]["holds"].as_bool(), Some(true));
}

#[test]
fn check_flags_a_planted_shared_component() {
    // three views share M plus one extra direction hidden in every C^(n)
    let dims = ModelDims::new(20, 3, vec![2; 3], vec![5; 3]).unwrap();
    let (model, _) = synthesize(&dims, 77, SynthesisMode::FullRank).unwrap();
    let m_decl = model.m.slice(s![.., 0..2]).to_owned();
    let shared = model.m.slice(s![.., 2..3]).to_owned();

    let dir = tempdir().unwrap();
    let m_path = dir.path().join("m.mtx");
    mm::write_dense(&m_path, m_decl.view()).unwrap();
    let mut c_paths = Vec::new();
    let mut view_paths = Vec::new();
    for n in 0..3 {
        let c_aug = concatenate![Axis(1), model.c[n].view(), shared.view()];
        let c_path = dir.path().join(format!("c_{}.mtx", n + 1));
        mm::write_dense(&c_path, c_aug.view()).unwrap();
        c_paths.push(c_path);
        let view = concatenate![Axis(1), m_decl.view(), c_aug.view()];
        let v_path = dir.path().join(format!("x_{}.mtx", n + 1));
        mm::write_dense(&v_path, view.view()).unwrap();
        view_paths.push(v_path);
    }

    let report_path = dir.path().join("report.json");
    let mut args: Vec<String> = vec![
        "check".into(),
        "--rank".into(),
        "2".into(),
        "--extra-ranks".into(),
        "3,3,3".into(),
        "--out".into(),
        report_path.to_str().unwrap().into(),
    ];
    args.extend(view_paths.iter().map(|p| p.to_str().unwrap().to_string()));
    args.push("--factors".into());
    args.push(m_path.to_str().unwrap().into());
    args.extend(c_paths.iter().map(|p| p.to_str().unwrap().to_string()));
    let out = gcca(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(
        report["intersection_dim"].as_u64(),
        Some(3),
        "expected R+1 = 3: {report}"
    );
    assert_eq!(report["theorem1"]["z_dim"].as_u64(), Some(3));
    assert_eq!(report["theorem1"]["holds"].as_bool(), Some(false));
    let text = stdout(&out);
    assert!(text.contains("FAIL"), "stdout: {text}");
}

#[test]
fn sweep_and_plotdata_run_through_the_binary() {
    let dir = tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "dims": {"n_entities": 30, "common_dim": 2, "individual_dims": [5, 5, 5]},
  "mode": "full_rank",
  "snr_grid_db": [10.0, 25.0],
  "trials": 2,
  "methods": ["racing", "maxvar", "cca2"],
  "view_subsets": [2, 3],
  "base_seed": 3
}"#,
    )
    .unwrap();
    let csv_path = dir.path().join("rows.csv");
    let out = gcca(&[
        "sweep",
        "--config",
        path_str(&config_path),
        "--out",
        path_str(&csv_path),
        "--threads",
        "1",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let rows = gcca_cli::sweep::read_rows(&csv_path).unwrap();
    // racing and maxvar run on both subsets, cca2 only on the pair
    assert_eq!(rows.len(), (2 * 2 + 1) * 2 * 2);
    for row in &rows {
        let angle = row.angle.expect("cell failed");
        assert!((0.0..=1.0).contains(&angle), "angle {angle} out of range");
        assert!(row.runtime_ms >= 0.0);
        if row.method == "cca2" {
            assert_eq!(row.n_views, 2);
        }
        if row.method == "racing" {
            assert!(row.gap_ratio.is_some());
        } else {
            assert!(row.gap_ratio.is_none());
        }
    }

    let plot_path = dir.path().join("plot.csv");
    let out = gcca(&[
        "plotdata",
        path_str(&csv_path),
        "--out",
        path_str(&plot_path),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&plot_path).unwrap();
    // 5 (method, subset) pairs x 2 SNR levels, plus the header
    assert_eq!(text.trim().lines().count(), 1 + 10, "plot csv:\n{text}");
}

#[test]
fn synth_respects_snr_and_writes_manifest() {
    let dir = tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "dims": {"n_entities": 10, "common_dim": 2, "individual_dims": [1, 1]},
  "mode": "full_rank",
  "snr_grid_db": [20.0],
  "trials": 1,
  "methods": ["racing"],
  "view_subsets": [2],
  "base_seed": 9
}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("data");
    let out = gcca(&[
        "synth",
        "--config",
        path_str(&config_path),
        "--out",
        path_str(&out_dir),
        "--snr",
        "20",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let manifest = gcca_cli::manifest::Manifest::load(&out_dir.join("manifest.json")).unwrap();
    assert_eq!(manifest.snr_db, Some(20.0));
    assert_eq!(manifest.views, vec!["view_1.mtx", "view_2.mtx"]);
    assert!(out_dir.join("view_2.mtx").exists());
}

#[test]
fn unreadable_views_exit_nonzero_with_diagnostics() {
    let dir = tempdir().unwrap();
    let bad = dir.path().join("bad.mtx");
    std::fs::write(&bad, "%%MatrixMarket matrix array real general\n2 2\n1.0\noops\n").unwrap();
    let good = dir.path().join("good.mtx");
    mm::write_dense(&good, ndarray::Array2::<f64>::eye(2).view()).unwrap();
    let out = gcca(&[
        "run",
        "--method",
        "racing",
        "--rank",
        "1",
        "--extra-ranks",
        "0,0",
        "--out",
        path_str(&dir.path().join("out")),
        path_str(&bad),
        path_str(&good),
    ]);
    assert!(!out.status.success(), "malformed input accepted");
    let err = stderr(&out);
    assert!(err.contains(":4:") && err.contains("oops"), "stderr: {err}");
}
