use std::path::Path;
use std::process::{Command, Output};

use cpcorr_cli::table::ResultTable;

fn cpcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpcorr")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn flat_single_point_gives_unit_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.conf", "profile.kind = flat\ngeometry.h = 1\n");
    let out_dir = dir.path().join("out");
    let o = cpcorr(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = ResultTable::read(&out_dir.join("results.csv")).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0].ratio, 1.0);
    assert_eq!(t.rows[0].status, "ok");
    assert!((t.rows[0].c_e * 8.0 * std::f64::consts::PI - 1.0).abs() < 1e-5);
    assert_eq!(t.meta.config_hash.len(), 64);
    assert!(out_dir.join("eta.csv").exists());
    assert!(out_dir.join("ratio.gp").exists());
}

#[test]
fn resolution_floor_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n4.conf", "profile.omega = 2\ngeometry.h_over_a = 1\nnumerics.nodes = 4\n");
    let o = cpcorr(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resolution floor"), "{}", stderr(&o));
}

#[test]
fn window_nodes_are_checked_against_the_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "coarse.conf",
        "profile.omega = 3\ngeometry.h_over_a = 10\nnumerics.method = window\nnumerics.nodes = 100\n",
    );
    let o = cpcorr(&["converge", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resolution floor"), "{}", stderr(&o));
}

#[test]
fn unknown_key_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", "geometry.h = 1\n# fine\nnumerics.colour = 3\n");
    let o = cpcorr(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.conf:3"), "{}", stderr(&o));
}

#[test]
fn csv_body_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "det.conf",
        "profile.kind = sine\nprofile.phase = -pi/2\nsweep.omega_a = 2\ngeometry.h_over_a = 8, 10, 12\nnumerics.q_nodes = 24\n",
    );
    let mut bodies = Vec::new();
    for (threads, env) in [("1", None), ("3", None), ("", Some("2"))] {
        let out = dir.path().join(format!("t{threads}{}", env.unwrap_or("")));
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cpcorr"));
        cmd.args(["run", &cfg, "--output-dir", out.to_str().unwrap()]);
        if !threads.is_empty() {
            cmd.args(["--threads", threads]);
        }
        if let Some(e) = env {
            cmd.env("CPCORR_THREADS", e);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let t = ResultTable::read(&out.join("results.csv")).unwrap();
        bodies.push((t.body(), std::fs::read_to_string(out.join("eta.csv")).unwrap()));
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);
}

#[test]
fn overrides_apply_after_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "o.conf", "profile.kind = flat\ngeometry.h = 1\nnumerics.q_nodes = 4\n");
    let o = cpcorr(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let out = dir.path().join("o");
    let o = cpcorr(&["run", &cfg, "--override", "numerics.q_nodes=24", "--output-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn flat_converge_passes_at_default_settings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.conf", "profile.kind = flat\ngeometry.h = 1\n");
    let out = dir.path().join("c");
    let o = cpcorr(&["converge", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = String::from_utf8_lossy(&o.stdout);
    for knob in ["nodes", "quasi_momentum", "q_nodes", "q_max"] {
        assert!(report.contains(knob), "{report}");
    }
    assert!(out.join("convergence.txt").exists());
}

#[test]
fn deliberately_coarse_settings_fail_converge() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "coarse.conf",
        "profile.omega = 3\ngeometry.h_over_a = 1\nnumerics.q_nodes = 8\nnumerics.beta_order = 2\nnumerics.beta_panels = 1\n",
    );
    let o = cpcorr(&["converge", &cfg, "--output-dir", dir.path().join("cc").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("EXCEEDS"));
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            cpcorr_cli::RunConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}
