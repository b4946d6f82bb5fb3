//! The `vpwf` binary: subcommands, config files, exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vpwf::io;

fn vpwf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpwf"))
        .args(args)
        .env_remove("VPWF_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("t.obj");
    let o = vpwf(&["generate", "--shape", "torus", "--nu", "24", "--nv", "12", "-o", s(&obj)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("row.csv");
    let o = vpwf(&["analyze", s(&obj), "--kappa-radii", "0.5,2", "--eps", "1", "-o", s(&csv)]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("chi: 0") && out.contains("genus: 1"));
    assert!(out.contains("concentration_radius: "));
    let t = io::read_trajectory(&csv).unwrap();
    assert_eq!(t.kappa_radii, vec![0.5, 2.0]);
    assert_eq!(t.records.len(), 1);
}

#[test]
fn simulate_writes_outputs_and_rescale_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = vpwf(&[
        "simulate", "--shape", "ellipsoid", "--level", "2", "--max-steps", "400", "--speed-tol", "0",
        "--record-cadence", "100", "--snapshot-every", "200", "--out-dir", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("stop_reason: max_steps"));
    for f in ["trajectory.csv", "steps.csv", "final.obj", "report.txt", "snapshots/step_00000200.obj"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let traj = io::read_trajectory(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.records.len(), 5);
    assert_eq!(io::read_steps(out.join("steps.csv")).unwrap().1.len(), 400);

    let r = dir.path().join("r.csv");
    let o = vpwf(&["rescale", s(&out.join("trajectory.csv")), "--rho", "2", "--origin", "0.1,0,-0.3", "-o", s(&r), "--check-invariants"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("invariants: ok"));
    let back = io::read_trajectory(&r).unwrap();
    assert!(back.comments.iter().any(|c| c == "rescale rho=2"));
    assert_eq!(back.records[4].t, traj.records[4].t / 16.0);
    assert!(dir.path().join("r.snapshots/step_00000200.obj").exists());

    let w = dir.path().join("w.obj");
    let o = vpwf(&["rescale", s(&out.join("trajectory.csv")), "--blowup-time", "0", "--eps", "1", "--c-hat", "0", "-o", s(&w)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let f = io::read_obj(&w).unwrap();
    assert!(f.comment_value("r_j").is_some());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    let out = dir.path().join("run");
    fs::write(
        &cfg,
        format!("shape = icosphere\nlevel = 2\nmax_steps = 50\nspeed-tol = 0\nquality = false\nout-dir = {}\n", s(&out)),
    )
    .unwrap();
    let o = vpwf(&["simulate", "--config", s(&cfg), "--max-steps", "7", "--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("steps: 7"));

    fs::write(&cfg, "no-such-key = 1\n").unwrap();
    assert_eq!(code(&vpwf(&["simulate", "--config", s(&cfg)])), 2);
    fs::write(&cfg, "this line is malformed\n").unwrap();
    assert_eq!(code(&vpwf(&["simulate", "--config", s(&cfg)])), 3);
    assert_eq!(code(&vpwf(&["simulate", "--config", s(&dir.path().join("missing.cfg"))])), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&vpwf(&[])), 2);
    assert_eq!(code(&vpwf(&["--help"])), 0);
    assert_eq!(code(&vpwf(&["simulate", "--no-such-flag"])), 2);
    assert_eq!(code(&vpwf(&["generate", "--shape", "torus", "--major", "1", "--minor", "2", "-o", s(&d.join("x.obj"))])), 2);
    assert_eq!(code(&vpwf(&["simulate", "--dt-safety", "-1", "--out-dir", s(&d.join("a"))])), 2);
    assert!(!d.join("a").exists(), "bad arguments must not create outputs");
    assert_eq!(code(&vpwf(&["analyze", s(&d.join("missing.obj"))])), 3);
    fs::write(d.join("bad.obj"), "v 0 0 0\nf 1 2 3\n").unwrap();
    assert_eq!(code(&vpwf(&["analyze", s(&d.join("bad.obj"))])), 3);
    assert_eq!(code(&vpwf(&["rescale", s(&d.join("none.csv")), "-o", s(&d.join("o.csv"))])), 3);

    // an exhausted halving budget is a flow error; the last good state is kept
    let out = d.join("f");
    let o = vpwf(&["simulate", "--shape", "ellipsoid", "--level", "2", "--dt-safety", "1", "--dt-max", "1", "--max-halvings", "0", "--speed-tol", "0", "--max-steps", "50", "--out-dir", s(&out)]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("last_good.obj").exists());
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("s.obj");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_vpwf"))
            .args(["generate", "--level", "1", "-o", s(&obj)])
            .env("VPWF_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("2")), 0);
    assert_eq!(code(&run("0")), 2);
    assert_eq!(code(&run("many")), 2);
}
