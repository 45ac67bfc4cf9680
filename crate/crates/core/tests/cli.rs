use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use degensense::cli::{main_with, EXIT_IO, EXIT_OK, EXIT_PARAM};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with(std::iter::once("degensense").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degensense")).args(args).output().unwrap()
}

const TUM: &str = "0 1 2 3 0 0 0 1\n0.1 1.5 2 3 0 0 0 1\n0.2 2 2.25 3 0 0 0.6 0.8\n";

#[test]
fn unknown_subcommand_prints_usage_and_exits_1() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, EXIT_PARAM);
    assert!(err.contains("Usage"), "{err}");
    let out = bin(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in ["simulate", "metrics", "replay", "scene-dump"] {
        assert!(out.contains(sub), "{out}");
    }
}

#[test]
fn metrics_of_identical_trajectories_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.tum");
    std::fs::write(&p, TUM).unwrap();
    let p = p.to_str().unwrap();
    let (code, out, err) = run(&["metrics", p, p]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out, "ate_rmse 0.000000000\nend_to_end_error 0.000000000\nmax_error 0.000000000\n");
}

#[test]
fn metrics_of_shifted_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.tum");
    let est = dir.path().join("est.tum");
    std::fs::write(&gt, TUM).unwrap();
    std::fs::write(&est, "0 1 2 3 0 0 0 1\n0.1 1.8 2 3 0 0 0 1\n0.2 2.3 2.25 3 0 0 0.6 0.8\n").unwrap();
    let (code, out, _) = run(&["metrics", est.to_str().unwrap(), gt.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let values: Vec<f64> = out.lines().map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    // errors 0, 0.3, 0.3
    assert!((values[0] - (0.18f64 / 3.0).sqrt()).abs() < 1e-9);
    assert!((values[1] - 0.3).abs() < 1e-9 && (values[2] - 0.3).abs() < 1e-9);
}

#[test]
fn missing_input_file_exits_2() {
    let (code, _, err) = run(&["metrics", "/nonexistent/a.tum", "/nonexistent/b.tum"]);
    assert_eq!(code, EXIT_IO, "{err}");
    let (code, _, _) = run(&["simulate", "--config", "/nonexistent/c.toml"]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn bad_parameters_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("box_room.toml")).unwrap().replace("seed = 7", "seed = 7\nbogus = 1");
    std::fs::write(&p, text).unwrap();
    let (code, _, err) = run(&["simulate", "--config", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_PARAM);
    assert!(err.contains("bogus"), "{err}");
    let (code, _, _) = run(&["simulate"]);
    assert_eq!(code, EXIT_PARAM);
    let (code, _, _) = run(&["simulate", "--seed", "x"]);
    assert_eq!(code, EXIT_PARAM);
    let bad_tum = dir.path().join("bad.tum");
    std::fs::write(&bad_tum, "0 1 2\n").unwrap();
    let (code, _, err) = run(&["metrics", bad_tum.to_str().unwrap(), bad_tum.to_str().unwrap()]);
    assert_eq!(code, EXIT_PARAM);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn simulate_then_replay_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("short.toml");
    let text = std::fs::read_to_string(config("box_room.toml")).unwrap().replace("duration = 59.9", "duration = 5.0");
    assert!(text.contains("duration = 5.0"));
    std::fs::write(&cfg_path, text).unwrap();
    let out_dir = dir.path().join("out");
    let (code, out, err) = run(&["simulate", "--config", cfg_path.to_str().unwrap(), "--output", out_dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("frames 51\nrot_flags 0\ntrans_flags 0\n"), "{out}");
    for f in ["trace.csv", "gt.tum", "lo.tum", "fused.tum"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let gt = std::fs::read_to_string(out_dir.join("gt.tum")).unwrap();
    assert_eq!(gt.lines().count(), 51);
    assert_eq!(gt.lines().next().unwrap().split(' ').count(), 8);

    let (code, flags, _) = run(&["replay", out_dir.join("trace.csv").to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let mut lines = flags.lines();
    assert_eq!(lines.next(), Some("frame,s_rot,s_trans,rot_flag,trans_flag"));
    assert_eq!(lines.count(), 51);

    let (code, _, _) = run(&["replay", out_dir.join("trace.csv").to_str().unwrap(), "--output", out_dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(std::fs::read_to_string(out_dir.join("flags.csv")).unwrap(), flags);

    let (code, m, _) = run(&["metrics", out_dir.join("fused.tum").to_str().unwrap(), out_dir.join("gt.tum").to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains(&format!("fused.{}", m.lines().next().unwrap())), "{out}\n{m}");
}

#[test]
fn no_fusion_flag_makes_fused_equal_lidar_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("short.toml");
    let text = std::fs::read_to_string(config("box_room.toml")).unwrap().replace("duration = 59.9", "duration = 3.0");
    std::fs::write(&cfg_path, text).unwrap();
    let (code, _, _) = run(&["simulate", "--no-fusion", "--config", cfg_path.to_str().unwrap(), "--output", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        std::fs::read(dir.path().join("lo.tum")).unwrap(),
        std::fs::read(dir.path().join("fused.tum")).unwrap()
    );
}

#[test]
fn scene_dump_lists_surfaces() {
    let (code, out, err) = run(&["scene-dump", "--config", config("box_room.toml").to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("kind,index,anchor_x,anchor_y,anchor_z,dir_x,dir_y,dir_z,u_x,u_y,u_z,half_u,half_v")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.iter().filter(|r| r.starts_with("plane,")).count(), 6);
    assert!(rows.iter().any(|r| r.starts_with("edge,")));

    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["scene-dump", "--config", config("box_room.toml").to_str().unwrap(), "--output", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(std::fs::read_to_string(dir.path().join("scene.csv")).unwrap(), out);
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("short.toml");
    let text = std::fs::read_to_string(config("box_room.toml")).unwrap().replace("duration = 59.9", "duration = 2.0");
    std::fs::write(&cfg_path, text).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let mut lo = Vec::new();
    for (seed, sub) in [("7", "a"), ("7", "b"), ("8", "c")] {
        let out = dir.path().join(sub);
        let o = bin(&["simulate", "--config", cfg, "--seed", seed, "--output", out.to_str().unwrap()]);
        assert!(o.status.success());
        lo.push(std::fs::read(out.join("lo.tum")).unwrap());
    }
    assert_eq!(lo[0], lo[1]);
    assert_ne!(lo[0], lo[2]);
}
