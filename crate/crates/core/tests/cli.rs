use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fracctl");
const LINEAR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/linear_single_mode.cfg");

fn fracctl(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("FRACCTL_OUT_DIR")
        .current_dir(dir)
        .output()
        .unwrap()
}

fn body(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn sweep_writes_table_for_linear_config() {
    let d = tempfile::tempdir().unwrap();
    let out = fracctl(&["sweep", "--config", LINEAR, "--out", "res"], d.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(d.path().join("res/sweep.csv")).unwrap();
    assert!(text.starts_with("# config_hash="));
    assert!(text.contains(",alpha=1,N=1,n_steps=2048"));
    let rows = body(&d.path().join("res/sweep.csv"));
    assert_eq!(rows[0], "beta,residual,control_energy,converged");
    assert_eq!(rows.len(), 5);
    let r: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((r - 0.187_852_57).abs() < 1e-6);
}

#[test]
fn beta_and_steps_flags_override_config() {
    let d = tempfile::tempdir().unwrap();
    let out = fracctl(&["sweep", "--config", LINEAR, "--out", ".", "--beta", "0.5,0.05", "--steps", "64"], d.path());
    assert!(out.status.success());
    let text = fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    assert!(text.contains("n_steps=64"));
    let rows = body(&d.path().join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("5.0000000000000000e-1,"));
}

#[test]
fn output_directory_precedence() {
    let d = tempfile::tempdir().unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(BIN);
        c.args(["verify-kernels", "--config", LINEAR]).args(extra).current_dir(d.path());
        c.env_remove("FRACCTL_OUT_DIR");
        if let Some(e) = env {
            c.env("FRACCTL_OUT_DIR", e);
        }
        assert!(c.output().unwrap().status.success());
    };
    run(&[], None);
    assert!(d.path().join("out/verify_kernels.csv").exists());
    run(&[], Some("from_env"));
    assert!(d.path().join("from_env/verify_kernels.csv").exists());
    run(&["--out", "from_flag"], Some("from_env2"));
    assert!(d.path().join("from_flag/verify_kernels.csv").exists());
    assert!(!d.path().join("from_env2").exists());
}

#[test]
fn simulate_and_synthesize_on_linear_config() {
    let d = tempfile::tempdir().unwrap();
    assert!(fracctl(&["simulate", "--config", LINEAR, "--out", "."], d.path()).status.success());
    let traj = body(&d.path().join("trajectory.csv"));
    assert!(traj[0].starts_with("t,mode_1,phys_1,"));
    assert_eq!(traj.len(), 2050);
    assert!(fracctl(&["synthesize", "--config", LINEAR, "--out", "."], d.path()).status.success());
    let text = fs::read_to_string(d.path().join("control.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let res: f64 = last
        .trim_start_matches("# terminal_residual=")
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    // smallest configured beta is 1e-4
    assert!((res - 2.3125e-4).abs() < 1e-8, "{last}");
    assert_eq!(body(&d.path().join("control.csv"))[0], "t,ch1_mode_1");
}

#[test]
fn bad_config_fails_with_key_and_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.cfg");
    fs::write(&cfg, "[model]\nalpha = 0.5\nmodes = 2\nstate_delays = linear(2)\nstate_multipliers = identity\n").unwrap();
    let out = fracctl(&["simulate", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.state_delays") && err.contains("delta(t) <= t"), "{err}");

    fs::write(&cfg, "[model]\nalpha 0.5\n").unwrap();
    let out = fracctl(&["simulate", "--config", cfg.to_str().unwrap()], d.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn unknown_strategy_lists_alternatives() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.cfg");
    fs::write(&cfg, "[control]\ntarget = triangle(1)\n").unwrap();
    let out = fracctl(&["sweep", "--config", cfg.to_str().unwrap()], d.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("triangle") && err.contains("gaussian_bump"), "{err}");
}
