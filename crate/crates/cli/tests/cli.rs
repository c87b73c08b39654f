use std::fs;
use std::process::{Command, Output};

fn infoacq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infoacq")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn column(csv: &str, idx: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn solve_defaults_writes_full_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("path.csv");
    let o = infoacq(&["solve", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("t,theta_sq,Z,u,solver"));
    assert_eq!(text.lines().count() - 1, 4097);
    let th = column(&text, 1);
    assert!(th.windows(2).all(|w| w[1] <= w[0]));
    assert!(stdout(&o).contains("theta0_sq   0.18593"));
}

#[test]
fn truncated_linear_without_acquisition() {
    let o = infoacq(&["solve", "--cost", "truncated-linear", "--steps", "8"]);
    assert!(o.status.success());
    let summary = stderr(&o);
    assert!(summary.contains("no acquisition"));
    assert!(summary.contains("t_star      0.0000000000"));
}

#[test]
fn bad_input_exits_with_two() {
    let o = infoacq(&["solve", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = infoacq(&["solve", "--solver", "upwind", "--h", "0.05", "--tau", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CFL"));
    let o = infoacq(&["solve", "--cost", "truncated-linear", "--solver", "detcontrol"]);
    assert_eq!(o.status.code(), Some(2));
    let o = infoacq(&["solve", "--sigma", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# benchmark with a pricier signal\nc = 0.004\nsteps = 64\nsolver = detcontrol\n").unwrap();
    let a = infoacq(&["solve", "--config", cfg.to_str().unwrap()]);
    let b = infoacq(&["solve", "--config", cfg.to_str().unwrap(), "--c", "0.002"]);
    let c = infoacq(&["solve", "--steps", "64", "--solver", "detcontrol"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&b), stdout(&c));
    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(infoacq(&["solve", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn prior_mean_leaves_path_hash_unchanged() {
    let hash = |mu0: &str| {
        let o = infoacq(&["solve", "--steps", "256", "--mu0", mu0]);
        stderr(&o).lines().find(|l| l.starts_with("path_hash")).unwrap().to_string()
    };
    assert_eq!(hash("0.172"), hash("0"));
    assert_eq!(hash("0"), hash("1.0"));
}

#[test]
fn upwind_grid_export() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let o = infoacq(&["solve", "--solver", "upwind", "--h", "0.2", "--grid-out", grid.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&grid).unwrap();
    assert_eq!(text.lines().next(), Some("t,u,gamma,gamma_u"));
    assert!(column(&text, 3).iter().all(|&g| g <= 0.0));
}

#[test]
fn sweep_rows_in_parameter_order() {
    let o = infoacq(&["sweep", "--param", "c", "--points", "5", "--steps", "256"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("param,value,theta0_sq"));
    let v = column(&text, 1);
    let th = column(&text, 2);
    assert_eq!(v.len(), 5);
    assert!(v.windows(2).all(|w| w[0] < w[1]));
    assert!(th.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn simulate_writes_batches_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("paths.csv");
    let args = ["simulate", "--steps", "128", "--paths", "200", "--sim-steps", "32", "--seed", "5", "--dump-paths", dump.to_str().unwrap()];
    let o = infoacq(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("strategy,n_paths,mean_utility,std_error,flagged"));
    assert_eq!(text.lines().count(), 4);
    assert_eq!(fs::read_to_string(&dump).unwrap().lines().count(), 601);
    assert_eq!(stdout(&infoacq(&args)), text);
}

#[test]
fn verify_defaults_pass() {
    let o = infoacq(&["verify"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
