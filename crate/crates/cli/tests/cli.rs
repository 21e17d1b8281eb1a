use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_heun-rsj"));
    cmd.args(args).env_remove("HEUN_RSJ_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(&format!("{key} "))).unwrap();
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn spectrum_json_has_both_quadratic_roots() {
    let o = run(&["spectrum", "--n", "1", "--mu", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "heun-rsj/1");
    let l: Vec<f64> = v["lambdas"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let r5 = 5f64.sqrt();
    assert!((l[0] - (1.0 - r5) / 2.0).abs() < 1e-12);
    assert!((l[1] - (1.0 + r5) / 2.0).abs() < 1e-12);
    for root in v["roots"].as_array().unwrap() {
        let omega = root["omega"].as_f64().unwrap();
        let lambda = root["lambda"].as_f64().unwrap();
        assert!((4.0 * omega * omega * (lambda + 1.0) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn spectrum_degree_zero() {
    let o = run(&["spectrum", "--n", "0", "--mu", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("root 0")).unwrap();
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let value = |k: &str| -> f64 { tokens[tokens.iter().position(|t| *t == k).unwrap() + 1].parse().unwrap() };
    assert_eq!(value("lambda"), 0.0);
    assert_eq!(value("omega"), 1.0);
    assert_eq!(value("A"), 1.0);
    assert_eq!(value("B"), -1.0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["spectrum", "--n", "-1", "--mu", "1"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["poly", "--n", "1", "--mu", "1", "--root", "2"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--a", "0", "--b", "1", "--omega", "1", "--t-end", "1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run_env(&["sweep", "--n-max", "1", "--mu-min", "0", "--mu-max", "1"], &[("HEUN_RSJ_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn computational_errors_exit_one_with_name() {
    let o = run(&["poly", "--n", "2", "--mu", "0", "--root", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("MuZero"));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["error"], "MuZero");
    let o = run(&["ortho", "--n1", "0", "--n2", "1", "--mu", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("MuNotPositive"));
}

#[test]
fn phase_compare_matches_rk4() {
    let o = run(&["phase-compare", "--n", "1", "--mu", "0.5", "--root", "1", "--periods", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(field(&text, "max_deviation") <= 1e-6);
    assert!(field(&text, "ode_residual") <= 1e-6);
}

#[test]
fn verify_passes_everywhere() {
    let o = run(&["verify", "--n", "2", "--mu", "1", "--root", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let checks: Vec<&str> = text.lines().filter(|l| l.ends_with("PASS") || l.ends_with("FAIL")).collect();
    assert_eq!(checks.len(), 9);
    assert!(checks.iter().all(|l| l.ends_with("PASS")));
    assert_eq!(field(&text, "factorization_sign"), -1.0);
}

#[test]
fn verify_fails_on_impossible_tolerance() {
    let o = run(&["verify", "--n", "3", "--mu", "1", "--root", "1", "--tol-heun", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("heun_equation") && l.ends_with("FAIL")));
}

#[test]
fn ortho_example() {
    let o = run(&["ortho", "--n1", "0", "--n2", "1", "--mu", "1", "--root1", "0", "--root2", "0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["relative"].as_f64().unwrap() <= 1e-8);
    assert!(v["scale"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_is_sorted_and_deterministic() {
    let args = ["sweep", "--n-min", "0", "--n-max", "4", "--mu-min", "-2", "--mu-max", "2", "--mu-count", "9"];
    let one = run_env(&args, &[("HEUN_RSJ_THREADS", "1")]);
    let many = run_env(&args, &[("HEUN_RSJ_THREADS", "4")]);
    let default = run(&args);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, default.stdout);
    let text = stdout(&one);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,mu,lambda,omega,A,B"));
    let keys: Vec<(usize, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(keys.len(), 9 * (1 + 2 + 3 + 4 + 5));
    assert!(keys.windows(2).all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 <= w[1].1)));
}

#[test]
fn simulate_outputs() {
    let o = run(&["simulate", "--a", "1", "--b", "0.5", "--omega", "2", "--t-end", "1", "--system", "xy", "--every", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("t,x,y\n"));
    let last = text.lines().last().unwrap();
    let t: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert_eq!(t, 1.0);
    let o = run(&["simulate", "--a", "1", "--b", "0.5", "--omega", "2", "--t-end", "0.5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["columns"][1], "phi");
}

#[test]
fn reports_are_byte_identical() {
    for args in [
        vec!["spectrum", "--n", "6", "--mu", "0.25", "--format", "json"],
        vec!["poly", "--n", "4", "--mu", "1.5", "--root", "2"],
        vec!["verify", "--n", "3", "--mu", "0.5", "--root", "3", "--format", "json"],
    ] {
        assert_eq!(run(&args).stdout, run(&args).stdout);
    }
}
