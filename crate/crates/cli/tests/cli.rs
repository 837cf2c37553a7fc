use std::path::PathBuf;
use std::process::{Command, Output};

fn pcslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pcslab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_config(name: &str, text: &str) -> String {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(pcslab(&[]).status.code(), Some(1));
    assert_eq!(pcslab(&["bogus"]).status.code(), Some(1));
    assert_eq!(pcslab(&["sweep"]).status.code(), Some(1));
    assert_eq!(pcslab(&["--help"]).status.code(), Some(0));
    assert_eq!(pcslab(&["--version"]).status.code(), Some(0));
}

#[test]
fn analytic_prints_csv() {
    let o = pcslab(&["analytic", "--scheme", "pcs_x", "--grid", "0.5,1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "F,F_out,rate,qubit_cost");
    assert_eq!(lines[1], "0.5,0.5625,0.4444444444444444,4");
    assert!(lines[2].starts_with("1,1,1,"));
    assert_eq!(pcslab(&["analytic", "--scheme", "nope"]).status.code(), Some(2));
    assert_eq!(pcslab(&["analytic", "--grid", "0.1"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_reproducible_csv() {
    let cfg = write_config(
        "sweep.cfg",
        "scenario = swap\ncheck_mode = xz\nprotect = flying\ngrid = 0.1,0.3\np_1q = 0.001\np_2q = 0.01\n\
         n_shots = 2000\nseed = 5\nengine = monte_carlo\n",
    );
    let a = scratch("a.csv");
    let b = scratch("b.csv");
    for out in [&a, &b] {
        let o = pcslab(&["sweep", "--config", &cfg, "--seed", "11", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut rows = text.lines();
    assert_eq!(rows.next().unwrap().split(',').count(), 14);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], "swap:xz:flying");
        assert_eq!(f[1], "monte_carlo");
        assert_eq!(f[12], "11");
    }
    let exact = pcslab(&["sweep", "--config", &cfg, "--engine", "exact"]);
    assert_eq!(exact.status.code(), Some(0));
    assert!(stdout(&exact).lines().skip(1).all(|l| l.contains(",exact,")));
}

#[test]
fn invalid_config_exits_two() {
    let cfg = write_config("bad.cfg", "scenario = pcs_x_pair\ncolour = blue\n");
    let o = pcslab(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let missing = scratch("missing.cfg");
    assert_eq!(pcslab(&["sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write_config("oracle.cfg", "scenario = recursive_pcs\nrecursion = 1\nengine = oracle\n");
    assert_eq!(pcslab(&["sweep", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn compare_passes_and_gates() {
    let cfg = write_config(
        "cmp.cfg",
        "scenario = pcs_xz_pair\ngrid = 0.1,0.3\nn_shots = 20000\nseed = 3\nengine = exact\n",
    );
    let o = pcslab(&["compare", "--config", &cfg, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "ok");
    assert!(v["max_exact_deviation"].as_f64().unwrap() < 1e-9);
    // One shot gives a zero standard error, so any deviation is infinitely
    // many σ away.
    let o = pcslab(&["compare", "--config", &cfg, "--shots", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn code_analyze_reports_parameters() {
    let o = pcslab(&["code-analyze", "--recursion", "1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((v["n"].as_u64(), v["k"].as_u64(), v["distance"].as_u64()), (Some(5), Some(1), Some(2)));
    assert_eq!(v["max_generator_weight"], 4);
    assert_eq!(v["css"], true);
    let o = pcslab(&["code-analyze", "--recursion", "1", "--syndromes", "2"]);
    assert!(stdout(&o).contains("[[5, 1, 2]]"));
    assert!(stdout(&o).lines().any(|l| l.trim_start().starts_with("0010: ") && l.contains("IIIZI")));
}

#[test]
fn graph_demo_agrees_with_dense_reference() {
    let o = pcslab(&["graph-demo"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dense reference agreement: yes"));
    let g = write_config("path.edges", "# path\n0 1\n1 2\n");
    let o = pcslab(&["graph-demo", "--graph", &g, "--data", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("crossing edges []").count(), 14);
    let bad = write_config("bad.edges", "0 1 2\n");
    assert_eq!(pcslab(&["graph-demo", "--graph", &bad]).status.code(), Some(2));
}

#[test]
fn reproduce_figures() {
    let o = pcslab(&["reproduce", "fig2a"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("F,F'_pcs_x,F'_bbpssw1,diagonal\n"));
    let o = pcslab(&["reproduce", "fig3b"]);
    assert!(stdout(&o).starts_with("F,c_pcs_xz,c_bbpssw3\n"));
    let o = pcslab(&["reproduce", "fig8", "--shots", "500"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 12);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ordering only"));
    assert_eq!(pcslab(&["reproduce", "fig9"]).status.code(), Some(2));
}
