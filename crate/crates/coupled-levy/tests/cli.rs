use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coupled-levy"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json output")
}

const LAPLACE: &str = r#"{"kind":"laplace","loc":0,"scale":1}"#;
const EXPONENTIAL: &str = r#"{"kind":"exponential","rate":1}"#;

fn write_config(dir: &Path, couplings: &str, law: &str, out: &str) -> String {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
            "distributions": [{{"name": "jumps", "law": {law}}}],
            "couplings": {couplings},
            "costs": [{{"kind": "power", "p": 0.5}}, {{"kind": "capped", "c": 1}}],
            "separations": [1, 2],
            "horizons": [0.5, 1],
            "replicas": 3000,
            "seed": 11,
            "output": "{out}"
        }}"#
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synchronous_power_cells_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sync.csv");
    let cfg = write_config(dir.path(), r#"["synchronous"]"#, LAPLACE, out.to_str().unwrap());
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rows = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rows.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["distribution", "coupling", "cost_form", "t", "a", "mean", "std_error", "replicas", "seed"]);
    let mut n = 0;
    for r in rows.records() {
        let r = r.unwrap();
        if &r[2] == "power(0.5)" {
            let a: f64 = r[4].parse().unwrap();
            assert_eq!(r[5].parse::<f64>().unwrap(), a.sqrt());
            assert_eq!(&r[6], "0.0");
            n += 1;
        }
    }
    assert_eq!(n, 4);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.csv"));
        let cfg = write_config(dir.path(), r#"["amr", "independent", "basic"]"#, LAPLACE, out.to_str().unwrap());
        let o = bin().args(["run", "--config", &cfg]).env("COUPLED_LEVY_THREADS", threads).output().unwrap();
        assert_eq!(code(&o), 0);
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let cfg = write_config(dir.path(), r#"["reflection"]"#, EXPONENTIAL, out.to_str().unwrap());
    assert_eq!(code(&run(&["run", "--config", &cfg])), 3);
    let cfg = write_config(dir.path(), r#"["warp"]"#, LAPLACE, out.to_str().unwrap());
    assert_eq!(code(&run(&["run", "--config", &cfg])), 2);
    assert_eq!(code(&run(&["run", "--config", "/nonexistent/config.json"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["dist", "check", "--law", r#"{"kind":"uniform","lo":1,"hi":0}"#])), 2);
    // Non-unimodal jump law for a coupled walk.
    let bimodal = r#"{"kind":"discrete","atoms":[[-1,0.5],[1,0.5]]}"#;
    assert_eq!(code(&run(&["chain", "simulate", "--law", bimodal, "--a", "1", "--steps", "3"])), 3);
}

#[test]
fn plot_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let f = json(&run(&["plot", "--kind", "f_alpha"]));
    let series = f.as_array().unwrap();
    assert_eq!(series.len(), 9);
    assert_eq!(series[4]["name"], "gamma=0.5");
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "distribution,coupling,cost_form,t,a,mean,std_error,replicas,seed\n").unwrap();
    assert_eq!(json(&run(&["plot", "--kind", "cost_vs_t", "--results", empty.to_str().unwrap()])), Value::Array(vec![]));
    assert_eq!(code(&run(&["plot", "--kind", "scatter"])), 2);
}

#[test]
fn survival_matches_tv_in_plot_series() {
    let dir = tempfile::tempdir().unwrap();
    let rows = dir.path().join("survival.csv");
    let spec = r#"{"rate":1,"jump_law":{"kind":"discrete","atoms":[[-1,0.5],[1,0.5]]},"y0":2}"#;
    let o = run(&["levy", "check", "--spec", spec, "--kind", "coalescence", "--replicas", "40000", "--out", rows.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&run(&["plot", "--kind", "survival_vs_tv", "--results", rows.to_str().unwrap()]));
    let s = v.as_array().unwrap();
    assert_eq!(s.len(), 2);
    let (mc, tv) = (&s[0], &s[1]);
    for i in 0..4 {
        let (y, e, exact) = (mc["y"][i].as_f64().unwrap(), mc["y_err"][i].as_f64().unwrap(), tv["y"][i].as_f64().unwrap());
        assert!((y - exact).abs() <= 3.0 * e, "t index {i}: {y} +- {e} vs {exact}");
    }
}

#[test]
fn verify_single_criteria() {
    let o = run(&["verify", "--only", "1"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS criterion  1"));
    let o = run(&["verify", "--only", "5"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL criterion  5"));
    assert_eq!(code(&run(&["verify", "--only", "11"])), 2);
}

#[test]
fn inspection_commands() {
    let d = json(&run(&["dist", "check", "--law", LAPLACE]));
    assert_eq!(d["unimodal_at_zero"], true);
    let psi = json(&run(&["couple", "psi", "--law", LAPLACE, "--a", "0.7", "--c", "0.3"]));
    let back = json(&run(&["couple", "psi", "--law", LAPLACE, "--a", "0.3", "--c", "0.7"]));
    let lhs = psi["psi"].as_f64().unwrap() + 0.7;
    let rhs = back["psi"].as_f64().unwrap() + 0.3;
    assert!((lhs - rhs).abs() < 1e-6);
    let r = json(&run(&["oracle", "verify", "--law", LAPLACE, "--a", "1", "--cost", r#"{"kind":"power","p":0.5}"#]));
    assert!(r["relative_gap"].as_f64().unwrap() < 1e-2);
    let t = json(&run(&["oracle", "two-point", "--gamma", "0.9"]));
    let root = t["root"].as_f64().unwrap();
    assert!(root > 0.9 && root < 0.95);
    assert!((t["lp_switch"].as_f64().unwrap() - root).abs() < 1e-6);
}

#[test]
fn levy_commands() {
    let spec = r#"{"rate":2,"jump_law":{"kind":"laplace","loc":0,"scale":1},"y0":1,"horizon":1}"#;
    let o = run(&["levy", "compare", "--spec", spec, "--cost", r#"{"kind":"capped","c":1}"#, "--replicas", "4000", "--format", "json"]);
    let v = json(&o);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let amr = rows[0]["mean"].as_f64().unwrap();
    assert_eq!(rows[0]["coupling"], "amr");
    assert!(rows.iter().all(|r| r["mean"].as_f64().unwrap() >= amr - 0.05));
    let o = run(&["levy", "simulate", "--spec", spec, "--grid", "10", "--seed", "5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 12);
    assert_eq!(o.stdout, run(&["levy", "simulate", "--spec", spec, "--grid", "10", "--seed", "5"]).stdout);
    let m = json(&run(&["levy", "check", "--spec", spec, "--kind", "marginals", "--replicas", "20000"]));
    assert_eq!(m["passed"], true);
}
