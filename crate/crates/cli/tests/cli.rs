use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vpdheat(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vpdheat"));
    cmd.args(args).env_remove("VPDHEAT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = vpdheat(args, &[]);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A signed diagram on three points, used as `--vpd`.
const SMALL_VPD: &str = r#"{"points": [[0, 1, 1], [0, 2, -1], [0, 3, 1]]}"#;

#[test]
fn graph_to_distance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (name, seed) in [("a", "1"), ("b", "2")] {
        let g = d.join(format!("{name}.json"));
        ok(&[
            "gen-graph",
            "--n",
            "12",
            "--k",
            "4",
            "--p",
            "0.3",
            "--weights",
            "1:5",
            "--seed",
            seed,
            "--out",
            s(&g),
        ]);
        let diag = ok(&["persist", "--graph", s(&g)]);
        fs::write(d.join(format!("{name}_diag.json")), diag).unwrap();
    }
    let a = d.join("a_diag.json");
    let b = d.join("b_diag.json");
    let same: f64 = ok(&["rho", "--a", s(&a), "--b", s(&a)]).trim().parse().unwrap();
    assert_eq!(same, 0.0);
    let ab: f64 = ok(&["rho", "--a", s(&a), "--b", s(&b)]).trim().parse().unwrap();
    let ba: f64 = ok(&["rho", "--a", s(&b), "--b", s(&a)]).trim().parse().unwrap();
    assert_eq!(ab, ba);

    let vpd: Value = serde_json::from_str(&ok(&["vpd", "--a", s(&a), "--b", s(&b)])).unwrap();
    assert_eq!(vpd["rho_to_zero"].as_f64().unwrap(), ab);
    assert!(vpd["mass"].as_f64().unwrap() >= ab);
}

#[test]
fn rho_of_shifted_points() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", r#"{"points": [[0, 10, 1]]}"#);
    let b = write(dir.path(), "b.json", r#"{"points": [[1, 10, 1]]}"#);
    assert_eq!(ok(&["rho", "--a", &a, "--b", &b]).trim(), "1");
}

#[test]
fn symbol_and_heat() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.json", SMALL_VPD);
    let out: Value =
        serde_json::from_str(&ok(&["symbol", "--vpd", &v, "--theta", "0,0,0", "--theta", "1,0,-1"])).unwrap();
    assert_eq!(out["rank"], 3);
    assert_eq!(out["jumps"].as_array().unwrap().len(), 6);
    assert_eq!(out["values"][0]["lambda"].as_f64().unwrap(), 0.0);
    assert!(out["values"][1]["lambda"].as_f64().unwrap() > 0.0);

    let csv_path = dir.path().join("heat.csv");
    let res = vpdheat(
        &[
            "heat",
            "--vpd",
            &v,
            "--t",
            "0.7",
            "--check",
            "grid:64",
            "--out",
            s(&csv_path),
        ],
        &[],
    );
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "h0,h1,h2,probability");
    let total: f64 = lines
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-8);
}

#[test]
fn invariants_and_cost_guard() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.json", SMALL_VPD);
    let out = dir.path().join("inv");
    ok(&[
        "invariants",
        "--vpd",
        &v,
        "--t-grid",
        "0.1:1:4",
        "--s-grid",
        "2:6:3",
        "--out",
        s(&out),
    ]);
    let inv = fs::read_to_string(out.join("invariants.csv")).unwrap();
    assert!(inv.starts_with("t,return,collision,energy,scale\n"));
    assert_eq!(inv.lines().count(), 5);
    let res = fs::read_to_string(out.join("resolvent.csv")).unwrap();
    assert!(res.starts_with("s,resolvent\n"));
    let checks: Value = serde_json::from_str(&fs::read_to_string(out.join("cross_checks.json")).unwrap()).unwrap();
    assert_eq!(checks["times"].as_array().unwrap().len(), 4);

    let big = write(
        dir.path(),
        "big.json",
        r#"{"points": [[0, 1, 1], [0, 2, 1], [0, 3, 1], [0, 4, 1], [0, 5, -1]]}"#,
    );
    let r = vpdheat(
        &["invariants", "--vpd", &big, "--quad", "grid:64", "--out", s(&out)],
        &[],
    );
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("monte-carlo"));
}

#[test]
fn bounds_reports() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.json", SMALL_VPD);
    let out = dir.path().join("bounds");
    let profile = r#"{"kind": "power", "c": 2.0, "p": 2.0}"#;
    ok(&[
        "bounds",
        "--vpd",
        &v,
        "--profile",
        profile,
        "--t-grid",
        "0.2:1:3",
        "--s-grid",
        "1:4:2",
        "--out",
        s(&out),
    ]);
    for (name, count) in [("lipschitz", 3), ("mass_tail", 3), ("covering", 3), ("sobolev", 4)] {
        let reports: Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("{name}.json"))).unwrap()).unwrap();
        let reports = reports.as_array().unwrap();
        assert_eq!(reports.len(), count, "{name}");
        assert!(reports.iter().all(|r| r["pass"] == true), "{name}");
    }
}

#[test]
fn mixture_checks() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.json", SMALL_VPD);
    let elems = write(
        dir.path(),
        "elems.json",
        r#"[{"points": [[0, 1, 1], [0, 2, -1]]}, {"points": [[0, 3, 2], [0, 1, -2]]}, {"points": []}]"#,
    );
    let report: Value = serde_json::from_str(&ok(&[
        "mixture",
        "--vpd",
        &v,
        "--eta1",
        "1:1",
        "--eta2",
        "0:0.5,2:0.5",
        "--elements",
        &elems,
    ]))
    .unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 4);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));

    let r = vpdheat(
        &[
            "mixture",
            "--vpd",
            &v,
            "--eta1",
            "1:1",
            "--eta2",
            "2:1",
            "--elements",
            &elems,
        ],
        &[],
    );
    assert_eq!(code(&r), 2);
}

#[test]
fn simulate_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.json", SMALL_VPD);
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let hist = dir.path().join(format!("{name}.hist"));
        let r = vpdheat(
            &[
                "simulate",
                "--vpd",
                &v,
                "--t-grid",
                "0.5:1:2",
                "--samples",
                "20000",
                "--seed",
                "5",
                "--radius",
                "2",
                "--out",
                s(&out),
                "--histogram",
                s(&hist),
            ],
            &[("VPDHEAT_THREADS", threads)],
        );
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        (fs::read_to_string(out).unwrap(), fs::read_to_string(hist).unwrap())
    };
    let (csv1, hist1) = run("1", "one.csv");
    let (csv3, hist3) = run("3", "three.csv");
    assert_eq!(csv1, csv3);
    assert_eq!(hist1, hist3);
    let mut lines = csv1.lines();
    assert_eq!(lines.next().unwrap(), "quantity,t,estimate,std_error,reference,z");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let z: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(z.abs() <= 4.0, "{row}");
    }
    assert!(hist1.starts_with("h0,h1,h2,count,frequency,series\n"));

    let bad = vpdheat(&["simulate", "--vpd", &v], &[("VPDHEAT_THREADS", "0")]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn pipeline_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::create_dir(d.join("graphs")).unwrap();
    for (name, seed) in [("a", "1"), ("b", "2")] {
        let g = d.join("graphs").join(format!("{name}.json"));
        ok(&[
            "gen-graph",
            "--n",
            "10",
            "--k",
            "4",
            "--p",
            "0.2",
            "--weights",
            "1:4",
            "--seed",
            seed,
            "--out",
            s(&g),
        ]);
    }
    let cfg = write(
        d,
        "run.json",
        r#"{"graph_a": "graphs/a.json", "graph_b": "graphs/b.json",
            "profile": {"kind": "power", "c": 2.0, "p": 2.0},
            "t_grid": [0.1, 1.0, 4], "s_grid": [2.0, 6.0, 3], "trunc_radii": [1.0],
            "output_dir": "unused", "seed": 1,
            "options": {"tail_samples": 20000}}"#,
    );
    let out = d.join("out");
    let stdout = ok(&["pipeline", "--config", &cfg, "--out", s(&out)]);
    assert!(stdout.contains("cross-checks"));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cross_checks_pass"], true);
    assert_eq!(manifest["bounds_pass"], true);
    for f in manifest["files"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).is_file());
    }
}

#[test]
fn invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.json", SMALL_VPD);
    let cases: Vec<Vec<&str>> = vec![
        vec!["gen-graph", "--n", "4", "--k", "4", "--p", "0.1"],
        vec!["gen-graph", "--n", "10", "--k", "4", "--p", "0.1", "--weights", "5"],
        vec!["invariants", "--vpd", &v, "--t-grid", "1:0.5:3"],
        vec!["symbol", "--vpd", &v, "--profile", r#"{"kind": "exp", "alpha": -1}"#],
        vec!["symbol", "--vpd", &v, "--theta", "1,2"],
        vec!["symbol"],
        vec!["rho", "--a", "missing.json", "--b", "missing.json"],
        vec!["no-such-command"],
    ];
    for args in cases {
        assert_eq!(code(&vpdheat(&args, &[])), 2, "{args:?}");
    }
}
