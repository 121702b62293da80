use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn g2lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g2lab"))
        .args(args)
        .env_remove("G2LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn spectrum_matches_the_torus_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("low.csv");
    let out = g2lab(&["spectrum", "--eps", "1", "--twist", "0.5,0", "--n", "32", "--m", "16", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let lambda = v["result"]["lambda_d"].as_f64().unwrap();
    assert!((lambda - 0.25).abs() <= 0.03 * 0.25, "lambda_d = {lambda}");
    assert_eq!(v["command"], "spectrum");
    assert_eq!(v["table_sha256"], g2lab::report::table_sha256());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("index,lambda\n"));
}

#[test]
fn classify_reports_associative() {
    let plane = "[[1,0,0],[0,1,0],[0,0,1],[0,0,0],[0,0,0],[0,0,0],[0,0,0]]";
    let out = g2lab(&["classify", "--plane", plane]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["classification"], "associative");

    let out = g2lab(&["classify", "--plane", "[[1,0,0,0,0,0,0],[0,1,0,0,0,0,0],[0,0,0,1,0,0,0]]"]);
    assert_eq!(json(&out)["result"]["classification"], "generic");

    let c0 = "[[0,0,0,1,0,0,0],[0,0,0,0,1,0,0],[0,0,0,0,0,1,0],[0,0,0,0,0,0,1]]";
    let out = g2lab(&["classify", "--plane", c0]);
    assert_eq!(json(&out)["result"]["classification"], "coassociative");
}

#[test]
fn invalid_input_exits_two() {
    for args in [
        vec!["frobnicate"],
        vec!["classify", "--plane", "[[1,2]]"],
        vec!["classify", "--plane", "[[1,0,0],[2,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]]"],
        vec!["spectrum", "--eps", "-1", "--twist", "0.5,0", "--n", "8", "--m", "8"],
        vec!["spectrum", "--eps", "1", "--twist", "0.5", "--n", "8", "--m", "8"],
        vec!["spectrum", "--eps", "1", "--twist", "0.5,0", "--n", "8", "--m", "8", "--warp", "wavy"],
        vec!["normal-form", "--v", "e4"],
        vec!["instanton", "solve", "--n", "7"],
        vec!["instanton", "sweep", "--eps-list", "0.1,-0.2"],
        vec!["poincare", "--profile", "cubic"],
    ] {
        let out = g2lab(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn thread_variable_is_validated() {
    let run = |val: &str| {
        Command::new(env!("CARGO_BIN_EXE_g2lab"))
            .args(["dump-table"])
            .env("G2LAB_THREADS", val)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("0"), Some(2));
    assert_eq!(run("many"), Some(2));
    assert_eq!(run("2"), Some(0));
}

#[test]
fn failed_certificate_exits_one_with_diagnostics() {
    let out = g2lab(&["instanton", "solve", "--n", "8", "--m", "4", "--delta", "0.7"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["command"], "instanton solve");
    assert_eq!(v["result"]["detail"]["certificate"]["verdict"], "failed_2kab");
    assert!(v["result"]["error"].as_str().unwrap().contains("certificate"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["instanton", "solve", "--n", "8", "--m", "4"],
        vec!["kantor-demo", "--trials", "50"],
        vec!["spectrum", "--eps", "0.5", "--twist", "0.25,0.25", "--n", "8", "--m", "6", "--warp", "cosine:0.2"],
        vec!["verify-all", "--quick"],
    ] {
        let mut bytes = Vec::new();
        for k in 0..2 {
            let p = dir.path().join(format!("r{k}.json"));
            let mut a = args.clone();
            a.extend(["--out", p.to_str().unwrap()]);
            let out = g2lab(&a);
            assert_eq!(out.status.code(), Some(0), "{args:?}");
            assert!(out.stdout.is_empty());
            bytes.push(std::fs::read(&p).unwrap());
        }
        assert_eq!(bytes[0], bytes[1], "{args:?}");
    }
}

#[test]
fn instanton_solve_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (out_p, trace_p) = (dir.path().join("report.json"), dir.path().join("trace.csv"));
    let out = g2lab(&[
        "instanton", "solve", "--n", "8", "--m", "4", "--out", out_p.to_str().unwrap(), "--trace", trace_p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&out_p);
    let r = &v["result"]["report"];
    assert!(r["tau_sup_after"].as_f64().unwrap() <= 1e-10);
    assert!(r["dbar_after"].as_f64().unwrap() < 1e-4 * r["dbar_before"].as_f64().unwrap());
    assert_eq!(v["result"]["certificate"]["verdict"], "certified");
    let trace = std::fs::read_to_string(&trace_p).unwrap();
    let n_res = v["result"]["trace"]["residuals"].as_array().unwrap().len();
    assert_eq!(trace.lines().count(), n_res + 1);
}

#[test]
fn sweep_writes_the_scaling_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = g2lab(&["instanton", "sweep", "--n", "8", "--eps-list", "0.1,0.2", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("eps,tau_sup,metric_defect,operator_gap"));
}

#[test]
fn config_files_feed_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(&cfg, r#"{"eps": 1, "twist": [0.5, 0], "n": 16, "m": 8, "count": 2}"#).unwrap();
    let out = g2lab(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["n"], 16);
    assert_eq!(v["result"]["lowest"].as_array().unwrap().len(), 2);

    // Flags after the config win.
    let out = g2lab(&["spectrum", "--config", cfg.to_str().unwrap(), "--n", "8"]);
    assert_eq!(json(&out)["result"]["n"], 8);

    let plane = dir.path().join("plane.json");
    std::fs::write(&plane, r#"{"plane": [[1,0,0],[0,1,0],[0,0,1],[0,0,0],[0,0,0],[0,0,0],[0,0,0]]}"#).unwrap();
    let out = g2lab(&["classify", "--config", plane.to_str().unwrap()]);
    assert_eq!(json(&out)["result"]["classification"], "associative");

    let nf = dir.path().join("nf.json");
    std::fs::write(&nf, r#"{"v": [0, 1, 0, 0, 0, 0, 0]}"#).unwrap();
    assert_eq!(g2lab(&["normal-form", "--config", nf.to_str().unwrap()]).status.code(), Some(0));

    for bad in [r#"{"epsilon": 1}"#, r#"[1, 2]"#, r#"{"eps": {"x": 1}}"#, "not json"] {
        std::fs::write(&cfg, bad).unwrap();
        let out = g2lab(&["spectrum", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
    assert_eq!(g2lab(&["spectrum", "--config", "/nonexistent.json"]).status.code(), Some(2));
}

/// Every key in the published schema is a flag the parser accepts.
#[test]
fn schema_keys_are_flags() {
    let schema: Value =
        serde_json::from_str(include_str!("../schema/config.schema.json")).expect("schema is JSON");
    let commands = schema["properties"].as_object().unwrap();
    assert_eq!(commands.len(), 9);
    for (cmd, spec) in commands {
        assert_eq!(spec["additionalProperties"], false, "{cmd}");
        let mut args: Vec<&str> = cmd.split(' ').collect();
        args.push("--help");
        let help = String::from_utf8(g2lab(&args).stdout).unwrap();
        for key in spec["properties"].as_object().unwrap().keys() {
            let flag = format!("--{}", key.replace('_', "-"));
            assert!(help.contains(&flag), "{cmd}: {flag} missing from help");
        }
    }
}

#[test]
fn dump_table_and_poincare() {
    let v = json(&g2lab(&["dump-table"]));
    assert_eq!(v["result"]["triples"].as_array().unwrap().len(), 7);
    let v = json(&g2lab(&["poincare", "--eps", "1", "--m", "400", "--profile", "linear"]));
    let p = &v["result"]["profiles"][0];
    assert!((p["lhs"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-5);
    assert!((p["rhs"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn verify_all_quick_passes() {
    let out = g2lab(&["verify-all", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(v["result"]["checks"].as_array().unwrap().len(), 10);
}
