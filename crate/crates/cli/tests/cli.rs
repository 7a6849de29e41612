use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out: Output = Command::new(env!("CARGO_BIN_EXE_netoperad")).args(args).output().unwrap();
    let report = if out.stdout.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
    };
    (out.status.code().unwrap(), report, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn every_data_file_validates() {
    for (file, kind) in [
        ("sailboat_template.json", "network_template"),
        ("sailboat_catalog.json", "catalog"),
        ("micro_catalog.json", "catalog"),
        ("micro_scenario.json", "scenario"),
        ("micro_search.json", "search_config"),
        ("lsi_wiring.json", "wiring_library"),
        ("lsi_failure.json", "failure_assignments"),
        ("lsi_requirements.json", "requirements"),
        ("rendezvous_tasking.json", "tasking_template"),
        ("rendezvous_scenario.json", "plan_scenario"),
        ("sortie_tasking.json", "tasking_template"),
        ("sortie_fuel.json", "plan_scenario"),
    ] {
        let (code, r, err) = run(&["validate", &data(file)]);
        assert_eq!(code, 0, "{file}: {err}");
        assert_eq!(r["status"], "ok");
        assert_eq!(r["results"]["kind"], kind, "{file}");
        assert_eq!(r["inputs"][0]["bytes"], std::fs::metadata(data(file)).unwrap().len());
    }
}

#[test]
fn validation_errors_exit_one_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let color = write(dir.path(), "color.json", r#"{"version":1,"colors":["a"],"directed":{"x":{"a":["b"]}}}"#);
    let (code, r, err) = run(&["--json", "validate", &color]);
    assert_eq!(code, 1);
    assert_eq!(r["status"], "invalid");
    assert_eq!(r["exit_code"], 1);
    assert_eq!(r["results"]["details"]["kind"], "network_template");
    assert!(err.contains("unknown color `b`") && err.contains("`x`"), "{err}");

    let trunc = write(dir.path(), "trunc.json", "{\"version\": 1,\n\"colors\": [");
    let (code, r, err) = run(&["validate", &trunc]);
    assert_eq!(code, 1);
    assert_eq!(r, Value::Null, "no report without --json");
    assert!(err.contains("line 2"), "{err}");

    let (code, _, err) = run(&["validate", "--kind", "catalog", &data("sailboat_template.json")]);
    assert_eq!(code, 1, "{err}");
    let (code, _, _) = run(&["validate", &dir.path().join("missing.json").display().to_string()]);
    assert_eq!(code, 1);
}

#[test]
fn compose_runs_scripts_and_reports_lines() {
    let (code, r, err) = run(&["compose", "--template", &data("sailboat_template.json"), "--script", &data("carrying_example.ops")]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(r["results"]["nodes"], 4);
    assert_eq!(r["results"]["edges"], 3);
    let (_, again, _) = run(&["compose", "--template", &data("sailboat_template.json"), "--script", &data("carrying_example.ops")]);
    assert_eq!(r["results"]["sha256"], again["results"]["sha256"]);

    let (code, _, err) = run(&["compose", "--template", &data("sailboat_template.json"), "--script", &data("mismatched_slots.ops")]);
    assert_eq!(code, 1);
    assert!(err.contains("line 6") && err.contains("slot 0"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let edge = write(dir.path(), "bad.ops", "type w = [qd, helo]\nlet e = edge(w, carrying, 1, 0)\n");
    let (code, _, err) = run(&["compose", "--template", &data("sailboat_template.json"), "--script", &edge]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn analyses_of_the_lsi_example() {
    let (code, r, err) = run(&["analyze", "failure", "--wiring", &data("lsi_wiring.json"), "--failure", &data("lsi_failure.json")]);
    assert_eq!(code, 0, "{err}");
    let d = &r["results"]["distributions"];
    for name in ["functional", "control"] {
        assert!((d[name]["Bath"].as_f64().unwrap() - 0.48).abs() <= 0.005);
    }
    assert!(r["results"]["max_pairwise_difference"].as_f64().unwrap() <= 0.005);

    let (code, r, _) = run(&["analyze", "equal", "--wiring", &data("lsi_wiring.json"), "--left", "functional", "--right", "control"]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["equal"], true);

    let (code, r, _) = run(&[
        "analyze", "soundness", "--wiring", &data("lsi_wiring.json"), "--composite", "control",
        "--requirements", &data("lsi_requirements.json"), "--chained",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["sound"], true);
    assert_eq!(r["results"]["chained"]["agrees"], true);

    let (code, _, err) = run(&["analyze", "equal", "--wiring", &data("lsi_wiring.json"), "--left", "functional", "--right", "nope"]);
    assert_eq!(code, 1);
    assert!(err.contains("nope"), "{err}");
}

#[test]
fn plan_statuses_and_lp_export() {
    let (code, r, err) = run(&["plan", "--template", &data("rendezvous_tasking.json"), "--scenario", &data("rendezvous_scenario.json")]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(r["results"]["status"], "optimal");
    assert_eq!(r["results"]["makespan"], 4.0);

    for level in ["plan", "counts"] {
        let (code, r, _) = run(&[
            "plan", "--template", &data("rendezvous_tasking.json"), "--scenario", &data("rendezvous_scenario.json"),
            "--level", level,
        ]);
        assert_eq!(code, 0);
        assert_eq!(r["results"]["level"], level);
    }

    let (code, r, _) = run(&["plan", "--template", &data("sortie_tasking.json"), "--scenario", &data("sortie_fuel_infeasible.json")]);
    assert_eq!(code, 2);
    assert_eq!(r["status"], "infeasible");
    let rows: Vec<&str> = r["results"]["conflict"]["constraints"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(rows.contains(&"goal_u1") && rows.iter().any(|n| n.starts_with("fuel_min")), "{rows:?}");

    let (code, r, _) = run(&[
        "plan", "--template", &data("rendezvous_tasking.json"), "--scenario", &data("rendezvous_scenario.json"),
        "--node-limit", "1",
    ]);
    assert_eq!(code, 2);
    assert_eq!(r["status"], "undecided");

    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("model.lp");
    let (code, r, _) = run(&[
        "plan", "--template", &data("rendezvous_tasking.json"), "--scenario", &data("rendezvous_scenario.json"),
        "--export-lp", &lp.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&lp).unwrap();
    let cs = netoperad_planner::parse_lp(&text).unwrap();
    assert_eq!(Some(cs.vars().len() as u64), r["results"]["variables"].as_u64());
    assert_eq!(Some(cs.constraints().len() as u64), r["results"]["constraints"].as_u64());
}

fn synth(extra: &[&str], report: &Path, audit: &Path) -> (i32, Value) {
    let mut args = vec![
        "synthesize".to_string(),
        "--template".into(),
        data("sailboat_template.json"),
        "--catalog".into(),
        data("micro_catalog.json"),
        "--scenario".into(),
        data("micro_scenario.json"),
        "--audit".into(),
        audit.display().to_string(),
        "--report".into(),
        report.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, stdout, err) = run(&argv);
    assert_eq!(stdout, Value::Null, "report goes to the file");
    assert!(code == 0, "{err}");
    (code, serde_json::from_slice(&std::fs::read(report).unwrap()).unwrap())
}

fn strip_timing(mut v: Value) -> Value {
    v["timing"] = Value::Null;
    v
}

#[test]
fn synthesis_is_reproducible_and_finds_the_ferry_design() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let (_, a) = synth(&["--config", &data("micro_search.json")], &p("a.json"), &p("a.jsonl"));
    assert_eq!(a["results"]["best"]["counts"], serde_json::json!({"Helo": 1, "QD": 4}));
    assert_eq!(a["results"]["best"]["carried"], 4);
    assert_eq!(a["results"]["best"]["cost"], 9.06e6);

    for algo in ["anneal", "genetic"] {
        let args = ["--config", &data("micro_search.json"), "--algorithm", algo, "--seed", "5", "--iterations", "500", "--generations", "20"];
        let (_, x) = synth(&args, &p("x.json"), &p("x.jsonl"));
        let (_, y) = synth(&args, &p("y.json"), &p("y.jsonl"));
        let (ax, ay) = (std::fs::read(p("x.jsonl")).unwrap(), std::fs::read(p("y.jsonl")).unwrap());
        assert_eq!(ax, ay, "{algo} audit");
        // identical apart from timing and the paths that name the outputs
        let mut x = strip_timing(x);
        let mut y = strip_timing(y);
        for v in [&mut x, &mut y] {
            v["command"] = Value::Null;
            v["results"]["audit"]["path"] = Value::Null;
        }
        assert_eq!(x, y, "{algo}");
        assert!(x["results"]["best"]["cost"].as_f64().unwrap() <= 9.06e6);
    }

    let (_, zero) = synth(&["--budget", "0"], &p("z.json"), &p("z.jsonl"));
    assert_eq!(zero["results"]["best"]["nodes"], 0);

    let (code, _, err) = run(&[
        "synthesize", "--template", &data("sailboat_template.json"), "--catalog", &data("micro_catalog.json"),
        "--scenario", &data("micro_scenario.json"), "--budget=-1",
    ]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn version_and_usage() {
    let out = Command::new(env!("CARGO_BIN_EXE_netoperad")).arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
    let out = Command::new(env!("CARGO_BIN_EXE_netoperad")).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_netoperad")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
