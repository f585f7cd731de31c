//! Command-line contract: exit codes, routing lines, diagnostics, JSON
//! report shape, and that emitted translations are themselves parseable.

use std::path::Path;
use std::process::{Command, Output};

fn corpus(rel: &str) -> String {
    format!("{}/../../corpus/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn qdas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_model(dir: &Path, name: &str, src: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, src).unwrap();
    p.to_str().unwrap().to_string()
}

const SYNC: &str = "
qdas syncdemo {
  domain { 0, 1 }
  vars { x }
  squeue s;
  block main { states m0, m1, f; init m0; final f;
    m0 -> m1 : dispatch_s(s, w);
    m1 -> f : x == 1;
  }
  block w { states w0, f; init w0; final f; w0 -> f : x <- 1; }
}
";

const ASYNC_SERIAL: &str = "
qdas growing {
  domain { 0, 1 }
  vars { x }
  squeue s;
  block main { states m0, f; init m0; final f;
    m0 -> m0 : dispatch_a(s, w);
    m0 -> f : true;
  }
  block w { states w0, dead, f; init w0; final f;
    w0 -> f : true;
    w0 -> dead : x == 1;
  }
}
";

#[test]
fn exit_codes_follow_the_verdict() {
    let fig1 = corpus("fig1.qdas");
    // Not coverable, proven by exhaustion.
    let out = qdas(&["check-cover", &fig1, "--target", "increase.crit=2"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("not coverable"), "{text}");

    // Coverable, with a witness.
    let out = qdas(&["check-cover", &fig1, "--target", "increase.crit=1"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("coverable"), "{text}");

    // Unknown: unbounded space, unreachable target, tight limits.
    let dir = tempfile::tempdir().unwrap();
    let growing = write_model(dir.path(), "growing.qdas", ASYNC_SERIAL);
    let out = qdas(&[
        "check-cover",
        &growing,
        "--target",
        "w.dead=1",
        "--max-configs",
        "500",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("unknown"), "{text}");
    assert!(text.contains("semi-decision only"), "{text}");
}

#[test]
fn input_errors_exit_three_with_diagnostics() {
    let out = qdas(&["classify", "/nonexistent/model.qdas"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let broken = write_model(
        dir.path(),
        "broken.qdas",
        "qdas broken {\n  domain { 0 }\n  cqueue q;\n  block main { states m0, f; init m0; m0 -> f : true; }\n}\n",
    );
    let out = qdas(&["classify", &broken]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("main") && err.contains("final"), "{err}");

    let fig1 = corpus("fig1.qdas");
    let out = qdas(&["check-cover", &fig1, "--target", "nosuch.state=1"]);
    assert_eq!(out.status.code(), Some(3));

    // Usage errors are input errors; help and version are not.
    let out = qdas(&["check-cover", &fig1, "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(qdas(&["--help"]).status.code(), Some(0));
    assert_eq!(qdas(&["--version"]).status.code(), Some(0));
}

#[test]
fn classify_reports_the_mixed_class() {
    let out = qdas(&["classify", &corpus("fig1.qdas")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mixed-dispatch"), "{text}");
    assert!(text.contains("mixed-queues"), "{text}");
    assert!(text.contains("undecidable"), "{text}");
}

#[test]
fn queries_route_by_class() {
    let dir = tempfile::tempdir().unwrap();
    let sync = write_model(dir.path(), "sync.qdas", SYNC);
    let out = qdas(&["check-cover", &sync, "--target", "w.f=1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pushdown system (exact)"), "{text}");

    let growing = write_model(dir.path(), "growing.qdas", ASYNC_SERIAL);
    let out = qdas(&["check-term", &growing, "--max-configs", "500"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("bounded exploration (semi-decision only)"),
        "{text}"
    );

    let out = qdas(&["check-term", &corpus("fig1_eqdas.qdas")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Petri net abstraction (bounded forks)"), "{text}");
    assert!(text.contains("terminates"), "{text}");

    // Forcing the exact lane on an undecidable class is a usage conflict.
    let out = qdas(&["check-term", &growing, "--mode", "force-decision"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn translations_are_parseable_output() {
    let out = qdas(&["translate", &corpus("fig1_eqdas.qdas"), "--to", "pn"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    qdas::petri::parse_net(&text).expect("emitted net text parses");

    let dir = tempfile::tempdir().unwrap();
    let sync = write_model(dir.path(), "sync.qdas", SYNC);
    let out = qdas(&["translate", &sync, "--to", "pds"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stdout.is_empty());

    // A mixed model fits neither target formalism.
    let out = qdas(&["translate", &corpus("fig1.qdas"), "--to", "pds"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("synchronous"), "{err}");
}

#[test]
fn generated_models_are_parseable_and_carry_targets() {
    for args in [
        vec!["gen", "pn2qdas", &corpus("gadgets/demo.net"), "--marking", "work=1"],
        vec!["gen", "fifo2qdas", &corpus("gadgets/reach.fifo"), "--goal", "goal"],
        vec!["gen", "2cs2qdas", &corpus("gadgets/reach.2cs"), "--goal", "goal"],
    ] {
        let out = qdas(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let text = String::from_utf8(out.stdout).unwrap();
        let model_src: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with("//"))
            .collect::<Vec<_>>()
            .join("\n");
        let model = qdas::dsl::parse_model(&model_src).expect("generated model parses");
        let targets: Vec<&str> = text
            .lines()
            .filter_map(|l| l.trim_start().strip_prefix("//"))
            .map(str::trim)
            .filter(|l| l.contains('=') && !l.ends_with(':'))
            .collect();
        assert!(!targets.is_empty(), "{args:?}: no suggested cover targets\n{text}");
        for t in targets {
            qdas::dsl::parse_target(&model, t).expect("suggested target parses");
        }
    }
}

#[test]
fn json_reports_have_the_stable_shape() {
    let out = qdas(&[
        "check-cover",
        &corpus("fig1.qdas"),
        "--target",
        "increase.crit=1",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    for key in ["model", "class", "route", "problem", "target", "verdict", "notes", "witness", "exit"] {
        assert!(v.get(key).is_some(), "missing key {key}: {v}");
    }
    assert_eq!(v["verdict"], "coverable");
    assert_eq!(v["exit"], 1);
    assert!(v["witness"].as_object().is_some());
}
