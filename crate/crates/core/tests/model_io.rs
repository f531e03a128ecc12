use bsm::model_io::fixtures::{load_fixture, FIXTURES};
use bsm::model_io::{cli_dispatch, parse_model, serialize_model};
use serde_json::Value;

mod common;

fn cli(args: &[&str]) -> (i32, Value) {
    let (code, out) = cli_dispatch(std::iter::once("bsm").chain(args.iter().copied()));
    let json = serde_json::from_str(&out).unwrap_or(Value::String(out));
    (code, json)
}

#[test]
fn every_fixture_round_trips() {
    for fx in &FIXTURES {
        let m = load_fixture(fx.name, &common::limits()).unwrap();
        let text = serialize_model(&m);
        let again = parse_model(&text).unwrap();
        assert_eq!(m, again, "{}", fx.name);
        assert_eq!(serialize_model(&again), text, "{}", fx.name);
    }
}

#[test]
fn dangling_reference_is_named_with_its_position() {
    let fx = FIXTURES.iter().find(|f| f.name == "cap_toy").unwrap();
    let text = fx.text.replacen("sigma1 part", "sigma1 nowhere", 1);
    let err = parse_model(&text).unwrap_err().to_string();
    assert!(err.contains("nowhere"), "{err}");
    let line = text.lines().position(|l| l.contains("nowhere")).unwrap() + 1;
    assert!(err.contains(&line.to_string()), "{err}");
}

#[test]
fn dangling_reference_through_the_cli_is_an_error() {
    let fx = FIXTURES.iter().find(|f| f.name == "cap_toy").unwrap();
    let path = std::env::temp_dir().join(format!("bsm-dangling-{}.bsm", std::process::id()));
    std::fs::write(&path, fx.text.replacen("r none", "r nothing", 1)).unwrap();
    let (code, out) = cli(&["--model", path.to_str().unwrap(), "cap-exhaustive", "--cap", "loose"]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(code, 2);
    assert!(out.to_string().contains("nothing"), "{out}");
}

#[test]
fn temperature_rule_one_replays() {
    let (code, out) = cli(&[
        "--model", "fixture:temperature", "rule-1", "--sigma", "sg", "--pi", "ph", "--alpha", "alpha", "--beta",
        "beta", "--audit",
    ]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out["verdict"], true);
    assert_eq!(out["details"]["certified"], true);
    assert_eq!(out["details"]["audit"]["agrees"], true);
}

#[test]
fn documented_invocations() {
    let (code, out) = cli(&["--model", "fixture:temperature", "eval", "--system", "g⊗h", "--formula", "d::p_d", "--all"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out["details"]["failing"].as_array().unwrap().len(), 0);

    let (code, out) = cli(&["--model", "fixture:cap_toy", "cap-exhaustive", "--cap", "loose"]);
    assert_eq!(code, 1, "{out}");
    assert_eq!(out["verdict"], false);
    let (code, _) = cli(&["--model", "fixture:cap_toy", "cap-exhaustive", "--cap", "tight"]);
    assert_eq!(code, 0);

    let (code, out) = cli(&[
        "--model", "fixture:register", "scenario-verify", "--timestamps", "1,2,3", "--values", "s0,a", "--max-len", "3",
    ]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out["details"]["entangled"], true);
}

#[test]
fn output_is_deterministic_and_usage_errors_exit_two() {
    let args = ["--model", "fixture:traces", "compose", "--left", "f", "--right", "g"];
    assert_eq!(cli_dispatch(std::iter::once("bsm").chain(args)), cli_dispatch(std::iter::once("bsm").chain(args)));
    assert_eq!(cli(&["bogus"]).0, 2);
    assert_eq!(cli(&["--model", "fixture:nope", "fixtures"]).0, 2);
    assert_eq!(cli(&["--model", "fixture:cap_toy", "cap-exhaustive", "--cap", "absent"]).0, 2);
}
