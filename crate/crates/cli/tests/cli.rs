use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn degcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("JSON line"))
        .collect()
}

fn one(args: &[&str]) -> (i32, Value) {
    let out = degcert(args);
    let mut v = lines(&out);
    assert_eq!(v.len(), 1, "{args:?}");
    (out.status.code().unwrap(), v.remove(0))
}

fn without_timing(out: &Output) -> Vec<Value> {
    lines(out)
        .into_iter()
        .map(|mut v| {
            if let Some(o) = v.as_object_mut() {
                o.remove("wall_ms");
            }
            v
        })
        .collect()
}

#[test]
fn degree_examples() {
    let (code, v) = one(&["degree", "-e", "(pow 2)"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["value"], 2);
    assert_eq!(v["payload"]["method"], "symbolic");

    let (code, v) = one(&["degree", "-e", "(id 2)", "--json"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["value"], 1);

    let (code, v) = one(&["degree", "-e", "(pow"]);
    assert_eq!(code, 1);
    assert_eq!(v["line"], 1);
    assert_eq!(v["outcome"], "error");
    assert_eq!(v["error"]["kind"], "SyntaxError");
}

#[test]
fn certify_examples() {
    let (code, v) = one(&["certify", "-e", "(pow 2)"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["degree"]["value"], 2);
    assert_eq!(
        v["payload"]["power_check"]["checked_exponents"],
        serde_json::json!([])
    );

    let (code, v) = one(&["certify", "-e", "(iterate 2 (pow 3))"]);
    assert_eq!(code, 2);
    assert_eq!(v["outcome"], "refused");
    assert_eq!(v["payload"]["witness"]["base"], 3);
    assert_eq!(v["payload"]["witness"]["exp"], 2);

    let (code, v) = one(&["certify", "-e", "(susp (pow 2))"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["degree"]["value"], 2);
    assert_eq!(v["payload"]["dim"], 2);
}

#[test]
fn certify_through_ball() {
    let (code, v) = one(&[
        "certify",
        "-e",
        "(perturb 11 0.45 (pow 2))",
        "--base",
        "(pow 2)",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["ball"]["consistency_degree"], 2);
    assert_eq!(v["payload"]["ball"]["base"], "(pow 2)");

    let (code, v) = one(&["certify", "-e", "(antipode 1)", "--base", "(pow 2)"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "DistanceTooLarge");
}

#[test]
fn distance_examples() {
    let (code, v) = one(&["distance", "-a", "(pow 2)", "-b", "(pow 2)"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["sampled_max"], 0.0);

    let (_, v) = one(&["distance", "-a", "(id 1)", "-b", "(antipode 1)"]);
    assert!((v["payload"]["sampled_max"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let (_, v) = one(&["distance", "-a", "(pow 2)", "-b", "(perturb 5 0.4 (pow 2))"]);
    assert!(v["payload"]["sampled_max"].as_f64().unwrap() < 1.0);
}

#[test]
fn homotopy_examples() {
    let (_, v) = one(&["homotopy", "-a", "(pow 2)", "-b", "(pow 2)"]);
    assert_eq!(v["payload"]["valid"], true);
    assert!((v["payload"]["min_norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let (_, v) = one(&["homotopy", "-a", "(id 1)", "-b", "(antipode 1)"]);
    assert_eq!(v["payload"]["valid"], false);
    assert_eq!(v["payload"]["argmin"]["t"], 0.5);
    assert!(v["payload"]["min_norm"].as_f64().unwrap() < 1e-12);

    let (_, v) = one(&["homotopy", "-a", "(pow 2)", "-b", "(perturb 3 0.5 (pow 2))"]);
    assert_eq!(v["payload"]["valid"], true);
    assert!(v["payload"]["min_norm"].as_f64().unwrap() > 0.25);
}

#[test]
fn batch_file_keeps_order_and_reports_per_line() {
    let dir = std::env::temp_dir().join(format!("degcert-batch-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("maps.txt");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(
        f,
        "# a small corpus\n(pow 3)\n\n(pow x)\n(susp (pow -2))\n(iterate 3 (pow -2))"
    )
    .unwrap();
    drop(f);

    let out = degcert(&["degree", "-f", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = lines(&out);
    let got: Vec<(i64, Value)> = v
        .iter()
        .map(|l| (l["line"].as_i64().unwrap(), l["payload"]["value"].clone()))
        .collect();
    assert_eq!(
        got,
        vec![
            (2, Value::from(3)),
            (4, Value::Null),
            (5, Value::from(-2)),
            (6, Value::from(-8)),
        ]
    );
    assert_eq!(v[1]["error"]["kind"], "SyntaxError");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn experiment_small_runs() {
    let out = degcert(&[
        "experiment",
        "--dim",
        "1",
        "--count",
        "1",
        "--epsilon-max",
        "0",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = lines(&out);
    assert_eq!(v.len(), 2);
    assert_eq!(v[0]["payload"]["ball"]["sampled_distance"], 0.0);
    assert_eq!(v[1]["summary"]["issued"], 1);

    let out = degcert(&["experiment", "--dim", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = degcert(&["experiment", "--epsilon-max", "1.0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let args = ["experiment", "--dim", "1", "--count", "20", "--seed", "42"];
    let a = degcert(&args);
    let b = degcert(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(without_timing(&a), without_timing(&b));

    let args = [
        "experiment",
        "--dim",
        "2",
        "--count",
        "3",
        "--seed",
        "42",
        "--epsilon-max",
        "0.8",
    ];
    assert_eq!(
        without_timing(&degcert(&args)),
        without_timing(&degcert(&args))
    );

    let other = degcert(&["experiment", "--dim", "1", "--count", "20", "--seed", "43"]);
    assert_ne!(without_timing(&a), without_timing(&other));
}

#[test]
fn input_flags_are_exclusive_and_required() {
    assert_eq!(degcert(&["degree"]).status.code(), Some(2));
    assert_eq!(
        degcert(&["degree", "-e", "(pow 2)", "-f", "x.txt"])
            .status
            .code(),
        Some(2)
    );
}
