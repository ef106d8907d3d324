use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn odesym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odesym"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn validate(schema: &str, payload: &str) -> Value {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(root().join("schemas").join(schema)).unwrap()).unwrap();
    let instance: Value = serde_json::from_str(payload).expect("stdout is JSON");
    let v = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = v.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema}: {errors:?}");
    instance
}

#[test]
fn discover_intro_prints_a_verified_generator() {
    let o = odesym(&["discover", "problems/intro.ode"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = validate("discover.schema.json", &stdout(&o));
    assert_eq!(v["generators"][0]["symbolic_zero"], serde_json::json!([true, true]));
    assert!(v["wall_time_s"].is_number());
}

#[test]
fn discover_ode10() {
    let o = odesym(&["discover", "problems/ODE10.ode", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    let v = validate("discover.schema.json", &stdout(&o));
    assert_eq!(v["generators"][0]["simplified"], "[log(y2), y1^2]");
    assert!(v["generators"][0]["loss"].as_f64().unwrap() < 1e-10);
}

#[test]
fn empty_search_exits_three() {
    let o = odesym(&["discover", "problems/ODE6.ode", "--max-ops", "2"]);
    assert_eq!(o.status.code(), Some(3));
    let v = validate("discover.schema.json", &stdout(&o));
    assert_eq!(v["generators"].as_array().unwrap().len(), 0);
}

#[test]
fn malformed_problem_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ode");
    std::fs::write(&bad, "name = \"x\"\ndim = 1\nf1 = \"y1 * (t +\"\nstart_lo = 1\nstart_hi = 2\nt0 = 0\nt1 = 1\n").unwrap();
    let o = odesym(&["discover", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("position"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());

    std::fs::write(&bad, "name = \"x\"\ndim = [\n").unwrap();
    let o = odesym(&["discover", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = odesym(&["discover", "problems/missing.ode"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_examples() {
    let o = odesym(&["verify", "problems/intro.ode", "[cos(t), sin(t)]"]);
    assert_eq!(o.status.code(), Some(0));
    let v = validate("verify.schema.json", &stdout(&o));
    assert!(v["numeric_loss"].as_f64().unwrap() < 1e-20);
    assert_eq!(v["symbolic_zero"], serde_json::json!([true, true]));

    let o = odesym(&["verify", "problems/intro.ode", "[1, 0]"]);
    assert_eq!(o.status.code(), Some(2));
    let v = validate("verify.schema.json", &stdout(&o));
    assert!((v["numeric_loss"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["passed"], false);

    let o = odesym(&[
        "verify",
        "problems/intro.ode",
        "[y1, y2]",
        "--r",
        "t",
        "--v",
        "log(y1) + y2/y1",
        "--s",
        "y2/y1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = validate("verify.schema.json", &stdout(&o));
    let c = &v["canonical"];
    for x in [&c["r"], &c["v"], &c["s"][0]] {
        assert!(x.as_f64().unwrap() < 1e-10);
    }

    let o = odesym(&["verify", "problems/intro.ode", "[y1]"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_uses_the_file_generator_by_default() {
    for case in odesym::bench::case_names() {
        let path = format!("problems/{case}.ode");
        let o = odesym(&["verify", &path]);
        assert_eq!(o.status.code(), Some(0), "{case}: {}", stderr(&o));
        validate("verify.schema.json", &stdout(&o));
    }
}

#[test]
fn bundled_problems_match_the_registry() {
    for case in odesym::bench::registry() {
        let p = odesym::cli::ProblemFile::load(&root().join(format!("problems/{}.ode", case.name()))).unwrap();
        let mut expected = odesym::cli::problem_from_case(&case);
        expected.canonical = p.canonical.clone();
        assert_eq!(p, expected);
    }
}

#[test]
fn bench_single_case_formats() {
    let o = odesym(&["bench", "--case", "ODE3"]);
    assert_eq!(o.status.code(), Some(0));
    let md = stdout(&o);
    assert!(md.starts_with("| Case | Generator |"));
    assert!(md.contains("| ODE3 | [y1, 1] |"));

    let o = odesym(&["bench", "--case", "ODE3", "--csv"]);
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][1], "success");

    let o = odesym(&["bench", "--case", "ODE3", "--json", "--timing"]);
    let v = validate("bench.schema.json", &stdout(&o));
    assert!(v["rows"][0]["wall_time_s"].is_number());
}

#[test]
fn bench_repeat_reports_timing_statistics() {
    let o = odesym(&["bench", "--case", "ODE3", "--repeat", "5", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = validate("bench_repeat.schema.json", &stdout(&o));
    let s = &v["stats"][0];
    assert_eq!(s["runs"], 5);
    assert_eq!(s["successes"], 5);
    let (lo, mean, hi) = (
        s["ci95_low_s"].as_f64().unwrap(),
        s["mean_s"].as_f64().unwrap(),
        s["ci95_high_s"].as_f64().unwrap(),
    );
    assert!(lo <= mean && mean <= hi);
}

#[test]
fn bench_unknown_case_fails() {
    let o = odesym(&["bench", "--case", "nonexistent"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown case"));
}

#[test]
fn dataset_outputs() {
    let o = odesym(&["dataset", "problems/ODE1.ode"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert_eq!(csv.lines().next(), Some("traj_id,t,y1,y2"));
    assert_eq!(csv.lines().count(), 1 + 3 * 50);

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let svg = dir.path().join("intro.svg");
    for out in [&a, &b] {
        let o = odesym(&[
            "dataset",
            "problems/intro.ode",
            "--seed",
            "7",
            "--json",
            "-o",
            out.to_str().unwrap(),
            "--plot",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).is_empty());
    }
    let ja = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ja, std::fs::read_to_string(&b).unwrap());
    validate("dataset.schema.json", &ja);
    let plot = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(plot.matches("<polyline").count(), 3);
}

#[test]
fn integration_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("undefined.ode");
    std::fs::write(&p, "name = \"undefined\"\ndim = 1\nf1 = \"log(y1 - 5)\"\nstart_lo = 1\nstart_hi = 2\nt0 = 0\nt1 = 1\n").unwrap();
    let o = odesym(&["dataset", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
