use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn morrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morrt"))
        .args(args)
        .env_remove("MORRT_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .parse()
        .unwrap()
}

#[test]
fn plan_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("single_agent_two_goals.toml");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let oa = morrt(&[
        "plan",
        scenario.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
    ]);
    let ob = morrt(&[
        "plan",
        scenario.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(stdout(&oa), stdout(&ob));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn seed_comes_from_environment() {
    let scenario = fixture("single_agent_two_goals.toml");
    let flag = morrt(&["plan", scenario.to_str().unwrap(), "--seed", "3"]);
    let env = Command::new(env!("CARGO_BIN_EXE_morrt"))
        .args(["plan", scenario.to_str().unwrap()])
        .env("MORRT_SEED", "3")
        .output()
        .unwrap();
    let default = morrt(&["plan", scenario.to_str().unwrap()]);
    assert_eq!(stdout(&flag), stdout(&env));
    assert_ne!(stdout(&flag), stdout(&default));
}

#[test]
fn simulation_agrees_with_plan() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("single_agent_two_goals.toml");
    let plan = dir.path().join("plan.json");
    let traces = dir.path().join("traces.json");
    let p = morrt(&[
        "plan",
        scenario.to_str().unwrap(),
        "--out",
        plan.to_str().unwrap(),
    ]);
    assert!(p.status.success());
    let s = morrt(&[
        "simulate",
        plan.to_str().unwrap(),
        scenario.to_str().unwrap(),
        "--runs",
        "10000",
        "--seed",
        "11",
        "--traces",
        traces.to_str().unwrap(),
    ]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let out = stdout(&s);
    let gap = (value(&out, "mean_cost") - value(&stdout(&p), "expected_cost")).abs();
    assert!(gap <= 3.0 * value(&out, "std_error"), "{out}");
    assert!(std::fs::read_to_string(traces)
        .unwrap()
        .contains("realized_cost"));

    let fixed = morrt(&[
        "simulate",
        plan.to_str().unwrap(),
        scenario.to_str().unwrap(),
        "--runs",
        "50",
        "--true-e",
        "1",
    ]);
    assert!(stdout(&fixed).contains("per_e_counts = [0, 50]"));
}

#[test]
fn oracle_matches_plan_on_tiny() {
    let scenario = fixture("tiny.toml");
    let p = morrt(&["plan", scenario.to_str().unwrap()]);
    let o = morrt(&["oracle", scenario.to_str().unwrap()]);
    assert!(p.status.success() && o.status.success());
    let diff = value(&stdout(&p), "expected_cost") - value(&stdout(&o), "oracle_cost");
    assert!(diff.abs() <= 1e-9);
}

#[test]
fn svg_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("plan.svg");
    let o = morrt(&[
        "plan",
        fixture("tiny.toml").to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(svg).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
}

#[test]
fn exit_codes() {
    assert_eq!(
        morrt(&["validate", fixture("tiny.toml").to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(morrt(&[]).status.code(), Some(1));
    assert_eq!(morrt(&["plan", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        morrt(&["plan", "/no/such/file.toml"]).status.code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(fixture("tiny.toml")).unwrap();
    std::fs::write(
        &bad,
        text.replace("initial_belief = [0.5, 0.5]", "initial_belief = [0.6, 0.6]"),
    )
    .unwrap();
    let o = morrt(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("belief must sum to 1"));

    let o = morrt(&[
        "oracle",
        fixture("single_agent_two_goals.toml").to_str().unwrap(),
        "--budget",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("instance too large for oracle"));

    let walled = dir.path().join("walled.toml");
    std::fs::write(
        &walled,
        text.replace(
            "bounds = { min = [0.0, 0.0], max = [5.0, 5.0] }",
            "bounds = { min = [0.0, 0.0], max = [5.0, 5.0] }\nobstacles = [{ rect = { min = [0.0, 1.0], max = [5.0, 1.2] } }]",
        )
        .replace("seed = 3", "seed = 3\nmax_iterations = 500"),
    )
    .unwrap();
    assert_eq!(
        morrt(&["plan", walled.to_str().unwrap()]).status.code(),
        Some(3)
    );
}
