use std::io::Write;
use std::process::{Command, Stdio};

use proptest::prelude::*;

use nijenhuis_cli::doc::{LsaEntry, OperatorDoc};

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn nij(args: &[&str]) -> Run {
    nij_with(args, &[], None)
}

fn nij_with(args: &[&str], env: &[(&str, &str)], stdin: Option<&str>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nijenhuis"));
    cmd.args(args).env_remove("NIJENHUIS_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("binary runs");
    if let Some(text) = stdin {
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    } else {
        drop(child.stdin.take());
    }
    let out = child.wait_with_output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn expect(args: &[&str], code: i32) -> Run {
    let r = nij(args);
    assert_eq!(r.code, code, "{args:?}\nstdout:\n{}\nstderr:\n{}", r.stdout, r.stderr);
    r
}

#[test]
fn check_exit_codes() {
    let ok = expect(&["check", &data("example41.toml")], 0);
    assert!(ok.stdout.contains("PASS nijenhuis: residual 0"));
    let bad = expect(&["check", &data("planted.toml")], 1);
    assert!(bad.stdout.contains("FAIL nijenhuis: N^"), "{}", bad.stdout);
    assert!(bad.stdout.ends_with("result: fail\n"));
    expect(&["check", &data("planted.toml"), "--mode", "numeric"], 1);
    expect(&["check", &data("no_such_file.toml")], 2);
}

#[test]
fn canonical_exit_codes() {
    let r = expect(&["canonical", "companion", "--dim", "2"], 0);
    assert_eq!(r.stdout, "kind = \"companion\"\ndim = 2\nvars = [\"x1\", \"x2\"]\nmatrix = [[\"x1\", \"1\"], [\"x2\", \"0\"]]\n");
    expect(&["canonical", "companion"], 2);
    expect(&["canonical", "nilpotent", "--dim", "1"], 2);
    expect(&["canonical", "diag", "--lambda", "x2", "--lambda", "x1"], 2);
}

#[test]
fn reconstruct_exit_codes() {
    let r = expect(&["reconstruct", &data("companion_sigma.toml")], 0);
    assert!(r.stdout.contains("x3"));
    expect(&["reconstruct", &data("two_block.toml")], 0);
    // sigma independent of x2: singular Jacobian
    let r = nij_with(&["reconstruct", "-"], &[], Some("sigma = [\"-x1\", \"x1^2\"]\n"));
    assert_eq!(r.code, 2, "{}", r.stdout);
    assert!(r.stderr.starts_with("error: "));
}

#[test]
fn split_exit_codes() {
    expect(&["split", &data("split.toml")], 0);
    let bad = expect(&["split", &data("split_bad.toml")], 1);
    assert!(bad.stdout.contains("FAIL projector-nijenhuis"));
    // t - 3 does not divide the characteristic polynomial
    let r = nij_with(
        &["split", "-"],
        &[],
        Some("matrix = [[\"x1\", \"0\"], [\"0\", \"x2 + 2\"]]\nchi1 = \"t - 3\"\npoint = [0.0, 0.0]\n"),
    );
    assert_eq!(r.code, 2, "{}", r.stdout);
}

#[test]
fn classify_exit_codes() {
    let r = expect(&["classify", &data("classify.toml")], 0);
    assert!(r.stdout.contains("[3]"), "{}", r.stdout);
    let r = nij_with(&["classify", "-"], &[], Some("matrix = [[\"x1\"]]\npoint = [0.0, 1.0]\n"));
    assert_eq!(r.code, 2);
}

#[test]
fn lsa_exit_codes() {
    expect(&["lsa", &data("lsa_b1.toml")], 0);
    expect(&["lsa", &data("lsa_bad.toml")], 1);
    let r = nij_with(&["lsa", "-"], &[], Some("matrix = [[\"x1^2\"]]\n"));
    assert_eq!(r.code, 2);
}

#[test]
fn linearize_exit_codes() {
    let r = expect(&["linearize", &data("linearize.toml")], 0);
    assert!(r.stdout.contains("y1 = -x2^2 + x1"), "{}", r.stdout);
    let bad = expect(&["linearize", &data("linearize_bad.toml")], 1);
    assert!(bad.stdout.contains("FAIL compatibility degree 2"));
    expect(&["linearize", &data("example41.toml")], 2);
}

#[test]
fn geodesic_exit_codes() {
    expect(&["geodesic", &data("geodesic_companion.toml")], 0);
    expect(&["geodesic", &data("levi_civita.toml")], 0);
    expect(&["geodesic", &data("geodesic_bad.toml")], 1);
    expect(&["geodesic", &data("planted.toml")], 2);
}

#[test]
fn pn_exit_codes() {
    expect(&["pn", &data("as_pair.toml")], 0);
    let bad = expect(&["pn", &data("pn_bad.toml")], 1);
    assert!(bad.stdout.contains("FAIL closed"));
    expect(&["pn", &data("example41.toml")], 2);
}

#[test]
fn malformed_documents() {
    let r = nij_with(&["check", "-"], &[], Some("matrx = []\n"));
    assert_eq!(r.code, 2);
    let r = nij_with(&["check", "-"], &[], Some("matrix = [[\"x1 +\"]]\n"));
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("matrix[1][1]"), "{}", r.stderr);
    expect(&["frobnicate"], 2);
}

#[test]
fn seed_precedence() {
    let seed_of = |r: &Run| r.stdout.lines().find(|l| l.starts_with("sampling:")).unwrap().to_string();
    let plain = std::fs::read_to_string(data("example41.toml")).unwrap();
    let seeded = format!("{plain}seed = 5\n");
    let args = ["check", "-", "--mode", "numeric"];
    let env = [("NIJENHUIS_SEED", "9")];
    assert!(seed_of(&nij_with(&args, &[], Some(&plain))).contains("seed 42"));
    assert!(seed_of(&nij_with(&args, &env, Some(&plain))).contains("seed 9"));
    assert!(seed_of(&nij_with(&args, &env, Some(&seeded))).contains("seed 5"));
    let mut flagged = args.to_vec();
    flagged.extend(["--seed", "3"]);
    assert!(seed_of(&nij_with(&flagged, &env, Some(&seeded))).contains("seed 3"));
}

#[test]
fn json_reports() {
    let r = expect(&["--json", "check", &data("planted.toml")], 1);
    assert!(r.stdout.starts_with("{\"schema\":1,\"command\":\"check\","), "{}", r.stdout);
    assert_eq!(r.stdout.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["pass"], false);
    assert_eq!(v["checks"][0]["residual"]["kind"], "symbolic");
    let t = expect(&["--json", "--timing", "check", &data("example41.toml")], 0);
    assert!(t.stdout.contains("\"wall_time_ms\":"));
    assert!(!expect(&["--json", "check", &data("example41.toml")], 0).stdout.contains("wall_time_ms"));
}

fn doc_strategy() -> impl Strategy<Value = OperatorDoc> {
    let entry = prop::sample::select(vec!["x1", "0", "x1*x2 - 1/2", "(1)/(x1 - x2)", "-3*x2^2"]);
    (
        prop::option::of(1usize..=3),
        prop::option::of(prop::collection::vec(prop::collection::vec(entry, 2), 2)),
        prop::option::of(0u64..1000),
        prop::option::of(prop::collection::vec(-1.0f64..1.0, 2)),
        prop::option::of((1usize..=2, 1usize..=2, 1usize..=2, -4i64..4)),
        prop::option::of(1e-12f64..1e-3),
    )
        .prop_map(|(dim, matrix, seed, point, lsa, tol)| OperatorDoc {
            dim,
            matrix: matrix.map(|m| m.into_iter().map(|r| r.into_iter().map(str::to_string).collect()).collect()),
            seed,
            point,
            lsa: lsa.map(|(i, j, k, v)| vec![LsaEntry { i, j, k, value: v.to_string() }]),
            tol,
            ..Default::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn documents_round_trip(d in doc_strategy()) {
        let text = d.to_toml();
        prop_assert_eq!(OperatorDoc::parse(&text).unwrap(), d);
    }
}
