//! End-to-end runs of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detmoments")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sepprob_reports_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["sepprob", "--alpha", "1", "--tol", "1e-12", "--no-timestamp"]);
    assert!(stdout.contains("8/33"), "{stdout}");
    let doc = json(&dir.path().join("sepprob.json"));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "sepprob");
    assert_eq!(doc["config"]["alpha"], "1");
    assert_eq!(doc["result"]["simplest_rational_in_bracket"], "8/33");
    assert!(doc.get("generated_at_unix").is_none());
}

#[test]
fn every_subcommand_writes_its_output() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 8] = [
        (&["moments", "--family", "det-bures", "--n-moments", "5"], "moments.csv"),
        (&["sepprob", "--alpha", "1/2"], "sepprob.json"),
        (&["reconstruct", "--n-moments", "60", "--at", "0,1/512", "--cdf", "0:1/256"], "reconstruct.json"),
        (&["intercept-scan", "--alphas", "1,2", "--n-moments", "80", "--cumulative"], "intercept-scan.csv"),
        (&["fisher", "--n-moments", "40", "--nodes", "40"], "fisher.json"),
        (
            &["fisher-compare", "--alphas", "1:3:1", "--n-p", "40", "--n-q", "40", "--nodes", "40"],
            "fisher-compare.json",
        ),
        (&["ratfind", "--decimal", "0.242424242424", "--max-denominator", "100"], "ratfind.json"),
        (&["mc", "--samples", "2000", "--bins", "50"], "mc.json"),
    ];
    for (args, file) in cases {
        let mut full = args.to_vec();
        full.extend(["--plot-data", "plot.csv"]);
        ok(dir.path(), &full);
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        assert!(text.contains(args[0]), "{file} lacks the command name");
        let plot = fs::read_to_string(dir.path().join("plot.csv")).unwrap();
        assert!(plot.lines().any(|l| l == "x,y"), "{file}: plot header");
        assert!(plot.lines().count() > 2, "{file}: plot rows");
    }
}

#[test]
fn csv_has_config_echo_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["moments", "--family", "det-hs", "--alpha", "1/2", "--n-moments", "2", "--no-timestamp"]);
    let text = fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert!(text.contains("# config family=det-hs"));
    assert!(text.contains("# config alpha=1/2"));
    assert!(text.contains("order,numerator,denominator,decimal"));
    assert!(text.contains("1,1,2288,"));
}

#[test]
fn reruns_are_byte_identical() {
    let runs: Vec<(String, String)> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            fs::write(dir.path().join("run.cfg"), "samples = 20000\nseed = 9\nworkers = 2\nno_timestamp = true\n")
                .unwrap();
            ok(dir.path(), &["mc", "--config", "run.cfg"]);
            ok(dir.path(), &["intercept-scan", "--alphas", "1,2", "--n-moments", "50", "--no-timestamp"]);
            let read = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap();
            (read("mc.json"), read("intercept-scan.csv"))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.cfg"), "# alpha two\nalpha=2\ntol=1e-10\n").unwrap();
    let stdout = ok(dir.path(), &["sepprob", "--config", "p.cfg"]);
    assert!(stdout.contains("26/323"), "{stdout}");
    let stdout = ok(dir.path(), &["sepprob", "--config", "p.cfg", "--alpha", "1/2"]);
    assert!(stdout.contains("29/64"), "{stdout}");
    let doc = json(&dir.path().join("sepprob.json"));
    assert_eq!(doc["config"]["tol"], "1e-10");
    assert_eq!(doc["config"]["alpha"], "1/2");
}

#[test]
fn errors_exit_nonzero_without_output() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["sepprob", "--alpha", "1/3"][..],
        &["reconstruct", "--at", "1"][..],
        &["moments", "--family", "nope"][..],
        &["ratfind", "--decimal", "abc"][..],
    ] {
        let out = run(dir.path(), args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0, "no files left behind");
    let out = run(dir.path(), &["sepprob", "--config", "missing.cfg"]);
    assert!(!out.status.success());
}

#[test]
fn help_lists_all_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["--help"]);
    for cmd in ["moments", "sepprob", "reconstruct", "intercept-scan", "fisher", "fisher-compare", "ratfind", "mc"] {
        assert!(stdout.contains(cmd), "{cmd}");
    }
    let stdout = ok(dir.path(), &["intercept-scan", "--help"]);
    assert!(stdout.contains("alpha,intercept,derivative,log_intercept"));
}
