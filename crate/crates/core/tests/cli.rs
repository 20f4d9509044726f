use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subspace-sdp"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cli_test_{}_{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn bound_json_reports_388() {
    let out = bin().args(["bound", "--q", "2", "--n", "7", "--d", "4", "--format", "json"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cell = &v["cells"][0];
    assert_eq!(cell["bound"], "388");
    assert_eq!(cell["matches_printed"], true);
    assert_eq!(v["run"]["mode"], "certified");
    assert_eq!(v["run"]["precision"], 256);
}

#[test]
fn bound_exports_a_readable_sdpa_file() {
    let dir = scratch("export");
    let path = dir.join("p.dat-s");
    let out = bin()
        .args(["bound", "--q", "2", "--n", "6", "--d", "4", "--mode", "fast", "--export-sdpa"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = subspace_sdp::sdpa::read_sdpa(&path, 256).unwrap();
    assert!(data.num_vars() > 0);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn table_journal_resumes_without_recomputing() {
    let dir = scratch("journal");
    let journal = dir.join("cells.jsonl");
    let csv = dir.join("t.csv");
    let args = |out: &PathBuf| {
        let mut c = bin();
        c.args(["table", "--q", "2", "--n", "6..7", "--d", "3..5", "--mode", "fast", "--format", "csv", "--journal"])
            .arg(&journal)
            .arg("--out")
            .arg(out);
        c
    };
    assert!(args(&csv).status().unwrap().success());
    let first = std::fs::read_to_string(&csv).unwrap();
    let lines = std::fs::read_to_string(&journal).unwrap().lines().count();
    assert_eq!(first.lines().filter(|l| l.starts_with("2,")).count(), 6);
    assert_eq!(lines, 6);
    let csv2 = dir.join("t2.csv");
    assert!(args(&csv2).status().unwrap().success());
    assert_eq!(std::fs::read_to_string(&journal).unwrap().lines().count(), lines);
    assert_eq!(std::fs::read_to_string(&csv2).unwrap(), first);
    assert!(first.contains("2,7,4,388,"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn verify_oracle_suite_passes() {
    let out = bin().args(["verify", "--suite", "oracle", "--format", "json"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("oracle"));
}

#[test]
fn bad_input_exits_nonzero() {
    for args in [
        vec!["bound", "--q", "6", "--n", "7", "--d", "4"],
        vec!["bound", "--q", "2", "--n", "7", "--d", "9"],
        vec!["bound", "--q", "2", "--n", "7", "--d", "4", "--precision", "64"],
        vec!["bound", "--q", "2", "--n", "7", "--d", "4", "--bounds", "/nonexistent/bounds.json"],
        vec!["table", "--q", "2", "--n", "x..y", "--d", "3"],
        vec!["frobnicate"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} printed no error");
    }
}
