use std::process::Command;

fn ctxengage(root: &std::path::Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ctxengage"))
        .env("CTXENGAGE_ROOT", root)
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn synthgen_sample_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = ctxengage(dir.path(), &["synthgen", "--rows", "5000", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("raw/interactions.tsv").is_file());

    let flags = ["--dev", "--sampling-techniques", "random", "--import-datasets", "train,val"];
    let out = ctxengage(dir.path(), &[&["sample"], &flags[..]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "dataprep: 2 datasets written");

    let out = ctxengage(dir.path(), &[&["status"], &flags[..]].concat());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 12);
    assert!(text.contains("train_random_sample_1pct\tdataprep\tcomplete"));
    assert!(text.contains("val_random_sample_1pct\tfe00\tpending"));
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = ctxengage(dir.path(), &["stage", "fe09"]);
    assert!(!out.status.success());
    let out = ctxengage(dir.path(), &["--top-ns", "top_7", "status"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("top_7"));
}
