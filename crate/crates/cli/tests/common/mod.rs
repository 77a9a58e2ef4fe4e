#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pivotforge"))
}

/// Runs the binary with `PIVOTFORGE_CONFIG` cleared.
pub fn pivotforge(args: &[&str]) -> Output {
    bin().args(args).env_remove("PIVOTFORGE_CONFIG").output().expect("spawn pivotforge")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Copies the pipeline fixture into `dir` and trains its language profiles.
pub fn pipeline_workspace(dir: &Path) -> PathBuf {
    for name in ["source.en.txt", "responses.uk.jsonl", "pipeline.toml"] {
        std::fs::copy(fixture(name), dir.join(name)).unwrap();
    }
    let o = pivotforge(&[
        "langid-train",
        p(&fixture("langid_train.tsv")),
        "-o",
        p(&dir.join("profiles.uk-en.tsv")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("pipeline.toml")
}
