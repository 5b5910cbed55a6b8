#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tokennet"))
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn tokennet")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Every command of the pipeline on the synthetic fixture, writing into `out`.
pub fn run_pipeline(out: &Path) {
    let config = fixture_dir().join("config.toml");
    let base = ["--config", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    for cmd in [
        &["build"][..],
        &["analyze"],
        &["temporal"],
        &["export", "--format", "gexf", "--backbone"],
        &["export", "--format", "dot"],
    ] {
        let result = run(&[&base[..], cmd].concat());
        assert!(result.status.success(), "{cmd:?} failed: {}", stderr(&result));
    }
}

/// SHA-256 of every output except the run config (which records `out_dir`).
pub fn output_hashes(dir: &Path) -> BTreeMap<String, String> {
    let mut hashes = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name == "config.toml" || name == "SHA256SUMS" {
            continue;
        }
        let digest = Sha256::digest(std::fs::read(&path).unwrap());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hashes.insert(name, hex);
    }
    hashes
}

pub fn read_manifest(path: &Path) -> BTreeMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .filter_map(|l| l.split_once("  "))
        .map(|(h, n)| (n.to_string(), h.to_string()))
        .collect()
}

pub fn write_manifest(path: &Path, hashes: &BTreeMap<String, String>) {
    let body: String = hashes.iter().map(|(n, h)| format!("{h}  {n}\n")).collect();
    std::fs::write(path, body).unwrap();
}
