#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use gfock_cli::output::{read_csv, Table};
use serde_json::{Map, Value};

pub fn gf_sim<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_gf-sim"))
        .args(args)
        .env_remove("GF_SIM_THREADS")
        .output()
        .expect("gf-sim runs")
}

/// Runs `gf-sim` with `--out <dir>/<name>` and reads the CSV back.
pub fn run_csv(dir: &Path, name: &str, args: &[&str]) -> (Map<String, Value>, Table) {
    let path = dir.join(name);
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    full.push("--out".into());
    full.push(path.display().to_string());
    let out = gf_sim(&full);
    assert!(
        out.status.success(),
        "gf-sim {full:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).expect("output file written");
    read_csv(&text).expect("valid CSV")
}

pub fn number(meta: &Value, key: &str) -> f64 {
    meta.get(key)
        .and_then(Value::as_f64)
        .unwrap_or_else(|| panic!("metadata field {key} missing"))
}
