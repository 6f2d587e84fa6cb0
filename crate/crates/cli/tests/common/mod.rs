#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_spatial-sim");

/// One small invocation of every generator subcommand.
pub const GENERATORS: &[&[&str]] = &[
    &["gaussian-ma", "--n", "32", "--r", "3"],
    &["torus", "--n", "32", "--c", "8", "--alpha", "1"],
    &["embed", "--model", "wavy", "--m", "8", "--n", "8"],
    &["embed", "--model", "custom", "--family", "gaussian", "--range", "0.2", "--m", "10", "--n", "12", "--dx", "0.05", "--dy", "0.05", "--padding", "4"],
    &["gmrf", "--m", "8"],
    &["poisson", "--mode", "invert"],
    &["poisson", "--mode", "thin", "--intensity", "homogeneous", "--level", "50"],
    &["marked", "--marks", "gamma:2:1"],
    &["hawkes", "--lambda", "30", "--alpha", "0.5"],
    &["matern", "--kappa", "10", "--alpha", "5", "--r", "0.05"],
    &["thomas", "--kappa", "10", "--alpha", "5", "--sigma", "0.02"],
    &["cox", "--n", "16", "--level", "50"],
    &["snox", "--alpha", "1", "--beta", "2", "--lambda", "0.1"],
    &["strauss-cond", "--n", "10", "--steps", "500"],
    &["strauss-rj", "--beta", "50", "--steps", "500"],
    &["wiener", "--n", "64"],
    &["fbm", "--n", "64", "--H", "0.7"],
    &["sheet", "--n", "16", "--H", "0.6"],
    &["fbf", "--m", "17", "--n", "17", "--H", "0.8"],
    &["levy-path", "--alpha", "5", "--eps", "0.1,0.01", "--steps", "20"],
    &["levy-sheet", "--n", "20", "--m", "10"],
];

pub fn run_bin(args: &[&str], seed: u64, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .args(["--seed", &seed.to_string(), "--out"])
        .arg(out)
        .output()
        .expect("binary runs")
}

/// Artifact files written under `dir`, sorted, excluding sidecars.
pub fn artifacts(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".meta.json"))
        .collect();
    v.sort();
    v
}
