#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dqi_core::bands::{Band, BandSpec};
use dqi_core::config::Config;

pub fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/fixture_snli12.jsonl")
}

pub fn dqi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqi"))
        .args(args)
        .env("DQI_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// The bundled config with every band wide enough to be green.
pub fn all_green_config() -> Config {
    let mut cfg = Config::bundled();
    let entries = cfg
        .bands
        .entries
        .keys()
        .map(|k| (k.clone(), Band::center(-2e12, -1e12, 1e12, 2e12)))
        .collect();
    cfg.bands = BandSpec::new(cfg.bands.reference_size, entries);
    cfg
}
