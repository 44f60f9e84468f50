//! The shared TOML config: hyperparameters at the top level, bands under
//! `[bands]`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::{BandError, BandSpec};
use crate::engine::{EngineError, HyperParams};

static DEFAULT_CONFIG: &str = include_str!("../data/default_config.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Params(#[from] EngineError),
    #[error(transparent)]
    Bands(#[from] BandError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(flatten)]
    pub params: HyperParams,
    #[serde(default = "bundled_bands")]
    pub bands: BandSpec,
}

fn bundled_bands() -> BandSpec {
    Config::bundled().bands
}

impl Default for Config {
    fn default() -> Self {
        Config::bundled()
    }
}

impl Config {
    /// The config shipped with the crate.
    pub fn bundled() -> Config {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(flatten)]
            params: HyperParams,
            bands: BandSpec,
        }
        let raw: Raw = toml::from_str(DEFAULT_CONFIG).expect("bundled config parses");
        Config {
            params: raw.params,
            bands: raw.bands,
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Config, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.params.validate()?;
        cfg.bands.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        fs::write(path, self.to_toml()).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Writes `bands` alone as a `[bands]` document, for band generations
/// saved side by side (`bands_B1.toml`, `bands_B2.toml`, ...).
pub fn bands_to_toml(bands: &BandSpec) -> String {
    #[derive(Serialize)]
    struct Wrapper<'a> {
        bands: &'a BandSpec,
    }
    toml::to_string(&Wrapper { bands }).expect("bands always serialize")
}

pub fn bands_from_toml(text: &str, origin: &str) -> Result<BandSpec, ConfigError> {
    #[derive(Deserialize)]
    struct Wrapper {
        bands: BandSpec,
    }
    let w: Wrapper = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    w.bands.validate()?;
    Ok(w.bands)
}
