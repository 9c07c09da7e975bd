//! Detector presets and TOML configuration loading.
//!
//! A config file may name a `detector` preset; every other table overrides
//! individual keys of that preset:
//!
//! ```toml
//! detector = "second"
//!
//! [validity]
//! alpha_legit = 12.0
//!
//! [noise]            # output of `mot3d calibrate`
//! detector = "second"
//! var_x = 0.04
//! var_y = 0.015
//! ```

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::noise_model::NoiseModelFile;
use crate::tracker::{TrackerConfig, TrackerError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown detector preset {0:?} (known: {known})", known = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config value: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("{0} must be a table")]
    NotATable(String),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
}

pub const PRESET_NAMES: &[&str] = &["virconv", "casa", "pointrcnn", "pv-rcnn", "second"];

/// Per-detector noise variances and thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorPreset {
    pub name: &'static str,
    pub var_x: f64,
    pub var_y: f64,
    pub alpha_nconf: f64,
    pub alpha_conf: f64,
    pub alpha_legit: f64,
    pub sigma: f64,
}

const PRESETS: [DetectorPreset; 5] = [
    DetectorPreset {
        name: "virconv",
        var_x: 0.017221,
        var_y: 0.005901,
        alpha_nconf: 0.0,
        alpha_conf: -1.0,
        alpha_legit: 20.0,
        sigma: 4.0,
    },
    DetectorPreset {
        name: "casa",
        var_x: 0.034966,
        var_y: 0.019720,
        alpha_nconf: 0.0,
        alpha_conf: 0.0,
        alpha_legit: 25.0,
        sigma: 3.0,
    },
    DetectorPreset {
        name: "pointrcnn",
        var_x: 0.030874,
        var_y: 0.009379,
        alpha_nconf: 0.0,
        alpha_conf: 0.0,
        alpha_legit: 35.0,
        sigma: 4.0,
    },
    DetectorPreset {
        name: "pv-rcnn",
        var_x: 0.036383,
        var_y: 0.013067,
        alpha_nconf: 0.5,
        alpha_conf: 0.5,
        alpha_legit: 20.0,
        sigma: 2.0,
    },
    DetectorPreset {
        name: "second",
        var_x: 0.039156,
        var_y: 0.014357,
        alpha_nconf: -1.0,
        alpha_conf: -2.0,
        alpha_legit: 10.0,
        sigma: 3.0,
    },
];

/// Case-insensitive lookup; `_` and `-` are interchangeable.
pub fn preset(name: &str) -> Result<DetectorPreset, ConfigError> {
    let key = name.to_ascii_lowercase().replace('_', "-");
    let key = if key == "pvrcnn" { "pv-rcnn".to_string() } else { key };
    PRESETS
        .iter()
        .find(|p| p.name == key)
        .copied()
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

impl DetectorPreset {
    pub fn tracker_config(&self) -> TrackerConfig {
        let mut cfg = TrackerConfig::default();
        cfg.gate.alpha_conf = self.alpha_conf;
        cfg.gate.alpha_nconf = self.alpha_nconf;
        cfg.gate.sigma = self.sigma;
        cfg.assoc.sigma = self.sigma;
        cfg.validity.alpha_legit = self.alpha_legit;
        cfg.filter.d_var_x = self.var_x;
        cfg.filter.d_var_y = self.var_y;
        cfg
    }
}

#[derive(Debug, Deserialize)]
struct Envelope {
    detector: Option<String>,
    noise: Option<NoiseModelFile>,
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses a config document. Without a `detector` key the VirConv preset is
/// the base.
pub fn parse_config(text: &str) -> Result<TrackerConfig, ConfigError> {
    let mut doc: toml::Table = text.parse()?;
    let envelope: Envelope = toml::Value::Table(doc.clone()).try_into()?;
    doc.remove("detector");
    doc.remove("noise");

    let base = preset(envelope.detector.as_deref().unwrap_or("virconv"))?.tracker_config();
    let mut merged = toml::Table::try_from(base)?;
    merge(&mut merged, doc);
    let mut cfg: TrackerConfig = toml::Value::Table(merged).try_into()?;
    if let Some(noise) = envelope.noise {
        cfg.filter.d_var_x = noise.var_x;
        cfg.filter.d_var_y = noise.var_y;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<TrackerConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn to_toml(cfg: &TrackerConfig) -> Result<String, ConfigError> {
    Ok(toml::to_string_pretty(cfg)?)
}
