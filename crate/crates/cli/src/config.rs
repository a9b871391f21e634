//! TOML run configuration.

use std::path::{Path, PathBuf};

use roadspoof_core::escape::EscapeParams;
use roadspoof_core::metrics::CoverageParams;
use roadspoof_core::signature::{SignatureParams, ThresholdSet};
use roadspoof_core::spoof::SpoofSearchParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeConfig {
    /// Cap on escape paths per spoofed path; omit for no cap.
    pub max_paths: Option<usize>,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        Self {
            max_paths: Some(1_000_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub trials: usize,
    /// Straight-line source to destination separation, meters.
    pub min_distance: f64,
    pub max_distance: f64,
    /// Walking radii written to the coverage table.
    pub coverage_radii: Vec<f64>,
    /// Number of spoofed paths whose escape sets feed each trial.
    pub spoofed_per_trial: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            trials: 10,
            min_distance: 1000.0,
            max_distance: 21000.0,
            coverage_radii: vec![50.0, 100.0, 200.0],
            spoofed_per_trial: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub osm_path: PathBuf,
    pub output_dir: PathBuf,
    pub cache_path: Option<PathBuf>,
    /// Label written to the `city` column.
    pub city: String,
    pub search: SpoofSearchParams,
    pub thresholds: ThresholdSet,
    pub signature: SignatureParams,
    pub escape: EscapeConfig,
    pub coverage: CoverageParams,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            osm_path: PathBuf::from("map.osm"),
            output_dir: PathBuf::from("out"),
            cache_path: None,
            city: "city".into(),
            search: SpoofSearchParams::default(),
            thresholds: ThresholdSet::default(),
            signature: SignatureParams::default(),
            escape: EscapeConfig::default(),
            coverage: CoverageParams::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config; relative paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.osm_path = base.join(&cfg.osm_path);
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.cache_path = cfg.cache_path.map(|p| base.join(p));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.osm_path.is_file() {
            return Err(CliError::InvalidConfig(format!(
                "osm_path {} does not exist",
                self.osm_path.display()
            )));
        }
        self.search
            .validate()
            .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        self.escape_params()
            .validate()
            .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        self.coverage
            .validate()
            .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        let ev = &self.eval;
        if !(ev.min_distance > 0.0 && ev.min_distance <= ev.max_distance && ev.max_distance.is_finite()) {
            return Err(CliError::InvalidConfig(
                "eval distances must satisfy 0 < min_distance <= max_distance".into(),
            ));
        }
        if ev.spoofed_per_trial == 0 {
            return Err(CliError::InvalidConfig(
                "eval.spoofed_per_trial must be at least 1".into(),
            ));
        }
        for &r in &ev.coverage_radii {
            let p = CoverageParams {
                walk_radius: r,
                ..self.coverage
            };
            p.validate().map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    pub fn escape_params(&self) -> EscapeParams {
        EscapeParams {
            thresholds: self.thresholds,
            signature: self.signature,
            max_paths: self.escape.max_paths.unwrap_or(usize::MAX),
        }
    }
}
