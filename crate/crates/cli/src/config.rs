//! Shared pipeline settings: defaults, optional JSON file, command-line flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lczmap::lczparams::{Scheme, DEFAULT_MIN_VALID, DEFAULT_PATCH_PIXELS};
use lczmap::pointcloud::{DEFAULT_CELLSIZE, DEFAULT_RADIUS};
use lczmap::{Error, Result};
use serde::{Deserialize, Serialize};

/// Where classification thresholds come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ThresholdSource {
    Table1,
    Table2,
    /// Fit from the labeled patches of the same run (pipeline only).
    Fit,
    File(PathBuf),
}

impl FromStr for ThresholdSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "table1" => ThresholdSource::Table1,
            "table2" => ThresholdSource::Table2,
            "fit" | "fitted" => ThresholdSource::Fit,
            "" => return Err(Error::Config("empty threshold source".into())),
            path => ThresholdSource::File(PathBuf::from(path)),
        })
    }
}

impl ThresholdSource {
    pub fn as_string(&self) -> String {
        match self {
            ThresholdSource::Table1 => "table1".into(),
            ThresholdSource::Table2 => "table2".into(),
            ThresholdSource::Fit => "fit".into(),
            ThresholdSource::File(p) => p.display().to_string(),
        }
    }
}

/// Settings as they may appear in a config file; absent fields fall back to
/// the defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialConfig {
    pub cellsize: Option<f64>,
    pub radius: Option<f64>,
    pub patch_pixels: Option<usize>,
    pub min_valid: Option<f64>,
    pub scheme: Option<Scheme>,
    pub thresholds: Option<String>,
    pub seed: Option<u64>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: PartialConfig) -> PartialConfig {
        PartialConfig {
            cellsize: over.cellsize.or(self.cellsize),
            radius: over.radius.or(self.radius),
            patch_pixels: over.patch_pixels.or(self.patch_pixels),
            min_valid: over.min_valid.or(self.min_valid),
            scheme: over.scheme.or(self.scheme),
            thresholds: over.thresholds.or(self.thresholds),
            seed: over.seed.or(self.seed),
        }
    }

    pub fn resolve(self) -> Result<PipelineConfig> {
        let cfg = PipelineConfig {
            cellsize: self.cellsize.unwrap_or(DEFAULT_CELLSIZE),
            radius: self.radius.unwrap_or(DEFAULT_RADIUS),
            patch_pixels: self.patch_pixels.unwrap_or(DEFAULT_PATCH_PIXELS),
            min_valid: self.min_valid.unwrap_or(DEFAULT_MIN_VALID),
            scheme: self.scheme.unwrap_or(Scheme::Gt),
            thresholds: self.thresholds.unwrap_or_else(|| "table1".into()),
            seed: self.seed.unwrap_or(42),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub cellsize: f64,
    pub radius: f64,
    pub patch_pixels: usize,
    pub min_valid: f64,
    pub scheme: Scheme,
    pub thresholds: String,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("cellsize", self.cellsize)?;
        positive("radius", self.radius)?;
        positive("min_valid", self.min_valid)?;
        if self.min_valid > 1.0 {
            return Err(Error::Config(format!(
                "min_valid must be at most 1, got {}",
                self.min_valid
            )));
        }
        if self.patch_pixels == 0 {
            return Err(Error::Config("patch_pixels must be positive".into()));
        }
        self.threshold_source()?;
        Ok(())
    }

    pub fn threshold_source(&self) -> Result<ThresholdSource> {
        self.thresholds.parse()
    }

    /// Writes the effective settings as pretty JSON.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
