//! Heuristic land-cover masks from LiDAR statistics.
//!
//! Produces a coarse four-category mask (background, trees, buildings, roads)
//! from the mean and standard deviation of heights above ground. The rules are
//! a configurable stand-in; only their output categories matter downstream.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geogrid::CategoryRaster;
use crate::lczparams::ClassIndexSets;
use crate::pointcloud::StatsStack;
use crate::scalar::Scalar;

/// NODATA sentinel written into noisy masks' headers; never used by cells.
pub const NOISY_NODATA: i32 = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum NoisyClass {
    Background = 0,
    Trees = 1,
    Buildings = 2,
    Roads = 3,
}

impl NoisyClass {
    pub const ALL: [NoisyClass; 4] = [
        NoisyClass::Background,
        NoisyClass::Trees,
        NoisyClass::Buildings,
        NoisyClass::Roads,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelRuleConfig {
    pub building_min_height: f64,
    pub building_max_std: f64,
    pub tree_min_height: f64,
    pub tree_min_std: f64,
    pub road_max_height: f64,
    pub road_max_std: f64,
    pub min_count: u32,
}

impl Default for LabelRuleConfig {
    fn default() -> Self {
        LabelRuleConfig {
            building_min_height: 3.0,
            building_max_std: 1.5,
            tree_min_height: 2.0,
            tree_min_std: 1.5,
            road_max_height: 0.5,
            road_max_std: 0.3,
            min_count: 1,
        }
    }
}

impl LabelRuleConfig {
    pub fn validate(&self) -> Result<()> {
        let thresholds = [
            ("building_min_height", self.building_min_height),
            ("building_max_std", self.building_max_std),
            ("tree_min_height", self.tree_min_height),
            ("tree_min_std", self.tree_min_std),
            ("road_max_height", self.road_max_height),
            ("road_max_std", self.road_max_std),
        ];
        for (name, v) in thresholds {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Reads a JSON object with any subset of the fields; the rest default.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: LabelRuleConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// First matching rule wins: buildings, then trees, then roads.
    pub fn classify_cell(&self, mean: f64, std: f64) -> NoisyClass {
        if mean >= self.building_min_height && std <= self.building_max_std {
            NoisyClass::Buildings
        } else if mean >= self.tree_min_height && std >= self.tree_min_std {
            NoisyClass::Trees
        } else if mean <= self.road_max_height && std <= self.road_max_std {
            NoisyClass::Roads
        } else {
            NoisyClass::Background
        }
    }
}

/// Derives the four-category mask. Cells without enough points, or with
/// NODATA statistics, are background.
pub fn derive_noisy_mask<T: Scalar>(stats: &StatsStack<T>, cfg: &LabelRuleConfig) -> Result<CategoryRaster> {
    stats.ensure_aligned()?;
    cfg.validate()?;
    let header = *stats.header();
    let codes: Vec<i32> = (0..header.len())
        .into_par_iter()
        .map(|i| {
            let count = stats.count.at(i).map_or(0.0, Scalar::as_f64);
            let class = match (stats.mean.at(i), stats.std.at(i)) {
                (Some(mean), Some(std)) if count >= f64::from(cfg.min_count) && count > 0.0 => {
                    cfg.classify_cell(mean.as_f64(), std.as_f64())
                }
                _ => NoisyClass::Background,
            };
            i32::from(class.code())
        })
        .collect();
    CategoryRaster::new(header, NOISY_NODATA, codes)
}

/// Surface-fraction index sets for the noisy scheme: buildings feed BSF,
/// roads feed ISF, background and trees feed PSF.
pub fn noisy_index_sets() -> ClassIndexSets {
    ClassIndexSets::new(
        BTreeSet::from([NoisyClass::Buildings.code()]),
        BTreeSet::from([NoisyClass::Roads.code()]),
        BTreeSet::from([NoisyClass::Background.code(), NoisyClass::Trees.code()]),
        NoisyClass::Buildings.code(),
    )
    .expect("noisy index sets are disjoint")
}
