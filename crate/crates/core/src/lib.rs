//! Rule-based Local Climate Zone (LCZ) mapping.
//!
//! The pipeline turns LiDAR point clouds and land-cover masks into per-patch
//! parameter vectors (building, impervious and pervious surface fractions plus
//! the height of roughness elements), classifies each patch by interval
//! membership against a threshold table, and evaluates and renders the result.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases at the
//! crate root fix the scalar to `f64`, which is what the command-line tool uses.

pub mod autolabel;
pub mod error;
pub mod geogrid;
pub mod lczparams;
pub mod lczrules;
pub mod pointcloud;
pub mod report;
pub mod scalar;
pub mod synthcity;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use autolabel::{derive_noisy_mask, noisy_index_sets, LabelRuleConfig, NoisyClass};
pub use geogrid::{tile_patches, CategoryRaster, GridHeader, Window};
pub use lczparams::{ClassIndexSets, PatchId};
pub use lczrules::{Param, PredictionSet, Provenance};
pub use report::LczPalette;

/// Real-valued raster with `f64` cells.
pub type Raster = geogrid::Raster<f64>;
/// Per-cell point statistics with `f64` cells.
pub type StatsStack = pointcloud::StatsStack<f64>;
/// LiDAR point with `f64` coordinates.
pub type Point3 = pointcloud::Point3<f64>;
/// Parameter vector `[BSF, ISF, PSF, HRE]` in `f64`.
pub type ParamVector = lczparams::ParamVector<f64>;
/// One classification unit in `f64`.
pub type PatchSample = lczparams::PatchSample<f64>;
/// Closed interval in `f64`.
pub type Interval = lczrules::Interval<f64>;
/// Threshold table in `f64`.
pub type ThresholdTable = lczrules::ThresholdTable<f64>;
/// Result of fitting thresholds in `f64`.
pub type FitSummary = lczrules::FitSummary<f64>;
/// Coverage-based accuracy report in `f64`.
pub type AccuracyReport = lczrules::AccuracyReport<f64>;
