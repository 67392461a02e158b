//! Per-patch LCZ parameters from a land-cover mask and a height raster.
//!
//! Surface fractions count the pixels whose category belongs to a code set and
//! divide by the full window area, so NODATA pixels simply never match. The
//! height of roughness elements is the geometric mean of the heights over the
//! building pixels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geogrid::{tile_patches, CategoryRaster, Raster, Window};
use crate::scalar::{parse_scalar, Scalar};

pub const DEFAULT_PATCH_PIXELS: usize = 200;
pub const DEFAULT_MIN_VALID: f64 = 0.8;
/// Floor applied to heights before taking logarithms, in meters.
pub const HRE_LOG_FLOOR: f64 = 0.01;

/// Identifiers of the built-type LCZ classes.
pub const BUILT_LCZ: std::ops::RangeInclusive<u8> = 1..=10;

/// Category codes of the eight-class ground-truth land-cover scheme.
pub mod gt_codes {
    pub const TREE_CANOPY: u8 = 1;
    pub const GRASS_SHRUB: u8 = 2;
    pub const BARE_SOIL: u8 = 3;
    pub const WATER: u8 = 4;
    pub const BUILDINGS: u8 = 5;
    pub const ROADS: u8 = 6;
    pub const OTHER_PAVED: u8 = 7;
    pub const RAILROADS: u8 = 8;
}

/// The four modeled LCZ parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Bsf,
    Isf,
    Psf,
    Hre,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::Bsf, Param::Isf, Param::Psf, Param::Hre];

    pub fn name(self) -> &'static str {
        match self {
            Param::Bsf => "bsf",
            Param::Isf => "isf",
            Param::Psf => "psf",
            Param::Hre => "hre",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Value domain: fractions live in [0, 1], heights in [0, inf).
    pub fn domain(self) -> (f64, f64) {
        match self {
            Param::Hre => (0.0, f64::INFINITY),
            _ => (0.0, 1.0),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown parameter {s:?}")))
    }
}

/// Category codes counted by each surface fraction, plus the code whose
/// pixels define building heights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassIndexSets {
    bsf: BTreeSet<u8>,
    isf: BTreeSet<u8>,
    psf: BTreeSet<u8>,
    building: u8,
}

impl ClassIndexSets {
    pub fn new(bsf: BTreeSet<u8>, isf: BTreeSet<u8>, psf: BTreeSet<u8>, building: u8) -> Result<Self> {
        if !(bsf.is_disjoint(&isf) && bsf.is_disjoint(&psf) && isf.is_disjoint(&psf)) {
            return Err(Error::Domain("surface fraction code sets must be disjoint".into()));
        }
        if !bsf.contains(&building) {
            return Err(Error::Domain(format!(
                "building code {building} must belong to the BSF set"
            )));
        }
        if bsf.is_empty() || isf.is_empty() || psf.is_empty() {
            return Err(Error::Domain("surface fraction code sets must be non-empty".into()));
        }
        Ok(ClassIndexSets {
            bsf,
            isf,
            psf,
            building,
        })
    }

    /// Eight-class ground-truth scheme: BSF = {5}, ISF = {6, 7}, PSF = {1, 2, 3}.
    /// Water (4) and railroads (8) count toward no fraction.
    pub fn ground_truth() -> Self {
        use gt_codes::*;
        ClassIndexSets::new(
            BTreeSet::from([BUILDINGS]),
            BTreeSet::from([ROADS, OTHER_PAVED]),
            BTreeSet::from([TREE_CANOPY, GRASS_SHRUB, BARE_SOIL]),
            BUILDINGS,
        )
        .expect("ground-truth sets are valid")
    }

    pub fn bsf(&self) -> &BTreeSet<u8> {
        &self.bsf
    }

    pub fn isf(&self) -> &BTreeSet<u8> {
        &self.isf
    }

    pub fn psf(&self) -> &BTreeSet<u8> {
        &self.psf
    }

    pub fn building_code(&self) -> u8 {
        self.building
    }

    pub fn codes(&self, param: Param) -> Option<&BTreeSet<u8>> {
        match param {
            Param::Bsf => Some(&self.bsf),
            Param::Isf => Some(&self.isf),
            Param::Psf => Some(&self.psf),
            Param::Hre => None,
        }
    }
}

/// Land-cover scheme of an input mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Gt,
    Noisy,
}

impl Scheme {
    pub fn index_sets(self) -> ClassIndexSets {
        match self {
            Scheme::Gt => ClassIndexSets::ground_truth(),
            Scheme::Noisy => crate::autolabel::noisy_index_sets(),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gt" => Ok(Scheme::Gt),
            "noisy" => Ok(Scheme::Noisy),
            _ => Err(Error::Config(format!("unknown scheme {s:?} (expected gt or noisy)"))),
        }
    }
}

/// `[BSF, ISF, PSF, HRE]`. HRE is `None` for patches without building pixels.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ParamVector<T> {
    pub bsf: T,
    pub isf: T,
    pub psf: T,
    pub hre: Option<T>,
}

impl<T: Scalar> ParamVector<T> {
    pub fn new(bsf: T, isf: T, psf: T, hre: Option<T>) -> Self {
        ParamVector { bsf, isf, psf, hre }
    }

    pub fn get(&self, param: Param) -> Option<T> {
        match param {
            Param::Bsf => Some(self.bsf),
            Param::Isf => Some(self.isf),
            Param::Psf => Some(self.psf),
            Param::Hre => self.hre,
        }
    }

    pub fn set(&mut self, param: Param, value: Option<T>) {
        match param {
            Param::Bsf => self.bsf = value.unwrap_or_else(T::zero),
            Param::Isf => self.isf = value.unwrap_or_else(T::zero),
            Param::Psf => self.psf = value.unwrap_or_else(T::zero),
            Param::Hre => self.hre = value,
        }
    }

    pub fn fraction_sum(&self) -> T {
        self.bsf + self.isf + self.psf
    }
}

/// Position of a patch in the patch grid, printed as `r{row}c{col}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchId {
    pub row: usize,
    pub col: usize,
}

impl PatchId {
    pub fn new(row: usize, col: usize) -> Self {
        PatchId { row, col }
    }

    pub fn of_window(w: &Window) -> Self {
        PatchId::new(w.patch_row, w.patch_col)
    }
}

impl fmt::Display for PatchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}c{}", self.row, self.col)
    }
}

impl FromStr for PatchId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Labeling(format!("malformed patch id {s:?} (expected r<row>c<col>)"));
        let rest = s.strip_prefix('r').ok_or_else(bad)?;
        let (row, col) = rest.split_once('c').ok_or_else(bad)?;
        let digits = |t: &str| {
            (!t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()))
                .then(|| t.parse().ok())
                .flatten()
        };
        Ok(PatchId::new(digits(row).ok_or_else(bad)?, digits(col).ok_or_else(bad)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchSample<T> {
    pub patch_id: PatchId,
    /// Pixel extent, when the sample came from rasters rather than a CSV dump.
    pub window: Option<Window>,
    pub params: ParamVector<T>,
    pub lcz: Option<u8>,
    pub valid_fraction: T,
}

fn check_window(mask: &CategoryRaster, window: &Window) -> Result<()> {
    if window.size == 0 {
        return Err(Error::Domain("empty window".into()));
    }
    if !window.fits(&mask.header) {
        return Err(Error::Domain(format!("window {window:?} exceeds the grid")));
    }
    Ok(())
}

/// Fraction of the window's pixels whose code is in `codes`.
pub fn surface_fraction<T: Scalar>(mask: &CategoryRaster, window: &Window, codes: &BTreeSet<u8>) -> Result<T> {
    check_window(mask, window)?;
    if codes.is_empty() {
        return Err(Error::Domain("empty code set".into()));
    }
    let mut lookup = [false; 256];
    for &c in codes {
        lookup[usize::from(c)] = true;
    }
    let hits = window
        .indices(&mask.header)
        .filter(|&i| mask.at(i).is_some_and(|c| lookup[usize::from(c)]))
        .count();
    Ok(T::of_usize(hits) / T::of_usize(window.pixel_count()))
}

/// Fraction of non-NODATA mask pixels in the window.
pub fn valid_fraction<T: Scalar>(mask: &CategoryRaster, window: &Window) -> Result<T> {
    check_window(mask, window)?;
    let valid = window.indices(&mask.header).filter(|&i| mask.at(i).is_some()).count();
    Ok(T::of_usize(valid) / T::of_usize(window.pixel_count()))
}

/// Geometric mean of the heights over building pixels with valid elevation,
/// each floored at [`HRE_LOG_FLOOR`]. `None` when there are no such pixels.
///
/// A window whose building heights are all equal returns that height as is,
/// and the result is clamped to the range of the (floored) heights.
pub fn hre<T: Scalar>(
    mask: &CategoryRaster,
    elev: &Raster<T>,
    window: &Window,
    building_code: u8,
) -> Result<Option<T>> {
    mask.header.ensure_aligned(&elev.header, "mask vs elevation")?;
    check_window(mask, window)?;
    let floor = T::of(HRE_LOG_FLOOR);
    let mut m = 0usize;
    let mut log_sum = T::zero();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in window.indices(&mask.header) {
        if mask.at(i) != Some(building_code) {
            continue;
        }
        let Some(h) = elev.at(i) else { continue };
        let h = h.max(floor);
        m += 1;
        log_sum = log_sum + h.ln();
        lo = lo.min(h);
        hi = hi.max(h);
    }
    if m == 0 {
        return Ok(None);
    }
    if lo == hi {
        return Ok(Some(lo));
    }
    let g = (log_sum / T::of_usize(m)).exp();
    Ok(Some(g.max(lo).min(hi)))
}

/// All four parameters for one window.
pub fn compute_params<T: Scalar>(
    mask: &CategoryRaster,
    elev: &Raster<T>,
    window: &Window,
    sets: &ClassIndexSets,
) -> Result<ParamVector<T>> {
    Ok(ParamVector {
        bsf: surface_fraction(mask, window, sets.bsf())?,
        isf: surface_fraction(mask, window, sets.isf())?,
        psf: surface_fraction(mask, window, sets.psf())?,
        hre: hre(mask, elev, window, sets.building_code())?,
    })
}

/// Per-patch LCZ labels.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelSource {
    /// `patch_id -> lcz` pairs from a labels CSV.
    Table(BTreeMap<PatchId, u8>),
    /// One cell per patch; NODATA cells are unlabeled.
    Raster(CategoryRaster),
}

impl LabelSource {
    fn lookup(&self, id: PatchId) -> Option<u8> {
        match self {
            LabelSource::Table(map) => map.get(&id).copied(),
            LabelSource::Raster(r) => r.get(id.row, id.col),
        }
    }

    fn validate(&self, prows: usize, pcols: usize) -> Result<()> {
        match self {
            LabelSource::Table(map) => {
                for (id, &lcz) in map {
                    if id.row >= prows || id.col >= pcols {
                        return Err(Error::Labeling(format!(
                            "label for unknown patch {id} (patch grid is {prows}x{pcols})"
                        )));
                    }
                    check_lcz(lcz)?;
                }
            }
            LabelSource::Raster(r) => {
                if r.header.nrows != prows || r.header.ncols != pcols {
                    return Err(Error::Labeling(format!(
                        "label raster is {}x{}, patch grid is {prows}x{pcols}",
                        r.header.nrows, r.header.ncols
                    )));
                }
                for i in 0..r.header.len() {
                    if let Some(lcz) = r.at(i) {
                        check_lcz(lcz)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_lcz(lcz: u8) -> Result<()> {
    if BUILT_LCZ.contains(&lcz) {
        Ok(())
    } else {
        Err(Error::Labeling(format!("LCZ {lcz} outside 1..=10")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub patch_pixels: usize,
    pub min_valid: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            patch_pixels: DEFAULT_PATCH_PIXELS,
            min_valid: DEFAULT_MIN_VALID,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedPatch {
    pub patch_id: PatchId,
    pub valid_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub samples: Vec<PatchSample<T>>,
    pub skipped: Vec<SkippedPatch>,
}

/// Tiles the rasters into patches and computes one sample per patch with
/// enough valid pixels, in row-major patch order.
pub fn extract_dataset<T: Scalar>(
    mask: &CategoryRaster,
    elev: &Raster<T>,
    labels: Option<&LabelSource>,
    sets: &ClassIndexSets,
    opts: &ExtractOptions,
) -> Result<Dataset<T>> {
    mask.header.ensure_aligned(&elev.header, "mask vs elevation")?;
    if opts.patch_pixels == 0 {
        return Err(Error::Config("patch_pixels must be positive".into()));
    }
    if !(0.0..=1.0).contains(&opts.min_valid) {
        return Err(Error::Config(format!(
            "min_valid must lie in [0, 1], got {}",
            opts.min_valid
        )));
    }
    let windows = tile_patches(&mask.header, opts.patch_pixels);
    if let Some(labels) = labels {
        labels.validate(
            mask.header.nrows / opts.patch_pixels,
            mask.header.ncols / opts.patch_pixels,
        )?;
    }
    let results: Vec<Result<std::result::Result<PatchSample<T>, SkippedPatch>>> = windows
        .par_iter()
        .map(|w| {
            let patch_id = PatchId::of_window(w);
            let valid: T = valid_fraction(mask, w)?;
            if valid.as_f64() < opts.min_valid {
                return Ok(Err(SkippedPatch {
                    patch_id,
                    valid_fraction: valid.as_f64(),
                }));
            }
            Ok(Ok(PatchSample {
                patch_id,
                window: Some(*w),
                params: compute_params(mask, elev, w, sets)?,
                lcz: labels.and_then(|l| l.lookup(patch_id)),
                valid_fraction: valid,
            }))
        })
        .collect();
    let mut dataset = Dataset {
        samples: Vec::new(),
        skipped: Vec::new(),
    };
    for r in results {
        match r? {
            Ok(s) => dataset.samples.push(s),
            Err(s) => dataset.skipped.push(s),
        }
    }
    Ok(dataset)
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn expect_header(reader: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

pub(crate) fn parse_lcz_field(tok: &str, source: &str, line: usize) -> Result<Option<u8>> {
    if tok.is_empty() {
        return Ok(None);
    }
    let lcz: u8 = tok
        .parse()
        .map_err(|_| Error::parse(source, line, format!("invalid LCZ {tok:?}")))?;
    check_lcz(lcz).map_err(|e| Error::parse(source, line, e.to_string()))?;
    Ok(Some(lcz))
}

/// Reads `patch_id,lcz` rows.
pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<BTreeMap<PatchId, u8>> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let mut reader = open_csv(path)?;
    expect_header(&mut reader, path, &["patch_id", "lcz"])?;
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let id: PatchId = record[0]
            .trim()
            .parse()
            .map_err(|e: Error| Error::parse(&source, line, e.to_string()))?;
        let lcz = parse_lcz_field(record[1].trim(), &source, line)?
            .ok_or_else(|| Error::parse(&source, line, "missing LCZ"))?;
        if out.insert(id, lcz).is_some() {
            return Err(Error::parse(&source, line, format!("duplicate patch id {id}")));
        }
    }
    Ok(out)
}

pub fn write_labels_csv(path: impl AsRef<Path>, labels: &BTreeMap<PatchId, u8>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["patch_id", "lcz"])?;
    for (id, lcz) in labels {
        w.write_record([id.to_string(), lcz.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const PARAMS_HEADER: [&str; 7] = ["patch_id", "bsf", "isf", "psf", "hre", "lcz", "valid_fraction"];

/// Writes `patch_id,bsf,isf,psf,hre,lcz,valid_fraction`; missing HRE and
/// missing labels are empty fields.
pub fn write_params_csv<T: Scalar>(path: impl AsRef<Path>, samples: &[PatchSample<T>]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(PARAMS_HEADER)?;
    for s in samples {
        w.write_record([
            s.patch_id.to_string(),
            s.params.bsf.to_string(),
            s.params.isf.to_string(),
            s.params.psf.to_string(),
            s.params.hre.map(|h| h.to_string()).unwrap_or_default(),
            s.lcz.map(|z| z.to_string()).unwrap_or_default(),
            s.valid_fraction.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_params_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<PatchSample<T>>> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let mut reader = open_csv(path)?;
    expect_header(&mut reader, path, &PARAMS_HEADER)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        let field = |i: usize| record[i].trim();
        let real = |i: usize| -> Result<T> {
            parse_scalar::<T>(field(i))
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(&source, line, format!("invalid {} {:?}", PARAMS_HEADER[i], field(i))))
        };
        let patch_id: PatchId = field(0)
            .parse()
            .map_err(|e: Error| Error::parse(&source, line, e.to_string()))?;
        let hre = if field(4).is_empty() { None } else { Some(real(4)?) };
        out.push(PatchSample {
            patch_id,
            window: None,
            params: ParamVector::new(real(1)?, real(2)?, real(3)?, hre),
            lcz: parse_lcz_field(field(5), &source, line)?,
            valid_fraction: real(6)?,
        });
    }
    Ok(out)
}
