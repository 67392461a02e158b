//! Synthetic patches and scenes with planted LCZ parameters.
//!
//! Patches use the eight-class ground-truth scheme: buildings (5) are laid out
//! as rectangular blocks at one height, followed by roads (6), pervious cover
//! (1 or 2) and water (4) as the category no fraction counts. Pixel counts are
//! rounded from the targets, so planted fractions are met to within half a
//! pixel of area.
//!
//! All randomness comes from PCG-64 (XSL RR 128/64) seeded through
//! `SeedableRng::seed_from_u64`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geogrid::{CategoryRaster, GridHeader, Raster, Window};
use crate::lczparams::{compute_params, gt_codes, write_labels_csv, ClassIndexSets, ParamVector, PatchId};
use crate::lczrules::{Interval, Param, ThresholdTable};
use crate::pointcloud::Point3;
use crate::scalar::Scalar;

/// Identity of the pseudo-random generator, recorded in scene metadata.
pub const GENERATOR: &str = "pcg64 (PCG XSL RR 128/64), seed_from_u64";
/// Finite span assumed for half-infinite intervals when sampling targets.
pub const OPEN_INTERVAL_SPAN: f64 = 5.0;
/// Largest allowed gap between a planted and an achieved surface fraction.
pub const FRACTION_TOLERANCE: f64 = 0.01;
/// Elevation jitter of generated points, in meters.
pub const POINT_JITTER_STD: f64 = 0.05;
pub const DEFAULT_DENSITY: f64 = 10.0;
pub const SYNTH_MASK_NODATA: i32 = 255;
pub const SYNTH_ELEV_NODATA: f64 = -9999.0;

const MIN_BLOCK_PIXELS: usize = 8;
const MAX_BLOCK_PIXELS: usize = 24;
const MAX_SAMPLING_ATTEMPTS: usize = 10_000;

/// How building heights are assigned within a patch.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum HeightMode {
    /// Every building at the target HRE, which is then reproduced exactly.
    #[default]
    Single,
    /// Alternate blocks at `hre * ratio` and `hre / ratio`.
    Mixed { ratio: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchSpec<T> {
    pub lcz: u8,
    pub target_params: ParamVector<T>,
    pub seed: u64,
    pub height_mode: HeightMode,
}

/// Finite sampling range for an interval: half-infinite ends are cut
/// [`OPEN_INTERVAL_SPAN`] away from the finite one.
pub fn effective_range<T: Scalar>(iv: &Interval<T>) -> (f64, f64) {
    let (lo, hi) = (iv.lo.as_f64(), iv.hi.as_f64());
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo + OPEN_INTERVAL_SPAN),
        (false, true) => (hi - OPEN_INTERVAL_SPAN, hi),
        (false, false) => (0.0, OPEN_INTERVAL_SPAN),
    }
}

impl<T: Scalar> PatchSpec<T> {
    pub fn new(lcz: u8, target_params: ParamVector<T>, seed: u64) -> Result<Self> {
        let spec = PatchSpec {
            lcz,
            target_params,
            seed,
            height_mode: HeightMode::Single,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Draws targets uniformly from the central half of each of the class's
    /// intervals, redrawing until the surface fractions sum to at most one.
    pub fn sample(table: &ThresholdTable<T>, lcz: u8, seed: u64) -> Result<Self> {
        let row = table
            .row(lcz)
            .ok_or_else(|| Error::Spec(format!("LCZ {lcz} is not in the threshold table")))?;
        let mut rng = Pcg64::seed_from_u64(seed);
        let central = row.map(|iv| {
            let (lo, hi) = effective_range(&iv);
            let quarter = (hi - lo) / 4.0;
            (lo + quarter, hi - quarter)
        });
        let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
        for _ in 0..MAX_SAMPLING_ATTEMPTS {
            let v = central.map(&mut draw);
            if v[0] + v[1] + v[2] <= 1.0 {
                let target = ParamVector::new(T::of(v[0]), T::of(v[1]), T::of(v[2]), Some(T::of(v[3])));
                return PatchSpec::new(lcz, target, seed);
            }
        }
        Err(Error::Spec(format!(
            "LCZ {lcz}: could not draw surface fractions summing to at most 1"
        )))
    }

    pub fn with_height_mode(mut self, mode: HeightMode) -> Result<Self> {
        self.height_mode = mode;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let t = &self.target_params;
        let fractions = [t.bsf, t.isf, t.psf].map(Scalar::as_f64);
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Spec(format!("surface fractions {fractions:?} outside [0, 1]")));
        }
        if fractions.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::Spec(format!(
                "surface fractions sum to {} > 1",
                fractions.iter().sum::<f64>()
            )));
        }
        match t.hre {
            Some(h) if h.as_f64() > 0.0 && h.is_finite() => {}
            None if t.bsf == T::zero() => {}
            _ => return Err(Error::Spec("HRE must be positive when buildings are planted".into())),
        }
        if let HeightMode::Mixed { ratio } = self.height_mode {
            if !(ratio >= 1.0 && ratio.is_finite()) {
                return Err(Error::Spec(format!("mixed height ratio must be >= 1, got {ratio}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedPatch<T> {
    pub mask: CategoryRaster,
    pub elev: Raster<T>,
    /// Parameters measured on the generated rasters.
    pub achieved: ParamVector<T>,
}

fn patch_header(patch_pixels: usize, cellsize: f64) -> Result<GridHeader> {
    GridHeader::new(patch_pixels, patch_pixels, 0.0, 0.0, cellsize)
}

fn whole_window(n: usize) -> Window {
    Window {
        row: 0,
        col: 0,
        size: n,
        patch_row: 0,
        patch_col: 0,
    }
}

/// Generates one `patch_pixels`-square patch.
pub fn gen_patch<T: Scalar>(spec: &PatchSpec<T>, patch_pixels: usize, cellsize: f64) -> Result<GeneratedPatch<T>> {
    spec.validate()?;
    if patch_pixels == 0 {
        return Err(Error::Spec("patch_pixels must be positive".into()));
    }
    let n = patch_pixels;
    let area = n * n;
    let t = &spec.target_params;
    let count = |f: T| ((f.as_f64() * area as f64).round() as usize).min(area);
    let buildings = count(t.bsf);
    let roads = count(t.isf).min(area - buildings);
    let pervious = count(t.psf).min(area - buildings - roads);

    let mut rng = Pcg64::seed_from_u64(spec.seed);
    let block = rng.random_range(MIN_BLOCK_PIXELS..=MAX_BLOCK_PIXELS).min(n);
    let blocks_per_side = n.div_ceil(block);
    let mut blocks: Vec<(usize, usize)> = (0..blocks_per_side)
        .flat_map(|r| (0..blocks_per_side).map(move |c| (r, c)))
        .collect();
    blocks.shuffle(&mut rng);

    let header = patch_header(n, cellsize)?;
    let mut mask = CategoryRaster::filled(header, SYNTH_MASK_NODATA, gt_codes::WATER);
    let mut elev = Raster::filled(header, T::of(SYNTH_ELEV_NODATA), T::zero());
    let hre = t.hre.unwrap_or_else(T::zero);
    let heights = match spec.height_mode {
        HeightMode::Single => [hre, hre],
        HeightMode::Mixed { ratio } => [hre * T::of(ratio), hre / T::of(ratio)],
    };

    let mut assigned = 0usize;
    let mut building_blocks = 0usize;
    for &(br, bc) in &blocks {
        let pervious_code = if rng.random_bool(0.5) {
            gt_codes::TREE_CANOPY
        } else {
            gt_codes::GRASS_SHRUB
        };
        let mut block_has_building = false;
        for row in br * block..((br + 1) * block).min(n) {
            for col in bc * block..((bc + 1) * block).min(n) {
                let code = if assigned < buildings {
                    block_has_building = true;
                    elev.set(row, col, heights[building_blocks % 2])?;
                    gt_codes::BUILDINGS
                } else if assigned < buildings + roads {
                    gt_codes::ROADS
                } else if assigned < buildings + roads + pervious {
                    pervious_code
                } else {
                    gt_codes::WATER
                };
                mask.set(row, col, Some(code));
                assigned += 1;
            }
        }
        if block_has_building {
            building_blocks += 1;
        }
    }

    let achieved = compute_params(&mask, &elev, &whole_window(n), &ClassIndexSets::ground_truth())?;
    for (p, want, got) in [
        (Param::Bsf, t.bsf, achieved.bsf),
        (Param::Isf, t.isf, achieved.isf),
        (Param::Psf, t.psf, achieved.psf),
    ] {
        if (want - got).abs().as_f64() > FRACTION_TOLERANCE {
            return Err(Error::Spec(format!(
                "{p} target {want} not reachable on a {n}x{n} patch (achieved {got})"
            )));
        }
    }
    Ok(GeneratedPatch { mask, elev, achieved })
}

/// Rectangular grid of patch specs, north row first.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec<T> {
    pub patches: Vec<Vec<PatchSpec<T>>>,
    pub cellsize: f64,
    pub patch_pixels: usize,
    /// Master seed the patch seeds were derived from, for the record.
    pub seed: u64,
}

impl<T: Scalar> SceneSpec<T> {
    fn validate(&self) -> Result<()> {
        let cols = self.patches.first().map_or(0, Vec::len);
        if cols == 0 {
            return Err(Error::Spec("scene needs at least one patch".into()));
        }
        if self.patches.iter().any(|r| r.len() != cols) {
            return Err(Error::Spec("scene patch grid must be rectangular".into()));
        }
        if self.patch_pixels == 0 || self.cellsize.is_nan() || self.cellsize <= 0.0 {
            return Err(Error::Spec("patch_pixels and cellsize must be positive".into()));
        }
        Ok(())
    }

    /// One row per class, `per_class` patches per row, targets drawn from
    /// the table. Patch seeds come from a generator seeded with `seed`.
    pub fn for_classes(
        table: &ThresholdTable<T>,
        classes: &[u8],
        per_class: usize,
        seed: u64,
        patch_pixels: usize,
        cellsize: f64,
    ) -> Result<Self> {
        if classes.is_empty() || per_class == 0 {
            return Err(Error::Spec("need at least one class and one patch per class".into()));
        }
        let mut seeds = Pcg64::seed_from_u64(seed);
        let mut patches = Vec::with_capacity(classes.len());
        for &lcz in classes {
            let row = (0..per_class)
                .map(|_| PatchSpec::sample(table, lcz, seeds.random::<u64>()))
                .collect::<Result<Vec<_>>>()?;
            patches.push(row);
        }
        let spec = SceneSpec {
            patches,
            cellsize,
            patch_pixels,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene<T> {
    pub mask: CategoryRaster,
    pub elev: Raster<T>,
    pub labels: BTreeMap<PatchId, u8>,
    pub achieved: BTreeMap<PatchId, ParamVector<T>>,
}

/// Tiles generated patches into one aligned mask/elevation pair.
pub fn gen_scene<T: Scalar>(spec: &SceneSpec<T>) -> Result<Scene<T>> {
    spec.validate()?;
    let n = spec.patch_pixels;
    let prows = spec.patches.len();
    let pcols = spec.patches[0].len();
    let flat: Vec<(PatchId, &PatchSpec<T>)> = spec
        .patches
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, p)| (PatchId::new(r, c), p)))
        .collect();
    let generated: Vec<GeneratedPatch<T>> = flat
        .par_iter()
        .map(|(_, p)| gen_patch(p, n, spec.cellsize))
        .collect::<Result<_>>()?;

    let header = GridHeader::new(pcols * n, prows * n, 0.0, 0.0, spec.cellsize)?;
    let mut mask = CategoryRaster::filled(header, SYNTH_MASK_NODATA, gt_codes::WATER);
    let mut elev = Raster::filled(header, T::of(SYNTH_ELEV_NODATA), T::zero());
    let mut labels = BTreeMap::new();
    let mut achieved = BTreeMap::new();
    for ((id, p), g) in flat.iter().zip(generated) {
        for r in 0..n {
            for c in 0..n {
                let (row, col) = (id.row * n + r, id.col * n + c);
                mask.set(row, col, g.mask.get(r, c));
                elev.set(row, col, g.elev.raw(g.elev.header.index(r, c)))?;
            }
        }
        labels.insert(*id, p.lcz);
        achieved.insert(*id, g.achieved);
    }
    Ok(Scene {
        mask,
        elev,
        labels,
        achieved,
    })
}

#[derive(Serialize)]
struct ParamsJson {
    bsf: f64,
    isf: f64,
    psf: f64,
    hre: Option<f64>,
}

impl<T: Scalar> From<&ParamVector<T>> for ParamsJson {
    fn from(p: &ParamVector<T>) -> Self {
        ParamsJson {
            bsf: p.bsf.as_f64(),
            isf: p.isf.as_f64(),
            psf: p.psf.as_f64(),
            hre: p.hre.map(Scalar::as_f64),
        }
    }
}

#[derive(Serialize)]
struct PatchMeta {
    patch_id: String,
    lcz: u8,
    seed: u64,
    height_mode: HeightMode,
    target: ParamsJson,
    achieved: ParamsJson,
}

#[derive(Serialize)]
struct SceneMeta<'a> {
    generator: &'a str,
    seed: u64,
    cellsize: f64,
    patch_pixels: usize,
    patches: Vec<PatchMeta>,
}

/// Writes `mask.asc`, `elev.asc`, `labels.csv` and `scene.json` into `dir`.
pub fn write_scene<T: Scalar>(spec: &SceneSpec<T>, scene: &Scene<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    scene.mask.write_ascii(dir.join("mask.asc"))?;
    scene.elev.write_ascii(dir.join("elev.asc"))?;
    write_labels_csv(dir.join("labels.csv"), &scene.labels)?;
    let patches = spec
        .patches
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, p)| (PatchId::new(r, c), p)))
        .map(|(id, p)| PatchMeta {
            patch_id: id.to_string(),
            lcz: p.lcz,
            seed: p.seed,
            height_mode: p.height_mode,
            target: (&p.target_params).into(),
            achieved: (&scene.achieved[&id]).into(),
        })
        .collect();
    let meta = SceneMeta {
        generator: GENERATOR,
        seed: spec.seed,
        cellsize: spec.cellsize,
        patch_pixels: spec.patch_pixels,
        patches,
    };
    let path = dir.join("scene.json");
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// Scatters points uniformly inside every cell with valid elevation, about
/// `density` points per square meter, at the cell's elevation plus Gaussian
/// jitter.
pub fn gen_pointcloud<T: Scalar>(elev: &Raster<T>, density: f64, seed: u64) -> Result<Vec<Point3<T>>> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::Spec(format!("density must be positive, got {density}")));
    }
    let h = &elev.header;
    let per_cell = density * h.cellsize * h.cellsize;
    let whole = per_cell.floor();
    let extra = per_cell - whole;
    let jitter = Normal::new(0.0, POINT_JITTER_STD).expect("positive std");
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut points = Vec::with_capacity((per_cell.ceil() as usize) * h.len());
    for row in 0..h.nrows {
        for col in 0..h.ncols {
            let Some(z) = elev.get(row, col) else { continue };
            let z = z.as_f64();
            let (cx, cy) = h.cell_center(row, col);
            let k = whole as usize + usize::from(rng.random_bool(extra));
            for _ in 0..k {
                let dx: f64 = rng.random_range(-0.5..0.5);
                let dy: f64 = rng.random_range(-0.5..0.5);
                points.push(Point3::new(
                    T::of(cx + dx * h.cellsize),
                    T::of(cy + dy * h.cellsize),
                    T::of(z + jitter.sample(&mut rng)),
                ));
            }
        }
    }
    Ok(points)
}
