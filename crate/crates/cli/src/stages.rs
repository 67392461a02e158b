//! File-to-file pipeline stages. Each subcommand is a thin wrapper around one
//! of these, and `pipeline` chains them through the same files.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lczmap::autolabel::LabelRuleConfig;
use lczmap::geogrid::Raster;
use lczmap::lczparams::{self, ExtractOptions, LabelSource, Scheme};
use lczmap::lczrules::{self, table1_given, table2_estimated_nyc};
use lczmap::pointcloud::{self, read_xyz};
use lczmap::report::{self, LczPalette, PredictionGrid, ReportFormat};
use lczmap::synthcity::{self, SceneSpec};
use lczmap::{derive_noisy_mask, CategoryRaster, Error, GridHeader, Result, StatsStack, ThresholdTable};

use crate::config::ThresholdSource;

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        }),
        None => Ok(()),
    }
}

/// Parses `xll,yll,ncols,nrows`.
pub fn parse_extent(text: &str, cellsize: f64) -> Result<GridHeader> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("extent {text:?} must be xll,yll,ncols,nrows"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let xll: f64 = parts[0].parse().map_err(|_| bad())?;
    let yll: f64 = parts[1].parse().map_err(|_| bad())?;
    let ncols: usize = parts[2].parse().map_err(|_| bad())?;
    let nrows: usize = parts[3].parse().map_err(|_| bad())?;
    GridHeader::new(ncols, nrows, xll, yll, cellsize)
}

pub fn rasterize(input: &Path, header: &GridHeader, radius: f64, out_prefix: &str) -> Result<StatsStack> {
    let points = read_xyz::<f64>(input)?.collect::<Result<Vec<_>>>()?;
    let stats = pointcloud::rasterize_stats(&points, header, radius)?;
    stats.write_prefix(out_prefix)?;
    eprintln!(
        "rasterized {} points onto {}x{} cells",
        points.len(),
        header.ncols,
        header.nrows
    );
    Ok(stats)
}

pub fn label(stats_prefix: &str, rules: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = match rules {
        Some(p) => LabelRuleConfig::from_json_file(p)?,
        None => LabelRuleConfig::default(),
    };
    let stats = StatsStack::read_prefix(stats_prefix)?;
    let mask = derive_noisy_mask(&stats, &cfg)?;
    ensure_parent(out)?;
    mask.write_ascii(out)
}

pub fn params(
    mask: &Path,
    elev: &Path,
    scheme: Scheme,
    labels: Option<&Path>,
    opts: &ExtractOptions,
    out: &Path,
) -> Result<()> {
    let mask = CategoryRaster::read_ascii(mask)?;
    let elev = Raster::<f64>::read_ascii(elev)?;
    let labels = match labels {
        None => None,
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("asc")) => {
            Some(LabelSource::Raster(CategoryRaster::read_ascii(p)?))
        }
        Some(p) => Some(LabelSource::Table(lczparams::read_labels_csv(p)?)),
    };
    let dataset = lczparams::extract_dataset(&mask, &elev, labels.as_ref(), &scheme.index_sets(), opts)?;
    for s in &dataset.skipped {
        eprintln!(
            "skipped patch {}: valid fraction {} below {}",
            s.patch_id, s.valid_fraction, opts.min_valid
        );
    }
    eprintln!(
        "extracted {} patches ({} skipped)",
        dataset.samples.len(),
        dataset.skipped.len()
    );
    ensure_parent(out)?;
    lczparams::write_params_csv(out, &dataset.samples)
}

pub fn fit(params: &Path, min_samples: usize, out: &Path, summary: Option<&Path>) -> Result<()> {
    let samples = lczparams::read_params_csv::<f64>(params)?;
    let total = samples.len();
    let labeled: Vec<_> = samples.into_iter().filter(|s| s.lcz.is_some()).collect();
    if labeled.len() < total {
        eprintln!("fit: ignoring {} unlabeled patches", total - labeled.len());
    }
    let (table, fit_summary) = lczrules::fit_thresholds(&labeled, min_samples)?;
    for o in &fit_summary.omitted {
        eprintln!("fit: omitted LCZ {} ({} samples): {}", o.lcz, o.samples, o.reason);
    }
    ensure_parent(out)?;
    table.write_csv(out)?;
    if let Some(path) = summary {
        ensure_parent(path)?;
        let mut text = serde_json::to_string_pretty(&fit_summary)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

pub fn load_thresholds(source: &ThresholdSource) -> Result<ThresholdTable> {
    match source {
        ThresholdSource::Table1 => Ok(table1_given()),
        ThresholdSource::Table2 => Ok(table2_estimated_nyc()),
        ThresholdSource::File(path) => ThresholdTable::read_csv(path),
        ThresholdSource::Fit => Err(Error::Config(
            "threshold source 'fit' needs labeled params; run `fit` first or use `pipeline`".into(),
        )),
    }
}

pub fn classify(params: &Path, source: &ThresholdSource, out: &Path) -> Result<()> {
    let samples = lczparams::read_params_csv::<f64>(params)?;
    let table = load_thresholds(source)?;
    if table.is_empty() {
        return Err(Error::Config("threshold table has no classes".into()));
    }
    let preds = lczrules::classify_samples(&samples, &table);
    let unclassified = preds.iter().filter(|p| p.set.is_empty()).count();
    eprintln!("classified {} patches ({unclassified} unclassified)", preds.len());
    ensure_parent(out)?;
    lczrules::write_predictions_csv(out, &preds)
}

pub fn evaluate(preds: &Path, thresholds: Option<&ThresholdSource>, out: &Path, json: &Path) -> Result<()> {
    let preds = lczrules::read_predictions_csv(preds)?;
    let classes: Option<BTreeSet<u8>> = match thresholds {
        Some(src) => Some(load_thresholds(src)?.classes().collect()),
        None => None,
    };
    let r = lczrules::evaluate_predictions::<f64>(&preds, classes.as_ref());
    if r.n == 0 {
        return Err(Error::Labeling("no labeled predictions to evaluate".into()));
    }
    for z in &r.missing_from_table {
        eprintln!("evaluate: LCZ {z} is labeled but absent from the threshold table");
    }
    eprintln!("overall accuracy {}% over {} patches", report::percent(r.oa), r.n);
    ensure_parent(out)?;
    report::write_report(&r, out, ReportFormat::Csv)?;
    ensure_parent(json)?;
    report::write_report(&r, json, ReportFormat::Json)
}

pub fn render(preds: &Path, eval: Option<&Path>, map: &Path, scale: u32) -> Result<()> {
    let preds = lczrules::read_predictions_csv(preds)?;
    let grid = PredictionGrid::from_predictions(&preds)?;
    let img = report::render_lcz_map(&grid, &LczPalette::default(), scale)?;
    ensure_parent(map)?;
    report::write_png(&img, map)?;
    if let Some(eval) = eval {
        for row in report::read_report_csv(eval)? {
            let name = row.lcz.map_or_else(|| report::OA_LABEL.to_string(), |z| z.to_string());
            eprintln!("{name:>9} {:>6} {:>7}", row.n, row.accuracy_percent);
        }
    }
    Ok(())
}

pub struct SynthOptions<'a> {
    pub table: &'a ThresholdSource,
    pub classes: &'a [u8],
    pub per_class: usize,
    pub seed: u64,
    pub patch_pixels: usize,
    pub cellsize: f64,
    /// When set, also write `points.xyz` at this density (points per m²).
    pub point_density: Option<f64>,
}

pub fn synth(opts: &SynthOptions<'_>, out_dir: &Path) -> Result<()> {
    let table = load_thresholds(opts.table)?;
    let spec = SceneSpec::for_classes(
        &table,
        opts.classes,
        opts.per_class,
        opts.seed,
        opts.patch_pixels,
        opts.cellsize,
    )?;
    let scene = synthcity::gen_scene(&spec)?;
    synthcity::write_scene(&spec, &scene, out_dir)?;
    if let Some(density) = opts.point_density {
        let points = synthcity::gen_pointcloud(&scene.elev, density, opts.seed)?;
        let path = out_dir.join("points.xyz");
        let file = File::create(&path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::Io {
            path: path.clone(),
            source: e,
        };
        for p in &points {
            writeln!(w, "{},{},{}", p.x, p.y, p.z).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    eprintln!("synthesized {} patches into {}", scene.labels.len(), out_dir.display());
    Ok(())
}

/// Output files of a `pipeline` run.
pub struct PipelineOutputs {
    pub params: PathBuf,
    pub thresholds: Option<PathBuf>,
    pub preds: PathBuf,
    pub report: PathBuf,
    pub report_json: PathBuf,
    pub map: PathBuf,
}

impl PipelineOutputs {
    pub fn in_dir(dir: &Path, fitted: bool) -> Self {
        PipelineOutputs {
            params: dir.join("params.csv"),
            thresholds: fitted.then(|| dir.join("thresholds.csv")),
            preds: dir.join("preds.csv"),
            report: dir.join("report.csv"),
            report_json: dir.join("report.json"),
            map: dir.join("map.png"),
        }
    }
}

pub struct PipelineInputs<'a> {
    pub mask: &'a Path,
    pub elev: &'a Path,
    pub labels: Option<&'a Path>,
    pub scheme: Scheme,
    pub thresholds: ThresholdSource,
    pub extract: ExtractOptions,
    pub min_samples: usize,
    pub scale: u32,
}

/// params -> fit (when requested) -> classify -> evaluate -> report.
pub fn pipeline(inputs: &PipelineInputs<'_>, out_dir: &Path) -> Result<PipelineOutputs> {
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let fitted = inputs.thresholds == ThresholdSource::Fit;
    let out = PipelineOutputs::in_dir(out_dir, fitted);
    params(
        inputs.mask,
        inputs.elev,
        inputs.scheme,
        inputs.labels,
        &inputs.extract,
        &out.params,
    )?;
    let source = match &out.thresholds {
        Some(path) => {
            fit(&out.params, inputs.min_samples, path, None)?;
            ThresholdSource::File(path.clone())
        }
        None => inputs.thresholds.clone(),
    };
    classify(&out.params, &source, &out.preds)?;
    if inputs.labels.is_some() {
        evaluate(&out.preds, Some(&source), &out.report, &out.report_json)?;
        render(&out.preds, Some(&out.report), &out.map, inputs.scale)?;
    } else {
        render(&out.preds, None, &out.map, inputs.scale)?;
    }
    Ok(out)
}
