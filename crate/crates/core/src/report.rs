//! Map rendering and accuracy reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geogrid::write_file;
use crate::lczrules::{AccuracyReport, Prediction};
use crate::scalar::Scalar;

pub type Rgb8 = [u8; 3];

pub const UNCLASSIFIED_RGB: Rgb8 = [128, 128, 128];

/// Colors of the built LCZ types, following the customary LCZ map palette.
///
/// | LCZ | RGB |
/// |-----|-----|
/// | 1 | 140, 0, 0 |
/// | 2 | 209, 0, 0 |
/// | 3 | 255, 0, 0 |
/// | 4 | 191, 77, 0 |
/// | 5 | 255, 102, 0 |
/// | 6 | 255, 153, 85 |
/// | 7 | 250, 238, 5 |
/// | 8 | 188, 188, 188 |
/// | 9 | 255, 204, 170 |
/// | 10 | 85, 85, 85 |
/// | unclassified | 128, 128, 128 |
pub const DEFAULT_LCZ_COLORS: [(u8, Rgb8); 10] = [
    (1, [140, 0, 0]),
    (2, [209, 0, 0]),
    (3, [255, 0, 0]),
    (4, [191, 77, 0]),
    (5, [255, 102, 0]),
    (6, [255, 153, 85]),
    (7, [250, 238, 5]),
    (8, [188, 188, 188]),
    (9, [255, 204, 170]),
    (10, [85, 85, 85]),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LczPalette {
    colors: BTreeMap<u8, Rgb8>,
    unclassified: Rgb8,
}

impl Default for LczPalette {
    fn default() -> Self {
        LczPalette {
            colors: DEFAULT_LCZ_COLORS.into_iter().collect(),
            unclassified: UNCLASSIFIED_RGB,
        }
    }
}

impl LczPalette {
    pub fn new(colors: BTreeMap<u8, Rgb8>) -> Result<Self> {
        let mut seen: Vec<Rgb8> = vec![UNCLASSIFIED_RGB];
        for (&lcz, &rgb) in &colors {
            if seen.contains(&rgb) {
                return Err(Error::Render(format!("LCZ {lcz} color {rgb:?} is not distinct")));
            }
            seen.push(rgb);
        }
        Ok(LczPalette {
            colors,
            unclassified: UNCLASSIFIED_RGB,
        })
    }

    pub fn color(&self, lcz: Option<u8>) -> Result<Rgb8> {
        match lcz {
            None => Ok(self.unclassified),
            Some(z) => self
                .colors
                .get(&z)
                .copied()
                .ok_or_else(|| Error::Render(format!("no color for LCZ {z}"))),
        }
    }
}

/// Single-label predictions on the patch grid; `None` is unclassified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionGrid {
    pub rows: usize,
    pub cols: usize,
    cells: Vec<Option<u8>>,
}

impl PredictionGrid {
    pub fn new(rows: usize, cols: usize, cells: Vec<Option<u8>>) -> Result<Self> {
        if rows == 0 || cols == 0 || cells.len() != rows * cols {
            return Err(Error::Render(format!(
                "prediction grid {rows}x{cols} does not match {} cells",
                cells.len()
            )));
        }
        Ok(PredictionGrid { rows, cols, cells })
    }

    /// Grid spanning every patch id present; patches without a prediction
    /// row are drawn as unclassified.
    pub fn from_predictions(preds: &[Prediction]) -> Result<Self> {
        let rows = preds.iter().map(|p| p.patch_id.row + 1).max().unwrap_or(0);
        let cols = preds.iter().map(|p| p.patch_id.col + 1).max().unwrap_or(0);
        if rows == 0 {
            return Err(Error::Render("no predictions to render".into()));
        }
        let mut cells = vec![None; rows * cols];
        for p in preds {
            cells[p.patch_id.row * cols + p.patch_id.col] = p.single;
        }
        PredictionGrid::new(rows, cols, cells)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<u8> {
        self.cells[row * self.cols + col]
    }
}

/// One `scale`-square block of the class color per patch.
pub fn render_lcz_map(grid: &PredictionGrid, palette: &LczPalette, scale: u32) -> Result<RgbImage> {
    if scale == 0 {
        return Err(Error::Render("scale must be at least 1".into()));
    }
    let s = scale as usize;
    let mut img = RgbImage::new((grid.cols * s) as u32, (grid.rows * s) as u32);
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            let rgb = Rgb(palette.color(grid.get(row, col))?);
            for y in row * s..(row + 1) * s {
                for x in col * s..(col + 1) * s {
                    img.put_pixel(x as u32, y as u32, rgb);
                }
            }
        }
    }
    Ok(img)
}

pub fn write_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Percentage with two decimals, e.g. 0.5911 -> "59.11".
pub fn percent(fraction: f64) -> String {
    format!("{:.2}", fraction * 100.0)
}

pub const OA_LABEL: &str = "All (OA)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub lcz: u8,
    pub n: usize,
    pub covered: usize,
    pub accuracy: f64,
    pub accuracy_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub oa: f64,
    pub oa_percent: f64,
    pub n: usize,
    pub mean_prediction_set_size: f64,
    pub n_unclassified: usize,
    pub classes: Vec<ClassRow>,
    pub missing_from_table: Vec<u8>,
}

fn rounded_percent(fraction: f64) -> f64 {
    percent(fraction).parse().expect("formatted float parses")
}

impl ReportJson {
    pub fn from_report<T: Scalar>(r: &AccuracyReport<T>) -> Self {
        ReportJson {
            oa: r.oa.as_f64(),
            oa_percent: rounded_percent(r.oa.as_f64()),
            n: r.n,
            mean_prediction_set_size: r.mean_prediction_set_size.as_f64(),
            n_unclassified: r.n_unclassified,
            classes: r
                .per_class
                .iter()
                .map(|(&lcz, c)| {
                    let acc: f64 = c.accuracy();
                    ClassRow {
                        lcz,
                        n: c.n,
                        covered: c.covered,
                        accuracy: acc,
                        accuracy_percent: rounded_percent(acc),
                    }
                })
                .collect(),
            missing_from_table: r.missing_from_table.clone(),
        }
    }
}

/// Per-class rows then an `All (OA)` row, accuracies in percent.
pub fn report_csv_writer<T: Scalar, W: Write>(r: &AccuracyReport<T>, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "lcz,n,accuracy")?;
    for (lcz, c) in &r.per_class {
        writeln!(w, "{lcz},{},{}", c.n, percent(c.accuracy::<f64>()))?;
    }
    writeln!(w, "{OA_LABEL},{},{}", r.n, percent(r.oa.as_f64()))
}

pub fn write_report<T: Scalar>(r: &AccuracyReport<T>, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        ReportFormat::Csv => write_file(path, |w| report_csv_writer(r, w)),
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(&ReportJson::from_report(r))?;
            text.push('\n');
            fs::write(path, text).map_err(|e| Error::io(path, e))
        }
    }
}

/// One parsed row of an accuracy CSV; `lcz` is `None` for the OA row.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub lcz: Option<u8>,
    pub n: usize,
    pub accuracy_percent: String,
}

pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "lcz,n,accuracy")) => {}
        _ => return Err(Error::parse(&source, 1, "expected header lcz,n,accuracy")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |m: &str| Error::parse(&source, i + 1, m.to_string());
        if fields.len() != 3 {
            return Err(bad("expected 3 fields"));
        }
        let lcz = if fields[0] == OA_LABEL {
            None
        } else {
            Some(fields[0].parse().map_err(|_| bad("invalid LCZ"))?)
        };
        let n = fields[1].parse().map_err(|_| bad("invalid count"))?;
        fields[2].parse::<f64>().map_err(|_| bad("invalid accuracy"))?;
        rows.push(ReportRow {
            lcz,
            n,
            accuracy_percent: fields[2].to_string(),
        });
    }
    if rows.last().is_none_or(|r| r.lcz.is_some()) {
        return Err(Error::parse(
            &source,
            text.lines().count(),
            format!("missing {OA_LABEL} row"),
        ));
    }
    Ok(rows)
}
