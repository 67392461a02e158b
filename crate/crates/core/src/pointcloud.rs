//! LiDAR point ingestion and sliding-circle rasterization.
//!
//! Every grid cell summarizes the elevations of all points whose planimetric
//! position lies within `radius` of the cell center (boundary inclusive). With
//! the default 0.75 m radius on a 0.5 m grid the circles overlap, so a single
//! point usually feeds several cells.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geogrid::{GridHeader, Raster};
use crate::scalar::Scalar;

pub const DEFAULT_CELLSIZE: f64 = 0.5;
pub const DEFAULT_RADIUS: f64 = 0.75;
pub const STATS_NODATA: f64 = -9999.0;

/// Rows per spatial tile. Each tile owns the accumulators of its rows, so the
/// result does not depend on how tiles are scheduled onto workers.
const TILE_ROWS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Point3 { x, y, z }
    }
}

/// Streaming reader for `x,y,z` text files.
pub struct XyzReader<R, T> {
    lines: std::io::Lines<BufReader<R>>,
    line_no: usize,
    source_name: String,
    _marker: std::marker::PhantomData<T>,
}

impl<R: Read, T: Scalar> XyzReader<R, T> {
    pub fn new(reader: R, source_name: impl Into<String>) -> Self {
        XyzReader {
            lines: BufReader::new(reader).lines(),
            line_no: 0,
            source_name: source_name.into(),
            _marker: std::marker::PhantomData,
        }
    }

    fn parse_line(&self, line: &str) -> Result<Point3<T>> {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                &self.source_name,
                self.line_no,
                format!("expected 3 comma-separated fields, found {}", fields.len()),
            ));
        }
        let mut xyz = [T::zero(); 3];
        for (slot, tok) in xyz.iter_mut().zip(&fields) {
            *slot =
                tok.parse::<T>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::parse(&self.source_name, self.line_no, format!("invalid coordinate {tok:?}"))
                })?;
        }
        Ok(Point3::new(xyz[0], xyz[1], xyz[2]))
    }
}

impl<R: Read, T: Scalar> Iterator for XyzReader<R, T> {
    type Item = Result<Point3<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.source_name, e))),
            };
            self.line_no += 1;
            let line = line.trim_end_matches('\r').trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Some(self.parse_line(line));
        }
    }
}

/// Opens an XYZ file and yields its points in file order.
pub fn read_xyz<T: Scalar>(path: impl AsRef<Path>) -> Result<XyzReader<File, T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(XyzReader::new(file, path.display().to_string()))
}

/// Per-cell elevation statistics. Empty cells are NODATA in every layer
/// except `count`, where they are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct StatsStack<T> {
    pub min: Raster<T>,
    pub max: Raster<T>,
    pub mean: Raster<T>,
    pub std: Raster<T>,
    pub count: Raster<T>,
}

pub const STATS_LAYERS: [&str; 5] = ["min", "max", "mean", "std", "count"];

impl<T: Scalar> StatsStack<T> {
    pub fn header(&self) -> &GridHeader {
        &self.mean.header
    }

    fn layers(&self) -> [&Raster<T>; 5] {
        [&self.min, &self.max, &self.mean, &self.std, &self.count]
    }

    /// Errors unless all five layers share one geometry.
    pub fn ensure_aligned(&self) -> Result<()> {
        let h = self.header();
        for (name, layer) in STATS_LAYERS.iter().zip(self.layers()) {
            h.ensure_aligned(&layer.header, name)?;
        }
        Ok(())
    }

    /// Writes `{prefix}min.asc`, `{prefix}max.asc`, ... creating the parent
    /// directory when needed.
    pub fn write_prefix(&self, prefix: &str) -> Result<()> {
        for (name, layer) in STATS_LAYERS.iter().zip(self.layers()) {
            let path = format!("{prefix}{name}.asc");
            if let Some(parent) = Path::new(&path).parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            layer.write_ascii(&path)?;
        }
        Ok(())
    }

    pub fn read_prefix(prefix: &str) -> Result<Self> {
        let read = |name: &str| Raster::read_ascii(format!("{prefix}{name}.asc"));
        let stack = StatsStack {
            min: read("min")?,
            max: read("max")?,
            mean: read("mean")?,
            std: read("std")?,
            count: read("count")?,
        };
        stack.ensure_aligned()?;
        Ok(stack)
    }
}

/// Running statistics for one cell (Welford update).
#[derive(Clone, Copy, Debug)]
struct CellAccumulator {
    count: u32,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for CellAccumulator {
    fn default() -> Self {
        CellAccumulator {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl CellAccumulator {
    #[inline]
    fn push(&mut self, z: f64) {
        self.count += 1;
        let delta = z - self.mean;
        self.mean += delta / f64::from(self.count);
        self.m2 += delta * (z - self.mean);
        self.min = self.min.min(z);
        self.max = self.max.max(z);
    }
}

/// Inclusive index range of cells whose center coordinate may lie within
/// `radius` of `p` along one axis, widened by one cell against rounding.
#[inline]
fn candidate_span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let first = lo.ceil() as i64 - 1;
    let last = hi.floor() as i64 + 1;
    if last < 0 || first >= n as i64 {
        return None;
    }
    Some((first.max(0) as usize, last.min(n as i64 - 1) as usize))
}

fn candidate_rows(header: &GridHeader, y: f64, radius: f64) -> Option<(usize, usize)> {
    let n = header.nrows as f64;
    let lo = n - 0.5 - (y + radius - header.yll) / header.cellsize;
    let hi = n - 0.5 - (y - radius - header.yll) / header.cellsize;
    candidate_span(lo, hi, header.nrows)
}

fn candidate_cols(header: &GridHeader, x: f64, radius: f64) -> Option<(usize, usize)> {
    let lo = (x - radius - header.xll) / header.cellsize - 0.5;
    let hi = (x + radius - header.xll) / header.cellsize - 0.5;
    candidate_span(lo, hi, header.ncols)
}

/// Sliding-circle statistics of point elevations on the given grid.
///
/// Parallelism follows the ambient rayon pool; run inside
/// `ThreadPool::install` to cap the worker count. Output is identical for any
/// worker count because every cell is owned by exactly one row tile and each
/// tile visits its points in input order.
pub fn rasterize_stats<T: Scalar>(points: &[Point3<T>], header: &GridHeader, radius: f64) -> Result<StatsStack<T>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let ntiles = header.nrows.div_ceil(TILE_ROWS);

    // Route each point to every tile its circle can reach.
    let mut routed: Vec<Vec<u32>> = vec![Vec::new(); ntiles];
    for (i, p) in points.iter().enumerate() {
        let (x, y) = (p.x.as_f64(), p.y.as_f64());
        if candidate_cols(header, x, radius).is_none() {
            continue;
        }
        if let Some((r0, r1)) = candidate_rows(header, y, radius) {
            for members in &mut routed[r0 / TILE_ROWS..=r1 / TILE_ROWS] {
                members.push(i as u32);
            }
        }
    }

    let r2 = radius * radius;
    let tiles: Vec<Vec<CellAccumulator>> = routed
        .into_par_iter()
        .enumerate()
        .map(|(tile, members)| {
            let row_begin = tile * TILE_ROWS;
            let row_end = (row_begin + TILE_ROWS).min(header.nrows);
            let mut acc = vec![CellAccumulator::default(); (row_end - row_begin) * header.ncols];
            for &i in &members {
                let p = &points[i as usize];
                let (x, y, z) = (p.x.as_f64(), p.y.as_f64(), p.z.as_f64());
                let (Some((r0, r1)), Some((c0, c1))) =
                    (candidate_rows(header, y, radius), candidate_cols(header, x, radius))
                else {
                    continue;
                };
                for row in r0.max(row_begin)..=r1.min(row_end - 1) {
                    for col in c0..=c1 {
                        let (cx, cy) = header.cell_center(row, col);
                        let (dx, dy) = (cx - x, cy - y);
                        if dx * dx + dy * dy <= r2 {
                            acc[(row - row_begin) * header.ncols + col].push(z);
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let nodata = T::of(STATS_NODATA);
    let n = header.len();
    let (mut min, mut max, mut mean, mut std, mut count) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for cell in tiles.iter().flatten() {
        count.push(T::of(f64::from(cell.count)));
        if cell.count == 0 {
            min.push(nodata);
            max.push(nodata);
            mean.push(nodata);
            std.push(nodata);
        } else {
            min.push(T::of(cell.min));
            max.push(T::of(cell.max));
            mean.push(T::of(cell.mean.clamp(cell.min, cell.max)));
            std.push(T::of((cell.m2.max(0.0) / f64::from(cell.count)).sqrt()));
        }
    }
    let layer = |values| Raster::new(*header, nodata, values);
    Ok(StatsStack {
        min: layer(min)?,
        max: layer(max)?,
        mean: layer(mean)?,
        std: layer(std)?,
        count: layer(count)?,
    })
}
