//! Georeferenced grids and the ESRI ASCII grid format.
//!
//! Rows are stored north first: row 0 is the northernmost row, matching the
//! order in which ASCII grid files list their rows.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};

/// Grid geometry. Coordinates are planar meters with no CRS attached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub ncols: usize,
    pub nrows: usize,
    /// Easting of the lower-left corner.
    pub xll: f64,
    /// Northing of the lower-left corner.
    pub yll: f64,
    pub cellsize: f64,
}

impl GridHeader {
    pub fn new(ncols: usize, nrows: usize, xll: f64, yll: f64, cellsize: f64) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::Domain(format!(
                "grid must have at least one row and column, got {ncols}x{nrows}"
            )));
        }
        if !(cellsize > 0.0 && cellsize.is_finite()) {
            return Err(Error::Domain(format!("cellsize must be positive, got {cellsize}")));
        }
        if !xll.is_finite() || !yll.is_finite() {
            return Err(Error::Domain("corner coordinates must be finite".into()));
        }
        Ok(GridHeader {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
        })
    }

    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Two grids are aligned iff their geometry matches field by field.
    pub fn is_aligned(&self, other: &GridHeader) -> bool {
        self == other
    }

    pub fn ensure_aligned(&self, other: &GridHeader, what: &str) -> Result<()> {
        if self.is_aligned(other) {
            Ok(())
        } else {
            Err(Error::Alignment(format!("{what}: {self:?} vs {other:?}")))
        }
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.nrows && col < self.ncols);
        row * self.ncols + col
    }

    /// Center of a cell in map coordinates.
    #[inline]
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let x = self.xll + (col as f64 + 0.5) * self.cellsize;
        let y = self.yll + ((self.nrows - row) as f64 - 0.5) * self.cellsize;
        (x, y)
    }

    pub fn width(&self) -> f64 {
        self.ncols as f64 * self.cellsize
    }

    pub fn height(&self) -> f64 {
        self.nrows as f64 * self.cellsize
    }
}

/// Square pixel window produced by [`tile_patches`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    /// Top pixel row.
    pub row: usize,
    /// Left pixel column.
    pub col: usize,
    /// Edge length in pixels.
    pub size: usize,
    /// Position of the window in the patch grid.
    pub patch_row: usize,
    pub patch_col: usize,
}

impl Window {
    pub fn pixel_count(&self) -> usize {
        self.size * self.size
    }

    /// Flat indices of the window's pixels in row-major order.
    pub fn indices<'a>(&'a self, header: &'a GridHeader) -> impl Iterator<Item = usize> + 'a {
        (self.row..self.row + self.size)
            .flat_map(move |r| (self.col..self.col + self.size).map(move |c| header.index(r, c)))
    }

    pub fn fits(&self, header: &GridHeader) -> bool {
        self.size > 0 && self.row + self.size <= header.nrows && self.col + self.size <= header.ncols
    }
}

/// Row-major list of the full, non-overlapping `patch_pixels`-square windows
/// in the grid. Partial border windows are dropped.
pub fn tile_patches(header: &GridHeader, patch_pixels: usize) -> Vec<Window> {
    if patch_pixels == 0 {
        return Vec::new();
    }
    let prows = header.nrows / patch_pixels;
    let pcols = header.ncols / patch_pixels;
    let mut out = Vec::with_capacity(prows * pcols);
    for pr in 0..prows {
        for pc in 0..pcols {
            out.push(Window {
                row: pr * patch_pixels,
                col: pc * patch_pixels,
                size: patch_pixels,
                patch_row: pr,
                patch_col: pc,
            });
        }
    }
    out
}

/// Grid of real values with a NODATA sentinel.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    pub header: GridHeader,
    pub nodata: T,
    values: Vec<T>,
}

impl<T: Scalar> Raster<T> {
    pub fn new(header: GridHeader, nodata: T, values: Vec<T>) -> Result<Self> {
        if values.len() != header.len() {
            return Err(Error::Domain(format!(
                "expected {} values, got {}",
                header.len(),
                values.len()
            )));
        }
        let raster = Raster { header, nodata, values };
        if let Some(bad) = raster
            .values
            .iter()
            .position(|&v| !v.is_finite() && !raster.is_nodata(v))
        {
            return Err(Error::Domain(format!(
                "non-finite value at cell {bad} that is not the NODATA sentinel"
            )));
        }
        Ok(raster)
    }

    pub fn filled(header: GridHeader, nodata: T, value: T) -> Self {
        Raster {
            header,
            nodata,
            values: vec![value; header.len()],
        }
    }

    #[inline]
    pub fn is_nodata(&self, v: T) -> bool {
        v == self.nodata || (self.nodata.is_nan() && v.is_nan())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Raw cell at a flat index, NODATA included.
    #[inline]
    pub fn raw(&self, idx: usize) -> T {
        self.values[idx]
    }

    /// Cell value, `None` for NODATA.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        self.at(self.header.index(row, col))
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Option<T> {
        let v = self.values[idx];
        (!self.is_nodata(v)).then_some(v)
    }

    /// Sets a cell; non-finite values other than the sentinel are rejected.
    pub fn set(&mut self, row: usize, col: usize, value: T) -> Result<()> {
        if !value.is_finite() && !self.is_nodata(value) {
            return Err(Error::Domain(format!("non-finite raster value {value}")));
        }
        let idx = self.header.index(row, col);
        self.values[idx] = value;
        Ok(())
    }

    pub fn read_ascii(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_ascii_reader(BufReader::new(file), &path.display().to_string())
    }

    pub fn from_ascii_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut parser = AsciiParser::new(reader, source_name);
        let (header, nodata_token) = parser.header()?;
        let nodata: T = parse_scalar(&nodata_token)
            .ok_or_else(|| parser.error(format!("invalid NODATA_value {nodata_token:?}")))?;
        let mut values = Vec::with_capacity(header.len());
        let mut nodata_err = None;
        parser.body(&header, |tok, line| {
            let v: T = parse_scalar(tok)
                .ok_or_else(|| Error::parse(source_name, line, format!("non-numeric value {tok:?}")))?;
            if !v.is_finite() && !(v == nodata || (nodata.is_nan() && v.is_nan())) && nodata_err.is_none() {
                nodata_err = Some(Error::parse(source_name, line, format!("non-finite value {tok:?}")));
            }
            values.push(v);
            Ok(())
        })?;
        if let Some(e) = nodata_err {
            return Err(e);
        }
        Ok(Raster { header, nodata, values })
    }

    pub fn write_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), |w| self.to_ascii_writer(w))
    }

    pub fn to_ascii_writer<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        write_header(w, &self.header, &self.nodata.to_string())?;
        write_rows(w, &self.header, self.values.iter())
    }
}

/// Grid of small non-negative land-cover codes with an integer NODATA sentinel.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryRaster {
    pub header: GridHeader,
    pub nodata: i32,
    codes: Vec<i32>,
}

impl CategoryRaster {
    pub fn new(header: GridHeader, nodata: i32, codes: Vec<i32>) -> Result<Self> {
        if codes.len() != header.len() {
            return Err(Error::Domain(format!(
                "expected {} codes, got {}",
                header.len(),
                codes.len()
            )));
        }
        if let Some(&bad) = codes.iter().find(|&&c| c != nodata && !(0..=255).contains(&c)) {
            return Err(Error::Domain(format!("category code {bad} outside 0..=255")));
        }
        Ok(CategoryRaster { header, nodata, codes })
    }

    pub fn filled(header: GridHeader, nodata: i32, code: u8) -> Self {
        CategoryRaster {
            header,
            nodata,
            codes: vec![i32::from(code); header.len()],
        }
    }

    /// Cell code, `None` for NODATA.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<u8> {
        self.at(self.header.index(row, col))
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Option<u8> {
        let c = self.codes[idx];
        if c == self.nodata {
            None
        } else {
            Some(c as u8)
        }
    }

    pub fn set(&mut self, row: usize, col: usize, code: Option<u8>) {
        let idx = self.header.index(row, col);
        self.codes[idx] = code.map_or(self.nodata, i32::from);
    }

    pub fn raw_codes(&self) -> &[i32] {
        &self.codes
    }

    pub fn read_ascii(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_ascii_reader(BufReader::new(file), &path.display().to_string())
    }

    pub fn from_ascii_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut parser = AsciiParser::new(reader, source_name);
        let (header, nodata_token) = parser.header()?;
        let nodata = parse_integer(&nodata_token)
            .ok_or_else(|| parser.error(format!("invalid integer NODATA_value {nodata_token:?}")))?;
        let mut codes = Vec::with_capacity(header.len());
        parser.body(&header, |tok, line| {
            let code = parse_integer(tok)
                .ok_or_else(|| Error::parse(source_name, line, format!("non-integer code {tok:?}")))?;
            if code != nodata && !(0..=255).contains(&code) {
                return Err(Error::parse(source_name, line, format!("code {code} outside 0..=255")));
            }
            codes.push(code);
            Ok(())
        })?;
        Ok(CategoryRaster { header, nodata, codes })
    }

    pub fn write_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), |w| self.to_ascii_writer(w))
    }

    pub fn to_ascii_writer<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        write_header(w, &self.header, &self.nodata.to_string())?;
        write_rows(w, &self.header, self.codes.iter())
    }
}

fn parse_integer(tok: &str) -> Option<i32> {
    if let Ok(v) = tok.parse::<i32>() {
        return Some(v);
    }
    // Integral values written as reals, e.g. "-9999.0".
    let v: f64 = tok.parse().ok()?;
    (v.fract() == 0.0 && v >= f64::from(i32::MIN) && v <= f64::from(i32::MAX)).then_some(v as i32)
}

pub(crate) fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_header<W: Write>(w: &mut W, h: &GridHeader, nodata: &str) -> std::io::Result<()> {
    writeln!(w, "ncols {}", h.ncols)?;
    writeln!(w, "nrows {}", h.nrows)?;
    writeln!(w, "xllcorner {}", h.xll)?;
    writeln!(w, "yllcorner {}", h.yll)?;
    writeln!(w, "cellsize {}", h.cellsize)?;
    writeln!(w, "nodata_value {nodata}")
}

fn write_rows<'a, W: Write, V: std::fmt::Display + 'a>(
    w: &mut W,
    h: &GridHeader,
    values: impl Iterator<Item = &'a V>,
) -> std::io::Result<()> {
    let mut line = String::new();
    for (i, v) in values.enumerate() {
        if i % h.ncols != 0 {
            line.push(' ');
        }
        let _ = write!(line, "{v}");
        if (i + 1) % h.ncols == 0 {
            line.push('\n');
            w.write_all(line.as_bytes())?;
            line.clear();
        }
    }
    Ok(())
}

const HEADER_KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"];

struct AsciiParser<'a, R> {
    lines: std::io::Lines<BufReader<R>>,
    line_no: usize,
    source_name: &'a str,
}

impl<'a, R: Read> AsciiParser<'a, R> {
    fn new(reader: R, source_name: &'a str) -> Self {
        AsciiParser {
            lines: BufReader::new(reader).lines(),
            line_no: 0,
            source_name,
        }
    }

    fn error(&self, message: String) -> Error {
        Error::parse(self.source_name, self.line_no, message)
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        match self.lines.next() {
            None => Ok(None),
            Some(Ok(l)) => {
                self.line_no += 1;
                Ok(Some(l))
            }
            Some(Err(e)) => Err(Error::io(self.source_name, e)),
        }
    }

    /// Parses the six header lines; returns the geometry and the raw NODATA token.
    fn header(&mut self) -> Result<(GridHeader, String)> {
        let mut fields: Vec<String> = Vec::with_capacity(6);
        for key in HEADER_KEYS {
            let line = self
                .next_line()?
                .ok_or_else(|| self.error(format!("missing header keyword {key}")))?;
            let mut parts = line.split_whitespace();
            let found = parts.next().unwrap_or("");
            if !found.eq_ignore_ascii_case(key) {
                return Err(self.error(format!("expected header keyword {key}, found {found:?}")));
            }
            let value = parts
                .next()
                .ok_or_else(|| self.error(format!("missing value for {key}")))?;
            if parts.next().is_some() {
                return Err(self.error(format!("trailing tokens after {key}")));
            }
            fields.push(value.to_string());
        }
        let int = |i: usize, this: &Self| {
            fields[i].parse::<usize>().map_err(|_| {
                Error::parse(
                    this.source_name,
                    i + 1,
                    format!("invalid {} {:?}", HEADER_KEYS[i], fields[i]),
                )
            })
        };
        let real = |i: usize, this: &Self| {
            fields[i].parse::<f64>().map_err(|_| {
                Error::parse(
                    this.source_name,
                    i + 1,
                    format!("invalid {} {:?}", HEADER_KEYS[i], fields[i]),
                )
            })
        };
        let header = GridHeader::new(
            int(0, self)?,
            int(1, self)?,
            real(2, self)?,
            real(3, self)?,
            real(4, self)?,
        )
        .map_err(|e| self.error(e.to_string()))?;
        Ok((header, fields.pop().expect("six header fields")))
    }

    /// Feeds every body token to `sink`, checking the total count.
    fn body(&mut self, header: &GridHeader, mut sink: impl FnMut(&str, usize) -> Result<()>) -> Result<()> {
        let expected = header.len();
        let mut seen = 0usize;
        while let Some(line) = self.next_line()? {
            for tok in line.split_whitespace() {
                if seen == expected {
                    return Err(self.error(format!(
                        "too many values: header declares {}x{} = {expected}",
                        header.ncols, header.nrows
                    )));
                }
                sink(tok, self.line_no)?;
                seen += 1;
            }
        }
        if seen != expected {
            return Err(self.error(format!(
                "expected {expected} values ({}x{}), found {seen}",
                header.ncols, header.nrows
            )));
        }
        Ok(())
    }
}
