//! Threshold tables, interval fitting, multi-label classification and
//! coverage-based evaluation.
//!
//! A patch is a candidate member of every LCZ whose four parameter intervals
//! all contain its parameter vector. Intervals are closed at finite ends.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geogrid::write_file;
pub use crate::lczparams::Param;
use crate::lczparams::{parse_lcz_field, ParamVector, PatchId, PatchSample};
use crate::scalar::{parse_scalar, Scalar};

pub const DEFAULT_MIN_SAMPLES: usize = 5;

/// Closed interval; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn at_least(lo: T) -> Self {
        Interval { lo, hi: T::infinity() }
    }

    #[inline]
    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, lo: T, hi: T) -> bool {
        self.lo >= lo && self.hi <= hi
    }

    /// Distance from `x` to the interval's reference point, in widths.
    /// Half-infinite intervals use the finite end with unit width; a
    /// degenerate interval contributes nothing.
    fn normalized_distance(&self, x: T) -> T {
        let (mid, width) = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => ((self.lo + self.hi) / T::of(2.0), self.hi - self.lo),
            (true, false) => (self.lo, T::one()),
            (false, true) => (self.hi, T::one()),
            (false, false) => return T::zero(),
        };
        if width <= T::zero() {
            T::zero()
        } else {
            (x - mid).abs() / width
        }
    }
}

impl<T: Scalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "given-table1")]
    GivenTable1,
    #[serde(rename = "estimated-table2")]
    EstimatedTable2,
    #[serde(rename = "fitted")]
    Fitted,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::GivenTable1 => "given-table1",
            Provenance::EstimatedTable2 => "estimated-table2",
            Provenance::Fitted => "fitted",
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "given-table1" => Ok(Provenance::GivenTable1),
            "estimated-table2" => Ok(Provenance::EstimatedTable2),
            "fitted" => Ok(Provenance::Fitted),
            _ => Err(Error::Domain(format!("unknown provenance {s:?}"))),
        }
    }
}

/// Per-class intervals for the four parameters, indexed by [`Param::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTable<T> {
    pub provenance: Provenance,
    rows: BTreeMap<u8, [Interval<T>; 4]>,
}

impl<T: Scalar> ThresholdTable<T> {
    pub fn new(provenance: Provenance, rows: BTreeMap<u8, [Interval<T>; 4]>) -> Result<Self> {
        for (&lcz, row) in &rows {
            for p in Param::ALL {
                let (lo, hi) = p.domain();
                if !row[p.index()].is_subset_of(T::of(lo), T::of(hi)) {
                    return Err(Error::Domain(format!(
                        "LCZ {lcz} {p} interval {} outside [{lo}, {hi}]",
                        row[p.index()]
                    )));
                }
            }
        }
        Ok(ThresholdTable { provenance, rows })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn classes(&self) -> impl Iterator<Item = u8> + '_ {
        self.rows.keys().copied()
    }

    /// `None` when the class is absent from the table.
    pub fn row(&self, lcz: u8) -> Option<&[Interval<T>; 4]> {
        self.rows.get(&lcz)
    }

    pub fn interval(&self, lcz: u8, param: Param) -> Option<Interval<T>> {
        self.rows.get(&lcz).map(|r| r[param.index()])
    }

    pub fn rows(&self) -> impl Iterator<Item = (u8, &[Interval<T>; 4])> {
        self.rows.iter().map(|(&k, v)| (k, v))
    }

    /// Replaces one interval, keeping the table's domain invariants.
    pub fn set_interval(&mut self, lcz: u8, param: Param, interval: Interval<T>) -> Result<()> {
        let (lo, hi) = param.domain();
        if !interval.is_subset_of(T::of(lo), T::of(hi)) {
            return Err(Error::Domain(format!(
                "{param} interval {interval} outside [{lo}, {hi}]"
            )));
        }
        let row = self
            .rows
            .get_mut(&lcz)
            .ok_or_else(|| Error::Domain(format!("LCZ {lcz} not in table")))?;
        row[param.index()] = interval;
        Ok(())
    }

    /// True when the class row exists and every parameter falls in its
    /// interval. A missing HRE matches no interval.
    pub fn covers(&self, lcz: u8, x: &ParamVector<T>) -> bool {
        self.rows.get(&lcz).is_some_and(|row| row_contains(row, x))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), |w| self.to_csv_writer(w))
    }

    pub fn to_csv_writer<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# provenance: {}", self.provenance.as_str())?;
        writeln!(w, "lcz,param,lo,hi")?;
        for (lcz, row) in &self.rows {
            for p in Param::ALL {
                let iv = row[p.index()];
                writeln!(w, "{lcz},{p},{},{}", fmt_bound(iv.lo), fmt_bound(iv.hi))?;
            }
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn from_csv_str(text: &str, source: &str) -> Result<Self> {
        let mut provenance = None;
        let mut seen_header = false;
        let mut cells: BTreeMap<u8, [Option<Interval<T>>; 4]> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(p) = comment.trim().strip_prefix("provenance:") {
                    provenance = Some(
                        p.trim()
                            .parse()
                            .map_err(|e: Error| Error::parse(source, line_no, e.to_string()))?,
                    );
                }
                continue;
            }
            if !seen_header {
                if line != "lcz,param,lo,hi" {
                    return Err(Error::parse(source, line_no, "expected header lcz,param,lo,hi"));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("expected 4 fields, found {}", fields.len()),
                ));
            }
            let lcz = parse_lcz_field(fields[0], source, line_no)?
                .ok_or_else(|| Error::parse(source, line_no, "missing LCZ"))?;
            let param: Param = fields[1]
                .parse()
                .map_err(|e: Error| Error::parse(source, line_no, e.to_string()))?;
            let bound = |tok: &str| {
                parse_scalar::<T>(tok).ok_or_else(|| Error::parse(source, line_no, format!("invalid bound {tok:?}")))
            };
            let iv = Interval::new(bound(fields[2])?, bound(fields[3])?)
                .map_err(|e| Error::parse(source, line_no, e.to_string()))?;
            let slot = &mut cells.entry(lcz).or_default()[param.index()];
            if slot.replace(iv).is_some() {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("duplicate row for LCZ {lcz} {param}"),
                ));
            }
        }
        if !seen_header {
            return Err(Error::parse(source, 1, "missing header lcz,param,lo,hi"));
        }
        let mut rows = BTreeMap::new();
        for (lcz, row) in cells {
            let mut full = [Interval {
                lo: T::zero(),
                hi: T::zero(),
            }; 4];
            for p in Param::ALL {
                full[p.index()] =
                    row[p.index()].ok_or_else(|| Error::parse(source, 0, format!("LCZ {lcz} lacks a {p} interval")))?;
            }
            rows.insert(lcz, full);
        }
        ThresholdTable::new(provenance.unwrap_or(Provenance::Fitted), rows)
    }
}

fn fmt_bound<T: Scalar>(v: T) -> String {
    if v == T::infinity() {
        "inf".into()
    } else if v == T::neg_infinity() {
        "-inf".into()
    } else {
        v.to_string()
    }
}

#[inline]
fn row_contains<T: Scalar>(row: &[Interval<T>; 4], x: &ParamVector<T>) -> bool {
    Param::ALL
        .iter()
        .all(|&p| x.get(p).is_some_and(|v| row[p.index()].contains(v)))
}

fn table_from_rows<T: Scalar>(provenance: Provenance, rows: &[(u8, [(f64, f64); 4])]) -> ThresholdTable<T> {
    let rows = rows
        .iter()
        .map(|&(lcz, bounds)| {
            (
                lcz,
                bounds.map(|(lo, hi)| Interval {
                    lo: T::of(lo),
                    hi: T::of(hi),
                }),
            )
        })
        .collect();
    ThresholdTable::new(provenance, rows).expect("built-in tables respect the parameter domains")
}

const INF: f64 = f64::INFINITY;

/// Standard ranges of the ten built types. Percentages are expressed as
/// fractions; one-sided bounds become half-infinite intervals (`<10%` is
/// `[0, 0.10]`, `>25 m` is `[25, inf)`).
pub fn table1_given<T: Scalar>() -> ThresholdTable<T> {
    table_from_rows(
        Provenance::GivenTable1,
        &[
            // lcz, [bsf, isf, psf, hre]
            (1, [(0.40, 0.60), (0.40, 0.60), (0.0, 0.10), (25.0, INF)]),
            (2, [(0.40, 0.70), (0.30, 0.50), (0.0, 0.20), (10.0, 25.0)]),
            (3, [(0.40, 0.70), (0.20, 0.50), (0.0, 0.30), (3.0, 10.0)]),
            (4, [(0.20, 0.40), (0.30, 0.40), (0.30, 0.40), (25.0, INF)]),
            (5, [(0.20, 0.40), (0.30, 0.50), (0.20, 0.40), (10.0, 25.0)]),
            (6, [(0.20, 0.40), (0.20, 0.50), (0.30, 0.60), (3.0, 10.0)]),
            (7, [(0.60, 0.90), (0.0, 0.20), (0.0, 0.30), (2.0, 4.0)]),
            (8, [(0.30, 0.50), (0.40, 0.50), (0.0, 0.20), (3.0, 10.0)]),
            (9, [(0.10, 0.20), (0.0, 0.20), (0.60, 0.80), (3.0, 10.0)]),
            (10, [(0.20, 0.30), (0.20, 0.40), (0.40, 0.50), (5.0, 15.0)]),
        ],
    )
}

/// Intervals estimated from labeled New York City patches. Classes 7 and 9
/// are absent.
pub fn table2_estimated_nyc<T: Scalar>() -> ThresholdTable<T> {
    table_from_rows(
        Provenance::EstimatedTable2,
        &[
            (1, [(0.30, 0.65), (0.25, 0.55), (0.00, 0.26), (18.98, 69.14)]),
            (2, [(0.18, 0.50), (0.31, 0.62), (0.04, 0.32), (4.81, 24.25)]),
            (3, [(0.22, 0.42), (0.35, 0.58), (0.09, 0.32), (4.20, 17.72)]),
            (4, [(0.05, 0.34), (0.21, 0.58), (0.17, 0.61), (2.20, 29.78)]),
            (5, [(0.11, 0.37), (0.22, 0.53), (0.21, 0.54), (6.44, 25.09)]),
            (6, [(0.04, 0.28), (0.20, 0.56), (0.23, 0.68), (0.09, 18.11)]),
            (8, [(0.04, 0.59), (0.31, 0.81), (0.00, 0.27), (3.25, 12.21)]),
            (10, [(0.03, 0.49), (0.32, 0.81), (0.00, 0.30), (2.59, 14.16)]),
        ],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitEntry<T> {
    pub lcz: u8,
    pub param: Param,
    pub count: usize,
    pub mean: T,
    pub std: T,
    #[serde(skip)]
    pub interval: Interval<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmittedClass {
    pub lcz: u8,
    pub samples: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct FitSummary<T> {
    pub entries: Vec<FitEntry<T>>,
    pub omitted: Vec<OmittedClass>,
}

/// Mean and population standard deviation.
pub fn mean_std<T: Scalar>(values: &[T]) -> (T, T) {
    let n = T::of_usize(values.len());
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
    let var = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
    (mean, var.sqrt())
}

/// `[mean - 2 std, mean + 2 std]` clamped to the parameter's domain.
pub fn two_sigma_interval<T: Scalar>(param: Param, mean: T, std: T) -> Interval<T> {
    let (dlo, dhi) = param.domain();
    let two = T::of(2.0);
    Interval {
        lo: (mean - two * std).max(T::of(dlo)),
        hi: (mean + two * std).min(T::of(dhi)),
    }
}

/// Fits per-class intervals as mean plus or minus two population standard
/// deviations. Classes with fewer than `min_samples` samples, or without any
/// sample that has buildings, are omitted and reported. Samples lacking HRE
/// still count toward the surface-fraction statistics.
pub fn fit_thresholds<T: Scalar>(
    samples: &[PatchSample<T>],
    min_samples: usize,
) -> Result<(ThresholdTable<T>, FitSummary<T>)> {
    if samples.is_empty() {
        return Err(Error::Fit("no samples to fit".into()));
    }
    let mut by_class: BTreeMap<u8, Vec<&ParamVector<T>>> = BTreeMap::new();
    for s in samples {
        let lcz = s
            .lcz
            .ok_or_else(|| Error::Fit(format!("sample {} has no LCZ label", s.patch_id)))?;
        by_class.entry(lcz).or_default().push(&s.params);
    }
    let mut summary = FitSummary {
        entries: Vec::new(),
        omitted: Vec::new(),
    };
    let mut rows = BTreeMap::new();
    for (lcz, params) in by_class {
        if params.len() < min_samples.max(1) {
            summary.omitted.push(OmittedClass {
                lcz,
                samples: params.len(),
                reason: format!("fewer than {min_samples} samples"),
            });
            continue;
        }
        let mut row = [Interval {
            lo: T::zero(),
            hi: T::zero(),
        }; 4];
        let mut entries = Vec::with_capacity(4);
        for p in Param::ALL {
            let values: Vec<T> = params.iter().filter_map(|x| x.get(p)).collect();
            if values.is_empty() {
                break;
            }
            let (mean, std) = mean_std(&values);
            let interval = two_sigma_interval(p, mean, std);
            row[p.index()] = interval;
            entries.push(FitEntry {
                lcz,
                param: p,
                count: values.len(),
                mean,
                std,
                interval,
            });
        }
        if entries.len() < 4 {
            summary.omitted.push(OmittedClass {
                lcz,
                samples: params.len(),
                reason: "no sample with building pixels".into(),
            });
            continue;
        }
        summary.entries.extend(entries);
        rows.insert(lcz, row);
    }
    Ok((ThresholdTable::new(Provenance::Fitted, rows)?, summary))
}

/// Set of candidate LCZ classes for one patch; empty means unclassified.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PredictionSet(BTreeSet<u8>);

impl PredictionSet {
    pub fn new(classes: BTreeSet<u8>) -> Self {
        PredictionSet(classes)
    }

    pub fn contains(&self, lcz: u8) -> bool {
        self.0.contains(&lcz)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }
}

/// Written as `;`-separated class numbers, e.g. `1;4`.
impl fmt::Display for PredictionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, z) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{z}")?;
        }
        Ok(())
    }
}

impl FromStr for PredictionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(PredictionSet::default());
        }
        s.split(';')
            .map(|t| {
                t.trim()
                    .parse::<u8>()
                    .map_err(|_| Error::Domain(format!("invalid LCZ {t:?} in prediction set")))
            })
            .collect::<Result<BTreeSet<u8>>>()
            .map(PredictionSet)
    }
}

/// Every class whose four intervals contain `x`.
pub fn classify_multilabel<T: Scalar>(x: &ParamVector<T>, table: &ThresholdTable<T>) -> PredictionSet {
    PredictionSet(
        table
            .rows
            .iter()
            .filter(|(_, row)| row_contains(row, x))
            .map(|(&z, _)| z)
            .collect(),
    )
}

/// The candidate closest to its class's interval centers, summing per
/// parameter distances in units of interval width. Ties go to the smaller
/// class number; `None` when no class matches.
pub fn classify_single<T: Scalar>(x: &ParamVector<T>, table: &ThresholdTable<T>) -> Option<u8> {
    let candidates = classify_multilabel(x, table);
    pick_single(x, table, &candidates)
}

fn pick_single<T: Scalar>(x: &ParamVector<T>, table: &ThresholdTable<T>, candidates: &PredictionSet) -> Option<u8> {
    let mut best: Option<(u8, T)> = None;
    for z in candidates.iter() {
        let row = &table.rows[&z];
        let d = Param::ALL.iter().fold(T::zero(), |acc, &p| {
            let v = x.get(p).expect("candidates have every parameter");
            acc + row[p.index()].normalized_distance(v)
        });
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((z, d));
        }
    }
    best.map(|(z, _)| z)
}

/// Classification output for one patch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub patch_id: PatchId,
    /// Reference label, when known.
    pub lcz: Option<u8>,
    pub set: PredictionSet,
    pub single: Option<u8>,
}

pub fn classify_samples<T: Scalar>(samples: &[PatchSample<T>], table: &ThresholdTable<T>) -> Vec<Prediction> {
    samples
        .par_iter()
        .map(|s| {
            let set = classify_multilabel(&s.params, table);
            let single = pick_single(&s.params, table, &set);
            Prediction {
                patch_id: s.patch_id,
                lcz: s.lcz,
                set,
                single,
            }
        })
        .collect()
}

const PREDS_HEADER: [&str; 4] = ["patch_id", "lcz", "predicted", "single"];

/// Writes `patch_id,lcz,predicted,single`; `predicted` is the `;`-joined set.
pub fn write_predictions_csv(path: impl AsRef<Path>, preds: &[Prediction]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(PREDS_HEADER)?;
    for p in preds {
        w.write_record([
            p.patch_id.to_string(),
            p.lcz.map(|z| z.to_string()).unwrap_or_default(),
            p.set.to_string(),
            p.single.map(|z| z.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions_csv(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    if reader.headers()?.iter().map(str::trim).ne(PREDS_HEADER) {
        return Err(Error::parse(
            &source,
            1,
            format!("expected header {}", PREDS_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let wrap = |e: Error| Error::parse(&source, line, e.to_string());
        let single = record[3].trim();
        out.push(Prediction {
            patch_id: record[0].trim().parse().map_err(wrap)?,
            lcz: parse_lcz_field(record[1].trim(), &source, line)?,
            set: record[2].parse().map_err(wrap)?,
            single: if single.is_empty() {
                None
            } else {
                Some(
                    single
                        .parse()
                        .map_err(|_| Error::parse(&source, line, format!("invalid LCZ {single:?}")))?,
                )
            },
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ClassAccuracy {
    pub n: usize,
    pub covered: usize,
}

impl ClassAccuracy {
    pub fn accuracy<T: Scalar>(&self) -> T {
        if self.n == 0 {
            T::zero()
        } else {
            T::of_usize(self.covered) / T::of_usize(self.n)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyReport<T> {
    pub per_class: BTreeMap<u8, ClassAccuracy>,
    pub n: usize,
    pub covered: usize,
    /// Pooled coverage over all patches.
    pub oa: T,
    pub mean_prediction_set_size: T,
    pub n_unclassified: usize,
    /// Labeled classes the table has no row for; their patches count as misses.
    pub missing_from_table: Vec<u8>,
}

/// Coverage accuracy of labeled predictions. Unlabeled rows are ignored.
/// `table_classes`, when given, flags labels the table cannot predict.
pub fn evaluate_predictions<T: Scalar>(
    preds: &[Prediction],
    table_classes: Option<&BTreeSet<u8>>,
) -> AccuracyReport<T> {
    let mut per_class: BTreeMap<u8, ClassAccuracy> = BTreeMap::new();
    let (mut n, mut covered, mut set_sizes, mut unclassified) = (0usize, 0usize, 0usize, 0usize);
    for p in preds {
        let Some(z) = p.lcz else { continue };
        let entry = per_class.entry(z).or_default();
        entry.n += 1;
        n += 1;
        set_sizes += p.set.len();
        if p.set.is_empty() {
            unclassified += 1;
        }
        if p.set.contains(z) {
            entry.covered += 1;
            covered += 1;
        }
    }
    let missing_from_table = match table_classes {
        Some(classes) => per_class.keys().filter(|z| !classes.contains(z)).copied().collect(),
        None => Vec::new(),
    };
    let ratio = |a: usize| {
        if n == 0 {
            T::zero()
        } else {
            T::of_usize(a) / T::of_usize(n)
        }
    };
    AccuracyReport {
        per_class,
        n,
        covered,
        oa: ratio(covered),
        mean_prediction_set_size: ratio(set_sizes),
        n_unclassified: unclassified,
        missing_from_table,
    }
}

/// Classifies labeled samples and measures how often the prediction set
/// covers the reference label.
pub fn evaluate<T: Scalar>(samples: &[PatchSample<T>], table: &ThresholdTable<T>) -> Result<AccuracyReport<T>> {
    if let Some(s) = samples.iter().find(|s| s.lcz.is_none()) {
        return Err(Error::Labeling(format!("sample {} has no LCZ label", s.patch_id)));
    }
    let classes: BTreeSet<u8> = table.classes().collect();
    Ok(evaluate_predictions(&classify_samples(samples, table), Some(&classes)))
}
