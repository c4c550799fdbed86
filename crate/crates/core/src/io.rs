//! Text formats for datasets, range workloads and KNN workloads.
//!
//! All formats are headerless comma-separated lines; an optional header is
//! recognized by a non-numeric first field on the first line.
//!
//! * dataset: `id, lo_1..lo_d, hi_1..hi_d`
//! * range queries: `qid, lo_1..lo_d, hi_1..hi_d`
//! * KNN queries: `qid, coord_1..coord_d, K`

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::rtree::ObjectRecord;

/// One KNN workload line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnnQuery<const D: usize> {
    pub point: [f64; D],
    pub k: usize,
}

/// Min-max rescaling applied by [`ingest_points_csv`]; `min` maps to 0 and
/// `max` to 1 on every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Parsed lines: (line number, fields).
type Rows = Vec<(usize, Vec<String>)>;

fn read_rows(path: &Path) -> Result<Rows> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if rows.is_empty() && i == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        rows.push((line, fields));
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

struct LineParser<'a> {
    path: &'a Path,
    line: usize,
}

impl LineParser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn float(&self, field: &str) -> Result<f64> {
        let v: f64 = field
            .parse()
            .map_err(|_| self.err(format!("`{field}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(format!("`{field}` is not finite")));
        }
        Ok(v)
    }

    fn integer(&self, field: &str) -> Result<u64> {
        field
            .parse()
            .map_err(|_| self.err(format!("`{field}` is not a non-negative integer")))
    }

    fn columns(&self, fields: &[String], expected: usize) -> Result<()> {
        if fields.len() != expected {
            return Err(self.err(format!("expected {expected} fields, found {}", fields.len())));
        }
        Ok(())
    }

    fn coords<const D: usize>(&self, fields: &[String]) -> Result<[f64; D]> {
        let mut out = [0.0; D];
        for (o, f) in out.iter_mut().zip(fields) {
            *o = self.float(f)?;
        }
        Ok(out)
    }

    fn rect<const D: usize>(&self, fields: &[String]) -> Result<Rect<D>> {
        let lo = self.coords::<D>(&fields[..D])?;
        let hi = self.coords::<D>(&fields[D..2 * D])?;
        Rect::new(lo, hi).map_err(|e| self.err(e.to_string()))
    }
}

/// Reads a dataset file; ids must be unique.
pub fn read_dataset<const D: usize>(path: &Path) -> Result<Vec<ObjectRecord<D>>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, fields) in read_rows(path)? {
        let p = LineParser { path, line };
        p.columns(&fields, 1 + 2 * D)?;
        let id = p.integer(&fields[0])?;
        if !seen.insert(id) {
            return Err(p.err(format!("duplicate id {id}")));
        }
        out.push(ObjectRecord::new(id, p.rect::<D>(&fields[1..])?));
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_coords(w: &mut impl Write, coords: &[f64]) -> std::io::Result<()> {
    for c in coords {
        write!(w, ",{c}")?;
    }
    Ok(())
}

pub fn write_dataset<const D: usize>(path: &Path, objects: &[ObjectRecord<D>]) -> Result<()> {
    let mut w = create(path)?;
    for o in objects {
        write!(w, "{}", o.id)?;
        write_coords(&mut w, o.mbr.lo())?;
        write_coords(&mut w, o.mbr.hi())?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads range queries in file order; the `qid` column is checked but not
/// kept.
pub fn read_queries<const D: usize>(path: &Path) -> Result<Vec<Rect<D>>> {
    read_rows(path)?
        .into_iter()
        .map(|(line, fields)| {
            let p = LineParser { path, line };
            p.columns(&fields, 1 + 2 * D)?;
            p.integer(&fields[0])?;
            p.rect::<D>(&fields[1..])
        })
        .collect()
}

pub fn write_queries<const D: usize>(path: &Path, queries: &[Rect<D>]) -> Result<()> {
    let mut w = create(path)?;
    for (qid, q) in queries.iter().enumerate() {
        write!(w, "{qid}")?;
        write_coords(&mut w, q.lo())?;
        write_coords(&mut w, q.hi())?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_knn_queries<const D: usize>(path: &Path) -> Result<Vec<KnnQuery<D>>> {
    read_rows(path)?
        .into_iter()
        .map(|(line, fields)| {
            let p = LineParser { path, line };
            p.columns(&fields, 2 + D)?;
            p.integer(&fields[0])?;
            let point = p.coords::<D>(&fields[1..=D])?;
            let k = p.integer(&fields[D + 1])?;
            if k == 0 {
                return Err(p.err("K must be positive"));
            }
            Ok(KnnQuery { point, k: k as usize })
        })
        .collect()
}

pub fn write_knn_queries<const D: usize>(path: &Path, queries: &[KnnQuery<D>]) -> Result<()> {
    let mut w = create(path)?;
    for (qid, q) in queries.iter().enumerate() {
        write!(w, "{qid}")?;
        write_coords(&mut w, &q.point)?;
        writeln!(w, ",{}", q.k)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads raw coordinates and rescales every axis to `[0, 1]`.
///
/// Lines may hold `d` coordinates (ids are line order), `id, x_1..x_d`
/// (points), or `id, lo_1..lo_d, hi_1..hi_d` (boxes); every line of a file
/// must use the same layout. Axes with a single distinct value map to 0.
pub fn ingest_points_csv<const D: usize>(path: &Path) -> Result<(Vec<ObjectRecord<D>>, Scale)> {
    let rows = read_rows(path)?;
    let Some((_, first)) = rows.first() else {
        return Err(Error::InsufficientData(format!("{} holds no records", path.display())));
    };
    let width = first.len();
    if ![D, D + 1, 2 * D + 1].contains(&width) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: rows[0].0,
            message: format!("expected {D}, {} or {} fields, found {width}", D + 1, 2 * D + 1),
        });
    }
    let mut seen = HashSet::new();
    let mut raw = Vec::with_capacity(rows.len());
    for (i, (line, fields)) in rows.iter().enumerate() {
        let p = LineParser { path, line: *line };
        p.columns(fields, width)?;
        let (id, rest) = if width == D {
            (i as u64, &fields[..])
        } else {
            (p.integer(&fields[0])?, &fields[1..])
        };
        if !seen.insert(id) {
            return Err(p.err(format!("duplicate id {id}")));
        }
        let rect = if width == 2 * D + 1 {
            p.rect::<D>(rest)?
        } else {
            Rect::point(p.coords::<D>(rest)?)
        };
        raw.push(ObjectRecord::new(id, rect));
    }

    let mut min = [f64::INFINITY; D];
    let mut max = [f64::NEG_INFINITY; D];
    for o in &raw {
        for axis in 0..D {
            min[axis] = min[axis].min(o.mbr.lo()[axis]);
            max[axis] = max[axis].max(o.mbr.hi()[axis]);
        }
    }
    let rescale = |v: f64, axis: usize| {
        let span = max[axis] - min[axis];
        if span > 0.0 {
            ((v - min[axis]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    let objects = raw
        .into_iter()
        .map(|o| {
            let lo = std::array::from_fn(|a| rescale(o.mbr.lo()[a], a));
            let hi = std::array::from_fn(|a| rescale(o.mbr.hi()[a], a));
            ObjectRecord::new(o.id, Rect::new(lo, hi).expect("rescaling keeps lo <= hi"))
        })
        .collect();
    Ok((
        objects,
        Scale {
            min: min.to_vec(),
            max: max.to_vec(),
        },
    ))
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
