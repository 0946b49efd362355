//! Categorical datasets: in-memory representation, CSV I/O and one-hot encoding.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

/// Zero-based category index within one attribute.
pub type Category = u16;

/// Largest arity representable by [`Category`].
pub const MAX_ARITY: usize = Category::MAX as usize + 1;

/// The value set of one attribute, `0..arity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AttributeDomain {
    arity: usize,
}

impl AttributeDomain {
    pub fn new(arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::config("attribute arity must be at least 1"));
        }
        if arity > MAX_ARITY {
            return Err(Error::config(format!(
                "attribute arity {arity} exceeds the supported maximum {MAX_ARITY}"
            )));
        }
        Ok(Self { arity })
    }

    pub fn binary() -> Self {
        Self { arity: 2 }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

/// An `n x d` matrix of category indices, stored row-major.
///
/// Optional string dictionaries (`feature_names`, `category_names`,
/// `label_names`) are kept when the data came from a file so that it can be
/// written back losslessly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoricalDataset {
    n: usize,
    domains: Vec<AttributeDomain>,
    values: Vec<Category>,
    labels: Option<Vec<usize>>,
    feature_names: Option<Vec<String>>,
    category_names: Option<Vec<Vec<String>>>,
    label_name: Option<String>,
    label_names: Option<Vec<String>>,
}

impl CategoricalDataset {
    /// Builds a dataset from a row-major value buffer of length `n * domains.len()`.
    pub fn new(domains: Vec<AttributeDomain>, n: usize, values: Vec<Category>) -> Result<Self> {
        let d = domains.len();
        if n == 0 || d == 0 {
            return Err(Error::config("dataset needs at least one row and one attribute"));
        }
        if values.len() != n * d {
            return Err(Error::config(format!(
                "value buffer has {} entries, expected {n} x {d}",
                values.len()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            let j = idx % d;
            if v as usize >= domains[j].arity {
                return Err(Error::domain(format!(
                    "row {} attribute {j}: value {v} outside arity {}",
                    idx / d,
                    domains[j].arity
                )));
            }
        }
        Ok(Self {
            n,
            domains,
            values,
            labels: None,
            feature_names: None,
            category_names: None,
            label_name: None,
            label_names: None,
        })
    }

    /// Builds a dataset from rows, inferring each arity as `max value + 1`.
    pub fn from_rows<R: AsRef<[usize]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut maxima = vec![0usize; d];
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("expected {d} values, found {}", row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v >= MAX_ARITY {
                    return Err(Error::domain(format!("category index {v} too large")));
                }
                maxima[j] = maxima[j].max(v);
                values.push(v as Category);
            }
        }
        let domains = maxima
            .into_iter()
            .map(|m| AttributeDomain::new(m + 1))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domains, rows.len(), values)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::config(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Widens arities to declared values. A declared arity smaller than an
    /// observed value is rejected.
    pub fn with_declared_arities(mut self, arities: &[usize]) -> Result<Self> {
        if arities.len() != self.d() {
            return Err(Error::config(format!(
                "{} declared arities for {} attributes",
                arities.len(),
                self.d()
            )));
        }
        for (j, &a) in arities.iter().enumerate() {
            if a < self.domains[j].arity {
                return Err(Error::config(format!(
                    "attribute {j}: declared arity {a} below observed {}",
                    self.domains[j].arity
                )));
            }
            self.domains[j] = AttributeDomain::new(a)?;
        }
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d() {
            return Err(Error::config("feature name count does not match attribute count"));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[AttributeDomain] {
        &self.domains
    }

    pub fn arity(&self, j: usize) -> usize {
        self.domains[j].arity
    }

    /// Row-major value buffer.
    pub fn values(&self) -> &[Category] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Category] {
        let d = self.d();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[Category]> + '_ {
        self.values.chunks_exact(self.d())
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn category_names(&self) -> Option<&[Vec<String>]> {
        self.category_names.as_deref()
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    /// Number of distinct ground-truth labels (`max + 1`), if labels exist.
    pub fn label_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// True when every attribute has at most two values.
    pub fn is_binary(&self) -> bool {
        self.domains.iter().all(|d| d.arity <= 2)
    }

    /// Offsets of each attribute's block in a concatenated per-category layout
    /// (length `d + 1`; the last entry is the total width).
    pub fn category_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.d() + 1);
        let mut acc = 0;
        offsets.push(0);
        for dom in &self.domains {
            acc += dom.arity;
            offsets.push(acc);
        }
        offsets
    }
}

/// Which column of a CSV file holds ground-truth labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum LabelColumn {
    #[default]
    None,
    Name(String),
    Index(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label: LabelColumn::None,
        }
    }
}

/// First-seen-order string interner for one column.
#[derive(Default)]
struct Dictionary {
    index: HashMap<String, usize>,
    names: Vec<String>,
}

impl Dictionary {
    fn intern(&mut self, s: &str) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(s.to_owned(), i);
        self.names.push(s.to_owned());
        i
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<CategoricalDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file), options)
}

/// Parses comma-separated categorical data. Each distinct string in a column
/// becomes a category index in first-seen order.
pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<CategoricalDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let mut header: Option<Vec<String>> = None;
    let mut first_line = 0usize;
    if options.has_header {
        match records.next() {
            Some(rec) => {
                header = Some(rec?.iter().map(str::to_owned).collect());
                first_line = 1;
            }
            None => return Err(Error::Parse { row: 1, message: "missing header row".into() }),
        }
    }

    let mut width = header.as_ref().map(Vec::len);
    let mut label_idx: Option<usize> = None;
    let resolve_label = |width: usize| -> Result<Option<usize>> {
        match &options.label {
            LabelColumn::None => Ok(None),
            LabelColumn::Name(name) => {
                let header = header.as_ref().ok_or_else(|| {
                    Error::config(format!("label column {name:?} requested but the file has no header"))
                })?;
                header
                    .iter()
                    .position(|h| h == name)
                    .map(Some)
                    .ok_or_else(|| Error::config(format!("label column {name:?} not found in header")))
            }
            LabelColumn::Index(i) if *i < width => Ok(Some(*i)),
            LabelColumn::Index(i) => Err(Error::config(format!(
                "label column index {i} out of range for {width} columns"
            ))),
        }
    };
    if let Some(w) = width {
        label_idx = resolve_label(w)?;
    }

    let mut dicts: Vec<Dictionary> = Vec::new();
    let mut label_dict = Dictionary::default();
    let mut values: Vec<Category> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut n = 0usize;

    for (k, rec) in records.enumerate() {
        let rec = rec?;
        let row = rec
            .position()
            .map_or(first_line + k + 1, |p| p.line() as usize);
        let w = *width.get_or_insert(rec.len());
        if label_idx.is_none() && n == 0 && !matches!(options.label, LabelColumn::None) {
            label_idx = resolve_label(w)?;
        }
        if rec.len() != w {
            return Err(Error::Parse {
                row,
                message: format!("expected {w} columns, found {}", rec.len()),
            });
        }
        if dicts.is_empty() {
            let features = w - usize::from(label_idx.is_some());
            dicts.resize_with(features, Dictionary::default);
        }
        let mut j = 0;
        for (c, cell) in rec.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::Parse {
                    row,
                    message: format!("empty cell in column {}", c + 1),
                });
            }
            if Some(c) == label_idx {
                labels.push(label_dict.intern(cell));
                continue;
            }
            let v = dicts[j].intern(cell);
            if v >= MAX_ARITY {
                return Err(Error::Parse {
                    row,
                    message: format!("column {} has more than {MAX_ARITY} distinct values", c + 1),
                });
            }
            values.push(v as Category);
            j += 1;
        }
        n += 1;
    }

    if n == 0 {
        return Err(Error::Parse { row: first_line + 1, message: "no data rows".into() });
    }
    if dicts.is_empty() {
        return Err(Error::config("no feature columns besides the label column"));
    }

    let domains = dicts
        .iter()
        .map(|dict| AttributeDomain::new(dict.names.len()))
        .collect::<Result<Vec<_>>>()?;
    let mut ds = CategoricalDataset::new(domains, n, values)?;
    ds.category_names = Some(dicts.into_iter().map(|d| d.names).collect());
    if let Some(h) = header {
        ds.feature_names = Some(
            h.iter()
                .enumerate()
                .filter(|(c, _)| Some(*c) != label_idx)
                .map(|(_, s)| s.clone())
                .collect(),
        );
        ds.label_name = label_idx.map(|c| h[c].clone());
    }
    if label_idx.is_some() {
        ds.labels = Some(labels);
        ds.label_names = Some(label_dict.names);
    }
    Ok(ds)
}

pub fn save_csv(ds: &CategoricalDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, BufWriter::new(file))
}

/// Writes a header row followed by the data. Category and label names are
/// written when known, indices otherwise. The label column, if any, is last.
pub fn write_csv<W: Write>(ds: &CategoricalDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = ds.d();
    let mut header: Vec<String> = match &ds.feature_names {
        Some(names) => names.clone(),
        None => (0..d).map(|j| format!("a{j}")).collect(),
    };
    if ds.labels.is_some() {
        header.push(ds.label_name.clone().unwrap_or_else(|| "label".into()));
    }
    w.write_record(&header)?;

    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..ds.n {
        record.clear();
        for (j, &v) in ds.row(i).iter().enumerate() {
            record.push(match &ds.category_names {
                Some(names) => names[j][v as usize].clone(),
                None => v.to_string(),
            });
        }
        if let Some(labels) = &ds.labels {
            let l = labels[i];
            record.push(match &ds.label_names {
                Some(names) => names[l].clone(),
                None => l.to_string(),
            });
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Writes one cluster id per line.
pub fn save_assignments(assignment: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_assignments(assignment, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_assignments<W: Write>(assignment: &[usize], w: &mut W) -> std::io::Result<()> {
    for a in assignment {
        writeln!(w, "{a}")?;
    }
    Ok(())
}

/// Reads a one-value-per-line label file (integers or arbitrary strings),
/// mapping distinct values to ids. Integer files keep their values; other
/// files are interned in first-seen order. Blank lines are skipped.
pub fn load_label_file(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))?;
    let cells: Vec<&str> = lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty()).collect();
    if let Ok(ints) = cells.iter().map(|c| c.parse::<usize>()).collect::<Result<Vec<_>, _>>() {
        return Ok(ints);
    }
    let mut dict = Dictionary::default();
    Ok(cells.iter().map(|c| dict.intern(c)).collect())
}

/// Dense one-hot encoding: attribute `j` occupies columns
/// `offsets[j]..offsets[j + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneHotMatrix {
    n: usize,
    offsets: Vec<usize>,
    data: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl OneHotMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn attribute_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn block(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Ground-truth labels carried over from the source dataset.
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }
}

pub fn one_hot(ds: &CategoricalDataset) -> OneHotMatrix {
    let offsets = ds.category_offsets();
    let width = offsets[ds.d()];
    let mut data = vec![0.0; ds.n() * width];
    for (i, row) in ds.rows().enumerate() {
        let out = &mut data[i * width..(i + 1) * width];
        for (j, &v) in row.iter().enumerate() {
            out[offsets[j] + v as usize] = 1.0;
        }
    }
    OneHotMatrix {
        n: ds.n(),
        offsets,
        data,
        labels: ds.labels.clone(),
    }
}
