//! Data ingestion, response slicing and sufficient statistics.
//!
//! Everything downstream (criteria, the alternating iteration, the eigen
//! estimators) consumes only the statistics computed here: slice
//! frequencies, the overall and per-slice predictor means, the sample
//! covariance and the between-slice covariance of the slice means.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A regression dataset: an n×p predictor matrix and a length-n response.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Validates shapes and finiteness. Requires n ≥ 2 and p ≥ 1.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = (x.nrows(), x.ncols());
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if p < 1 {
            return Err(Error::InvalidInput("need at least 1 predictor".into()));
        }
        if y.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "X has {n} rows but Y has length {}",
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite entry in predictors or response".into(),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
}

/// How observations are grouped into slices.
///
/// The equal-frequency scheme is the only one implemented; equal-width
/// slicing of the response range is a conceivable alternative that this
/// crate does not provide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceScheme {
    EqualFrequency,
}

impl SliceScheme {
    pub fn partition(self, dataset: &Dataset, h: usize) -> Result<SliceAssignment> {
        match self {
            SliceScheme::EqualFrequency => slice_by_response(dataset, h),
        }
    }
}

/// A partition of the observations into `h` non-empty slices.
///
/// Labels are 0-based slice indices; slice `y` collects the observations
/// with `labels[i] == y`.
#[derive(Debug, Clone)]
pub struct SliceAssignment {
    labels: Vec<usize>,
    counts: Vec<usize>,
}

impl SliceAssignment {
    /// Builds an assignment from explicit labels, checking that every slice
    /// in `0..h` is non-empty and that the labels cover all observations.
    pub fn from_labels(labels: Vec<usize>, h: usize) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidInput("h must be at least 1".into()));
        }
        let mut counts = vec![0usize; h];
        for &l in &labels {
            if l >= h {
                return Err(Error::InvalidInput(format!(
                    "slice label {l} out of range for h = {h}"
                )));
            }
            counts[l] += 1;
        }
        if counts.contains(&0) {
            return Err(Error::InvalidInput("empty slice in assignment".into()));
        }
        Ok(Self { labels, counts })
    }

    pub fn h(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// Equal-frequency slicing of the response into `h` slices.
///
/// Observations are ordered by response value, ties broken by original
/// index, and split into contiguous groups whose sizes differ by at most
/// one (the first `n mod h` slices take the extra observation).
pub fn slice_by_response(dataset: &Dataset, h: usize) -> Result<SliceAssignment> {
    let n = dataset.n();
    if h < 1 {
        return Err(Error::InvalidInput("h must be at least 1".into()));
    }
    if h > n {
        return Err(Error::InvalidInput(format!(
            "too many slices: h = {h} > n = {n}"
        )));
    }
    let y = dataset.y();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        y[i].partial_cmp(&y[j])
            .expect("finite response")
            .then(i.cmp(&j))
    });

    let base = n / h;
    let extra = n % h;
    let mut labels = vec![0usize; n];
    let mut pos = 0usize;
    for slice in 0..h {
        let size = base + usize::from(slice < extra);
        for &obs in &order[pos..pos + size] {
            labels[obs] = slice;
        }
        pos += size;
    }
    SliceAssignment::from_labels(labels, h)
}

/// All sufficient statistics of a sliced dataset.
#[derive(Debug, Clone)]
pub struct SlicedMoments {
    f: DVector<f64>,
    xbar: DVector<f64>,
    slice_means: Vec<DVector<f64>>,
    centered: Vec<DVector<f64>>,
    sigma: DMatrix<f64>,
    gamma: DMatrix<f64>,
    n: usize,
}

impl SlicedMoments {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.xbar.len()
    }

    pub fn h(&self) -> usize {
        self.f.len()
    }

    /// Slice frequencies f_y = n_y / n.
    pub fn f(&self) -> &DVector<f64> {
        &self.f
    }

    /// Overall predictor mean.
    pub fn xbar(&self) -> &DVector<f64> {
        &self.xbar
    }

    /// Mean of the predictors within slice `y`.
    pub fn slice_mean(&self, y: usize) -> &DVector<f64> {
        &self.slice_means[y]
    }

    /// Centered slice mean, the slice mean minus the overall mean.
    pub fn centered_mean(&self, y: usize) -> &DVector<f64> {
        &self.centered[y]
    }

    /// Sample covariance of the predictors (divisor n).
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Between-slice covariance of the slice means,
    /// the f_y-weighted sum of outer products of centered slice means.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }
}

/// Computes all sufficient statistics for a dataset under an assignment.
///
/// The covariance uses divisor n, matching the n_y/n slice weights.
pub fn compute_sliced_moments(
    dataset: &Dataset,
    assignment: &SliceAssignment,
) -> Result<SlicedMoments> {
    if assignment.n() != dataset.n() {
        return Err(Error::ShapeMismatch(format!(
            "assignment covers {} observations, dataset has {}",
            assignment.n(),
            dataset.n()
        )));
    }
    let (n, p, h) = (dataset.n(), dataset.p(), assignment.h());
    let x = dataset.x();

    let f = DVector::from_iterator(h, assignment.counts().iter().map(|&c| c as f64 / n as f64));

    let mut xbar = DVector::zeros(p);
    for i in 0..n {
        xbar += x.row(i).transpose();
    }
    xbar /= n as f64;

    let mut slice_sums = vec![DVector::<f64>::zeros(p); h];
    for (i, &label) in assignment.labels().iter().enumerate() {
        slice_sums[label] += x.row(i).transpose();
    }
    let slice_means: Vec<DVector<f64>> = slice_sums
        .into_iter()
        .zip(assignment.counts())
        .map(|(s, &c)| s / c as f64)
        .collect();
    let centered: Vec<DVector<f64>> = slice_means.iter().map(|m| m - &xbar).collect();

    // Accumulate the upper triangles and mirror, so both matrices come out
    // exactly symmetric.
    let mut sigma = DMatrix::zeros(p, p);
    for i in 0..n {
        let dev = x.row(i).transpose() - &xbar;
        for a in 0..p {
            for b in a..p {
                sigma[(a, b)] += dev[a] * dev[b];
            }
        }
    }
    sigma /= n as f64;

    let mut gamma = DMatrix::zeros(p, p);
    for (y, delta) in centered.iter().enumerate() {
        for a in 0..p {
            for b in a..p {
                gamma[(a, b)] += f[y] * delta[a] * delta[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            sigma[(a, b)] = sigma[(b, a)];
            gamma[(a, b)] = gamma[(b, a)];
        }
    }

    Ok(SlicedMoments {
        f,
        xbar,
        slice_means,
        centered,
        sigma,
        gamma,
        n,
    })
}

/// Selects the response column of a CSV file by header name or 0-based
/// column index.
#[derive(Debug, Clone)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

/// Reads a dataset from CSV. A header row is required; every column other
/// than the response is taken as a predictor, in file order. Decimal point
/// '.', comma separator, no missing values.
pub fn read_dataset_csv(path: &Path, response: &ResponseColumn) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset_from(file, response)
}

/// Same as [`read_dataset_csv`] but from any reader.
pub fn read_dataset_from<R: Read>(reader: R, response: &ResponseColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| csv_error(&e))?.clone();
    let ncols = headers.len();
    let response_idx = match response {
        ResponseColumn::Index(i) => {
            if *i >= ncols {
                return Err(Error::InvalidInput(format!(
                    "response column index {i} out of range (file has {ncols} columns)"
                )));
            }
            *i
        }
        ResponseColumn::Name(name) => {
            headers
                .iter()
                .position(|head| head == name)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("response column '{name}' not found in header"))
                })?
        }
    };
    if ncols < 2 {
        return Err(Error::InvalidInput(
            "CSV must have at least one predictor column and the response".into(),
        ));
    }

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record
            .position()
            .map(|pos| pos.line())
            .unwrap_or(n as u64 + 2);
        if record.len() != ncols {
            return Err(Error::Csv {
                line,
                msg: format!("expected {ncols} fields, found {}", record.len()),
            });
        }
        for (idx, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Csv {
                line,
                msg: format!("cannot parse '{field}' as a number (column {idx})"),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    line,
                    msg: format!("non-finite value '{field}' (column {idx})"),
                });
            }
            if idx == response_idx {
                ys.push(value);
            } else {
                xs.push(value);
            }
        }
        n += 1;
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 observations, got {n}"
        )));
    }
    let p = ncols - 1;
    let x = DMatrix::from_row_slice(n, p, &xs);
    Dataset::new(x, DVector::from_vec(ys))
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map(|pos| pos.line()).unwrap_or(0);
    Error::Csv {
        line,
        msg: e.to_string(),
    }
}

/// Writes a dataset in the format [`read_dataset_csv`] accepts: header
/// `x1,...,xp,y`, response in the last column.
pub fn write_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset_to(dataset, file)
}

/// Same as [`write_dataset_csv`] but to any writer.
pub fn write_dataset_to<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let p = dataset.p();
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    wtr.write_record(&header).map_err(|e| csv_error(&e))?;
    for i in 0..dataset.n() {
        let mut row: Vec<String> = (0..p)
            .map(|j| format!("{:?}", dataset.x()[(i, j)]))
            .collect();
        row.push(format!("{:?}", dataset.y()[i]));
        wtr.write_record(&row).map_err(|e| csv_error(&e))?;
    }
    wtr.flush()?;
    Ok(())
}
