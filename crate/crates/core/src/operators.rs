//! Matrix-free access to real symmetric operators.
//!
//! Everything downstream touches `A` only through [`LinearOperator::apply`]. The
//! implementations here hold read-only state, so `apply` may be called from several
//! threads at once on distinct vectors.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Relative tolerance for accepting a `general` Matrix Market file as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. Both slices have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Known eigenvalues, ascending, for test problems.
    fn exact_spectrum(&self) -> Option<&[f64]> {
        None
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn exact_spectrum(&self) -> Option<&[f64]> {
        (**self).exact_spectrum()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn exact_spectrum(&self) -> Option<&[f64]> {
        (**self).exact_spectrum()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn exact_spectrum(&self) -> Option<&[f64]> {
        (**self).exact_spectrum()
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
    spectrum: Vec<f64>,
}

impl DiagonalOperator {
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

/// Diagonal operator with the given eigenvalues.
pub fn diagonal_operator(eigs: Vec<f64>) -> Result<DiagonalOperator> {
    if eigs.is_empty() {
        return Err(invalid("diagonal operator needs at least one entry"));
    }
    let spectrum = sorted(&eigs);
    Ok(DiagonalOperator {
        diag: eigs,
        spectrum,
    })
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = di * xi;
        }
    }
    fn exact_spectrum(&self) -> Option<&[f64]> {
        Some(&self.spectrum)
    }
}

/// Compressed-row storage of a symmetric matrix with the full pattern stored.
#[derive(Debug, Clone)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    spectrum: Option<Vec<f64>>,
}

impl SparseSymmetric {
    /// Builds from `(row, col, value)` triplets covering the full pattern (both
    /// triangles). Duplicates are summed. Fails unless the result is symmetric to
    /// [`SYMMETRY_TOL`] relative to the largest entry.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sparse matrix must have dimension >= 1"));
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(invalid(format!(
                    "entry ({i}, {j}) out of range for n = {n}"
                )));
            }
            entries.push((i, j, v));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }

        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &merged {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx: Vec<usize> = merged.iter().map(|e| e.1).collect();
        let values: Vec<f64> = merged.iter().map(|e| e.2).collect();
        let m = Self {
            n,
            row_ptr,
            col_idx,
            values,
            spectrum: None,
        };
        m.check_symmetric()?;
        Ok(m)
    }

    /// Builds from lower- (or upper-) triangle triplets, mirroring off-diagonal entries.
    pub fn from_triangle(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        Self::from_triplets(n, &full)
    }

    pub fn with_spectrum(mut self, mut spectrum: Vec<f64>) -> Self {
        spectrum.sort_by(f64::total_cmp);
        self.spectrum = Some(spectrum);
        self
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    fn check_symmetric(&self) -> Result<()> {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j > i {
                    let w = self.get(j, i);
                    if (v - w).abs() > SYMMETRY_TOL * scale {
                        return Err(invalid(format!(
                            "matrix is not symmetric: A[{i},{j}] = {v}, A[{j},{i}] = {w}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl LinearOperator for SparseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.col_idx[r.clone()]
                .iter()
                .zip(&self.values[r])
                .map(|(&j, v)| v * x[j])
                .sum();
        }
    }
    fn exact_spectrum(&self) -> Option<&[f64]> {
        self.spectrum.as_deref()
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
    spectrum: Option<Vec<f64>>,
}

impl DenseSymmetric {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                if (data[i * n + j] - data[j * n + i]).abs() > SYMMETRY_TOL * scale {
                    return Err(invalid(format!("dense matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            n,
            data,
            spectrum: None,
        })
    }

    pub fn with_spectrum(mut self, mut spectrum: Vec<f64>) -> Self {
        spectrum.sort_by(f64::total_cmp);
        self.spectrum = Some(spectrum);
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl LinearOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (row, yi) in self.data.chunks_exact(self.n).zip(y.iter_mut()) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
    fn exact_spectrum(&self) -> Option<&[f64]> {
        self.spectrum.as_deref()
    }
}

/// `c A + d I`.
pub struct ScaleShift<Op> {
    inner: Op,
    scale: f64,
    shift: f64,
    spectrum: Option<Vec<f64>>,
}

impl<Op: LinearOperator> ScaleShift<Op> {
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn shift(&self) -> f64 {
        self.shift
    }
    pub fn inner(&self) -> &Op {
        &self.inner
    }
}

pub fn scale_shift<Op: LinearOperator>(op: Op, c: f64, d: f64) -> Result<ScaleShift<Op>> {
    if c == 0.0 || !c.is_finite() || !d.is_finite() {
        return Err(invalid(format!(
            "scale_shift needs finite nonzero scale, got c = {c}, d = {d}"
        )));
    }
    let spectrum = op
        .exact_spectrum()
        .map(|s| sorted(&s.iter().map(|l| c * l + d).collect::<Vec<_>>()));
    Ok(ScaleShift {
        inner: op,
        scale: c,
        shift: d,
        spectrum,
    })
}

impl<Op: LinearOperator> LinearOperator for ScaleShift<Op> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.scale * *yi + self.shift * xi;
        }
    }
    fn exact_spectrum(&self) -> Option<&[f64]> {
        self.spectrum.as_deref()
    }
}

/// Block-diagonal operator.
pub struct BlockDiagonal {
    blocks: Vec<Box<dyn LinearOperator>>,
    offsets: Vec<usize>,
    spectrum: Option<Vec<f64>>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<Box<dyn LinearOperator>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(invalid("block-diagonal operator needs at least one block"));
        }
        let mut offsets = vec![0];
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.dim());
        }
        let spectrum = blocks
            .iter()
            .map(|b| b.exact_spectrum().map(<[f64]>::to_vec))
            .collect::<Option<Vec<_>>>()
            .map(|parts| sorted(&parts.concat()));
        Ok(Self {
            blocks,
            offsets,
            spectrum,
        })
    }
}

impl LinearOperator for BlockDiagonal {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (b, w) in self.blocks.iter().zip(self.offsets.windows(2)) {
            b.apply(&x[w[0]..w[1]], &mut y[w[0]..w[1]]);
        }
    }
    fn exact_spectrum(&self) -> Option<&[f64]> {
        self.spectrum.as_deref()
    }
}

/// Materializes an operator column by column (row-major result). Test and oracle use.
pub fn to_dense(op: &dyn LinearOperator) -> Vec<f64> {
    let n = op.dim();
    let mut out = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            out[i * n + j] = col[i];
        }
        e[j] = 0.0;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MmSymmetry {
    Symmetric,
    General,
}

/// Reads a real Matrix Market coordinate file into a sparse symmetric operator.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseSymmetric> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    parse_matrix_market(reader, path)
}

pub fn parse_matrix_market(reader: impl BufRead, path: &Path) -> Result<SparseSymmetric> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(
            1,
            format!("column 1: expected `%%MatrixMarket matrix ...` header, got `{header}`"),
        ));
    }
    if tokens[2] != "coordinate" {
        return Err(err(
            1,
            format!(
                "column 3: only coordinate format is supported, got `{}`",
                tokens[2]
            ),
        ));
    }
    match tokens[3].as_str() {
        "real" | "integer" => {}
        other => {
            return Err(err(
                1,
                format!("column 4: unsupported field `{other}` (real required)"),
            ))
        }
    }
    let symmetry = match tokens[4].as_str() {
        "symmetric" => MmSymmetry::Symmetric,
        "general" => MmSymmetry::General,
        other => return Err(err(1, format!("column 5: unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err(
                        lineno,
                        format!("expected `rows cols nnz`, got `{trimmed}`"),
                    ));
                }
                let parse = |k: usize| {
                    fields[k]
                        .parse::<usize>()
                        .map_err(|e| err(lineno, format!("column {}: {e}", k + 1)))
                };
                let (r, c, nnz) = (parse(0)?, parse(1)?, parse(2)?);
                if r != c {
                    return Err(err(lineno, format!("matrix is not square ({r} x {c})")));
                }
                if r == 0 {
                    return Err(err(lineno, "matrix has dimension 0".into()));
                }
                size = Some((r, c, nnz));
                triplets.reserve(nnz);
            }
            Some((n, _, _)) => {
                if fields.len() != 3 {
                    return Err(err(
                        lineno,
                        format!("expected `row col value`, got `{trimmed}`"),
                    ));
                }
                let index = |k: usize| -> Result<usize> {
                    let v = fields[k]
                        .parse::<usize>()
                        .map_err(|e| err(lineno, format!("column {}: {e}", k + 1)))?;
                    if v == 0 || v > n {
                        return Err(err(
                            lineno,
                            format!("column {}: index {v} out of range 1..={n}", k + 1),
                        ));
                    }
                    Ok(v - 1)
                };
                let i = index(0)?;
                let j = index(1)?;
                let v = fields[2]
                    .parse::<f64>()
                    .map_err(|e| err(lineno, format!("column 3: {e}")))?;
                triplets.push((i, j, v));
            }
        }
    }
    let (n, _, nnz) = size.ok_or_else(|| err(1, "missing size line".into()))?;
    if triplets.len() != nnz {
        return Err(err(
            0,
            format!("expected {nnz} entries, found {}", triplets.len()),
        ));
    }
    let built = match symmetry {
        MmSymmetry::Symmetric => SparseSymmetric::from_triangle(n, &triplets),
        MmSymmetry::General => SparseSymmetric::from_triplets(n, &triplets),
    };
    built.map_err(|e| err(0, e.to_string()))
}
