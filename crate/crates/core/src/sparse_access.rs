//! Sparse-access input models.
//!
//! [`SparseAccessOracle`] is the entry/location oracle pair every operator in
//! this crate is consumed through. Three implementations are provided:
//!
//! * [`TripleListStore`]: nonzeros kept as `(row, col, value)` triples sorted
//!   by column then row. Column lookups are binary searches over the list.
//! * [`LocalTermOracle`]: a sum of few-qubit Hermitian blocks on `n` qubits,
//!   evaluated on demand without forming the `2^n × 2^n` matrix.
//! * [`crate::homology::PaddedLaplacian`]: the zero-padded clique Laplacian.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum;

/// Result of a nonzero-location query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub row: usize,
    /// Comparisons (or candidate evaluations) spent answering the query.
    pub comparisons: usize,
}

/// Entry oracle `O_H` and location oracle `O_{H,loc}` for a Hermitian matrix.
pub trait SparseAccessOracle: Sync {
    fn dim(&self) -> usize;

    /// `H[i, j]`, zero when not stored.
    fn entry(&self, i: usize, j: usize) -> Result<Complex64>;

    /// Number of nonzeros in column `j`.
    fn column_nnz(&self, j: usize) -> Result<usize>;

    /// Row index of the `ell`-th nonzero of column `j`, rows ascending.
    fn nonzero_location(&self, j: usize, ell: usize) -> Result<Location>;

    /// Upper bound on nonzeros per row.
    fn row_sparsity_bound(&self) -> usize;

    /// Column `j` as `(row, value)` pairs, rows ascending.
    fn column(&self, j: usize) -> Result<Vec<(usize, Complex64)>> {
        let count = self.column_nnz(j)?;
        (0..count)
            .map(|ell| {
                let row = self.nonzero_location(j, ell)?.row;
                Ok((row, self.entry(row, j)?))
            })
            .collect()
    }

    fn nnz(&self) -> Result<usize> {
        (0..self.dim()).map(|j| self.column_nnz(j)).sum()
    }

    /// Largest absolute column sum; bounds the spectral radius.
    fn gershgorin_bound(&self) -> Result<f64> {
        let mut best = 0.0f64;
        for j in 0..self.dim() {
            let s: f64 = self.column(j)?.iter().map(|(_, v)| v.norm()).sum();
            best = best.max(s);
        }
        Ok(best)
    }

    fn trace(&self) -> Result<f64> {
        (0..self.dim()).map(|i| self.entry(i, i).map(|v| v.re)).sum()
    }
}

fn check_index(i: usize, j: usize, dim: usize) -> Result<()> {
    if i >= dim || j >= dim {
        Err(Error::IndexOutOfRange { i, j, dim })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triple {
    pub row: usize,
    pub col: usize,
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
}

fn ser_complex<S: serde::Serializer>(v: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&v.re)?;
    t.serialize_element(&v.im)?;
    t.end()
}

impl Triple {
    pub fn new(row: usize, col: usize, value: Complex64) -> Self {
        Self { row, col, value }
    }

    pub fn real(row: usize, col: usize, value: f64) -> Self {
        Self::new(row, col, Complex64::new(value, 0.0))
    }

    fn key(&self) -> (usize, usize) {
        (self.col, self.row)
    }
}

/// Nonzeros sorted lexicographically by column, then row.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleListStore {
    dim: usize,
    triples: Vec<Triple>,
    col_counts: Vec<usize>,
    row_sparsity: usize,
}

impl TripleListStore {
    /// Build from triples already in `(col, row)` order. Out-of-order input,
    /// duplicates, explicit zeros and out-of-range indices are errors.
    pub fn from_sorted(dim: usize, triples: Vec<Triple>) -> Result<Self> {
        for w in triples.windows(2) {
            if w[0].key() == w[1].key() {
                return Err(Error::DuplicateEntry {
                    i: w[1].row,
                    j: w[1].col,
                });
            }
            if w[0].key() > w[1].key() {
                return Err(Error::InvalidInput(format!(
                    "triple ({}, {}) out of column-major order",
                    w[1].row, w[1].col
                )));
            }
        }
        let mut col_counts = vec![0; dim];
        let mut row_counts = vec![0; dim];
        for t in &triples {
            check_index(t.row, t.col, dim)?;
            if t.value == Complex64::new(0.0, 0.0) {
                return Err(Error::InvalidInput(format!(
                    "explicit zero stored at ({}, {})",
                    t.row, t.col
                )));
            }
            if !t.value.re.is_finite() || !t.value.im.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite value at ({}, {})",
                    t.row, t.col
                )));
            }
            col_counts[t.col] += 1;
            row_counts[t.row] += 1;
        }
        let row_sparsity = row_counts
            .iter()
            .chain(&col_counts)
            .copied()
            .max()
            .unwrap_or(0);
        Ok(Self {
            dim,
            triples,
            col_counts,
            row_sparsity,
        })
    }

    /// Sort then build. Duplicates are still rejected, never merged.
    pub fn from_triples(dim: usize, mut triples: Vec<Triple>) -> Result<Self> {
        triples.sort_by_key(Triple::key);
        Self::from_sorted(dim, triples)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            triples: Vec::new(),
            col_counts: vec![0; dim],
            row_sparsity: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let triples = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| Triple::real(i, i, *v))
            .collect();
        Self::from_sorted(values.len(), triples).expect("diagonal triples are well formed")
    }

    /// Keeps entries with absolute value above `drop_below`.
    pub fn from_dense(m: &DMatrix<f64>, drop_below: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        let mut triples = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.abs() > drop_below {
                    triples.push(Triple::real(i, j, v));
                }
            }
        }
        Self::from_sorted(m.nrows(), triples)
    }

    /// Copy any oracle into a store by walking its columns.
    pub fn from_oracle<A: SparseAccessOracle + ?Sized>(a: &A) -> Result<Self> {
        let mut triples = Vec::new();
        for j in 0..a.dim() {
            for (i, v) in a.column(j)? {
                triples.push(Triple::new(i, j, v));
            }
        }
        Self::from_sorted(a.dim(), triples)
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let triples = self
            .triples
            .iter()
            .map(|t| Triple::new(t.row, t.col, t.value * factor))
            .filter(|t| t.value != Complex64::new(0.0, 0.0))
            .collect();
        Self::from_sorted(self.dim, triples)
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.triples.iter().all(|t| t.value.im == 0.0)
    }

    /// First triple index with key ≥ `(col, row)`, plus comparisons used.
    fn lower_bound(&self, col: usize, row: usize) -> (usize, usize) {
        let (mut lo, mut hi) = (0, self.triples.len());
        let mut comparisons = 0;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            comparisons += 1;
            if self.triples[mid].key() < (col, row) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (lo, comparisons)
    }

    /// `y = H x`, returning the multiply-adds performed (one per stored nonzero).
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) -> u64 {
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for t in &self.triples {
            y[t.row] += t.value * x[t.col];
        }
        self.triples.len() as u64
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for t in &self.triples {
            m[(t.row, t.col)] = t.value;
        }
        m
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for t in &self.triples {
            m[(t.row, t.col)] = t.value.re;
        }
        m
    }
}

impl SparseAccessOracle for TripleListStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn entry(&self, i: usize, j: usize) -> Result<Complex64> {
        check_index(i, j, self.dim)?;
        let (pos, _) = self.lower_bound(j, i);
        match self.triples.get(pos) {
            Some(t) if t.row == i && t.col == j => Ok(t.value),
            _ => Ok(Complex64::new(0.0, 0.0)),
        }
    }

    fn column_nnz(&self, j: usize) -> Result<usize> {
        self.col_counts
            .get(j)
            .copied()
            .ok_or(Error::IndexOutOfRange { i: 0, j, dim: self.dim })
    }

    fn nonzero_location(&self, j: usize, ell: usize) -> Result<Location> {
        let count = self.column_nnz(j)?;
        if ell >= count {
            return Err(Error::ExhaustedColumn {
                col: j,
                ell,
                count,
            });
        }
        let (start, comparisons) = self.lower_bound(j, 0);
        Ok(Location {
            row: self.triples[start + ell].row,
            comparisons,
        })
    }

    fn row_sparsity_bound(&self) -> usize {
        self.row_sparsity
    }

    fn nnz(&self) -> Result<usize> {
        Ok(self.triples.len())
    }
}

/// One few-qubit Hermitian term. Bit `b` of the block index corresponds to
/// qubit `qubits[b]`; qubit `q` is bit `q` of a basis-state index.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTerm {
    pub qubits: Vec<usize>,
    pub block: DMatrix<Complex64>,
}

impl LocalTerm {
    pub fn new(qubits: Vec<usize>, block: DMatrix<Complex64>) -> Self {
        Self { qubits, block }
    }

    pub fn real(qubits: Vec<usize>, block: DMatrix<f64>) -> Self {
        Self::new(qubits, block.map(|x| Complex64::new(x, 0.0)))
    }

    fn mask(&self) -> usize {
        self.qubits.iter().fold(0, |m, q| m | 1 << q)
    }

    fn sub_index(&self, x: usize) -> usize {
        self.qubits
            .iter()
            .enumerate()
            .fold(0, |acc, (b, &q)| acc | (x >> q & 1) << b)
    }

    fn scatter(&self, base: usize, sub: usize) -> usize {
        self.qubits
            .iter()
            .enumerate()
            .fold(base & !self.mask(), |acc, (b, &q)| acc | (sub >> b & 1) << q)
    }
}

/// `H = Σ_j H_j` on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTermSum {
    pub n: usize,
    pub terms: Vec<LocalTerm>,
}

/// Caps that keep a local-term sum in the polynomial regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalityLimits {
    pub max_terms: usize,
    pub max_qubits_per_term: usize,
}

impl LocalityLimits {
    /// `n²` terms (at least 16) of at most `max(2, ⌈log₂ n⌉)` qubits each.
    pub fn for_qubits(n: usize) -> Self {
        let log = (usize::BITS - n.saturating_sub(1).leading_zeros()) as usize;
        Self {
            max_terms: (n * n).max(16),
            max_qubits_per_term: log.max(2),
        }
    }
}

/// Largest qubit count accepted by [`from_local_terms`].
pub const MAX_QUBITS: usize = 40;

#[derive(Debug, Clone)]
pub struct LocalTermOracle {
    sum: LocalTermSum,
    row_sparsity: usize,
}

pub fn from_local_terms(sum: LocalTermSum) -> Result<LocalTermOracle> {
    let limits = LocalityLimits::for_qubits(sum.n);
    from_local_terms_with(sum, limits)
}

pub fn from_local_terms_with(sum: LocalTermSum, limits: LocalityLimits) -> Result<LocalTermOracle> {
    if sum.n == 0 || sum.n > MAX_QUBITS {
        return Err(Error::InvalidInput(format!(
            "qubit count must be in 1..={MAX_QUBITS}, got {}",
            sum.n
        )));
    }
    if sum.terms.len() > limits.max_terms {
        return Err(Error::InvalidInput(format!(
            "{} terms exceed the cap of {}",
            sum.terms.len(),
            limits.max_terms
        )));
    }
    let mut bound = 0usize;
    for (idx, term) in sum.terms.iter().enumerate() {
        let s = term.qubits.len();
        if s == 0 || s > limits.max_qubits_per_term {
            return Err(Error::InvalidInput(format!(
                "term {idx} acts on {s} qubits, limit {}",
                limits.max_qubits_per_term
            )));
        }
        if term.qubits.iter().any(|&q| q >= sum.n) {
            return Err(Error::InvalidInput(format!("term {idx} has a qubit out of range")));
        }
        let mut seen = term.qubits.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != s {
            return Err(Error::InvalidInput(format!("term {idx} repeats a qubit")));
        }
        let size = 1usize << s;
        if term.block.nrows() != size || term.block.ncols() != size {
            return Err(Error::InvalidInput(format!(
                "term {idx} block must be {size}x{size}"
            )));
        }
        for a in 0..size {
            for b in 0..size {
                if (term.block[(a, b)] - term.block[(b, a)].conj()).norm() > 1e-12 {
                    return Err(Error::NotHermitian(format!("term {idx} block")));
                }
            }
        }
        bound += size;
    }
    let dim = 1usize << sum.n;
    Ok(LocalTermOracle {
        sum,
        row_sparsity: bound.min(dim),
    })
}

impl LocalTermOracle {
    pub fn n(&self) -> usize {
        self.sum.n
    }

    fn column_rows(&self, j: usize) -> Result<(Vec<usize>, usize)> {
        check_index(0, j, self.dim())?;
        let mut cand = Vec::with_capacity(self.row_sparsity);
        for term in &self.sum.terms {
            for sub in 0..1usize << term.qubits.len() {
                cand.push(term.scatter(j, sub));
            }
        }
        cand.sort_unstable();
        cand.dedup();
        let evaluated = cand.len();
        let mut rows = Vec::with_capacity(cand.len());
        for i in cand {
            if self.entry(i, j)? != Complex64::new(0.0, 0.0) {
                rows.push(i);
            }
        }
        Ok((rows, evaluated))
    }
}

impl SparseAccessOracle for LocalTermOracle {
    fn dim(&self) -> usize {
        1 << self.sum.n
    }

    fn entry(&self, i: usize, j: usize) -> Result<Complex64> {
        check_index(i, j, self.dim())?;
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.sum.terms {
            if (i ^ j) & !term.mask() == 0 {
                acc += term.block[(term.sub_index(i), term.sub_index(j))];
            }
        }
        Ok(acc)
    }

    fn column_nnz(&self, j: usize) -> Result<usize> {
        Ok(self.column_rows(j)?.0.len())
    }

    fn nonzero_location(&self, j: usize, ell: usize) -> Result<Location> {
        let (rows, evaluated) = self.column_rows(j)?;
        rows.get(ell)
            .map(|&row| Location {
                row,
                comparisons: evaluated,
            })
            .ok_or(Error::ExhaustedColumn {
                col: j,
                ell,
                count: rows.len(),
            })
    }

    fn row_sparsity_bound(&self) -> usize {
        self.row_sparsity
    }
}

/// Findings from [`validate`]. Violations are reported, never raised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub nnz: usize,
    pub row_sparsity: usize,
    pub sorted: bool,
    pub duplicates: Vec<(usize, usize)>,
    pub hermitian_violations: Vec<(usize, usize)>,
    /// Smallest eigenvalue, present when a dense check ran.
    pub min_eigenvalue: Option<f64>,
    /// `Some` when PSD was claimed and a dense check ran.
    pub psd: Option<bool>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.sorted
            && self.duplicates.is_empty()
            && self.hermitian_violations.is_empty()
            && self.psd != Some(false)
    }
}

/// Check sortedness, duplicates and Hermiticity of a raw triple list, plus
/// PSD-ness by dense eigendecomposition when `claims_psd` is set.
pub fn validate_triples(dim: usize, triples: &[Triple], claims_psd: bool) -> Result<ValidationReport> {
    let sorted = triples.windows(2).all(|w| w[0].key() < w[1].key());
    let mut keyed: Vec<Triple> = triples.to_vec();
    keyed.sort_by_key(Triple::key);
    let mut duplicates = Vec::new();
    keyed.dedup_by(|b, a| {
        let dup = a.key() == b.key();
        if dup {
            duplicates.push((b.row, b.col));
        }
        dup
    });
    let store = TripleListStore::from_sorted(dim, keyed)?;

    let tol = 1e-12;
    let mut hermitian_violations = Vec::new();
    for t in store.triples() {
        let mirror = store.entry(t.col, t.row)?;
        if (t.value - mirror.conj()).norm() > tol * (1.0 + t.value.norm()) {
            hermitian_violations.push((t.row, t.col));
        }
    }

    let mut min_eigenvalue = None;
    let mut psd = None;
    if hermitian_violations.is_empty() && dim <= spectrum::DENSE_CEILING {
        let spec = spectrum::eigh(&store, false)?;
        let lo = spec.values.first().copied().unwrap_or(0.0);
        min_eigenvalue = Some(lo);
        if claims_psd {
            let scale = store.gershgorin_bound()?.max(1.0);
            psd = Some(lo >= -1e-9 * scale);
        }
    } else if claims_psd && !hermitian_violations.is_empty() {
        psd = Some(false);
    }

    Ok(ValidationReport {
        dim,
        nnz: store.len(),
        row_sparsity: store.row_sparsity_bound(),
        sorted,
        duplicates,
        hermitian_violations,
        min_eigenvalue,
        psd,
    })
}

pub fn validate(store: &TripleListStore, claims_psd: bool) -> Result<ValidationReport> {
    validate_triples(store.dim(), store.triples(), claims_psd)
}

/// Parse the triple-list text format:
///
/// ```text
/// dim <d> nnz <count>
/// i j re [im]
/// ```
///
/// Lines must be sorted by `(j, i)`. Blank lines are ignored.
pub fn read_triple_list<R: BufRead>(reader: R) -> Result<TripleListStore> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));

    let (hline, header) = lines.next().ok_or(Error::EmptyInput)?;
    let header = header?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
    if parts.len() != 4 || parts[0] != "dim" || parts[2] != "nnz" {
        return Err(parse_err(hline, "expected header `dim <d> nnz <count>`".into()));
    }
    let dim: usize = parts[1]
        .parse()
        .map_err(|e| parse_err(hline, format!("bad dim: {e}")))?;
    let nnz: usize = parts[3]
        .parse()
        .map_err(|e| parse_err(hline, format!("bad nnz: {e}")))?;

    let mut triples = Vec::with_capacity(nnz);
    for (line_no, line) in lines {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 && f.len() != 4 {
            return Err(parse_err(line_no, "expected `i j re [im]`".into()));
        }
        let i: usize = f[0].parse().map_err(|e| parse_err(line_no, format!("bad row: {e}")))?;
        let j: usize = f[1].parse().map_err(|e| parse_err(line_no, format!("bad column: {e}")))?;
        let re: f64 = f[2].parse().map_err(|e| parse_err(line_no, format!("bad value: {e}")))?;
        let im: f64 = match f.get(3) {
            Some(s) => s.parse().map_err(|e| parse_err(line_no, format!("bad value: {e}")))?,
            None => 0.0,
        };
        let t = Triple::new(i, j, Complex64::new(re, im));
        if let Some(prev) = triples.last() {
            let prev: &Triple = prev;
            if prev.key() == t.key() {
                return Err(Error::DuplicateEntry { i, j });
            }
            if prev.key() > t.key() {
                return Err(parse_err(line_no, "triples must be sorted by column then row".into()));
            }
        }
        triples.push(t);
    }
    if triples.len() != nnz {
        return Err(parse_err(
            hline,
            format!("header declares {nnz} nonzeros, found {}", triples.len()),
        ));
    }
    TripleListStore::from_sorted(dim, triples)
}

/// Write the triple-list format. Values use shortest round-trip formatting,
/// and the imaginary part is omitted when its bit pattern is `+0.0`.
pub fn write_triple_list<W: Write>(store: &TripleListStore, mut w: W) -> Result<()> {
    writeln!(w, "dim {} nnz {}", store.dim(), store.len())?;
    for t in store.triples() {
        if t.value.im.to_bits() == 0 {
            writeln!(w, "{} {} {:?}", t.row, t.col, t.value.re)?;
        } else {
            writeln!(w, "{} {} {:?} {:?}", t.row, t.col, t.value.re, t.value.im)?;
        }
    }
    Ok(())
}

/// Dense CSV dump for debugging; complex entries are written as `a+bi`.
pub fn write_dense_csv<A: SparseAccessOracle + ?Sized, W: Write>(a: &A, w: W) -> Result<()> {
    let dense = spectrum::to_dense(a)?;
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..dense.nrows() {
        let row: Vec<String> = (0..dense.ncols())
            .map(|j| {
                let v = dense[(i, j)];
                if v.im == 0.0 {
                    format!("{}", v.re)
                } else {
                    format!("{}{:+}i", v.re, v.im)
                }
            })
            .collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
