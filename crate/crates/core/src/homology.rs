//! Boundary maps, combinatorial Laplacians, the Dirac operator, and exact
//! Betti numbers.
//!
//! Sign convention: the boundary of a clique sends it to the alternating sum
//! of its faces, where removing the `i`-th vertex (vertices in ascending
//! order, `i` from 0) carries sign `(-1)^i`. Homology is unreduced, so
//! `∂_0 = 0` and `Δ_0` is the ordinary graph Laplacian.

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::Serialize;

use crate::complex::{binomial, enumerate_cliques, position_in, CliqueSet, Graph};
use crate::error::{Error, Result};
use crate::sparse_access::{Location, SparseAccessOracle, Triple, TripleListStore};
use crate::spectrum;

/// Relative zero tolerance for eigenvalues, scaled by the Gershgorin bound.
pub const ZERO_TOL_REL: f64 = 1e-8;

/// Eigenvalues below this are treated as zero.
pub fn zero_tolerance(gershgorin: f64) -> f64 {
    if gershgorin > 0.0 {
        ZERO_TOL_REL * gershgorin
    } else {
        f64::MIN_POSITIVE
    }
}

#[inline]
fn parity_sign(pos: u32) -> i8 {
    if pos % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Matrix of `∂_k` restricted to the clique bases: rows are `k`-vertex
/// cliques, columns are `(k+1)`-vertex cliques.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundaryMatrix {
    pub k: usize,
    pub rows: CliqueSet,
    pub cols: CliqueSet,
    /// `(row, col, ±1)`, sorted by column then row.
    pub entries: Vec<(usize, usize, i8)>,
}

impl BoundaryMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.chi(), self.cols.chi())
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let (r, c) = self.shape();
        let mut m = vec![vec![0i64; c]; r];
        for &(i, j, s) in &self.entries {
            m[i][j] = s as i64;
        }
        m
    }

    pub fn rank(&self) -> usize {
        let (r, c) = self.shape();
        integer_rank(r, c, self.entries.iter().map(|&(i, j, s)| (i, j, s as i64)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BoundaryMap {
    /// `∂_0`, the zero map out of the vertex space.
    Zero { cols: CliqueSet },
    Matrix(BoundaryMatrix),
}

impl BoundaryMap {
    pub fn rank(&self) -> usize {
        match self {
            BoundaryMap::Zero { .. } => 0,
            BoundaryMap::Matrix(m) => m.rank(),
        }
    }
}

/// `∂_k` on the clique complex of `g`.
pub fn boundary_matrix(g: &Graph, k: usize) -> Result<BoundaryMap> {
    let cols = enumerate_cliques(g, k)?;
    if k == 0 {
        return Ok(BoundaryMap::Zero { cols });
    }
    let rows = enumerate_cliques(g, k - 1)?;
    Ok(BoundaryMap::Matrix(boundary_from_sets(k, rows, cols)))
}

fn boundary_from_sets(k: usize, rows: CliqueSet, cols: CliqueSet) -> BoundaryMatrix {
    let mut entries = Vec::with_capacity(cols.chi() * (k + 1));
    for (j, &sigma) in cols.members.iter().enumerate() {
        // faces come out in vertex order; collect then sort rows ascending
        let mut col: Vec<(usize, usize, i8)> = crate::complex::mask_vertices(sigma)
            .enumerate()
            .map(|(pos, v)| {
                let face = sigma & !(1u64 << v);
                let i = rows.index_of(face).expect("faces of cliques are cliques");
                (i, j, parity_sign(pos as u32))
            })
            .collect();
        col.sort_unstable();
        entries.extend(col);
    }
    BoundaryMatrix {
        k,
        rows,
        cols,
        entries,
    }
}

/// Column of `Δ_k` indexed by clique `sigma` (weight `k+1`), as
/// `(clique mask, value)` sorted by mask. Only nonzero entries are returned.
pub(crate) fn laplacian_column(g: &Graph, k: usize, sigma: u64) -> Vec<(u64, f64)> {
    let vertex_mask = g.vertex_mask();
    let common = crate::complex::mask_vertices(sigma).fold(vertex_mask, |m, v| m & g.neighbors(v));
    let up_degree = (common & !sigma).count_ones() as f64;
    let down_degree = if k == 0 { 0.0 } else { (k + 1) as f64 };

    let diag = down_degree + up_degree;
    let mut out = if diag != 0.0 { vec![(sigma, diag)] } else { Vec::new() };
    for a in crate::complex::mask_vertices(sigma) {
        let face = sigma & !(1u64 << a);
        // b must be adjacent to every vertex of the face
        let face_common = crate::complex::mask_vertices(face).fold(vertex_mask, |m, v| m & g.neighbors(v));
        let mut cand = face_common & !sigma;
        while cand != 0 {
            let b = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            let tau = face | 1u64 << b;
            let mut value = 0i32;
            if k > 0 {
                value += (parity_sign(position_in(sigma, a)) * parity_sign(position_in(tau, b))) as i32;
            }
            if g.has_edge(a, b) {
                let rho = sigma | 1u64 << b;
                value += (parity_sign(position_in(rho, b)) * parity_sign(position_in(rho, a))) as i32;
            }
            if value != 0 {
                out.push((tau, value as f64));
            }
        }
    }
    out.sort_unstable_by_key(|&(m, _)| m);
    out
}

fn laplacian_store(g: &Graph, basis: &CliqueSet) -> Result<TripleListStore> {
    let mut triples = Vec::new();
    for (j, &sigma) in basis.members.iter().enumerate() {
        for (tau, v) in laplacian_column(g, basis.k, sigma) {
            let i = basis.index_of(tau).expect("laplacian neighbors are cliques");
            triples.push(Triple::real(i, j, v));
        }
    }
    TripleListStore::from_triples(basis.chi(), triples)
}

/// `Δ_k = ∂_k^† ∂_k + ∂_{k+1} ∂_{k+1}^†` on the clique basis (χ_k × χ_k).
pub fn combinatorial_laplacian(g: &Graph, k: usize) -> Result<TripleListStore> {
    let basis = enumerate_cliques(g, k)?;
    if basis.is_empty() {
        return Err(Error::EmptyBasis { k });
    }
    laplacian_store(g, &basis)
}

/// Block layout of the Dirac operator: block `k` holds the `(k+1)`-cliques.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiracBlock {
    pub k: usize,
    pub offset: usize,
    pub size: usize,
}

#[derive(Debug, Clone)]
pub struct DiracOperator {
    pub matrix: TripleListStore,
    pub blocks: Vec<DiracBlock>,
}

/// Block-tridiagonal `B` with `∂_k` above and `∂_k^†` below the diagonal,
/// over every nonempty clique dimension.
pub fn dirac_operator(g: &Graph) -> Result<DiracOperator> {
    let mut sets = Vec::new();
    for k in 0..g.n() {
        let s = enumerate_cliques(g, k)?;
        if s.is_empty() {
            break;
        }
        sets.push(s);
    }
    let mut blocks = Vec::with_capacity(sets.len());
    let mut offset = 0;
    for s in &sets {
        blocks.push(DiracBlock {
            k: s.k,
            offset,
            size: s.chi(),
        });
        offset += s.chi();
    }
    let mut triples = Vec::new();
    for k in 1..sets.len() {
        let bm = boundary_from_sets(k, sets[k - 1].clone(), sets[k].clone());
        let (ro, co) = (blocks[k - 1].offset, blocks[k].offset);
        for (i, j, s) in bm.entries {
            triples.push(Triple::real(ro + i, co + j, s as f64));
            triples.push(Triple::real(co + j, ro + i, s as f64));
        }
    }
    Ok(DiracOperator {
        matrix: TripleListStore::from_triples(offset, triples)?,
        blocks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BettiMethod {
    Rank,
    Hodge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BettiReport {
    pub k: usize,
    pub betti: usize,
    /// χ_k, the dimension of the clique space.
    pub dim_hk: usize,
    pub method: BettiMethod,
    /// Hodge only: the tolerance reached the smallest nonzero eigenvalue.
    pub gap_violated: bool,
}

/// `β_k = dim ker ∂_k − rank ∂_{k+1}` by fraction-free integer elimination.
pub fn betti_exact(g: &Graph, k: usize) -> Result<BettiReport> {
    let down = boundary_matrix(g, k)?;
    let chi = match &down {
        BoundaryMap::Zero { cols } => cols.chi(),
        BoundaryMap::Matrix(m) => m.cols.chi(),
    };
    if chi == 0 {
        return Err(Error::EmptyBasis { k });
    }
    let rank_up = if k + 1 < g.n() {
        boundary_matrix(g, k + 1)?.rank()
    } else {
        0
    };
    Ok(BettiReport {
        k,
        betti: chi - down.rank() - rank_up,
        dim_hk: chi,
        method: BettiMethod::Rank,
        gap_violated: false,
    })
}

/// Nullity of `Δ_k`: eigenvalues below `tol` from a dense eigendecomposition.
/// `tol` defaults to `ZERO_TOL_REL` times the Gershgorin bound.
pub fn hodge_nullity(g: &Graph, k: usize, tol: Option<f64>) -> Result<BettiReport> {
    let lap = combinatorial_laplacian(g, k)?;
    let gersh = lap.gershgorin_bound()?;
    let default_tol = zero_tolerance(gersh);
    let tol = tol.unwrap_or(default_tol);
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let spec = spectrum::eigh(&lap, false)?;
    let betti = spec.count_below(tol);
    let gap_violated = spec.min_above(default_tol).is_some_and(|m| tol >= m);
    Ok(BettiReport {
        k,
        betti,
        dim_hk: lap.dim(),
        method: BettiMethod::Hodge,
        gap_violated,
    })
}

/// Colexicographic rank of a subset mask among subsets of equal weight.
/// Agrees with ordering masks as integers.
pub fn subset_rank(mask: u64) -> u64 {
    crate::complex::mask_vertices(mask)
        .enumerate()
        .map(|(i, v)| binomial(v, i + 1))
        .sum()
}

/// Inverse of [`subset_rank`] for subsets of size `size` from `n` vertices.
pub fn subset_unrank(mut rank: u64, size: usize, n: usize) -> u64 {
    let mut mask = 0u64;
    let mut upper = n;
    for i in (1..=size).rev() {
        let mut v = upper - 1;
        while binomial(v, i) > rank {
            v -= 1;
        }
        rank -= binomial(v, i);
        mask |= 1u64 << v;
        upper = v;
    }
    mask
}

/// Zero-padded Laplacian `Γ_k`: indexed by all `(k+1)`-subsets of vertices,
/// equal to `Δ_k` on clique rows and columns and zero elsewhere. Entries are
/// computed from the adjacency structure on demand.
#[derive(Debug, Clone)]
pub struct PaddedLaplacian {
    graph: Graph,
    k: usize,
    dim: usize,
}

pub fn pad_laplacian(g: &Graph, k: usize) -> Result<PaddedLaplacian> {
    if k >= g.n() {
        return Err(Error::DimensionOutOfRange { k, n: g.n() });
    }
    let dim = binomial(g.n(), k + 1);
    if dim > usize::MAX as u64 / 2 {
        return Err(Error::InvalidInput("padded dimension overflows".into()));
    }
    Ok(PaddedLaplacian {
        graph: g.clone(),
        k,
        dim: dim as usize,
    })
}

impl PaddedLaplacian {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    fn column_masks(&self, j: usize) -> Result<Vec<(u64, f64)>> {
        if j >= self.dim {
            return Err(Error::IndexOutOfRange {
                i: 0,
                j,
                dim: self.dim,
            });
        }
        let sigma = subset_unrank(j as u64, self.k + 1, self.graph.n());
        if !self.graph.is_clique(sigma) {
            return Ok(Vec::new());
        }
        Ok(laplacian_column(&self.graph, self.k, sigma))
    }
}

impl SparseAccessOracle for PaddedLaplacian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn entry(&self, i: usize, j: usize) -> Result<Complex64> {
        if i >= self.dim || j >= self.dim {
            return Err(Error::IndexOutOfRange { i, j, dim: self.dim });
        }
        let target = subset_unrank(i as u64, self.k + 1, self.graph.n());
        let value = self
            .column_masks(j)?
            .into_iter()
            .find(|&(m, _)| m == target)
            .map_or(0.0, |(_, v)| v);
        Ok(Complex64::new(value, 0.0))
    }

    fn column_nnz(&self, j: usize) -> Result<usize> {
        Ok(self.column_masks(j)?.len())
    }

    fn nonzero_location(&self, j: usize, ell: usize) -> Result<Location> {
        let col = self.column_masks(j)?;
        let evaluated = col.len();
        col.get(ell)
            .map(|&(m, _)| Location {
                row: subset_rank(m) as usize,
                comparisons: evaluated,
            })
            .ok_or(Error::ExhaustedColumn {
                col: j,
                ell,
                count: evaluated,
            })
    }

    fn row_sparsity_bound(&self) -> usize {
        (self.k + 1) * (self.graph.n() - self.k - 1) + 1
    }

    fn column(&self, j: usize) -> Result<Vec<(usize, Complex64)>> {
        Ok(self
            .column_masks(j)?
            .into_iter()
            .map(|(m, v)| (subset_rank(m) as usize, Complex64::new(v, 0.0)))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralExtrema {
    pub gershgorin_bound: f64,
    /// Smallest eigenvalue above the zero tolerance; `None` for the zero matrix.
    pub lambda_min_nonzero: Option<f64>,
    pub lambda_max: f64,
    /// Set when every eigenvalue is within the zero tolerance.
    pub all_zero: bool,
}

pub fn spectral_extrema<A: SparseAccessOracle + ?Sized>(h: &A) -> Result<SpectralExtrema> {
    let gershgorin_bound = h.gershgorin_bound()?;
    let spec = spectrum::eigh(h, false)?;
    let tol = zero_tolerance(gershgorin_bound);
    let lambda_min_nonzero = spec.min_above(tol);
    Ok(SpectralExtrema {
        gershgorin_bound,
        lambda_min_nonzero,
        lambda_max: spec.max(),
        all_zero: lambda_min_nonzero.is_none(),
    })
}

/// Exact rank of an integer matrix given as `(row, col, value)` entries,
/// by Bareiss fraction-free elimination. Runs in `i128` and restarts in
/// arbitrary precision on overflow.
pub fn integer_rank<I>(rows: usize, cols: usize, entries: I) -> usize
where
    I: IntoIterator<Item = (usize, usize, i64)>,
{
    let mut dense = vec![vec![0i128; cols]; rows];
    for (i, j, v) in entries {
        dense[i][j] = v as i128;
    }
    match bareiss_rank_i128(dense.clone()) {
        Some(r) => r,
        None => bareiss_rank_big(
            dense
                .into_iter()
                .map(|row| row.into_iter().map(BigInt::from).collect())
                .collect(),
        ),
    }
}

fn bareiss_rank_i128(mut m: Vec<Vec<i128>>) -> Option<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut prev: i128 = 1;
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][c];
        for i in rank + 1..rows {
            let lead = m[i][c];
            for j in c + 1..cols {
                let num = pivot
                    .checked_mul(m[i][j])?
                    .checked_sub(lead.checked_mul(m[rank][j])?)?;
                debug_assert_eq!(num % prev, 0);
                m[i][j] = num / prev;
            }
            m[i][c] = 0;
        }
        prev = pivot;
        rank += 1;
    }
    Some(rank)
}

fn bareiss_rank_big(mut m: Vec<Vec<BigInt>>) -> usize {
    let zero = BigInt::from(0);
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| m[r][c] != zero) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        for i in rank + 1..rows {
            let lead = m[i][c].clone();
            for j in c + 1..cols {
                let num = &pivot * &m[i][j] - &lead * &m[rank][j];
                m[i][j] = num / &prev;
            }
            m[i][c] = zero.clone();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}
