//! Clique complexes built from point clouds or graphs.
//!
//! A `(k+1)`-clique is stored as an `n`-bit mask: bit `p` (counting from the
//! least significant bit) is set when vertex `p` belongs to the clique.
//! Ordering cliques by mask value is the colexicographic order on subsets.

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest vertex count representable by the `u64` clique masks.
pub const MAX_VERTICES: usize = 64;

/// Trials the rejection sampler spends before giving up.
pub const REJECTION_TRIAL_CAP: u64 = 1_000_000;

/// Binomial coefficient `C(n, k)`. Saturates at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Vertices of a clique mask in ascending order.
pub fn mask_vertices(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(v)
        }
    })
}

/// Position of vertex `v` among the set bits of `mask` (0-based, ascending).
#[inline]
pub fn position_in(mask: u64, v: usize) -> u32 {
    (mask & ((1u64 << v) - 1)).count_ones()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} has a non-finite entry")));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points[0].len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.points[i]
            .iter()
            .zip(&self.points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Simple undirected graph on vertices `0..n` stored as adjacency bitsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<u64>,
    epsilon: Option<OrderedScale>,
}

/// Grouping scale a graph was built at. Wrapper so `Graph` can stay `Eq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedScale(pub f64);

impl Eq for OrderedScale {}

impl Graph {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if n > MAX_VERTICES {
            return Err(Error::TooManyVertices {
                n,
                max: MAX_VERTICES,
            });
        }
        Ok(Self {
            n,
            adj: vec![0; n],
            epsilon: None,
        })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v)?;
            }
        }
        Ok(g)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        if n >= 3 {
            for u in 0..n {
                g.add_edge(u, (u + 1) % n)?;
            }
        }
        Ok(g)
    }

    pub fn path(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for u in 1..n {
            g.add_edge(u - 1, u)?;
        }
        Ok(g)
    }

    /// Erdős–Rényi `G(n, p)`.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    g.add_edge(u, v)?;
                }
            }
        }
        Ok(g)
    }

    /// Graph whose edges are the set bits of `code`, with edge `(u, v)`,
    /// `u < v`, at the position it takes in lexicographic pair order.
    pub fn from_edge_code(n: usize, code: u64) -> Result<Self> {
        let mut g = Self::empty(n)?;
        let mut bit = 0;
        for u in 0..n {
            for v in u + 1..n {
                if code >> bit & 1 == 1 {
                    g.add_edge(u, v)?;
                }
                bit += 1;
            }
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v {
            return Err(Error::InvalidInput(format!("self-loop at vertex {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidInput(format!(
                "edge ({u}, {v}) out of range for {} vertices",
                self.n
            )));
        }
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon.map(|e| e.0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u] >> v & 1 == 1
    }

    pub fn neighbors(&self, v: usize) -> u64 {
        self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for v in mask_vertices(self.adj[u] >> (u + 1) << (u + 1)) {
                out.push((u, v));
            }
        }
        out
    }

    /// Mask with all `n` vertex bits set.
    pub fn vertex_mask(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    /// True when every pair of vertices in `mask` is adjacent. Costs O(k²)
    /// bit tests for a mask of weight `k+1`.
    pub fn is_clique(&self, mask: u64) -> bool {
        if mask & !self.vertex_mask() != 0 {
            return false;
        }
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if rest & !self.adj[v] != 0 {
                return false;
            }
        }
        true
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k >= self.n {
            Err(Error::DimensionOutOfRange { k, n: self.n })
        } else {
            Ok(())
        }
    }
}

/// All `(k+1)`-cliques of a graph, sorted ascending by mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliqueSet {
    pub k: usize,
    pub members: Vec<u64>,
}

impl CliqueSet {
    /// χ_k, the number of `(k+1)`-cliques.
    pub fn chi(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Basis index of a clique mask, if it is a member.
    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.members.binary_search(&mask).ok()
    }
}

/// Connect every pair of points at Euclidean distance at most `epsilon`.
pub fn build_epsilon_graph(cloud: &PointCloud, epsilon: f64) -> Result<Graph> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let mut g = Graph::empty(cloud.len())?;
    for i in 0..cloud.len() {
        for j in i + 1..cloud.len() {
            if cloud.distance(i, j) <= epsilon {
                g.add_edge(i, j)?;
            }
        }
    }
    g.epsilon = Some(OrderedScale(epsilon));
    Ok(g)
}

/// Enumerate all `(k+1)`-cliques by ascending-order backtracking over
/// neighbor-set intersections.
pub fn enumerate_cliques(g: &Graph, k: usize) -> Result<CliqueSet> {
    g.check_k(k)?;
    let mut members = Vec::new();
    extend_cliques(g, 0, g.vertex_mask(), k + 1, &mut members);
    members.sort_unstable();
    Ok(CliqueSet { k, members })
}

fn extend_cliques(g: &Graph, current: u64, candidates: u64, remaining: usize, out: &mut Vec<u64>) {
    if remaining == 0 {
        out.push(current);
        return;
    }
    if (candidates.count_ones() as usize) < remaining {
        return;
    }
    let mut cand = candidates;
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        // only vertices above v remain eligible, which keeps each clique unique
        extend_cliques(g, current | 1 << v, cand & g.adj[v], remaining - 1, out);
    }
}

/// Fraction of `(k+1)`-subsets that are cliques, χ_k / C(n, k+1).
pub fn clique_density(g: &Graph, k: usize) -> Result<f64> {
    let chi = enumerate_cliques(g, k)?.chi();
    Ok(chi as f64 / binomial(g.n(), k + 1) as f64)
}

/// Draw a uniformly random `(k+1)`-clique by proposing uniform `(k+1)`-subsets
/// and accepting the first that is a clique. Returns the clique and the
/// number of proposals used.
pub fn sample_clique_rejection<R: Rng + ?Sized>(
    g: &Graph,
    k: usize,
    rng: &mut R,
) -> Result<(u64, u64)> {
    sample_clique_capped(g, k, REJECTION_TRIAL_CAP, rng)
}

pub fn sample_clique_capped<R: Rng + ?Sized>(
    g: &Graph,
    k: usize,
    cap: u64,
    rng: &mut R,
) -> Result<(u64, u64)> {
    g.check_k(k)?;
    for trial in 1..=cap {
        let mask = index::sample(rng, g.n(), k + 1)
            .iter()
            .fold(0u64, |m, v| m | 1 << v);
        if g.is_clique(mask) {
            return Ok((mask, trial));
        }
    }
    Err(Error::NoCliques { k, trials: cap })
}

/// Query-cost figures for preparing the uniform clique state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    pub n: usize,
    pub k: usize,
    pub chi: u64,
    /// C(n, k+1) / χ_k, the expected rejection-sampling trials.
    pub rejection_trials: f64,
    /// k² · sqrt(C(n, k+1) / χ_k), the amplitude-amplification figure.
    pub grover_queries: f64,
}

pub fn grover_cost_model(n: usize, k: usize, chi: u64) -> Result<CostReport> {
    if chi == 0 {
        return Err(Error::InvalidParameter("chi_k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::DimensionOutOfRange { k, n });
    }
    let ratio = binomial(n, k + 1) as f64 / chi as f64;
    Ok(CostReport {
        n,
        k,
        chi,
        rejection_trials: ratio,
        grover_queries: (k * k) as f64 * ratio.sqrt(),
    })
}
