//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qtda_core::complex::{binomial, clique_density, enumerate_cliques, Graph};
use qtda_core::emulator::{lgz_run, NoiseModel, SuesSampler, SwesSampler};
use qtda_core::estimators::{
    eigencount_exact, eigencount_stochastic, hoeffding_samples, padding_identity, renyi_entropy,
    spectral_entropy, subtrace_estimate, EntropyMethod,
};
use qtda_core::homology::{
    betti_exact, combinatorial_laplacian, dirac_operator, hodge_nullity, pad_laplacian, spectral_extrema,
};
use qtda_core::pipeline::{resource_estimate, ResourceMode};
use qtda_core::sparse_access::{SparseAccessOracle, Triple, TripleListStore};
use qtda_core::spectrum::eigh;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

fn graph_from_code(n: usize, code: u64) -> Graph {
    let edges: Vec<_> = pairs(n)
        .into_iter()
        .enumerate()
        .filter(|(i, _)| code >> i & 1 == 1)
        .map(|(_, e)| e)
        .collect();
    Graph::from_edges(n, &edges).unwrap()
}

fn cliques(g: &Graph, k: usize) -> Vec<Vec<usize>> {
    enumerate_cliques(g, k)
        .unwrap()
        .members
        .iter()
        .map(|&m| (0..g.n()).filter(|v| m >> v & 1 == 1).collect())
        .collect()
}

/// Signed face matrix from vertex lists: removing the `i`-th smallest vertex
/// carries sign `(-1)^i`.
fn dense_boundary(g: &Graph, k: usize) -> DMatrix<f64> {
    let rows = cliques(g, k - 1);
    let cols = cliques(g, k);
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (j, c) in cols.iter().enumerate() {
        for i in 0..c.len() {
            let mut face = c.clone();
            face.remove(i);
            let r = rows.iter().position(|x| *x == face).unwrap();
            m[(r, j)] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    m
}

fn random_psd(dim: usize, rank: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, rank, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose()
}

fn store(m: &DMatrix<f64>) -> TripleListStore {
    TripleListStore::from_dense(m, 0.0).unwrap()
}

// 1. betti_exact agrees with the Laplacian nullity on random 8-vertex graphs.
fn hodge_equivalence() -> Outcome {
    let start = Instant::now();
    let graphs: Vec<Graph> = (0..240u64)
        .map(|s| {
            let p = [0.3, 0.5, 0.7, 0.85][s as usize % 4];
            Graph::random(8, p, &mut rng(1000 + s)).unwrap()
        })
        .collect();
    let mismatches: usize = graphs
        .par_iter()
        .map(|g| {
            (0..8)
                .take_while(|&k| enumerate_cliques(g, k).unwrap().chi() > 0)
                .filter(|&k| betti_exact(g, k).unwrap().betti != hodge_nullity(g, k, None).unwrap().betti)
                .count()
        })
        .sum();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 120.0,
        format!("{} graphs, {mismatches} mismatches, {secs:.1}s", graphs.len()),
    )
}

// 2. Chain condition and Dirac square on every labeled graph with n <= 6.
fn chain_and_dirac() -> Outcome {
    let mut total = 0usize;
    let mut failures = 0usize;
    for n in 1..=6usize {
        let codes = 1u64 << pairs(n).len();
        total += codes as usize;
        failures += (0..codes)
            .into_par_iter()
            .filter(|&code| !chain_and_dirac_hold(&graph_from_code(n, code)))
            .count();
    }
    outcome(failures == 0, format!("{total} graphs, {failures} failures"))
}

fn chain_and_dirac_hold(g: &Graph) -> bool {
    let top = (0..g.n()).take_while(|&k| enumerate_cliques(g, k).unwrap().chi() > 0).last().unwrap();
    let bd: Vec<DMatrix<f64>> = (1..=top).map(|k| dense_boundary(g, k)).collect();
    for w in bd.windows(2) {
        if (&w[0] * &w[1]).iter().any(|&x| x != 0.0) {
            return false;
        }
    }
    let d = dirac_operator(g).unwrap();
    let b = d.matrix.to_dense_real();
    let sq = &b * &b;
    let mut want = DMatrix::<f64>::zeros(b.nrows(), b.ncols());
    for blk in &d.blocks {
        let k = blk.k;
        let mut lap = DMatrix::<f64>::zeros(blk.size, blk.size);
        if k >= 1 {
            lap += bd[k - 1].transpose() * &bd[k - 1];
        }
        if k < top {
            lap += &bd[k] * bd[k].transpose();
        }
        want.view_mut((blk.offset, blk.offset), (blk.size, blk.size)).copy_from(&lap);
    }
    d.blocks.len() == top + 1 && sq == want
}

/// One representative per isomorphism class: grow classes one edge at a time
/// and keep the least edge code over relabelings that sort vertices by degree.
fn isomorphism_classes(n: usize) -> Vec<u64> {
    let index: Vec<Vec<usize>> = {
        let mut idx = vec![vec![0; n]; n];
        for (i, (u, v)) in pairs(n).into_iter().enumerate() {
            idx[u][v] = i;
            idx[v][u] = i;
        }
        idx
    };
    let canonical = |code: u64| -> u64 {
        let g = graph_from_code(n, code);
        let mut degrees: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
        degrees.sort_unstable();
        let mut best = u64::MAX;
        let mut perm = Vec::with_capacity(n);
        fn extend(g: &Graph, degrees: &[usize], index: &[Vec<usize>], perm: &mut Vec<usize>, code: u64, best: &mut u64) {
            let p = perm.len();
            if p == degrees.len() {
                *best = (*best).min(code);
                return;
            }
            for v in 0..degrees.len() {
                if g.degree(v) != degrees[p] || perm.contains(&v) {
                    continue;
                }
                let mut c = code;
                for (a, &u) in perm.iter().enumerate() {
                    if g.has_edge(u, v) {
                        c |= 1 << index[a][p];
                    }
                }
                perm.push(v);
                extend(g, degrees, index, perm, c, best);
                perm.pop();
            }
        }
        extend(&g, &degrees, &index, &mut perm, 0, &mut best);
        best
    };
    let edges = pairs(n).len();
    let mut level: BTreeSet<u64> = BTreeSet::from([0]);
    let mut all = vec![0u64];
    for _ in 0..edges {
        let next: BTreeSet<u64> = level
            .par_iter()
            .flat_map_iter(|&code| {
                (0..edges)
                    .filter(move |i| code >> i & 1 == 0)
                    .map(move |i| canonical(code | 1 << i))
            })
            .collect();
        all.extend(&next);
        level = next;
    }
    all
}

// 3. Padding identity with exact counts on every graph up to isomorphism,
// n <= 7, every k with cliques.
fn padding_exact() -> Outcome {
    let mut graphs = 0usize;
    let mut classes_ok = true;
    let mut worst = 0.0f64;
    let known = [1usize, 2, 4, 11, 34, 156, 1044];
    for n in 1..=7usize {
        let classes = isomorphism_classes(n);
        classes_ok &= classes.len() == known[n - 1];
        graphs += classes.len();
        let err = classes
            .par_iter()
            .map(|&code| {
                let g = graph_from_code(n, code);
                let mut err = 0.0f64;
                for k in 0..n {
                    let chi = enumerate_cliques(&g, k).unwrap().chi();
                    if chi == 0 {
                        break;
                    }
                    let delta = combinatorial_laplacian(&g, k).unwrap();
                    let gamma = pad_laplacian(&g, k).unwrap();
                    for b in [0.0, 0.25, 1.0, 2.5, 4.0] {
                        let lhs = padding_identity(
                            eigencount_exact(&gamma, 0.0, b).unwrap(),
                            binomial(n, k + 1),
                            chi as u64,
                        );
                        err = err.max((lhs - eigencount_exact(&delta, 0.0, b).unwrap()).abs());
                    }
                }
                err
            })
            .reduce(|| 0.0, f64::max);
        worst = worst.max(err);
    }
    outcome(
        classes_ok && worst <= 1e-10,
        format!("{graphs} isomorphism classes, max error {worst:.1e}"),
    )
}

// 4. Per-eigenvalue mass within delta under uniform sampling.
fn sues_contract() -> Outcome {
    let mu = 0.1;
    let samples = 4000;
    let slack = ((1.0f64 / 0.01).ln() / (2.0 * samples as f64)).sqrt();
    let mut worst = f64::INFINITY;
    let mut matrices = 0;
    for s in 0..24u64 {
        let mut r = rng(4000 + s);
        let m = if s % 2 == 0 {
            let dim = r.random_range(4..=64);
            let rank = r.random_range(1..=dim);
            random_psd(dim, rank, &mut r) / dim as f64
        } else {
            let g = Graph::random(r.random_range(4..=8), 0.6, &mut r).unwrap();
            combinatorial_laplacian(&g, s as usize % 3 % 2).unwrap().to_dense_real()
        };
        let h = store(&m);
        let bound = h.gershgorin_bound().unwrap();
        let values = eigh(&h, false).unwrap().values;
        let delta = 0.02 * values.last().unwrap().max(1e-3);
        let model = NoiseModel::for_precision(delta, mu, bound).unwrap();
        assert!(model.resolution() <= delta);
        let stream = SuesSampler::new(&h, model).unwrap().stream(samples, 40 + s);
        let dim = values.len() as f64;
        for &lambda in &values {
            let mult = values.iter().filter(|&&v| (v - lambda).abs() <= 1e-9).count() as f64;
            let hit = stream.iter().filter(|x| (x.value - lambda).abs() <= delta).count() as f64;
            worst = worst.min(hit / samples as f64 - ((1.0 - mu) * mult / dim - slack));
        }
        matrices += 1;
    }
    outcome(worst >= 0.0, format!("{matrices} matrices, min margin {worst:.4}"))
}

// 5. LGZ estimates of beta_k/chi_k on C4 and random clique-dense graphs.
fn lgz_end_to_end() -> Outcome {
    let t = 8;
    let rel = 1.0 / 16.0;
    let m = hoeffding_samples(0.05, 0.95).unwrap();
    let mut instances = vec![(Graph::cycle(4).unwrap(), 1usize)];
    let mut r = rng(5000);
    while instances.len() < 60 {
        let n = r.random_range(4..=6);
        let g = Graph::random(n, r.random_range(0.5..0.95), &mut r).unwrap();
        let k = r.random_range(0..=2usize);
        if enumerate_cliques(&g, k).unwrap().chi() == 0 || clique_density(&g, k).unwrap() < 0.25 {
            continue;
        }
        let ext = spectral_extrema(&combinatorial_laplacian(&g, k).unwrap()).unwrap();
        if ext.lambda_min_nonzero.is_some_and(|l| l > rel * ext.gershgorin_bound) {
            instances.push((g, k));
        }
    }
    let seeds = 20u64;
    let rates: Vec<f64> = instances
        .par_iter()
        .map(|(g, k)| {
            let exact = betti_exact(g, *k).unwrap();
            let target = exact.betti as f64 / exact.dim_hk as f64;
            let bound = combinatorial_laplacian(g, *k).unwrap().gershgorin_bound().unwrap();
            let model = NoiseModel::for_bound(t, bound, 0.05).unwrap();
            let ok = (0..seeds)
                .filter(|&s| (lgz_run(g, *k, model, m, s).unwrap().value - target).abs() <= 0.05)
                .count();
            ok as f64 / seeds as f64
        })
        .collect();
    let min = rates.iter().cloned().fold(1.0, f64::min);
    outcome(
        min >= 0.95,
        format!("{} instances x {seeds} seeds, M = {m}, worst rate {min:.2}", instances.len()),
    )
}

// 6. Weighted sampling frequencies follow lambda/Tr.
fn swes_weights() -> Outcome {
    let samples = 20_000;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (i, dim) in [4usize, 8, 16, 32].into_iter().enumerate() {
        let mut r = rng(6000 + i as u64);
        let mut diag: Vec<f64> = (0..dim).map(|j| (j as f64 + r.random_range(0.1..0.9)) / dim as f64).collect();
        diag[0] = 0.0;
        let h = TripleListStore::diagonal(&diag);
        let tr: f64 = diag.iter().sum();
        let model = NoiseModel::for_bound(8, 1.0, 0.1).unwrap();
        let stream = SwesSampler::new(&h, model).unwrap().stream(samples, 60 + i as u64);
        for &lambda in &diag {
            let p = lambda / tr;
            let freq = stream.iter().filter(|x| x.drawn == lambda).count() as f64 / samples as f64;
            let sigma = (p * (1.0 - p) / samples as f64).sqrt();
            let z = if sigma > 0.0 { (freq - p).abs() / sigma } else if freq == 0.0 { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            checked += 1;
        }
    }
    outcome(worst <= 3.0, format!("{checked} eigenvalues, max deviation {worst:.2} sigma"))
}

// 7. Subtrace estimates against the dense partial trace.
fn subtrace_reduction() -> Outcome {
    let (eps, mu) = (0.05, 0.9);
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for s in 0..24u64 {
        let mut r = rng(7000 + s);
        let dim = r.random_range(6..=32);
        let m = random_psd(dim, r.random_range(1..=dim), &mut r);
        let h = store(&(&m / eigh(&store(&m), false).unwrap().values.last().unwrap().max(1e-12)));
        let bins = if s % 2 == 0 { 8 } else { 16 };
        let b = [0.5, 0.75, 1.0][s as usize % 3];
        let width = b / bins as f64;
        let values = eigh(&h, false).unwrap().values;
        let oracle = values.iter().filter(|&&v| v <= b).map(|&v| v.max(0.0)).sum::<f64>() / dim as f64;
        let est = subtrace_estimate(&h, b, bins, width, eps, mu, 70 + s).unwrap();
        let tol = width + b * (bins + 1) as f64 * eps;
        worst = worst.max((est.value - oracle).abs() - tol);
        count += 1;
    }
    outcome(worst <= 0.0, format!("{count} matrices, worst excess {worst:.4}"))
}

// 8. Entropies of the padded P3 edge Laplacian.
fn entropies() -> Outcome {
    let p3 = Graph::path(3).unwrap();
    let gamma = pad_laplacian(&p3, 1).unwrap();
    let p = [0.25f64, 0.75];
    let shannon = -p.iter().map(|x| x * x.ln()).sum::<f64>();
    let renyi = |a: f64| p.iter().map(|x| x.powf(a)).sum::<f64>().ln() / (1.0 - a);
    let mut exact_err = (spectral_entropy(&gamma, EntropyMethod::Exact).unwrap().entropy - shannon).abs();
    for a in [0.5, 2.0, 3.0] {
        exact_err = exact_err.max((renyi_entropy(&gamma, a, EntropyMethod::Exact).unwrap().entropy - renyi(a)).abs());
    }

    let sampled = EntropyMethod::Sampled {
        samples: 100_000,
        t: 16,
        seed: 8,
    };
    let c4 = combinatorial_laplacian(&Graph::cycle(4).unwrap(), 0).unwrap();
    let k4 = pad_laplacian(&Graph::complete(4).unwrap(), 1).unwrap();
    let mut sampled_err = 0.0f64;
    let mut monotone = true;
    let instances: [&dyn SparseAccessOracle; 3] = [&gamma, &c4, &k4];
    for h in instances {
        let exact = spectral_entropy(h, EntropyMethod::Exact).unwrap().entropy;
        sampled_err = sampled_err.max((spectral_entropy(h, sampled).unwrap().entropy - exact).abs());
        let exact2 = renyi_entropy(h, 2.0, EntropyMethod::Exact).unwrap().entropy;
        sampled_err = sampled_err.max((renyi_entropy(h, 2.0, sampled).unwrap().entropy - exact2).abs());
        let mut prev = f64::INFINITY;
        for a in [0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0, 5.0] {
            let s = if a == 1.0 {
                exact
            } else {
                renyi_entropy(h, a, EntropyMethod::Exact).unwrap().entropy
            };
            monotone &= s <= prev + 1e-12;
            prev = s;
        }
    }
    outcome(
        exact_err <= 1e-10 && sampled_err <= 0.05 && monotone,
        format!("exact error {exact_err:.1e}, sampled error {sampled_err:.4} nats, monotone {monotone}"),
    )
}

// 9. Qubit-count anchors.
fn resource_anchors() -> Outcome {
    let got = [
        resource_estimate(80, Some(9), Some(30), None, ResourceMode::SparseAccess).unwrap().qubit_count,
        resource_estimate(80, None, Some(30), None, ResourceMode::LocalTrotter).unwrap().qubit_count,
        resource_estimate(80, None, None, None, ResourceMode::SingleQubitRegister).unwrap().qubit_count,
    ];
    outcome(got == [200, 110, 81], format!("{got:?}"))
}

fn widest_gap(values: &[f64]) -> f64 {
    let top = *values.last().unwrap();
    let mut best = (0.0, top / 2.0);
    for w in values.windows(2) {
        let mid = (w[0] + w[1]) / 2.0;
        if w[1] - w[0] > best.0 && mid > 0.05 * top && mid < 0.95 * top {
            best = (w[1] - w[0], mid);
        }
    }
    best.1
}

// 10. Kernel-polynomial baseline accuracy and cost scaling.
fn baseline_sanity() -> Outcome {
    let mut matrices: Vec<TripleListStore> = Vec::new();
    for (n, k) in [(9usize, 2usize), (9, 3), (10, 2), (10, 3), (10, 4)] {
        let g = Graph::random(n, 0.7, &mut rng(10_000 + n as u64 * 10 + k as u64)).unwrap();
        matrices.push(TripleListStore::from_oracle(&pad_laplacian(&g, k).unwrap()).unwrap());
    }
    for s in 0..5u64 {
        let g = Graph::random(12, 0.45, &mut rng(10_100 + s)).unwrap();
        matrices.push(combinatorial_laplacian(&g, 1).unwrap());
    }
    let mut worst = 0.0f64;
    for (i, h) in matrices.iter().enumerate() {
        assert!(h.dim() <= 256);
        let values = eigh(h, false).unwrap().values;
        let b = widest_gap(&values);
        let exact = eigencount_exact(h, 0.0, b).unwrap();
        let kpm = eigencount_stochastic(h, b, 300, 64, 100 + i as u64).unwrap().value;
        worst = worst.max((kpm - exact).abs());
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = [32usize, 64, 128, 256]
        .iter()
        .map(|&n| {
            let triples = (0..n)
                .flat_map(|i| {
                    let mut row = vec![Triple::real(i, i, 2.0)];
                    if i + 1 < n {
                        row.push(Triple::real(i, i + 1, -1.0));
                        row.push(Triple::real(i + 1, i, -1.0));
                    }
                    row
                })
                .collect();
            let h = TripleListStore::from_triples(n, triples).unwrap();
            let est = eigencount_stochastic(&h, 1.0, 300, 64, 1).unwrap();
            ((h.len() as f64).ln(), (est.matvec_or_sample_count as f64).ln())
        })
        .unzip();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    outcome(
        worst <= 0.05 && (slope - 1.0).abs() <= 0.15,
        format!("{} matrices, max error {worst:.4}, cost slope {slope:.3}", matrices.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("hodge equivalence", hodge_equivalence),
        ("chain condition and dirac square", chain_and_dirac),
        ("padding identity", padding_exact),
        ("uniform sampling contract", sues_contract),
        ("lgz end to end", lgz_end_to_end),
        ("weighted sampling frequencies", swes_weights),
        ("subtrace reduction", subtrace_reduction),
        ("entropies", entropies),
        ("resource anchors", resource_anchors),
        ("baseline sanity", baseline_sanity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += !o.pass as usize;
        println!(
            "{} criterion {:>2} {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
