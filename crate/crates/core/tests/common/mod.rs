#![allow(dead_code)]

use hypermsf::{ChemicalHypergraph, Hyperedge};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Role of a vertex in one hyperedge: absent, input, output, catalyst.
fn build(n: usize, roles: Vec<Vec<u8>>) -> ChemicalHypergraph {
    let mut edges: Vec<Hyperedge> = roles
        .into_iter()
        .filter_map(|r| {
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for (v, &role) in r.iter().enumerate() {
                match role {
                    1 => ins.push(v),
                    2 => outs.push(v),
                    3 => {
                        ins.push(v);
                        outs.push(v);
                    }
                    _ => {}
                }
            }
            (!ins.is_empty() || !outs.is_empty()).then(|| Hyperedge::new(ins, outs))
        })
        .collect();
    // give every vertex at least one non-catalytic membership
    for v in 0..n {
        let covered = edges
            .iter()
            .any(|e| e.pure_inputs().any(|u| u == v) || e.pure_outputs().any(|u| u == v));
        if !covered {
            edges.push(Hyperedge::new(vec![v], vec![(v + 1) % n]));
        }
    }
    ChemicalHypergraph::new(n, edges).unwrap()
}

/// Random chemical hypergraph on `lo..=hi` vertices with catalysts allowed
/// and no isolated vertices.
pub fn hypergraph(lo: usize, hi: usize) -> impl Strategy<Value = ChemicalHypergraph> {
    (lo..=hi).prop_flat_map(|n| {
        let role = prop_oneof![4 => Just(0u8), 3 => Just(1u8), 3 => Just(2u8), 1 => Just(3u8)];
        let edge = proptest::collection::vec(role, n);
        proptest::collection::vec(edge, 1..=6).prop_map(move |roles| build(n, roles))
    })
}

/// Connected Erdős–Rényi style graph: a random spanning tree plus extra edges.
pub fn connected_graph(lo: usize, hi: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (lo..=hi).prop_flat_map(|n| {
        let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
        let extra = proptest::collection::vec((0..n, 0..n, any::<bool>()), 0..=2 * n);
        (Just(n), parents, extra, 0.0f64..1.0).prop_map(|(n, parents, extra, p)| {
            let mut edges: Vec<(usize, usize)> = parents.into_iter().enumerate().map(|(i, par)| (par, i + 1)).collect();
            for (k, (i, j, flip)) in extra.into_iter().enumerate() {
                let (a, b) = (i.min(j), i.max(j));
                let keep = (k as f64 + 0.5) / (2 * n) as f64 <= p;
                if a != b && keep && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a, b)) {
                    edges.push(if flip { (b, a) } else { (a, b) });
                }
            }
            (n, edges)
        })
    })
}

/// Two-colouring by breadth-first search, written independently of the library.
pub fn graph_is_bipartite(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut colour = vec![usize::MAX; n];
    for start in 0..n {
        if colour[start] != usize::MAX {
            continue;
        }
        colour[start] = 0;
        let mut queue = vec![start];
        while let Some(u) = queue.pop() {
            for &(a, b) in edges {
                let w = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if colour[w] == usize::MAX {
                    colour[w] = 1 - colour[u];
                    queue.push(w);
                } else if colour[w] == colour[u] {
                    return false;
                }
            }
        }
    }
    true
}

/// Symmetric form `D^-1/2·S·Sᵀ·D^-1/2`, assembled directly from the hyperedge lists.
pub fn symmetric_laplacian(h: &ChemicalHypergraph) -> DMatrix<f64> {
    let n = h.n_vertices();
    let m = h.n_hyperedges();
    let mut s = DMatrix::<f64>::zeros(n, m);
    for (k, e) in h.hyperedges().iter().enumerate() {
        for &v in e.inputs() {
            s[(v, k)] += 1.0;
        }
        for &v in e.outputs() {
            s[(v, k)] -= 1.0;
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| s.row(i).iter().map(|x| x.abs()).sum()).collect();
    let g = &s * s.transpose();
    DMatrix::from_fn(n, n, |i, j| g[(i, j)] / (deg[i] * deg[j]).sqrt())
}

/// Number of eigenvalues of symmetric `k` below `x`, i.e. the number of
/// roots of `det(K - t·I)` with `t < x`.
///
/// By Sylvester's law of inertia this is the number of negative pivots of a
/// congruence reduction of `K - x·I`. Symmetric Bunch–Parlett pivoting keeps
/// the reduction stable near clustered or repeated roots.
pub fn count_below(k: &DMatrix<f64>, x: f64) -> usize {
    const ALPHA: f64 = 0.640_388_203_202_208; // (1 + √17) / 8
    let n = k.nrows();
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] -= x;
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut count = 0;
    while !active.is_empty() {
        let p = *active
            .iter()
            .max_by(|&&i, &&j| a[(i, i)].abs().total_cmp(&a[(j, j)].abs()))
            .unwrap();
        let mut off = (0, 0, 0.0f64);
        for (ii, &i) in active.iter().enumerate() {
            for &j in &active[ii + 1..] {
                if a[(i, j)].abs() > off.2 {
                    off = (i, j, a[(i, j)].abs());
                }
            }
        }
        if a[(p, p)].abs() >= ALPHA * off.2 {
            let d = a[(p, p)];
            if d == 0.0 {
                // remaining block is exactly zero: those roots equal x
                break;
            }
            if d < 0.0 {
                count += 1;
            }
            active.retain(|&i| i != p);
            for &r in &active {
                for &c in &active {
                    a[(r, c)] -= a[(r, p)] * a[(p, c)] / d;
                }
            }
        } else {
            // 2x2 pivot with negative determinant: one root on each side
            let (i, j, _) = off;
            let (bii, bij, bjj) = (a[(i, i)], a[(i, j)], a[(j, j)]);
            let det = bii * bjj - bij * bij;
            count += 1;
            active.retain(|&r| r != i && r != j);
            for &r in &active {
                for &c in &active {
                    // [a_ri a_rj]·B⁻¹·[a_ic a_jc]ᵀ
                    let (u, v) = (a[(r, i)], a[(r, j)]);
                    let (w, z) = (a[(i, c)], a[(j, c)]);
                    a[(r, c)] -= (u * (bjj * w - bij * z) + v * (bii * z - bij * w)) / det;
                }
            }
        }
    }
    count
}

/// All eigenvalues of symmetric `k` by bisection on [`count_below`].
pub fn bisection_eigenvalues(k: &DMatrix<f64>) -> Vec<f64> {
    let n = k.nrows();
    let radius = (0..n)
        .map(|i| k.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    (0..n)
        .map(|j| {
            let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(k, mid) > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}
