//! Bundled instances and the seeded validation corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hypergraph::Hypergraph;

/// Vertices `p, v1, v2, q`; seven unit-weight edges
/// `pv1, pv2, v1v2, v1q, v2q, pv1v2, v1v2q`.
pub fn h1() -> Hypergraph {
    Hypergraph::from_names(
        "H1",
        &["p", "v1", "v2", "q"],
        &[
            (&["p", "v1"], 1.0),
            (&["p", "v2"], 1.0),
            (&["v1", "v2"], 1.0),
            (&["v1", "q"], 1.0),
            (&["v2", "q"], 1.0),
            (&["p", "v1", "v2"], 1.0),
            (&["v1", "v2", "q"], 1.0),
        ],
    )
    .expect("bundled instance")
}

/// Vertices `p, v1, v2, q`; two unit-weight edges `pv1v2, v1v2q`.
pub fn h2() -> Hypergraph {
    Hypergraph::from_names(
        "H2",
        &["p", "v1", "v2", "q"],
        &[(&["p", "v1", "v2"], 1.0), (&["v1", "v2", "q"], 1.0)],
    )
    .expect("bundled instance")
}

/// `H2` plus a vertex `w` hanging off `v1` through the edge `{v1, w}`.
pub fn pendant_h2() -> Hypergraph {
    Hypergraph::from_names(
        "H2+pendant",
        &["p", "v1", "v2", "q", "w"],
        &[
            (&["p", "v1", "v2"], 1.0),
            (&["v1", "v2", "q"], 1.0),
            (&["v1", "w"], 1.0),
        ],
    )
    .expect("bundled instance")
}

pub fn single_edge() -> Hypergraph {
    Hypergraph::from_names("single-edge", &["x", "y"], &[(&["x", "y"], 1.0)])
        .expect("bundled instance")
}

/// `p – v – q` with unit weights.
pub fn path() -> Hypergraph {
    Hypergraph::from_names(
        "path",
        &["p", "v", "q"],
        &[(&["p", "v"], 1.0), (&["v", "q"], 1.0)],
    )
    .expect("bundled instance")
}

/// A connected random hypergraph with at most `max_vertices` vertices and
/// `max_edges` edges, weights in `[0.5, 2]`.
pub fn random_hypergraph(seed: u64, max_vertices: usize, max_edges: usize) -> Hypergraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(2..=max_vertices.max(2));
        let m = rng.gen_range(1..=max_edges.max(1));
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let size = rng.gen_range(1..=n);
            let mut members: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                members.swap(i, j);
            }
            members.truncate(size);
            members.sort_unstable();
            let weight = (rng.gen_range(0.5..2.0f64) * 8.0).round() / 8.0;
            edges.push((members, weight));
        }
        let names = (0..n).map(|i| format!("u{i}")).collect();
        if let Ok(h) = Hypergraph::new(format!("random-{seed}"), names, edges) {
            if h.is_connected() {
                return h;
            }
        }
    }
}

/// Fixed validation corpus: `H1`, `H2`, single edge, path, pendant `H2`
/// and twenty random instances with `|V| ≤ 5`, `|E| ≤ 6`.
pub fn corpus() -> Vec<Hypergraph> {
    let mut out = vec![h1(), h2(), single_edge(), path(), pendant_h2()];
    out.extend(random_corpus());
    out
}

pub fn random_corpus() -> Vec<Hypergraph> {
    (0..20).map(|k| random_hypergraph(1000 + k, 5, 6)).collect()
}
