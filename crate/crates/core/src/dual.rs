//! Dual active-set form of the resolvent. With one multiplier `μ ≥ 0` per
//! ordered pair of distinct members of an edge and `a = Σ μ (δ_u − δ_v)`,
//! minimise `‖a − f/λ‖² + Σ_e (Σ_{pairs of e} μ)² / (λ ω_e)`; then
//! `J_λ f = f − λa`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

pub(crate) fn pair_count(h: &Hypergraph) -> usize {
    h.edges().iter().map(|e| e.members.len() * (e.members.len() - 1)).sum()
}

pub(crate) fn dual_resolvent(h: &Hypergraph, f: &[f64], lambda: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = h.num_vertices();
    let m = h.num_edges();
    let mut pairs = Vec::new();
    for (e, edge) in h.edges().iter().enumerate() {
        for &u in &edge.members {
            for &v in &edge.members {
                if u != v {
                    pairs.push((e, u, v));
                }
            }
        }
    }
    if pairs.is_empty() {
        return Ok(f.to_vec());
    }
    let isd: Vec<f64> = h.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut a = DMatrix::<f64>::zeros(n + m, pairs.len());
    for (c, &(e, u, v)) in pairs.iter().enumerate() {
        a[(u, c)] += isd[u];
        a[(v, c)] -= isd[v];
        a[(n + e, c)] = 1.0 / (lambda * h.edges()[e].weight).sqrt();
    }
    let mut b = DVector::<f64>::zeros(n + m);
    for i in 0..n {
        b[i] = f[i] * isd[i] / lambda;
    }
    let mu = nnls(&a, &b, max_iter.min(100 * pairs.len()))?;
    let mut g = f.to_vec();
    for (c, &(_, u, v)) in pairs.iter().enumerate() {
        g[u] -= lambda * mu[c];
        g[v] += lambda * mu[c];
    }
    Ok(g)
}


/// Lawson–Hanson active-set solver for `min ‖Ax − b‖` subject to `x ≥ 0`.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<DVector<f64>> {
    let (m, k) = a.shape();
    let mut x = DVector::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let norm1 = (0..k)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let tol = 10.0 * f64::EPSILON * norm1 * m.max(k) as f64 * (1.0 + b.amax());

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(m, cols.len(), |i, c| a[(i, cols[c])]);
        let svd = sub.svd(true, true);
        let smax = svd.singular_values.max();
        let z = svd.solve(b, smax * 1e-13).expect("both factors computed");
        let mut full = DVector::<f64>::zeros(k);
        for (c, &j) in cols.iter().enumerate() {
            full[j] = z[c];
        }
        full
    };

    for _ in 0..max_iter {
        let w = a.transpose() * (b - a * &x);
        let Some(j) = (0..k)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&p, &q| w[p].total_cmp(&w[q]))
        else {
            return Ok(x);
        };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..k).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in (0..k).filter(|&i| passive[i] && z[i] <= 0.0) {
                alpha = alpha.min(x[i] / (x[i] - z[i]));
            }
            x += (z - &x) * alpha;
            for i in 0..k {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    Err(Error::NotConverged {
        solver: "dual active set",
        iterations: max_iter,
        certificate: f64::NAN,
    })
}

