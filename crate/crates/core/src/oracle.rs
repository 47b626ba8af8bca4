//! Slow reference computations for tiny instances. The min-norm and KD
//! searches are independent of the fast paths apart from the KD objective,
//! which needs a resolvent for every evaluation. The resolvent oracle is the
//! exact dual active-set solve, which the fast resolvent also falls back on
//! for near-tied inputs.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::kd_objective;
use crate::dual::dual_resolvent;
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::laplacian::{active_faces, default_tie_tol};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Interior points per segment in the KD grid of pairwise combinations.
    pub grid: usize,
    pub vertex_cap: usize,
    /// Largest vertex set of `𝓛f` the min-norm oracle will enumerate.
    pub atom_cap: usize,
    pub iterations: usize,
    pub multistarts: usize,
    /// Best distinct KD candidates handed to the compass search.
    pub polish: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid: 3,
            vertex_cap: 5,
            atom_cap: 50_000,
            iterations: 2_000_000,
            multistarts: 1000,
            polish: 8,
            seed: 0,
        }
    }
}

fn check_cap(h: &Hypergraph, cfg: &OracleConfig) -> Result<()> {
    if h.num_vertices() > cfg.vertex_cap {
        return Err(Error::CapExceeded {
            what: "vertices",
            value: h.num_vertices(),
            cap: cfg.vertex_cap,
        });
    }
    Ok(())
}

// ---- min-norm point -------------------------------------------------------

/// Vertices of the polytope `𝓛f`, one per choice of a pair on every active
/// face, with duplicates removed.
pub fn laplacian_vertices(h: &Hypergraph, f: &[f64], cfg: &OracleConfig) -> Result<Vec<Vec<f64>>> {
    check_cap(h, cfg)?;
    let faces = active_faces(h, f, default_tie_tol(h, f))?;
    let n = h.num_vertices();
    let mut points = vec![vec![0.0; n]];
    for fd in faces.iter().filter(|fd| fd.is_active()) {
        let scale = h.edges()[fd.edge].weight * fd.gap;
        let count = points.len() * fd.argmax.len() * fd.argmin.len();
        if count > cfg.atom_cap {
            return Err(Error::CapExceeded {
                what: "polytope vertices",
                value: count,
                cap: cfg.atom_cap,
            });
        }
        let mut next = Vec::with_capacity(count);
        let mut seen = HashSet::new();
        for p in &points {
            for &u in &fd.argmax {
                for &v in &fd.argmin {
                    let mut q = p.clone();
                    q[u] += scale;
                    q[v] -= scale;
                    let key: Vec<i64> = q.iter().map(|x| (x * 1e9).round() as i64).collect();
                    if seen.insert(key) {
                        next.push(q);
                    }
                }
            }
        }
        points = next;
    }
    Ok(points)
}

fn project_simplex(v: &mut [f64]) {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Least weighted-norm point of `𝓛f` by projected gradient over the convex
/// weights of its enumerated vertices, step `1/Λ` with `Λ` twice the
/// largest eigenvalue of `W^½ V Vᵀ W^½`.
pub fn oracle_min_norm(h: &Hypergraph, f: &[f64], cfg: &OracleConfig) -> Result<Vec<f64>> {
    let verts = laplacian_vertices(h, f, cfg)?;
    let n = h.num_vertices();
    let k = verts.len();
    if k == 1 {
        return Ok(verts.into_iter().next().unwrap());
    }
    let isd: Vec<f64> = h.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for p in &verts {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += p[i] * isd[i] * p[j] * isd[j];
            }
        }
    }
    let lmax = m.symmetric_eigen().eigenvalues.max();
    let step = 1.0 / (2.0 * lmax);
    let scale: f64 = verts.iter().map(|p| h.norm(p).powi(2)).fold(0.0, f64::max);

    let mut alpha = vec![1.0 / k as f64; k];
    let mut x = vec![0.0; n];
    let mut gap = f64::INFINITY;
    for _ in 0..cfg.iterations {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (a, p) in alpha.iter().zip(&verts) {
            for i in 0..n {
                x[i] += a * p[i];
            }
        }
        // gradient of ‖Vα‖² in α is 2⟨x, p_j⟩
        let grad: Vec<f64> = verts.iter().map(|p| 2.0 * h.dot(&x, p)).collect();
        let current: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * g).sum();
        let best = grad.iter().cloned().fold(f64::INFINITY, f64::min);
        gap = current - best;
        if gap <= 1e-14 * (1.0 + scale) {
            return Ok(x);
        }
        let mut next: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        project_simplex(&mut next);
        let moved = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        alpha = next;
        if moved <= 1e-15 {
            return Ok(x);
        }
    }
    Err(Error::NotConverged {
        solver: "oracle min-norm",
        iterations: cfg.iterations,
        certificate: gap,
    })
}

// ---- resolvent ------------------------------------------------------------

/// `J_λ f` through the dual active-set solve, without the first-order stage.
pub fn oracle_resolvent(h: &Hypergraph, f: &[f64], lambda: f64, cfg: &OracleConfig) -> Result<Vec<f64>> {
    check_cap(h, cfg)?;
    h.check_len(f)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    dual_resolvent(h, f, lambda, cfg.iterations)
}

// ---- Kantorovich difference -----------------------------------------------

/// Vertices of `{f̃ : f̃(0) = 0, f̃(u) − f̃(v) ≤ d(u,v)}` by solving every
/// square subsystem of tight constraints and keeping the feasible solutions.
pub fn lipschitz_polytope_vertices(h: &Hypergraph, cfg: &OracleConfig) -> Result<Vec<Vec<f64>>> {
    check_cap(h, cfg)?;
    h.require_connected()?;
    let n = h.num_vertices();
    if n == 1 {
        return Ok(vec![vec![0.0]]);
    }
    let mut cons = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v {
                cons.push((u, v, f64::from(h.finite_distance(u, v)?)));
            }
        }
    }
    let dim = n - 1;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut seen = HashSet::new();
    let mut choice: Vec<usize> = (0..dim).collect();
    loop {
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        let mut b = DVector::<f64>::zeros(dim);
        for (r, &c) in choice.iter().enumerate() {
            let (u, v, d) = cons[c];
            if u > 0 {
                a[(r, u - 1)] += 1.0;
            }
            if v > 0 {
                a[(r, v - 1)] -= 1.0;
            }
            b[r] = d;
        }
        if let Some(sol) = a.lu().solve(&b) {
            let mut dens = vec![0.0; n];
            for i in 0..dim {
                dens[i + 1] = sol[i];
            }
            let feasible = cons.iter().all(|&(u, v, d)| dens[u] - dens[v] <= d + 1e-9);
            if feasible && dens.iter().all(|x| x.is_finite()) {
                let key: Vec<i64> = dens.iter().map(|x| (x * 1e6).round() as i64).collect();
                if seen.insert(key) {
                    out.push(dens.iter().map(|x| (x * 1e6).round() / 1e6).collect());
                }
            }
        }
        // next combination
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(out.into_iter().map(|d| h.from_density(&d)).collect());
            }
            i -= 1;
            if choice[i] < cons.len() - dim + i {
                choice[i] += 1;
                for j in i + 1..dim {
                    choice[j] = choice[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleKd {
    pub value: f64,
    pub witness: Vec<f64>,
    /// Every evaluated candidate within `10⁻⁹` of the best value.
    pub maximisers: Vec<Vec<f64>>,
    pub polytope_vertices: usize,
    pub evaluated: usize,
}

/// Dense search for `KD_λ(x,y)`: all vertices of the pinned Lipschitz
/// polytope, a grid on every segment between two vertices, and random
/// convex combinations of vertices improved by feasible-direction ascent.
pub fn oracle_kd(h: &Hypergraph, x: usize, y: usize, lambda: f64, cfg: &OracleConfig) -> Result<OracleKd> {
    check_cap(h, cfg)?;
    h.check_vertex(x)?;
    h.check_vertex(y)?;
    if x == y {
        return Err(Error::InvalidArgument("KD needs two distinct vertices".into()));
    }
    h.finite_distance(x, y)?;
    let obj = |f: &[f64]| kd_objective(h, f, x, y, lambda, None);
    let verts = lipschitz_polytope_vertices(h, cfg)?;

    let mut cands: Vec<Vec<f64>> = verts.clone();
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            for s in 1..=cfg.grid {
                let t = s as f64 / (cfg.grid + 1) as f64;
                cands.push(verts[i].iter().zip(&verts[j]).map(|(a, b)| (1.0 - t) * a + t * b).collect());
            }
        }
    }
    let mut evaluated = 0;
    let mut scored: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cands.len() + 2 * cfg.multistarts);
    for c in cands {
        let v = obj(&c)?;
        evaluated += 1;
        scored.push((c, v));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.multistarts {
        let weights: Vec<f64> = (0..verts.len()).map(|_| -rng.gen::<f64>().ln()).collect();
        let total: f64 = weights.iter().sum();
        let mut start = vec![0.0; h.num_vertices()];
        for (w, p) in weights.iter().zip(&verts) {
            for (s, v) in start.iter_mut().zip(p) {
                *s += w / total * v;
            }
        }
        let neg: Vec<f64> = start.iter().map(|v| -v).collect();
        for s in [start, neg] {
            let v = obj(&s)?;
            evaluated += 1;
            scored.push((s, v));
        }
    }

    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut seeds: Vec<usize> = Vec::new();
    for (k, (f, _)) in scored.iter().enumerate() {
        if seeds.len() >= cfg.polish {
            break;
        }
        let p = h.density(&h.pin(f));
        if !seeds.iter().any(|&j| {
            let q = h.density(&h.pin(&scored[j].0));
            p.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-9)
        }) {
            seeds.push(k);
        }
    }
    for k in seeds {
        let (f, v, used) = compass_polish(h, &scored[k].0, scored[k].1, &obj)?;
        evaluated += used;
        scored.push((f, v));
    }

    let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let maximisers: Vec<Vec<f64>> = scored
        .iter()
        .filter(|s| s.1 >= best - 1e-9)
        .map(|s| s.0.clone())
        .collect();
    Ok(OracleKd {
        value: best,
        witness: maximisers[0].clone(),
        maximisers,
        polytope_vertices: verts.len(),
        evaluated,
    })
}

/// Compass search over shifts of every proper vertex subset, each move
/// clamping the other densities back into the Lipschitz polytope; the step
/// halves whenever no direction improves.
fn compass_polish(
    h: &Hypergraph,
    f: &[f64],
    value: f64,
    obj: &impl Fn(&[f64]) -> Result<f64>,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = h.num_vertices();
    let mut dens = h.density(f);
    let mut best = value;
    let mut used = 0;
    let mut step = 1.0;
    while step >= COMPASS_MIN_STEP {
        let mut found: Option<(Vec<f64>, f64)> = None;
        for mask in 1u32..(1 << n) - 1 {
            for sign in [1.0, -1.0] {
                let mut t = dens.clone();
                for u in (0..n).filter(|u| mask >> u & 1 == 1) {
                    t[u] += sign * step;
                }
                for u in (0..n).filter(|u| mask >> u & 1 == 0) {
                    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                    for v in (0..n).filter(|v| mask >> v & 1 == 1) {
                        let d = f64::from(h.distance(u, v).unwrap_or(u32::MAX));
                        lo = lo.max(t[v] - d);
                        hi = hi.min(t[v] + d);
                    }
                    t[u] = t[u].min(hi).max(lo);
                }
                let v = obj(&h.from_density(&t))?;
                used += 1;
                if v > found.as_ref().map_or(best + 1e-13, |b| b.1) {
                    found = Some((t, v));
                }
            }
        }
        match found {
            Some((t, v)) => {
                dens = t;
                best = v;
            }
            None => step /= 2.0,
        }
    }
    Ok((h.pin(&h.from_density(&dens)), best, used))
}

const COMPASS_MIN_STEP: f64 = 1e-7;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{h1, h2};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn min_norm_examples() {
        let cfg = OracleConfig::default();
        let h = h2();
        let v = oracle_min_norm(&h, &h.rho(0).unwrap(), &cfg).unwrap();
        assert!(close(&v, &[-1.0, 0.0, 0.0, 1.0], 1e-7), "{v:?}");
        let g = h1();
        let v = oracle_min_norm(&g, &g.rho(0).unwrap(), &cfg).unwrap();
        assert!(close(&v, &[-3.0, 0.0, 0.0, 3.0], 1e-7), "{v:?}");
        assert_eq!(oracle_min_norm(&g, &g.degree_vector(), &cfg).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn resolvent_examples() {
        let cfg = OracleConfig::default();
        let h = h2();
        let g = oracle_resolvent(&h, &h.rho(0).unwrap(), 0.5, &cfg).unwrap();
        assert!(close(&g, &[1.0 / 3.0, 2.0, 2.0, 5.0 / 3.0], 1e-10), "{g:?}");
        let c = h.degree_vector();
        assert!(close(&oracle_resolvent(&h, &c, 0.7, &cfg).unwrap(), &c, 1e-12));
        let g = oracle_resolvent(&h, &[-1.0, 0.0, 0.0, 1.0], 1.0, &cfg).unwrap();
        assert!(close(&g, &[-0.5, 0.0, 0.0, 0.5], 1e-10));
    }

    #[test]
    fn polytope_vertices_are_lipschitz_and_pinned() {
        let h = h2();
        let cfg = OracleConfig::default();
        let verts = lipschitz_polytope_vertices(&h, &cfg).unwrap();
        assert!(verts.contains(&h.pin(&h.rho(0).unwrap())));
        for v in &verts {
            assert!(h.lipschitz_constant(v).unwrap() <= 1.0 + 1e-9);
            assert_eq!(h.density(v)[0], 0.0);
        }
    }

    #[test]
    fn kd_examples() {
        let h = h2();
        let cfg = OracleConfig {
            multistarts: 50,
            ..Default::default()
        };
        let pq = oracle_kd(&h, 0, 3, 0.1, &cfg).unwrap();
        let qp = oracle_kd(&h, 3, 0, 0.1, &cfg).unwrap();
        assert!(pq.value >= 2.0 - 0.2 / 1.1 - 1e-9);
        assert!((pq.value - qp.value).abs() <= 1e-6);
    }

    #[test]
    fn caps_are_enforced() {
        let h = crate::instances::random_hypergraph(5, 8, 4);
        let cfg = OracleConfig {
            vertex_cap: 1,
            ..Default::default()
        };
        assert!(matches!(
            oracle_resolvent(&h, &vec![0.0; h.num_vertices()], 1.0, &cfg),
            Err(Error::CapExceeded { .. })
        ));
    }
}
