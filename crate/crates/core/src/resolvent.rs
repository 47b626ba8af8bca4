//! The resolvent `J_λ = (I + λ𝓛)⁻¹` as the proximal map of the energy:
//! `J_λ f = argmin_g ‖f − g‖²/(2λ) + E(g)`.
//!
//! The solver alternates steepest descent along the least-norm subgradient
//! with a face solve: once the tie pattern of the minimiser is guessed, the
//! objective is an explicit quadratic in the level values and the
//! stationarity system is linear. Near-ties that defeat both are handed to
//! the dual active-set solve after a fixed number of steps. A candidate is
//! accepted only when the membership residual `dist((f − g)/λ, 𝓛g)` is
//! below the tolerance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dual::{dual_resolvent, pair_count};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::laplacian::{energy, faces_of_density, project_onto_laplacian, project_with_ties};
use crate::minnorm::FwOptions;

const DEFAULT_MAX_ITER: usize = 1_000_000;
/// First-order steps before the dual active-set solve is tried.
const DUAL_AFTER: usize = 200;
const DUAL_PAIR_CAP: usize = 4096;
const GOLDEN_STEPS: usize = 90;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProxResult {
    pub input: Vec<f64>,
    pub lambda: f64,
    pub minimizer: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ResolventOptions {
    /// Residual tolerance; `None` means `10⁻⁹ (1 + ‖f‖)`.
    pub tol: Option<f64>,
    pub warm_start: Option<Vec<f64>>,
    /// First-order step cap; `None` means 10⁶.
    pub max_iter: Option<usize>,
}

pub fn default_tolerance(h: &Hypergraph, f: &[f64]) -> f64 {
    1e-9 * (1.0 + h.norm(f))
}

/// `‖f − g‖²/(2λ) + E(g)`.
pub fn prox_objective(h: &Hypergraph, f: &[f64], g: &[f64], lambda: f64) -> f64 {
    let d = h.distance_between(f, g);
    d * d / (2.0 * lambda) + energy(h, g)
}

/// `dist((f − g)/λ, 𝓛g)`; zero exactly when `g = J_λ f`.
pub fn resolvent_residual(h: &Hypergraph, f: &[f64], g: &[f64], lambda: f64) -> Result<f64> {
    h.check_len(f)?;
    h.check_len(g)?;
    check_lambda(lambda)?;
    let tol = 1e-3 * default_tolerance(h, f);
    residual_within(h, f, g, lambda, &FwOptions::with_tol(tol))
}

/// Relative tie tolerance of the second residual measurement.
const FINE_TIE: f64 = 1e-13;

/// The distance to `𝓛g` measured twice: with the default tie tolerance and
/// with a much finer one. A minimiser whose edges spread by less than the
/// default tolerance loses those edges in the first measurement.
fn residual_within(h: &Hypergraph, f: &[f64], g: &[f64], lambda: f64, opts: &FwOptions) -> Result<f64> {
    let v: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b) / lambda).collect();
    let proj = project_onto_laplacian(h, g, &v, opts)?;
    let coarse = h.distance_between(&proj.point, &v);
    if opts.stop_within.is_some_and(|s| coarse <= s) {
        return Ok(coarse);
    }
    Ok(coarse.min(fine_residual(h, g, &v, opts)?))
}

fn fine_residual(h: &Hypergraph, g: &[f64], v: &[f64], opts: &FwOptions) -> Result<f64> {
    let sup = h.density(g).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let proj = project_with_ties(h, g, v, FINE_TIE * (1.0 + sup), opts)?;
    Ok(h.distance_between(&proj.point, v))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")))
    }
}

pub fn resolvent(h: &Hypergraph, f: &[f64], lambda: f64, tol: f64) -> Result<ProxResult> {
    resolvent_with(
        h,
        f,
        lambda,
        &ResolventOptions {
            tol: Some(tol),
            ..Default::default()
        },
    )
}

pub fn resolvent_with(h: &Hypergraph, f: &[f64], lambda: f64, opts: &ResolventOptions) -> Result<ProxResult> {
    h.check_len(f)?;
    check_lambda(lambda)?;
    let tol = opts.tol.unwrap_or_else(|| default_tolerance(h, f));
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let max_iter = opts.max_iter.unwrap_or(DEFAULT_MAX_ITER);
    let mut g = match &opts.warm_start {
        Some(w) => {
            h.check_len(w)?;
            w.clone()
        }
        None => f.to_vec(),
    };

    let check = FwOptions {
        stop_within: Some(tol),
        ..FwOptions::with_tol(1e-2 * tol)
    };
    let finish = |g: Vec<f64>, residual: f64, iterations: usize| ProxResult {
        objective: prox_objective(h, f, &g, lambda),
        input: f.to_vec(),
        lambda,
        minimizer: g,
        residual,
        tolerance: tol,
        iterations,
    };

    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut phi = prox_objective(h, f, &g, lambda);
    let mut eps_scale = 1e-2;
    for it in 0..max_iter {
        // least-norm subgradient of the objective at g
        let v: Vec<f64> = f.iter().zip(&g).map(|(a, b)| (a - b) / lambda).collect();
        let proj = project_onto_laplacian(h, &g, &v, &check)?;
        let s: Vec<f64> = proj.point.iter().zip(&v).map(|(x, y)| x - y).collect();
        let r = h.norm(&s);
        if r <= tol {
            return Ok(finish(g, r, it));
        }
        if r <= 1e3 * tol {
            let fine = fine_residual(h, &g, &v, &check)?;
            if fine <= tol {
                return Ok(finish(g, fine, it));
            }
        }

        if it == DUAL_AFTER && pair_count(h) <= DUAL_PAIR_CAP {
            if let Ok(cand) = dual_resolvent(h, f, lambda, 100 * DUAL_PAIR_CAP) {
                let r = residual_within(h, f, &cand, lambda, &check)?;
                if r <= tol {
                    return Ok(finish(cand, r, it));
                }
            }
        }

        if it < 64 || it % 16 == 0 {
            for cand in face_candidates(h, f, &g, lambda, &mut seen) {
                let r = residual_within(h, f, &cand, lambda, &check)?;
                if r <= tol {
                    return Ok(finish(cand, r, it));
                }
                let p = prox_objective(h, f, &cand, lambda);
                if p < phi {
                    phi = p;
                    g = cand;
                }
            }
        }

        // steepest descent along the exact least-norm subgradient and along
        // the one of a slightly enlarged subdifferential; keep the better step
        let mut dirs = vec![s];
        dirs.extend(epsilon_direction(h, f, &g, lambda, eps_scale, &check));
        let mut best: Option<(Vec<f64>, f64)> = None;
        for dir in &dirs {
            let (t, val) = line_search(|t| {
                let trial: Vec<f64> = g.iter().zip(dir).map(|(a, b)| a - t * b).collect();
                prox_objective(h, f, &trial, lambda)
            }, lambda);
            if val < best.as_ref().map_or(phi, |b| b.1) {
                best = Some((g.iter().zip(dir).map(|(a, b)| a - t * b).collect(), val));
            }
        }
        match best {
            Some((next, val)) => {
                g = next;
                phi = val;
            }
            None => {
                eps_scale *= 0.1;
                if eps_scale < 1e-16 {
                    eps_scale = 1e-2;
                }
            }
        }
    }

    let r = resolvent_residual(h, f, &g, lambda)?;
    if r <= tol {
        return Ok(finish(g, r, max_iter));
    }
    Err(Error::NotConverged {
        solver: "resolvent",
        iterations: max_iter,
        certificate: r,
    })
}

fn epsilon_direction(
    h: &Hypergraph,
    f: &[f64],
    g: &[f64],
    lambda: f64,
    eps_scale: f64,
    opts: &FwOptions,
) -> Option<Vec<f64>> {
    let dens = h.density(g);
    let sup = dens.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let faces = faces_of_density(h, &dens, eps_scale * (1.0 + sup));
    let atoms = crate::laplacian::atom_faces(h, &faces);
    let v: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b) / lambda).collect();
    let proj = crate::minnorm::project(&atoms, h.degrees(), &v, opts).ok()?;
    Some(proj.point.iter().zip(&v).map(|(x, y)| x - y).collect())
}

/// Golden-section search of a convex function on `[0, hi]`.
fn line_search(phi: impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - inv * (b - a);
    let mut d = a + inv * (b - a);
    let (mut fc, mut fd) = (phi(c), phi(d));
    for _ in 0..GOLDEN_STEPS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv * (b - a);
            fd = phi(d);
        }
    }
    let ends = [(0.0, phi(0.0)), (hi, phi(hi)), (c, fc), (d, fd)];
    ends.into_iter()
        .fold((0.0, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
}

/// Candidate minimisers from the tie pattern of `g` at a range of scales.
fn face_candidates(
    h: &Hypergraph,
    f: &[f64],
    g: &[f64],
    lambda: f64,
    seen: &mut Vec<Vec<usize>>,
) -> Vec<Vec<f64>> {
    let dens = h.density(g);
    let sup = dens.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out = Vec::new();
    let mut scale = 1e-1;
    while scale >= 1e-11 {
        let tie = scale * (1.0 + sup);
        scale *= 0.1;
        let (class, pattern) = tie_pattern(h, &dens, tie);
        if seen.contains(&pattern) {
            continue;
        }
        seen.push(pattern);
        if let Some(c) = face_solve(h, f, lambda, &class, &dens, tie) {
            out.push(c);
        }
    }
    out
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// Level classes of the vertices at tie scale `tie`, and a signature of the
/// induced face system used to skip repeated solves.
fn tie_pattern(h: &Hypergraph, dens: &[f64], tie: f64) -> (Vec<usize>, Vec<usize>) {
    let n = h.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    let faces = faces_of_density(h, dens, tie);
    for fd in &faces {
        for set in [&fd.argmax, &fd.argmin] {
            for w in set.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
    }
    // merge vertices whose densities are within the tie scale of each other
    // only through shared faces; the classes are the union-find roots
    let mut class = vec![usize::MAX; n];
    let mut next = 0;
    let mut root_class = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if root_class[r] == usize::MAX {
            root_class[r] = next;
            next += 1;
        }
        class[v] = root_class[r];
    }
    let mut pattern = class.clone();
    for fd in &faces {
        if fd.is_active() {
            pattern.push(class[fd.argmax[0]]);
            pattern.push(class[fd.argmin[0]]);
        } else {
            pattern.push(usize::MAX);
        }
    }
    (class, pattern)
}

fn face_solve(
    h: &Hypergraph,
    f: &[f64],
    lambda: f64,
    class: &[usize],
    dens: &[f64],
    tie: f64,
) -> Option<Vec<f64>> {
    let k = class.iter().max().map_or(0, |m| m + 1);
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (u, &c) in class.iter().enumerate() {
        a[(c, c)] += h.degree(u) / lambda;
        b[c] += f[u] / lambda;
    }
    for fd in faces_of_density(h, dens, tie) {
        if !fd.is_active() {
            continue;
        }
        let (p, q) = (class[fd.argmax[0]], class[fd.argmin[0]]);
        if p == q {
            continue;
        }
        let w = h.edges()[fd.edge].weight;
        a[(p, p)] += w;
        a[(q, q)] += w;
        a[(p, q)] -= w;
        a[(q, p)] -= w;
    }
    let z = a.cholesky()?.solve(&b);
    Some((0..h.num_vertices()).map(|u| h.degree(u) * z[class[u]]).collect())
}
