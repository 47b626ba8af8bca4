//! Nearest points in a Minkowski sum of scaled simplicial faces.
//!
//! Every face is `scale · Conv{δ_u − δ_v : (u,v) ∈ pairs}`; the feasible set
//! is their sum and the metric is the degree-weighted one. The solver is
//! block pairwise Frank–Wolfe (one face per step, exact line search) with a
//! periodic fully-corrective pass on the active atoms (Wolfe's minor cycle),
//! terminated by the Frank–Wolfe duality gap.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct AtomFace {
    pub edge: usize,
    pub scale: f64,
    /// `(head, tail)`: the atom is `scale · (δ_head − δ_tail)`.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub(crate) struct FwOptions {
    pub gap_tol: f64,
    /// Only decide whether the distance to the anchor is at most this value:
    /// stop once it is, or once the duality gap proves it is not.
    pub stop_within: Option<f64>,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Projection {
    pub point: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    pub gap: f64,
}

const POLISH_EVERY: usize = 8;
const DEFAULT_MAX_ITER: usize = 100_000;

impl FwOptions {
    pub fn with_tol(tol: f64) -> Self {
        FwOptions {
            gap_tol: tol * tol,
            stop_within: None,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

fn assemble(faces: &[AtomFace], weights: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (face, w) in faces.iter().zip(weights) {
        for (&(u, v), &p) in face.pairs.iter().zip(w) {
            if p != 0.0 {
                x[u] += face.scale * p;
                x[v] -= face.scale * p;
            }
        }
    }
    x
}

fn objective(x: &[f64], anchor: &[f64], deg: &[f64]) -> f64 {
    x.iter()
        .zip(anchor)
        .zip(deg)
        .map(|((a, b), d)| (a - b) * (a - b) / d)
        .sum()
}

/// Projects `anchor` onto the face sum in the weighted norm.
pub(crate) fn project(
    faces: &[AtomFace],
    deg: &[f64],
    anchor: &[f64],
    opts: &FwOptions,
) -> Result<Projection> {
    let n = deg.len();
    if faces.is_empty() {
        return Ok(Projection {
            point: vec![0.0; n],
            weights: Vec::new(),
            gap: 0.0,
        });
    }

    let min_deg = deg.iter().cloned().fold(f64::INFINITY, f64::min);
    let atom_mass: f64 = faces.iter().map(|f| f.scale).sum::<f64>() * (2.0 / min_deg).sqrt();
    let anchor_sq = objective(anchor, &vec![0.0; n], deg);
    // the gap is quadratic in the data, so the rounding floor scales with it
    let floor = 64.0 * f64::EPSILON * (anchor_sq + atom_mass * atom_mass);
    let gap_tol = opts.gap_tol.max(floor);

    // start from the atom of each face best aligned with the anchor
    let anchor_dens: Vec<f64> = anchor.iter().zip(deg).map(|(a, d)| a / d).collect();
    let mut weights: Vec<Vec<f64>> = faces
        .iter()
        .map(|f| {
            let mut w = vec![0.0; f.pairs.len()];
            let best = argbest(f.pairs.iter().map(|&(u, v)| anchor_dens[u] - anchor_dens[v]), true);
            w[best] = 1.0;
            w
        })
        .collect();
    let mut x = assemble(faces, &weights, n);
    let mut gap = f64::INFINITY;
    let mut rd = vec![0.0; n];
    let mut polished = false;

    for it in 0..opts.max_iter {
        for i in 0..n {
            rd[i] = (x[i] - anchor[i]) / deg[i];
        }
        let obj = objective(&x, anchor, deg);
        if let Some(s) = opts.stop_within {
            if obj <= s * s {
                return Ok(Projection {
                    point: x,
                    weights,
                    gap,
                });
            }
        }

        gap = 0.0;
        let mut step: Option<(usize, usize, usize, f64)> = None;
        for (k, (face, w)) in faces.iter().zip(&weights).enumerate() {
            let mut fw = 0;
            let mut fw_val = f64::INFINITY;
            let mut away = usize::MAX;
            let mut away_val = f64::NEG_INFINITY;
            let mut current = 0.0;
            for (j, &(u, v)) in face.pairs.iter().enumerate() {
                let val = rd[u] - rd[v];
                if val < fw_val {
                    fw_val = val;
                    fw = j;
                }
                if w[j] > 0.0 {
                    current += w[j] * val;
                    if val > away_val {
                        away_val = val;
                        away = j;
                    }
                }
            }
            gap += 2.0 * face.scale * (current - fw_val);
            let pairwise = face.scale * (away_val - fw_val);
            if fw != away && pairwise > step.map_or(0.0, |s| s.3) {
                step = Some((k, fw, away, pairwise));
            }
        }
        if gap <= gap_tol || opts.stop_within.is_some_and(|s| obj - gap > s * s) {
            if polished {
                return Ok(Projection {
                    point: x,
                    weights,
                    gap,
                });
            }
            // the active-set solve is exact where the step iteration stalls
            polish(faces, deg, anchor, &mut weights);
            x = assemble(faces, &weights, n);
            polished = true;
            continue;
        }

        if (it + 1) % POLISH_EVERY == 0 {
            polish(faces, deg, anchor, &mut weights);
            x = assemble(faces, &weights, n);
            polished = true;
            continue;
        }

        let Some((k, s, a, _)) = step else {
            // gap above tolerance yet no improving pair: rounding floor
            if polished {
                return Ok(Projection {
                    point: x,
                    weights,
                    gap,
                });
            }
            polish(faces, deg, anchor, &mut weights);
            x = assemble(faces, &weights, n);
            polished = true;
            continue;
        };
        polished = false;
        let face = &faces[k];
        let mut dir = vec![0.0; n];
        let (su, sv) = face.pairs[s];
        let (au, av) = face.pairs[a];
        dir[su] += face.scale;
        dir[sv] -= face.scale;
        dir[au] -= face.scale;
        dir[av] += face.scale;
        let dd: f64 = dir.iter().zip(deg).map(|(a, d)| a * a / d).sum();
        if dd <= 0.0 {
            continue;
        }
        let rdir: f64 = dir.iter().zip(&rd).map(|(a, r)| a * r).sum();
        let gamma = (-rdir / dd).clamp(0.0, weights[k][a]);
        if gamma == weights[k][a] {
            weights[k][s] += gamma;
            weights[k][a] = 0.0;
        } else {
            weights[k][s] += gamma;
            weights[k][a] -= gamma;
        }
        for i in 0..n {
            x[i] += gamma * dir[i];
        }
    }

    Err(Error::NotConverged {
        solver: "min-norm Frank-Wolfe",
        iterations: opts.max_iter,
        certificate: gap,
    })
}

fn argbest(vals: impl Iterator<Item = f64>, largest: bool) -> usize {
    let mut best = 0;
    let mut best_val = if largest { f64::NEG_INFINITY } else { f64::INFINITY };
    for (j, v) in vals.enumerate() {
        if (largest && v > best_val) || (!largest && v < best_val) {
            best = j;
            best_val = v;
        }
    }
    best
}

/// Minimises over the affine hull of the active atoms, stepping back into
/// the simplices whenever a weight would turn negative.
fn polish(faces: &[AtomFace], deg: &[f64], anchor: &[f64], weights: &mut [Vec<f64>]) {
    let n = deg.len();
    let before = objective(&assemble(faces, weights, n), anchor, deg);
    let saved = weights.to_vec();
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();

    let total_active: usize = weights.iter().map(|w| w.iter().filter(|&&p| p > 0.0).count()).sum();
    for _ in 0..=total_active {
        let active: Vec<Vec<usize>> = weights
            .iter()
            .map(|w| (0..w.len()).filter(|&j| w[j] > 0.0).collect())
            .collect();
        let free: usize = active.iter().map(|a| a.len().saturating_sub(1)).sum();
        if free == 0 {
            break;
        }

        let mut b = DMatrix::<f64>::zeros(n, free);
        let mut c = DVector::<f64>::zeros(n);
        for i in 0..n {
            c[i] = -anchor[i];
        }
        let mut col = 0;
        for (face, act) in faces.iter().zip(&active) {
            let (bu, bv) = face.pairs[act[0]];
            c[bu] += face.scale;
            c[bv] -= face.scale;
            for &j in &act[1..] {
                let (u, v) = face.pairs[j];
                b[(u, col)] += face.scale;
                b[(v, col)] -= face.scale;
                b[(bu, col)] -= face.scale;
                b[(bv, col)] += face.scale;
                col += 1;
            }
        }
        for i in 0..n {
            c[i] *= inv_sqrt[i];
            for j in 0..free {
                b[(i, j)] *= inv_sqrt[i];
            }
        }
        let svd = b.svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let Ok(q) = svd.solve(&(-c), smax * 1e-12) else {
            break;
        };

        // candidate weights on the affine hull
        let mut target: Vec<Vec<f64>> = weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut col = 0;
        for (t, act) in target.iter_mut().zip(&active) {
            let mut rest = 0.0;
            for &j in &act[1..] {
                t[j] = q[col];
                rest += q[col];
                col += 1;
            }
            t[act[0]] = 1.0 - rest;
        }

        let mut theta = 1.0;
        for (w, t) in weights.iter().zip(&target) {
            for j in 0..w.len() {
                if w[j] > 0.0 && t[j] < 0.0 {
                    theta = f64::min(theta, w[j] / (w[j] - t[j]));
                }
            }
        }
        for (w, t) in weights.iter_mut().zip(&target) {
            for j in 0..w.len() {
                if w[j] > 0.0 {
                    let v = w[j] + theta * (t[j] - w[j]);
                    w[j] = if v <= 1e-15 { 0.0 } else { v };
                }
            }
            let s: f64 = w.iter().sum();
            if s > 0.0 {
                for p in w.iter_mut() {
                    *p /= s;
                }
            }
        }
        if theta >= 1.0 {
            break;
        }
    }

    let after = objective(&assemble(faces, weights, n), anchor, deg);
    if !(after <= before) {
        weights.clone_from_slice(&saved);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projects_onto_segment() {
        // segment between δ0−δ1 and δ1−δ0 on unit degrees; anchor (0.3, 0)
        let faces = vec![AtomFace {
            edge: 0,
            scale: 1.0,
            pairs: vec![(0, 1), (1, 0)],
        }];
        let p = project(&faces, &[1.0, 1.0], &[0.3, 0.0], &FwOptions::with_tol(1e-9)).unwrap();
        assert!((p.point[0] - 0.15).abs() < 1e-12, "{:?}", p.point);
        assert!((p.point[1] + 0.15).abs() < 1e-12);
    }

    #[test]
    fn empty_face_sum_is_origin() {
        let p = project(&[], &[1.0, 2.0], &[1.0, 1.0], &FwOptions::with_tol(1e-9)).unwrap();
        assert_eq!(p.point, vec![0.0, 0.0]);
    }
}
