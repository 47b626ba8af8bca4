//! Nonlinear Kantorovich difference
//! `KD_λ(x,y) = sup { ⟨J_λ f, δ_x − δ_y⟩ : f weighted 1-Lipschitz }`,
//! the curvature `κ_λ = 1 − KD_λ/d(x,y)` and its small-λ extrapolation.
//!
//! The supremum is searched, not certified: the reported value is the best
//! objective found and therefore a lower bound on `KD_λ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::laplacian::{canonical_laplacian, DEFAULT_TOL};
use crate::resolvent::{resolvent_with, ResolventOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdOptions {
    /// Random Lipschitz samples on top of the `±ρ_z` candidates.
    pub starts: usize,
    pub seed: u64,
    /// Candidates refined by coordinate ascent.
    pub refine: usize,
    pub sweeps: usize,
    /// Resolvent tolerance; `None` uses the resolvent default.
    pub tol: Option<f64>,
}

impl Default for KdOptions {
    fn default() -> Self {
        KdOptions {
            starts: 64,
            seed: 0,
            refine: 4,
            sweeps: 20,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdResult {
    pub x: String,
    pub y: String,
    pub lambda: f64,
    pub value: f64,
    /// Pinned, weighted 1-Lipschitz maximiser found.
    pub witness: Vec<f64>,
    /// Best value over the `±ρ_z` candidates alone.
    pub distance_candidates_value: f64,
    pub candidates: usize,
    pub seed: u64,
    pub starts: usize,
}

/// `⟨J_λ f, δ_x − δ_y⟩`.
pub fn kd_objective(h: &Hypergraph, f: &[f64], x: usize, y: usize, lambda: f64, tol: Option<f64>) -> Result<f64> {
    let g = resolvent_with(
        h,
        f,
        lambda,
        &ResolventOptions {
            tol,
            ..Default::default()
        },
    )?;
    Ok(h.pairing(&g.minimizer, x, y))
}

fn check_pair(h: &Hypergraph, x: usize, y: usize, lambda: f64) -> Result<u32> {
    h.check_vertex(x)?;
    h.check_vertex(y)?;
    if x == y {
        return Err(Error::InvalidArgument(format!(
            "pair ({0}, {0}) has coinciding vertices",
            h.vertex_name(x)
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    h.require_connected()?;
    h.finite_distance(x, y)
}

pub fn kantorovich_difference(h: &Hypergraph, x: usize, y: usize, lambda: f64, opts: &KdOptions) -> Result<KdResult> {
    kd_search(h, x, y, lambda, opts, None)
}

fn kd_search(
    h: &Hypergraph,
    x: usize,
    y: usize,
    lambda: f64,
    opts: &KdOptions,
    warm: Option<&[f64]>,
) -> Result<KdResult> {
    check_pair(h, x, y, lambda)?;
    let n = h.num_vertices();
    let mut pool = h.lipschitz_vertex_samples(opts.seed, opts.starts)?;
    if let Some(w) = warm {
        pool.push(w.to_vec());
    }
    let values: Vec<f64> = pool
        .par_iter()
        .map(|f| kd_objective(h, f, x, y, lambda, opts.tol))
        .collect::<Result<_>>()?;
    let distance_candidates_value = values[..2 * n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(opts.refine.max(1));
    let refined: Vec<(Vec<f64>, f64)> = order
        .par_iter()
        .map(|&k| {
            coordinate_ascent(h, pool[k].clone(), values[k], opts, |f| {
                kd_objective(h, f, x, y, lambda, opts.tol)
            })
        })
        .collect::<Result<_>>()?;

    let (mut witness, mut value) = (pool[order[0]].clone(), values[order[0]]);
    let mut elite: Vec<(Vec<f64>, f64)> = Vec::new();
    for (f, v) in refined.into_iter().chain(order.iter().map(|&k| (pool[k].clone(), values[k]))) {
        if v > value {
            value = v;
            witness = f.clone();
        }
        if !elite.iter().any(|(g, _)| same_point(g, &f)) {
            elite.push((f, v));
        }
    }
    let mut by_value: Vec<usize> = (0..pool.len()).collect();
    by_value.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    for k in by_value {
        if elite.len() >= ELITE {
            break;
        }
        if !elite.iter().any(|(g, _)| same_point(g, &pool[k])) {
            elite.push((pool[k].clone(), values[k]));
        }
    }

    let objective = |f: &[f64]| kd_objective(h, f, x, y, lambda, opts.tol);
    let segments: Vec<(usize, usize)> = (0..elite.len())
        .flat_map(|i| (i + 1..elite.len()).map(move |j| (i, j)))
        .collect();
    let found: Vec<Option<(Vec<f64>, f64)>> = segments
        .par_iter()
        .map(|&(i, j)| segment_search(&elite[i], &elite[j], &objective))
        .collect::<Result<_>>()?;
    let mut improved_at: Option<(Vec<f64>, f64)> = None;
    for (f, v) in found.into_iter().flatten() {
        if v > improved_at.as_ref().map_or(value + 1e-12, |b| b.1) {
            improved_at = Some((f, v));
        }
    }
    if let Some((f, v)) = improved_at {
        let (f, v) = coordinate_ascent(h, f, v, opts, objective)?;
        value = v;
        witness = f;
    }
    Ok(KdResult {
        x: h.vertex_name(x).to_string(),
        y: h.vertex_name(y).to_string(),
        lambda,
        value,
        witness,
        distance_candidates_value,
        candidates: pool.len(),
        seed: opts.seed,
        starts: opts.starts,
    })
}

/// Distinct candidates kept for the segment search.
const ELITE: usize = 8;
const SEGMENT_GRID: usize = 8;
const SEGMENT_REFINE: usize = 24;

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// Best point strictly inside the segment `[a, b]`: a uniform grid, then
/// golden-section refinement around the best grid point. Returns it only
/// when it beats both ends.
fn segment_search(
    a: &(Vec<f64>, f64),
    b: &(Vec<f64>, f64),
    objective: &impl Fn(&[f64]) -> Result<f64>,
) -> Result<Option<(Vec<f64>, f64)>> {
    let point = |t: f64| -> Vec<f64> { a.0.iter().zip(&b.0).map(|(p, q)| (1.0 - t) * p + t * q).collect() };
    let eval = |t: f64| objective(&point(t));
    let ends = a.1.max(b.1);
    let step = 1.0 / SEGMENT_GRID as f64;
    let (mut best_t, mut best_v) = (0.0, f64::NEG_INFINITY);
    for k in 1..SEGMENT_GRID {
        let t = k as f64 * step;
        let v = eval(t)?;
        if v > best_v {
            best_t = t;
            best_v = v;
        }
    }
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let mut c = hi - inv * (hi - lo);
    let mut d = lo + inv * (hi - lo);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..SEGMENT_REFINE {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv * (hi - lo);
            fc = eval(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv * (hi - lo);
            fd = eval(d)?;
        }
    }
    for (t, v) in [(c, fc), (d, fd)] {
        if v > best_v {
            best_t = t;
            best_v = v;
        }
    }
    Ok((best_v > ends + 1e-12).then(|| (point(best_t), best_v)))
}

/// Feasible range of `f̃(u)` with the other densities held fixed.
fn coordinate_range(h: &Hypergraph, dens: &[f64], u: usize) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for v in 0..dens.len() {
        if v == u {
            continue;
        }
        if let Some(d) = h.distance(u, v) {
            let d = d as f64;
            lo = lo.max(dens[v] - d);
            hi = hi.min(dens[v] + d);
        }
    }
    (lo, hi)
}

/// Maximises `objective` over the Lipschitz polytope by shifting one
/// vertex, or a set of tied vertices, and dragging the others along just
/// enough to stay Lipschitz. Returns the pinned maximiser.
fn coordinate_ascent(
    h: &Hypergraph,
    f: Vec<f64>,
    value: f64,
    opts: &KdOptions,
    objective: impl Fn(&[f64]) -> Result<f64>,
) -> Result<(Vec<f64>, f64)> {
    let n = h.num_vertices();
    let mut dens = h.density(&f);
    let mut best = value;
    for _ in 0..opts.sweeps {
        let mut improved = false;
        for set in move_sets(&dens) {
            let step = 1e-4 * (1.0 + h.norm(&h.from_density(&dens)));
            let up = objective(&h.from_density(&push(h, &dens, &set, step)))?;
            let sign = if up >= best { 1.0 } else { -1.0 };
            let eval = |t: f64| objective(&h.from_density(&push(h, &dens, &set, sign * t)));
            if let Some((t, v)) = path_search(&breakpoints(h, &dens, &set, sign), best, eval)? {
                dens = push(h, &dens, &set, sign * t);
                best = v;
                improved = true;
            }
        }
        if !improved && n <= PAIR_MOVE_LIMIT {
            if let Some((d, v)) = best_pair_move(h, &dens, best, &objective)? {
                dens = d;
                best = v;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    // every coordinate may move; the objective ignores constant shifts
    Ok((h.pin(&h.from_density(&dens)), best))
}

/// Largest level set whose subsets are all tried as moves.
const LEVEL_SUBSETS: usize = 5;

/// Singletons, plus the subsets of every group of tied densities.
fn move_sets(dens: &[f64]) -> Vec<Vec<usize>> {
    let n = dens.len();
    let mut sets: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();
    let mut seen = vec![false; n];
    for u in 0..n {
        if seen[u] {
            continue;
        }
        let level: Vec<usize> = (u..n).filter(|&v| (dens[v] - dens[u]).abs() <= 1e-12).collect();
        for &v in &level {
            seen[v] = true;
        }
        if level.len() < 2 {
            continue;
        }
        if level.len() > LEVEL_SUBSETS {
            sets.push(level);
            continue;
        }
        for mask in 1u32..(1 << level.len()) {
            if mask.count_ones() >= 2 {
                sets.push((0..level.len()).filter(|&i| mask >> i & 1 == 1).map(|i| level[i]).collect());
            }
        }
    }
    sets
}

/// Shifts the densities on `set` by `t` and clamps every other density
/// between the McShane bounds the shifted set imposes.
fn push(h: &Hypergraph, dens: &[f64], set: &[usize], t: f64) -> Vec<f64> {
    let mut out = dens.to_vec();
    for &s in set {
        out[s] += t;
    }
    for u in 0..dens.len() {
        if set.contains(&u) {
            continue;
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &s in set {
            if let Some(d) = h.distance(u, s) {
                lo = lo.max(out[s] - d as f64);
                hi = hi.min(out[s] + d as f64);
            }
        }
        // lo can exceed hi by rounding when the set is tight
        out[u] = out[u].min(hi).max(lo);
    }
    out
}

/// Shifts `t > 0` along direction `sign` at which the set meets another
/// level or starts or stops dragging a vertex; the objective can only kink
/// there or inside a piece of the resolvent.
fn breakpoints(h: &Hypergraph, dens: &[f64], set: &[usize], sign: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    for u in (0..dens.len()).filter(|u| !set.contains(u)) {
        for &s in set {
            let Some(d) = h.distance(u, s) else { continue };
            for off in [-(d as f64), 0.0, d as f64] {
                let t = sign * (dens[u] + off - dens[s]);
                if t > 1e-12 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    ts
}

/// Evaluates the path at its breakpoints and their midpoints, then refines
/// the best one by golden section between its neighbours. Returns the
/// point only when it beats `best`.
fn path_search(ts: &[f64], best: f64, eval: impl Fn(f64) -> Result<f64>) -> Result<Option<(f64, f64)>> {
    if ts.is_empty() {
        return Ok(None);
    }
    let mut grid = vec![0.0];
    for (k, &t) in ts.iter().enumerate() {
        let prev = if k == 0 { 0.0 } else { ts[k - 1] };
        grid.push(0.5 * (prev + t));
        grid.push(t);
    }
    let mut vals = vec![best];
    for &t in &grid[1..] {
        vals.push(eval(t)?);
    }
    let k = (0..grid.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let (mut t_best, mut v_best) = (grid[k], vals[k]);
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    if hi > lo {
        let mut c = hi - inv * (hi - lo);
        let mut d = lo + inv * (hi - lo);
        let (mut fc, mut fd) = (eval(c)?, eval(d)?);
        for _ in 0..SEGMENT_REFINE {
            if fc >= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv * (hi - lo);
                fc = eval(c)?;
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv * (hi - lo);
                fd = eval(d)?;
            }
        }
        for (t, v) in [(c, fc), (d, fd)] {
            if v > v_best {
                t_best = t;
                v_best = v;
            }
        }
    }
    Ok((v_best > best + 1e-12).then_some((t_best, v_best)))
}

/// Pair moves are quadratic in `|V|`; beyond this size only single
/// coordinates move.
const PAIR_MOVE_LIMIT: usize = 16;

/// Moves two coordinates at once to ends of their feasible ranges. This
/// crosses between polytope vertices whose single-coordinate neighbours
/// are all worse.
fn best_pair_move(
    h: &Hypergraph,
    dens: &[f64],
    best: f64,
    objective: &impl Fn(&[f64]) -> Result<f64>,
) -> Result<Option<(Vec<f64>, f64)>> {
    let n = dens.len();
    let mut found: Option<(Vec<f64>, f64)> = None;
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let (lo, hi) = coordinate_range(h, dens, u);
            for tu in [lo, hi] {
                if tu == dens[u] {
                    continue;
                }
                let mut trial = dens.to_vec();
                trial[u] = tu;
                let (lo_v, hi_v) = coordinate_range(h, &trial, v);
                for tv in [lo_v, hi_v] {
                    if tv == dens[v] {
                        continue;
                    }
                    trial[v] = tv;
                    let val = objective(&h.from_density(&trial))?;
                    let bar = found.as_ref().map_or(best + 1e-12, |f| f.1);
                    if val > bar {
                        found = Some((trial.clone(), val));
                    }
                }
            }
        }
    }
    Ok(found)
}

pub fn kappa_lambda(h: &Hypergraph, x: usize, y: usize, lambda: f64, opts: &KdOptions) -> Result<f64> {
    let d = check_pair(h, x, y, lambda)? as f64;
    Ok(1.0 - kantorovich_difference(h, x, y, lambda, opts)?.value / d)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureRow {
    pub lambda: f64,
    pub kd: f64,
    pub kappa_lambda: f64,
    pub ratio: f64,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCandidate {
    /// `⟨𝓛⁰f, δ_x − δ_y⟩ / d(x,y)` at the best candidate.
    pub value: f64,
    pub pairing: f64,
    pub witness: Vec<f64>,
}

/// Upper bound on the upper curvature from minimising `⟨𝓛⁰f, δ_x − δ_y⟩`
/// over 1-Lipschitz `f` with `⟨f, δ_x − δ_y⟩` fixed to 1 (`unit`) or to
/// `d(x,y)` (`distance`). A variant with no admissible candidate is `None`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CBound {
    pub unit: Option<BoundCandidate>,
    pub distance: Option<BoundCandidate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureEstimate {
    pub x: String,
    pub y: String,
    pub d: u32,
    pub rows: Vec<CurvatureRow>,
    pub tail: Vec<f64>,
    pub intercept: f64,
    pub lower: f64,
    pub upper: f64,
    pub c_bound: CBound,
    pub seed: u64,
    pub starts: usize,
}

/// `{0.1 · 2⁻ᵏ : k = 0..7}`.
pub fn default_schedule() -> Vec<f64> {
    (0..8).map(|k| 0.1 / f64::powi(2.0, k)).collect()
}

const TAIL: usize = 3;

pub fn coarse_curvature(
    h: &Hypergraph,
    x: usize,
    y: usize,
    schedule: &[f64],
    opts: &KdOptions,
) -> Result<CurvatureEstimate> {
    check_schedule(schedule)?;
    let d = check_pair(h, x, y, schedule[0])?;
    let mut rows = Vec::with_capacity(schedule.len());
    let mut warm: Option<Vec<f64>> = None;
    for &lambda in schedule {
        let kd = kd_search(h, x, y, lambda, opts, warm.as_deref())?;
        let kappa = 1.0 - kd.value / d as f64;
        warm = Some(kd.witness.clone());
        rows.push(CurvatureRow {
            lambda,
            kd: kd.value,
            kappa_lambda: kappa,
            ratio: kappa / lambda,
            witness: kd.witness,
        });
    }

    let tail_rows = &rows[rows.len().saturating_sub(TAIL)..];
    let tail: Vec<f64> = tail_rows.iter().map(|r| r.ratio).collect();
    let intercept = affine_intercept(tail_rows);
    let lower = tail.iter().cloned().fold(intercept, f64::min);
    let upper = tail.iter().cloned().fold(intercept, f64::max);
    Ok(CurvatureEstimate {
        x: h.vertex_name(x).to_string(),
        y: h.vertex_name(y).to_string(),
        d,
        rows,
        tail,
        intercept,
        lower,
        upper,
        c_bound: curvature_upper_bound(h, x, y, opts)?,
        seed: opts.seed,
        starts: opts.starts,
    })
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty lambda schedule".into()));
    }
    if schedule.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("schedule entries must be positive".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("schedule must be strictly decreasing".into()));
    }
    Ok(())
}

/// Intercept at `λ = 0` of the least-squares line through `(λ, κ_λ/λ)`.
fn affine_intercept(rows: &[CurvatureRow]) -> f64 {
    if rows.len() < 2 {
        return rows[0].ratio;
    }
    let m = rows.len() as f64;
    let mx = rows.iter().map(|r| r.lambda).sum::<f64>() / m;
    let my = rows.iter().map(|r| r.ratio).sum::<f64>() / m;
    let sxx: f64 = rows.iter().map(|r| (r.lambda - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.lambda - mx) * (r.ratio - my)).sum();
    my - sxy / sxx * mx
}

pub fn curvature_upper_bound(h: &Hypergraph, x: usize, y: usize, opts: &KdOptions) -> Result<CBound> {
    let d = check_pair(h, x, y, 1.0)? as f64;
    let pool = h.lipschitz_vertex_samples(opts.seed, opts.starts)?;
    Ok(CBound {
        unit: bound_variant(h, x, y, 1.0, d, &pool, opts)?,
        distance: bound_variant(h, x, y, d, d, &pool, opts)?,
    })
}

fn laplacian_pairing(h: &Hypergraph, f: &[f64], x: usize, y: usize) -> Result<f64> {
    Ok(h.pairing(&canonical_laplacian(h, f, DEFAULT_TOL)?.value, x, y))
}

fn bound_variant(
    h: &Hypergraph,
    x: usize,
    y: usize,
    norm: f64,
    d: f64,
    pool: &[Vec<f64>],
    opts: &KdOptions,
) -> Result<Option<BoundCandidate>> {
    // rescale every sample to the normalisation when that keeps it 1-Lipschitz
    let admissible: Vec<Vec<f64>> = pool
        .iter()
        .filter_map(|f| {
            let p = h.pairing(f, x, y);
            if p <= 1e-12 {
                return None;
            }
            let g: Vec<f64> = f.iter().map(|v| v * norm / p).collect();
            (h.lipschitz_constant(&g).ok()? <= 1.0 + 1e-12).then_some(g)
        })
        .collect();
    if admissible.is_empty() {
        return Ok(None);
    }
    let values: Vec<f64> = admissible
        .par_iter()
        .map(|f| laplacian_pairing(h, f, x, y))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..admissible.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order.truncate(opts.refine.max(1));
    let refined: Vec<(Vec<f64>, f64)> = order
        .par_iter()
        .map(|&k| descend_fixed_pair(h, admissible[k].clone(), values[k], x, y, opts))
        .collect::<Result<_>>()?;
    let (mut witness, mut pairing) = (admissible[order[0]].clone(), values[order[0]]);
    for (f, v) in refined {
        if v < pairing {
            pairing = v;
            witness = f;
        }
    }
    Ok(Some(BoundCandidate {
        value: pairing / d,
        pairing,
        witness,
    }))
}

/// Coordinate descent of `⟨𝓛⁰f, δ_x − δ_y⟩` over the densities away from
/// `x` and `y`, which keeps `⟨f, δ_x − δ_y⟩` fixed.
fn descend_fixed_pair(
    h: &Hypergraph,
    f: Vec<f64>,
    value: f64,
    x: usize,
    y: usize,
    opts: &KdOptions,
) -> Result<(Vec<f64>, f64)> {
    let n = h.num_vertices();
    let mut dens = h.density(&f);
    let mut best = value;
    for _ in 0..opts.sweeps {
        let mut improved = false;
        for u in (0..n).filter(|&u| u != x && u != y) {
            let (lo, hi) = coordinate_range(h, &dens, u);
            let a = dens[u];
            let mut best_move: Option<(f64, f64)> = None;
            for target in [lo, hi] {
                for frac in [1.0, 0.5, 0.25] {
                    let cand = a + frac * (target - a);
                    if cand == a || !cand.is_finite() {
                        continue;
                    }
                    let mut trial = dens.clone();
                    trial[u] = cand;
                    let v = laplacian_pairing(h, &h.from_density(&trial), x, y)?;
                    if v < best - 1e-12 && best_move.is_none_or(|(_, bv)| v < bv) {
                        best_move = Some((cand, v));
                    }
                }
            }
            if let Some((cand, v)) = best_move {
                dens[u] = cand;
                best = v;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((h.from_density(&dens), best))
}

/// `coarse_curvature` for every unordered pair `x < y`, in lexicographic
/// vertex-index order.
pub fn curvature_matrix(h: &Hypergraph, schedule: &[f64], opts: &KdOptions) -> Result<Vec<CurvatureEstimate>> {
    h.require_connected()?;
    check_schedule(schedule)?;
    let n = h.num_vertices();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    pairs
        .par_iter()
        .map(|&(x, y)| coarse_curvature(h, x, y, schedule, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{h1, h2, single_edge};

    #[test]
    fn kd_on_h2_dominates_distance_witness() {
        let h = h2();
        let kd = kantorovich_difference(&h, 3, 0, 0.1, &KdOptions::default()).unwrap();
        assert!(kd.value >= 2.0 - 0.2 / 1.1 - 1e-9, "{}", kd.value);
        assert!(h.lipschitz_constant(&kd.witness).unwrap() <= 1.0 + 1e-9);
        assert_eq!(h.density(&kd.witness)[0], 0.0);
        let back = kantorovich_difference(&h, 0, 3, 0.1, &KdOptions::default()).unwrap();
        assert!((kd.value - back.value).abs() <= 1e-6);
        let kappa = kappa_lambda(&h, 0, 3, 0.1, &KdOptions::default()).unwrap();
        assert!(kappa <= 1.0 - (2.0 - 0.2 / 1.1) / 2.0 + 1e-9);
    }

    #[test]
    fn rejects_degenerate_pairs() {
        let h = h2();
        assert!(kantorovich_difference(&h, 1, 1, 0.1, &KdOptions::default()).is_err());
        assert!(kantorovich_difference(&h, 0, 1, 0.0, &KdOptions::default()).is_err());
        assert!(coarse_curvature(&h, 0, 1, &[0.1, 0.2], &KdOptions::default()).is_err());
    }

    #[test]
    fn schedule_shape() {
        let s = default_schedule();
        assert_eq!(s.len(), 8);
        assert_eq!(s[0], 0.1);
        assert_eq!(s[7], 0.1 / 128.0);
    }

    #[test]
    fn c_bound_examples() {
        let opts = KdOptions::default();
        let b = curvature_upper_bound(&h2(), 0, 3, &opts).unwrap();
        assert!(b.distance.as_ref().unwrap().value <= 1.0 + 1e-9);
        let b = curvature_upper_bound(&h1(), 0, 3, &opts).unwrap();
        assert!(b.distance.as_ref().unwrap().value <= 1.0 + 1e-9);
        assert!(b.unit.is_some());
    }

    #[test]
    fn single_edge_matrix_shape() {
        let m = curvature_matrix(&single_edge(), &[0.1, 0.05], &KdOptions::default()).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m[0].rows.iter().all(|r| r.kappa_lambda <= 1.0));
    }
}
