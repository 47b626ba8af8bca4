//! The energy `E(f) = ½ Σ_e ω_e (max_e f̃ − min_e f̃)²` and its subdifferential,
//! the multivalued Laplacian `𝓛f = { Σ_e ω_e c_e b_e : b_e ∈ F_e }`.
//!
//! `F_e = Conv{δ_u − δ_v : u ∈ M_e, v ∈ m_e}` is the face of the base polytope
//! of `e` maximising `b ↦ bᵀf̃`, and `c_e` is the gap of `f̃` on `e`. Edges with
//! zero gap contribute nothing and are left out of the active set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::minnorm::{self, AtomFace, FwOptions};

/// Default tolerance for the canonical restriction.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `10⁻⁹ (1 + ‖f̃‖_∞)`.
pub fn default_tie_tol(h: &Hypergraph, f: &[f64]) -> f64 {
    let sup = f
        .iter()
        .zip(h.degrees())
        .map(|(a, d)| (a / d).abs())
        .fold(0.0, f64::max);
    1e-9 * (1.0 + sup)
}

pub fn energy(h: &Hypergraph, f: &[f64]) -> f64 {
    let dens = h.density(f);
    h.edges()
        .iter()
        .map(|e| {
            let (lo, hi) = spread(&e.members, &dens);
            0.5 * e.weight * (hi - lo) * (hi - lo)
        })
        .sum()
}

fn spread(members: &[usize], dens: &[f64]) -> (f64, f64) {
    members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| {
        (lo.min(dens[u]), hi.max(dens[u]))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDescriptor {
    pub edge: usize,
    pub argmax: Vec<usize>,
    pub argmin: Vec<usize>,
    pub gap: f64,
}

impl FaceDescriptor {
    /// Whether the edge contributes to `𝓛f`: the argmax and argmin sets are
    /// disjoint (the gap exceeds the tie tolerance).
    pub fn is_active(&self) -> bool {
        !self.argmax.iter().any(|u| self.argmin.contains(u))
    }
}

pub fn active_faces(h: &Hypergraph, f: &[f64], tie_tol: f64) -> Result<Vec<FaceDescriptor>> {
    h.check_len(f)?;
    if !(tie_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tie tolerance must be nonnegative, got {tie_tol}"
        )));
    }
    Ok(faces_of_density(h, &h.density(f), tie_tol))
}

pub(crate) fn faces_of_density(h: &Hypergraph, dens: &[f64], tie_tol: f64) -> Vec<FaceDescriptor> {
    h.edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let (lo, hi) = spread(&e.members, dens);
            let gap = hi - lo;
            if gap <= tie_tol {
                return FaceDescriptor {
                    edge: k,
                    argmax: e.members.clone(),
                    argmin: e.members.clone(),
                    gap,
                };
            }
            FaceDescriptor {
                edge: k,
                argmax: e.members.iter().copied().filter(|&u| dens[u] >= hi - tie_tol).collect(),
                argmin: e.members.iter().copied().filter(|&u| dens[u] <= lo + tie_tol).collect(),
                gap,
            }
        })
        .collect()
}

pub(crate) fn atom_faces(h: &Hypergraph, faces: &[FaceDescriptor]) -> Vec<AtomFace> {
    faces
        .iter()
        .filter(|fd| fd.is_active())
        .map(|fd| AtomFace {
            edge: fd.edge,
            scale: h.edges()[fd.edge].weight * fd.gap,
            pairs: fd
                .argmax
                .iter()
                .flat_map(|&u| fd.argmin.iter().map(move |&v| (u, v)))
                .collect(),
        })
        .collect()
}

/// Convex weight on the atom `δ_head − δ_tail` of one face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWeight {
    pub head: usize,
    pub tail: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSelection {
    pub edge: usize,
    pub pairs: Vec<PairWeight>,
}

/// Per-edge probability distributions over argmax × argmin pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FaceSelection {
    pub edges: Vec<EdgeSelection>,
}

impl FaceSelection {
    /// Uniform weights over every pair of every active face.
    pub fn uniform(faces: &[FaceDescriptor]) -> Self {
        let edges = faces
            .iter()
            .filter(|fd| fd.is_active())
            .map(|fd| {
                let k = (fd.argmax.len() * fd.argmin.len()) as f64;
                EdgeSelection {
                    edge: fd.edge,
                    pairs: fd
                        .argmax
                        .iter()
                        .flat_map(|&u| {
                            fd.argmin.iter().map(move |&v| PairWeight {
                                head: u,
                                tail: v,
                                weight: 1.0 / k,
                            })
                        })
                        .collect(),
                }
            })
            .collect();
        FaceSelection { edges }
    }

    fn from_projection(faces: &[AtomFace], weights: &[Vec<f64>]) -> Self {
        let edges = faces
            .iter()
            .zip(weights)
            .map(|(face, w)| EdgeSelection {
                edge: face.edge,
                pairs: face
                    .pairs
                    .iter()
                    .zip(w)
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(&(u, v), &p)| PairWeight {
                        head: u,
                        tail: v,
                        weight: p,
                    })
                    .collect(),
            })
            .collect();
        FaceSelection { edges }
    }
}

/// An element of `𝓛f` together with the selection that produces it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaplacianValue {
    pub value: Vec<f64>,
    pub selection: FaceSelection,
    pub norm: f64,
    /// Frank–Wolfe duality gap when the value comes from the min-norm solver.
    pub gap: Option<f64>,
    /// `true` when `𝓛f` has exactly one element.
    pub singleton: bool,
}

/// `Σ_e ω_e c_e b_e` for the convex combinations `b_e` described by `sel`.
pub fn laplacian_element(h: &Hypergraph, f: &[f64], sel: &FaceSelection) -> Result<LaplacianValue> {
    h.check_len(f)?;
    let faces = active_faces(h, f, default_tie_tol(h, f))?;
    let mut value = vec![0.0; h.num_vertices()];
    let mut seen = vec![false; h.num_edges()];
    for es in &sel.edges {
        let fd = faces.get(es.edge).ok_or_else(|| {
            Error::InvalidSelection(format!("edge #{} does not exist", es.edge))
        })?;
        if std::mem::replace(&mut seen[es.edge], true) {
            return Err(Error::InvalidSelection(format!("edge #{} selected twice", es.edge)));
        }
        let mut total = 0.0;
        for pw in &es.pairs {
            if !fd.argmax.contains(&pw.head) || !fd.argmin.contains(&pw.tail) {
                return Err(Error::InvalidSelection(format!(
                    "pair ({}, {}) is not on the argmax face of edge #{}",
                    h.vertex_name(pw.head),
                    h.vertex_name(pw.tail),
                    es.edge
                )));
            }
            if pw.weight < -1e-12 {
                return Err(Error::InvalidSelection(format!(
                    "negative weight {} on edge #{}",
                    pw.weight, es.edge
                )));
            }
            total += pw.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSelection(format!(
                "weights on edge #{} sum to {total}",
                es.edge
            )));
        }
        if fd.is_active() {
            let scale = h.edges()[es.edge].weight * fd.gap;
            for pw in &es.pairs {
                value[pw.head] += scale * pw.weight;
                value[pw.tail] -= scale * pw.weight;
            }
        }
    }
    if let Some(fd) = faces.iter().find(|fd| fd.is_active() && !seen[fd.edge]) {
        return Err(Error::InvalidSelection(format!(
            "active edge #{} has no selection",
            fd.edge
        )));
    }
    let singleton = faces
        .iter()
        .filter(|fd| fd.is_active())
        .all(|fd| fd.argmax.len() * fd.argmin.len() == 1);
    Ok(LaplacianValue {
        norm: h.norm(&value),
        value,
        selection: sel.clone(),
        gap: None,
        singleton,
    })
}

/// `𝓛⁰f`: the element of `𝓛f` with the least weighted norm.
pub fn canonical_laplacian(h: &Hypergraph, f: &[f64], tol: f64) -> Result<LaplacianValue> {
    h.check_len(f)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let faces = faces_of_density(h, &h.density(f), default_tie_tol(h, f));
    let atoms = atom_faces(h, &faces);
    let zero = vec![0.0; h.num_vertices()];
    let proj = minnorm::project(&atoms, h.degrees(), &zero, &FwOptions::with_tol(tol))?;
    Ok(LaplacianValue {
        norm: h.norm(&proj.point),
        selection: FaceSelection::from_projection(&atoms, &proj.weights),
        singleton: atoms.iter().all(|a| a.pairs.len() == 1),
        value: proj.point,
        gap: Some(proj.gap),
    })
}

/// Weighted distance from `v` to the polytope `𝓛f`.
pub fn subdifferential_distance(h: &Hypergraph, f: &[f64], v: &[f64], tol: f64) -> Result<f64> {
    h.check_len(f)?;
    h.check_len(v)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let proj = project_onto_laplacian(h, f, v, &FwOptions::with_tol(tol))?;
    Ok(h.distance_between(&proj.point, v))
}

pub(crate) fn project_onto_laplacian(
    h: &Hypergraph,
    f: &[f64],
    v: &[f64],
    opts: &FwOptions,
) -> Result<minnorm::Projection> {
    project_with_ties(h, f, v, default_tie_tol(h, f), opts)
}

pub(crate) fn project_with_ties(
    h: &Hypergraph,
    f: &[f64],
    v: &[f64],
    tie_tol: f64,
    opts: &FwOptions,
) -> Result<minnorm::Projection> {
    let faces = faces_of_density(h, &h.density(f), tie_tol);
    let atoms = atom_faces(h, &faces);
    minnorm::project(&atoms, h.degrees(), v, opts)
}
