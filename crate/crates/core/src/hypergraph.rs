//! Weighted hypergraphs, the degree-weighted inner product, the hop distance
//! induced by hyperedge co-membership, geodesics and weighted Lipschitz
//! functions.
//!
//! Functions on vertices are plain `&[f64]` slices in *raw* coordinates
//! (indexed by declaration order). The *density* view divides by the degree;
//! [`VertexFunction`] carries an explicit view tag for the places where both
//! appear.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker stored in the distance table for pairs that no chain connects.
pub const INFINITE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub members: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypergraph {
    name: String,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    degrees: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    #[serde(skip)]
    dist: Vec<u32>,
}

impl Hypergraph {
    /// Builds and validates a hypergraph. Edge members are vertex indices.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<String>,
        edges: Vec<(Vec<usize>, f64)>,
    ) -> Result<Self> {
        let n = vertices.len();
        let mut index = HashMap::with_capacity(n);
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(v.clone()));
            }
        }

        let mut degrees = vec![0.0; n];
        let mut checked = Vec::with_capacity(edges.len());
        for (k, (members, weight)) in edges.into_iter().enumerate() {
            let label = |members: &[usize]| {
                members
                    .iter()
                    .map(|&m| vertices.get(m).cloned().unwrap_or_else(|| format!("#{m}")))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let invalid = |reason: String| Error::InvalidEdge {
                edge: k,
                members: label(&members),
                reason,
            };
            if members.is_empty() {
                return Err(invalid("hyperedge has no members".into()));
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(invalid(format!("weight must be positive and finite, got {weight}")));
            }
            for (j, &m) in members.iter().enumerate() {
                if m >= n {
                    return Err(invalid(format!("member index {m} is not a declared vertex")));
                }
                if members[..j].contains(&m) {
                    return Err(invalid(format!("member `{}` listed twice", vertices[m])));
                }
            }
            for &m in &members {
                degrees[m] += weight;
            }
            checked.push(Edge { members, weight });
        }

        if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::IsolatedVertex(vertices[i].clone()));
        }

        let mut h = Hypergraph {
            name: name.into(),
            vertices,
            edges: checked,
            degrees,
            index,
            dist: Vec::new(),
        };
        h.dist = h.compute_distances();
        Ok(h)
    }

    /// Convenience constructor using vertex names for edge members.
    pub fn from_names(
        name: impl Into<String>,
        vertices: &[&str],
        edges: &[(&[&str], f64)],
    ) -> Result<Self> {
        let verts: Vec<String> = vertices.iter().map(|s| s.to_string()).collect();
        let lookup: HashMap<&str, usize> =
            vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut es = Vec::with_capacity(edges.len());
        for (k, (members, w)) in edges.iter().enumerate() {
            let mut idx = Vec::with_capacity(members.len());
            for m in members.iter() {
                match lookup.get(m) {
                    Some(&i) => idx.push(i),
                    None => {
                        return Err(Error::InvalidEdge {
                            edge: k,
                            members: members.join(","),
                            reason: format!("unknown member `{m}`"),
                        })
                    }
                }
            }
            es.push((idx, *w));
        }
        Self::new(name, verts, es)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.degrees[v]
    }

    /// Total degree, i.e. the mass of `D𝟙`.
    pub fn volume(&self) -> f64 {
        self.degrees.iter().sum()
    }

    /// The same hypergraph with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight scale must be positive, got {factor}"
            )));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| (e.members.clone(), e.weight * factor))
            .collect();
        Self::new(format!("{}x{}", factor, self.name), self.vertices.clone(), edges)
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.num_vertices() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange(v))
        }
    }

    pub fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() == self.num_vertices() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.num_vertices(),
                found: f.len(),
            })
        }
    }

    // ---- functions -----------------------------------------------------

    /// `f̃ = D⁻¹f`.
    pub fn density(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.degrees).map(|(a, d)| a / d).collect()
    }

    /// `f = D f̃`.
    pub fn from_density(&self, dens: &[f64]) -> Vec<f64> {
        dens.iter().zip(&self.degrees).map(|(a, d)| a * d).collect()
    }

    /// `D𝟙`.
    pub fn degree_vector(&self) -> Vec<f64> {
        self.degrees.clone()
    }

    /// `δ_v`.
    pub fn delta(&self, v: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vertices()];
        out[v] = 1.0;
        out
    }

    /// `ρ_z = D·d(z,·)`. Requires every vertex to be reachable from `z`.
    pub fn rho(&self, z: usize) -> Result<Vec<f64>> {
        (0..self.num_vertices())
            .map(|x| {
                self.finite_distance(z, x)
                    .map(|d| self.degrees[x] * f64::from(d))
            })
            .collect()
    }

    /// `⟨f,g⟩ = Σ f(x)g(x)/d_x`.
    pub fn inner_product(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok(self.dot(f, g))
    }

    pub(crate) fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.degrees)
            .map(|((a, b), d)| a * b / d)
            .sum()
    }

    /// Weighted norm `‖f‖ = ⟨f,f⟩^{1/2}`.
    pub fn norm(&self, f: &[f64]) -> f64 {
        self.dot(f, f).sqrt()
    }

    /// Weighted distance `‖f − g‖` between two raw functions.
    pub fn distance_between(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.degrees)
            .map(|((a, b), d)| (a - b) * (a - b) / d)
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨f, δ_x − δ_y⟩ = f̃(x) − f̃(y)`.
    pub fn pairing(&self, f: &[f64], x: usize, y: usize) -> f64 {
        f[x] / self.degrees[x] - f[y] / self.degrees[y]
    }

    // ---- metric --------------------------------------------------------

    fn compute_distances(&self) -> Vec<u32> {
        let n = self.num_vertices();
        let adj = self.adjacency();
        let mut dist = vec![INFINITE; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if row[w] == INFINITE {
                        row[w] = row[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        dist
    }

    /// Co-membership adjacency lists (`x ∼ y` iff some hyperedge holds both).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.num_vertices();
        let mut adj = vec![vec![false; n]; n];
        for e in &self.edges {
            for &a in &e.members {
                for &b in &e.members {
                    if a != b {
                        adj[a][b] = true;
                    }
                }
            }
        }
        adj.into_iter()
            .map(|row| {
                row.into_iter()
                    .enumerate()
                    .filter_map(|(j, on)| on.then_some(j))
                    .collect()
            })
            .collect()
    }

    /// Hop distance; `None` when no chain joins the two vertices.
    pub fn distance(&self, x: usize, y: usize) -> Option<u32> {
        let d = self.dist[x * self.num_vertices() + y];
        (d != INFINITE).then_some(d)
    }

    pub(crate) fn finite_distance(&self, x: usize, y: usize) -> Result<u32> {
        self.distance(x, y).ok_or_else(|| Error::InfiniteDistance {
            x: self.vertices[x].clone(),
            y: self.vertices[y].clone(),
        })
    }

    /// Full distance table, row-major, with [`INFINITE`] for disconnected pairs.
    pub fn distance_matrix(&self) -> Vec<Vec<u32>> {
        let n = self.num_vertices();
        self.dist.chunks(n).map(|r| r.to_vec()).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.dist.iter().all(|&d| d != INFINITE)
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::NotConnected)
        }
    }

    /// All vertex sequences of length `d(x,y)` joining `x` to `y`.
    ///
    /// Walks the breadth-first predecessor DAG rooted at `x` backwards from
    /// `y`; output is sorted lexicographically by vertex index.
    pub fn geodesics(&self, x: usize, y: usize) -> Result<Vec<GeodesicPath>> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        let len = self.finite_distance(x, y)? as usize;
        let adj = self.adjacency();
        let mut out = Vec::new();
        let mut stack = vec![y];
        self.collect_geodesics(x, len, &adj, &mut stack, &mut out);
        out.sort_by(|a, b| a.vertices.cmp(&b.vertices));
        Ok(out)
    }

    fn collect_geodesics(
        &self,
        x: usize,
        level: usize,
        adj: &[Vec<usize>],
        stack: &mut Vec<usize>,
        out: &mut Vec<GeodesicPath>,
    ) {
        let cur = *stack.last().unwrap();
        if level == 0 {
            let mut vertices = stack.clone();
            vertices.reverse();
            out.push(GeodesicPath { vertices });
            return;
        }
        for &w in &adj[cur] {
            if self.distance(x, w) == Some(level as u32 - 1) {
                stack.push(w);
                self.collect_geodesics(x, level - 1, adj, stack, out);
                stack.pop();
            }
        }
    }

    // ---- Lipschitz -----------------------------------------------------

    /// Smallest `K` with `⟨f, δ_x − δ_y⟩ ≤ K d(x,y)` over all pairs at finite
    /// distance.
    pub fn lipschitz_constant(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        let dens = self.density(f);
        let n = self.num_vertices();
        let mut best: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                if let Some(d) = self.distance(x, y) {
                    best = best.max((dens[x] - dens[y]) / f64::from(d));
                }
            }
        }
        Ok(best)
    }

    /// Shift `f` by a multiple of `D𝟙` so that its density vanishes at the
    /// first vertex.
    pub fn pin(&self, f: &[f64]) -> Vec<f64> {
        let c = f[0] / self.degrees[0];
        f.iter().zip(&self.degrees).map(|(a, d)| a - c * d).collect()
    }

    /// Weighted 1-Lipschitz functions for multistart searches.
    ///
    /// The first `2|V|` entries are `±ρ_z` for every vertex `z` (in vertex
    /// order, `+` before `−`); the rest are up to `count` distinct random
    /// points of the Lipschitz polytope built by sequential McShane extension
    /// in a random vertex order. All are pinned at the first vertex.
    pub fn lipschitz_vertex_samples(&self, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        self.require_connected()?;
        let n = self.num_vertices();
        let mut out = Vec::with_capacity(2 * n + count);
        for z in 0..n {
            let rho = self.pin(&self.rho(z)?);
            let neg: Vec<f64> = rho.iter().map(|v| -v).collect();
            out.push(rho);
            out.push(self.pin(&neg));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut drawn = 0;
        // small polytopes have few vertices; stop once repeats dominate
        for _ in 0..SAMPLE_ATTEMPTS * count {
            if drawn == count {
                break;
            }
            // Fisher-Yates
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let mut dens = vec![0.0; n];
            let mut assigned = vec![false; n];
            for (k, &v) in order.iter().enumerate() {
                if k == 0 {
                    dens[v] = 0.0;
                } else {
                    let mut lo = f64::NEG_INFINITY;
                    let mut hi = f64::INFINITY;
                    for u in 0..n {
                        if assigned[u] {
                            let d = f64::from(self.distance(u, v).unwrap());
                            lo = lo.max(dens[u] - d);
                            hi = hi.min(dens[u] + d);
                        }
                    }
                    let pick: f64 = rng.gen();
                    dens[v] = if pick < 0.45 {
                        lo
                    } else if pick < 0.9 {
                        hi
                    } else {
                        lo + (hi - lo) * rng.gen::<f64>()
                    };
                }
                assigned[v] = true;
            }
            let base = dens[0];
            for d in dens.iter_mut() {
                *d -= base;
            }
            let f = self.from_density(&dens);
            if !out.iter().any(|g| g.iter().zip(&f).all(|(a, b)| (a - b).abs() <= 1e-12)) {
                out.push(f);
                drawn += 1;
            }
        }
        Ok(out)
    }
}

const SAMPLE_ATTEMPTS: usize = 16;

/// A vertex sequence realising the distance between its endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub vertices: Vec<usize>,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() <= 1
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Raw,
    Density,
}

/// Vertex values tagged with the coordinates they are expressed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFunction {
    pub values: Vec<f64>,
    pub view: View,
}

impl VertexFunction {
    pub fn raw(values: Vec<f64>) -> Self {
        Self {
            values,
            view: View::Raw,
        }
    }

    pub fn density(values: Vec<f64>) -> Self {
        Self {
            values,
            view: View::Density,
        }
    }

    pub fn to_raw(&self, h: &Hypergraph) -> Result<Vec<f64>> {
        h.check_len(&self.values)?;
        Ok(match self.view {
            View::Raw => self.values.clone(),
            View::Density => h.from_density(&self.values),
        })
    }

    pub fn to_density(&self, h: &Hypergraph) -> Result<Vec<f64>> {
        h.check_len(&self.values)?;
        Ok(match self.view {
            View::Raw => h.density(&self.values),
            View::Density => self.values.clone(),
        })
    }
}
