//! Diameter bound `Diam ≤ 2/K` and the maximal-diameter analysis: diametral
//! pairs, geodesic coverage through the excess function, pole pairings,
//! eigenfunction residuals and curvature along geodesics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{coarse_curvature, default_schedule, KdOptions};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::laplacian::{canonical_laplacian, DEFAULT_TOL};

const BOUND_EPS: f64 = 1e-12;

pub fn diameter(h: &Hypergraph) -> Result<u32> {
    h.require_connected()?;
    let n = h.num_vertices();
    let mut best = 0;
    for x in 0..n {
        for y in x + 1..n {
            best = best.max(h.finite_distance(x, y)?);
        }
    }
    Ok(best)
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("K must be positive, got {k}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonnetMyers {
    pub diameter: u32,
    pub bound: f64,
    pub satisfied: bool,
    pub maximal: bool,
}

pub fn bonnet_myers_check(h: &Hypergraph, k: f64) -> Result<BonnetMyers> {
    check_k(k)?;
    let diameter = diameter(h)?;
    let bound = 2.0 / k;
    let d = f64::from(diameter);
    Ok(BonnetMyers {
        diameter,
        bound,
        satisfied: d <= bound + BOUND_EPS,
        maximal: (d - bound).abs() <= BOUND_EPS,
    })
}

/// `f(v) = d_v (d(p,v) + d(v,q) − 2/K)`, defined for pairs with `d(p,q) = 2/K`.
/// It vanishes exactly on the vertices of `p → q` geodesics.
pub fn excess(h: &Hypergraph, p: usize, q: usize, k: f64) -> Result<Vec<f64>> {
    check_k(k)?;
    h.check_vertex(p)?;
    h.check_vertex(q)?;
    h.require_connected()?;
    let bound = 2.0 / k;
    let dpq = h.finite_distance(p, q)?;
    if (f64::from(dpq) - bound).abs() > BOUND_EPS {
        return Err(Error::NonMaximalPair {
            p: h.vertex_name(p).to_string(),
            q: h.vertex_name(q).to_string(),
            distance: dpq,
            bound,
        });
    }
    (0..h.num_vertices())
        .map(|v| {
            let s = h.finite_distance(p, v)? + h.finite_distance(v, q)?;
            Ok(h.degree(v) * (f64::from(s) - bound))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenCheck {
    pub pole: String,
    pub k: f64,
    /// `ρ_pole − K⁻¹ D𝟙`.
    pub function: Vec<f64>,
    pub laplacian: Vec<f64>,
    /// `‖𝓛⁰g − K g‖`.
    pub residual: f64,
}

pub fn eigenfunction_check(h: &Hypergraph, pole: usize, k: f64, tol: f64) -> Result<EigenCheck> {
    check_k(k)?;
    h.require_connected()?;
    let g: Vec<f64> = h
        .rho(pole)?
        .iter()
        .zip(h.degrees())
        .map(|(r, d)| r - d / k)
        .collect();
    let lap = canonical_laplacian(h, &g, tol)?.value;
    let diff: Vec<f64> = lap.iter().zip(&g).map(|(a, b)| a - k * b).collect();
    Ok(EigenCheck {
        pole: h.vertex_name(pole).to_string(),
        k,
        residual: h.norm(&diff),
        function: g,
        laplacian: lap,
    })
}

#[derive(Debug, Clone)]
pub struct RigidityOptions {
    /// Also estimate curvature for every pair; slower.
    pub curvature: bool,
    pub schedule: Vec<f64>,
    pub kd: KdOptions,
    pub tol: f64,
}

impl Default for RigidityOptions {
    fn default() -> Self {
        RigidityOptions {
            curvature: false,
            schedule: default_schedule(),
            kd: KdOptions::default(),
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coverage {
    pub p: String,
    pub q: String,
    pub covered: bool,
    /// Vertices on no `p → q` geodesic.
    pub uncovered: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExcessReport {
    pub p: String,
    pub q: String,
    pub values: Vec<f64>,
    /// Vertices with positive excess and their values.
    pub positive: Vec<(String, f64)>,
    /// Total degree of the positive-excess set.
    pub positive_volume: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolePairing {
    pub p: String,
    pub q: String,
    /// `⟨𝓛⁰ρ_p, δ_q⟩`.
    pub rho_p_at_q: f64,
    /// `⟨𝓛⁰ρ_q, δ_p⟩`.
    pub rho_q_at_p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairCurvature {
    pub x: String,
    pub y: String,
    /// Whether `x` and `y` lie on a common geodesic between diametral poles.
    pub on_common_geodesic: bool,
    pub lower: f64,
    pub upper: f64,
    /// Largest distance from `K` to the estimated interval endpoints.
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidityReport {
    pub k: f64,
    pub diameter: u32,
    pub bound: f64,
    pub satisfied: bool,
    pub maximal: bool,
    pub diametral_pairs: Vec<(String, String)>,
    pub coverage: Vec<Coverage>,
    pub excess: Vec<ExcessReport>,
    pub pole_pairings: Vec<PolePairing>,
    pub eigen_residuals: Vec<EigenCheck>,
    pub curvature: Vec<PairCurvature>,
}

impl RigidityReport {
    pub fn all_covered(&self) -> bool {
        self.maximal && self.coverage.iter().all(|c| c.covered)
    }
}

pub fn maximal_diameter_rigidity(h: &Hypergraph, k: f64, opts: &RigidityOptions) -> Result<RigidityReport> {
    let bm = bonnet_myers_check(h, k)?;
    let mut report = RigidityReport {
        k,
        diameter: bm.diameter,
        bound: bm.bound,
        satisfied: bm.satisfied,
        maximal: bm.maximal,
        diametral_pairs: Vec::new(),
        coverage: Vec::new(),
        excess: Vec::new(),
        pole_pairings: Vec::new(),
        eigen_residuals: Vec::new(),
        curvature: Vec::new(),
    };
    if !bm.maximal {
        return Ok(report);
    }

    let n = h.num_vertices();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .filter(|&(x, y)| h.distance(x, y) == Some(bm.diameter))
        .collect();
    let name = |v: usize| h.vertex_name(v).to_string();

    let mut poles = Vec::new();
    let mut on_geodesic = vec![vec![false; n]; n];
    for &(p, q) in &pairs {
        report.diametral_pairs.push((name(p), name(q)));
        let values = excess(h, p, q, k)?;
        let positive: Vec<(String, f64)> = values
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > 0.0)
            .map(|(v, &f)| (name(v), f))
            .collect();
        let positive_volume = values
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > 0.0)
            .map(|(v, _)| h.degree(v))
            .sum();
        report.coverage.push(Coverage {
            p: name(p),
            q: name(q),
            covered: positive.is_empty(),
            uncovered: positive.iter().map(|(v, _)| v.clone()).collect(),
        });
        report.excess.push(ExcessReport {
            p: name(p),
            q: name(q),
            values,
            positive,
            positive_volume,
        });

        let lap_p = canonical_laplacian(h, &h.rho(p)?, opts.tol)?.value;
        let lap_q = canonical_laplacian(h, &h.rho(q)?, opts.tol)?.value;
        report.pole_pairings.push(PolePairing {
            p: name(p),
            q: name(q),
            rho_p_at_q: lap_p[q] / h.degree(q),
            rho_q_at_p: lap_q[p] / h.degree(p),
        });
        for v in [p, q] {
            if !poles.contains(&v) {
                poles.push(v);
            }
        }
        for path in h.geodesics(p, q)? {
            for &a in &path.vertices {
                for &b in &path.vertices {
                    on_geodesic[a][b] = true;
                }
            }
        }
    }
    for pole in poles {
        report.eigen_residuals.push(eigenfunction_check(h, pole, k, opts.tol)?);
    }

    if opts.curvature {
        let all: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
        report.curvature = all
            .par_iter()
            .map(|&(x, y)| {
                let est = coarse_curvature(h, x, y, &opts.schedule, &opts.kd)?;
                Ok(PairCurvature {
                    x: name(x),
                    y: name(y),
                    on_common_geodesic: on_geodesic[x][y],
                    lower: est.lower,
                    upper: est.upper,
                    deviation: (est.lower - k).abs().max((est.upper - k).abs()),
                })
            })
            .collect::<Result<_>>()?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{h1, h2, pendant_h2, single_edge};

    #[test]
    fn diameters() {
        assert_eq!(diameter(&h1()).unwrap(), 2);
        assert_eq!(diameter(&h2()).unwrap(), 2);
        assert_eq!(diameter(&single_edge()).unwrap(), 1);
    }

    #[test]
    fn bonnet_myers_examples() {
        let b = bonnet_myers_check(&h2(), 1.0).unwrap();
        assert!(b.satisfied && b.maximal);
        let b = bonnet_myers_check(&h2(), 1.5).unwrap();
        assert!(!b.satisfied && !b.maximal);
        let b = bonnet_myers_check(&h1(), 0.5).unwrap();
        assert!(b.satisfied && !b.maximal);
        assert_eq!(b.bound, 4.0);
        assert!(bonnet_myers_check(&h1(), 0.0).is_err());
    }

    #[test]
    fn excess_examples() {
        assert_eq!(excess(&h2(), 0, 3, 1.0).unwrap(), vec![0.0; 4]);
        assert_eq!(excess(&h1(), 0, 3, 1.0).unwrap(), vec![0.0; 4]);
        let g = pendant_h2();
        let f = excess(&g, 0, 3, 1.0).unwrap();
        assert_eq!(f[4], 2.0 * g.degree(4));
        assert!(matches!(excess(&h2(), 0, 1, 1.0), Err(Error::NonMaximalPair { .. })));
    }

    #[test]
    fn eigenfunction_examples() {
        let c = eigenfunction_check(&h2(), 0, 1.0, 1e-9).unwrap();
        assert_eq!(c.function, vec![-1.0, 0.0, 0.0, 1.0]);
        assert!(c.residual <= 1e-8);
        let c = eigenfunction_check(&h1(), 0, 1.0, 1e-9).unwrap();
        assert_eq!(c.function, vec![-3.0, 0.0, 0.0, 3.0]);
        assert!(c.residual <= 1e-8);
        assert!(eigenfunction_check(&h2(), 3, 1.0, 1e-9).unwrap().residual <= 1e-8);
    }

    #[test]
    fn h2_report() {
        let r = maximal_diameter_rigidity(&h2(), 1.0, &RigidityOptions::default()).unwrap();
        assert!(r.all_covered());
        assert_eq!(r.diametral_pairs, vec![("p".to_string(), "q".to_string())]);
        assert!((r.pole_pairings[0].rho_p_at_q - 1.0).abs() <= 1e-8);
        assert!((r.pole_pairings[0].rho_q_at_p - 1.0).abs() <= 1e-8);
        assert_eq!(r.eigen_residuals.len(), 2);
    }

    #[test]
    fn pendant_report_names_violation() {
        let g = pendant_h2();
        let r = maximal_diameter_rigidity(&g, 1.0, &RigidityOptions::default()).unwrap();
        let cov = r.coverage.iter().find(|c| c.p == "p" && c.q == "q").unwrap();
        assert!(!cov.covered);
        assert_eq!(cov.uncovered, vec!["w".to_string()]);
    }

    #[test]
    fn non_maximal_degenerates() {
        let r = maximal_diameter_rigidity(&h1(), 0.5, &RigidityOptions::default()).unwrap();
        assert!(!r.maximal && r.diametral_pairs.is_empty());
    }
}
