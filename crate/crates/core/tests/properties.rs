use std::sync::OnceLock;

use proptest::prelude::*;

use hypercurv::curvature::{kappa_lambda, KdOptions};
use hypercurv::heat::{equilibrium, heat_flow, heat_flow_euler, heat_flow_resolvent, FlowMethod, FlowTrajectory};
use hypercurv::instances::{corpus, h1, h2, random_hypergraph};
use hypercurv::io::{instance_to_string, parse_instance_str};
use hypercurv::laplacian::{
    active_faces, canonical_laplacian, default_tie_tol, energy, laplacian_element, EdgeSelection, FaceSelection,
    PairWeight, DEFAULT_TOL,
};
use hypercurv::resolvent::resolvent_with;
use hypercurv::rigidity::eigenfunction_check;
use hypercurv::Hypergraph;

const CASES: u32 = 256;

fn instances() -> &'static [Hypergraph] {
    static CORPUS: OnceLock<Vec<Hypergraph>> = OnceLock::new();
    CORPUS.get_or_init(corpus)
}

/// An instance and a function on it. Half of the draws use densities from a
/// small integer set so that ties, and hence set-valued faces, are common.
fn instance_and_fn() -> impl Strategy<Value = (usize, Vec<f64>)> {
    let n = instances().len();
    (0..n, prop::collection::vec(-4.0f64..4.0, 8), any::<bool>()).prop_map(|(k, raw, tied)| {
        let h = &instances()[k];
        let dens: Vec<f64> = raw[..h.num_vertices()]
            .iter()
            .map(|v| if tied { v.round() / 2.0 } else { *v })
            .collect();
        (k, h.from_density(&dens))
    })
}

fn two_fns() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (instance_and_fn(), prop::collection::vec(-4.0f64..4.0, 8)).prop_map(|((k, f), g)| {
        let n = instances()[k].num_vertices();
        (k, f, g[..n].to_vec())
    })
}

fn random_selection(h: &Hypergraph, f: &[f64], seeds: &[f64]) -> FaceSelection {
    let faces = active_faces(h, f, default_tie_tol(h, f)).unwrap();
    let mut s = seeds.iter().cycle();
    let edges = faces
        .iter()
        .filter(|fd| fd.is_active())
        .map(|fd| {
            let mut pairs: Vec<PairWeight> = fd
                .argmax
                .iter()
                .flat_map(|&u| fd.argmin.iter().map(move |&v| (u, v)))
                .map(|(head, tail)| PairWeight {
                    head,
                    tail,
                    weight: 0.05 + s.next().unwrap(),
                })
                .collect();
            let total: f64 = pairs.iter().map(|p| p.weight).sum();
            for p in &mut pairs {
                p.weight /= total;
            }
            EdgeSelection { edge: fd.edge, pairs }
        })
        .collect();
    FaceSelection { edges }
}

fn lipschitz_fn() -> impl Strategy<Value = (usize, Vec<f64>)> {
    let n = instances().len();
    (0..n, 0u64..1000, 0.0f64..=1.0).prop_map(|(k, seed, scale)| {
        let h = &instances()[k];
        let samples = h.lipschitz_vertex_samples(seed, 4).unwrap();
        let f = &samples[samples.len() - 1];
        (k, f.iter().map(|v| v * scale).collect())
    })
}

fn resolvent(h: &Hypergraph, f: &[f64], lambda: f64) -> Vec<f64> {
    resolvent_with(h, f, lambda, &Default::default()).unwrap().minimizer
}

fn descends(traj: &FlowTrajectory) -> bool {
    traj.energies.windows(2).all(|w| w[1] <= w[0] + 1e-8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn density_view_round_trips((k, f) in instance_and_fn()) {
        let h = &instances()[k];
        let back = h.from_density(&h.density(&f));
        for (a, b) in back.iter().zip(&f) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn inner_product_is_bilinear((k, f, g) in two_fns(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let h = &instances()[k];
        let fg = h.inner_product(&f, &g).unwrap();
        prop_assert_eq!(fg, h.inner_product(&g, &f).unwrap());
        let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let lhs = h.inner_product(&combo, &g).unwrap();
        let rhs = a * fg + b * h.inner_product(&g, &g).unwrap();
        let scale = a.abs() * h.norm(&f) * h.norm(&g) + b.abs() * h.norm(&g).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + scale));
    }

    #[test]
    fn lipschitz_constant_is_absolutely_homogeneous((k, f) in instance_and_fn(), a in -3.0f64..3.0) {
        let h = &instances()[k];
        let scaled: Vec<f64> = f.iter().map(|v| a * v).collect();
        let l = h.lipschitz_constant(&f).unwrap();
        prop_assert!((h.lipschitz_constant(&scaled).unwrap() - a.abs() * l).abs() <= 1e-12 * (1.0 + l));
    }

    #[test]
    fn every_element_conserves_mass_and_pairs_to_twice_the_energy(
        (k, f) in instance_and_fn(),
        seeds in prop::collection::vec(0.0f64..1.0, 16),
    ) {
        let h = &instances()[k];
        let sel = random_selection(h, &f, &seeds);
        let v = laplacian_element(h, &f, &sel).unwrap().value;
        prop_assert!(v.iter().sum::<f64>().abs() <= 1e-10);
        let e = energy(h, &f);
        prop_assert!((h.inner_product(&v, &f).unwrap() - 2.0 * e).abs() <= 1e-8 * (1.0 + e));
    }

    #[test]
    fn canonical_element_conserves_mass((k, f) in instance_and_fn()) {
        let h = &instances()[k];
        let v = canonical_laplacian(h, &f, DEFAULT_TOL).unwrap().value;
        prop_assert!(v.iter().sum::<f64>().abs() <= 1e-10);
    }

    #[test]
    fn lipschitz_functions_have_bounded_laplacian((k, f) in lipschitz_fn()) {
        let h = &instances()[k];
        prop_assert!(h.lipschitz_constant(&f).unwrap() <= 1.0 + 1e-12);
        let v = canonical_laplacian(h, &f, DEFAULT_TOL).unwrap().value;
        for (x, d) in v.iter().zip(h.degrees()) {
            prop_assert!(x.abs() <= d + 1e-8, "{x} vs degree {d}");
        }
    }

    #[test]
    fn laplacian_is_homogeneous((k, f) in instance_and_fn(), a in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0]) {
        let h = &instances()[k];
        let base = canonical_laplacian(h, &f, DEFAULT_TOL).unwrap().value;
        let scaled: Vec<f64> = f.iter().map(|v| a * v).collect();
        let got = canonical_laplacian(h, &scaled, DEFAULT_TOL).unwrap().value;
        let want: Vec<f64> = base.iter().map(|v| a * v).collect();
        prop_assert!(h.distance_between(&got, &want) <= 1e-6 * (1.0 + h.norm(&want)));
    }

    #[test]
    fn laplacian_is_monotone(
        (k, f, g) in two_fns(),
        seeds in prop::collection::vec(0.0f64..1.0, 16),
    ) {
        let h = &instances()[k];
        let fp = laplacian_element(h, &f, &random_selection(h, &f, &seeds)).unwrap().value;
        let gp = laplacian_element(h, &g, &random_selection(h, &g, &seeds[3..])).unwrap().value;
        let df: Vec<f64> = fp.iter().zip(&gp).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - b).collect();
        prop_assert!(h.inner_product(&df, &dx).unwrap() >= -1e-8);
    }

    #[test]
    fn resolvent_is_nonexpansive((k, f, g) in two_fns(), lambda in 0.001f64..2.0) {
        let h = &instances()[k];
        let (jf, jg) = (resolvent(h, &f, lambda), resolvent(h, &g, lambda));
        prop_assert!(h.distance_between(&jf, &jg) <= h.distance_between(&f, &g) + 1e-6);
    }

    #[test]
    fn resolvent_is_homogeneous_and_shift_invariant(
        (k, f) in instance_and_fn(),
        lambda in 0.001f64..2.0,
        a in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
        c in -2.0f64..2.0,
    ) {
        let h = &instances()[k];
        let jf = resolvent(h, &f, lambda);
        let scaled: Vec<f64> = f.iter().map(|v| a * v).collect();
        let want: Vec<f64> = jf.iter().map(|v| a * v).collect();
        prop_assert!(h.distance_between(&resolvent(h, &scaled, lambda), &want) <= 1e-6);
        let shifted: Vec<f64> = f.iter().zip(h.degrees()).map(|(v, d)| v + c * d).collect();
        let want: Vec<f64> = jf.iter().zip(h.degrees()).map(|(v, d)| v + c * d).collect();
        prop_assert!(h.distance_between(&resolvent(h, &shifted, lambda), &want) <= 1e-6);
    }

    #[test]
    fn resolvent_conserves_mass_and_lowers_energy((k, f) in instance_and_fn(), lambda in 0.001f64..2.0) {
        let h = &instances()[k];
        let r = resolvent_with(h, &f, lambda, &Default::default()).unwrap();
        prop_assert!(r.residual <= r.tolerance);
        let mass: f64 = f.iter().sum();
        prop_assert!((r.minimizer.iter().sum::<f64>() - mass).abs() <= 1e-8 * (1.0 + mass.abs()));
        prop_assert!(energy(h, &r.minimizer) <= energy(h, &f) + 1e-10);
    }

    #[test]
    fn kappa_is_at_most_one((k, _) in instance_and_fn(), pair in 0usize..100, lambda in 0.01f64..0.5) {
        let h = &instances()[k];
        let n = h.num_vertices();
        let (x, y) = (pair % n, (pair / n) % n);
        prop_assume!(x != y);
        let opts = KdOptions { starts: 8, refine: 1, ..Default::default() };
        prop_assert!(kappa_lambda(h, x, y, lambda, &opts).unwrap() <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn flows_descend_and_conserve_mass((k, f) in instance_and_fn(), t in 0.05f64..1.0) {
        let h = &instances()[k];
        let mass: f64 = f.iter().sum();
        for traj in [heat_flow_euler(h, &f, t, 16).unwrap(), heat_flow_resolvent(h, &f, t, 16).unwrap()] {
            prop_assert!(descends(&traj));
            prop_assert!(traj.masses.iter().all(|m| (m - mass).abs() <= 1e-8 * (1.0 + mass.abs())));
        }
    }

    #[test]
    fn flows_contract((k, f, g) in two_fns(), t in 0.05f64..1.0) {
        let h = &instances()[k];
        let d0 = h.distance_between(&f, &g);
        let e = (heat_flow_euler(h, &f, t, 32).unwrap(), heat_flow_euler(h, &g, t, 32).unwrap());
        prop_assert!(h.distance_between(e.0.last(), e.1.last()) <= d0 + 1e-4);
        let r = (heat_flow_resolvent(h, &f, t, 32).unwrap(), heat_flow_resolvent(h, &g, t, 32).unwrap());
        prop_assert!(h.distance_between(r.0.last(), r.1.last()) <= d0 + 1e-4);
    }

    #[test]
    fn flows_are_homogeneous((k, f) in instance_and_fn(), a in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0]) {
        let h = &instances()[k];
        let scaled: Vec<f64> = f.iter().map(|v| a * v).collect();
        let base = heat_flow_resolvent(h, &f, 0.5, 16).unwrap();
        let want: Vec<f64> = base.last().iter().map(|v| a * v).collect();
        let got = heat_flow_resolvent(h, &scaled, 0.5, 16).unwrap();
        prop_assert!(h.distance_between(got.last(), &want) <= 1e-6 * (1.0 + a.abs()));
    }

    #[test]
    fn instance_files_round_trip(seed in 0u64..10_000) {
        let h = random_hypergraph(seed, 7, 8);
        let text = instance_to_string(&h);
        let back = parse_instance_str(&text).unwrap();
        prop_assert_eq!(back.vertices(), h.vertices());
        prop_assert_eq!(back.edges(), h.edges());
        prop_assert_eq!(instance_to_string(&back), text);
    }
}

#[test]
fn hop_distance_is_a_metric() {
    let mut graphs: Vec<Hypergraph> = instances().to_vec();
    graphs.extend((0..40).map(|s| random_hypergraph(500 + s, 12, 14)));
    for h in graphs.iter().filter(|h| h.is_connected()) {
        let n = h.num_vertices();
        let d = |x, y| h.distance(x, y).unwrap();
        for x in 0..n {
            assert_eq!(d(x, x), 0);
            for y in 0..n {
                assert_eq!(d(x, y), d(y, x));
                assert!(x == y || d(x, y) > 0);
                for z in 0..n {
                    assert!(d(x, z) <= d(x, y) + d(y, z));
                }
            }
        }
    }
}

/// Every simple path between two vertices, by depth-first search.
fn simple_paths(h: &Hypergraph, x: usize, y: usize) -> Vec<Vec<usize>> {
    let adj = h.adjacency();
    let mut out = Vec::new();
    let mut stack = vec![vec![x]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if last == y {
            out.push(path);
            continue;
        }
        for &next in &adj[last] {
            if !path.contains(&next) {
                let mut p = path.clone();
                p.push(next);
                stack.push(p);
            }
        }
    }
    out
}

#[test]
fn geodesics_match_brute_force() {
    let mut graphs: Vec<Hypergraph> = instances().to_vec();
    graphs.extend((0..20).map(|s| random_hypergraph(700 + s, 8, 6)));
    for h in graphs.iter().filter(|h| h.is_connected()) {
        let n = h.num_vertices();
        for x in 0..n {
            for y in 0..n {
                let d = h.distance(x, y).unwrap() as usize;
                let mut want: Vec<Vec<usize>> =
                    simple_paths(h, x, y).into_iter().filter(|p| p.len() == d + 1).collect();
                let mut got: Vec<Vec<usize>> = h.geodesics(x, y).unwrap().into_iter().map(|g| g.vertices).collect();
                want.sort();
                got.sort();
                assert_eq!(got, want, "{} {x} {y}", h.name());
            }
        }
    }
}

#[test]
fn weight_scaling_keeps_kappa() {
    for h in [h1(), h2(), instances()[7].clone()] {
        let opts = KdOptions::default();
        for a in [0.5, 5.0] {
            let s = h.scaled(a).unwrap();
            for (x, y) in [(0, 1), (0, h.num_vertices() - 1)] {
                for lambda in [0.1, 0.0125] {
                    let k0 = kappa_lambda(&h, x, y, lambda, &opts).unwrap();
                    let k1 = kappa_lambda(&s, x, y, lambda, &opts).unwrap();
                    assert!((k0 - k1).abs() <= 1e-6, "{} ({x},{y}) λ={lambda} a={a}: {k0} vs {k1}", h.name());
                }
            }
        }
    }
}

#[test]
fn eigen_residual_ignores_weight_scale() {
    for h in [h1(), h2()] {
        let q = h.num_vertices() - 1;
        for pole in [0, q] {
            let base = eigenfunction_check(&h, pole, 1.0, DEFAULT_TOL).unwrap().residual;
            for a in [0.5, 5.0] {
                let r = eigenfunction_check(&h.scaled(a).unwrap(), pole, 1.0, DEFAULT_TOL).unwrap().residual;
                assert!((r - base).abs() <= 1e-8, "{}: {base} vs {r}", h.name());
            }
        }
    }
}

#[test]
fn laplacian_of_distance_at_its_pole() {
    for h in instances() {
        for p in 0..h.num_vertices() {
            // a singleton edge {p} has no gap and adds nothing at p
            let active: f64 = h
                .edges()
                .iter()
                .filter(|e| e.members.len() > 1 && e.members.contains(&p))
                .map(|e| e.weight)
                .sum();
            let v = canonical_laplacian(h, &h.rho(p).unwrap(), DEFAULT_TOL).unwrap().value;
            assert!((v[p] + active).abs() <= 1e-9, "{} at {p}: {} vs {}", h.name(), v[p], -active);
        }
    }
}

#[test]
fn flows_compose() {
    for h in [h1(), h2()] {
        let f = h.rho(0).unwrap();
        for method in [FlowMethod::Euler, FlowMethod::Resolvent] {
            let whole = heat_flow(&h, &f, 1.0, 256, method, DEFAULT_TOL).unwrap();
            let first = heat_flow(&h, &f, 0.3, 77, method, DEFAULT_TOL).unwrap();
            let second = heat_flow(&h, first.last(), 0.7, 179, method, DEFAULT_TOL).unwrap();
            let gap = h.distance_between(second.last(), whole.last());
            assert!(gap <= 1e-3, "{} {method:?}: {gap}", h.name());
        }
    }
}

#[test]
fn flows_settle_at_equilibrium() {
    for h in instances().iter().filter(|h| h.is_connected() && h.num_vertices() <= 8) {
        let f = h.rho(h.num_vertices() - 1).unwrap();
        let traj = heat_flow_resolvent(h, &f, 200.0, 100).unwrap();
        let gap = h.distance_between(traj.last(), &equilibrium(h, &f).unwrap());
        assert!(gap <= 1e-3, "{}: {gap}", h.name());
    }
}
