//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test --test acceptance -- --nocapture` to see the table.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hypercurv::curvature::{curvature_matrix, default_schedule, kantorovich_difference, KdOptions};
use hypercurv::heat::{heat_flow_euler, heat_flow_resolvent, FlowTrajectory};
use hypercurv::instances::{corpus, h1, h2, pendant_h2};
use hypercurv::laplacian::{canonical_laplacian, energy, DEFAULT_TOL};
use hypercurv::oracle::{oracle_kd, oracle_min_norm, oracle_resolvent, OracleConfig};
use hypercurv::resolvent::{resolvent, resolvent_with};
use hypercurv::rigidity::{maximal_diameter_rigidity, RigidityOptions};
use hypercurv::Hypergraph;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, run: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = run();
    let took = start.elapsed();
    out.detail = format!("{} [{:.2}s]", out.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took >= limit {
            out.pass = false;
            out.detail.push_str(&format!(" exceeds {:.0}s", limit.as_secs_f64()));
        }
    }
    out
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sup_density(h: &Hypergraph, a: &[f64], b: &[f64]) -> f64 {
    sup(&h.density(a), &h.density(b))
}

/// Diameter, Bonnet–Myers, excess, pole pairings and eigen-residuals at `K = 1`.
fn rigidity_verdicts(h: &Hypergraph) -> (bool, String) {
    let r = maximal_diameter_rigidity(h, 1.0, &RigidityOptions::default()).unwrap();
    let excess_zero = r.excess.iter().all(|e| e.values.iter().all(|&v| v == 0.0));
    let pairing = r
        .pole_pairings
        .iter()
        .flat_map(|p| [p.rho_p_at_q, p.rho_q_at_p])
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let eigen = r.eigen_residuals.iter().map(|e| e.residual).fold(0.0, f64::max);
    let pass = r.diameter == 2
        && r.bound == 2.0
        && r.maximal
        && r.all_covered()
        && excess_zero
        && !r.pole_pairings.is_empty()
        && pairing <= 1e-8
        && r.eigen_residuals.len() >= 2
        && eigen <= 1e-6;
    let detail = format!(
        "diam={} bound={} maximal={} excess≡0={} pairing err={pairing:.1e} eigen={eigen:.1e}",
        r.diameter, r.bound, r.maximal, excess_zero
    );
    (pass, detail)
}

fn criterion_1() -> Outcome {
    timed(Some(Duration::from_secs(1)), || {
        let (pass, detail) = rigidity_verdicts(&h2());
        outcome(pass, detail)
    })
}

fn criterion_2() -> Outcome {
    timed(Some(Duration::from_secs(1)), || {
        let h = h1();
        let (pass, detail) = rigidity_verdicts(&h);
        let rho = h.rho(0).unwrap();
        let fast = canonical_laplacian(&h, &rho, DEFAULT_TOL).unwrap().value;
        let slow = oracle_min_norm(&h, &rho, &OracleConfig::default()).unwrap();
        let closed = h.distance_between(&fast, &[-3.0, 0.0, 0.0, 3.0]);
        let oracle = h.distance_between(&fast, &slow);
        outcome(
            pass && closed <= 1e-6 && oracle <= 1e-6,
            format!("{detail} |L0 rho_p - (-3,0,0,3)|={closed:.1e} vs oracle={oracle:.1e}"),
        )
    })
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for h in [h1(), h2()] {
        let start = Instant::now();
        let opts = RigidityOptions {
            curvature: true,
            ..Default::default()
        };
        let r = maximal_diameter_rigidity(&h, 1.0, &opts).unwrap();
        let took = start.elapsed();
        let on: Vec<_> = r.curvature.iter().filter(|c| c.on_common_geodesic).collect();
        let hits = on.iter().filter(|c| c.lower <= 1.05 && c.upper >= 0.95).count();
        let worst = on
            .iter()
            .map(|c| format!("{}-{}=[{:.4},{:.4}]", c.x, c.y, c.lower, c.upper))
            .collect::<Vec<_>>()
            .join(" ");
        pass &= !on.is_empty() && hits == on.len() && took < Duration::from_secs(30);
        parts.push(format!("{}: {hits}/{} {worst} [{:.2}s]", h.name(), on.len(), took.as_secs_f64()));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    timed(None, || {
        let h = h2();
        let rho = h.rho(0).unwrap();
        let mut worst: f64 = 0.0;
        let mut cert: f64 = 0.0;
        for lambda in [1.0, 0.5, 0.1, 0.01] {
            let a = lambda / (1.0 + lambda);
            let r = resolvent_with(&h, &rho, lambda, &Default::default()).unwrap();
            worst = worst.max(h.distance_between(&r.minimizer, &[a, 2.0, 2.0, 2.0 - a]));
            cert = cert.max(r.residual);
        }
        outcome(worst <= 1e-6, format!("max error {worst:.1e}, membership residual {cert:.1e}"))
    })
}

fn descends(traj: &FlowTrajectory) -> bool {
    traj.energies.windows(2).all(|w| w[1] <= w[0] + 1e-8)
}

fn criterion_5() -> Outcome {
    timed(None, || {
        const CASES: usize = 256;
        let hs = corpus();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draw = |rng: &mut ChaCha8Rng| {
            let h = &hs[rng.gen_range(0..hs.len())];
            let tied = rng.gen_bool(0.5);
            let dens: Vec<f64> = (0..h.num_vertices())
                .map(|_| {
                    let v: f64 = rng.gen_range(-4.0..4.0);
                    if tied {
                        v.round() / 2.0
                    } else {
                        v
                    }
                })
                .collect();
            (h, h.from_density(&dens))
        };
        let mut fails: Vec<String> = Vec::new();
        let mut check = |name: &str, ok: bool| {
            if !ok && !fails.iter().any(|f| f == name) {
                fails.push(name.to_string());
            }
        };
        for case in 0..CASES {
            let (h, f) = draw(&mut rng);
            let (_, g) = draw(&mut rng);
            let g = if g.len() == f.len() { g } else { f.iter().map(|v| -0.5 * v + 1.0).collect() };
            let a: f64 = if rng.gen_bool(0.5) { rng.gen_range(0.1..3.0) } else { rng.gen_range(-3.0..-0.1) };
            let lambda: f64 = rng.gen_range(0.001..2.0);
            let scaled: Vec<f64> = f.iter().map(|v| a * v).collect();

            let lap = canonical_laplacian(h, &f, DEFAULT_TOL).unwrap().value;
            check("mass", lap.iter().sum::<f64>().abs() <= 1e-10);

            let lip = h.lipschitz_vertex_samples(case as u64, 4).unwrap();
            let l = &lip[lip.len() - 1];
            let lv = canonical_laplacian(h, l, DEFAULT_TOL).unwrap().value;
            check("lipschitz bound", lv.iter().zip(h.degrees()).all(|(x, d)| x.abs() <= d + 1e-8));

            let want: Vec<f64> = lap.iter().map(|v| a * v).collect();
            let got = canonical_laplacian(h, &scaled, DEFAULT_TOL).unwrap().value;
            check("L homogeneity", h.distance_between(&got, &want) <= 1e-6 * (1.0 + h.norm(&want)));

            let jf = resolvent_with(h, &f, lambda, &Default::default()).unwrap().minimizer;
            let want: Vec<f64> = jf.iter().map(|v| a * v).collect();
            let got = resolvent_with(h, &scaled, lambda, &Default::default()).unwrap().minimizer;
            check("J homogeneity", h.distance_between(&got, &want) <= 1e-6 * (1.0 + a.abs()));

            let jg = resolvent_with(h, &g, lambda, &Default::default()).unwrap().minimizer;
            check("J nonexpansive", h.distance_between(&jf, &jg) <= h.distance_between(&f, &g) + 1e-6);

            let t: f64 = rng.gen_range(0.05..1.0);
            let base = heat_flow_resolvent(h, &f, t, 16).unwrap();
            let want: Vec<f64> = base.last().iter().map(|v| a * v).collect();
            let got = heat_flow_resolvent(h, &scaled, t, 16).unwrap();
            check("h_t homogeneity", h.distance_between(got.last(), &want) <= 1e-6 * (1.0 + a.abs()));
            let euler = heat_flow_euler(h, &f, t, 16).unwrap();
            check("E descent", descends(&base) && descends(&euler));
            check("J energy", energy(h, &jf) <= energy(h, &f) + 1e-10);
        }

        let mut agreement = Vec::new();
        for h in [h1(), h2()] {
            for z in [0, h.num_vertices() - 1] {
                let f = h.rho(z).unwrap();
                let e = heat_flow_euler(&h, &f, 1.0, 64).unwrap();
                let r = heat_flow_resolvent(&h, &f, 1.0, 64).unwrap();
                let gap = e
                    .states
                    .iter()
                    .zip(&r.states)
                    .map(|(a, b)| sup_density(&h, a, b))
                    .fold(0.0, f64::max);
                let weighted = e
                    .states
                    .iter()
                    .zip(&r.states)
                    .map(|(a, b)| h.distance_between(a, b))
                    .fold(0.0, f64::max);
                check("flow agreement", gap <= 1e-2);
                agreement.push(format!("{}/{}: sup {gap:.4} (weighted {weighted:.4})", h.name(), h.vertex_name(z)));
            }
        }
        let detail = format!(
            "{CASES} cases per property; failing: {}; Euler vs resolvent at 64 steps: {}",
            if fails.is_empty() { "none".to_string() } else { fails.join(", ") },
            agreement.join(", ")
        );
        outcome(fails.is_empty(), detail)
    })
}

fn criterion_6() -> Outcome {
    timed(Some(Duration::from_secs(300)), || {
        let cfg = OracleConfig::default();
        let (mut mn, mut rs, mut kd): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut count = 0;
        for h in corpus() {
            let n = h.num_vertices();
            let mut fs = h.lipschitz_vertex_samples(11, 4).unwrap();
            fs.extend((0..n).map(|z| h.rho(z).unwrap()));
            for f in &fs {
                let fast = canonical_laplacian(&h, f, DEFAULT_TOL).unwrap().value;
                mn = mn.max(h.distance_between(&fast, &oracle_min_norm(&h, f, &cfg).unwrap()));
                for lambda in [1.0, 0.1, 0.0125] {
                    let fast = resolvent(&h, f, lambda, 1e-9 * (1.0 + h.norm(f))).unwrap().minimizer;
                    let slow = oracle_resolvent(&h, f, lambda, &cfg).unwrap();
                    rs = rs.max(h.distance_between(&fast, &slow));
                }
            }
            for x in 0..n {
                for y in x + 1..n {
                    if h.distance(x, y).is_none() {
                        continue;
                    }
                    for lambda in [0.1, 0.0125] {
                        let fast = kantorovich_difference(&h, x, y, lambda, &KdOptions::default()).unwrap().value;
                        let slow = oracle_kd(&h, x, y, lambda, &cfg).unwrap().value;
                        kd = kd.max((fast - slow).abs());
                        count += 1;
                    }
                }
            }
        }
        outcome(
            mn <= 1e-6 && rs <= 1e-5 && kd <= 1e-4,
            format!("min-norm {mn:.1e}, resolvent {rs:.1e}, KD {kd:.1e} over {count} KD pairs"),
        )
    })
}

fn criterion_7() -> Outcome {
    timed(None, || {
        let h = h2();
        let n = h.num_vertices();
        let cfg = OracleConfig::default();
        let (mut asym, mut slack): (f64, f64) = (0.0, 0.0);
        for lambda in [0.5, 0.1] {
            let mut kd = vec![vec![0.0; n]; n];
            for (x, row) in kd.iter_mut().enumerate() {
                for (y, v) in row.iter_mut().enumerate() {
                    if x != y {
                        *v = oracle_kd(&h, x, y, lambda, &cfg).unwrap().value;
                    }
                }
            }
            for x in 0..n {
                for y in 0..n {
                    asym = asym.max((kd[x][y] - kd[y][x]).abs());
                    for z in 0..n {
                        slack = slack.max(kd[x][z] - kd[x][y] - kd[y][z]);
                    }
                }
            }
        }
        outcome(
            asym <= 1e-6 && slack <= 1e-4,
            format!("max asymmetry {asym:.1e}, max triangle violation {slack:.1e}"),
        )
    })
}

fn criterion_8() -> Outcome {
    timed(None, || {
        let h = h2();
        let s = h.scaled(5.0).unwrap();
        let opts = KdOptions::default();
        let a = curvature_matrix(&h, &default_schedule(), &opts).unwrap();
        let b = curvature_matrix(&s, &default_schedule(), &opts).unwrap();
        let mut worst: f64 = 0.0;
        for (p, q) in a.iter().zip(&b) {
            for (r, t) in p.rows.iter().zip(&q.rows) {
                worst = worst.max((r.kappa_lambda - t.kappa_lambda).abs());
            }
            worst = worst.max((p.lower - q.lower).abs()).max((p.upper - q.upper).abs());
        }
        outcome(a.len() == b.len() && worst <= 1e-3, format!("max table difference {worst:.1e}"))
    })
}

fn criterion_9() -> Outcome {
    timed(None, || {
        let h = pendant_h2();
        let w = h.vertex_index("w").unwrap();
        let r = maximal_diameter_rigidity(&h, 1.0, &RigidityOptions::default()).unwrap();
        let pq = r.excess.iter().zip(&r.coverage).find(|(e, _)| {
            let mut ends = [e.p.as_str(), e.q.as_str()];
            ends.sort();
            ends == ["p", "q"]
        });
        let Some((e, c)) = pq else {
            return outcome(false, "no diametral pair (p, q)".into());
        };
        let value = e.values[w];
        let pass = r.maximal && !c.covered && c.uncovered == ["w"] && value == 2.0 * h.degree(w);
        outcome(
            pass,
            format!("maximal={} covered={} uncovered={:?} excess(w)={value} 2·d_w={}", r.maximal, c.covered, c.uncovered, 2.0 * h.degree(w)),
        )
    })
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("H2 rigidity", criterion_1),
        ("H1 rigidity", criterion_2),
        ("curvature reproduction", criterion_3),
        ("closed-form resolvent", criterion_4),
        ("property suites", criterion_5),
        ("oracle equivalence", criterion_6),
        ("KD metric axioms", criterion_7),
        ("weight-scale invariance", criterion_8),
        ("negative control", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} {} {name}: {}", i + 1, out.detail);
        if !out.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
