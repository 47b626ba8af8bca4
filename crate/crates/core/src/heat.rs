//! The nonlinear heat flow `h_t`, by explicit Euler on `𝓛⁰` and by the
//! exponential formula `h_t f ≈ (J_{t/n})ⁿ f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::laplacian::{canonical_laplacian, energy, DEFAULT_TOL};
use crate::resolvent::{resolvent_with, ResolventOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMethod {
    Euler,
    Resolvent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub method: FlowMethod,
    pub initial: Vec<f64>,
    pub t: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub masses: Vec<f64>,
    /// Euler substeps rejected by the energy guard.
    pub halvings: usize,
}

impl FlowTrajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

const ENERGY_SLACK: f64 = 1e-8;
const MAX_HALVINGS: u32 = 30;

fn check(h: &Hypergraph, f: &[f64], t: f64, steps: usize) -> Result<()> {
    h.check_len(f)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    Ok(())
}

fn trajectory(method: FlowMethod, f: &[f64], t: f64, steps: usize) -> FlowTrajectory {
    FlowTrajectory {
        method,
        initial: f.to_vec(),
        t,
        steps,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        energies: Vec::with_capacity(steps + 1),
        masses: Vec::with_capacity(steps + 1),
        halvings: 0,
    }
}

fn record(traj: &mut FlowTrajectory, h: &Hypergraph, time: f64, u: Vec<f64>) {
    traj.times.push(time);
    traj.energies.push(energy(h, &u));
    traj.masses.push(u.iter().sum());
    traj.states.push(u);
}

pub fn heat_flow(
    h: &Hypergraph,
    f: &[f64],
    t: f64,
    steps: usize,
    method: FlowMethod,
    tol: f64,
) -> Result<FlowTrajectory> {
    match method {
        FlowMethod::Euler => heat_flow_euler_with(h, f, t, steps, tol),
        FlowMethod::Resolvent => heat_flow_resolvent_with(h, f, t, steps, Some(tol)),
    }
}

/// `u_{k+1} = u_k − (t/steps) 𝓛⁰u_k`.
pub fn heat_flow_euler(h: &Hypergraph, f: &[f64], t: f64, steps: usize) -> Result<FlowTrajectory> {
    heat_flow_euler_with(h, f, t, steps, DEFAULT_TOL)
}

pub fn heat_flow_euler_with(
    h: &Hypergraph,
    f: &[f64],
    t: f64,
    steps: usize,
    tol: f64,
) -> Result<FlowTrajectory> {
    check(h, f, t, steps)?;
    let dt = t / steps as f64;
    let mut traj = trajectory(FlowMethod::Euler, f, t, steps);
    let mut u = f.to_vec();
    record(&mut traj, h, 0.0, u.clone());
    for k in 1..=steps {
        u = euler_step(h, &u, dt, tol, 0, &mut traj.halvings)?;
        record(&mut traj, h, dt * k as f64, u.clone());
    }
    Ok(traj)
}

fn euler_step(
    h: &Hypergraph,
    u: &[f64],
    dt: f64,
    tol: f64,
    depth: u32,
    halvings: &mut usize,
) -> Result<Vec<f64>> {
    let lap = canonical_laplacian(h, u, tol)?;
    let next: Vec<f64> = u.iter().zip(&lap.value).map(|(a, b)| a - dt * b).collect();
    if depth >= MAX_HALVINGS || energy(h, &next) <= energy(h, u) + ENERGY_SLACK {
        return Ok(next);
    }
    *halvings += 1;
    let half = euler_step(h, u, dt / 2.0, tol, depth + 1, halvings)?;
    euler_step(h, &half, dt / 2.0, tol, depth + 1, halvings)
}

/// `n` resolvent steps with `λ = t/n`; state `k` approximates `h_{tk/n} f`.
pub fn heat_flow_resolvent(h: &Hypergraph, f: &[f64], t: f64, n: usize) -> Result<FlowTrajectory> {
    heat_flow_resolvent_with(h, f, t, n, None)
}

pub fn heat_flow_resolvent_with(
    h: &Hypergraph,
    f: &[f64],
    t: f64,
    n: usize,
    tol: Option<f64>,
) -> Result<FlowTrajectory> {
    check(h, f, t, n)?;
    let lambda = t / n as f64;
    let mut traj = trajectory(FlowMethod::Resolvent, f, t, n);
    let mut u = f.to_vec();
    record(&mut traj, h, 0.0, u.clone());
    for k in 1..=n {
        if lambda > 0.0 {
            u = resolvent_with(
                h,
                &u,
                lambda,
                &ResolventOptions {
                    tol,
                    ..Default::default()
                },
            )?
            .minimizer;
        }
        record(&mut traj, h, lambda * k as f64, u.clone());
    }
    Ok(traj)
}

/// `(Σf / Σd) · D𝟙`, the constant-density function with the mass of `f`.
pub fn equilibrium(h: &Hypergraph, f: &[f64]) -> Result<Vec<f64>> {
    h.check_len(f)?;
    h.require_connected()?;
    let c = f.iter().sum::<f64>() / h.volume();
    Ok(h.degrees().iter().map(|d| c * d).collect())
}
