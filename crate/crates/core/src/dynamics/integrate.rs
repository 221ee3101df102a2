use nalgebra::DMatrix;

use super::coupling::{map_rows, rhs, CoupledSystem};
use super::vertex::VertexDynamics;
use super::{DynamicsError, SystemState};
use crate::spectral::{KernelProjector, LaplacianMatrix};

/// Uniformly sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SystemState>,
    pub integrator: String,
    pub dt: f64,
    pub dt_out: f64,
    pub coupling: String,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&SystemState> {
        self.states.last()
    }
}

/// One classical Runge–Kutta step of size `dt`.
pub fn rk4_step(system: &CoupledSystem, s: &SystemState, dt: f64) -> Result<DMatrix<f64>, DynamicsError> {
    let half = 0.5 * dt;
    let k1 = rhs(system, s)?;
    let k2 = rhs(system, &SystemState::new(s.t + half, &s.x + &k1 * half))?;
    let k3 = rhs(system, &SystemState::new(s.t + half, &s.x + &k2 * half))?;
    let k4 = rhs(system, &SystemState::new(s.t + dt, &s.x + &k3 * dt))?;
    Ok(&s.x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
}

fn step_ratio(big: f64, small: f64, what: &str) -> Result<usize, DynamicsError> {
    let r = big / small;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-9 * r.max(1.0) {
        return Err(DynamicsError::BadStep(format!(
            "{what} ({big}) must be a positive integer multiple of dt ({small})"
        )));
    }
    Ok(k as usize)
}

/// Fixed-step RK4 from `s0.t` to `t_end`, recording every `dt_out`.
///
/// On divergence the error carries the samples recorded so far.
pub fn integrate(
    system: &CoupledSystem,
    s0: &SystemState,
    dt: f64,
    t_end: f64,
    dt_out: f64,
) -> Result<Trajectory, DynamicsError> {
    if !system.dynamics.kind().allows_flow() {
        return Err(DynamicsError::WrongKind(format!(
            "map-type `{}` as a vector field",
            system.dynamics.name()
        )));
    }
    if !(dt > 0.0) || !(t_end > s0.t) {
        return Err(DynamicsError::BadStep(format!(
            "need dt > 0 and t_end > t0 (dt = {dt}, t0 = {}, t_end = {t_end})",
            s0.t
        )));
    }
    let every = step_ratio(dt_out, dt, "dt_out")?;
    let n_steps = ((t_end - s0.t) / dt).round() as usize;
    let t0 = s0.t;

    let mut traj = Trajectory {
        states: vec![s0.clone()],
        integrator: "rk4".into(),
        dt,
        dt_out: dt * every as f64,
        coupling: system.coupling.describe(),
    };
    let mut s = s0.clone();
    for k in 1..=n_steps {
        let x = match rk4_step(system, &s, dt) {
            Ok(x) => x,
            Err(DynamicsError::NonFinite { vertex, t }) => {
                return Err(DynamicsError::Diverged {
                    vertex,
                    t,
                    partial: Box::new(traj),
                })
            }
            Err(e) => return Err(e),
        };
        // times from the grid index, never accumulated
        s = SystemState::new(t0 + k as f64 * dt, x);
        if let Some(vertex) = s.first_non_finite_vertex() {
            return Err(DynamicsError::Diverged {
                vertex,
                t: s.t,
                partial: Box::new(traj),
            });
        }
        if k % every == 0 {
            traj.states.push(s.clone());
        }
    }
    Ok(traj)
}

/// One coupled-map-lattice step: `x_i ← f(x_i) - σ·Σ_j L_ij·f(x_j)`.
pub fn cml_step(
    dynamics: &dyn VertexDynamics,
    laplacian: &LaplacianMatrix,
    s: &SystemState,
    sigma: f64,
) -> Result<SystemState, DynamicsError> {
    if !dynamics.kind().allows_map() {
        return Err(DynamicsError::WrongKind(format!(
            "vector field `{}` as a map",
            dynamics.name()
        )));
    }
    if s.x.nrows() != laplacian.n() || s.x.ncols() != dynamics.dim() {
        return Err(DynamicsError::Dimension(format!(
            "state is {}x{}, lattice expects {}x{}",
            s.x.nrows(),
            s.x.ncols(),
            laplacian.n(),
            dynamics.dim()
        )));
    }
    let fx = map_rows(dynamics, &s.x, s.t)?;
    let coupled = &laplacian.dense * &fx;
    let next = SystemState::new(s.t + 1.0, fx - coupled * sigma);
    if let Some(vertex) = next.first_non_finite_vertex() {
        return Err(DynamicsError::NonFinite { vertex, t: next.t });
    }
    Ok(next)
}

/// Iterates [`cml_step`] `steps` times, recording every `record_every` steps.
pub fn iterate_cml(
    dynamics: &dyn VertexDynamics,
    laplacian: &LaplacianMatrix,
    s0: &SystemState,
    sigma: f64,
    steps: usize,
    record_every: usize,
) -> Result<Trajectory, DynamicsError> {
    if record_every == 0 {
        return Err(DynamicsError::BadStep("record interval must be at least one step".into()));
    }
    let mut traj = Trajectory {
        states: vec![s0.clone()],
        integrator: "cml".into(),
        dt: 1.0,
        dt_out: record_every as f64,
        coupling: format!("laplacian(N={}, sigma={sigma})", laplacian.n()),
    };
    let mut s = s0.clone();
    for k in 1..=steps {
        s = match cml_step(dynamics, laplacian, &s, sigma) {
            Ok(next) => next,
            Err(DynamicsError::NonFinite { vertex, t }) => {
                return Err(DynamicsError::Diverged {
                    vertex,
                    t,
                    partial: Box::new(traj),
                })
            }
            Err(e) => return Err(e),
        };
        if k % record_every == 0 {
            traj.states.push(s.clone());
        }
    }
    Ok(traj)
}

/// Reference manifold for [`sync_error`].
#[derive(Debug, Clone, Copy)]
pub enum SyncTarget<'a> {
    /// The diagonal: all vertices equal.
    Constants,
    /// The zero-eigenspace of the Laplacian.
    Kernel(&'a KernelProjector),
}

/// `max |x - P·x|` over vertices and components.
pub fn sync_error(x: &DMatrix<f64>, target: SyncTarget<'_>) -> f64 {
    match target {
        SyncTarget::Constants => {
            let n = x.nrows() as f64;
            let mut worst = 0.0f64;
            for col in x.column_iter() {
                // centred on the first entry so constant columns give exactly zero
                let base = col[0];
                let mean = base + col.iter().map(|v| v - base).sum::<f64>() / n;
                for v in col.iter() {
                    worst = worst.max((v - mean).abs());
                }
            }
            worst
        }
        SyncTarget::Kernel(p) => p.residual(x).amax(),
    }
}
