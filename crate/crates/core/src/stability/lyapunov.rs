//! Maximal Lyapunov exponent by tangent-vector renormalization (Benettin).

use nalgebra::{DMatrix, DVector};

use super::StabilityError;
use crate::dynamics::VertexDynamics;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Flow,
    Map,
}

/// Horizon parameters. For maps every length is a step count and `dt` is unused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovParams {
    pub mode: Mode,
    pub dt: f64,
    pub t_total: f64,
    pub renorm_interval: f64,
    pub transient: f64,
    /// Allowed drift between the last two history entries.
    pub tolerance: f64,
}

impl LyapunovParams {
    pub fn flow() -> Self {
        Self {
            mode: Mode::Flow,
            dt: 1e-3,
            t_total: 2000.0,
            renorm_interval: 1.0,
            transient: 100.0,
            tolerance: 1e-3,
        }
    }

    pub fn map() -> Self {
        Self {
            mode: Mode::Map,
            dt: 1.0,
            t_total: 1e6,
            renorm_interval: 1.0,
            transient: 1e3,
            tolerance: 1e-3,
        }
    }

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Flow => Self::flow(),
            Mode::Map => Self::map(),
        }
    }

    fn step(&self) -> f64 {
        match self.mode {
            Mode::Flow => self.dt,
            Mode::Map => 1.0,
        }
    }

    fn steps(&self, length: f64) -> usize {
        (length / self.step()).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    /// Additive rate per unit time (flows) or per step (maps).
    pub lambda_max: f64,
    /// `exp(lambda_max)`.
    pub growth_factor: f64,
    pub t_total: f64,
    pub renorm_interval: f64,
    pub transient_discarded: f64,
    /// Running estimates at every tenth of the measured horizon.
    pub convergence_history: Vec<f64>,
    pub tolerance: f64,
}

impl LyapunovEstimate {
    fn new(lambda_max: f64, params: &LyapunovParams, history: Vec<f64>) -> Self {
        Self {
            lambda_max,
            growth_factor: lambda_max.exp(),
            t_total: params.t_total,
            renorm_interval: params.renorm_interval,
            transient_discarded: params.transient,
            convergence_history: history,
            tolerance: params.tolerance,
        }
    }

    /// Drift over the last tenth of the run is within tolerance.
    pub fn converged(&self) -> bool {
        match self.convergence_history.as_slice() {
            [.., a, b] => a == b || (a - b).abs() <= self.tolerance,
            _ => true,
        }
    }
}

/// Reference orbit `x' = f(x) + a·h(x)` (or its map analogue).
pub(crate) struct Reference<'a> {
    pub f: &'a dyn VertexDynamics,
    pub h: Option<(&'a dyn VertexDynamics, f64)>,
}

impl Reference<'_> {
    fn field(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.f.eval_vec(x);
        if let Some((h, a)) = self.h {
            if a != 0.0 {
                for (o, v) in out.iter_mut().zip(h.eval_vec(x)) {
                    *o += a * v;
                }
            }
        }
        out
    }

    fn frozen(&self) -> bool {
        self.f.state_independent_jacobian()
            && self.h.is_none_or(|(h, _)| h.state_independent_jacobian())
    }
}

fn axpy(x: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Growth rate of `v' = M(x(t))·v` along the reference orbit from `x0`.
pub(crate) fn variational_rate(
    reference: &Reference<'_>,
    x0: &[f64],
    params: &LyapunovParams,
    variational: &dyn Fn(&[f64]) -> DMatrix<f64>,
) -> Result<LyapunovEstimate, StabilityError> {
    let m = reference.f.dim();
    if x0.len() != m {
        return Err(StabilityError::BadParams(format!(
            "initial point has {} components, dynamics has {m}",
            x0.len()
        )));
    }
    if !(params.t_total > params.transient && params.transient >= 0.0 && params.renorm_interval > 0.0) {
        return Err(StabilityError::BadParams(format!(
            "need t_total > transient >= 0 and renorm_interval > 0 (got {}, {}, {})",
            params.t_total, params.transient, params.renorm_interval
        )));
    }
    if params.mode == Mode::Flow && !(params.dt > 0.0) {
        return Err(StabilityError::BadParams(format!("dt must be positive, got {}", params.dt)));
    }
    let renorm_steps = params.steps(params.renorm_interval).max(1);
    let transient_intervals = params.steps(params.transient).div_ceil(renorm_steps);
    let total_intervals = params.steps(params.t_total) / renorm_steps;
    if total_intervals <= transient_intervals {
        return Err(StabilityError::BadParams("horizon shorter than one renormalization interval".into()));
    }
    let measured_intervals = total_intervals - transient_intervals;
    let interval_length = renorm_steps as f64 * params.step();
    let checkpoint = (measured_intervals / 10).max(1);

    let frozen = reference.frozen();
    let dt = params.dt;
    // constant Jacobian: one RK4 step is the fixed matrix Σ_{j≤4} (dt·J)^j / j!
    let propagator = (frozen && params.mode == Mode::Flow).then(|| {
        let hj = variational(x0) * dt;
        let mut term = DMatrix::identity(m, m);
        let mut sum = term.clone();
        for j in 1..=4 {
            term = &term * &hj / j as f64;
            sum += &term;
        }
        sum
    });
    let mut x = x0.to_vec();
    let mut v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    let mut log_sum = 0.0;
    let mut history = Vec::new();
    let mut t = 0.0;

    for interval in 0..total_intervals {
        for _ in 0..renorm_steps {
            match params.mode {
                Mode::Map => {
                    let jac = variational(&x);
                    v = jac * v;
                    if !frozen {
                        x = reference.field(&x);
                    }
                }
                Mode::Flow => {
                    if let Some(p) = &propagator {
                        v = p * &v;
                    } else {
                        let k1x = reference.field(&x);
                        let k1v = variational(&x) * &v;
                        let x2 = axpy(&x, &k1x, 0.5 * dt);
                        let k2x = reference.field(&x2);
                        let k2v = variational(&x2) * (&v + &k1v * (0.5 * dt));
                        let x3 = axpy(&x, &k2x, 0.5 * dt);
                        let k3x = reference.field(&x3);
                        let k3v = variational(&x3) * (&v + &k2v * (0.5 * dt));
                        let x4 = axpy(&x, &k3x, dt);
                        let k4x = reference.field(&x4);
                        let k4v = variational(&x4) * (&v + &k3v * dt);
                        for a in 0..m {
                            x[a] += dt / 6.0 * (k1x[a] + 2.0 * (k2x[a] + k3x[a]) + k4x[a]);
                        }
                        v += (k1v + (k2v + k3v) * 2.0 + k4v) * (dt / 6.0);
                    }
                }
            }
            t += params.step();
        }
        if x.iter().any(|c| !c.is_finite()) || v.iter().any(|c| !c.is_finite()) {
            return Err(StabilityError::Diverged { t });
        }
        let norm = v.norm();
        if norm == 0.0 {
            // tangent annihilated exactly: contraction is infinitely fast
            return Ok(LyapunovEstimate::new(f64::NEG_INFINITY, params, vec![f64::NEG_INFINITY]));
        }
        v /= norm;
        if interval >= transient_intervals {
            log_sum += norm.ln();
            let done = interval + 1 - transient_intervals;
            if done.is_multiple_of(checkpoint) {
                history.push(log_sum / (done as f64 * interval_length));
            }
        }
    }
    let lambda = log_sum / (measured_intervals as f64 * interval_length);
    if !measured_intervals.is_multiple_of(checkpoint) {
        history.push(lambda);
    }
    Ok(LyapunovEstimate::new(lambda, params, history))
}

/// Maximal Lyapunov exponent of the uncoupled vertex dynamics.
pub fn lyapunov_exponent(
    dynamics: &dyn VertexDynamics,
    x0: &[f64],
    params: &LyapunovParams,
) -> Result<LyapunovEstimate, StabilityError> {
    match params.mode {
        Mode::Flow if !dynamics.kind().allows_flow() => {
            return Err(StabilityError::BadParams(format!("{} is not a vector field", dynamics.name())))
        }
        Mode::Map if !dynamics.kind().allows_map() => {
            return Err(StabilityError::BadParams(format!("{} is not a map", dynamics.name())))
        }
        _ => {}
    }
    let reference = Reference { f: dynamics, h: None };
    variational_rate(&reference, x0, params, &|x| dynamics.jacobian(x))
}
