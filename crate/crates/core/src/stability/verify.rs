//! Empirical check of predicted coupling windows by direct simulation.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::lyapunov::Mode;
use super::msf::{stability_report, Verdict, Window};
use super::StabilityError;
use crate::dynamics::{
    cml_step, integrate, rk4_step, sync_error, CoupledSystem, CouplingSpec, Dynamics, SyncTarget,
    SystemState, VertexDynamics,
};
use crate::hypergraph::{sync_invariance_check, ChemicalHypergraph};
use crate::spectral::{default_zero_tol, kernel_projector, laplacian, spectrum, KernelProjector};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Map iterations per trial.
    pub steps: usize,
    /// Flow horizon and step per trial.
    pub t_end: f64,
    pub dt: f64,
    /// A trial counts as synchronized when its final sync error is below this.
    pub threshold: f64,
    /// Samples this close to a window boundary are left out of the agreement statistic.
    pub boundary_margin: f64,
    pub zero_tol: Option<f64>,
}

impl VerifyConfig {
    pub fn new(sigmas: Vec<f64>, mode: Mode) -> Self {
        Self {
            sigmas,
            trials: 20,
            seed: 42,
            mode,
            steps: 2000,
            t_end: 200.0,
            dt: 1e-2,
            threshold: 1e-6,
            boundary_margin: 0.02,
            zero_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaOutcome {
    pub sigma: f64,
    pub theory_stable: bool,
    pub theory_marginal: bool,
    /// Near a window boundary; not counted in the agreement fraction.
    pub excluded: bool,
    pub empirical_sync_fraction: f64,
    /// Mean over trials; infinite when any trial diverged.
    pub mean_final_sync_error: f64,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub lambda_max: f64,
    pub window: Option<Window>,
    pub outcomes: Vec<SigmaOutcome>,
    /// Fraction of counted trials whose outcome matches the theoretical verdict.
    pub agreement_fraction: f64,
}

/// Uniform random initial condition in the dynamics' bounding box, one row per vertex.
fn random_map_state(d: &dyn VertexDynamics, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let bbox = d.bounding_box();
    let mut x = DMatrix::zeros(n, d.dim());
    for i in 0..n {
        for (a, &(lo, hi)) in bbox.iter().enumerate() {
            x[(i, a)] = rng.gen_range(lo..hi);
            // open interval: avoid the fixed point at the lower edge
            if x[(i, a)] == lo {
                x[(i, a)] = 0.5 * (lo + hi);
            }
        }
    }
    x
}

/// Point on the attractor of the uncoupled flow.
fn attractor_point(d: &Arc<Dynamics>, dt: f64) -> Result<Vec<f64>, StabilityError> {
    let single = CoupledSystem::new(
        d.clone(),
        CouplingSpec::matrix(DMatrix::zeros(1, 1), d.clone())?,
    )?;
    let mut s = SystemState::synchronized(0.0, 1, &d.reference_point());
    let steps = (50.0 / dt).round() as usize;
    for _ in 0..steps {
        s.x = rk4_step(&single, &s, dt)?;
        s.t += dt;
    }
    if !s.is_finite() {
        return Err(StabilityError::Diverged { t: s.t });
    }
    Ok(s.x.row(0).iter().copied().collect())
}

fn perturbed_state(point: &[f64], n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = point.len();
    let noise: DMatrix<f64> = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
    let scaled: DMatrix<f64> = &noise * (1e-3 / noise.norm());
    DMatrix::from_fn(n, m, |i, a| point[a] + scaled[(i, a)])
}

fn trial_state(d: &Dynamics, n: usize, attractor: Option<&[f64]>, seed: u64, trial: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    match attractor {
        Some(p) => perturbed_state(p, n, &mut rng),
        None => random_map_state(d, n, &mut rng),
    }
}

/// Seeded random initial state for `n` vertices, drawn the same way as the
/// first trial of [`verify_window`]: uniform in the bounding box for maps,
/// a perturbation of norm `1e-3` around an attractor point for flows.
pub fn random_initial_state(
    dynamics: &Dynamics,
    n: usize,
    mode: Mode,
    dt: f64,
    seed: u64,
) -> Result<DMatrix<f64>, StabilityError> {
    let attractor = match mode {
        Mode::Flow => Some(attractor_point(&Arc::new(dynamics.clone()), dt)?),
        Mode::Map => None,
    };
    Ok(trial_state(dynamics, n, attractor.as_deref(), seed, 0))
}

struct Trial {
    error: f64,
    diverged: bool,
}

/// Runs `trials` randomized simulations per coupling value and compares
/// synchronization outcomes with the master-stability verdict.
///
/// Trials use the Laplacian-diffusive coupling (iterated for maps,
/// integrated for flows). Each trial draws from its own seeded stream, so
/// results do not depend on the thread count.
pub fn verify_window(
    h: &ChemicalHypergraph,
    dynamics: &Dynamics,
    lambda_max: f64,
    cfg: &VerifyConfig,
) -> Result<VerifyReport, StabilityError> {
    let l = laplacian(h)?;
    let zero_tol = cfg.zero_tol.unwrap_or_else(|| default_zero_tol(h.n_vertices()));
    let spec = spectrum(&l, zero_tol)?;
    let projector: Option<KernelProjector> = match kernel_projector(&spec) {
        Ok(p) => Some(p),
        Err(_) => return Err(StabilityError::SynchronizationPrecluded),
    };
    let target = if sync_invariance_check(h).invariant && spec.zero_multiplicity == 1 {
        SyncTarget::Constants
    } else {
        SyncTarget::Kernel(projector.as_ref().expect("projector exists"))
    };

    match cfg.mode {
        Mode::Map if !dynamics.kind().allows_map() => {
            return Err(StabilityError::BadParams(format!("{} is not a map", dynamics.name())))
        }
        Mode::Flow if !dynamics.kind().allows_flow() => {
            return Err(StabilityError::BadParams(format!("{} is not a vector field", dynamics.name())))
        }
        _ => {}
    }
    let d = Arc::new(dynamics.clone());
    let n = h.n_vertices();
    let attractor = match cfg.mode {
        Mode::Flow => Some(attractor_point(&d, cfg.dt)?),
        Mode::Map => None,
    };

    let initial: Vec<DMatrix<f64>> = (0..cfg.trials)
        .map(|trial| trial_state(dynamics, n, attractor.as_deref(), cfg.seed, trial as u64))
        .collect();

    let work: Vec<(usize, usize)> = (0..cfg.sigmas.len())
        .flat_map(|si| (0..cfg.trials).map(move |t| (si, t)))
        .collect();
    let results: Vec<Trial> = work
        .par_iter()
        .map(|&(si, trial)| {
            let sigma = cfg.sigmas[si];
            let s0 = SystemState::new(0.0, initial[trial].clone());
            let last = match cfg.mode {
                Mode::Map => {
                    let mut s = s0;
                    let mut ok = true;
                    for _ in 0..cfg.steps {
                        match cml_step(dynamics, &l, &s, sigma) {
                            Ok(next) => s = next,
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    ok.then_some(s)
                }
                Mode::Flow => CouplingSpec::laplacian(sigma, l.clone())
                    .ok()
                    .and_then(|c| CoupledSystem::new(d.clone(), c).ok())
                    .and_then(|sys| integrate(&sys, &s0, cfg.dt, cfg.t_end, cfg.t_end).ok())
                    .and_then(|traj| traj.states.last().cloned()),
            };
            match last {
                Some(s) => Trial {
                    error: sync_error(&s.x, target),
                    diverged: false,
                },
                None => Trial {
                    error: f64::INFINITY,
                    diverged: true,
                },
            }
        })
        .collect();

    let window = stability_report(&spec, lambda_max, 0.0, zero_tol).window;
    let mut outcomes = Vec::with_capacity(cfg.sigmas.len());
    let mut agree = 0usize;
    let mut counted = 0usize;
    for (si, &sigma) in cfg.sigmas.iter().enumerate() {
        let report = stability_report(&spec, lambda_max, sigma, zero_tol);
        let marginal = report.modes.iter().any(|m| m.verdict == Verdict::Marginal);
        let excluded = marginal
            || window.is_some_and(|w| w.boundary_distance(sigma) < cfg.boundary_margin);
        let trials = &results[si * cfg.trials..(si + 1) * cfg.trials];
        let synced = trials.iter().filter(|t| t.error < cfg.threshold).count();
        let diverged = trials.iter().filter(|t| t.diverged).count();
        let mean = trials.iter().map(|t| t.error).sum::<f64>() / cfg.trials.max(1) as f64;
        if !excluded {
            counted += trials.len();
            agree += trials
                .iter()
                .filter(|t| (t.error < cfg.threshold) == report.overall_stable)
                .count();
        }
        outcomes.push(SigmaOutcome {
            sigma,
            theory_stable: report.overall_stable,
            theory_marginal: marginal,
            excluded,
            empirical_sync_fraction: synced as f64 / cfg.trials.max(1) as f64,
            mean_final_sync_error: mean,
            diverged,
        });
    }
    Ok(VerifyReport {
        lambda_max,
        window,
        outcomes,
        agreement_fraction: if counted == 0 {
            1.0
        } else {
            agree as f64 / counted as f64
        },
    })
}
