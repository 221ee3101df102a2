//! Lyapunov growth, master stability verdicts and coupling windows.

mod lyapunov;
mod msf;
mod verify;

use thiserror::Error;

pub use lyapunov::{lyapunov_exponent, LyapunovEstimate, LyapunovParams, Mode};
pub use msf::{
    modal_decomposition, msf_curve, msf_mode_rate, sigma_window, stability_report, ModeVerdict,
    StabilityReport, Verdict, Window, MARGINAL_TOL,
};
pub use verify::{random_initial_state, verify_window, SigmaOutcome, VerifyConfig, VerifyReport};

use crate::dynamics::DynamicsError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("trajectory diverged at t = {t}; try a smaller dt or a different initial point")]
    Diverged { t: f64 },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("spectrum has no nonzero eigenvalue; nothing to stabilize against")]
    NoTransverseModes,
    #[error("no neutral modes; synchronized dynamics precluded")]
    SynchronizationPrecluded,
    #[error("eigenbasis is rank deficient (reconstruction residual {residual:e})")]
    RankDeficient { residual: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
