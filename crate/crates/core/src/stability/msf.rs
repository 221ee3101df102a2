//! Master stability conditions.
//!
//! A transverse mode with Laplacian eigenvalue `λ` is stable at coupling `σ`
//! when `|1 - σλ|·Λ < 1`, with `Λ = exp(lambda_max)` the growth factor of the
//! uncoupled dynamics. Internally this is evaluated as the additive rate
//! `log|1 - σλ| + lambda_max < 0`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::lyapunov::{variational_rate, LyapunovParams, Reference};
use super::StabilityError;
use crate::dynamics::VertexDynamics;
use crate::spectral::{spectral_summary, Spectrum};

/// Rates within this distance of zero are marginal.
pub const MARGINAL_TOL: f64 = 1e-12;

/// `log|1 - σ·λ| + lambda_max`; `-∞` when `σ·λ = 1`.
pub fn msf_mode_rate(lambda_max: f64, sigma: f64, lam: f64) -> f64 {
    let q = (1.0 - sigma * lam).abs();
    if q == 0.0 {
        f64::NEG_INFINITY
    } else {
        q.ln() + lambda_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Neutral,
    Marginal,
    Unstable,
}

impl Verdict {
    pub fn from_rate(rate: f64) -> Self {
        if rate.abs() <= MARGINAL_TOL {
            Self::Marginal
        } else if rate < 0.0 {
            Self::Stable
        } else {
            Self::Unstable
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeVerdict {
    /// 1-based mode index.
    pub k: usize,
    pub eigenvalue: f64,
    pub rate: f64,
    pub verdict: Verdict,
}

/// Open coupling interval in which every transverse mode is stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    /// Bounds before clipping to `[0, 1]`.
    #[serde(skip)]
    pub lo_raw: f64,
    #[serde(skip)]
    pub hi_raw: f64,
}

impl Window {
    /// Strict membership; clipped ends are included since they are not
    /// stability boundaries.
    pub fn contains(&self, sigma: f64) -> bool {
        let above = sigma > self.lo || (self.lo_raw < self.lo && sigma == self.lo);
        let below = sigma < self.hi || (self.hi_raw > self.hi && sigma == self.hi);
        above && below
    }

    /// Distance to the nearest genuine (unclipped) stability boundary.
    pub fn boundary_distance(&self, sigma: f64) -> f64 {
        (sigma - self.lo_raw).abs().min((sigma - self.hi_raw).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub sigma: f64,
    pub lambda_max: f64,
    pub modes: Vec<ModeVerdict>,
    /// 1-based indices of neutral modes.
    pub neutral: Vec<usize>,
    /// True iff every non-neutral mode is stable.
    pub overall_stable: bool,
    /// No neutral mode at all: there is no synchronization manifold.
    pub synchronization_precluded: bool,
    pub window: Option<Window>,
}

pub fn stability_report(s: &Spectrum, lambda_max: f64, sigma: f64, zero_tol: f64) -> StabilityReport {
    let mut modes = Vec::with_capacity(s.n());
    let mut neutral = Vec::new();
    for (idx, &lam) in s.eigenvalues.iter().enumerate() {
        let k = idx + 1;
        let rate = msf_mode_rate(lambda_max, sigma, lam);
        let verdict = if lam <= zero_tol {
            neutral.push(k);
            Verdict::Neutral
        } else {
            Verdict::from_rate(rate)
        };
        modes.push(ModeVerdict {
            k,
            eigenvalue: lam,
            rate,
            verdict,
        });
    }
    let overall_stable = modes
        .iter()
        .all(|m| matches!(m.verdict, Verdict::Stable | Verdict::Neutral));
    let window = window_from(s.eigenvalues.iter().copied().find(|&l| l > zero_tol), s, lambda_max);
    StabilityReport {
        sigma,
        lambda_max,
        synchronization_precluded: neutral.is_empty(),
        modes,
        neutral,
        overall_stable,
        window,
    }
}

fn window_from(lambda_min: Option<f64>, s: &Spectrum, lambda_max: f64) -> Option<Window> {
    let lambda_min = lambda_min?;
    let lambda_n = *s.eigenvalues.last()?;
    let inv = (-lambda_max).exp();
    let lo_raw = (1.0 - inv) / lambda_min;
    let hi_raw = (1.0 + inv) / lambda_n;
    let lo = lo_raw.max(0.0);
    let hi = hi_raw.min(1.0);
    (lo < hi).then_some(Window {
        lo,
        hi,
        lo_raw,
        hi_raw,
    })
}

/// Admissible coupling interval `((1 - 1/Λ)/λ_min, (1 + 1/Λ)/λ_N) ∩ [0, 1]`,
/// `None` when empty.
pub fn sigma_window(s: &Spectrum, lambda_max: f64) -> Result<Option<Window>, StabilityError> {
    let summary = spectral_summary(s);
    let lambda_min = summary
        .lambda_min_nonzero
        .ok_or(StabilityError::NoTransverseModes)?;
    if !lambda_max.is_finite() && lambda_max != f64::NEG_INFINITY {
        return Err(StabilityError::BadParams(format!("lambda_max = {lambda_max}")));
    }
    Ok(window_from(Some(lambda_min), s, lambda_max))
}

/// Coefficients of `eps` in the eigenvector basis of `L`: `eps = V·C`.
pub fn modal_decomposition(s: &Spectrum, eps: &DMatrix<f64>) -> Result<DMatrix<f64>, StabilityError> {
    let n = s.n();
    if eps.nrows() != n {
        return Err(StabilityError::BadParams(format!(
            "perturbation has {} rows, spectrum has {n} modes",
            eps.nrows()
        )));
    }
    // V is D-orthonormal, so C = Wᵀ·D^(1/2)·eps with W the symmetric-form basis
    let scaled = DMatrix::from_fn(n, eps.ncols(), |i, a| eps[(i, a)] * s.degrees[i].sqrt());
    let coeffs = s.symmetric_eigenvectors.transpose() * scaled;
    let err = (&s.eigenvectors * &coeffs - eps).amax();
    let scale = eps.amax().max(1.0);
    if err > 1e-8 * scale {
        return Err(StabilityError::RankDeficient { residual: err });
    }
    Ok(coeffs)
}

/// Transverse growth rate over a grid of generic coupling eigenvalues `α`:
/// the maximal rate of `ε' = (Df(x*) + α·Dh(x*))·ε` along the orbit of
/// `x*' = f(x*) + a·h(x*)`.
pub fn msf_curve(
    f: &dyn VertexDynamics,
    h: &dyn VertexDynamics,
    alphas: &[f64],
    x0: &[f64],
    params: &LyapunovParams,
    a: f64,
) -> Result<Vec<(f64, f64)>, StabilityError> {
    if f.dim() != h.dim() {
        return Err(StabilityError::BadParams(format!(
            "f has dimension {} but h has {}",
            f.dim(),
            h.dim()
        )));
    }
    if alphas.is_empty() {
        return Err(StabilityError::BadParams("empty alpha grid".into()));
    }
    let reference = Reference { f, h: Some((h, a)) };
    alphas
        .par_iter()
        .map(|&alpha| {
            let var = |x: &[f64]| f.jacobian(x) + h.jacobian(x) * alpha;
            variational_rate(&reference, x0, params, &var).map(|e| (alpha, e.lambda_max))
        })
        .collect()
}
