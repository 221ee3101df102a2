mod common;

use std::f64::consts::LN_2;
use std::sync::Arc;
use std::time::Instant;

use hypermsf::dynamics::{integrate, CoupledSystem, CouplingSpec, Dynamics, SystemState, VertexDynamics};
use hypermsf::spectral::default_zero_tol;
use hypermsf::stability::{
    lyapunov_exponent, modal_decomposition, msf_curve, msf_mode_rate, sigma_window, stability_report,
    LyapunovParams, Mode, Verdict,
};
use hypermsf::{laplacian, spectrum, ChemicalHypergraph, Spectrum};
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn convention_equivalence(lambda in -3.0f64..3.0, sigma in 0.0f64..1.0, lam in 0.0f64..10.0) {
        let additive = msf_mode_rate(lambda, sigma, lam);
        let multiplicative = (1.0 - sigma * lam).abs() * lambda.exp();
        if (multiplicative - 1.0).abs() > 1e-12 {
            prop_assert_eq!(additive < 0.0, multiplicative < 1.0);
        }
    }

    #[test]
    fn window_consistency(
        positive in proptest::collection::vec(0.05f64..4.0, 1..6),
        zeros in 1usize..3,
        lambda_max in -1.0f64..2.0,
        sigmas in proptest::collection::vec(0.0f64..=1.0, 16),
    ) {
        let mut ev = positive;
        ev.extend(std::iter::repeat_n(0.0, zeros));
        let s = Spectrum::from_eigenvalues(ev, 1e-9);
        let window = sigma_window(&s, lambda_max).unwrap();
        for sigma in sigmas {
            let report = stability_report(&s, lambda_max, sigma, 1e-9);
            match window {
                Some(w) => {
                    let near = w.boundary_distance(sigma) < 1e-9;
                    if w.contains(sigma) && !near {
                        prop_assert!(report.overall_stable, "sigma {sigma} in {w:?}");
                    } else if !near && (sigma < w.lo || sigma > w.hi) {
                        prop_assert!(!report.overall_stable, "sigma {sigma} outside {w:?}");
                    }
                }
                None => prop_assert!(!report.overall_stable || report.modes.iter().all(|m| m.verdict == Verdict::Neutral)),
            }
        }
    }

    /// Graph inputs: verdicts from the hypergraph pipeline equal verdicts
    /// from the random-walk graph Laplacian `I - D⁻¹A`.
    #[test]
    fn graph_specialization(
        (n, edges) in common::connected_graph(2, 10),
        sigma in 0.0f64..1.0,
        lambda_max in 0.0f64..1.5,
    ) {
        let h = ChemicalHypergraph::from_graph(n, &edges).unwrap();
        let s = spectrum(&laplacian(&h).unwrap(), default_zero_tol(n)).unwrap();
        let mut adj = DMatrix::<f64>::zeros(n, n);
        for &(a, b) in &edges {
            adj[(a, b)] = 1.0;
            adj[(b, a)] = 1.0;
        }
        let deg: Vec<f64> = (0..n).map(|i| adj.row(i).sum()).collect();
        let sym = DMatrix::from_fn(n, n, |i, j| {
            f64::from(u8::from(i == j)) - adj[(i, j)] / (deg[i] * deg[j]).sqrt()
        });
        let graph = Spectrum::from_eigenvalues(sym.symmetric_eigenvalues().iter().map(|&l| l.max(0.0)).collect(), default_zero_tol(n));
        let a = stability_report(&s, lambda_max, sigma, default_zero_tol(n));
        let b = stability_report(&graph, lambda_max, sigma, default_zero_tol(n));
        let va: Vec<Verdict> = a.modes.iter().map(|m| m.verdict).collect();
        let vb: Vec<Verdict> = b.modes.iter().map(|m| m.verdict).collect();
        // skip numerically marginal configurations
        let close = a.modes.iter().any(|m| m.rate.abs() < 1e-8);
        if !close {
            prop_assert_eq!(va, vb);
            prop_assert_eq!(a.overall_stable, b.overall_stable);
        }
    }
}

/// Per-mode decay of diffusively coupled linear flows, read off the modal
/// coefficients of a simulated trajectory.
#[test]
fn modal_closed_form() {
    let h = ChemicalHypergraph::new(
        4,
        vec![
            hypermsf::Hyperedge::new(vec![0], vec![1, 2]),
            hypermsf::Hyperedge::new(vec![1], vec![3]),
            hypermsf::Hyperedge::new(vec![3], vec![0, 2]),
        ],
    )
    .unwrap();
    let l = laplacian(&h).unwrap();
    let s = spectrum(&l, default_zero_tol(4)).unwrap();
    let (a, sigma) = (0.7, 0.3);
    let lin: Arc<Dynamics> = Arc::new(Dynamics::linear(a));
    let sys = CoupledSystem::new(lin, CouplingSpec::laplacian(sigma, l).unwrap()).unwrap();
    let x0 = DMatrix::from_column_slice(4, 1, &[1.0, -0.4, 0.3, 0.8]);
    let traj = integrate(&sys, &SystemState::new(0.0, x0), 1e-3, 2.0, 2.0).unwrap();
    let c0 = modal_decomposition(&s, &traj.states[0].x).unwrap();
    let c1 = modal_decomposition(&s, &traj.states[1].x).unwrap();
    for k in 0..4 {
        if c0[(k, 0)].abs() < 1e-6 {
            continue;
        }
        let rate = (c1[(k, 0)] / c0[(k, 0)]).abs().ln() / 2.0;
        let want = (1.0 - sigma * s.eigenvalues[k]) * a;
        assert!((rate - want).abs() <= 1e-4, "mode {k}: {rate} vs {want}");
    }
}

#[test]
fn logistic_lyapunov() {
    let start = Instant::now();
    let est = lyapunov_exponent(&Dynamics::logistic(4.0), &[0.2], &LyapunovParams::map()).unwrap();
    assert!((est.lambda_max - LN_2).abs() <= 0.01, "{}", est.lambda_max);
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn lorenz_lyapunov() {
    let est = lyapunov_exponent(&Dynamics::lorenz_classic(), &[1.0, 1.0, 1.0], &LyapunovParams::flow()).unwrap();
    assert!((est.lambda_max - 0.905).abs() <= 0.02, "{}", est.lambda_max);
}

#[test]
fn renorm_interval_invariance() {
    let cases: [(Dynamics, Vec<f64>, LyapunovParams, f64); 3] = [
        (Dynamics::logistic(4.0), vec![0.2], LyapunovParams { t_total: 2e5, ..LyapunovParams::map() }, 2.0),
        (Dynamics::lorenz_classic(), vec![1.0, 1.0, 1.0], LyapunovParams { t_total: 500.0, ..LyapunovParams::flow() }, 1.0),
        (Dynamics::linear(0.3), vec![1.0], LyapunovParams { t_total: 200.0, ..LyapunovParams::flow() }, 1.0),
    ];
    for (d, x0, params, base) in cases {
        let coarse = lyapunov_exponent(&d, &x0, &LyapunovParams { renorm_interval: base, ..params }).unwrap();
        let fine = lyapunov_exponent(&d, &x0, &LyapunovParams { renorm_interval: base / 2.0, ..params }).unwrap();
        let diff = (coarse.lambda_max - fine.lambda_max).abs();
        assert!(diff <= 2.0 * params.tolerance, "{}: {diff}", d.name());
    }
}

#[test]
fn linear_lyapunov_matches_slope() {
    for a in [-0.8, 0.0, 1.3] {
        let p = LyapunovParams { t_total: 100.0, transient: 10.0, ..LyapunovParams::flow() };
        let est = lyapunov_exponent(&Dynamics::linear(a), &[2.0], &p).unwrap();
        assert!((est.lambda_max - a).abs() <= 1e-6);
    }
}

#[test]
fn map_msf_matches_mode_rate() {
    // f = h = a·x iterated: rate(α) = log|a·(1 + α)|, which is the mode rate at α = -σλ
    let a = 1.8;
    let lin = Dynamics::linear(a);
    let params = LyapunovParams { t_total: 200.0, transient: 10.0, ..LyapunovParams::for_mode(Mode::Map) };
    let (sigma, lams) = (0.35, [0.5, 1.0, 1.5, 2.0]);
    let alphas: Vec<f64> = lams.iter().map(|l| -sigma * l).collect();
    let curve = msf_curve(&lin, &lin, &alphas, &[1.0], &params, 0.0).unwrap();
    for ((alpha, rate), lam) in curve.into_iter().zip(lams) {
        let want = msf_mode_rate(a.ln(), sigma, lam);
        assert!((rate - want).abs() <= 1e-12, "alpha {alpha}: {rate} vs {want}");
    }
}

#[test]
fn splitter_window() {
    let h = ChemicalHypergraph::new(3, vec![hypermsf::Hyperedge::new(vec![0], vec![1, 2])]).unwrap();
    let s = spectrum(&laplacian(&h).unwrap(), default_zero_tol(3)).unwrap();
    let w = sigma_window(&s, LN_2).unwrap().unwrap();
    // single transverse mode at 3: ((1 - 1/2)/3, (1 + 1/2)/3)
    assert!((w.lo - 1.0 / 6.0).abs() < 1e-12 && (w.hi - 0.5).abs() < 1e-12);
}
