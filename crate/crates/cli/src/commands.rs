use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hypermsf::dynamics::{
    integrate, iterate_cml, Aggregator, CoupledSystem, CouplingSpec, Dynamics, DynamicsError, ScalarMap,
    SystemState, Trajectory, VertexDynamics,
};
use hypermsf::io::{
    fmt_f64, stability_report_json, window_json, write_eigenvectors_csv, write_msf_csv, write_spectrum_csv,
    write_sweep_csv, write_trajectory_csv,
};
use hypermsf::spectral::{default_zero_tol, spectral_summary};
use hypermsf::stability::{
    lyapunov_exponent, msf_curve, random_initial_state, sigma_window, stability_report, verify_window,
    LyapunovParams, Mode, VerifyConfig,
};
use hypermsf::{laplacian, parse_hypergraph, spectrum, ChemicalHypergraph, Spectrum};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Output {
    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn open(&self) -> Result<Box<dyn Write>> {
        open_path(self.path.as_deref())
    }
}

fn open_path(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &Output, value: &Value) -> Result<()> {
    let mut w = out.open()?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load(path: Option<&PathBuf>) -> Result<ChemicalHypergraph> {
    let path = path.ok_or_else(|| CliError::usage("missing --hypergraph <path>"))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    parse_hypergraph(&text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn zero_tol(g: &GraphArg, n: usize) -> Result<f64> {
    match g.zero_tol {
        Some(t) if !(t >= 0.0) => Err(CliError::usage(format!("--zero-tol must be non-negative, got {t}"))),
        Some(t) => Ok(t),
        None => Ok(default_zero_tol(n)),
    }
}

fn load_spectrum(g: &GraphArg, path: Option<&PathBuf>) -> Result<(ChemicalHypergraph, Spectrum)> {
    let h = load(path)?;
    let tol = zero_tol(g, h.n_vertices())?;
    let s = spectrum(&laplacian(&h)?, tol)?;
    Ok((h, s))
}

/// `x` or `lo:hi:steps` (inclusive, evenly spaced).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("bad number `{s}` in grid `{spec}`")))
    };
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [lo, hi, steps] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let steps: usize = steps
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad step count in grid `{spec}`")))?;
            if !(lo < hi) || steps < 2 {
                return Err(CliError::usage(format!("grid `{spec}` needs lo < hi and steps >= 2")));
            }
            Ok((0..steps)
                .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                .collect())
        }
        _ => Err(CliError::usage(format!("expected `x` or `lo:hi:steps`, got `{spec}`"))),
    }
}

fn parse_single(spec: &str, what: &str) -> Result<f64> {
    spec.trim()
        .parse()
        .map_err(|_| CliError::usage(format!("{what} must be a single number, got `{spec}`")))
}

fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad number `{v}` in `{spec}`")))
        })
        .collect()
}

fn dynamics(spec: &str) -> Result<Dynamics> {
    Dynamics::from_spec(spec).map_err(|e| CliError::usage(e.to_string()))
}

fn resolve_mode(d: &Dynamics, arg: Option<ModeArg>) -> Result<Mode> {
    let kind = d.kind();
    match arg {
        Some(ModeArg::Flow) if kind.allows_flow() => Ok(Mode::Flow),
        Some(ModeArg::Map) if kind.allows_map() => Ok(Mode::Map),
        Some(m) => Err(CliError::usage(format!("{} cannot be used in {m:?} mode", d.name()))),
        None if kind.allows_flow() => Ok(Mode::Flow),
        None => Ok(Mode::Map),
    }
}

fn point(d: &Dynamics, x0: Option<&str>) -> Result<Vec<f64>> {
    match x0 {
        Some(s) => {
            let v = parse_list(s)?;
            if v.len() != d.dim() {
                return Err(CliError::usage(format!("--x0 needs {} values for {}", d.dim(), d.name())));
            }
            Ok(v)
        }
        None => Ok(d.reference_point()),
    }
}

/// `lambda_max` from the flag, or estimated from the dynamics.
fn growth_rate(g: &GrowthArgs) -> Result<f64> {
    if let Some(l) = g.lambda_max {
        return Ok(l);
    }
    let spec = g
        .dynamics
        .as_deref()
        .ok_or_else(|| CliError::usage("need --lambda-max or --dynamics"))?;
    let d = dynamics(spec)?;
    let mode = resolve_mode(&d, g.mode)?;
    let est = lyapunov_exponent(&d, &point(&d, g.x0.as_deref())?, &LyapunovParams::for_mode(mode))?;
    eprintln!(
        "estimated lambda_max = {} for {} ({})",
        est.lambda_max,
        d.name(),
        if est.converged() { "converged" } else { "not converged" }
    );
    Ok(est.lambda_max)
}

fn note_precluded(s: &Spectrum) {
    if s.zero_multiplicity == 0 {
        eprintln!("no neutral modes; synchronized dynamics precluded");
    }
}

pub fn spectrum_cmd(a: &SpectrumArgs, out: &Output) -> Result<()> {
    let path = a.path.as_ref().or(a.graph.hypergraph.as_ref());
    let (h, s) = load_spectrum(&a.graph, path)?;
    let summary = spectral_summary(&s);
    let lambda_min = summary.lambda_min_nonzero.map_or("none".to_string(), |l| l.to_string());
    eprintln!(
        "k0 = {}, lambda_min = {lambda_min}, lambda_N = {}",
        summary.zero_multiplicity, summary.lambda_max
    );
    if h.is_graph() {
        eprintln!(
            "graph input: bipartite = {}, lambda_N = 2: {}",
            h.is_bipartite(),
            (summary.lambda_max - 2.0).abs() <= 1e-9
        );
    }
    note_precluded(&s);

    match out.format(Format::Csv) {
        Format::Json => {
            let mut v = json!({
                "eigenvalues": s.eigenvalues,
                "zero_multiplicity": summary.zero_multiplicity,
                "lambda_min_nonzero": summary.lambda_min_nonzero,
                "lambda_max": summary.lambda_max,
                "synchronization_precluded": s.zero_multiplicity == 0,
            });
            if a.vectors {
                let cols: Vec<Vec<f64>> = s.eigenvectors.column_iter().map(|c| c.iter().copied().collect()).collect();
                v["eigenvectors"] = json!(cols);
            }
            write_json(out, &v)
        }
        Format::Csv => match (&out.path, a.vectors) {
            (None, true) => {
                let mut w = out.open()?;
                write_eigenvectors_csv(&mut w, &s)?;
                Ok(w.flush()?)
            }
            (path, vectors) => {
                let mut w = out.open()?;
                write_spectrum_csv(&mut w, &s)?;
                w.flush()?;
                if let (Some(p), true) = (path, vectors) {
                    let vp = vectors_path(p);
                    let mut w = open_path(Some(&vp))?;
                    write_eigenvectors_csv(&mut w, &s)?;
                    w.flush()?;
                    eprintln!("eigenvectors written to {}", vp.display());
                }
                Ok(())
            }
        },
    }
}

/// `dir/name.csv` → `dir/name.vectors.csv`.
pub fn vectors_path(p: &Path) -> PathBuf {
    let stem = p.file_stem().map_or_else(|| "spectrum".into(), |s| s.to_string_lossy().into_owned());
    let ext = p.extension().map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned());
    p.with_file_name(format!("{stem}.vectors.{ext}"))
}

pub fn stability_cmd(a: &StabilityArgs, out: &Output) -> Result<()> {
    let sigma = parse_single(&a.sigma, "--sigma")?;
    if !(0.0..=1.0).contains(&sigma) {
        return Err(CliError::usage(format!("--sigma must lie in [0, 1], got {sigma}")));
    }
    let (_, s) = load_spectrum(&a.graph, a.graph.hypergraph.as_ref())?;
    let lambda_max = growth_rate(&a.growth)?;
    let report = stability_report(&s, lambda_max, sigma, s.zero_tol);
    note_precluded(&s);
    match out.format(Format::Json) {
        Format::Json => write_json(out, &stability_report_json(&report)),
        Format::Csv => {
            let mut w = out.open()?;
            writeln!(w, "k,eigenvalue,rate,verdict")?;
            let json = stability_report_json(&report);
            for m in &report.modes {
                let verdict = json["modes"][m.k - 1]["verdict"].as_str().unwrap_or_default().to_string();
                writeln!(w, "{},{},{},{verdict}", m.k, fmt_f64(m.eigenvalue), fmt_f64(m.rate))?;
            }
            Ok(w.flush()?)
        }
    }
}

pub fn window_cmd(a: &WindowArgs, out: &Output) -> Result<()> {
    let (_, s) = load_spectrum(&a.graph, a.graph.hypergraph.as_ref())?;
    let lambda_max = growth_rate(&a.growth)?;
    note_precluded(&s);
    let w = sigma_window(&s, lambda_max)?;
    if w.is_none() {
        eprintln!("no coupling strength in [0, 1] stabilizes every transverse mode");
    }
    match out.format(Format::Json) {
        Format::Json => write_json(out, &window_json(w.as_ref())),
        Format::Csv => {
            let mut o = out.open()?;
            writeln!(o, "lo,hi")?;
            if let Some(w) = w {
                writeln!(o, "{},{}", fmt_f64(w.lo), fmt_f64(w.hi))?;
            }
            Ok(o.flush()?)
        }
    }
}

fn initial_state(
    d: &Dynamics,
    n: usize,
    x0: Option<&str>,
    mode: Mode,
    dt: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let m = d.dim();
    match x0 {
        Some(spec) => {
            let v = parse_list(spec)?;
            if v.len() == m {
                Ok(SystemState::synchronized(0.0, n, &v).x)
            } else if v.len() == n * m {
                Ok(DMatrix::from_row_slice(n, m, &v))
            } else {
                Err(CliError::usage(format!(
                    "--x0 needs {m} (synchronized) or {} values, got {}",
                    n * m,
                    v.len()
                )))
            }
        }
        None => Ok(random_initial_state(d, n, mode, dt, seed)?),
    }
}

fn write_trajectory(out: &Output, traj: &Trajectory) -> Result<()> {
    match out.format(Format::Csv) {
        Format::Csv => {
            let mut w = out.open()?;
            write_trajectory_csv(&mut w, traj)?;
            Ok(w.flush()?)
        }
        Format::Json => {
            let states: Vec<Value> = traj
                .states
                .iter()
                .map(|s| {
                    let rows: Vec<Vec<f64>> = s.x.row_iter().map(|r| r.iter().copied().collect()).collect();
                    json!({ "t": s.t, "x": rows })
                })
                .collect();
            write_json(
                out,
                &json!({
                    "integrator": traj.integrator,
                    "dt": traj.dt,
                    "dt_out": traj.dt_out,
                    "coupling": traj.coupling,
                    "states": states,
                }),
            )
        }
    }
}

/// Writes whatever was computed before a divergence, then reports it.
fn finish_trajectory(out: &Output, result: std::result::Result<Trajectory, DynamicsError>) -> Result<()> {
    match result {
        Ok(traj) => write_trajectory(out, &traj),
        Err(DynamicsError::Diverged { vertex, t, partial }) => {
            write_trajectory(out, &partial)?;
            Err(CliError::domain(format!(
                "trajectory diverged at vertex {vertex}, t = {t}; {} samples written",
                partial.states.len()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn simulate_cmd(a: &SimulateArgs, out: &Output) -> Result<()> {
    let h = load(a.graph.hypergraph.as_ref())?;
    let d = dynamics(&a.dynamics)?;
    if !d.kind().allows_flow() {
        return Err(CliError::usage(format!("{} is a map; use `cml`", d.name())));
    }
    let coupling = match a.coupling {
        CouplingArg::Laplacian => {
            let sigma = parse_single(&a.sigma, "--sigma")?;
            CouplingSpec::laplacian(sigma, laplacian(&h)?).map_err(|e| CliError::usage(e.to_string()))?
        }
        CouplingArg::Hyperedge => {
            let g = ScalarMap::from_spec(&a.g).map_err(|e| CliError::usage(e.to_string()))?;
            let agg = match a.aggregator {
                AggregatorArg::Mean => Aggregator::ArithmeticMean,
                AggregatorArg::Geometric => Aggregator::GeometricMean,
            };
            CouplingSpec::hyperedge(h.clone(), g, agg)
        }
    };
    let x0 = initial_state(&d, h.n_vertices(), a.x0.as_deref(), Mode::Flow, a.dt, a.seed)?;
    let system = CoupledSystem::new(Arc::new(d), coupling)?;
    let result = integrate(&system, &SystemState::new(0.0, x0), a.dt, a.t_end, a.dt_out.unwrap_or(a.dt));
    finish_trajectory(out, result)
}

pub fn cml_cmd(a: &CmlArgs, out: &Output) -> Result<()> {
    let h = load(a.graph.hypergraph.as_ref())?;
    let d = dynamics(&a.dynamics)?;
    if !d.kind().allows_map() {
        return Err(CliError::usage(format!("{} is a vector field; use `simulate`", d.name())));
    }
    let sigma = parse_single(&a.sigma, "--sigma")?;
    let l = laplacian(&h)?;
    let x0 = initial_state(&d, h.n_vertices(), a.x0.as_deref(), Mode::Map, 1.0, a.seed)?;
    let result = iterate_cml(&d, &l, &SystemState::new(0.0, x0), sigma, a.steps, a.record_every);
    finish_trajectory(out, result)
}

pub fn msf_curve_cmd(a: &MsfCurveArgs, out: &Output) -> Result<()> {
    let f = dynamics(&a.dynamics)?;
    let h = match &a.h {
        Some(spec) => dynamics(spec)?,
        None => f.clone(),
    };
    let mode = resolve_mode(&f, a.mode)?;
    let base = LyapunovParams::for_mode(mode);
    let params = LyapunovParams {
        t_total: a.t_total.unwrap_or(base.t_total),
        transient: a.transient.unwrap_or(base.transient),
        renorm_interval: a.renorm.unwrap_or(base.renorm_interval),
        dt: a.dt.unwrap_or(base.dt),
        ..base
    };
    let alphas = parse_grid(&a.alpha)?;
    let curve = msf_curve(&f, &h, &alphas, &point(&f, a.x0.as_deref())?, &params, a.a)?;
    let rates: Vec<f64> = curve.iter().map(|&(_, r)| r).collect();
    match out.format(Format::Csv) {
        Format::Csv => {
            let mut w = out.open()?;
            write_msf_csv(&mut w, &alphas, &rates)?;
            Ok(w.flush()?)
        }
        Format::Json => {
            let rows: Vec<Value> = curve.iter().map(|&(alpha, rate)| json!({ "alpha": alpha, "rate": rate })).collect();
            write_json(out, &Value::Array(rows))
        }
    }
}

fn run_verify(a: &SweepArgs) -> Result<hypermsf::stability::VerifyReport> {
    let h = load(a.graph.hypergraph.as_ref())?;
    let spec = a
        .growth
        .dynamics
        .as_deref()
        .ok_or_else(|| CliError::usage("missing --dynamics"))?;
    let d = dynamics(spec)?;
    let mode = resolve_mode(&d, a.growth.mode)?;
    let sigmas = parse_grid(&a.sigma)?;
    if let Some(bad) = sigmas.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(CliError::usage(format!("coupling grid leaves [0, 1] at {bad}")));
    }
    if a.trials == 0 {
        return Err(CliError::usage("--trials must be positive"));
    }
    // check the hypergraph before spending time on the Lyapunov estimate
    let tol = zero_tol(&a.graph, h.n_vertices())?;
    let s = spectrum(&laplacian(&h)?, tol)?;
    if s.zero_multiplicity == 0 {
        return Err(hypermsf::stability::StabilityError::SynchronizationPrecluded.into());
    }
    let lambda_max = growth_rate(&a.growth)?;
    let cfg = VerifyConfig {
        trials: a.trials,
        seed: a.seed,
        steps: a.steps,
        t_end: a.t_end,
        dt: a.dt,
        threshold: a.threshold,
        zero_tol: Some(tol),
        ..VerifyConfig::new(sigmas, mode)
    };
    let report = verify_window(&h, &d, lambda_max, &cfg)?;
    eprintln!("agreement fraction {}", report.agreement_fraction);
    Ok(report)
}

pub fn sweep_cmd(a: &SweepArgs, out: &Output) -> Result<()> {
    let report = run_verify(a)?;
    match out.format(Format::Csv) {
        Format::Csv => {
            let mut w = out.open()?;
            write_sweep_csv(&mut w, &report.outcomes)?;
            Ok(w.flush()?)
        }
        Format::Json => write_json(out, &verify_json(&report)),
    }
}

pub fn verify_cmd(a: &SweepArgs, out: &Output) -> Result<()> {
    let report = run_verify(a)?;
    match out.format(Format::Json) {
        Format::Json => write_json(out, &verify_json(&report)),
        Format::Csv => {
            let mut w = out.open()?;
            write_sweep_csv(&mut w, &report.outcomes)?;
            Ok(w.flush()?)
        }
    }
}

fn verify_json(r: &hypermsf::stability::VerifyReport) -> Value {
    let outcomes: Vec<Value> = r
        .outcomes
        .iter()
        .map(|o| {
            let err = if o.mean_final_sync_error.is_finite() {
                json!(o.mean_final_sync_error)
            } else {
                json!(o.mean_final_sync_error.to_string())
            };
            json!({
                "sigma": o.sigma,
                "theory_stable": o.theory_stable,
                "theory_marginal": o.theory_marginal,
                "excluded": o.excluded,
                "empirical_sync_fraction": o.empirical_sync_fraction,
                "mean_final_sync_error": err,
                "diverged": o.diverged,
            })
        })
        .collect();
    json!({
        "lambda_max": r.lambda_max,
        "window": window_json(r.window.as_ref()),
        "agreement_fraction": r.agreement_fraction,
        "outcomes": outcomes,
    })
}
