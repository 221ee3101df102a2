use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Spectra, master stability verdicts and coupled simulations on chemical hypergraphs.
#[derive(Parser, Debug)]
#[command(name = "hypermsf", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output file (standard output when omitted)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each command has its own default
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for parallel grids (default: available cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Flow,
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CouplingArg {
    Laplacian,
    Hyperedge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregatorArg {
    Mean,
    Geometric,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues (and optionally eigenvectors) of the hypergraph Laplacian
    Spectrum(SpectrumArgs),
    /// Per-mode stability verdicts at one coupling strength
    Stability(StabilityArgs),
    /// Admissible coupling interval
    Window(WindowArgs),
    /// Integrate a coupled flow with fixed-step RK4
    Simulate(SimulateArgs),
    /// Iterate a coupled map lattice
    Cml(CmlArgs),
    /// Transverse growth rate over a grid of coupling eigenvalues
    MsfCurve(MsfCurveArgs),
    /// Predicted and simulated synchronization over a coupling grid (CSV table)
    Sweep(SweepArgs),
    /// Predicted and simulated synchronization over a coupling grid (full report)
    Verify(SweepArgs),
}

#[derive(Args, Debug)]
pub struct GraphArg {
    /// Hypergraph JSON file
    #[arg(long)]
    pub hypergraph: Option<PathBuf>,
    /// Threshold below which eigenvalues count as zero (default 1e-9·N)
    #[arg(long)]
    pub zero_tol: Option<f64>,
}

/// How the growth rate of the uncoupled dynamics is obtained.
#[derive(Args, Debug)]
pub struct GrowthArgs {
    /// Use this value instead of estimating the maximal Lyapunov exponent
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_max: Option<f64>,
    /// Vertex dynamics, e.g. `logistic:r=4` or `lorenz:{"rho":28}`
    #[arg(long)]
    pub dynamics: Option<String>,
    /// Treat the dynamics as a flow or as a map (default from the dynamics)
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Initial point for the Lyapunov estimate, comma separated
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<String>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Hypergraph JSON file (alternative to --hypergraph)
    pub path: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArg,
    /// Also write the eigenvector matrix
    #[arg(long)]
    pub vectors: bool,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[command(flatten)]
    pub growth: GrowthArgs,
    /// Coupling strength in [0, 1]
    #[arg(long)]
    pub sigma: String,
}

#[derive(Args, Debug)]
pub struct WindowArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[command(flatten)]
    pub growth: GrowthArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    /// Vertex dynamics
    #[arg(long)]
    pub dynamics: String,
    /// Coupling strength (Laplacian coupling)
    #[arg(long, default_value = "0")]
    pub sigma: String,
    #[arg(long, value_enum, default_value = "laplacian")]
    pub coupling: CouplingArg,
    /// Interaction function for hyperedge coupling: identity, tanh, sin, scale:<c>
    #[arg(long, default_value = "identity")]
    pub g: String,
    #[arg(long, value_enum, default_value = "mean")]
    pub aggregator: AggregatorArg,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    /// Sampling interval of the output (default: dt)
    #[arg(long)]
    pub dt_out: Option<f64>,
    /// Initial state: m values (synchronized) or N·m values, comma separated
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<String>,
    /// Seed for the random initial state used when --x0 is omitted
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct CmlArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    /// Vertex map
    #[arg(long)]
    pub dynamics: String,
    #[arg(long)]
    pub sigma: String,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Record every k-th iterate
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct MsfCurveArgs {
    /// Vertex dynamics f
    #[arg(long)]
    pub dynamics: String,
    /// Coupling function h (default: same as f)
    #[arg(long)]
    pub h: Option<String>,
    /// Grid of coupling eigenvalues `lo:hi:steps` or a single value
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    /// Coefficient of h in the reference orbit
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<String>,
    /// Total horizon (time units for flows, steps for maps)
    #[arg(long)]
    pub t_total: Option<f64>,
    #[arg(long)]
    pub transient: Option<f64>,
    #[arg(long)]
    pub renorm: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[command(flatten)]
    pub growth: GrowthArgs,
    /// Coupling grid `lo:hi:steps` or a single value
    #[arg(long)]
    pub sigma: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Map iterations per trial
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Flow horizon per trial
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    /// Final sync error below which a trial counts as synchronized
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
}
