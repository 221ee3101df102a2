use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use super::DynamicsError;

/// Whether a vertex map is a vector field (integrated in time) or a map
/// (iterated). Linear dynamics make sense as either.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsKind {
    Flow,
    Map,
    Either,
}

impl DynamicsKind {
    pub fn allows_flow(self) -> bool {
        matches!(self, Self::Flow | Self::Either)
    }

    pub fn allows_map(self) -> bool {
        matches!(self, Self::Map | Self::Either)
    }
}

/// Per-vertex dynamics `f: Rᵐ → Rᵐ` with its Jacobian.
pub trait VertexDynamics: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    fn kind(&self) -> DynamicsKind;
    fn eval(&self, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
    /// Box sampled by the Jacobian consistency check and by random initial conditions.
    fn bounding_box(&self) -> Vec<(f64, f64)>;
    /// Starting point for reference orbits.
    fn reference_point(&self) -> Vec<f64>;

    /// When true the Jacobian does not depend on the state, so variational
    /// growth can be measured without advancing (and overflowing) the orbit.
    fn state_independent_jacobian(&self) -> bool {
        false
    }

    fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval(x, &mut out);
        out
    }
}

/// The built-in dynamics library.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// `f(x) = a·x` componentwise.
    Linear { a: f64, dim: usize },
    /// `f(x) = r·x·(1 - x)`, a map.
    Logistic { r: f64 },
    Lorenz { sigma: f64, rho: f64, beta: f64 },
    Rossler { a: f64, b: f64, c: f64 },
}

impl Dynamics {
    pub fn linear(a: f64) -> Self {
        Self::Linear { a, dim: 1 }
    }

    pub fn logistic(r: f64) -> Self {
        Self::Logistic { r }
    }

    pub fn lorenz_classic() -> Self {
        Self::Lorenz {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }

    pub fn rossler_classic() -> Self {
        Self::Rossler {
            a: 0.2,
            b: 0.2,
            c: 5.7,
        }
    }

    /// Parses `name`, `name:key=val,...` or `name:{json object}`.
    pub fn from_spec(spec: &str) -> Result<Self, DynamicsError> {
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (spec.trim(), ""),
        };
        let params = parse_params(rest)?;
        let mut params = Params { map: params, spec };
        let dynamics = match name.to_ascii_lowercase().as_str() {
            "linear" => {
                let dim = params.take("dim", 1.0)?;
                if dim < 1.0 || dim.fract() != 0.0 {
                    return Err(DynamicsError::BadSpec(format!("dim must be a positive integer in `{spec}`")));
                }
                Self::Linear {
                    a: params.take("a", 1.0)?,
                    dim: dim as usize,
                }
            }
            "logistic" => Self::Logistic {
                r: params.take("r", 4.0)?,
            },
            "lorenz" => Self::Lorenz {
                sigma: params.take("sigma", 10.0)?,
                rho: params.take("rho", 28.0)?,
                beta: params.take("beta", 8.0 / 3.0)?,
            },
            "rossler" | "rössler" => Self::Rossler {
                a: params.take("a", 0.2)?,
                b: params.take("b", 0.2)?,
                c: params.take("c", 5.7)?,
            },
            other => return Err(DynamicsError::BadSpec(format!("unknown dynamics `{other}`"))),
        };
        params.finish()?;
        Ok(dynamics)
    }
}

struct Params<'a> {
    map: BTreeMap<String, f64>,
    spec: &'a str,
}

impl Params<'_> {
    fn take(&mut self, key: &str, default: f64) -> Result<f64, DynamicsError> {
        Ok(self.map.remove(key).unwrap_or(default))
    }

    fn finish(self) -> Result<(), DynamicsError> {
        match self.map.keys().next() {
            Some(k) => Err(DynamicsError::BadSpec(format!(
                "unknown parameter `{k}` in `{}`",
                self.spec
            ))),
            None => Ok(()),
        }
    }
}

fn parse_params(rest: &str) -> Result<BTreeMap<String, f64>, DynamicsError> {
    let mut out = BTreeMap::new();
    if rest.is_empty() {
        return Ok(out);
    }
    if rest.starts_with('{') {
        let obj: BTreeMap<String, f64> = serde_json::from_str(rest)
            .map_err(|e| DynamicsError::BadSpec(format!("bad parameter object: {e}")))?;
        return Ok(obj);
    }
    for pair in rest.split(',') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| DynamicsError::BadSpec(format!("expected key=value, got `{pair}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| DynamicsError::BadSpec(format!("bad number `{v}` for `{k}`")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

impl VertexDynamics for Dynamics {
    fn dim(&self) -> usize {
        match self {
            Self::Linear { dim, .. } => *dim,
            Self::Logistic { .. } => 1,
            Self::Lorenz { .. } | Self::Rossler { .. } => 3,
        }
    }

    fn name(&self) -> String {
        match self {
            Self::Linear { a, dim } => format!("linear:a={a},dim={dim}"),
            Self::Logistic { r } => format!("logistic:r={r}"),
            Self::Lorenz { sigma, rho, beta } => format!("lorenz:sigma={sigma},rho={rho},beta={beta}"),
            Self::Rossler { a, b, c } => format!("rossler:a={a},b={b},c={c}"),
        }
    }

    fn kind(&self) -> DynamicsKind {
        match self {
            Self::Linear { .. } => DynamicsKind::Either,
            Self::Logistic { .. } => DynamicsKind::Map,
            Self::Lorenz { .. } | Self::Rossler { .. } => DynamicsKind::Flow,
        }
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Self::Linear { a, .. } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = a * xi;
                }
            }
            Self::Logistic { r } => out[0] = r * x[0] * (1.0 - x[0]),
            Self::Lorenz { sigma, rho, beta } => {
                out[0] = sigma * (x[1] - x[0]);
                out[1] = x[0] * (rho - x[2]) - x[1];
                out[2] = x[0] * x[1] - beta * x[2];
            }
            Self::Rossler { a, b, c } => {
                out[0] = -x[1] - x[2];
                out[1] = x[0] + a * x[1];
                out[2] = b + x[2] * (x[0] - c);
            }
        }
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        match *self {
            Self::Linear { a, dim } => DMatrix::identity(dim, dim) * a,
            Self::Logistic { r } => DMatrix::from_element(1, 1, r * (1.0 - 2.0 * x[0])),
            Self::Lorenz { sigma, rho, beta } => DMatrix::from_row_slice(
                3,
                3,
                &[
                    -sigma, sigma, 0.0, //
                    rho - x[2], -1.0, -x[0], //
                    x[1], x[0], -beta,
                ],
            ),
            Self::Rossler { a, c, .. } => DMatrix::from_row_slice(
                3,
                3,
                &[
                    0.0, -1.0, -1.0, //
                    1.0, a, 0.0, //
                    x[2], 0.0, x[0] - c,
                ],
            ),
        }
    }

    fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Linear { dim, .. } => vec![(-1.0, 1.0); *dim],
            Self::Logistic { .. } => vec![(0.0, 1.0)],
            Self::Lorenz { .. } => vec![(-20.0, 20.0), (-30.0, 30.0), (0.0, 50.0)],
            Self::Rossler { .. } => vec![(-10.0, 10.0), (-10.0, 10.0), (0.0, 20.0)],
        }
    }

    fn reference_point(&self) -> Vec<f64> {
        match self {
            Self::Linear { dim, .. } => vec![1.0; *dim],
            Self::Logistic { .. } => vec![0.3],
            Self::Lorenz { .. } => vec![1.0, 1.0, 1.0],
            Self::Rossler { .. } => vec![1.0, 1.0, 0.0],
        }
    }

    fn state_independent_jacobian(&self) -> bool {
        matches!(self, Self::Linear { .. })
    }
}

/// Scalar interaction function `g`, applied componentwise to aggregated states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarMap {
    Identity,
    Scale(f64),
    Tanh,
    Sin,
}

impl ScalarMap {
    pub fn eval(self, y: f64) -> f64 {
        match self {
            Self::Identity => y,
            Self::Scale(c) => c * y,
            Self::Tanh => y.tanh(),
            Self::Sin => y.sin(),
        }
    }

    pub fn derivative(self, y: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Scale(c) => c,
            Self::Tanh => 1.0 - y.tanh().powi(2),
            Self::Sin => y.cos(),
        }
    }

    /// `identity`, `tanh`, `sin` or `scale:<c>`.
    pub fn from_spec(spec: &str) -> Result<Self, DynamicsError> {
        match spec.split_once(':') {
            Some(("scale", c)) => c
                .parse()
                .map(Self::Scale)
                .map_err(|_| DynamicsError::BadSpec(format!("bad scale factor `{c}`"))),
            None if spec == "identity" => Ok(Self::Identity),
            None if spec == "tanh" => Ok(Self::Tanh),
            None if spec == "sin" => Ok(Self::Sin),
            _ => Err(DynamicsError::BadSpec(format!("unknown interaction function `{spec}`"))),
        }
    }
}

/// Symmetric normalized aggregation of the states in one hyperedge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    #[default]
    ArithmeticMean,
    GeometricMean,
}
