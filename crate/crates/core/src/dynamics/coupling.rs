use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::vertex::{Aggregator, ScalarMap, VertexDynamics};
use super::{DynamicsError, SystemState};
use crate::hypergraph::ChemicalHypergraph;
use crate::spectral::LaplacianMatrix;

/// How vertices interact.
#[derive(Clone)]
pub enum CouplingSpec {
    /// `ẋ_i = f(x_i) + Σ_j A_ij·h(x_j)`.
    Matrix {
        a: DMatrix<f64>,
        h: Arc<dyn VertexDynamics>,
    },
    /// `ẋ_i = f(x_i) - σ·Σ_j L_ij·f(x_j)`: the Laplacian acts on f-values.
    LaplacianDiffusive { sigma: f64, laplacian: LaplacianMatrix },
    /// `ẋ_i = f(x_i) + Σ_{h ∋ i} g(agg_{j ∈ h} x_j)` with unit incidence weights.
    HyperedgeSymmetric {
        hypergraph: ChemicalHypergraph,
        g: ScalarMap,
        aggregator: Aggregator,
    },
}

impl fmt::Debug for CouplingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Row sums of a coupling matrix and whether they are all equal.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSumReport {
    pub sums: Vec<f64>,
    pub constant: bool,
}

pub fn matrix_row_sums(a: &DMatrix<f64>) -> RowSumReport {
    let sums: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
    let scale = sums.iter().fold(1.0f64, |m, s| m.max(s.abs()));
    let constant = sums.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12 * scale);
    RowSumReport { sums, constant }
}

impl CouplingSpec {
    pub fn laplacian(sigma: f64, laplacian: LaplacianMatrix) -> Result<Self, DynamicsError> {
        if !(0.0..=1.0).contains(&sigma) {
            return Err(DynamicsError::BadSpec(format!("sigma = {sigma} outside [0, 1]")));
        }
        Ok(Self::LaplacianDiffusive { sigma, laplacian })
    }

    pub fn matrix(a: DMatrix<f64>, h: Arc<dyn VertexDynamics>) -> Result<Self, DynamicsError> {
        if a.nrows() != a.ncols() {
            return Err(DynamicsError::Dimension(format!(
                "coupling matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(Self::Matrix { a, h })
    }

    pub fn hyperedge(hypergraph: ChemicalHypergraph, g: ScalarMap, aggregator: Aggregator) -> Self {
        Self::HyperedgeSymmetric {
            hypergraph,
            g,
            aggregator,
        }
    }

    pub fn n_vertices(&self) -> usize {
        match self {
            Self::Matrix { a, .. } => a.nrows(),
            Self::LaplacianDiffusive { laplacian, .. } => laplacian.n(),
            Self::HyperedgeSymmetric { hypergraph, .. } => hypergraph.n_vertices(),
        }
    }

    /// Row-sum report for matrix coupling, `None` otherwise.
    pub fn row_sums(&self) -> Option<RowSumReport> {
        match self {
            Self::Matrix { a, .. } => Some(matrix_row_sums(a)),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Matrix { a, h } => {
                let rs = matrix_row_sums(a);
                format!(
                    "matrix(N={}, h={}, constant_row_sum={})",
                    a.nrows(),
                    h.name(),
                    rs.constant
                )
            }
            Self::LaplacianDiffusive { sigma, laplacian } => {
                format!("laplacian(N={}, sigma={sigma})", laplacian.n())
            }
            Self::HyperedgeSymmetric {
                hypergraph,
                g,
                aggregator,
            } => format!("hyperedge({hypergraph}, g={g:?}, {aggregator:?})"),
        }
    }
}

/// Vertex dynamics plus coupling: the full right-hand side.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub dynamics: Arc<dyn VertexDynamics>,
    pub coupling: CouplingSpec,
}

impl CoupledSystem {
    pub fn new(dynamics: Arc<dyn VertexDynamics>, coupling: CouplingSpec) -> Result<Self, DynamicsError> {
        if let CouplingSpec::Matrix { h, .. } = &coupling {
            if h.dim() != dynamics.dim() {
                return Err(DynamicsError::Dimension(format!(
                    "f has dimension {} but h has {}",
                    dynamics.dim(),
                    h.dim()
                )));
            }
        }
        Ok(Self { dynamics, coupling })
    }

    pub fn n_vertices(&self) -> usize {
        self.coupling.n_vertices()
    }

    pub fn dim(&self) -> usize {
        self.dynamics.dim()
    }

    fn check_shape(&self, x: &DMatrix<f64>) -> Result<(), DynamicsError> {
        if x.nrows() != self.n_vertices() || x.ncols() != self.dim() {
            return Err(DynamicsError::Dimension(format!(
                "state is {}x{}, system expects {}x{}",
                x.nrows(),
                x.ncols(),
                self.n_vertices(),
                self.dim()
            )));
        }
        Ok(())
    }
}

fn row(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

/// Applies `map` to every vertex row of `x`.
pub(crate) fn map_rows(
    d: &dyn VertexDynamics,
    x: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>, DynamicsError> {
    let (n, m) = x.shape();
    let mut out = DMatrix::zeros(n, m);
    let mut buf = vec![0.0; m];
    for i in 0..n {
        d.eval(&row(x, i), &mut buf);
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { vertex: i, t });
        }
        for (a, &v) in buf.iter().enumerate() {
            out[(i, a)] = v;
        }
    }
    Ok(out)
}

/// Componentwise aggregate of member states, one value per state component.
fn aggregate(
    x: &DMatrix<f64>,
    members: &[usize],
    aggregator: Aggregator,
    edge: usize,
) -> Result<Vec<f64>, DynamicsError> {
    let m = x.ncols();
    let size = members.len() as f64;
    let mut agg = vec![0.0; m];
    for (a, slot) in agg.iter_mut().enumerate() {
        match aggregator {
            Aggregator::ArithmeticMean => {
                *slot = members.iter().map(|&j| x[(j, a)]).sum::<f64>() / size;
            }
            Aggregator::GeometricMean => {
                let mut log_sum = 0.0;
                for &j in members {
                    let v = x[(j, a)];
                    if v <= 0.0 {
                        return Err(DynamicsError::GeometricDomain {
                            hyperedge: edge,
                            vertex: j,
                            value: v,
                        });
                    }
                    log_sum += v.ln();
                }
                *slot = (log_sum / size).exp();
            }
        }
    }
    Ok(agg)
}

/// Right-hand side of the coupled system at state `s`.
pub fn rhs(system: &CoupledSystem, s: &SystemState) -> Result<DMatrix<f64>, DynamicsError> {
    system.check_shape(&s.x)?;
    let x = &s.x;
    let fx = map_rows(system.dynamics.as_ref(), x, s.t)?;
    let out = match &system.coupling {
        CouplingSpec::Matrix { a, h } => {
            let hx = map_rows(h.as_ref(), x, s.t)?;
            fx + a * hx
        }
        CouplingSpec::LaplacianDiffusive { sigma, laplacian } => {
            let lf = &laplacian.dense * &fx;
            fx - lf * *sigma
        }
        CouplingSpec::HyperedgeSymmetric {
            hypergraph,
            g,
            aggregator,
        } => {
            let mut out = fx;
            for (k, e) in hypergraph.hyperedges().iter().enumerate() {
                let members = e.members();
                let agg = aggregate(x, &members, *aggregator, k)?;
                for &i in &members {
                    for (a, &y) in agg.iter().enumerate() {
                        out[(i, a)] += g.eval(y);
                    }
                }
            }
            out
        }
    };
    if let Some(pos) = out.iter().position(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite {
            vertex: pos % out.nrows(),
            t: s.t,
        });
    }
    Ok(out)
}

/// Linearization of [`rhs`] at `s_star`, applied to the perturbation `eps`.
pub fn linearized_rhs(
    system: &CoupledSystem,
    s_star: &SystemState,
    eps: &DMatrix<f64>,
) -> Result<DMatrix<f64>, DynamicsError> {
    system.check_shape(&s_star.x)?;
    system.check_shape(eps)?;
    let x = &s_star.x;
    let (n, m) = x.shape();
    let jac_f: Vec<DMatrix<f64>> = (0..n).map(|i| system.dynamics.jacobian(&row(x, i))).collect();

    // Df(x_i)·ε_i for every vertex
    let mut df_eps = DMatrix::zeros(n, m);
    for i in 0..n {
        let e = nalgebra::DVector::from_vec(row(eps, i));
        let v = &jac_f[i] * e;
        for a in 0..m {
            df_eps[(i, a)] = v[a];
        }
    }

    let out = match &system.coupling {
        CouplingSpec::Matrix { a, h } => {
            let mut dh_eps = DMatrix::zeros(n, m);
            for j in 0..n {
                let e = nalgebra::DVector::from_vec(row(eps, j));
                let v = h.jacobian(&row(x, j)) * e;
                for c in 0..m {
                    dh_eps[(j, c)] = v[c];
                }
            }
            df_eps + a * dh_eps
        }
        CouplingSpec::LaplacianDiffusive { sigma, laplacian } => {
            let coupled = &laplacian.dense * &df_eps;
            df_eps - coupled * *sigma
        }
        CouplingSpec::HyperedgeSymmetric {
            hypergraph,
            g,
            aggregator,
        } => {
            let mut out = df_eps;
            for (k, e) in hypergraph.hyperedges().iter().enumerate() {
                let members = e.members();
                let size = members.len() as f64;
                let agg = aggregate(x, &members, *aggregator, k)?;
                for (a, &y) in agg.iter().enumerate() {
                    // directional derivative of g(agg) along ε, same for all members
                    let mut d_agg = 0.0;
                    for &j in &members {
                        let weight = match aggregator {
                            Aggregator::ArithmeticMean => 1.0 / size,
                            Aggregator::GeometricMean => y / (size * x[(j, a)]),
                        };
                        d_agg += weight * eps[(j, a)];
                    }
                    let term = g.derivative(y) * d_agg;
                    for &i in &members {
                        out[(i, a)] += term;
                    }
                }
            }
            out
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::vertex::Dynamics;
    use crate::hypergraph::Hyperedge;
    use crate::spectral::laplacian;

    fn state(rows: &[&[f64]]) -> SystemState {
        let n = rows.len();
        let m = rows[0].len();
        SystemState::new(0.0, DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    #[test]
    fn laplacian_coupling_preserves_sync() {
        let g = ChemicalHypergraph::from_graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let sys = CoupledSystem::new(
            Arc::new(Dynamics::lorenz_classic()),
            CouplingSpec::laplacian(0.7, laplacian(&g).unwrap()).unwrap(),
        )
        .unwrap();
        let x_star = [1.5, -2.0, 20.0];
        let s = state(&[&x_star, &x_star, &x_star, &x_star]);
        let out = rhs(&sys, &s).unwrap();
        let f = Dynamics::lorenz_classic().eval_vec(&x_star);
        for i in 0..4 {
            for a in 0..3 {
                assert!((out[(i, a)] - f[a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn row_sums_detect_non_constant() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let rs = matrix_row_sums(&a);
        assert!(!rs.constant);
        assert_eq!(rs.sums, vec![2.0, 1.0]);
    }

    #[test]
    fn matrix_coupling_synchronized_state() {
        // row sums all equal to a = -1
        let a = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 0.5, -1.0, -0.5, 0.0, 0.0, -1.0]);
        let rs = matrix_row_sums(&a);
        assert!(rs.constant);
        assert_eq!(rs.sums, vec![-1.0, -1.0, -1.0]);
        let f = Dynamics::rossler_classic();
        let h = Dynamics::Linear { a: 0.3, dim: 3 };
        let sys = CoupledSystem::new(
            Arc::new(f.clone()),
            CouplingSpec::matrix(a, Arc::new(h.clone())).unwrap(),
        )
        .unwrap();
        let x_star = [0.4, -1.1, 0.2];
        let out = rhs(&sys, &state(&[&x_star, &x_star, &x_star])).unwrap();
        let fx = f.eval_vec(&x_star);
        let hx = h.eval_vec(&x_star);
        for i in 0..3 {
            for c in 0..3 {
                assert!((out[(i, c)] - (fx[c] - hx[c])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hyperedge_arithmetic_mean_example() {
        let hg = ChemicalHypergraph::new(3, vec![Hyperedge::unoriented(vec![0, 1, 2])]).unwrap();
        let f = Dynamics::linear(-0.5);
        let sys = CoupledSystem::new(
            Arc::new(f.clone()),
            CouplingSpec::hyperedge(hg, ScalarMap::Identity, Aggregator::ArithmeticMean),
        )
        .unwrap();
        let out = rhs(&sys, &state(&[&[3.0], &[0.0], &[0.0]])).unwrap();
        assert_eq!(out[(0, 0)], -1.5 + 1.0);
        assert_eq!(out[(1, 0)], 1.0);
        assert_eq!(out[(2, 0)], 1.0);
    }

    #[test]
    fn hyperedge_catalysts_participate() {
        let hg = ChemicalHypergraph::new(3, vec![Hyperedge::new(vec![0, 1], vec![1, 2])]).unwrap();
        let sys = CoupledSystem::new(
            Arc::new(Dynamics::linear(0.0)),
            CouplingSpec::hyperedge(hg, ScalarMap::Identity, Aggregator::ArithmeticMean),
        )
        .unwrap();
        let out = rhs(&sys, &state(&[&[3.0], &[6.0], &[0.0]])).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 3.0, 3.0]);
    }

    #[test]
    fn geometric_mean_domain() {
        let hg = ChemicalHypergraph::new(2, vec![Hyperedge::unoriented(vec![0, 1])]).unwrap();
        let sys = CoupledSystem::new(
            Arc::new(Dynamics::linear(0.0)),
            CouplingSpec::hyperedge(hg, ScalarMap::Identity, Aggregator::GeometricMean),
        )
        .unwrap();
        let out = rhs(&sys, &state(&[&[4.0], &[1.0]])).unwrap();
        assert!((out[(0, 0)] - 2.0).abs() < 1e-15);
        assert!(matches!(
            rhs(&sys, &state(&[&[4.0], &[0.0]])),
            Err(DynamicsError::GeometricDomain { hyperedge: 0, vertex: 1, .. })
        ));
    }

    #[test]
    fn linearization_of_linear_laplacian_system() {
        let hg = ChemicalHypergraph::new(3, vec![Hyperedge::new(vec![0], vec![1, 2])]).unwrap();
        let l = laplacian(&hg).unwrap();
        let a = 0.8;
        let sigma = 0.3;
        let sys = CoupledSystem::new(
            Arc::new(Dynamics::linear(a)),
            CouplingSpec::laplacian(sigma, l.clone()).unwrap(),
        )
        .unwrap();
        let s = state(&[&[0.1], &[0.2], &[-0.3]]);
        let eps = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let got = linearized_rhs(&sys, &s, &eps).unwrap();
        let want = (DMatrix::<f64>::identity(3, 3) - &l.dense * sigma) * &eps * a;
        assert!((got - want).amax() < 1e-14);

        let zero = linearized_rhs(&sys, &s, &DMatrix::zeros(3, 1)).unwrap();
        assert_eq!(zero.amax(), 0.0);
    }

    #[test]
    fn shape_and_sigma_validation() {
        let g = ChemicalHypergraph::from_graph(2, &[(0, 1)]).unwrap();
        let l = laplacian(&g).unwrap();
        assert!(CouplingSpec::laplacian(1.5, l.clone()).is_err());
        let sys = CoupledSystem::new(
            Arc::new(Dynamics::linear(1.0)),
            CouplingSpec::laplacian(0.5, l).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            rhs(&sys, &state(&[&[1.0], &[1.0], &[1.0]])),
            Err(DynamicsError::Dimension(_))
        ));
        let mismatch = CoupledSystem::new(
            Arc::new(Dynamics::linear(1.0)),
            CouplingSpec::matrix(DMatrix::zeros(2, 2), Arc::new(Dynamics::lorenz_classic())).unwrap(),
        );
        assert!(mismatch.is_err());
    }
}
