//! Normalized hypergraph Laplacian `L = D⁻¹·S·Sᵀ` and its spectrum.
//!
//! `S` is the signed incidence matrix and `D` the diagonal of (non-catalyst)
//! vertex degrees. `L` is not symmetric, but it is similar to
//! `K = D^(-1/2)·S·Sᵀ·D^(-1/2)`, which is. Eigenpairs are computed on `K`
//! with the Jacobi solver and mapped back through `D^(-1/2)`.
//!
//! On graph-derived hypergraphs `L` coincides with the random-walk normalized
//! graph Laplacian `(Lu)(i) = u(i) - (1/deg i) Σ_{j~i} u(j)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::eigen::jacobi_eigen;
use crate::hypergraph::{incidence, ChemicalHypergraph};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("vertex {vertex} has degree 0 (isolated or catalyst-only); Laplacian undefined")]
    ZeroDegree { vertex: String },
    #[error("eigenvalue {value:e} below -zero_tol ({zero_tol:e}); Laplacian is not positive semidefinite")]
    NegativeEigenvalue { value: f64, zero_tol: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NotConverged { sweeps: usize },
    #[error("no neutral modes; synchronized dynamics precluded")]
    NoNeutralModes,
    #[error("bipartite comparison shape mismatch: {0}")]
    ShapeMismatch(String),
}

pub fn default_zero_tol(n: usize) -> f64 {
    1e-9 * n as f64
}

#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    /// `D⁻¹·S·Sᵀ`.
    pub dense: DMatrix<f64>,
    pub degrees: Vec<f64>,
    /// `S·Sᵀ`, kept for exact kernel tests.
    pub gram: DMatrix<f64>,
}

impl LaplacianMatrix {
    pub fn n(&self) -> usize {
        self.dense.nrows()
    }

    /// Symmetric similar matrix `D^(-1/2)·S·Sᵀ·D^(-1/2)`.
    pub fn symmetric_form(&self) -> DMatrix<f64> {
        let n = self.n();
        let inv_sqrt: Vec<f64> = self.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
        DMatrix::from_fn(n, n, |i, j| self.gram[(i, j)] * inv_sqrt[i] * inv_sqrt[j])
    }

    /// `L·u` for a single vertex field.
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.dense * u
    }
}

/// Assembles the Laplacian. Every vertex needs at least one non-catalyst membership.
pub fn laplacian(h: &ChemicalHypergraph) -> Result<LaplacianMatrix, SpectralError> {
    let inc = incidence(h);
    if let Some(i) = inc.degrees.iter().position(|&d| d == 0) {
        return Err(SpectralError::ZeroDegree {
            vertex: h.vertex_name(i),
        });
    }
    let s = inc.signed.map(f64::from);
    let gram = &s * s.transpose();
    let degrees: Vec<f64> = inc.degrees.iter().map(|&d| d as f64).collect();
    let n = h.n_vertices();
    let dense = DMatrix::from_fn(n, n, |i, j| gram[(i, j)] / degrees[i]);
    Ok(LaplacianMatrix {
        dense,
        degrees,
        gram,
    })
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending, non-negative.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is an eigenvector of `L` for `eigenvalues[k]`. The columns
    /// are orthonormal in the `D`-weighted inner product.
    pub eigenvectors: DMatrix<f64>,
    /// Orthonormal eigenvectors of the symmetric form `K`.
    pub symmetric_eigenvectors: DMatrix<f64>,
    pub degrees: Vec<f64>,
    pub gram: DMatrix<f64>,
    pub zero_tol: f64,
    pub zero_multiplicity: usize,
    pub sweeps: usize,
}

/// Full eigendecomposition of `L`.
///
/// Negative eigenvalues within `zero_tol` are clamped to zero; anything more
/// negative is reported as an internal inconsistency.
pub fn spectrum(l: &LaplacianMatrix, zero_tol: f64) -> Result<Spectrum, SpectralError> {
    assert!(zero_tol >= 0.0, "zero_tol must be non-negative");
    let k = l.symmetric_form();
    let eig = jacobi_eigen(&k);
    if !eig.converged {
        return Err(SpectralError::NotConverged { sweeps: eig.sweeps });
    }
    let n = l.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.values[a].total_cmp(&eig.values[b]).then(a.cmp(&b)));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut w = DMatrix::<f64>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut lam = eig.values[src];
        if lam < 0.0 {
            if lam < -zero_tol {
                return Err(SpectralError::NegativeEigenvalue {
                    value: lam,
                    zero_tol,
                });
            }
            lam = 0.0;
        }
        eigenvalues.push(lam);
        let mut v = eig.vectors.column(src).into_owned();
        v /= v.norm();
        // deterministic sign: largest-magnitude entry positive (first one on ties)
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        w.set_column(col, &v);
    }

    let inv_sqrt: Vec<f64> = l.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| w[(i, j)] * inv_sqrt[i]);
    let zero_multiplicity = eigenvalues.iter().filter(|&&x| x <= zero_tol).count();

    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        symmetric_eigenvectors: w,
        degrees: l.degrees.clone(),
        gram: l.gram.clone(),
        zero_tol,
        zero_multiplicity,
        sweeps: eig.sweeps,
    })
}

impl Spectrum {
    /// Spectrum of the diagonal operator `diag(eigenvalues)` with unit degrees.
    /// Useful wherever only eigenvalues matter.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, zero_tol: f64) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let n = eigenvalues.len();
        let zero_multiplicity = eigenvalues.iter().filter(|&&x| x <= zero_tol).count();
        Self {
            gram: DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone())),
            eigenvalues,
            eigenvectors: DMatrix::identity(n, n),
            symmetric_eigenvectors: DMatrix::identity(n, n),
            degrees: vec![1.0; n],
            zero_tol,
            zero_multiplicity,
            sweeps: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn summary(&self) -> SpectralSummary {
        spectral_summary(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary {
    pub zero_multiplicity: usize,
    /// Smallest eigenvalue above `zero_tol`; `None` when all modes are neutral.
    pub lambda_min_nonzero: Option<f64>,
    pub lambda_max: f64,
}

pub fn spectral_summary(s: &Spectrum) -> SpectralSummary {
    SpectralSummary {
        zero_multiplicity: s.zero_multiplicity,
        lambda_min_nonzero: s.eigenvalues.get(s.zero_multiplicity).copied(),
        lambda_max: s.eigenvalues.last().copied().unwrap_or(0.0),
    }
}

/// Projector onto the zero-eigenvalue eigenspace of `L`, orthogonal in the
/// `D`-weighted inner product.
#[derive(Debug, Clone)]
pub struct KernelProjector {
    /// `P = V₀·V₀ᵀ·D`.
    pub projector: DMatrix<f64>,
    /// `Σ_{λ_k > tol} v_k·v_kᵀ / λ_k`; `I - P` equals this times `S·Sᵀ`.
    pub pseudo_inverse: DMatrix<f64>,
    /// `S·Sᵀ`.
    pub gram: DMatrix<f64>,
    pub rank: usize,
}

impl KernelProjector {
    /// Applies `P` to an `N × m` state (per component column).
    pub fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.projector * x
    }

    /// `(I - P)·x`, applied through `S·Sᵀ` first so that a state exactly in
    /// the kernel maps to exactly zero regardless of its magnitude.
    pub fn residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.pseudo_inverse * (&self.gram * x)
    }

    /// Dense `I - P`.
    pub fn complement(&self) -> DMatrix<f64> {
        &self.pseudo_inverse * &self.gram
    }
}

pub fn kernel_projector(s: &Spectrum) -> Result<KernelProjector, SpectralError> {
    let k0 = s.zero_multiplicity;
    if k0 == 0 {
        return Err(SpectralError::NoNeutralModes);
    }
    let n = s.n();
    let v0 = s.eigenvectors.columns(0, k0);
    let d = DMatrix::from_diagonal(&DVector::from_vec(s.degrees.clone()));
    let projector = v0 * v0.transpose() * d;

    let mut weighted = DMatrix::<f64>::zeros(n, n);
    for k in k0..n {
        let v = s.eigenvectors.column(k);
        weighted += v * v.transpose() / s.eigenvalues[k];
    }
    Ok(KernelProjector {
        projector,
        pseudo_inverse: weighted,
        gram: s.gram.clone(),
        rank: k0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteBoundReport {
    pub lambda_max: f64,
    pub lambda_max_comparison: f64,
    /// `λ_N(H) ≤ λ_N(H_bip) + 1e-9`.
    pub holds: bool,
    pub comparison_is_bipartite: bool,
}

/// Instance check of the largest-eigenvalue bound against a comparison
/// hypergraph with the same hyperedge input/output counts.
pub fn bipartite_bound_check(
    h: &ChemicalHypergraph,
    h_bip: &ChemicalHypergraph,
) -> Result<BipartiteBoundReport, SpectralError> {
    if h.n_hyperedges() != h_bip.n_hyperedges() {
        return Err(SpectralError::ShapeMismatch(format!(
            "{} hyperedges vs {}",
            h.n_hyperedges(),
            h_bip.n_hyperedges()
        )));
    }
    for (k, (a, b)) in h.hyperedges().iter().zip(h_bip.hyperedges()).enumerate() {
        let ca = (a.pure_inputs().count(), a.pure_outputs().count());
        let cb = (b.pure_inputs().count(), b.pure_outputs().count());
        // orientation does not change the Laplacian, so swapped counts also match
        if ca != cb && ca != (cb.1, cb.0) {
            return Err(SpectralError::ShapeMismatch(format!(
                "hyperedge {k}: {}-in/{}-out vs {}-in/{}-out",
                ca.0, ca.1, cb.0, cb.1
            )));
        }
    }
    let top = |g: &ChemicalHypergraph| -> Result<f64, SpectralError> {
        let l = laplacian(g)?;
        let s = spectrum(&l, default_zero_tol(g.n_vertices()))?;
        Ok(spectral_summary(&s).lambda_max)
    };
    let lambda_max = top(h)?;
    let lambda_max_comparison = top(h_bip)?;
    Ok(BipartiteBoundReport {
        lambda_max,
        lambda_max_comparison,
        holds: lambda_max <= lambda_max_comparison + 1e-9,
        comparison_is_bipartite: h_bip.is_bipartite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Hyperedge;

    fn splitter() -> ChemicalHypergraph {
        ChemicalHypergraph::new(3, vec![Hyperedge::new(vec![0], vec![1, 2])]).unwrap()
    }

    fn cyclic3() -> ChemicalHypergraph {
        let edges = (0..3)
            .map(|i| Hyperedge::new(vec![i], vec![(i + 1) % 3, (i + 2) % 3]))
            .collect();
        ChemicalHypergraph::new(3, edges).unwrap()
    }

    fn assert_mat(a: &DMatrix<f64>, rows: &[&[f64]], tol: f64) {
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert!((a[(i, j)] - x).abs() <= tol, "({i},{j}): {} vs {x}", a[(i, j)]);
            }
        }
    }

    fn spec_of(h: &ChemicalHypergraph) -> Spectrum {
        spectrum(&laplacian(h).unwrap(), default_zero_tol(h.n_vertices())).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        let l = laplacian(&splitter()).unwrap();
        assert_mat(
            &l.dense,
            &[&[1.0, -1.0, -1.0], &[-1.0, 1.0, 1.0], &[-1.0, 1.0, 1.0]],
            0.0,
        );

        let l = laplacian(&ChemicalHypergraph::from_graph(2, &[(0, 1)]).unwrap()).unwrap();
        assert_mat(&l.dense, &[&[1.0, -1.0], &[-1.0, 1.0]], 0.0);

        let l = laplacian(&cyclic3()).unwrap();
        let t = 1.0 / 3.0;
        assert_mat(
            &l.dense,
            &[&[1.0, -t, -t], &[-t, 1.0, -t], &[-t, -t, 1.0]],
            1e-15,
        );
    }

    #[test]
    fn laplacian_rejects_catalyst_only_vertex() {
        let h = ChemicalHypergraph::new(3, vec![Hyperedge::new(vec![0, 1], vec![1, 2])]).unwrap();
        match laplacian(&h) {
            Err(SpectralError::ZeroDegree { vertex }) => assert_eq!(vertex, "1"),
            other => panic!("unexpected {other:?}"),
        }
        let isolated = ChemicalHypergraph::from_graph(3, &[(0, 1)]).unwrap();
        assert!(matches!(laplacian(&isolated), Err(SpectralError::ZeroDegree { .. })));
    }

    #[test]
    fn spectrum_splitter() {
        let s = spec_of(&splitter());
        for (got, want) in s.eigenvalues.iter().zip([0.0, 0.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(s.zero_multiplicity, 2);
        let sum = spectral_summary(&s);
        assert_eq!(sum.zero_multiplicity, 2);
        assert!((sum.lambda_min_nonzero.unwrap() - 3.0).abs() < 1e-12);
        assert!((sum.lambda_max - 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_cyclic() {
        let s = spec_of(&cyclic3());
        for (got, want) in s.eigenvalues.iter().zip([1.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let sum = spectral_summary(&s);
        assert_eq!(sum.zero_multiplicity, 0);
        assert!((sum.lambda_min_nonzero.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((sum.lambda_max - 4.0 / 3.0).abs() < 1e-12);
        assert!(matches!(kernel_projector(&s), Err(SpectralError::NoNeutralModes)));
    }

    #[test]
    fn spectrum_all_input_hyperedge() {
        let h = ChemicalHypergraph::new(4, vec![Hyperedge::unoriented(vec![0, 1, 2, 3])]).unwrap();
        let s = spec_of(&h);
        for (got, want) in s.eigenvalues.iter().zip([0.0, 0.0, 0.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn path_p2_summary() {
        let s = spec_of(&ChemicalHypergraph::from_graph(2, &[(0, 1)]).unwrap());
        let sum = spectral_summary(&s);
        assert_eq!(sum.zero_multiplicity, 1);
        assert!((sum.lambda_min_nonzero.unwrap() - 2.0).abs() < 1e-12);
        assert!((sum.lambda_max - 2.0).abs() < 1e-12);
    }

    #[test]
    fn summary_all_neutral() {
        let s = Spectrum::from_eigenvalues(vec![0.0, 0.0], 1e-9);
        let sum = spectral_summary(&s);
        assert_eq!(sum.zero_multiplicity, 2);
        assert_eq!(sum.lambda_min_nonzero, None);
    }

    #[test]
    fn splitter_kernel_projector() {
        let s = spec_of(&splitter());
        let kp = kernel_projector(&s).unwrap();
        assert_eq!(kp.rank, 2);
        let p = &kp.projector;
        assert!((p * p - p).amax() < 1e-12);
        let l = laplacian(&splitter()).unwrap();
        assert!((&l.dense * p).amax() < 1e-12);
        for u in [[1.0, 0.5, 0.5], [0.0, 1.0, -1.0]] {
            let x = DMatrix::from_column_slice(3, 1, &u);
            assert!((kp.project(&x) - &x).amax() < 1e-12);
            assert_eq!(kp.residual(&x).amax(), 0.0);
        }
        // the non-neutral direction is annihilated
        let v = s.eigenvectors.column(2).into_owned();
        let x = DMatrix::from_column_slice(3, 1, v.as_slice());
        assert!(kp.project(&x).amax() < 1e-12);
        assert!((kp.residual(&x) - &x).amax() < 1e-12);
        // P and I - P agree
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((&kp.projector + kp.complement() - id).amax() < 1e-12);
    }

    #[test]
    fn connected_graph_kernel_is_constants() {
        let g = ChemicalHypergraph::from_graph(4, &[(0, 1), (1, 2), (2, 3), (1, 3)]).unwrap();
        let s = spec_of(&g);
        let kp = kernel_projector(&s).unwrap();
        assert_eq!(kp.rank, 1);
        let ones = DMatrix::from_element(4, 1, 1.0);
        assert!((kp.project(&ones) - &ones).amax() < 1e-12);
    }

    #[test]
    fn eigenvector_sign_convention() {
        let s = spec_of(&cyclic3());
        for k in 0..3 {
            let w = s.symmetric_eigenvectors.column(k);
            let mut pivot = 0;
            for i in 1..3 {
                if w[i].abs() > w[pivot].abs() {
                    pivot = i;
                }
            }
            assert!(w[pivot] > 0.0);
        }
    }

    #[test]
    fn bipartite_bound_examples() {
        let tri = ChemicalHypergraph::from_graph(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let r = bipartite_bound_check(&tri, &tri).unwrap();
        assert_eq!(r.lambda_max, r.lambda_max_comparison);
        assert!(r.holds);

        let star = ChemicalHypergraph::from_graph(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let r = bipartite_bound_check(&tri, &star).unwrap();
        assert!((r.lambda_max - 1.5).abs() < 1e-12);
        assert!((r.lambda_max_comparison - 2.0).abs() < 1e-12);
        assert!(r.holds && r.comparison_is_bipartite);

        let rearranged = ChemicalHypergraph::new(
            3,
            (0..3).map(|_| Hyperedge::new(vec![0], vec![1, 2])).collect(),
        )
        .unwrap();
        let r = bipartite_bound_check(&cyclic3(), &rearranged).unwrap();
        assert!((r.lambda_max - 4.0 / 3.0).abs() < 1e-12);
        assert!((r.lambda_max_comparison - 3.0).abs() < 1e-12);
        assert!(r.holds && r.comparison_is_bipartite);

        let short = ChemicalHypergraph::from_graph(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            bipartite_bound_check(&tri, &short),
            Err(SpectralError::ShapeMismatch(_))
        ));
        assert!(matches!(
            bipartite_bound_check(&cyclic3(), &tri),
            Err(SpectralError::ShapeMismatch(_))
        ));
    }
}
