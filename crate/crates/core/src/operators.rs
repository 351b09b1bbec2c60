//! Dense graph operators: the three Laplacians, the two propagation matrices,
//! commutators and kernel generators.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Relative tolerance used by [`is_commuting_pair`] when callers have no better choice.
pub const DEFAULT_COMMUTATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum OperatorKind {
    /// Δ = D − A
    UnnormalizedLaplacian,
    /// Δ_norm = I − D^{-1/2} A D^{-1/2}
    NormalizedLaplacian,
    /// Δ̃_norm = I − (D+I)^{-1/2} (A+I) (D+I)^{-1/2}
    RenormalizedLaplacian,
    /// A_norm = D^{-1/2} A D^{-1/2}
    NormalizedAdjacency,
    /// Ã_norm = (D+I)^{-1/2} (A+I) (D+I)^{-1/2}
    RenormalizedAdjacency,
    Custom(String),
}

impl OperatorKind {
    pub fn name(&self) -> &str {
        match self {
            OperatorKind::UnnormalizedLaplacian => "delta",
            OperatorKind::NormalizedLaplacian => "delta-norm",
            OperatorKind::RenormalizedLaplacian => "delta-tilde-norm",
            OperatorKind::NormalizedAdjacency => "anorm",
            OperatorKind::RenormalizedAdjacency => "anorm-tilde",
            OperatorKind::Custom(name) => name,
        }
    }

    pub fn is_laplacian(&self) -> bool {
        matches!(
            self,
            OperatorKind::UnnormalizedLaplacian
                | OperatorKind::NormalizedLaplacian
                | OperatorKind::RenormalizedLaplacian
        )
    }

    /// Laplacian whose kernel is the fixed space of a propagation operator.
    pub fn paired_laplacian(&self) -> Option<OperatorKind> {
        match self {
            OperatorKind::NormalizedAdjacency => Some(OperatorKind::NormalizedLaplacian),
            OperatorKind::RenormalizedAdjacency => Some(OperatorKind::RenormalizedLaplacian),
            _ => None,
        }
    }

    /// Built-in kinds only; custom names are not parsed.
    pub const BUILTIN: [OperatorKind; 5] = [
        OperatorKind::UnnormalizedLaplacian,
        OperatorKind::NormalizedLaplacian,
        OperatorKind::RenormalizedLaplacian,
        OperatorKind::NormalizedAdjacency,
        OperatorKind::RenormalizedAdjacency,
    ];
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::BUILTIN
            .iter()
            .find(|k| k.name() == s)
            .cloned()
            .ok_or_else(|| Error::domain(format!("unknown operator kind {s:?}")))
    }
}

impl From<OperatorKind> for String {
    fn from(k: OperatorKind) -> String {
        k.name().to_string()
    }
}

impl From<String> for OperatorKind {
    fn from(s: String) -> Self {
        s.parse().unwrap_or(OperatorKind::Custom(s))
    }
}

/// A symmetric `|V| x |V|` matrix tagged with its kind and source graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOperator {
    kind: OperatorKind,
    matrix: Array2<f64>,
    graph_ref: u64,
}

impl GraphOperator {
    /// Wraps an arbitrary symmetric matrix defined on `g`'s nodes.
    pub fn custom(name: impl Into<String>, matrix: Array2<f64>, g: &Graph) -> Result<Self> {
        let n = g.n_nodes();
        if matrix.dim() != (n, n) {
            return Err(Error::domain(format!(
                "custom operator is {:?}, graph has {n} nodes",
                matrix.dim()
            )));
        }
        if let Some(((i, j), gap)) = max_asymmetry(&matrix) {
            if gap > 1e-12 {
                return Err(Error::domain(format!(
                    "custom operator is not symmetric: |M[{i},{j}] - M[{j},{i}]| = {gap:e}"
                )));
            }
        }
        Ok(GraphOperator {
            kind: OperatorKind::Custom(name.into()),
            matrix,
            graph_ref: g.fingerprint(),
        })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }

    pub fn graph_ref(&self) -> u64 {
        self.graph_ref
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.matrix)
    }
}

fn max_asymmetry(m: &Array2<f64>) -> Option<((usize, usize), f64)> {
    let n = m.nrows();
    let mut best = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (m[[i, j]] - m[[j, i]]).abs();
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some(((i, j), gap));
            }
        }
    }
    best
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn require_connected(g: &Graph) -> Result<()> {
    if !g.is_connected() {
        return Err(Error::domain(format!(
            "operators need a connected graph; this one has {} components",
            g.components().len()
        )));
    }
    Ok(())
}

fn require_no_isolated(g: &Graph) -> Result<()> {
    if let Some(i) = g.degrees().iter().position(|&d| d == 0) {
        return Err(Error::domain(format!(
            "node {i} is isolated; D^(-1/2) is undefined"
        )));
    }
    Ok(())
}

/// Builds `kind` on `g`. Custom kinds cannot be built from a graph alone.
pub fn build(g: &Graph, kind: OperatorKind) -> Result<GraphOperator> {
    require_connected(g)?;
    let n = g.n_nodes();
    let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
    let mut m = Array2::<f64>::zeros((n, n));
    match &kind {
        OperatorKind::UnnormalizedLaplacian => {
            for i in 0..n {
                m[[i, i]] = deg[i];
            }
            for &(i, j) in g.edges() {
                m[[i, j]] = -1.0;
                m[[j, i]] = -1.0;
            }
        }
        OperatorKind::NormalizedLaplacian | OperatorKind::NormalizedAdjacency => {
            require_no_isolated(g)?;
            let laplacian = kind == OperatorKind::NormalizedLaplacian;
            if laplacian {
                m.diag_mut().fill(1.0);
            }
            for &(i, j) in g.edges() {
                let w = 1.0 / (deg[i] * deg[j]).sqrt();
                let v = if laplacian { -w } else { w };
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        OperatorKind::RenormalizedLaplacian | OperatorKind::RenormalizedAdjacency => {
            let laplacian = kind == OperatorKind::RenormalizedLaplacian;
            for i in 0..n {
                let self_w = 1.0 / (deg[i] + 1.0);
                m[[i, i]] = if laplacian { 1.0 - self_w } else { self_w };
            }
            for &(i, j) in g.edges() {
                let w = 1.0 / ((deg[i] + 1.0) * (deg[j] + 1.0)).sqrt();
                let v = if laplacian { -w } else { w };
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        OperatorKind::Custom(name) => {
            return Err(Error::domain(format!(
                "custom operator {name:?} must be supplied as a matrix"
            )))
        }
    }
    Ok(GraphOperator {
        kind,
        matrix: m,
        graph_ref: g.fingerprint(),
    })
}

/// `P Q - Q P`.
pub fn commutator(p: &GraphOperator, q: &GraphOperator) -> Result<Array2<f64>> {
    if p.dim() != q.dim() {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    if p.graph_ref != q.graph_ref {
        return Err(Error::domain(format!(
            "operators {} and {} come from different graphs",
            p.kind, q.kind
        )));
    }
    Ok(matrix_commutator(&p.matrix, &q.matrix))
}

pub fn matrix_commutator(p: &Array2<f64>, q: &Array2<f64>) -> Array2<f64> {
    p.dot(q) - q.dot(p)
}

/// `‖[P, Q]‖_F <= tol · ‖P‖_F · ‖Q‖_F`.
pub fn is_commuting_pair(p: &GraphOperator, q: &GraphOperator, tol: f64) -> Result<bool> {
    let c = commutator(p, q)?;
    Ok(frobenius(&c) <= tol * p.frobenius_norm() * q.frobenius_norm())
}

/// The three terms of the Leibniz expansion of `[Δ_norm, Δ]`:
/// `-D^{-1/2}[A,D]D^{-1/2}`, `[D^{-1/2},A] A D^{-1/2}` and `D^{-1/2} A [D^{-1/2},A]`.
pub fn leibniz_terms(g: &Graph) -> Result<[Array2<f64>; 3]> {
    require_connected(g)?;
    require_no_isolated(g)?;
    let a = g.adjacency_matrix();
    let d = g.degree_matrix();
    let d_isqrt = Array2::from_diag(&Array1::from_iter(
        g.degrees().iter().map(|&k| 1.0 / (k as f64).sqrt()),
    ));
    let ad = matrix_commutator(&a, &d);
    let dsa = matrix_commutator(&d_isqrt, &a);
    let t1 = -d_isqrt.dot(&ad).dot(&d_isqrt);
    let t2 = dsa.dot(&a).dot(&d_isqrt);
    let t3 = d_isqrt.dot(&a).dot(&dsa);
    Ok([t1, t2, t3])
}

/// Unit vector spanning the kernel of a Laplacian kind on a connected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGenerator {
    pub vector: Array1<f64>,
    pub operator_kind: OperatorKind,
}

impl KernelGenerator {
    /// Orthogonal projector `v vᵀ` onto the kernel.
    pub fn projector(&self) -> Array2<f64> {
        let v = self.vector.view().insert_axis(ndarray::Axis(1));
        v.dot(&v.t())
    }
}

pub fn kernel_generator(g: &Graph, kind: OperatorKind) -> Result<KernelGenerator> {
    require_connected(g)?;
    let raw: Array1<f64> = match kind {
        OperatorKind::UnnormalizedLaplacian => Array1::ones(g.n_nodes()),
        OperatorKind::NormalizedLaplacian => {
            require_no_isolated(g)?;
            g.degrees().iter().map(|&d| (d as f64).sqrt()).collect()
        }
        OperatorKind::RenormalizedLaplacian => g
            .degrees()
            .iter()
            .map(|&d| (d as f64 + 1.0).sqrt())
            .collect(),
        ref other => {
            return Err(Error::domain(format!(
                "kernel generator is defined for Laplacian kinds, not {other}"
            )))
        }
    };
    let norm = raw.dot(&raw).sqrt();
    Ok(KernelGenerator {
        vector: raw / norm,
        operator_kind: kind,
    })
}

/// The degree matrix `D` and adjacency `A` as custom operators, for commutator checks.
pub fn degree_operator(g: &Graph) -> GraphOperator {
    GraphOperator::custom("degree", g.degree_matrix(), g).expect("diagonal is symmetric")
}

pub fn adjacency_operator(g: &Graph) -> GraphOperator {
    GraphOperator::custom("adjacency", g.adjacency_matrix(), g).expect("adjacency is symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn path_laplacian() {
        let op = build(&Graph::path(3), OperatorKind::UnnormalizedLaplacian).unwrap();
        assert_eq!(
            op.matrix(),
            &array![[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]]
        );
    }

    #[test]
    fn degree_matrix_of_pendant_triangle() {
        let g = Graph::triangle_with_pendant();
        assert_eq!(
            g.degree_matrix(),
            Array2::from_diag(&array![3.0, 2.0, 2.0, 1.0])
        );
    }

    #[test]
    fn regular_normalized_laplacian_is_scaled() {
        let g = Graph::complete(4);
        let l = build(&g, OperatorKind::UnnormalizedLaplacian).unwrap();
        let ln = build(&g, OperatorKind::NormalizedLaplacian).unwrap();
        assert_abs_diff_eq!(ln.matrix(), &(l.matrix() / 3.0), epsilon = 1e-15);
        assert!(ln.matrix().diag().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn commutator_zero_on_regular() {
        let g = Graph::complete(4);
        let l = build(&g, OperatorKind::UnnormalizedLaplacian).unwrap();
        let ln = build(&g, OperatorKind::NormalizedLaplacian).unwrap();
        assert!(frobenius(&commutator(&ln, &l).unwrap()) <= 1e-12);
        assert!(is_commuting_pair(&ln, &l, DEFAULT_COMMUTATION_TOL).unwrap());
        assert!(is_commuting_pair(&l, &l, DEFAULT_COMMUTATION_TOL).unwrap());
    }

    #[test]
    fn adjacency_and_degree_do_not_commute() {
        let g = Graph::triangle_with_pendant();
        let a = adjacency_operator(&g);
        let d = degree_operator(&g);
        let ad = a.matrix().dot(d.matrix());
        let da = d.matrix().dot(a.matrix());
        assert_eq!(
            ad,
            array![
                [0.0, 2.0, 2.0, 1.0],
                [3.0, 0.0, 2.0, 0.0],
                [3.0, 2.0, 0.0, 0.0],
                [3.0, 0.0, 0.0, 0.0]
            ]
        );
        assert_eq!(
            da,
            array![
                [0.0, 3.0, 3.0, 3.0],
                [2.0, 0.0, 2.0, 0.0],
                [2.0, 2.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0]
            ]
        );
        let c = commutator(&a, &d).unwrap();
        assert_eq!(c[[0, 1]], -1.0);
    }

    #[test]
    fn laplacians_of_pendant_triangle_do_not_commute() {
        let g = Graph::triangle_with_pendant();
        let l = build(&g, OperatorKind::UnnormalizedLaplacian).unwrap();
        let ln = build(&g, OperatorKind::NormalizedLaplacian).unwrap();
        // oracle: explicit triple loop products
        let (p, q) = (ln.matrix(), l.matrix());
        let mut c = Array2::<f64>::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    c[[i, j]] += p[[i, k]] * q[[k, j]] - q[[i, k]] * p[[k, j]];
                }
            }
        }
        let lib = commutator(&ln, &l).unwrap();
        assert_abs_diff_eq!(lib, c, epsilon = 1e-14);
        assert!(frobenius(&c) > 1e-6);
        assert!(!is_commuting_pair(&ln, &l, DEFAULT_COMMUTATION_TOL).unwrap());
    }

    #[test]
    fn leibniz_expansion_sums_to_commutator() {
        let g = Graph::triangle_with_pendant();
        let l = build(&g, OperatorKind::UnnormalizedLaplacian).unwrap();
        let ln = build(&g, OperatorKind::NormalizedLaplacian).unwrap();
        let [t1, t2, t3] = leibniz_terms(&g).unwrap();
        assert_abs_diff_eq!(t1 + t2 + t3, commutator(&ln, &l).unwrap(), epsilon = 1e-13);
    }

    #[test]
    fn commutator_checks_shapes_and_sources() {
        let a = build(&Graph::path(3), OperatorKind::UnnormalizedLaplacian).unwrap();
        let b = build(&Graph::path(4), OperatorKind::UnnormalizedLaplacian).unwrap();
        assert!(matches!(commutator(&a, &b), Err(Error::Domain(_))));
        let c = build(&Graph::complete(3), OperatorKind::UnnormalizedLaplacian).unwrap();
        assert!(matches!(commutator(&a, &c), Err(Error::Domain(_))));
    }

    #[test]
    fn kernel_generators() {
        let p3 = Graph::path(3);
        let k = kernel_generator(&p3, OperatorKind::NormalizedLaplacian).unwrap();
        let expected = array![1.0, 2f64.sqrt(), 1.0] / 2.0;
        assert_abs_diff_eq!(k.vector, expected, epsilon = 1e-15);
        let ln = build(&p3, OperatorKind::NormalizedLaplacian).unwrap();
        assert!(ln.matrix().dot(&k.vector).iter().all(|v| v.abs() < 1e-9));

        let k = kernel_generator(&p3, OperatorKind::UnnormalizedLaplacian).unwrap();
        assert!(k.vector.iter().all(|&v| (v - 1.0 / 3f64.sqrt()).abs() < 1e-15));

        let k = kernel_generator(&Graph::complete(4), OperatorKind::RenormalizedLaplacian).unwrap();
        assert!(k.vector.iter().all(|&v| (v - 0.5).abs() < 1e-15));

        assert!(kernel_generator(&p3, OperatorKind::NormalizedAdjacency).is_err());
    }

    #[test]
    fn rejects_disconnected_and_isolated() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            build(&g, OperatorKind::UnnormalizedLaplacian),
            Err(Error::Domain(_))
        ));
        let single = Graph::from_edges(1, []).unwrap();
        assert!(build(&single, OperatorKind::NormalizedLaplacian).is_err());
        assert!(build(&single, OperatorKind::RenormalizedLaplacian).is_ok());
    }

    #[test]
    fn renormalized_pair_is_complementary() {
        let g = Graph::triangle_with_pendant();
        let lt = build(&g, OperatorKind::RenormalizedLaplacian).unwrap();
        let at = build(&g, OperatorKind::RenormalizedAdjacency).unwrap();
        let eye = Array2::<f64>::eye(4);
        assert_abs_diff_eq!(at.matrix(), &(&eye - lt.matrix()), epsilon = 1e-15);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in OperatorKind::BUILTIN {
            assert_eq!(k.name().parse::<OperatorKind>().unwrap(), k);
        }
        assert!("nope".parse::<OperatorKind>().is_err());
    }
}
