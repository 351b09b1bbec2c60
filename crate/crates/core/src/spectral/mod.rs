//! Eigenbases of graph operators and the energy of normalized-Laplacian
//! filters measured against the unnormalized Laplacian.
//!
//! For a filter `f` applied through `Δ_norm` (eigenpairs `ξ`), the Δ-energy
//! of the output expands over both eigenbases:
//!
//! ```text
//! E_Δ(f(Δ_norm) X) = Σ_ω ω Σ_{ω',ω''} Σ_{ξ,ξ'} ⟨ω'|ξ⟩⟨ξ|ω⟩⟨ω|ξ'⟩⟨ξ'|ω''⟩ f(ξ) f(ξ') ⟨Xᵀω', Xᵀω''⟩
//! ```
//!
//! The overlaps `⟨ξ|ω⟩` form the [`SuperpositionMatrix`]. The contracted
//! evaluation folds the `ξ` sums into `H = Sᵀ diag(f) S` (the filter written in
//! the Δ basis) and the signal into the Gram matrix `G = QᵀX XᵀQ`, leaving
//! `Σ_ω ω (H G H)_{ωω}`. The literal five-index sum is kept for small graphs.

pub mod eigen;

use std::ops::Range;

use ndarray::{Array1, Array2, Axis};

use crate::energy::{quadratic_trace, SignalMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operators::{build, GraphOperator, OperatorKind};

/// Relative eigenvalue gap below which eigenvalues are treated as one cluster.
pub const CLUSTER_GAP: f64 = 1e-9;
/// Largest graph the literal five-index reference sum accepts.
pub const LITERAL_SUM_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Array1<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: Array2<f64>,
    pub operator_kind: OperatorKind,
}

pub fn eigendecompose(op: &GraphOperator) -> Result<SpectralDecomposition> {
    let (eigenvalues, eigenvectors) = eigen::symmetric_eigen(op.matrix())?;
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        operator_kind: op.kind().clone(),
    })
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.eigenvectors * &self.eigenvalues.view().insert_axis(Axis(0));
        scaled.dot(&self.eigenvectors.t())
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Index ranges of eigenvalue clusters (consecutive gaps below
    /// `CLUSTER_GAP · ‖M‖₂`).
    pub fn clusters(&self) -> Vec<Range<usize>> {
        let n = self.dim();
        let tol = CLUSTER_GAP * self.spectral_norm().max(1.0);
        let mut out = Vec::new();
        let mut start = 0;
        for b in 1..=n {
            if b == n || self.eigenvalues[b] - self.eigenvalues[b - 1] >= tol {
                out.push(start..b);
                start = b;
            }
        }
        out
    }

    /// Orthogonal projector onto the span of eigenvectors in `range`.
    pub fn projector(&self, range: Range<usize>) -> Array2<f64> {
        let q = self.eigenvectors.slice(ndarray::s![.., range]);
        q.dot(&q.t())
    }

    /// Mean eigenvalue over a cluster.
    pub fn cluster_value(&self, range: Range<usize>) -> f64 {
        let len = range.len() as f64;
        self.eigenvalues.slice(ndarray::s![range]).sum() / len
    }
}

/// `S[a][b] = ⟨q^a_a | q^b_b⟩`: rows follow the first basis, columns the second.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionMatrix {
    pub entries: Array2<f64>,
    pub row_basis_kind: OperatorKind,
    pub col_basis_kind: OperatorKind,
}

pub fn superposition(
    dec_a: &SpectralDecomposition,
    dec_b: &SpectralDecomposition,
) -> Result<SuperpositionMatrix> {
    if dec_a.dim() != dec_b.dim() {
        return Err(Error::domain(format!(
            "decompositions have dimensions {} and {}",
            dec_a.dim(),
            dec_b.dim()
        )));
    }
    Ok(SuperpositionMatrix {
        entries: dec_a.eigenvectors.t().dot(&dec_b.eigenvectors),
        row_basis_kind: dec_a.operator_kind.clone(),
        col_basis_kind: dec_b.operator_kind.clone(),
    })
}

/// Spectral filter evaluated on operator eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    /// Coefficients in ascending powers: `c0 + c1 λ + c2 λ² + …`.
    Polynomial(Vec<f64>),
    /// `(1 − λ)^k`, i.e. `k` applications of `I − L`.
    PowerOfPropagation(u32),
}

impl FilterSpec {
    pub fn identity() -> Self {
        FilterSpec::Polynomial(vec![1.0])
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            FilterSpec::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * lambda + ci),
            FilterSpec::PowerOfPropagation(k) => (1.0 - lambda).powi(*k as i32),
        }
    }

    /// Ascending coefficients; `(1 − λ)^k` expands binomially.
    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            FilterSpec::Polynomial(c) => c.clone(),
            FilterSpec::PowerOfPropagation(k) => {
                let k = *k as usize;
                let mut c = vec![0.0; k + 1];
                let mut binom = 1.0;
                for (i, ci) in c.iter_mut().enumerate() {
                    *ci = if i % 2 == 0 { binom } else { -binom };
                    binom = binom * (k - i) as f64 / (i + 1) as f64;
                }
                c
            }
        }
    }

    /// `f(M) X` without forming `f(M)`.
    pub fn apply(&self, m: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
        match self {
            FilterSpec::Polynomial(c) => {
                if c.is_empty() {
                    return Array2::zeros(x.raw_dim());
                }
                let mut y = x * c[c.len() - 1];
                for &ci in c.iter().rev().skip(1) {
                    y = m.dot(&y) + &(x * ci);
                }
                y
            }
            FilterSpec::PowerOfPropagation(k) => {
                let mut y = x.clone();
                for _ in 0..*k {
                    y = &y - &m.dot(&y);
                }
                y
            }
        }
    }
}

/// Both eigenbases of a graph plus their superposition matrix, reusable
/// across signals and filters.
#[derive(Debug, Clone)]
pub struct FilterExpansion {
    pub laplacian: SpectralDecomposition,
    pub normalized: SpectralDecomposition,
    /// Rows: `Δ_norm` eigenvectors `ξ`; columns: `Δ` eigenvectors `ω`.
    pub overlap: SuperpositionMatrix,
    laplacian_matrix: Array2<f64>,
    normalized_matrix: Array2<f64>,
}

impl FilterExpansion {
    pub fn new(g: &Graph) -> Result<Self> {
        let l = build(g, OperatorKind::UnnormalizedLaplacian)?;
        let ln = build(g, OperatorKind::NormalizedLaplacian)?;
        let laplacian = eigendecompose(&l)?;
        let normalized = eigendecompose(&ln)?;
        let overlap = superposition(&normalized, &laplacian)?;
        Ok(FilterExpansion {
            laplacian,
            normalized,
            overlap,
            laplacian_matrix: l.into_matrix(),
            normalized_matrix: ln.into_matrix(),
        })
    }

    fn check(&self, x: &SignalMatrix) -> Result<()> {
        if x.n_rows() != self.laplacian.dim() {
            return Err(Error::domain(format!(
                "signal has {} rows, graph has {} nodes",
                x.n_rows(),
                self.laplacian.dim()
            )));
        }
        Ok(())
    }

    fn filter_values(&self, f: &FilterSpec) -> Array1<f64> {
        self.normalized.eigenvalues.mapv(|xi| f.eval(xi))
    }

    /// Contracted evaluation of the five-index expansion.
    pub fn energy(&self, x0: &SignalMatrix, f: &FilterSpec) -> Result<f64> {
        self.check(x0)?;
        let s = &self.overlap.entries;
        let fx = self.filter_values(f);
        // H = Sᵀ diag(f(ξ)) S
        let h = s.t().dot(&(s * &fx.view().insert_axis(Axis(1))));
        let p = self.laplacian.eigenvectors.t().dot(x0.values());
        let gram = p.dot(&p.t());
        let hgh = h.dot(&gram).dot(&h);
        Ok(self
            .laplacian
            .eigenvalues
            .iter()
            .zip(hgh.diag().iter())
            .map(|(w, v)| w * v)
            .sum())
    }

    /// The five nested sums written out. `O(n⁵)`; limited to small graphs.
    pub fn energy_literal(&self, x0: &SignalMatrix, f: &FilterSpec) -> Result<f64> {
        self.check(x0)?;
        let n = self.laplacian.dim();
        if n > LITERAL_SUM_MAX_N {
            return Err(Error::domain(format!(
                "literal sum is limited to {LITERAL_SUM_MAX_N} nodes, got {n}"
            )));
        }
        let s = &self.overlap.entries; // s[[xi, omega]] = ⟨ξ|ω⟩
        let fx = self.filter_values(f);
        let p = self.laplacian.eigenvectors.t().dot(x0.values());
        let mut total = 0.0;
        for w in 0..n {
            let omega = self.laplacian.eigenvalues[w];
            for w1 in 0..n {
                for w2 in 0..n {
                    let signal = p.row(w1).dot(&p.row(w2));
                    for a in 0..n {
                        for b in 0..n {
                            total += omega
                                * s[[a, w1]]
                                * s[[a, w]]
                                * s[[b, w]]
                                * s[[b, w2]]
                                * fx[a]
                                * fx[b]
                                * signal;
                        }
                    }
                }
            }
        }
        Ok(total)
    }

    /// `tr(Yᵀ Δ Y)` with `Y = f(Δ_norm) X`.
    pub fn energy_direct(&self, x0: &SignalMatrix, f: &FilterSpec) -> Result<f64> {
        self.check(x0)?;
        let y = f.apply(&self.normalized_matrix, x0.values());
        quadratic_trace(&self.laplacian_matrix, &y)
    }
}

/// `tr((f(Δ_norm)X⁰)ᵀ Δ (f(Δ_norm)X⁰))` through the eigenbasis expansion.
pub fn energy_via_superposition(g: &Graph, x0: &SignalMatrix, f: &FilterSpec) -> Result<f64> {
    FilterExpansion::new(g)?.energy(x0, f)
}

/// Regular graphs only: `Σ_ω ω f(ω/d)² ‖q_ωᵀ X⁰‖²`.
pub fn regular_reduction(g: &Graph, x0: &SignalMatrix, f: &FilterSpec) -> Result<f64> {
    if !g.is_regular() || g.n_nodes() == 0 {
        return Err(Error::domain("reduction needs a regular graph"));
    }
    let d = g.degree(0) as f64;
    let dec = eigendecompose(&build(g, OperatorKind::UnnormalizedLaplacian)?)?;
    let p = dec.eigenvectors.t().dot(x0.values());
    Ok(dec
        .eigenvalues
        .iter()
        .zip(p.rows())
        .map(|(&w, row)| w * f.eval(w / d).powi(2) * row.dot(&row))
        .sum())
}

/// `1 − max_c ‖P_c v̂‖²` over eigenvalue clusters `c` of `dec`. With simple
/// eigenvalues this is `1 − max_b ⟨v̂, q_b⟩²`.
pub fn spectral_dispersion(v: &Array1<f64>, dec: &SpectralDecomposition) -> Result<f64> {
    if v.len() != dec.dim() {
        return Err(Error::domain(format!(
            "vector has length {}, basis has dimension {}",
            v.len(),
            dec.dim()
        )));
    }
    let norm = v.dot(v).sqrt();
    if norm == 0.0 {
        return Err(Error::domain("dispersion of the zero vector is undefined"));
    }
    let coeffs = dec.eigenvectors.t().dot(&(v / norm));
    let best = dec
        .clusters()
        .into_iter()
        .map(|r| coeffs.slice(ndarray::s![r]).iter().map(|c| c * c).sum::<f64>())
        .fold(0.0f64, f64::max);
    Ok((1.0 - best).max(0.0))
}

/// `(λ_b, λ_b ‖q_bᵀ X‖²)` for every eigenpair; the components sum to `tr(XᵀMX)`.
pub fn per_frequency_energy(
    x: &SignalMatrix,
    dec: &SpectralDecomposition,
) -> Result<Vec<(f64, f64)>> {
    if x.n_rows() != dec.dim() {
        return Err(Error::domain(format!(
            "signal has {} rows, basis has dimension {}",
            x.n_rows(),
            dec.dim()
        )));
    }
    let p = dec.eigenvectors.t().dot(x.values());
    Ok(dec
        .eigenvalues
        .iter()
        .zip(p.rows())
        .map(|(&l, row)| (l, l * row.dot(&row)))
        .collect())
}

/// Same as [`per_frequency_energy`] but summed within eigenvalue clusters,
/// which makes the result independent of the basis chosen inside a cluster.
pub fn per_cluster_energy(
    x: &SignalMatrix,
    dec: &SpectralDecomposition,
) -> Result<Vec<(f64, f64)>> {
    let comps = per_frequency_energy(x, dec)?;
    Ok(dec
        .clusters()
        .into_iter()
        .map(|r| {
            let value = dec.cluster_value(r.clone());
            (value, comps[r].iter().map(|(_, e)| e).sum())
        })
        .collect())
}

/// A `Δ_norm` eigenvector whose Δ-energy is spread over several distinct
/// Δ frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionWitness {
    pub eigen_index: usize,
    pub eigenvalue: f64,
    /// `(Δ frequency, energy)` for clusters carrying energy above the threshold.
    pub spread: Vec<(f64, f64)>,
}

/// Searches the `Δ_norm` eigenvectors for one whose Δ-energy carries more
/// than `threshold` (relative to its total) at two or more Δ frequencies.
/// Since `f(Δ_norm) ξ = f(ξ) ξ`, any nonzero filter value keeps the spread.
pub fn dispersion_witness(g: &Graph, threshold: f64) -> Result<Option<DispersionWitness>> {
    let exp = FilterExpansion::new(g)?;
    for (a, &xi) in exp.normalized.eigenvalues.iter().enumerate() {
        let v = exp.normalized.eigenvectors.column(a).to_owned();
        let x = SignalMatrix::from_column(v)?;
        let parts = per_cluster_energy(&x, &exp.laplacian)?;
        let total: f64 = parts.iter().map(|(_, e)| e).sum();
        if total <= 0.0 {
            continue;
        }
        let spread: Vec<_> = parts.into_iter().filter(|(_, e)| *e > threshold * total).collect();
        if spread.len() >= 2 {
            return Ok(Some(DispersionWitness {
                eigen_index: a,
                eigenvalue: xi,
                spread,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::kernel_generator;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn dec(g: &Graph, kind: OperatorKind) -> SpectralDecomposition {
        eigendecompose(&build(g, kind).unwrap()).unwrap()
    }

    #[test]
    fn normalized_kernel_is_sqrt_degree() {
        let g = Graph::triangle_with_pendant();
        let d = dec(&g, OperatorKind::NormalizedLaplacian);
        assert!(d.eigenvalues[0].abs() < 1e-12);
        assert!(d.eigenvalues[1] > 1e-6);
        let k = kernel_generator(&g, OperatorKind::NormalizedLaplacian).unwrap();
        let overlap = d.eigenvectors.column(0).dot(&k.vector).abs();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bipartite_adjacency_has_minus_one() {
        for g in [Graph::path(3), Graph::cycle(4)] {
            let d = dec(&g, OperatorKind::NormalizedAdjacency);
            assert!((d.eigenvalues[0] + 1.0).abs() < 1e-12);
        }
        let d = dec(&Graph::cycle(3), OperatorKind::NormalizedAdjacency);
        assert!(d.eigenvalues[0] > -1.0 + 1e-6);
    }

    #[test]
    fn self_superposition_is_identity() {
        let g = Graph::triangle_with_pendant();
        let d = dec(&g, OperatorKind::UnnormalizedLaplacian);
        let s = superposition(&d, &d).unwrap();
        assert_abs_diff_eq!(s.entries, Array2::eye(4), epsilon = 1e-12);
    }

    #[test]
    fn regular_superposition_preserves_eigenspaces() {
        let g = Graph::complete(4);
        let a = dec(&g, OperatorKind::NormalizedLaplacian);
        let b = dec(&g, OperatorKind::UnnormalizedLaplacian);
        let s = superposition(&a, &b).unwrap();
        // block-orthogonal on the clusters {0} and {3,3,3}: no mass across blocks
        assert!(s.entries[[0, 0]].abs() > 1.0 - 1e-12);
        for j in 1..4 {
            assert!(s.entries[[0, j]].abs() < 1e-12);
            assert!(s.entries[[j, 0]].abs() < 1e-12);
        }
        for c in a.clusters().into_iter().zip(b.clusters()) {
            assert_abs_diff_eq!(a.projector(c.0), b.projector(c.1), epsilon = 1e-12);
        }
    }

    #[test]
    fn non_commuting_superposition_has_spread_rows() {
        let g = Graph::triangle_with_pendant();
        let s = superposition(
            &dec(&g, OperatorKind::NormalizedLaplacian),
            &dec(&g, OperatorKind::UnnormalizedLaplacian),
        )
        .unwrap();
        let spread_row = s
            .entries
            .rows()
            .into_iter()
            .any(|r| r.iter().filter(|v| v.abs() > 0.1).count() >= 2);
        assert!(spread_row);
        let sst = s.entries.dot(&s.entries.t());
        assert_abs_diff_eq!(sst, Array2::eye(4), epsilon = 1e-12);
    }

    #[test]
    fn polynomial_and_power_agree() {
        let f = FilterSpec::PowerOfPropagation(3);
        assert_eq!(f.coefficients(), vec![1.0, -3.0, 3.0, -1.0]);
        let p = FilterSpec::Polynomial(f.coefficients());
        for l in [0.0, 0.3, 1.0, 1.7, 2.0] {
            assert!((f.eval(l) - p.eval(l)).abs() < 1e-14);
        }
        let m = array![[0.5, 0.2], [0.2, 1.5]];
        let x = array![[1.0, -1.0], [2.0, 0.5]];
        assert_abs_diff_eq!(f.apply(&m, &x), p.apply(&m, &x), epsilon = 1e-13);
    }

    #[test]
    fn identity_filter_leaves_energy_unchanged() {
        let g = Graph::triangle_with_pendant();
        let x = SignalMatrix::gaussian(4, 2, 4);
        let e = energy_via_superposition(&g, &x, &FilterSpec::identity()).unwrap();
        let l = build(&g, OperatorKind::UnnormalizedLaplacian).unwrap();
        let direct = crate::energy::trace_energy(&l, &x).unwrap();
        assert!((e - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn propagation_filter_matches_direct_on_pendant_triangle() {
        let g = Graph::triangle_with_pendant();
        let x = SignalMatrix::gaussian(4, 3, 2024);
        let exp = FilterExpansion::new(&g).unwrap();
        let f = FilterSpec::PowerOfPropagation(2);
        let direct = exp.energy_direct(&x, &f).unwrap();
        let contracted = exp.energy(&x, &f).unwrap();
        let literal = exp.energy_literal(&x, &f).unwrap();
        assert!((contracted - direct).abs() <= 1e-9 * direct.abs());
        assert!((literal - direct).abs() <= 1e-9 * direct.abs());
    }

    #[test]
    fn regular_reduction_matches_expansion() {
        let g = Graph::complete(4);
        let x = SignalMatrix::gaussian(4, 2, 77);
        for k in 0..5 {
            let f = FilterSpec::PowerOfPropagation(k);
            let full = energy_via_superposition(&g, &x, &f).unwrap();
            let reduced = regular_reduction(&g, &x, &f).unwrap();
            assert!((full - reduced).abs() <= 1e-8 * full.abs().max(1e-300));
        }
        assert!(regular_reduction(&Graph::path(3), &x, &FilterSpec::identity()).is_err());
    }

    #[test]
    fn dispersion_examples() {
        let g = Graph::triangle_with_pendant();
        let d = dec(&g, OperatorKind::UnnormalizedLaplacian);
        let v = d.eigenvectors.column(2).to_owned();
        assert!(spectral_dispersion(&v, &d).unwrap() < 1e-12);

        let k = kernel_generator(&g, OperatorKind::NormalizedLaplacian).unwrap();
        let disp = spectral_dispersion(&k.vector, &d).unwrap();
        // oracle: squared projections onto each Δ eigenvector
        let max_proj = (0..4)
            .map(|b| d.eigenvectors.column(b).dot(&k.vector).powi(2))
            .fold(0.0, f64::max);
        assert!((disp - (1.0 - max_proj)).abs() < 1e-12);
        assert!(disp > 0.0 && disp < 1.0);

        let k4 = Graph::complete(4);
        let d4 = dec(&k4, OperatorKind::UnnormalizedLaplacian);
        let kv = kernel_generator(&k4, OperatorKind::NormalizedLaplacian).unwrap();
        assert!(spectral_dispersion(&kv.vector, &d4).unwrap() < 1e-12);

        assert!(spectral_dispersion(&Array1::zeros(4), &d).is_err());
    }

    #[test]
    fn per_frequency_components() {
        let g = Graph::path(3);
        let d = dec(&g, OperatorKind::UnnormalizedLaplacian);
        let top = SignalMatrix::from_column(d.eigenvectors.column(2).to_owned()).unwrap();
        let comps = per_frequency_energy(&top, &d).unwrap();
        assert!((comps[2].1 - 3.0).abs() < 1e-12);
        assert!(comps[0].1.abs() < 1e-12 && comps[1].1.abs() < 1e-12);

        let ones = SignalMatrix::constant(3, 1.0);
        assert!(per_frequency_energy(&ones, &d).unwrap().iter().all(|(_, e)| e.abs() < 1e-12));

        let x = SignalMatrix::gaussian(3, 2, 8);
        let total: f64 = per_frequency_energy(&x, &d).unwrap().iter().map(|(_, e)| e).sum();
        let l = build(&g, OperatorKind::UnnormalizedLaplacian).unwrap();
        let tr = crate::energy::trace_energy(&l, &x).unwrap();
        assert!((total - tr).abs() <= 1e-9 * tr);
        let neighbour =
            crate::energy::dirichlet_energy(&g, &x, &OperatorKind::UnnormalizedLaplacian, false).unwrap();
        assert!((2.0 * total - neighbour).abs() <= 1e-9 * neighbour);
    }

    #[test]
    fn star_has_no_dispersion_witness() {
        // Every Δ_norm eigenvector of a star lies in span{𝟏, q} for a single
        // Δ eigenvector q of each nonzero frequency, so nothing spreads.
        assert!(dispersion_witness(&Graph::star(3), 1e-9).unwrap().is_none());
        let w = dispersion_witness(&Graph::triangle_with_pendant(), 1e-9).unwrap().unwrap();
        assert!(w.spread.len() >= 2);
    }
}
