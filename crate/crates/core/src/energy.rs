//! Dirichlet energies and trace-induced node-similarity measures.
//!
//! [`dirichlet_energy`] evaluates the neighbour double sum
//! `Σ_i Σ_{j∈N_i} ‖X_i/√(d_i+s) − X_j/√(d_j+s)‖²` (`s = 0` except for the
//! unnormalized kind, which uses raw differences). Since every edge is
//! visited from both endpoints this is exactly `2·tr(XᵀLX)`; the trace form
//! itself is [`trace_energy`].
//!
//! Measures built from a [`MeasureDescriptor`] are `c·tr(XᵀMX)` or its square
//! root. The axiom checkers decide kernel membership on the quadratic value,
//! scaled by `‖X‖_F²`, so the square root does not move the zero threshold.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operators::{frobenius, GraphOperator, OperatorKind};
use crate::rng;
use crate::spectral::eigen::symmetric_eigen;

/// Absolute zero tolerance for unit-Frobenius signals.
pub const DEFAULT_AXIOM_TOL: f64 = 1e-8;
/// Slack allowed on the triangle inequality.
pub const SUBADDITIVITY_SLACK: f64 = 1e-9;

/// Node-feature matrix, one row per node. All entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix(Array2<f64>);

impl SignalMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let cols = values.ncols().max(1);
            return Err(Error::numerical(format!(
                "non-finite signal entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(SignalMatrix(values))
    }

    /// Single column.
    pub fn from_column(v: Array1<f64>) -> Result<Self> {
        let n = v.len();
        SignalMatrix::new(v.into_shape_with_order((n, 1)).expect("column reshape"))
    }

    /// The scalar signal `c·𝟏`.
    pub fn constant(n: usize, c: f64) -> Self {
        SignalMatrix(Array2::from_elem((n, 1), c))
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        SignalMatrix(Array2::zeros((n, m)))
    }

    pub fn gaussian(n: usize, m: usize, seed: u64) -> Self {
        SignalMatrix(rng::gaussian_matrix(&mut rng::seeded(seed), n, m))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn n_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }

    /// True when every node carries the same row vector.
    pub fn is_constant(&self, tol: f64) -> bool {
        if self.n_rows() == 0 {
            return true;
        }
        let first = self.0.row(0);
        self.0
            .rows()
            .into_iter()
            .all(|r| r.iter().zip(first.iter()).all(|(a, b)| (a - b).abs() <= tol))
    }
}

fn check_rows(g: &Graph, x: &SignalMatrix) -> Result<()> {
    if x.n_rows() != g.n_nodes() {
        return Err(Error::domain(format!(
            "signal has {} rows for a graph with {} nodes",
            x.n_rows(),
            g.n_nodes()
        )));
    }
    Ok(())
}

fn degree_shift(kind: &OperatorKind) -> Result<Option<f64>> {
    match kind {
        OperatorKind::UnnormalizedLaplacian => Ok(None),
        OperatorKind::NormalizedLaplacian => Ok(Some(0.0)),
        OperatorKind::RenormalizedLaplacian => Ok(Some(1.0)),
        other => Err(Error::domain(format!(
            "Dirichlet energy needs a Laplacian kind, got {other}"
        ))),
    }
}

/// Neighbour double-sum Dirichlet energy, optionally divided by `|V|`.
pub fn dirichlet_energy(
    g: &Graph,
    x: &SignalMatrix,
    kind: &OperatorKind,
    include_volume_constant: bool,
) -> Result<f64> {
    let shift = degree_shift(kind)?;
    check_rows(g, x)?;
    let e = neighbour_sum(g, x.values(), shift);
    Ok(if include_volume_constant && g.n_nodes() > 0 {
        e / g.n_nodes() as f64
    } else {
        e
    })
}

/// `‖X_i/√a_i − X_j/√a_j‖²` is evaluated as `‖X_i − √(a_i/a_j)·X_j‖² / a_i`.
/// The two agree exactly in real arithmetic; the second form keeps the
/// ratio `E_Δ/E_Δnorm` exact on regular graphs, where `√(a_i/a_j) = 1`.
pub(crate) fn neighbour_sum(g: &Graph, x: &Array2<f64>, shift: Option<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..g.n_nodes() {
        let xi = x.row(i);
        let a_i = shift.map(|s| g.degree(i) as f64 + s);
        let mut node_sum = 0.0;
        for &j in g.neighbors(i) {
            let xj = x.row(j);
            let scale = match (a_i, shift) {
                (Some(ai), Some(s)) => {
                    let aj = g.degree(j) as f64 + s;
                    if ai == aj {
                        1.0
                    } else {
                        (ai / aj).sqrt()
                    }
                }
                _ => 1.0,
            };
            node_sum += xi
                .iter()
                .zip(xj.iter())
                .map(|(a, b)| {
                    let d = a - scale * b;
                    d * d
                })
                .sum::<f64>();
        }
        total += match a_i {
            Some(ai) => node_sum / ai,
            None => node_sum,
        };
    }
    total
}

/// `tr(Xᵀ M X)`.
pub fn trace_energy(op: &GraphOperator, x: &SignalMatrix) -> Result<f64> {
    quadratic_trace(op.matrix(), x.values())
}

pub(crate) fn quadratic_trace(m: &Array2<f64>, x: &Array2<f64>) -> Result<f64> {
    if m.nrows() != x.nrows() {
        return Err(Error::domain(format!(
            "matrix is {}x{}, signal has {} rows",
            m.nrows(),
            m.ncols(),
            x.nrows()
        )));
    }
    if x.ncols() == 0 {
        return Ok(0.0);
    }
    let mx = m.dot(x);
    Ok(mx.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
}

/// Closed form of the normalized energy of `c·𝟏`:
/// `c² Σ_i Σ_{j∈N_i} (1/√(d_i+s) − 1/√(d_j+s))²`.
pub fn constant_signal_energy_closed_form(g: &Graph, kind: &OperatorKind, c: f64) -> Result<f64> {
    let s = match kind {
        OperatorKind::NormalizedLaplacian => 0.0,
        OperatorKind::RenormalizedLaplacian => 1.0,
        other => {
            return Err(Error::domain(format!(
                "closed form applies to normalized Laplacians, not {other}"
            )))
        }
    };
    let inv_sqrt = |i: usize| 1.0 / (g.degree(i) as f64 + s).sqrt();
    let mut total = 0.0;
    for i in 0..g.n_nodes() {
        for &j in g.neighbors(i) {
            total += (inv_sqrt(i) - inv_sqrt(j)).powi(2);
        }
    }
    Ok(c * c * total)
}

/// `μ(X) = normalization · tr(XᵀMX)`, square-rooted when `take_sqrt`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDescriptor {
    pub label: String,
    inducing_matrix: Array2<f64>,
    pub normalization: f64,
    pub take_sqrt: bool,
}

impl MeasureDescriptor {
    /// Validates symmetry and positive semidefiniteness (min eigenvalue ≥ −1e-9).
    pub fn new(
        label: impl Into<String>,
        inducing_matrix: Array2<f64>,
        normalization: f64,
        take_sqrt: bool,
    ) -> Result<Self> {
        let (n, m) = inducing_matrix.dim();
        if n != m {
            return Err(Error::domain(format!("inducing matrix is {n}x{m}")));
        }
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(Error::domain(format!(
                "normalization must be positive, got {normalization}"
            )));
        }
        let asym = (&inducing_matrix - &inducing_matrix.t())
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if asym > 1e-12 * frobenius(&inducing_matrix).max(1.0) {
            return Err(Error::domain(format!(
                "inducing matrix is not symmetric (max gap {asym:e})"
            )));
        }
        if n > 0 {
            let (values, _) = symmetric_eigen(&inducing_matrix)?;
            if values[0] < -1e-9 {
                return Err(Error::domain(format!(
                    "inducing matrix is not PSD: min eigenvalue {:e}",
                    values[0]
                )));
            }
        }
        Ok(MeasureDescriptor {
            label: label.into(),
            inducing_matrix,
            normalization,
            take_sqrt,
        })
    }

    pub fn from_operator(op: &GraphOperator, normalization: f64, take_sqrt: bool) -> Result<Self> {
        MeasureDescriptor::new(op.kind().name(), op.matrix().clone(), normalization, take_sqrt)
    }

    pub fn inducing_matrix(&self) -> &Array2<f64> {
        &self.inducing_matrix
    }

    pub fn dim(&self) -> usize {
        self.inducing_matrix.nrows()
    }

    /// Unrooted value `normalization · tr(XᵀMX)` without clamping.
    fn quadratic(&self, x: &Array2<f64>) -> Result<f64> {
        Ok(self.normalization * quadratic_trace(&self.inducing_matrix, x)?)
    }

    fn negative_slack(&self, x: &Array2<f64>) -> f64 {
        1e-9 * (self.normalization * frobenius(&self.inducing_matrix) * frobenius(x).powi(2)).max(1.0)
    }
}

pub fn measure(desc: &MeasureDescriptor, x: &SignalMatrix) -> Result<f64> {
    let q = desc.quadratic(x.values())?;
    if q < -desc.negative_slack(x.values()) {
        return Err(Error::numerical(format!(
            "negative trace {q:e}; inducing matrix is not PSD"
        )));
    }
    let q = q.max(0.0);
    Ok(if desc.take_sqrt { q.sqrt() } else { q })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxiomStatus {
    Holds,
    Violated,
    NotApplicable,
}

impl AxiomStatus {
    pub fn holds(self) -> bool {
        self == AxiomStatus::Holds
    }

    pub fn as_option(self) -> Option<bool> {
        match self {
            AxiomStatus::Holds => Some(true),
            AxiomStatus::Violated => Some(false),
            AxiomStatus::NotApplicable => None,
        }
    }
}

/// Which direction of "constant ⇔ zero" a witness breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom1Failure {
    /// A constant signal has positive measure.
    ConstantNotZero,
    /// A non-constant signal has zero measure.
    ZeroNotConstant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axiom1Report {
    pub status: AxiomStatus,
    pub witness: Option<SignalMatrix>,
    pub failure: Option<Axiom1Failure>,
    pub witness_measure: Option<f64>,
}

impl Axiom1Report {
    pub fn holds(&self) -> bool {
        self.status.holds()
    }
}

fn is_zero_quadratic(desc: &MeasureDescriptor, x: &Array2<f64>, tol: f64) -> Result<bool> {
    let scale = frobenius(x).powi(2);
    Ok(desc.quadratic(x)? <= tol * scale)
}

fn unit(mut x: Array2<f64>) -> Array2<f64> {
    let n = frobenius(&x);
    if n > 0.0 {
        x /= n;
    }
    x
}

fn column(v: &Array1<f64>) -> Array2<f64> {
    v.view().insert_axis(Axis(1)).to_owned()
}

/// Numerical check of "rows all equal ⇔ μ(X) = 0".
///
/// (⇒) constant signals `c·𝟏·eᵀ` for several `c` and random directions `e`.
/// (⇐) the degree-shaped signals `D^{∓1/2}𝟏`, any non-constant kernel
/// vectors of the inducing matrix, then `trials` random unit signals.
/// The first offending signal is returned as witness.
pub fn axiom1_check(
    desc: &MeasureDescriptor,
    g: &Graph,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<Axiom1Report> {
    let n = g.n_nodes();
    if desc.dim() != n {
        return Err(Error::domain(format!(
            "measure is {}-dimensional, graph has {n} nodes",
            desc.dim()
        )));
    }
    if n == 0 || trials == 0 {
        return Ok(Axiom1Report {
            status: AxiomStatus::NotApplicable,
            witness: None,
            failure: None,
            witness_measure: None,
        });
    }
    let mut rng = rng::seeded(seed);
    let violated = |x: Array2<f64>, failure| -> Result<Axiom1Report> {
        let sig = SignalMatrix::new(x)?;
        let value = measure(desc, &sig)?;
        Ok(Axiom1Report {
            status: AxiomStatus::Violated,
            witness: Some(sig),
            failure: Some(failure),
            witness_measure: Some(value),
        })
    };

    // (⇒)
    for &c in &[1.0, -0.5, 2.0, 10.0] {
        let scalar = Array2::from_elem((n, 1), c);
        if !is_zero_quadratic(desc, &scalar, tol)? {
            return violated(scalar, Axiom1Failure::ConstantNotZero);
        }
        let dir = unit(rng::gaussian_matrix(&mut rng, 1, 3));
        let wide = Array2::from_shape_fn((n, 3), |(_, k)| c * dir[[0, k]]);
        if !is_zero_quadratic(desc, &wide, tol)? {
            return violated(wide, Axiom1Failure::ConstantNotZero);
        }
    }

    // (⇐)
    let non_constant = |x: &Array2<f64>| {
        let s = SignalMatrix(x.clone());
        !s.is_constant(1e-12 * frobenius(x).max(1.0))
    };
    let mut candidates: Vec<Array2<f64>> = Vec::new();
    let sqrt_deg: Array1<f64> = g.degrees().iter().map(|&d| (d as f64).sqrt()).collect();
    if sqrt_deg.iter().all(|&v| v > 0.0) {
        candidates.push(unit(column(&sqrt_deg.mapv(|v| 1.0 / v))));
        candidates.push(unit(column(&sqrt_deg)));
    }
    let (values, vectors) = symmetric_eigen(desc.inducing_matrix())?;
    let zero_eig = tol * desc.normalization.recip();
    for (b, &lam) in values.iter().enumerate() {
        if lam <= zero_eig {
            candidates.push(column(&vectors.column(b).to_owned()));
        }
    }
    for _ in 0..trials {
        candidates.push(unit(rng::gaussian_matrix(&mut rng, n, 1)));
    }
    for x in candidates {
        if non_constant(&x) && is_zero_quadratic(desc, &x, tol)? {
            return violated(x, Axiom1Failure::ZeroNotConstant);
        }
    }

    Ok(Axiom1Report {
        status: AxiomStatus::Holds,
        witness: None,
        failure: None,
        witness_measure: None,
    })
}

/// Samples `trials` Gaussian pairs of shape `dims` and checks
/// `μ(X+Y) ≤ μ(X) + μ(Y) + 1e-9`. Only meaningful for square-rooted measures.
pub fn axiom2_check(
    desc: &MeasureDescriptor,
    trials: usize,
    dims: (usize, usize),
    seed: u64,
) -> Result<AxiomStatus> {
    if !desc.take_sqrt || dims.1 == 0 || trials == 0 {
        return Ok(AxiomStatus::NotApplicable);
    }
    if dims.0 != desc.dim() {
        return Err(Error::domain(format!(
            "signals have {} rows, measure is {}-dimensional",
            dims.0,
            desc.dim()
        )));
    }
    let mut rng = rng::seeded(seed);
    for _ in 0..trials {
        let scale_x: f64 = rng.random_range(0.1..10.0);
        let scale_y: f64 = rng.random_range(0.1..10.0);
        let x = rng::gaussian_matrix(&mut rng, dims.0, dims.1) * scale_x;
        let y = rng::gaussian_matrix(&mut rng, dims.0, dims.1) * scale_y;
        let sum = &x + &y;
        let (x, y, sum) = (SignalMatrix(x), SignalMatrix(y), SignalMatrix(sum));
        if measure(desc, &sum)? > measure(desc, &x)? + measure(desc, &y)? + SUBADDITIVITY_SLACK {
            return Ok(AxiomStatus::Violated);
        }
    }
    Ok(AxiomStatus::Holds)
}

fn conjugate(desc: &MeasureDescriptor, g: &Graph, shift: f64, tag: &str) -> Result<MeasureDescriptor> {
    if desc.dim() != g.n_nodes() {
        return Err(Error::domain(format!(
            "measure is {}-dimensional, graph has {} nodes",
            desc.dim(),
            g.n_nodes()
        )));
    }
    let scale: Vec<f64> = g
        .degrees()
        .iter()
        .map(|&d| d as f64 + shift)
        .map(|d| {
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::domain("isolated node: D^(-1/2) is undefined"))
            }
        })
        .collect::<Result<_>>()?;
    let m = Array2::from_shape_fn(desc.inducing_matrix.dim(), |(i, j)| {
        scale[i] * desc.inducing_matrix[[i, j]] * scale[j]
    });
    Ok(MeasureDescriptor {
        label: format!("{tag}({})", desc.label),
        inducing_matrix: m,
        normalization: desc.normalization,
        take_sqrt: desc.take_sqrt,
    })
}

/// `D^{-1/2} M D^{-1/2}`, same normalization and root flag.
pub fn normalize_conjugation(desc: &MeasureDescriptor, g: &Graph) -> Result<MeasureDescriptor> {
    conjugate(desc, g, 0.0, "conjugate")
}

/// `(D+I)^{-1/2} M (D+I)^{-1/2}`.
pub fn renormalize_conjugation(desc: &MeasureDescriptor, g: &Graph) -> Result<MeasureDescriptor> {
    conjugate(desc, g, 1.0, "conjugate-tilde")
}

/// Settings echoed into axiom reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub operator_kind: String,
    pub holds_axiom1: Option<bool>,
    pub holds_axiom2: Option<bool>,
    pub axiom1_failure: Option<Axiom1Failure>,
    #[serde(skip)]
    pub witness_signal: Option<SignalMatrix>,
    pub witness_measure: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    pub zero_tol: f64,
    pub subadditivity_slack: f64,
}

/// Runs both axiom checks with shared settings.
pub fn axiom_report(
    desc: &MeasureDescriptor,
    g: &Graph,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<AxiomReport> {
    let a1 = axiom1_check(desc, g, trials, tol, seed)?;
    let a2 = axiom2_check(desc, trials, (g.n_nodes(), 3), seed.wrapping_add(1))?;
    Ok(AxiomReport {
        operator_kind: desc.label.clone(),
        holds_axiom1: a1.status.as_option(),
        holds_axiom2: a2.as_option(),
        axiom1_failure: a1.failure,
        witness_signal: a1.witness,
        witness_measure: a1.witness_measure,
        seed,
        trials,
        zero_tol: tol,
        subadditivity_slack: SUBADDITIVITY_SLACK,
    })
}
