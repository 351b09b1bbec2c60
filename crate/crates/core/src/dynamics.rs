//! Deep linear GCN propagation `X ← A X (W)` with per-layer metrics,
//! exponential decay fits and the over-smoothing / over-shrinking verdict.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::energy::{dirichlet_energy, SignalMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operators::{build, frobenius, kernel_generator, OperatorKind};
use crate::rng;

/// Energies and norms at or below this are treated as lost to underflow.
pub const NUMERICAL_FLOOR: f64 = 1e-290;
/// Below this Frobenius norm kernel alignment is left undefined.
pub const ALIGNMENT_NORM_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    None,
    /// `X¹ = X⁰ W` with a single `m × out_dim` matrix, then plain propagation.
    FirstLayerOnly { out_dim: usize, seed: u64 },
    /// `X^k = A X^{k−1} W^k`; `dims[k−1]` is the output width of layer `k`.
    PerLayer { dims: Vec<usize>, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub operator_kind: OperatorKind,
    pub layers: usize,
    pub weight_mode: WeightMode,
    pub track_volume_constant: bool,
}

impl PropagationConfig {
    pub fn weightless(operator_kind: OperatorKind, layers: usize) -> Self {
        PropagationConfig {
            operator_kind,
            layers,
            weight_mode: WeightMode::None,
            track_volume_constant: false,
        }
    }

    pub fn with_weights(mut self, mode: WeightMode) -> Self {
        self.weight_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(
            self.operator_kind,
            OperatorKind::NormalizedAdjacency | OperatorKind::RenormalizedAdjacency
        ) {
            return Err(Error::Validation(format!(
                "propagation operator must be anorm or anorm-tilde, got {}",
                self.operator_kind
            )));
        }
        if self.layers == 0 {
            return Err(Error::Validation("layers must be at least 1".into()));
        }
        match &self.weight_mode {
            WeightMode::None => {}
            WeightMode::FirstLayerOnly { out_dim, .. } => {
                if *out_dim == 0 {
                    return Err(Error::Validation("first-layer width must be positive".into()));
                }
            }
            WeightMode::PerLayer { dims, .. } => {
                if dims.len() != self.layers {
                    return Err(Error::Validation(format!(
                        "per-layer weights need {} widths, got {}",
                        self.layers,
                        dims.len()
                    )));
                }
                if dims.contains(&0) {
                    return Err(Error::Validation("layer widths must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Fan-uniform weight matrices `W¹ … W^K` for input width `m0`, drawn in order
/// from one stream seeded with `seed`.
pub fn weight_stack(m0: usize, dims: &[usize], seed: u64) -> Vec<Array2<f64>> {
    let mut r = rng::seeded(seed);
    let mut fan_in = m0;
    dims.iter()
        .map(|&d| {
            let w = rng::fan_uniform_weights(&mut r, fan_in, d);
            fan_in = d;
            w
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub k: usize,
    pub frobenius_norm: f64,
    pub e_delta: f64,
    pub e_delta_norm: f64,
    pub e_delta_tilde_norm: f64,
    /// `e_delta / e_delta_norm`, when the denominator is nonzero.
    pub ratio: Option<f64>,
    pub kernel_alignment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTrace {
    pub operator_kind: OperatorKind,
    pub per_layer: Vec<LayerRecord>,
    pub notes: Vec<String>,
}

impl LayerTrace {
    pub fn len(&self) -> usize {
        self.per_layer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_layer.is_empty()
    }

    pub fn first(&self) -> Option<&LayerRecord> {
        self.per_layer.first()
    }

    pub fn last(&self) -> Option<&LayerRecord> {
        self.per_layer.last()
    }

    /// Energy compatible with the propagation operator at a record.
    pub fn compatible_energy(&self, r: &LayerRecord) -> f64 {
        match self.operator_kind {
            OperatorKind::RenormalizedAdjacency => r.e_delta_tilde_norm,
            _ => r.e_delta_norm,
        }
    }

    /// `(k, value)` series for a metric column.
    pub fn series(&self, metric: Metric) -> Vec<(usize, f64)> {
        self.per_layer.iter().map(|r| (r.k, metric.get(r))).collect()
    }
}

/// Scalar trace columns usable for decay fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    FrobeniusNorm,
    EDelta,
    EDeltaNorm,
    EDeltaTildeNorm,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::FrobeniusNorm,
        Metric::EDelta,
        Metric::EDeltaNorm,
        Metric::EDeltaTildeNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::FrobeniusNorm => "fro_norm",
            Metric::EDelta => "e_delta",
            Metric::EDeltaNorm => "e_delta_norm",
            Metric::EDeltaTildeNorm => "e_delta_tilde_norm",
        }
    }

    pub fn get(self, r: &LayerRecord) -> f64 {
        match self {
            Metric::FrobeniusNorm => r.frobenius_norm,
            Metric::EDelta => r.e_delta,
            Metric::EDeltaNorm => r.e_delta_norm,
            Metric::EDeltaTildeNorm => r.e_delta_tilde_norm,
        }
    }
}

struct Tracker<'a> {
    g: &'a Graph,
    kernel: ndarray::Array1<f64>,
    volume: bool,
}

impl Tracker<'_> {
    fn record(&self, k: usize, x: &Array2<f64>) -> Result<LayerRecord> {
        let s = SignalMatrix::new(x.clone()).map_err(|_| Error::Numerical {
            message: "non-finite value during propagation".into(),
            layer: Some(k),
            residual: None,
        })?;
        let energy = |kind| dirichlet_energy(self.g, &s, &kind, self.volume);
        let e_delta = energy(OperatorKind::UnnormalizedLaplacian)?;
        let e_delta_norm = energy(OperatorKind::NormalizedLaplacian)?;
        let e_delta_tilde_norm = energy(OperatorKind::RenormalizedLaplacian)?;
        let fro = frobenius(x);
        let kernel_alignment = (fro >= ALIGNMENT_NORM_FLOOR).then(|| {
            let proj = self.kernel.dot(x);
            (frobenius_vec(&proj) / fro).clamp(0.0, 1.0)
        });
        let values = [fro, e_delta, e_delta_norm, e_delta_tilde_norm];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                message: "metric overflowed".into(),
                layer: Some(k),
                residual: None,
            });
        }
        Ok(LayerRecord {
            k,
            frobenius_norm: fro,
            e_delta,
            e_delta_norm,
            e_delta_tilde_norm,
            ratio: (e_delta_norm != 0.0).then(|| e_delta / e_delta_norm),
            kernel_alignment,
        })
    }
}

fn frobenius_vec(v: &ndarray::Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Runs `cfg.layers` propagation steps from `x0`, recording metrics at
/// every layer including `k = 0`.
pub fn propagate(
    g: &Graph,
    x0: &SignalMatrix,
    cfg: &PropagationConfig,
) -> Result<(SignalMatrix, LayerTrace)> {
    cfg.validate()?;
    if x0.n_rows() != g.n_nodes() {
        return Err(Error::domain(format!(
            "signal has {} rows, graph has {} nodes",
            x0.n_rows(),
            g.n_nodes()
        )));
    }
    let op = build(g, cfg.operator_kind.clone())?;
    let laplacian = cfg
        .operator_kind
        .paired_laplacian()
        .expect("validated propagation kind");
    let tracker = Tracker {
        g,
        kernel: kernel_generator(g, laplacian)?.vector,
        volume: cfg.track_volume_constant,
    };

    let mut notes = Vec::new();
    if cfg.operator_kind == OperatorKind::NormalizedAdjacency && g.is_bipartite() {
        notes.push(
            "graph is bipartite: anorm has eigenvalue -1, so the signal oscillates instead of converging"
                .to_string(),
        );
    }

    let weights = match &cfg.weight_mode {
        WeightMode::None => Vec::new(),
        WeightMode::FirstLayerOnly { out_dim, seed } => weight_stack(x0.n_cols(), &[*out_dim], *seed),
        WeightMode::PerLayer { dims, seed } => weight_stack(x0.n_cols(), dims, *seed),
    };

    let m = op.matrix();
    let mut x = x0.values().clone();
    let mut per_layer = Vec::with_capacity(cfg.layers + 1);
    per_layer.push(tracker.record(0, &x)?);
    for k in 1..=cfg.layers {
        x = match &cfg.weight_mode {
            WeightMode::None => m.dot(&x),
            WeightMode::FirstLayerOnly { .. } if k == 1 => x.dot(&weights[0]),
            WeightMode::FirstLayerOnly { .. } => m.dot(&x),
            WeightMode::PerLayer { .. } => m.dot(&x).dot(&weights[k - 1]),
        };
        per_layer.push(tracker.record(k, &x)?);
    }
    let trace = LayerTrace {
        operator_kind: cfg.operator_kind.clone(),
        per_layer,
        notes,
    };
    Ok((SignalMatrix::new(x)?, trace))
}

/// Compares `A(…A(A X W¹)W²…)W^K` with `A^K (X W¹ ⋯ W^K)` under A_norm.
/// True iff the relative Frobenius difference is at most `tol`.
pub fn weight_equivalence_check(
    g: &Graph,
    x0: &SignalMatrix,
    dims: &[usize],
    seed: u64,
    layers: usize,
    tol: f64,
) -> Result<bool> {
    if dims.len() != layers {
        return Err(Error::Validation(format!(
            "{layers} layers need {layers} widths, got {}",
            dims.len()
        )));
    }
    if x0.n_rows() != g.n_nodes() {
        return Err(Error::domain("signal rows do not match graph size"));
    }
    let a = build(g, OperatorKind::NormalizedAdjacency)?;
    let a = a.matrix();
    let ws = weight_stack(x0.n_cols(), dims, seed);

    let mut interleaved = x0.values().clone();
    for w in &ws {
        interleaved = a.dot(&interleaved).dot(w);
    }

    let mut collapsed = x0.values().clone();
    for w in &ws {
        collapsed = collapsed.dot(w);
    }
    for _ in 0..layers {
        collapsed = a.dot(&collapsed);
    }

    let diff = frobenius(&(&interleaved - &collapsed));
    let scale = frobenius(&interleaved).max(frobenius(&collapsed));
    Ok(if scale == 0.0 { diff == 0.0 } else { diff <= tol * scale })
}

/// `value ≈ c1 · exp(−c2 · k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    pub floor_layer: Option<usize>,
}

/// Least-squares line through `(k, ln value)` for the points before the first
/// one at or below `floor`.
pub fn fit_decay(series: &[(usize, f64)], floor: f64) -> Result<DecayFit> {
    let floor_pos = series.iter().position(|&(_, v)| v <= floor);
    let usable = &series[..floor_pos.unwrap_or(series.len())];
    if let Some(&(k, v)) = usable.iter().find(|(_, v)| !v.is_finite() || *v <= 0.0) {
        return Err(Error::domain(format!(
            "value {v} at layer {k} is above the floor but cannot be log-fitted"
        )));
    }
    if usable.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let xs: Vec<f64> = usable.iter().map(|&(k, _)| k as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("all usable points share one layer index"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        c1: intercept.exp(),
        c2: 0.0 - slope,
        r_squared,
        floor_layer: floor_pos.map(|p| series[p].0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub energy_floor: f64,
    pub norm_floor: f64,
    pub alignment_target: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            energy_floor: 1e-6,
            norm_floor: 1e-3,
            alignment_target: 0.999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub over_smoothing: bool,
    pub over_shrinking: bool,
    pub notes: String,
}

/// Over-smoothing: the compatible energy has decayed by `energy_floor`
/// (relative to the initial energy or to the current `‖X‖²`), the norm stays
/// above `norm_floor · ‖X⁰‖` and the signal is aligned with the kernel.
/// Over-shrinking: the norm itself fell below `norm_floor · ‖X⁰‖`.
pub fn classify_regime(trace: &LayerTrace, th: &RegimeThresholds) -> RegimeVerdict {
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return RegimeVerdict {
            over_smoothing: false,
            over_shrinking: false,
            notes: "empty trace".into(),
        };
    };
    if first.frobenius_norm == 0.0 {
        return RegimeVerdict {
            over_smoothing: false,
            over_shrinking: false,
            notes: "degenerate input: the initial signal is zero, so neither regime applies".into(),
        };
    }
    let energy_name = match trace.operator_kind {
        OperatorKind::RenormalizedAdjacency => "e_delta_tilde_norm",
        _ => "e_delta_norm",
    };
    let e0 = trace.compatible_energy(first);
    let ek = trace.compatible_energy(last);
    let norm_ratio = last.frobenius_norm / first.frobenius_norm;
    let over_shrinking = last.frobenius_norm < th.norm_floor * first.frobenius_norm;
    let energy_small = ek <= th.energy_floor * e0
        || ek <= th.energy_floor * last.frobenius_norm * last.frobenius_norm;
    let aligned = last
        .kernel_alignment
        .is_some_and(|a| a >= th.alignment_target);
    let over_smoothing = energy_small && !over_shrinking && aligned;

    let mut notes = vec![format!(
        "{energy_name}: {e0:.3e} -> {ek:.3e} ({})",
        if energy_small { "decayed below floor" } else { "not decayed" }
    )];
    notes.push(format!(
        "fro_norm ratio {norm_ratio:.3e} ({})",
        if over_shrinking { "collapsed" } else { "retained" }
    ));
    notes.push(match last.kernel_alignment {
        Some(a) => format!("kernel alignment {a:.6}"),
        None => "kernel alignment undefined".into(),
    });
    RegimeVerdict {
        over_smoothing,
        over_shrinking,
        notes: notes.join("; "),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTrace {
    pub points: Vec<(usize, f64)>,
    /// Layer index of the first record where either energy hit the floor.
    pub cut: Option<usize>,
}

pub fn energy_ratio_trace(trace: &LayerTrace) -> RatioTrace {
    energy_ratio_trace_with_floor(trace, NUMERICAL_FLOOR)
}

pub fn energy_ratio_trace_with_floor(trace: &LayerTrace, floor: f64) -> RatioTrace {
    let mut points = Vec::new();
    for r in &trace.per_layer {
        if !(r.e_delta > floor && r.e_delta_norm > floor) {
            return RatioTrace {
                points,
                cut: Some(r.k),
            };
        }
        points.push((r.k, r.e_delta / r.e_delta_norm));
    }
    RatioTrace { points, cut: None }
}
