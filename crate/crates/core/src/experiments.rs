//! Named recipes for the reference experiments.
//!
//! | Name | Graph | Propagation |
//! |------|-------|-------------|
//! | `fig1` | ENZYMES graph 0 (37 nodes, non-regular) | 50 weightless A_norm layers |
//! | `fig2` | ENZYMES graph 10 (4 nodes, 3-regular) | 50 weightless A_norm layers |
//! | `fig3` | Cora LCC | one 16-wide projection, then 49 A_norm layers |
//! | `fig4a`..`fig4c` | ENZYMES graphs 0, 10 and 18 (2 nodes) | 50 A_norm layers with per-layer weights |
//!
//! Energies are reported with the `1/|V|` volume constant.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::{
    classify_regime, energy_ratio_trace, fit_decay, propagate, DecayFit, LayerTrace, Metric,
    PropagationConfig, RatioTrace, RegimeThresholds, RegimeVerdict, WeightMode, NUMERICAL_FLOOR,
};
use crate::energy::SignalMatrix;
use crate::error::{Error, Result};
use crate::graph::{stats, Graph};
use crate::io::{self, RunManifest, CORA_FILES, ENZYMES_FILES};
use crate::operators::OperatorKind;

pub const DEFAULT_LAYERS: usize = 50;
pub const CORA_PROJECTION_WIDTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig3,
    Fig4a,
    Fig4b,
    Fig4c,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Fig1,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4a,
        Experiment::Fig4b,
        Experiment::Fig4c,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4a => "fig4a",
            Experiment::Fig4b => "fig4b",
            Experiment::Fig4c => "fig4c",
        }
    }

    pub fn required_files(self) -> &'static [&'static str] {
        match self {
            Experiment::Fig3 => &CORA_FILES,
            _ => &ENZYMES_FILES,
        }
    }

    fn enzymes_target(self) -> Option<GraphShape> {
        match self {
            Experiment::Fig1 | Experiment::Fig4a => Some(GraphShape {
                index: 0,
                n_nodes: 37,
                regular_degree: None,
            }),
            Experiment::Fig2 | Experiment::Fig4b => Some(GraphShape {
                index: 10,
                n_nodes: 4,
                regular_degree: Some(3),
            }),
            Experiment::Fig4c => Some(GraphShape {
                index: 18,
                n_nodes: 2,
                regular_degree: Some(1),
            }),
            Experiment::Fig3 => None,
        }
    }

    fn per_layer_weights(self) -> bool {
        matches!(self, Experiment::Fig4a | Experiment::Fig4b | Experiment::Fig4c)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
struct GraphShape {
    index: usize,
    n_nodes: usize,
    /// `None` means the graph must be non-regular.
    regular_degree: Option<usize>,
}

impl GraphShape {
    fn matches(&self, g: &Graph) -> bool {
        g.n_nodes() == self.n_nodes
            && g.is_connected()
            && match self.regular_degree {
                Some(d) => g.is_regular() && g.degree(0) == d,
                None => !g.is_regular(),
            }
    }
}

/// Picks the expected ENZYMES graph. Falls back to the first graph of the
/// same shape when the stated index does not match.
fn select_enzymes(
    all: Vec<(Graph, Option<SignalMatrix>)>,
    shape: GraphShape,
    notes: &mut Vec<String>,
) -> Result<(usize, Graph, SignalMatrix)> {
    let pick = if all.get(shape.index).is_some_and(|(g, _)| shape.matches(g)) {
        shape.index
    } else {
        let found = all.iter().position(|(g, _)| shape.matches(g)).ok_or_else(|| {
            Error::Validation(format!(
                "no ENZYMES graph with {} nodes of the expected regularity",
                shape.n_nodes
            ))
        })?;
        notes.push(format!(
            "graph {} does not have the expected shape; using graph {found}",
            shape.index
        ));
        found
    };
    let (g, x) = all.into_iter().nth(pick).expect("index checked");
    let x = x.ok_or_else(|| Error::MissingFiles(vec![ENZYMES_FILES[2].to_string()]))?;
    Ok((pick, g, x))
}

/// Decay fits for every metric that has enough pre-floor points.
pub fn decay_fits(trace: &LayerTrace) -> Vec<(Metric, DecayFit)> {
    Metric::ALL
        .into_iter()
        .filter_map(|m| fit_decay(&trace.series(m), NUMERICAL_FLOOR).ok().map(|f| (m, f)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct RecipeEcho<'a> {
    experiment: &'a str,
    propagation: &'a PropagationConfig,
}

/// Result of one simulation, with its serialized artifacts.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: LayerTrace,
    pub final_signal: SignalMatrix,
    pub verdict: RegimeVerdict,
    pub fits: Vec<(Metric, DecayFit)>,
    pub ratio: RatioTrace,
    pub manifest: RunManifest,
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
    pub summary: Vec<String>,
}

/// Runs a propagation and renders the trace CSV, trace JSON and report JSON.
pub fn simulate_run<C: Serialize>(
    g: &Graph,
    x0: &SignalMatrix,
    cfg: &PropagationConfig,
    dataset_id: &str,
    selector: &str,
    echo: &C,
    seed: u64,
) -> Result<RunOutput> {
    let (final_signal, trace) = propagate(g, x0, cfg)?;
    let verdict = classify_regime(&trace, &RegimeThresholds::default());
    let fits = decay_fits(&trace);
    let ratio = energy_ratio_trace(&trace);
    let manifest = RunManifest::new(dataset_id, selector, echo, seed);
    let files = vec![
        ("trace.csv".to_string(), io::export_trace_csv(&trace, &manifest)),
        ("trace.json".to_string(), io::export_trace_json(&trace, Some(&verdict), &manifest)),
        ("report.json".to_string(), io::export_report_json(&verdict, &fits, &manifest)),
    ];
    let last = trace.last().expect("trace has k=0");
    let mut summary = vec![
        format!(
            "layers: {}  final fro_norm: {}  final kernel alignment: {}",
            cfg.layers,
            io::fmt_g17(last.frobenius_norm),
            last.kernel_alignment.map_or("undefined".into(), io::fmt_g17)
        ),
        format!(
            "over_smoothing: {}  over_shrinking: {}",
            verdict.over_smoothing, verdict.over_shrinking
        ),
        format!("notes: {}", verdict.notes),
    ];
    summary.extend(trace.notes.iter().map(|n| format!("warning: {n}")));
    Ok(RunOutput {
        trace,
        final_signal,
        verdict,
        fits,
        ratio,
        manifest,
        files,
        summary,
    })
}

/// `(min, max)` of the pre-floor ratios, if any.
pub fn ratio_range(r: &RatioTrace) -> Option<(f64, f64)> {
    r.points.iter().map(|&(_, v)| v).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

pub fn run_experiment(exp: Experiment, data_dir: Option<&Path>, seed: u64) -> Result<RunOutput> {
    let mut notes = Vec::new();
    let (selector, g, x0) = match exp.enzymes_target() {
        Some(shape) => {
            let all = io::load_enzymes(data_dir).map_err(|e| match e {
                Error::MissingFiles(_) => missing(exp, data_dir),
                other => other,
            })?;
            let (idx, g, x) = select_enzymes(all, shape, &mut notes)?;
            (format!("enzymes:{idx}"), g, x)
        }
        None => {
            let (g, x) = io::load_cora_lcc(data_dir).map_err(|e| match e {
                Error::MissingFiles(_) => missing(exp, data_dir),
                other => other,
            })?;
            ("cora-lcc".to_string(), g, x)
        }
    };
    let weight_mode = match exp {
        Experiment::Fig3 => WeightMode::FirstLayerOnly {
            out_dim: CORA_PROJECTION_WIDTH,
            seed,
        },
        _ if exp.per_layer_weights() => WeightMode::PerLayer {
            dims: vec![x0.n_cols(); DEFAULT_LAYERS],
            seed,
        },
        _ => WeightMode::None,
    };
    let cfg = PropagationConfig {
        operator_kind: OperatorKind::NormalizedAdjacency,
        layers: DEFAULT_LAYERS,
        weight_mode,
        track_volume_constant: true,
    };
    let echo = RecipeEcho {
        experiment: exp.name(),
        propagation: &cfg,
    };
    let dataset = if exp == Experiment::Fig3 { "Cora" } else { "ENZYMES" };
    let mut out = simulate_run(&g, &x0, &cfg, dataset, &selector, &echo, seed)?;
    let st = stats(&g);
    out.summary.insert(
        0,
        format!(
            "{exp}: {selector} with {} nodes, {} edges, avg degree {:.2}, regular {}",
            st.n_nodes, st.n_edges, st.avg_degree, st.regular
        ),
    );
    out.summary.extend(notes.iter().map(|n| format!("note: {n}")));
    if exp.per_layer_weights() {
        out.files.push((
            "ratio.csv".into(),
            io::export_ratio_csv(&out.ratio.points, out.ratio.cut),
        ));
        if let Some((lo, hi)) = ratio_range(&out.ratio) {
            out.summary.push(format!(
                "ratio over {} pre-floor layers: min {} max {}",
                out.ratio.points.len(),
                io::fmt_g17(lo),
                io::fmt_g17(hi)
            ));
        }
    }
    if let Some(floor) = ratio_floor_note(&out.ratio) {
        out.summary.push(floor);
    }
    Ok(out)
}

fn ratio_floor_note(r: &RatioTrace) -> Option<String> {
    r.cut.map(|k| format!("energies reach the numerical floor at layer {k}"))
}

fn missing(exp: Experiment, data_dir: Option<&Path>) -> Error {
    let base = data_dir.map_or_else(
        || format!("${}", io::DATA_DIR_ENV),
        |d| d.display().to_string(),
    );
    Error::MissingFiles(
        exp.required_files()
            .iter()
            .map(|f| format!("{base}/{f}"))
            .collect(),
    )
}
