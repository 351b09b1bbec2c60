//! Text exports and dataset discovery.
//!
//! Every float goes through [`fmt_g17`], which matches C's `%.17g` and
//! therefore round-trips through `str::parse::<f64>` bit-exactly. CSV files
//! carry their [`RunManifest`] as a `#`-prefixed preamble; JSON documents embed
//! it under `"manifest"`. Non-finite numbers become `null` in JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::dynamics::{DecayFit, LayerRecord, LayerTrace, Metric, RegimeVerdict};
use crate::energy::{AxiomReport, SignalMatrix};
use crate::error::{Error, Result};
use crate::graph::{self, Graph};
use crate::operators::OperatorKind;
use crate::spectral::{SpectralDecomposition, SuperpositionMatrix};

pub const DATA_DIR_ENV: &str = "OVERSMOOTH_DATA_DIR";
pub const TOOL_VERSION: &str = concat!("oversmooth ", env!("CARGO_PKG_VERSION"));
pub const TRACE_COLUMNS: [&str; 7] = [
    "k",
    "fro_norm",
    "e_delta",
    "e_delta_norm",
    "e_delta_tilde_norm",
    "ratio",
    "kernel_alignment",
];

/// C `printf("%.17g", v)`.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return if v.is_sign_negative() { "-nan" } else { "nan" }.into();
    }
    if v.is_infinite() {
        return if v < 0.0 { "-inf" } else { "inf" }.into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let digits = (16 - exp) as usize;
        strip_zeros(&format!("{v:.digits$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// JSON number rendered with [`fmt_g17`]; non-finite values map to `null`.
pub fn json_number(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&fmt_g17(v)).expect("%.17g output is a JSON number"))
}

/// Rewrites every non-integer number in `v` with [`json_number`].
fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_u64() || n.is_i64() => Value::Number(n),
        Value::Number(n) => json_number(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

/// `x` as JSON with every float in `%.17g` form.
pub fn to_canonical<T: Serialize>(x: &T) -> Value {
    canonical(serde_json::to_value(x).expect("serializable"))
}

/// Top-level object from named parts, keys sorted.
pub fn export_json_document(parts: Vec<(&str, Value)>) -> String {
    let o: Map<String, Value> = parts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    pretty(&Value::Object(o))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset_id: String,
    pub graph_selector: String,
    /// The configuration that produced the artifact, as JSON.
    pub config_echo: Value,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        dataset_id: impl Into<String>,
        graph_selector: impl Into<String>,
        config: &C,
        seed: u64,
    ) -> Self {
        RunManifest {
            dataset_id: dataset_id.into(),
            graph_selector: graph_selector.into(),
            config_echo: to_canonical(config),
            seed,
            tool_version: TOOL_VERSION.into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    fn preamble(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dataset_id: {}", self.dataset_id);
        let _ = writeln!(s, "# graph_selector: {}", self.graph_selector);
        let _ = writeln!(s, "# config: {}", serde_json::to_string(&self.config_echo).expect("json"));
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# tool_version: {}", self.tool_version);
        let _ = writeln!(s, "# timestamp: {}", self.timestamp);
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_g17).unwrap_or_default()
}

pub fn export_trace_csv(trace: &LayerTrace, manifest: &RunManifest) -> String {
    let mut s = manifest.preamble();
    let _ = writeln!(s, "# operator_kind: {}", trace.operator_kind);
    for note in &trace.notes {
        let _ = writeln!(s, "# note: {}", note.replace('\n', " "));
    }
    s.push_str(&TRACE_COLUMNS.join(","));
    s.push('\n');
    for r in &trace.per_layer {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.k,
            fmt_g17(r.frobenius_norm),
            fmt_g17(r.e_delta),
            fmt_g17(r.e_delta_norm),
            fmt_g17(r.e_delta_tilde_norm),
            opt(r.ratio),
            opt(r.kernel_alignment)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub trace: LayerTrace,
    pub manifest: Option<RunManifest>,
}

/// Inverse of [`export_trace_csv`].
pub fn parse_trace_csv(text: &str) -> Result<ParsedTrace> {
    let mut fields: Vec<(String, String)> = Vec::new();
    let mut notes = Vec::new();
    let mut operator_kind = OperatorKind::NormalizedAdjacency;
    let mut per_layer = Vec::new();
    let mut header_seen = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.strip_prefix(' ').unwrap_or(rest);
            if let Some((key, value)) = rest.split_once(": ") {
                match key {
                    "note" => notes.push(value.to_string()),
                    "operator_kind" => {
                        operator_kind = OperatorKind::from(value.to_string())
                    }
                    _ => fields.push((key.to_string(), value.to_string())),
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != TRACE_COLUMNS {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unexpected header {line:?}"),
                });
            }
            header_seen = true;
            continue;
        }
        per_layer.push(parse_trace_row(line, line_no)?);
    }
    if !header_seen {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: "no header row".into(),
        });
    }
    Ok(ParsedTrace {
        trace: LayerTrace {
            operator_kind,
            per_layer,
            notes,
        },
        manifest: manifest_from_fields(&fields),
    })
}

fn parse_trace_row(line: &str, line_no: usize) -> Result<LayerRecord> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.len() != TRACE_COLUMNS.len() {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected {} fields, got {}", TRACE_COLUMNS.len(), cols.len()),
        });
    }
    let bad = |what: &str| Error::Parse {
        line: line_no,
        message: format!("bad {what} value"),
    };
    let num = |i: usize| cols[i].parse::<f64>().map_err(|_| bad(TRACE_COLUMNS[i]));
    let opt_num = |i: usize| -> Result<Option<f64>> {
        if cols[i].is_empty() {
            Ok(None)
        } else {
            num(i).map(Some)
        }
    };
    Ok(LayerRecord {
        k: cols[0].parse().map_err(|_| bad("k"))?,
        frobenius_norm: num(1)?,
        e_delta: num(2)?,
        e_delta_norm: num(3)?,
        e_delta_tilde_norm: num(4)?,
        ratio: opt_num(5)?,
        kernel_alignment: opt_num(6)?,
    })
}

fn manifest_from_fields(fields: &[(String, String)]) -> Option<RunManifest> {
    let get = |k: &str| fields.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
    Some(RunManifest {
        dataset_id: get("dataset_id")?,
        graph_selector: get("graph_selector")?,
        config_echo: serde_json::from_str(&get("config")?).ok()?,
        seed: get("seed")?.parse().ok()?,
        tool_version: get("tool_version")?,
        timestamp: get("timestamp")?,
    })
}

fn record_json(r: &LayerRecord) -> Value {
    let mut o = Map::new();
    o.insert("k".into(), Value::from(r.k));
    o.insert("fro_norm".into(), json_number(r.frobenius_norm));
    o.insert("e_delta".into(), json_number(r.e_delta));
    o.insert("e_delta_norm".into(), json_number(r.e_delta_norm));
    o.insert("e_delta_tilde_norm".into(), json_number(r.e_delta_tilde_norm));
    o.insert("ratio".into(), r.ratio.map_or(Value::Null, json_number));
    o.insert("kernel_alignment".into(), r.kernel_alignment.map_or(Value::Null, json_number));
    Value::Object(o)
}

/// Trace rows plus notes, config echo and an optional verdict.
pub fn export_trace_json(
    trace: &LayerTrace,
    verdict: Option<&RegimeVerdict>,
    manifest: &RunManifest,
) -> String {
    let mut o = Map::new();
    o.insert("manifest".into(), to_canonical(manifest));
    o.insert("operator_kind".into(), Value::from(trace.operator_kind.name()));
    o.insert("notes".into(), Value::from(trace.notes.clone()));
    o.insert(
        "per_layer".into(),
        Value::Array(trace.per_layer.iter().map(record_json).collect()),
    );
    if let Some(v) = verdict {
        o.insert("verdict".into(), to_canonical(v));
    }
    pretty(&Value::Object(o))
}

/// Verdict plus one decay fit per metric, keyed by metric name.
pub fn export_report_json(
    verdict: &RegimeVerdict,
    fits: &[(Metric, DecayFit)],
    manifest: &RunManifest,
) -> String {
    let mut f = Map::new();
    for (metric, fit) in fits {
        f.insert(metric.name().into(), to_canonical(fit));
    }
    let mut o = Map::new();
    o.insert("fits".into(), Value::Object(f));
    o.insert("manifest".into(), to_canonical(manifest));
    o.insert("verdict".into(), to_canonical(verdict));
    pretty(&Value::Object(o))
}

pub fn export_axiom_json(report: &AxiomReport, manifest: &RunManifest) -> String {
    let mut o = Map::new();
    o.insert("manifest".into(), to_canonical(manifest));
    o.insert("report".into(), to_canonical(report));
    if let Some(w) = &report.witness_signal {
        o.insert("witness_signal".into(), matrix_json(w.values()));
    }
    pretty(&Value::Object(o))
}

fn matrix_json(m: &Array2<f64>) -> Value {
    Value::Array(
        m.rows()
            .into_iter()
            .map(|r| Value::Array(r.iter().map(|&v| json_number(v)).collect()))
            .collect(),
    )
}

/// One row per matrix row, comma separated.
pub fn export_matrix_csv(m: &Array2<f64>) -> String {
    let mut s = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_g17(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_matrix_csv(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} columns, got {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), cols), flat).map_err(|e| Error::Format(e.to_string()))
}

pub fn export_operator_csv(m: &Array2<f64>, manifest: &RunManifest) -> String {
    manifest.preamble() + &export_matrix_csv(m)
}

pub fn export_spectrum_csv(dec: &SpectralDecomposition) -> String {
    let mut s = format!("# operator_kind: {}\nindex,eigenvalue\n", dec.operator_kind);
    for (i, &l) in dec.eigenvalues.iter().enumerate() {
        let _ = writeln!(s, "{i},{}", fmt_g17(l));
    }
    s
}

pub fn export_superposition_csv(s: &SuperpositionMatrix) -> String {
    format!(
        "# rows: {} eigenvectors\n# cols: {} eigenvectors\n{}",
        s.row_basis_kind,
        s.col_basis_kind,
        export_matrix_csv(&s.entries)
    )
}

pub fn export_ratio_csv(points: &[(usize, f64)], cut: Option<usize>) -> String {
    let mut s = String::new();
    if let Some(c) = cut {
        let _ = writeln!(s, "# floor_cut: {c}");
    }
    s.push_str("k,ratio\n");
    for &(k, r) in points {
        let _ = writeln!(s, "{k},{}", fmt_g17(r));
    }
    s
}

/// Small graphs available without any data files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinGraph {
    K4,
    K2,
    P3,
    TrianglePendant,
}

impl BuiltinGraph {
    pub fn graph(self) -> Graph {
        match self {
            BuiltinGraph::K4 => Graph::complete(4),
            BuiltinGraph::K2 => Graph::complete(2),
            BuiltinGraph::P3 => Graph::path(3),
            BuiltinGraph::TrianglePendant => Graph::triangle_with_pendant(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinGraph::K4 => "k4",
            BuiltinGraph::K2 => "k2",
            BuiltinGraph::P3 => "p3",
            BuiltinGraph::TrianglePendant => "triangle-pendant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSelector {
    /// Graph at position `N` (0-based, ascending graph id) of the ENZYMES TU dataset.
    Enzymes(usize),
    CoraLcc,
    Builtin(BuiltinGraph),
    /// Edge-list file.
    File(PathBuf),
}

impl FromStr for DatasetSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(idx) = s.strip_prefix("enzymes:") {
            return idx
                .parse()
                .map(DatasetSelector::Enzymes)
                .map_err(|_| Error::Validation(format!("bad ENZYMES index {idx:?}")));
        }
        if s == "cora-lcc" {
            return Ok(DatasetSelector::CoraLcc);
        }
        if let Some(name) = s.strip_prefix("builtin:") {
            let b = [
                BuiltinGraph::K4,
                BuiltinGraph::K2,
                BuiltinGraph::P3,
                BuiltinGraph::TrianglePendant,
            ]
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| Error::Validation(format!("unknown builtin graph {name:?}")))?;
            return Ok(DatasetSelector::Builtin(b));
        }
        if s.is_empty() {
            return Err(Error::Validation("empty graph selector".into()));
        }
        Ok(DatasetSelector::File(PathBuf::from(s)))
    }
}

impl DatasetSelector {
    pub fn dataset_id(&self) -> String {
        match self {
            DatasetSelector::Enzymes(_) => "ENZYMES".into(),
            DatasetSelector::CoraLcc => "Cora".into(),
            DatasetSelector::Builtin(b) => format!("builtin:{}", b.name()),
            DatasetSelector::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub features: Option<SignalMatrix>,
    pub dataset_id: String,
}

/// `--data-dir` if given, otherwise `$OVERSMOOTH_DATA_DIR`.
pub fn resolve_data_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
}

pub const ENZYMES_FILES: [&str; 3] = [
    "ENZYMES_A.txt",
    "ENZYMES_graph_indicator.txt",
    "ENZYMES_node_attributes.txt",
];
pub const CORA_FILES: [&str; 2] = ["cora.content", "cora.cites"];

/// Directory under `root` (itself or one of `subdirs`) holding every required file.
fn find_dir(root: &Path, subdirs: &[&str], required: &[&str]) -> Option<PathBuf> {
    std::iter::once(root.to_path_buf())
        .chain(subdirs.iter().map(|d| root.join(d)))
        .find(|dir| required.iter().all(|f| dir.join(f).is_file()))
}

fn missing(data_dir: Option<&Path>, files: &[&str]) -> Error {
    let base = data_dir.map_or_else(|| format!("${DATA_DIR_ENV}"), |d| d.display().to_string());
    Error::MissingFiles(files.iter().map(|f| format!("{base}/{f}")).collect())
}

/// All ENZYMES graphs with their node attributes, in graph-id order.
pub fn load_enzymes(data_dir: Option<&Path>) -> Result<Vec<(Graph, Option<SignalMatrix>)>> {
    let required = &ENZYMES_FILES[..2];
    let dir = data_dir
        .and_then(|d| find_dir(d, &["ENZYMES", "enzymes"], required))
        .ok_or_else(|| missing(data_dir, &ENZYMES_FILES))?;
    let a = fs::read_to_string(dir.join(ENZYMES_FILES[0]))?;
    let ind = fs::read_to_string(dir.join(ENZYMES_FILES[1]))?;
    let attr_path = dir.join(ENZYMES_FILES[2]);
    let attrs = attr_path.is_file().then(|| fs::read_to_string(&attr_path)).transpose()?;
    graph::load_tu_dataset(&a, &ind, attrs.as_deref())
}

/// Largest connected component of Cora with its bag-of-words features.
pub fn load_cora_lcc(data_dir: Option<&Path>) -> Result<(Graph, SignalMatrix)> {
    let dir = data_dir
        .and_then(|d| find_dir(d, &["cora", "Cora"], &CORA_FILES))
        .ok_or_else(|| missing(data_dir, &CORA_FILES))?;
    let content = fs::read_to_string(dir.join(CORA_FILES[0]))?;
    let cites = fs::read_to_string(dir.join(CORA_FILES[1]))?;
    let data = graph::load_citation_dataset(&content, &cites)?;
    let (g, x) = graph::largest_connected_component(&data.graph, Some(&data.features))?;
    Ok((g, x.expect("features were supplied")))
}

pub fn load_selected(sel: &DatasetSelector, data_dir: Option<&Path>) -> Result<LoadedGraph> {
    let dataset_id = sel.dataset_id();
    let (graph, features) = match sel {
        DatasetSelector::Enzymes(i) => {
            let mut all = load_enzymes(data_dir)?;
            if *i >= all.len() {
                return Err(Error::Validation(format!(
                    "ENZYMES has {} graphs, index {i} is out of range",
                    all.len()
                )));
            }
            all.swap_remove(*i)
        }
        DatasetSelector::CoraLcc => {
            let (g, x) = load_cora_lcc(data_dir)?;
            (g, Some(x))
        }
        DatasetSelector::Builtin(b) => (b.graph(), None),
        DatasetSelector::File(p) => {
            let text = fs::read_to_string(p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingFiles(vec![p.display().to_string()]),
                _ => Error::Io(e),
            })?;
            (graph::load_edge_list(&text)?, None)
        }
    };
    Ok(LoadedGraph {
        graph,
        features,
        dataset_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate, PropagationConfig};

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.10000000000000001"),
            (1.0 / 3.0, "0.33333333333333331"),
            (1e-5, "1.0000000000000001e-05"),
            (1e20, "1e+20"),
            (1e16, "10000000000000000"),
            (1e17, "1e+17"),
            (123456.789, "123456.789"),
            (-2.5, "-2.5"),
            (0.0001, "0.0001"),
            (f64::MIN_POSITIVE, "2.2250738585072014e-308"),
            (5e-324, "4.9406564584124654e-324"),
            (f64::MAX, "1.7976931348623157e+308"),
            (-0.0, "-0"),
            (f64::INFINITY, "inf"),
        ];
        for (v, want) in cases {
            assert_eq!(fmt_g17(v), want, "{v:e}");
        }
        assert_eq!(fmt_g17(f64::NAN), "nan");
    }

    #[test]
    fn g17_roundtrips() {
        use rand::Rng;
        let mut r = crate::rng::seeded(17);
        for _ in 0..5000 {
            let x = f64::from_bits(r.random::<u64>());
            if !x.is_finite() {
                continue;
            }
            let s = fmt_g17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    fn manifest() -> RunManifest {
        RunManifest::new("builtin:k4", "builtin:k4", &PropagationConfig::weightless(OperatorKind::NormalizedAdjacency, 3), 7)
    }

    #[test]
    fn trace_csv_roundtrip_is_bit_exact() {
        let g = Graph::triangle_with_pendant();
        let cfg = PropagationConfig::weightless(OperatorKind::NormalizedAdjacency, 12);
        let (_, trace) = propagate(&g, &SignalMatrix::gaussian(4, 3, 1), &cfg).unwrap();
        let m = manifest();
        let csv = export_trace_csv(&trace, &m);
        let parsed = parse_trace_csv(&csv).unwrap();
        assert_eq!(parsed.trace, trace);
        assert_eq!(parsed.manifest.unwrap(), m);
        let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 14);
    }

    #[test]
    fn single_layer_trace_has_header_and_row() {
        let trace = LayerTrace {
            operator_kind: OperatorKind::NormalizedAdjacency,
            per_layer: vec![LayerRecord {
                k: 0,
                frobenius_norm: 1.0,
                e_delta: 0.0,
                e_delta_norm: 0.0,
                e_delta_tilde_norm: 0.0,
                ratio: None,
                kernel_alignment: Some(1.0),
            }],
            notes: vec![],
        };
        let csv = export_trace_csv(&trace, &manifest());
        let body: Vec<_> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec![TRACE_COLUMNS.join(",").as_str(), "0,1,0,0,0,,1"]);
    }

    #[test]
    fn report_json_is_sorted_and_explicit() {
        let verdict = RegimeVerdict {
            over_smoothing: false,
            over_shrinking: false,
            notes: "x".into(),
        };
        let fit = DecayFit {
            c1: 2.0,
            c2: 0.1,
            r_squared: 1.0,
            floor_layer: None,
        };
        let s = export_report_json(&verdict, &[(Metric::EDeltaNorm, fit.clone())], &manifest());
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["verdict"]["over_smoothing"], Value::Bool(false));
        assert_eq!(v["verdict"]["over_shrinking"], Value::Bool(false));
        let c2: f64 = v["fits"]["e_delta_norm"]["c2"].to_string().parse().unwrap();
        assert_eq!(c2.to_bits(), fit.c2.to_bits());
        assert!(s.contains("0.10000000000000001"));
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(s.find("\"fits\"").unwrap() < s.find("\"manifest\"").unwrap());
    }

    #[test]
    fn non_finite_json_is_null() {
        assert_eq!(json_number(f64::NAN), Value::Null);
        assert_eq!(json_number(f64::NEG_INFINITY), Value::Null);
    }

    #[test]
    fn matrix_csv_roundtrip() {
        let m = ndarray::array![[1.0 / 3.0, -2.0], [1e-300, 7.5]];
        assert_eq!(parse_matrix_csv(&export_matrix_csv(&m)).unwrap(), m);
    }

    #[test]
    fn selectors() {
        assert_eq!("enzymes:10".parse::<DatasetSelector>().unwrap(), DatasetSelector::Enzymes(10));
        assert_eq!("cora-lcc".parse::<DatasetSelector>().unwrap(), DatasetSelector::CoraLcc);
        assert_eq!(
            "builtin:p3".parse::<DatasetSelector>().unwrap(),
            DatasetSelector::Builtin(BuiltinGraph::P3)
        );
        assert!("enzymes:x".parse::<DatasetSelector>().is_err());
        assert!("builtin:nope".parse::<DatasetSelector>().is_err());
        assert!(matches!(
            "graph.txt".parse::<DatasetSelector>().unwrap(),
            DatasetSelector::File(_)
        ));
    }

    #[test]
    fn missing_dataset_lists_files() {
        let dir = std::env::temp_dir().join("oversmooth-io-missing-test");
        let _ = fs::create_dir_all(&dir);
        let err = load_selected(&DatasetSelector::Enzymes(0), Some(&dir)).unwrap_err();
        match err {
            Error::MissingFiles(files) => assert!(files.iter().any(|f| f.ends_with("ENZYMES_A.txt"))),
            other => panic!("unexpected {other}"),
        }
    }
}
