use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use oversmooth::dynamics::{energy_ratio_trace, PropagationConfig, WeightMode};
use oversmooth::energy::{
    axiom_report, normalize_conjugation, renormalize_conjugation, Axiom1Failure, MeasureDescriptor,
    DEFAULT_AXIOM_TOL,
};
use oversmooth::experiments::{self, Experiment};
use oversmooth::io::{self, DatasetSelector, RunManifest};
use oversmooth::operators::{build, commutator, frobenius, kernel_generator};
use oversmooth::rng::DEFAULT_SEED;
use oversmooth::spectral::{self, eigendecompose, FilterExpansion};
use oversmooth::{graph, Error, Graph, OperatorKind, SignalMatrix};

/// Over-smoothing diagnostics for graph signals under GCN-style propagation.
#[derive(Parser)]
#[command(name = "oversmooth", version, about)]
struct Cli {
    /// Directory holding dataset files (ENZYMES_*.txt, cora.content, cora.cites)
    #[arg(long, global = true, env = io::DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graph statistics, Laplacian commutator and kernel dispersion
    Analyze(AnalyzeArgs),
    /// Deep linear GCN run with per-layer energies
    Simulate(SimulateArgs),
    /// Operator spectrum and eigenbasis overlaps
    Spectra(SpectraArgs),
    /// Node-similarity axiom checks for an energy measure
    Axioms(AxiomsArgs),
    /// Ratio of unnormalized to normalized energy through the layers
    Ratio(RatioArgs),
    /// Write an operator matrix as CSV
    ExportOperator(ExportArgs),
    /// Run a named reference experiment
    Repro(ReproArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list path, enzymes:<idx>, cora-lcc or builtin:{k4,k2,p3,triangle-pendant}
    #[arg(long, value_parser = parse_selector)]
    graph: DatasetSelector,

    /// Width of the random input signal for graphs without node features
    #[arg(long, default_value_t = 8)]
    input_dim: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Write analysis.json to this directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Propagation {
    Anorm,
    AnormTilde,
}

impl Propagation {
    fn kind(self) -> OperatorKind {
        match self {
            Propagation::Anorm => OperatorKind::NormalizedAdjacency,
            Propagation::AnormTilde => OperatorKind::RenormalizedAdjacency,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum WeightsFlag {
    None,
    First(usize),
    PerLayer(Option<usize>),
}

impl WeightsFlag {
    fn mode(&self, input_dim: usize, layers: usize, seed: u64) -> WeightMode {
        match *self {
            WeightsFlag::None => WeightMode::None,
            WeightsFlag::First(out_dim) => WeightMode::FirstLayerOnly { out_dim, seed },
            WeightsFlag::PerLayer(w) => WeightMode::PerLayer {
                dims: vec![w.unwrap_or(input_dim); layers],
                seed,
            },
        }
    }
}

fn parse_weights(s: &str) -> Result<WeightsFlag, String> {
    let positive = |w: &str| match w.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("width must be a positive integer, got {w:?}")),
    };
    match s {
        "none" => Ok(WeightsFlag::None),
        "per-layer" => Ok(WeightsFlag::PerLayer(None)),
        _ => {
            if let Some(w) = s.strip_prefix("first:") {
                positive(w).map(WeightsFlag::First)
            } else if let Some(w) = s.strip_prefix("per-layer:") {
                positive(w).map(|v| WeightsFlag::PerLayer(Some(v)))
            } else {
                Err("expected none, first:<width>, per-layer or per-layer:<width>".into())
            }
        }
    }
}

fn parse_selector(s: &str) -> Result<DatasetSelector, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn parse_operator(s: &str) -> Result<OperatorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = experiments::DEFAULT_LAYERS, value_parser = parse_positive)]
    layers: usize,
    #[arg(long, value_enum, default_value = "anorm")]
    operator: Propagation,
    /// none, first:<width>, per-layer or per-layer:<width>
    #[arg(long, default_value = "none", value_parser = parse_weights)]
    weights: WeightsFlag,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Divide energies by the number of nodes
    #[arg(long)]
    volume: bool,
    /// Output directory
    #[arg(long, default_value = "oversmooth-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SpectraArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "delta-norm", value_parser = parse_operator)]
    operator: OperatorKind,
    /// Also write the delta-norm / delta eigenbasis overlap matrix
    #[arg(long)]
    superposition: bool,
    #[arg(long, default_value = "oversmooth-out")]
    out: PathBuf,
}

#[derive(Args)]
struct AxiomsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// delta, delta-norm, delta-tilde-norm, conjugate:<base> or conjugate-tilde:<base>
    #[arg(long, default_value = "delta")]
    operator: String,
    #[arg(long, default_value_t = 64)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_AXIOM_TOL)]
    tol: f64,
    #[arg(long, default_value = "oversmooth-out")]
    out: PathBuf,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = experiments::DEFAULT_LAYERS, value_parser = parse_positive)]
    layers: usize,
    #[arg(long, default_value = "per-layer", value_parser = parse_weights)]
    weights: WeightsFlag,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "oversmooth-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_parser = parse_operator)]
    operator: OperatorKind,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproArgs {
    #[arg(long, value_parser = parse_experiment)]
    experiment: Experiment,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Root directory; outputs go to <out>/<experiment>/
    #[arg(long, default_value = "repro")]
    out: PathBuf,
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(Error::Io(e))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let data_dir = cli.data_dir.as_deref();
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a, data_dir),
        Command::Simulate(a) => simulate(a, data_dir),
        Command::Spectra(a) => spectra(a, data_dir),
        Command::Axioms(a) => axioms(a, data_dir),
        Command::Ratio(a) => ratio(a, data_dir),
        Command::ExportOperator(a) => export_operator(a, data_dir),
        Command::Repro(a) => repro(a, data_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

struct Input {
    graph: Graph,
    signal: SignalMatrix,
    dataset_id: String,
    selector: String,
}

fn selector_text(sel: &DatasetSelector) -> String {
    match sel {
        DatasetSelector::Enzymes(i) => format!("enzymes:{i}"),
        DatasetSelector::CoraLcc => "cora-lcc".into(),
        DatasetSelector::Builtin(b) => format!("builtin:{}", b.name()),
        DatasetSelector::File(p) => p.display().to_string(),
    }
}

fn load_input(args: &GraphArgs, data_dir: Option<&Path>, seed: u64) -> Result<Input, Failure> {
    let loaded = io::load_selected(&args.graph, data_dir)?;
    let signal = match loaded.features {
        Some(x) => x,
        None => {
            if args.input_dim == 0 {
                return Err(Failure::Usage("--input-dim must be positive".into()));
            }
            SignalMatrix::gaussian(loaded.graph.n_nodes(), args.input_dim, seed)
        }
    };
    Ok(Input {
        graph: loaded.graph,
        signal,
        dataset_id: loaded.dataset_id,
        selector: selector_text(&args.graph),
    })
}

fn write_files(dir: &Path, files: &[(String, String)]) -> CmdResult {
    fs::create_dir_all(dir)?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct RunEcho<'a> {
    command: &'a str,
    graph: &'a str,
    input_dim: usize,
    propagation: &'a PropagationConfig,
}

fn simulate(a: &SimulateArgs, data_dir: Option<&Path>) -> CmdResult {
    let input = load_input(&a.graph, data_dir, a.seed)?;
    let cfg = PropagationConfig {
        operator_kind: a.operator.kind(),
        layers: a.layers,
        weight_mode: a.weights.mode(input.signal.n_cols(), a.layers, a.seed),
        track_volume_constant: a.volume,
    };
    let echo = RunEcho {
        command: "simulate",
        graph: &input.selector,
        input_dim: input.signal.n_cols(),
        propagation: &cfg,
    };
    let out = experiments::simulate_run(
        &input.graph,
        &input.signal,
        &cfg,
        &input.dataset_id,
        &input.selector,
        &echo,
        a.seed,
    )?;
    write_files(&a.out, &out.files)?;
    for line in &out.summary {
        println!("{line}");
    }
    Ok(())
}

fn ratio(a: &RatioArgs, data_dir: Option<&Path>) -> CmdResult {
    let input = load_input(&a.graph, data_dir, a.seed)?;
    let cfg = PropagationConfig {
        operator_kind: OperatorKind::NormalizedAdjacency,
        layers: a.layers,
        weight_mode: a.weights.mode(input.signal.n_cols(), a.layers, a.seed),
        track_volume_constant: false,
    };
    let echo = RunEcho {
        command: "ratio",
        graph: &input.selector,
        input_dim: input.signal.n_cols(),
        propagation: &cfg,
    };
    let out = experiments::simulate_run(
        &input.graph,
        &input.signal,
        &cfg,
        &input.dataset_id,
        &input.selector,
        &echo,
        a.seed,
    )?;
    let rt = energy_ratio_trace(&out.trace);
    let mut files = vec![("ratio.csv".to_string(), io::export_ratio_csv(&rt.points, rt.cut))];
    files.extend(out.files.iter().filter(|(n, _)| n == "trace.csv").cloned());
    write_files(&a.out, &files)?;

    println!("pre-floor layers: {}", rt.points.len());
    if let Some(k) = rt.cut {
        println!("numerical floor reached at layer {k}");
    }
    let g = &input.graph;
    match experiments::ratio_range(&rt) {
        None => println!("no layer has both energies above the floor"),
        Some((lo, hi)) if g.is_regular() => {
            let d = g.degree(0) as f64;
            let dev = rt.points.iter().map(|(_, r)| (r - d).abs()).fold(0.0, f64::max);
            let verdict = if dev <= 1e-9 { "constant" } else { "not constant" };
            println!(
                "regular graph, d = {}: ratio {verdict} (max |ratio - d| = {}, min {}, max {})",
                g.degree(0),
                io::fmt_g17(dev),
                io::fmt_g17(lo),
                io::fmt_g17(hi)
            );
        }
        Some((lo, hi)) => println!(
            "non-regular graph: ratio varies, min {} max {}",
            io::fmt_g17(lo),
            io::fmt_g17(hi)
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct Analysis {
    stats: graph::GraphStats,
    commutator_frobenius: f64,
    commuting: bool,
    kernel_dispersion: f64,
    dispersion_witness: Option<WitnessEcho>,
}

#[derive(Serialize)]
struct WitnessEcho {
    eigen_index: usize,
    eigenvalue: f64,
    frequencies: Vec<f64>,
}

fn analyze(a: &AnalyzeArgs, data_dir: Option<&Path>) -> CmdResult {
    let loaded = io::load_selected(&a.graph.graph, data_dir)?;
    let g = &loaded.graph;
    let st = graph::stats(g);
    println!(
        "nodes {}  edges {}  connected {}  regular {}  bipartite {}",
        st.n_nodes, st.n_edges, st.connected, st.regular, st.bipartite
    );
    println!(
        "degree: avg {:.4}  variance {:.4}  min {}  max {}",
        st.avg_degree, st.degree_variance, st.min_degree, st.max_degree
    );
    let l = build(g, OperatorKind::UnnormalizedLaplacian)?;
    let ln = build(g, OperatorKind::NormalizedLaplacian)?;
    let c = frobenius(&commutator(&ln, &l)?);
    let commuting = c <= oversmooth::operators::DEFAULT_COMMUTATION_TOL;
    println!("||[delta-norm, delta]||_F = {}  commuting: {commuting}", io::fmt_g17(c));

    let exp = FilterExpansion::new(g)?;
    let kernel = kernel_generator(g, OperatorKind::NormalizedLaplacian)?;
    let disp = spectral::spectral_dispersion(&kernel.vector, &exp.laplacian)?;
    println!("dispersion of the delta-norm kernel in the delta basis: {}", io::fmt_g17(disp));
    let witness = spectral::dispersion_witness(g, 1e-9)?.map(|w| WitnessEcho {
        eigen_index: w.eigen_index,
        eigenvalue: w.eigenvalue,
        frequencies: w.spread.iter().map(|(f, _)| *f).collect(),
    });
    match &witness {
        Some(w) => println!(
            "delta-norm eigenvector {} (eigenvalue {}) spreads over {} delta frequencies",
            w.eigen_index,
            io::fmt_g17(w.eigenvalue),
            w.frequencies.len()
        ),
        None => println!("every delta-norm eigenvector stays at a single delta frequency"),
    }
    if let Some(dir) = &a.out {
        let analysis = Analysis {
            stats: st,
            commutator_frobenius: c,
            commuting,
            kernel_dispersion: disp,
            dispersion_witness: witness,
        };
        #[derive(Serialize)]
        struct Echo<'a> {
            command: &'a str,
            graph: &'a str,
        }
        let sel = selector_text(&a.graph.graph);
        let manifest = RunManifest::new(
            &loaded.dataset_id,
            &sel,
            &Echo {
                command: "analyze",
                graph: &sel,
            },
            0,
        );
        let json = io::export_json_document(vec![
            ("analysis", io::to_canonical(&analysis)),
            ("manifest", io::to_canonical(&manifest)),
        ]);
        write_files(dir, &[("analysis.json".into(), json)])?;
    }
    Ok(())
}

fn spectra(a: &SpectraArgs, data_dir: Option<&Path>) -> CmdResult {
    if let OperatorKind::Custom(name) = &a.operator {
        return Err(Failure::Usage(format!("unknown operator {name}")));
    }
    let loaded = io::load_selected(&a.graph.graph, data_dir)?;
    let g = &loaded.graph;
    let dec = eigendecompose(&build(g, a.operator.clone())?)?;
    let mut files = vec![(format!("spectrum_{}.csv", a.operator), io::export_spectrum_csv(&dec))];
    println!(
        "{}: {} eigenvalues in [{}, {}]",
        a.operator,
        dec.dim(),
        io::fmt_g17(dec.eigenvalues[0]),
        io::fmt_g17(dec.eigenvalues[dec.dim() - 1])
    );
    if a.superposition {
        let exp = FilterExpansion::new(g)?;
        files.push((
            "superposition.csv".into(),
            io::export_superposition_csv(&exp.overlap),
        ));
    }
    write_files(&a.out, &files)
}

fn measure_for(name: &str, g: &Graph) -> Result<MeasureDescriptor, Failure> {
    let usage = || Failure::Usage(format!("unknown measure operator {name:?}"));
    let (wrap, base) = match name.split_once(':') {
        Some(("conjugate", b)) => (Some(false), b),
        Some(("conjugate-tilde", b)) => (Some(true), b),
        Some(_) => return Err(usage()),
        None => (None, name),
    };
    let kind: OperatorKind = base.parse().map_err(|_| usage())?;
    if !kind.is_laplacian() {
        return Err(usage());
    }
    let n = g.n_nodes().max(1) as f64;
    let desc = MeasureDescriptor::from_operator(&build(g, kind)?, 1.0 / n, true)?;
    Ok(match wrap {
        None => desc,
        Some(false) => normalize_conjugation(&desc, g)?,
        Some(true) => renormalize_conjugation(&desc, g)?,
    })
}

fn axioms(a: &AxiomsArgs, data_dir: Option<&Path>) -> CmdResult {
    let loaded = io::load_selected(&a.graph.graph, data_dir)?;
    let g = &loaded.graph;
    let desc = measure_for(&a.operator, g)?;
    let report = axiom_report(&desc, g, a.trials, a.tol, a.seed)?;
    let status = |v: Option<bool>| match v {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "N/A",
    };
    println!("measure: sqrt((1/|V|) tr(X^T M X)) with M = {}", desc.label);
    print!("axiom1: {}", status(report.holds_axiom1));
    if let Some(f) = report.axiom1_failure {
        let kind = match f {
            Axiom1Failure::ConstantNotZero => "constant signal with positive measure",
            Axiom1Failure::ZeroNotConstant => "non-constant signal with zero measure",
        };
        print!(" (witness: {kind}");
        if let Some(m) = report.witness_measure {
            print!(", measure {}", io::fmt_g17(m));
        }
        print!(")");
    }
    println!();
    println!("axiom2: {}", status(report.holds_axiom2));

    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        operator: &'a str,
        trials: usize,
        tol: f64,
    }
    let manifest = RunManifest::new(
        &loaded.dataset_id,
        selector_text(&a.graph.graph),
        &Echo {
            command: "axioms",
            operator: &a.operator,
            trials: a.trials,
            tol: a.tol,
        },
        a.seed,
    );
    write_files(&a.out, &[("axioms.json".into(), io::export_axiom_json(&report, &manifest))])
}

fn export_operator(a: &ExportArgs, data_dir: Option<&Path>) -> CmdResult {
    if let OperatorKind::Custom(name) = &a.operator {
        return Err(Failure::Usage(format!("unknown operator {name}")));
    }
    let loaded = io::load_selected(&a.graph.graph, data_dir)?;
    let op = build(&loaded.graph, a.operator.clone())?;
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        operator: &'a str,
    }
    let manifest = RunManifest::new(
        &loaded.dataset_id,
        selector_text(&a.graph.graph),
        &Echo {
            command: "export-operator",
            operator: a.operator.name(),
        },
        0,
    );
    let csv = io::export_operator_csv(op.matrix(), &manifest);
    match &a.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn repro(a: &ReproArgs, data_dir: Option<&Path>) -> CmdResult {
    let out = experiments::run_experiment(a.experiment, data_dir, a.seed)?;
    write_files(&a.out.join(a.experiment.name()), &out.files)?;
    for line in &out.summary {
        println!("{line}");
    }
    Ok(())
}
