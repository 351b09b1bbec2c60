//! Spectral diagnostics for over-smoothing in graph neural network dynamics.
//!
//! The crate is organised around a handful of small modules:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graph`] | Undirected simple graphs, text loaders (edge list, TU, Cora), LCC, statistics |
//! | [`operators`] | Δ, Δ_norm, Δ̃_norm, A_norm, Ã_norm as dense matrices; commutators; kernel generators |
//! | [`energy`] | Dirichlet energies, trace-induced measures, node-similarity axiom checks |
//! | [`spectral`] | Symmetric eigensolver, superposition matrices, filtered-energy expansion |
//! | [`dynamics`] | Deep linear GCN propagation with per-layer traces, decay fits, regime classifier |
//! | [`io`] | `%.17g` CSV/JSON exports, manifests, dataset discovery |
//! | [`experiments`] | Named recipes reproducing the reference experiments |
//!
//! All matrices are dense `ndarray::Array2<f64>`.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod operators;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use energy::SignalMatrix;
pub use graph::{Graph, GraphStats};
pub use operators::{GraphOperator, OperatorKind};
