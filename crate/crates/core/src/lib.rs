//! Adjacency spectra of networks assembled from small motifs.
//!
//! A network is described as a set of motifs (single edges, triangles,
//! rings, or arbitrary small connected subgraphs) glued together at shared
//! nodes. When the bipartite node/motif incidence structure is tree-like,
//! the resolvent trace of the adjacency matrix can be computed by passing
//! complex messages between nodes and motifs. This crate provides:
//!
//! - [`graph`]: motif networks, their factor graphs and adjacency views
//! - [`generators`]: seeded random edge/triangle and configuration-model ensembles
//! - [`mp`]: the message-passing solver and spectral-density scans
//! - [`closed_form`]: the analytic density of the regular edge/triangle ensemble
//! - [`oracle`]: dense diagonalization, resolvent traces, walk and excursion counts
//! - [`compare`]: distances between density curves
//! - [`io`]: network JSON and density CSV formats

pub mod closed_form;
pub mod compare;
pub mod generators;
pub mod graph;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod mp;
pub mod oracle;

pub use num_complex::Complex64;

pub use closed_form::{band_edges, mu_regular, peak_weights, rho_regular_complex, rho_regular_real, PeakWeights};
pub use compare::{compare, CompareError, CompareReport, Metric};
pub use generators::{
    degrees_of, gen_configuration_model, gen_poisson_edge_triangle, gen_regular_edge_triangle, generate, GenError,
    GenSpec, Model,
};
pub use graph::{build_factor_graph, AdjacencyView, FactorGraph, GraphError, Incidence, Motif, MotifKind, NodeId};
pub use grid::Grid;
pub use io::{DensityRow, DensityTable, IoError};
pub use mp::{
    density_scan, moments_from_density, solve_at_z, spectral_density_at, ComplexArg, MessageState, Solution,
    SolveConfig, SolveError, SpectrumResult,
};
pub use oracle::{
    count_excursions, dense_rho, diagonalize, series_check, smoothed_density, trace_moments, EigenReport, Histogram,
    OracleError, SeriesCheck,
};
