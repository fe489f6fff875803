//! Ground truth for validating the message-passing solver: dense
//! diagonalization, dense resolvent traces, closed-walk moments and
//! brute-force excursion counts.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{FactorGraph, NodeId};
use crate::grid::Grid;
use crate::linalg::{symmetric_eigenvalues, ComplexLu};
use crate::mp::{solve_at_z, ComplexArg, SolveConfig, SolveError};

pub const DEFAULT_MAX_N: usize = 5000;
pub const DEFAULT_BIN_WIDTH: f64 = 0.1;
/// Longest walks counted by [`trace_moments`] and [`count_excursions`].
pub const MAX_WALK_LENGTH: usize = 12;
/// Largest network accepted by [`count_excursions`].
pub const MAX_EXCURSION_NODES: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("network has {n} nodes, above the dense limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("walk length {r} exceeds the limit of {max}")]
    TooDeep { r: usize, max: usize },
    #[error("symmetric eigenvalue iteration did not converge")]
    EigenFailed,
    #[error("z I - A is numerically singular")]
    SingularResolvent,
    #[error("node {node} is not a member of motif {motif}")]
    NotIncident { node: usize, motif: usize },
    #[error("|z| = {z_abs} must exceed twice the maximum degree {max_degree}")]
    ZTooSmall { z_abs: f64, max_degree: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Histogram normalized to a density: `density[i] = count[i] / (n * width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// Bins of `width` covering `[min - 0.5, max + 0.5]`.
    pub fn new(values: &[f64], width: f64) -> Histogram {
        assert!(width > 0.0);
        if values.is_empty() {
            return Histogram { edges: vec![0.0], counts: Vec::new(), density: Vec::new() };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 0.5;
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.5;
        Histogram::with_range(values, lo, hi, width)
    }

    /// Bins of `width` starting at `lo`, enough of them to reach `hi`.
    pub fn with_range(values: &[f64], lo: f64, hi: f64, width: f64) -> Histogram {
        let bins = (((hi - lo) / width).ceil() as usize).max(1);
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = ((v - lo) / width).floor();
            if k >= 0.0 && (k as usize) < bins {
                counts[k as usize] += 1;
            }
        }
        let scale = 1.0 / (values.len().max(1) as f64 * width);
        let density = counts.iter().map(|&c| c as f64 * scale).collect();
        Histogram { edges, counts, density }
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedDensity {
    pub grid: Vec<f64>,
    pub eta: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Ascending, one per node.
    pub eigenvalues: Vec<f64>,
    pub histogram: Histogram,
    /// `sum_i lambda_i^r / n` for `r = 0..=MAX_WALK_LENGTH`.
    pub moments: Vec<f64>,
    pub smoothed: Option<SmoothedDensity>,
}

impl EigenReport {
    pub fn from_eigenvalues(eigenvalues: Vec<f64>, bin_width: f64) -> EigenReport {
        let n = eigenvalues.len().max(1) as f64;
        let moments =
            (0..=MAX_WALK_LENGTH).map(|r| eigenvalues.iter().map(|l| l.powi(r as i32)).sum::<f64>() / n).collect();
        let histogram = Histogram::new(&eigenvalues, bin_width);
        EigenReport { eigenvalues, histogram, moments, smoothed: None }
    }

    /// Fills [`EigenReport::smoothed`] on `grid`.
    pub fn smooth(&mut self, grid: &Grid, eta: f64) {
        let xs: Vec<f64> = grid.points().collect();
        let values = smoothed_density(&self.eigenvalues, &xs, eta);
        self.smoothed = Some(SmoothedDensity { grid: xs, eta, values });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagConfig {
    pub max_n: usize,
    pub bin_width: f64,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig { max_n: DEFAULT_MAX_N, bin_width: DEFAULT_BIN_WIDTH }
    }
}

pub fn diagonalize(fg: &FactorGraph) -> Result<EigenReport, OracleError> {
    diagonalize_with(fg, &DiagConfig::default())
}

/// All adjacency eigenvalues by Householder tridiagonalization and implicit QL.
pub fn diagonalize_with(fg: &FactorGraph, cfg: &DiagConfig) -> Result<EigenReport, OracleError> {
    let n = fg.n();
    if n > cfg.max_n {
        return Err(OracleError::TooLarge { n, max: cfg.max_n });
    }
    let eigenvalues = symmetric_eigenvalues(fg.adjacency().to_dense(), n).ok_or(OracleError::EigenFailed)?;
    Ok(EigenReport::from_eigenvalues(eigenvalues, cfg.bin_width))
}

/// `(1/n) sum_i (eta/pi) / ((x - lambda_i)^2 + eta^2)` at each `x`.
pub fn smoothed_density(eigenvalues: &[f64], xs: &[f64], eta: f64) -> Vec<f64> {
    assert!(eta > 0.0, "eta must be positive");
    let n = eigenvalues.len().max(1) as f64;
    xs.iter()
        .map(|&x| eigenvalues.iter().map(|&l| eta / ((x - l).powi(2) + eta * eta)).sum::<f64>() / (PI * n))
        .collect()
}

/// `Tr A^r / n` for `r = 0..=r_max`, from repeated sparse products `A^k e_u`.
pub fn trace_moments(fg: &FactorGraph, r_max: usize) -> Result<Vec<f64>, OracleError> {
    if r_max > MAX_WALK_LENGTH {
        return Err(OracleError::TooDeep { r: r_max, max: MAX_WALK_LENGTH });
    }
    let adj = fg.adjacency();
    let n = fg.n();
    let mut traces = vec![0.0; r_max + 1];
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for u in 0..n {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[u] = 1.0;
        traces[0] += 1.0;
        for t in traces.iter_mut().skip(1) {
            adj.matvec(&v, &mut w);
            std::mem::swap(&mut v, &mut w);
            *t += v[u];
        }
    }
    let scale = 1.0 / n.max(1) as f64;
    Ok(traces.into_iter().map(|t| t * scale).collect())
}

/// Dense `Tr (z I - A)^-1` by complex LU.
pub fn resolvent_trace(fg: &FactorGraph, z: Complex64) -> Result<Complex64, OracleError> {
    let n = fg.n();
    let a = fg.adjacency().to_dense();
    let m: Vec<Complex64> = (0..n * n)
        .map(|k| {
            let diag = if k / n == k % n { z } else { Complex64::default() };
            diag - a[k]
        })
        .collect();
    let lu = ComplexLu::factor(m, n, 1e-300).ok_or(OracleError::SingularResolvent)?;
    let mut total = Complex64::default();
    let mut col = vec![Complex64::default(); n];
    for i in 0..n {
        col.iter_mut().for_each(|c| *c = Complex64::default());
        col[i] = Complex64::new(1.0, 0.0);
        lu.solve(&mut col);
        total += col[i];
    }
    Ok(total)
}

/// `-(1/(n pi)) Tr (z I - A)^-1`, computed densely.
pub fn dense_rho(fg: &FactorGraph, z: Complex64) -> Result<Complex64, OracleError> {
    Ok(-resolvent_trace(fg, z)? / (fg.n() as f64 * PI))
}

/// Neighbour lists with the motif contributing each edge.
fn labelled_neighbours(fg: &FactorGraph) -> Vec<Vec<(usize, usize)>> {
    let mut nb = vec![Vec::new(); fg.n()];
    for (id, m) in fg.motifs().iter().enumerate() {
        for &(i, j) in m.internal_edges() {
            let (a, b) = (m.members()[i].index(), m.members()[j].index());
            nb[a].push((b, id));
            nb[b].push((a, id));
        }
    }
    nb
}

/// Number of walks of length `r` that leave `u` along an edge of `motif`,
/// avoid `u` in between, and return to `u` along an edge of `motif`.
/// Counted by exhaustive depth-first enumeration.
pub fn count_excursions(fg: &FactorGraph, u: NodeId, motif: usize, r: usize) -> Result<u64, OracleError> {
    if r > MAX_WALK_LENGTH {
        return Err(OracleError::TooDeep { r, max: MAX_WALK_LENGTH });
    }
    if fg.n() > MAX_EXCURSION_NODES {
        return Err(OracleError::TooLarge { n: fg.n(), max: MAX_EXCURSION_NODES });
    }
    if motif >= fg.motifs().len() || fg.motif(motif).position_of(u).is_none() {
        return Err(OracleError::NotIncident { node: u.index(), motif });
    }
    if r < 2 {
        return Ok(0);
    }
    let nb = labelled_neighbours(fg);
    let home = u.index();

    fn walk(nb: &[Vec<(usize, usize)>], home: usize, motif: usize, at: usize, left: usize) -> u64 {
        if left == 1 {
            return nb[at].iter().filter(|&&(w, s)| w == home && s == motif).count() as u64;
        }
        nb[at].iter().filter(|&&(w, _)| w != home).map(|&(w, _)| walk(nb, home, motif, w, left - 1)).sum()
    }

    Ok(nb[home].iter().filter(|&&(_, s)| s == motif).map(|&(v, _)| walk(&nb, home, motif, v, r - 1)).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCheck {
    /// Converged message from the solver.
    pub mu: Complex64,
    /// `sum_{r=1}^{r_max} N_r / z^(r-1)`.
    pub partial_sum: Complex64,
    pub residual: f64,
    /// Bound on the neglected terms, `mult * q^r_max / (1 - q)` with
    /// `q = max_degree / |z|` (`N_r <= mult * max_degree^(r-1)`).
    pub tail_bound: f64,
}

impl SeriesCheck {
    pub fn within_bound(&self) -> bool {
        self.residual <= self.tail_bound
    }
}

/// Compares the solver's motif-to-node message against its walk-count series.
pub fn series_check(
    fg: &FactorGraph,
    u: NodeId,
    motif: usize,
    z: ComplexArg,
    r_max: usize,
    cfg: &SolveConfig,
) -> Result<SeriesCheck, OracleError> {
    let adj = fg.adjacency();
    let max_degree = adj.max_degree();
    let zc = z.z();
    if zc.norm() <= 2.0 * max_degree as f64 {
        return Err(OracleError::ZTooSmall { z_abs: zc.norm(), max_degree });
    }
    let position = fg.motif(motif).position_of(u).ok_or(OracleError::NotIncident { node: u.index(), motif })?;
    let state = solve_at_z(fg, z, cfg, None)?.require_converged()?;
    let mu = state.mu()[fg.incidence_id(motif, position)];
    let mut partial = Complex64::default();
    let mut zpow = Complex64::new(1.0, 0.0);
    for r in 1..=r_max {
        partial += count_excursions(fg, u, motif, r)? as f64 / zpow;
        zpow *= zc;
    }
    let mult = adj.edges().chunk_by(|a, b| a == b).map(<[_]>::len).max().unwrap_or(1) as f64;
    let q = max_degree as f64 / zc.norm();
    let tail_bound = mult * q.powi(r_max as i32) / (1.0 - q);
    Ok(SeriesCheck { mu, partial_sum: partial, residual: (mu - partial).norm(), tail_bound })
}
