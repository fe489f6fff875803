//! Message passing on the node/motif factor graph.
//!
//! Two kinds of complex messages live on every incidence (node `u` in motif
//! `s`):
//!
//! - `g[s -> u]`, sent by node `u` to motif `s`: the cavity resolvent of `u`
//!   with `s` removed, `1 / (z - sum of mu[u <- t] over the other motifs t)`.
//! - `mu[u <- s]`, sent by motif `s` to node `u`: the generating function of
//!   closed walks that leave `u` through `s` and first return through `s`,
//!   with every other node `v` of `s` weighted by `g[s -> v]`.
//!
//! At a fixed point the complex density is
//! `rho(z) = -1/(n pi) sum_u 1 / (z - sum_s mu[u <- s])`, and `Im rho(x + i eta)`
//! is the eta-broadened spectral density. On networks whose factor graph is a
//! tree this is exact for every `eta > 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{FactorGraph, Motif, MotifKind, NodeId};
use crate::grid::{trapezoid, Grid};
use crate::io::{DensityRow, DensityTable};
use crate::linalg::ComplexLu;

/// Below this magnitude a denominator is treated as singular.
pub const SINGULAR_EPS: f64 = 1e-14;

// Incidence count above which sweeps run on the rayon pool.
const PAR_INCIDENCES: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("broadening must be finite and > 0, got {0}")]
    InvalidEta(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("near-singular denominator {value:e} at node {node}, motif {motif:?}")]
    NearSingular { node: usize, motif: Option<usize>, value: f64 },
    #[error("triangle walk series diverges (|1 - g_v g_w| = {value:e}) at node {node}, motif {motif}")]
    GeometricSeriesDivergence { node: usize, motif: usize, value: f64 },
    #[error("singular motif walk system at node {node}, motif {motif}")]
    SingularMotifSolve { node: usize, motif: usize },
    #[error("not converged after {iterations} iterations (last change {last_delta:e})")]
    NotConverged { iterations: usize, last_delta: f64 },
    #[error("message state does not match the factor graph ({expected} incidences, got {got})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node {node} is not a member of motif {motif}")]
    NotIncident { node: usize, motif: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid [{xmin}, {xmax}] does not cover the support [{lo}, {hi}] with margin {margin}")]
    GridTooNarrow { xmin: f64, xmax: f64, lo: f64, hi: f64, margin: f64 },
}

/// `z = x + i eta` with `eta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexArg {
    x: f64,
    eta: f64,
}

impl ComplexArg {
    pub fn new(x: f64, eta: f64) -> Result<ComplexArg, SolveError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(SolveError::InvalidEta(eta));
        }
        if !x.is_finite() {
            return Err(SolveError::InvalidGrid(format!("non-finite x = {x}")));
        }
        Ok(ComplexArg { x, eta })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Convergence threshold on the largest absolute message change.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the previous message when mixing, in `[0, 1)`.
    pub damping: f64,
    /// Start each grid point from the previous point's messages.
    pub warm_start: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { tol: 1e-10, max_iter: 100_000, damping: 0.0, warm_start: true }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0) {
            return Err(SolveError::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(SolveError::InvalidConfig(format!("damping must lie in [0, 1), got {}", self.damping)));
        }
        if self.max_iter == 0 {
            return Err(SolveError::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Messages for every incidence, indexed by incidence id (see
/// [`FactorGraph::incidence_id`]), at one value of `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    z: ComplexArg,
    mu: Vec<Complex64>,
    g: Vec<Complex64>,
}

impl MessageState {
    pub fn zeros(fg: &FactorGraph, z: ComplexArg) -> MessageState {
        let m = fg.incidence_count();
        MessageState { z, mu: vec![Complex64::default(); m], g: vec![Complex64::default(); m] }
    }

    pub fn from_parts(z: ComplexArg, mu: Vec<Complex64>, g: Vec<Complex64>) -> MessageState {
        assert_eq!(mu.len(), g.len());
        MessageState { z, mu, g }
    }

    pub fn z(&self) -> ComplexArg {
        self.z
    }

    /// Motif-to-node messages.
    pub fn mu(&self) -> &[Complex64] {
        &self.mu
    }

    /// Node-to-motif messages.
    pub fn g(&self) -> &[Complex64] {
        &self.g
    }

    pub fn mu_mut(&mut self) -> &mut [Complex64] {
        &mut self.mu
    }

    /// Same messages, relabelled to a new `z` (for warm starts).
    pub fn at(mut self, z: ComplexArg) -> MessageState {
        self.z = z;
        self
    }

    fn is_finite(&self) -> bool {
        self.mu.iter().chain(&self.g).all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `1 / (z - sum)`, failing when the denominator is numerically zero.
fn cavity(z: Complex64, sum: Complex64, node: usize, motif: Option<usize>) -> Result<Complex64, SolveError> {
    let den = z - sum;
    if !(den.norm_sqr() >= SINGULAR_EPS * SINGULAR_EPS) {
        return Err(SolveError::NearSingular { node, motif, value: den.norm() });
    }
    Ok(den.inv())
}

/// Node-to-motif message from the current motif-to-node messages.
pub fn g_update(fg: &FactorGraph, state: &MessageState, u: NodeId, motif: usize) -> Result<Complex64, SolveError> {
    check_dims(fg, state)?;
    let incs = fg.incidence(u);
    if !incs.iter().any(|inc| inc.motif == motif) {
        return Err(SolveError::NotIncident { node: u.index(), motif });
    }
    let sum: Complex64 = incs
        .iter()
        .filter(|inc| inc.motif != motif)
        .map(|inc| state.mu[fg.incidence_id(inc.motif, inc.position)])
        .sum();
    cavity(state.z.z(), sum, u.index(), Some(motif))
}

/// Single edge: the only excursion goes out and straight back.
#[inline]
pub fn mu_edge(g_other: Complex64) -> Complex64 {
    g_other
}

/// Triangle with the other corners carrying `g_v` and `g_w`: the walk hops
/// to one of them, bounces between the two any number of times, then returns.
#[inline]
pub fn mu_triangle(g_v: Complex64, g_w: Complex64) -> Result<Complex64, Complex64> {
    let prod = g_v * g_w;
    let den = Complex64::new(1.0, 0.0) - prod;
    if !(den.norm_sqr() > SINGULAR_EPS * SINGULAR_EPS) {
        return Err(den);
    }
    Ok((2.0 * prod + g_v + g_w) / den)
}

/// Motif-to-node message for an arbitrary motif by resumming its walk series.
///
/// With `B` the internal adjacency and `G` the diagonal of `g_values` with
/// the entry at `u_position` zeroed (so walks cannot pass through `u`), this is
/// `[B (I - G B)^-1]_{uu}`. Returns `None` if `I - G B` is singular.
pub fn mu_general(motif: &Motif, u_position: usize, g_values: &[Complex64]) -> Option<Complex64> {
    mu_from_adjacency(&motif.internal_adjacency(), motif.size(), u_position, g_values)
}

fn mu_from_adjacency(b: &[f64], m: usize, u: usize, g: &[Complex64]) -> Option<Complex64> {
    assert_eq!(g.len(), m);
    let one = Complex64::new(1.0, 0.0);
    let mut a = vec![Complex64::default(); m * m];
    for i in 0..m {
        let gi = if i == u { Complex64::default() } else { g[i] };
        for j in 0..m {
            a[i * m + j] = -gi * b[i * m + j];
        }
        a[i * m + i] += one;
    }
    let lu = ComplexLu::factor(a, m, SINGULAR_EPS)?;
    let mut y = vec![Complex64::default(); m];
    y[u] = one;
    lu.solve(&mut y);
    Some((0..m).map(|j| b[u * m + j] * y[j]).sum())
}

#[derive(Debug, Clone)]
enum Rule {
    Edge,
    Triangle,
    Dense(Vec<f64>),
}

/// Precomputed incidence tables for repeated sweeps over one network.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    fg: &'a FactorGraph,
    inc_motif: Vec<usize>,
    inc_pos: Vec<usize>,
    inc_node: Vec<usize>,
    node_start: Vec<usize>,
    node_incs: Vec<usize>,
    rules: Vec<Rule>,
}

impl<'a> Solver<'a> {
    pub fn new(fg: &'a FactorGraph) -> Solver<'a> {
        let total = fg.incidence_count();
        let mut inc_motif = Vec::with_capacity(total);
        let mut inc_pos = Vec::with_capacity(total);
        let mut inc_node = Vec::with_capacity(total);
        let mut rules = Vec::with_capacity(fg.motifs().len());
        for (id, motif) in fg.motifs().iter().enumerate() {
            for (p, v) in motif.members().iter().enumerate() {
                inc_motif.push(id);
                inc_pos.push(p);
                inc_node.push(v.index());
            }
            rules.push(match motif.kind() {
                MotifKind::Edge => Rule::Edge,
                MotifKind::Triangle => Rule::Triangle,
                MotifKind::Cycle(_) | MotifKind::General => Rule::Dense(motif.internal_adjacency()),
            });
        }
        let mut node_start = vec![0; fg.n() + 1];
        let mut node_incs = Vec::with_capacity(total);
        for u in 0..fg.n() {
            node_incs.extend(fg.incidence(NodeId(u)).iter().map(|inc| fg.incidence_id(inc.motif, inc.position)));
            node_start[u + 1] = node_incs.len();
        }
        Solver { fg, inc_motif, inc_pos, inc_node, node_start, node_incs, rules }
    }

    pub fn factor_graph(&self) -> &FactorGraph {
        self.fg
    }

    fn incs_of(&self, u: usize) -> &[usize] {
        &self.node_incs[self.node_start[u]..self.node_start[u + 1]]
    }

    fn g_raw(&self, z: Complex64, mu: &[Complex64], id: usize) -> Result<Complex64, SolveError> {
        let node = self.inc_node[id];
        let sum: Complex64 = self.incs_of(node).iter().filter(|&&j| j != id).map(|&j| mu[j]).sum();
        cavity(z, sum, node, Some(self.inc_motif[id]))
    }

    fn mu_raw(&self, g: &[Complex64], id: usize) -> Result<Complex64, SolveError> {
        let motif = self.inc_motif[id];
        let pos = self.inc_pos[id];
        let base = id - pos;
        match &self.rules[motif] {
            Rule::Edge => Ok(mu_edge(g[base + 1 - pos])),
            Rule::Triangle => {
                let (q, r) = match pos {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                mu_triangle(g[base + q], g[base + r]).map_err(|den| SolveError::GeometricSeriesDivergence {
                    node: self.inc_node[id],
                    motif,
                    value: den.norm(),
                })
            }
            Rule::Dense(b) => {
                let m = self.fg.motif(motif).size();
                mu_from_adjacency(b, m, pos, &g[base..base + m])
                    .ok_or(SolveError::SingularMotifSolve { node: self.inc_node[id], motif })
            }
        }
    }

    fn map_incidences<F>(&self, out: &mut Vec<Complex64>, f: F) -> Result<(), SolveError>
    where
        F: Fn(usize) -> Result<Complex64, SolveError> + Sync,
    {
        const CHUNK: usize = 1024;
        let total = self.inc_node.len();
        out.resize(total, Complex64::default());
        let fill = |(c, chunk): (usize, &mut [Complex64])| -> Result<(), SolveError> {
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(c * CHUNK + k)?;
            }
            Ok(())
        };
        if total >= PAR_INCIDENCES && rayon::current_num_threads() > 1 {
            out.par_chunks_mut(CHUNK).enumerate().try_for_each(fill)
        } else {
            out.chunks_mut(CHUNK).enumerate().try_for_each(fill)
        }
    }

    /// One synchronous sweep: every `g` from the old `mu`, then every `mu`
    /// from the new `g`. With damping `d` each returned message is
    /// `d * old + (1 - d) * new`. Returns the largest absolute change.
    pub fn sweep_into(&self, old: &MessageState, new: &mut MessageState, cfg: &SolveConfig) -> Result<f64, SolveError> {
        check_dims(self.fg, old)?;
        let z = old.z.z();
        let d = cfg.damping;
        let mix = |o: Complex64, n: Complex64| if d == 0.0 { n } else { o * d + n * (1.0 - d) };
        self.map_incidences(&mut new.g, |id| Ok(mix(old.g[id], self.g_raw(z, &old.mu, id)?)))?;
        let g_new = std::mem::take(&mut new.g);
        let res = self.map_incidences(&mut new.mu, |id| Ok(mix(old.mu[id], self.mu_raw(&g_new, id)?)));
        new.g = g_new;
        res?;
        new.z = old.z;
        let delta = old
            .g
            .iter()
            .zip(&new.g)
            .chain(old.mu.iter().zip(&new.mu))
            .map(|(a, b)| (a - b).norm_sqr())
            .fold(0.0, |m: f64, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v) });
        Ok(delta.sqrt())
    }

    pub fn sweep(&self, state: &MessageState, cfg: &SolveConfig) -> Result<(MessageState, f64), SolveError> {
        let mut new = MessageState { z: state.z, mu: Vec::new(), g: Vec::new() };
        let delta = self.sweep_into(state, &mut new, cfg)?;
        Ok((new, delta))
    }

    /// Iterates sweeps from `init` (or all zeros) until the largest message
    /// change drops below `cfg.tol` or `cfg.max_iter` sweeps have run.
    pub fn solve(&self, z: ComplexArg, cfg: &SolveConfig, init: Option<&MessageState>) -> Result<Solution, SolveError> {
        cfg.validate()?;
        let mut cur = match init {
            Some(s) => {
                check_dims(self.fg, s)?;
                s.clone().at(z)
            }
            None => MessageState::zeros(self.fg, z),
        };
        let mut next = MessageState { z, mu: Vec::new(), g: Vec::new() };
        let mut last_delta = f64::INFINITY;
        for it in 1..=cfg.max_iter {
            last_delta = self.sweep_into(&cur, &mut next, cfg)?;
            std::mem::swap(&mut cur, &mut next);
            if last_delta < cfg.tol {
                return Ok(Solution { state: cur, converged: true, iterations: it, last_delta });
            }
            if !last_delta.is_finite() {
                break;
            }
        }
        Ok(Solution { state: cur, converged: false, iterations: cfg.max_iter, last_delta })
    }

    /// Complex density `-1/(n pi) sum_u 1 / (z - sum_s mu[u <- s])`.
    pub fn density(&self, state: &MessageState) -> Result<Complex64, SolveError> {
        check_dims(self.fg, state)?;
        let n = self.fg.n();
        if n == 0 {
            return Ok(Complex64::default());
        }
        let z = state.z.z();
        let mut total = Complex64::default();
        for u in 0..n {
            let sum: Complex64 = self.incs_of(u).iter().map(|&j| state.mu[j]).sum();
            total += cavity(z, sum, u, None)?;
        }
        Ok(-total / (n as f64 * std::f64::consts::PI))
    }
}

fn check_dims(fg: &FactorGraph, state: &MessageState) -> Result<(), SolveError> {
    let expected = fg.incidence_count();
    if state.mu.len() != expected || state.g.len() != expected {
        return Err(SolveError::DimensionMismatch { expected, got: state.mu.len().min(state.g.len()) });
    }
    Ok(())
}

/// Outcome of [`solve_at_z`]. Non-convergence is reported here rather than as
/// an error; use [`Solution::require_converged`] to turn it into one.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub state: MessageState,
    pub converged: bool,
    pub iterations: usize,
    pub last_delta: f64,
}

impl Solution {
    pub fn require_converged(self) -> Result<MessageState, SolveError> {
        if self.converged {
            Ok(self.state)
        } else {
            Err(SolveError::NotConverged { iterations: self.iterations, last_delta: self.last_delta })
        }
    }
}

pub fn sweep(fg: &FactorGraph, state: &MessageState, cfg: &SolveConfig) -> Result<(MessageState, f64), SolveError> {
    Solver::new(fg).sweep(state, cfg)
}

pub fn solve_at_z(
    fg: &FactorGraph,
    z: ComplexArg,
    cfg: &SolveConfig,
    init: Option<&MessageState>,
) -> Result<Solution, SolveError> {
    Solver::new(fg).solve(z, cfg, init)
}

pub fn spectral_density_at(fg: &FactorGraph, state: &MessageState) -> Result<Complex64, SolveError> {
    Solver::new(fg).density(state)
}

/// Broadened density on a grid, with per-point convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub grid: Vec<f64>,
    pub rho: Vec<f64>,
    pub eta: f64,
    pub converged: Vec<bool>,
    pub iterations: Vec<usize>,
}

impl SpectrumResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn to_table(&self) -> DensityTable {
        DensityTable {
            rows: (0..self.grid.len())
                .map(|i| DensityRow {
                    x: self.grid[i],
                    rho: self.rho[i],
                    converged: self.converged[i],
                    iterations: self.iterations[i],
                })
                .collect(),
        }
    }
}

struct Point {
    rho: f64,
    converged: bool,
    iterations: usize,
}

fn solve_point(
    solver: &Solver<'_>,
    z: ComplexArg,
    cfg: &SolveConfig,
    init: Option<&MessageState>,
) -> (Point, Option<MessageState>) {
    match solver.solve(z, cfg, init) {
        Ok(sol) => {
            let rho = solver.density(&sol.state).map(|c| c.im).unwrap_or(f64::NAN);
            let next = sol.state.is_finite().then_some(sol.state);
            (Point { rho, converged: sol.converged && rho.is_finite(), iterations: sol.iterations }, next)
        }
        Err(_) => (Point { rho: f64::NAN, converged: false, iterations: 0 }, None),
    }
}

/// `Im rho(x + i eta)` at every grid point.
///
/// With `cfg.warm_start` the points are solved in order, each starting from
/// the previous point's messages; otherwise they are solved independently
/// (in parallel) from zero. Points that fail or do not converge are flagged,
/// never fatal.
pub fn density_scan(fg: &FactorGraph, grid: &Grid, eta: f64, cfg: &SolveConfig) -> Result<SpectrumResult, SolveError> {
    cfg.validate()?;
    ComplexArg::new(grid.xmin, eta)?;
    if !(grid.dx > 0.0) {
        return Err(SolveError::InvalidGrid(format!("dx must be > 0, got {}", grid.dx)));
    }
    let solver = Solver::new(fg);
    let xs: Vec<f64> = grid.points().collect();
    let points: Vec<Point> = if cfg.warm_start {
        let mut prev: Option<MessageState> = None;
        xs.iter()
            .map(|&x| {
                let z = ComplexArg { x, eta };
                let (point, next) = solve_point(&solver, z, cfg, prev.as_ref());
                prev = next;
                point
            })
            .collect()
    } else {
        xs.par_iter().map(|&x| solve_point(&solver, ComplexArg { x, eta }, cfg, None).0).collect()
    };
    Ok(SpectrumResult {
        rho: points.iter().map(|p| p.rho).collect(),
        converged: points.iter().map(|p| p.converged).collect(),
        iterations: points.iter().map(|p| p.iterations).collect(),
        grid: xs,
        eta,
    })
}

/// Moments `m_r = integral x^r rho(x) dx` for `r = 0..=max_order` by the
/// trapezoid rule.
///
/// The support is taken to be the span of grid points where the density is
/// at least `1e-3` of its maximum; the grid must extend `10 * eta * max_order`
/// beyond it on both sides. Lorentzian tails bias each moment by `O(eta)`.
pub fn moments_from_density(result: &SpectrumResult, max_order: usize) -> Result<Vec<f64>, SolveError> {
    let xs = &result.grid;
    if xs.len() < 2 {
        return Err(SolveError::InvalidGrid("need at least two grid points".into()));
    }
    let dx = xs[1] - xs[0];
    let peak = result.rho.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let above: Vec<usize> = (0..xs.len()).filter(|&i| result.rho[i] >= 1e-3 * peak).collect();
    let (lo, hi) = match (above.first(), above.last()) {
        (Some(&a), Some(&b)) => (xs[a], xs[b]),
        _ => return Err(SolveError::InvalidGrid("density is identically zero".into())),
    };
    let margin = 10.0 * result.eta * max_order as f64;
    let (xmin, xmax) = (xs[0], xs[xs.len() - 1]);
    if lo - xmin < margin || xmax - hi < margin {
        return Err(SolveError::GridTooNarrow { xmin, xmax, lo, hi, margin });
    }
    Ok((0..=max_order)
        .map(|r| {
            let f: Vec<f64> = xs.iter().zip(&result.rho).map(|(x, p)| x.powi(r as i32) * p).collect();
            trapezoid(&f, dx)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Motif;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn single_edge() -> FactorGraph {
        FactorGraph::new(2, vec![Motif::edge(0, 1).unwrap()]).unwrap()
    }

    #[test]
    fn complex_arg_requires_positive_eta() {
        assert!(ComplexArg::new(0.0, 0.0).is_err());
        assert!(ComplexArg::new(0.0, -1.0).is_err());
        assert!(ComplexArg::new(0.0, f64::NAN).is_err());
        assert!(ComplexArg::new(1.0, 1e-3).is_ok());
    }

    #[test]
    fn g_update_examples() {
        // S_u = {s}: empty sum
        let fg = single_edge();
        let z = ComplexArg::new(2.0, 1e-300).unwrap();
        let st = MessageState::zeros(&fg, z);
        assert!(close(g_update(&fg, &st, NodeId(0), 0).unwrap(), c(0.5, 0.0), 1e-15));

        // z = i, one other message 0.5: 1 / (-0.5 + i) = -0.4 - 0.8i
        let fg = FactorGraph::new(3, vec![Motif::edge(0, 1).unwrap(), Motif::edge(0, 2).unwrap()]).unwrap();
        let mut st = MessageState::zeros(&fg, ComplexArg::new(0.0, 1.0).unwrap());
        st.mu_mut()[fg.incidence_id(1, 0)] = c(0.5, 0.0);
        assert!(close(g_update(&fg, &st, NodeId(0), 0).unwrap(), c(-0.4, -0.8), 1e-15));
        assert_eq!(g_update(&fg, &st, NodeId(2), 0), Err(SolveError::NotIncident { node: 2, motif: 0 }));
    }

    #[test]
    fn g_update_near_singular() {
        let fg = FactorGraph::new(3, vec![Motif::edge(0, 1).unwrap(), Motif::edge(0, 2).unwrap()]).unwrap();
        let mut st = MessageState::zeros(&fg, ComplexArg::new(1.0, 1e-16).unwrap());
        st.mu_mut()[fg.incidence_id(1, 0)] = c(1.0, 0.0);
        assert!(matches!(g_update(&fg, &st, NodeId(0), 0), Err(SolveError::NearSingular { node: 0, .. })));
    }

    #[test]
    fn edge_and_triangle_rules() {
        assert_eq!(mu_edge(c(0.5, 0.0)), c(0.5, 0.0));
        assert_eq!(mu_edge(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(mu_edge(c(0.3, 0.1)), c(0.3, 0.1));
        assert_eq!(mu_triangle(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        // (2 * 0.06 + 0.5) / 0.94
        assert!(close(mu_triangle(c(0.2, 0.0), c(0.3, 0.0)).unwrap(), c(0.62 / 0.94, 0.0), 1e-15));
        assert!((0.62f64 / 0.94 - 0.6595744681).abs() < 1e-10);
        let g = c(0.3, -0.2);
        assert!(close(mu_triangle(g, g).unwrap(), 2.0 * g / (1.0 - g), 1e-14));
        assert!(mu_triangle(c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn general_rule_reduces_to_edge_and_triangle() {
        let edge = Motif::edge(0, 1).unwrap();
        let tri = Motif::triangle(0, 1, 2).unwrap();
        let gv = c(0.2, 0.0);
        let gw = c(0.3, 0.0);
        assert!(close(mu_general(&edge, 0, &[c(9.0, 9.0), gv]).unwrap(), gv, 1e-15));
        let got = mu_general(&tri, 0, &[c(5.0, -3.0), gv, gw]).unwrap();
        assert!((got.re - 0.6595744681).abs() < 1e-10);
        assert!(close(got, mu_triangle(gv, gw).unwrap(), 1e-12));
    }

    #[test]
    fn one_sweep_on_single_edge() {
        let fg = single_edge();
        let st = MessageState::zeros(&fg, ComplexArg::new(2.0, 1e-300).unwrap());
        let (next, delta) = sweep(&fg, &st, &SolveConfig::default()).unwrap();
        for v in next.g().iter().chain(next.mu()) {
            assert!(close(*v, c(0.5, 0.0), 1e-15));
        }
        assert!((delta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let fg = FactorGraph::new(4, vec![Motif::edge(0, 1).unwrap(), Motif::triangle(1, 2, 3).unwrap()]).unwrap();
        let z = ComplexArg::new(0.3, 0.2).unwrap();
        let cfg = SolveConfig::default();
        let sol = solve_at_z(&fg, z, &cfg, None).unwrap();
        assert!(sol.converged);
        let (again, delta) = sweep(&fg, &sol.state, &cfg).unwrap();
        assert!(delta < cfg.tol);
        for (a, b) in again.mu().iter().zip(sol.state.mu()) {
            assert!(close(*a, *b, cfg.tol));
        }
    }

    #[test]
    fn single_edge_density() {
        // rho(z) = -(1/pi) z / (z^2 - 1)
        let fg = single_edge();
        for (x, eta) in [(0.3, 0.1), (1.0, 0.01), (-2.0, 0.5)] {
            let z = ComplexArg::new(x, eta).unwrap();
            let st = solve_at_z(&fg, z, &SolveConfig::default(), None).unwrap().require_converged().unwrap();
            let want = -z.z() / (z.z() * z.z() - 1.0) / PI;
            assert!(close(spectral_density_at(&fg, &st).unwrap(), want, 1e-12));
        }
        // poles at +-1
        let at = |x: f64| {
            let z = ComplexArg::new(x, 1e-3).unwrap();
            let st = solve_at_z(&fg, z, &SolveConfig::default(), None).unwrap().state;
            spectral_density_at(&fg, &st).unwrap().im
        };
        assert!(at(1.0) > 100.0 && at(-1.0) > 100.0 && at(0.0) < 0.01);
    }

    #[test]
    fn isolated_and_empty() {
        let fg = FactorGraph::new(3, vec![]).unwrap();
        let z = ComplexArg::new(0.4, 0.01).unwrap();
        let st = solve_at_z(&fg, z, &SolveConfig::default(), None).unwrap().state;
        let rho = spectral_density_at(&fg, &st).unwrap();
        assert!(close(rho, -1.0 / (PI * z.z()), 1e-14));
        let lorentz = 0.01 / (0.4f64.powi(2) + 1e-4) / PI;
        assert!((rho.im - lorentz).abs() < 1e-12);

        // one isolated node alongside an edge contributes -1/(n pi z)
        let fg = FactorGraph::new(3, vec![Motif::edge(0, 1).unwrap()]).unwrap();
        let st = solve_at_z(&fg, z, &SolveConfig::default(), None).unwrap().state;
        let want = (2.0 * (-z.z() / (z.z() * z.z() - 1.0)) / PI - 1.0 / (PI * z.z())) / 3.0;
        assert!(close(spectral_density_at(&fg, &st).unwrap(), want, 1e-12));
    }

    #[test]
    fn triangle_peaks() {
        // K3 has eigenvalues {2, -1, -1}
        let fg = FactorGraph::new(3, vec![Motif::triangle(0, 1, 2).unwrap()]).unwrap();
        let eta = 1e-3;
        let grid = Grid::new(-3.0, 3.0, 0.001).unwrap();
        let res = density_scan(&fg, &grid, eta, &SolveConfig::default()).unwrap();
        assert!(res.all_converged());
        let at = |x: f64| res.rho[((x + 3.0) / 0.001).round() as usize];
        let (w2, w1) = (at(2.0) * PI * eta, at(-1.0) * PI * eta);
        assert!((w2 - 1.0 / 3.0).abs() < 1e-4 && (w1 - 2.0 / 3.0).abs() < 1e-4, "{w2} {w1}");
    }

    #[test]
    fn large_eta_converges_fast() {
        let fg = crate::generators::gen_poisson_edge_triangle(300, 2.0, 2.0, 5).unwrap();
        for x in [-5.0, 0.0, 3.0] {
            let sol = solve_at_z(&fg, ComplexArg::new(x, 10.0).unwrap(), &SolveConfig::default(), None).unwrap();
            assert!(sol.converged && sol.iterations < 50, "{} iterations", sol.iterations);
        }
    }

    #[test]
    fn scan_rejects_bad_input() {
        let fg = single_edge();
        let grid = Grid::new(-1.0, 1.0, 0.1).unwrap();
        assert!(density_scan(&fg, &grid, 0.0, &SolveConfig::default()).is_err());
        let bad = SolveConfig { tol: 0.0, ..SolveConfig::default() };
        assert!(density_scan(&fg, &grid, 0.1, &bad).is_err());
        let bad = SolveConfig { damping: 1.0, ..SolveConfig::default() };
        assert!(density_scan(&fg, &grid, 0.1, &bad).is_err());
    }

    #[test]
    fn not_converged_is_flagged() {
        let fg = crate::generators::gen_regular_edge_triangle(60, 1).unwrap();
        let cfg = SolveConfig { max_iter: 2, ..SolveConfig::default() };
        let sol = solve_at_z(&fg, ComplexArg::new(0.5, 0.01).unwrap(), &cfg, None).unwrap();
        assert!(!sol.converged);
        assert!(matches!(sol.require_converged(), Err(SolveError::NotConverged { iterations: 2, .. })));
        let res = density_scan(&fg, &Grid::new(0.0, 0.1, 0.05).unwrap(), 0.01, &cfg).unwrap();
        assert!(!res.all_converged());
    }

    #[test]
    fn damping_reaches_same_fixed_point() {
        let fg = crate::generators::gen_poisson_edge_triangle(200, 2.0, 2.0, 9).unwrap();
        let z = ComplexArg::new(0.7, 0.1).unwrap();
        let plain = solve_at_z(&fg, z, &SolveConfig::default(), None).unwrap().require_converged().unwrap();
        let damped_cfg = SolveConfig { damping: 0.5, ..SolveConfig::default() };
        let damped = solve_at_z(&fg, z, &damped_cfg, None).unwrap().require_converged().unwrap();
        let a = spectral_density_at(&fg, &plain).unwrap();
        let b = spectral_density_at(&fg, &damped).unwrap();
        assert!(close(a, b, 1e-8));
    }

    #[test]
    fn parallel_sweep_is_bit_identical() {
        // above PAR_INCIDENCES, compare against a sequential reference sweep
        let fg = crate::generators::gen_poisson_edge_triangle(1500, 2.0, 2.0, 3).unwrap();
        assert!(fg.incidence_count() >= PAR_INCIDENCES);
        let solver = Solver::new(&fg);
        let z = ComplexArg::new(0.2, 0.05).unwrap();
        let mut st = MessageState::zeros(&fg, z);
        for _ in 0..3 {
            st = solver.sweep(&st, &SolveConfig::default()).unwrap().0;
        }
        let (par, _) = solver.sweep(&st, &SolveConfig::default()).unwrap();
        let zz = z.z();
        let g_seq: Vec<Complex64> =
            (0..fg.incidence_count()).map(|id| solver.g_raw(zz, st.mu(), id).unwrap()).collect();
        let mu_seq: Vec<Complex64> = (0..fg.incidence_count()).map(|id| solver.mu_raw(&g_seq, id).unwrap()).collect();
        assert_eq!(par.g(), &g_seq[..]);
        assert_eq!(par.mu(), &mu_seq[..]);
    }

    #[test]
    fn moments_of_single_edge() {
        let fg = single_edge();
        let eta = 0.001;
        let grid = Grid::new(-30.0, 30.0, 0.0005).unwrap();
        let res = density_scan(&fg, &grid, eta, &SolveConfig::default()).unwrap();
        let m = moments_from_density(&res, 2).unwrap();
        // truncated Lorentzian: m0 = 1 - O(eta / X), m2 = 1 + O(eta X)
        assert!((m[0] - 1.0).abs() < 1e-3, "{m:?}");
        assert!(m[1].abs() < 1e-9);
        assert!((m[2] - 1.0).abs() < 0.05, "{m:?}");
        let narrow = density_scan(&fg, &Grid::new(-1.01, 1.01, 0.001).unwrap(), eta, &SolveConfig::default()).unwrap();
        assert!(matches!(moments_from_density(&narrow, 4), Err(SolveError::GridTooNarrow { .. })));
    }
}
