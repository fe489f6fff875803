//! Seeded random network ensembles.
//!
//! All generators draw from [`ChaCha8Rng`] seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`, so output is reproducible across
//! platforms. Stubs (edge ends) and corners (triangle vertices) are matched by
//! a uniform shuffle; a group that would create a self-pairing, a repeated
//! corner or an edge already present in the network is redrawn by swapping
//! one of its entries with a random unmatched stub. If the tail of the pool
//! cannot be repaired the whole matching is restarted.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::graph::{FactorGraph, Motif, NodeId};

const MAX_RESTARTS: usize = 1000;
const MAX_SWAPS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("regular edge-triangle networks need n to be a positive multiple of 6, got {0}")]
    NotMultipleOfSix(usize),
    #[error("degree sum {0} is odd")]
    OddDegreeSum(usize),
    #[error("need at least {min} nodes, got {n}")]
    TooFewNodes { n: usize, min: usize },
    #[error("mean must be finite and non-negative, got {0}")]
    InvalidMean(f64),
    #[error("degree sequence has no simple-graph realization")]
    NotGraphical,
    #[error("could not find a simple matching after {0} restarts")]
    MatchingFailed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// Every node in exactly one edge and one triangle.
    RegularEdgeTriangle { n: usize },
    /// Per-node edge and triangle counts drawn from Poisson distributions.
    PoissonEdgeTriangle { n: usize, mean_edges: f64, mean_triangles: f64 },
    /// Edges only, with a prescribed degree sequence.
    ConfigurationModel { degrees: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub model: Model,
    pub seed: u64,
}

pub fn generate(spec: &GenSpec) -> Result<FactorGraph, GenError> {
    match &spec.model {
        Model::RegularEdgeTriangle { n } => gen_regular_edge_triangle(*n, spec.seed),
        Model::PoissonEdgeTriangle { n, mean_edges, mean_triangles } => {
            gen_poisson_edge_triangle(*n, *mean_edges, *mean_triangles, spec.seed)
        }
        Model::ConfigurationModel { degrees } => gen_configuration_model(degrees, spec.seed),
    }
}

pub fn gen_regular_edge_triangle(n: usize, seed: u64) -> Result<FactorGraph, GenError> {
    if n == 0 || !n.is_multiple_of(6) {
        return Err(GenError::NotMultipleOfSix(n));
    }
    let stubs: Vec<usize> = (0..n).collect();
    build(n, &stubs, &stubs, seed)
}

pub fn gen_poisson_edge_triangle(
    n: usize,
    mean_edges: f64,
    mean_triangles: f64,
    seed: u64,
) -> Result<FactorGraph, GenError> {
    if n < 3 {
        return Err(GenError::TooFewNodes { n, min: 3 });
    }
    for mean in [mean_edges, mean_triangles] {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(GenError::InvalidMean(mean));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edge_counts = poisson_counts(n, mean_edges, &mut rng);
    let mut corner_counts = poisson_counts(n, mean_triangles, &mut rng);
    while edge_counts.iter().sum::<usize>() % 2 != 0 {
        edge_counts[rng.random_range(0..n)] += 1;
    }
    while corner_counts.iter().sum::<usize>() % 3 != 0 {
        corner_counts[rng.random_range(0..n)] += 1;
    }
    let stubs = expand(&edge_counts);
    let corners = expand(&corner_counts);
    let seed2 = rng.random::<u64>();
    build(n, &stubs, &corners, seed2)
}

pub fn gen_configuration_model(degrees: &[usize], seed: u64) -> Result<FactorGraph, GenError> {
    let sum: usize = degrees.iter().sum();
    if !sum.is_multiple_of(2) {
        return Err(GenError::OddDegreeSum(sum));
    }
    if !is_graphical(degrees) {
        return Err(GenError::NotGraphical);
    }
    build(degrees.len(), &expand(degrees), &[], seed)
}

/// Adjacency degree of every node.
pub fn degrees_of(fg: &FactorGraph) -> Vec<usize> {
    let mut deg = vec![0; fg.n()];
    for m in fg.motifs() {
        for &(i, j) in m.internal_edges() {
            deg[m.members()[i].index()] += 1;
            deg[m.members()[j].index()] += 1;
        }
    }
    deg
}

/// Erdős–Gallai test for an even-sum degree sequence.
pub fn is_graphical(degrees: &[usize]) -> bool {
    let mut d = degrees.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let n = d.len();
    let mut suffix = vec![0usize; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + d[i];
    }
    // p = number of entries >= k, non-increasing in k
    let mut p = n;
    let mut lhs = 0;
    for k in 1..=n {
        lhs += d[k - 1];
        while p > 0 && d[p - 1] < k {
            p -= 1;
        }
        let big = p.max(k);
        let rhs = k * (k - 1) + k * (big - k) + suffix[big];
        if lhs > rhs {
            return false;
        }
    }
    true
}

fn poisson_counts(n: usize, mean: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if mean == 0.0 {
        return vec![0; n];
    }
    let dist = Poisson::new(mean).expect("validated mean");
    (0..n).map(|_| dist.sample(rng) as usize).collect()
}

fn expand(counts: &[usize]) -> Vec<usize> {
    counts.iter().enumerate().flat_map(|(v, &c)| std::iter::repeat_n(v, c)).collect()
}

/// Triangles from `corners` first, then edges from `stubs`. Output lists edge
/// motifs before triangles.
fn build(n: usize, stubs: &[usize], corners: &[usize], seed: u64) -> Result<FactorGraph, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut present = HashSet::new();
    let triangles = match_groups(corners, 3, &mut present, &mut rng)?;
    let edges = match_groups(stubs, 2, &mut present, &mut rng)?;
    let motifs = edges
        .iter()
        .map(|g| Motif::edge(g[0], g[1]))
        .chain(triangles.iter().map(|g| Motif::triangle(g[0], g[1], g[2])))
        .collect::<Result<Vec<_>, _>>()
        .expect("matching yields distinct members");
    Ok(FactorGraph::new(n, motifs).expect("generated nodes are in range"))
}

fn group_ok(group: &[usize], present: &HashSet<(usize, usize)>) -> bool {
    for (a, &u) in group.iter().enumerate() {
        for &v in &group[a + 1..] {
            if u == v || present.contains(&(u.min(v), u.max(v))) {
                return false;
            }
        }
    }
    true
}

fn match_groups(
    items: &[usize],
    k: usize,
    present: &mut HashSet<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, GenError> {
    debug_assert_eq!(items.len() % k, 0);
    'restart: for _ in 0..MAX_RESTARTS {
        let mut pool = items.to_vec();
        pool.shuffle(rng);
        let mut local = present.clone();
        let mut groups = Vec::with_capacity(items.len() / k);
        while !pool.is_empty() {
            let len = pool.len();
            let mut swaps = 0;
            while !group_ok(&pool[len - k..], &local) {
                swaps += 1;
                if len == k || swaps > MAX_SWAPS {
                    continue 'restart;
                }
                let i = len - k + rng.random_range(0..k);
                let j = rng.random_range(0..len - k);
                pool.swap(i, j);
            }
            let mut group = pool[len - k..].to_vec();
            group.sort_unstable();
            for a in 0..k {
                for b in a + 1..k {
                    local.insert((group[a], group[b]));
                }
            }
            groups.push(group);
            pool.truncate(len - k);
        }
        *present = local;
        return Ok(groups);
    }
    Err(GenError::MatchingFailed(MAX_RESTARTS))
}

/// Counts of (edge, triangle) memberships per node.
pub fn membership_counts(fg: &FactorGraph) -> Vec<(usize, usize)> {
    (0..fg.n())
        .map(|u| {
            fg.incidence(NodeId(u)).iter().fold((0, 0), |(e, t), inc| match fg.motif(inc.motif).size() {
                2 => (e + 1, t),
                _ => (e, t + 1),
            })
        })
        .collect()
}
