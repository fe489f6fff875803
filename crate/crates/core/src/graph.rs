//! Motif networks and their factor graphs.
//!
//! A [`FactorGraph`] is the bipartite incidence structure between network
//! nodes and the motifs they belong to. The plain network is recovered with
//! [`FactorGraph::adjacency`], which takes the union of all motif edges.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("motif {motif}: node {node} is out of range for a network of {n} nodes")]
    OutOfRangeNode { motif: usize, node: usize, n: usize },
    #[error("motif {motif}: {reason}")]
    MalformedMotif { motif: usize, reason: String },
    #[error("motif {motif}: internal edges do not connect all members")]
    DisconnectedMotif { motif: usize },
}

/// Shape errors detected while constructing a single motif, before it has an
/// index in a network.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MotifError {
    #[error("{0}")]
    Malformed(String),
    #[error("internal edges do not connect all members")]
    Disconnected,
}

impl MotifError {
    fn at(self, motif: usize) -> GraphError {
        match self {
            MotifError::Malformed(reason) => GraphError::MalformedMotif { motif, reason },
            MotifError::Disconnected => GraphError::DisconnectedMotif { motif },
        }
    }
}

/// Zero-based index of a network node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotifKind {
    Edge,
    Triangle,
    /// A simple ring of the given length (at least 3).
    Cycle(usize),
    /// Any connected subgraph given by an explicit internal edge list.
    General,
}

impl MotifKind {
    pub fn name(&self) -> &'static str {
        match self {
            MotifKind::Edge => "edge",
            MotifKind::Triangle => "triangle",
            MotifKind::Cycle(_) => "cycle",
            MotifKind::General => "general",
        }
    }
}

/// A motif: member nodes plus internal edges given as pairs of member
/// positions `(i, j)` with `i < j`.
///
/// Members are stored in canonical order: sorted for edges, triangles and
/// general motifs; for cycles, rotated to start at the smallest node and
/// oriented towards its smaller ring neighbour, so that the member list still
/// spells out the ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Motif {
    kind: MotifKind,
    members: Vec<NodeId>,
    edges: Vec<(usize, usize)>,
}

impl Motif {
    pub fn edge(a: usize, b: usize) -> Result<Motif, MotifError> {
        Motif::new(MotifKind::Edge, vec![a, b], None)
    }

    pub fn triangle(a: usize, b: usize, c: usize) -> Result<Motif, MotifError> {
        Motif::new(MotifKind::Triangle, vec![a, b, c], None)
    }

    /// A ring visiting `ring` in order and closing back to the first node.
    pub fn cycle(ring: &[usize]) -> Result<Motif, MotifError> {
        Motif::new(MotifKind::Cycle(ring.len()), ring.to_vec(), None)
    }

    /// A general motif with internal edges given in terms of node ids.
    pub fn general(members: &[usize], node_edges: &[(usize, usize)]) -> Result<Motif, MotifError> {
        let mut local = Vec::with_capacity(node_edges.len());
        for &(a, b) in node_edges {
            let pos = |v: usize| {
                members
                    .iter()
                    .position(|&m| m == v)
                    .ok_or_else(|| MotifError::Malformed(format!("edge endpoint {v} is not a member")))
            };
            local.push((pos(a)?, pos(b)?));
        }
        Motif::new(MotifKind::General, members.to_vec(), Some(local))
    }

    /// Builds and canonicalizes a motif. `edges` holds member positions and is
    /// required for [`MotifKind::General`] and rejected for the other kinds.
    pub fn new(kind: MotifKind, members: Vec<usize>, edges: Option<Vec<(usize, usize)>>) -> Result<Motif, MotifError> {
        let m = members.len();
        {
            let mut sorted = members.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(MotifError::Malformed("repeated member node".into()));
            }
        }
        if kind != MotifKind::General && edges.is_some() {
            return Err(MotifError::Malformed(format!(
                "explicit edges are only allowed for general motifs, not {}",
                kind.name()
            )));
        }
        let expect = |want: usize| {
            if m == want {
                Ok(())
            } else {
                Err(MotifError::Malformed(format!("{} motif needs {want} members, got {m}", kind.name())))
            }
        };
        match kind {
            MotifKind::Edge => {
                expect(2)?;
                let mut mem = members;
                mem.sort_unstable();
                Ok(Motif { kind, members: to_ids(mem), edges: vec![(0, 1)] })
            }
            MotifKind::Triangle => {
                expect(3)?;
                let mut mem = members;
                mem.sort_unstable();
                Ok(Motif { kind, members: to_ids(mem), edges: vec![(0, 1), (0, 2), (1, 2)] })
            }
            MotifKind::Cycle(len) => {
                if len < 3 {
                    return Err(MotifError::Malformed(format!("cycle length must be at least 3, got {len}")));
                }
                expect(len)?;
                let ring = canonical_ring(&members);
                let mut edges: Vec<(usize, usize)> = (0..len).map(|i| order_pair(i, (i + 1) % len)).collect();
                edges.sort_unstable();
                Ok(Motif { kind, members: to_ids(ring), edges })
            }
            MotifKind::General => {
                let edges = edges.ok_or_else(|| MotifError::Malformed("general motif requires an edge list".into()))?;
                if m < 2 {
                    return Err(MotifError::Malformed("general motif needs at least 2 members".into()));
                }
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_unstable_by_key(|&i| members[i]);
                let mut new_pos = vec![0; m];
                for (new, &old) in order.iter().enumerate() {
                    new_pos[old] = new;
                }
                let mut local = Vec::with_capacity(edges.len());
                for (i, j) in edges {
                    if i >= m || j >= m {
                        return Err(MotifError::Malformed(format!("edge ({i}, {j}) references a member index >= {m}")));
                    }
                    if i == j {
                        return Err(MotifError::Malformed(format!("self-loop at member index {i}")));
                    }
                    local.push(order_pair(new_pos[i], new_pos[j]));
                }
                local.sort_unstable();
                if local.windows(2).any(|w| w[0] == w[1]) {
                    return Err(MotifError::Malformed("repeated internal edge".into()));
                }
                let sorted: Vec<usize> = order.iter().map(|&i| members[i]).collect();
                if !connected(m, &local) {
                    return Err(MotifError::Disconnected);
                }
                Ok(Motif { kind, members: to_ids(sorted), edges: local })
            }
        }
    }

    pub fn kind(&self) -> MotifKind {
        self.kind
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Internal edges as member-position pairs `(i, j)`, `i < j`.
    pub fn internal_edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Dense internal adjacency matrix, row-major `size x size`.
    pub fn internal_adjacency(&self) -> Vec<f64> {
        let m = self.size();
        let mut b = vec![0.0; m * m];
        for &(i, j) in &self.edges {
            b[i * m + j] = 1.0;
            b[j * m + i] = 1.0;
        }
        b
    }

    pub fn position_of(&self, node: NodeId) -> Option<usize> {
        self.members.iter().position(|&v| v == node)
    }
}

fn to_ids(v: Vec<usize>) -> Vec<NodeId> {
    v.into_iter().map(NodeId).collect()
}

fn order_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn canonical_ring(ring: &[usize]) -> Vec<usize> {
    let len = ring.len();
    let start = (0..len).min_by_key(|&i| ring[i]).unwrap_or(0);
    let next = ring[(start + 1) % len];
    let prev = ring[(start + len - 1) % len];
    if next <= prev {
        (0..len).map(|k| ring[(start + k) % len]).collect()
    } else {
        (0..len).map(|k| ring[(start + len - k) % len]).collect()
    }
}

fn connected(m: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); m];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; m];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == m
}

/// Membership of a node in a motif: `motif` id and the node's member position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub motif: usize,
    pub position: usize,
}

/// Nodes, motifs and the node-to-motif incidence lists.
///
/// Every (motif, member position) pair also has a dense incidence id,
/// `offset(motif) + position`, used to index message arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    n: usize,
    motifs: Vec<Motif>,
    offsets: Vec<usize>,
    incidence: Vec<Vec<Incidence>>,
}

/// Validates motifs against the node count and builds the incidence lists.
/// Motif ids are the input positions.
pub fn build_factor_graph(n: usize, motifs: Vec<Motif>) -> Result<FactorGraph, GraphError> {
    FactorGraph::new(n, motifs)
}

impl FactorGraph {
    pub fn new(n: usize, motifs: Vec<Motif>) -> Result<FactorGraph, GraphError> {
        let mut offsets = Vec::with_capacity(motifs.len() + 1);
        let mut incidence = vec![Vec::new(); n];
        let mut total = 0;
        for (id, motif) in motifs.iter().enumerate() {
            offsets.push(total);
            for (position, &node) in motif.members.iter().enumerate() {
                if node.0 >= n {
                    return Err(GraphError::OutOfRangeNode { motif: id, node: node.0, n });
                }
                incidence[node.0].push(Incidence { motif: id, position });
            }
            total += motif.size();
        }
        offsets.push(total);
        Ok(FactorGraph { n, motifs, offsets, incidence })
    }

    /// Same as [`FactorGraph::new`] but takes raw `(kind, members, edges)` specs,
    /// reporting shape errors with the motif's index.
    pub fn from_specs<I>(n: usize, specs: I) -> Result<FactorGraph, GraphError>
    where
        I: IntoIterator<Item = (MotifKind, Vec<usize>, Option<Vec<(usize, usize)>>)>,
    {
        let motifs = specs
            .into_iter()
            .enumerate()
            .map(|(i, (kind, members, edges))| Motif::new(kind, members, edges).map_err(|e| e.at(i)))
            .collect::<Result<Vec<_>, _>>()?;
        FactorGraph::new(n, motifs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn motifs(&self) -> &[Motif] {
        &self.motifs
    }

    pub fn motif(&self, id: usize) -> &Motif {
        &self.motifs[id]
    }

    /// The motifs containing `u`, with `u`'s position in each.
    pub fn incidence(&self, u: NodeId) -> &[Incidence] {
        &self.incidence[u.0]
    }

    pub fn incidence_count(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    #[inline]
    pub fn incidence_id(&self, motif: usize, position: usize) -> usize {
        self.offsets[motif] + position
    }

    /// First incidence id of each motif, plus the total as a final entry.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Plain adjacency: union of motif internal edges, keeping repeats.
    pub fn adjacency(&self) -> AdjacencyView {
        AdjacencyView::from_factor_graph(self)
    }

    /// Length of the shortest cycle in the bipartite node/motif graph, if one
    /// of length at most `max_depth` exists.
    ///
    /// Runs a breadth-first search from every vertex; a non-tree edge between
    /// layers `a` and `b` closes a cycle of length at most `a + b + 1`, and
    /// the minimum over all roots is exact.
    pub fn girth(&self, max_depth: usize) -> Option<usize> {
        let nodes = self.n;
        let total = nodes + self.motifs.len();
        let neighbours = |v: usize, out: &mut Vec<usize>| {
            out.clear();
            if v < nodes {
                out.extend(self.incidence[v].iter().map(|inc| nodes + inc.motif));
            } else {
                out.extend(self.motifs[v - nodes].members.iter().map(|m| m.0));
            }
        };
        let mut best = usize::MAX;
        let mut dist = vec![usize::MAX; total];
        let mut parent = vec![usize::MAX; total];
        let mut touched = Vec::new();
        let mut queue = VecDeque::new();
        let mut buf = Vec::new();
        for root in 0..total {
            for &t in &touched {
                dist[t] = usize::MAX;
                parent[t] = usize::MAX;
            }
            touched.clear();
            queue.clear();
            dist[root] = 0;
            touched.push(root);
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                // deeper layers cannot improve on the current best or the depth cap
                if 2 * dist[v] + 1 > best.min(max_depth + 1) {
                    break;
                }
                neighbours(v, &mut buf);
                for &w in &buf {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        parent[w] = v;
                        touched.push(w);
                        queue.push_back(w);
                    } else if parent[v] != w {
                        best = best.min(dist[v] + dist[w] + 1);
                    }
                }
            }
        }
        (best <= max_depth).then_some(best)
    }
}

/// Convenience alias for the girth diagnostic.
pub fn factor_graph_girth_check(fg: &FactorGraph, max_depth: usize) -> Option<usize> {
    fg.girth(max_depth)
}

/// The network seen as a plain (multi)graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyView {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    has_duplicates: bool,
    row_start: Vec<usize>,
    neighbours: Vec<usize>,
}

impl AdjacencyView {
    fn from_factor_graph(fg: &FactorGraph) -> AdjacencyView {
        let mut edges = Vec::new();
        for motif in &fg.motifs {
            for &(i, j) in &motif.edges {
                edges.push(order_pair(motif.members[i].0, motif.members[j].0));
            }
        }
        AdjacencyView::from_edges(fg.n, edges)
    }

    /// Builds a view from an edge list over `0..n`. Self-loops are not allowed.
    pub fn from_edges(n: usize, mut edges: Vec<(usize, usize)>) -> AdjacencyView {
        for e in edges.iter_mut() {
            assert!(e.0 != e.1 && e.0 < n && e.1 < n, "invalid edge {e:?}");
            *e = order_pair(e.0, e.1);
        }
        edges.sort_unstable();
        let has_duplicates = edges.windows(2).any(|w| w[0] == w[1]);
        let mut degrees = vec![0; n];
        for &(a, b) in &edges {
            degrees[a] += 1;
            degrees[b] += 1;
        }
        let mut row_start = vec![0; n + 1];
        for u in 0..n {
            row_start[u + 1] = row_start[u] + degrees[u];
        }
        let mut fill = row_start.clone();
        let mut neighbours = vec![0; row_start[n]];
        for &(a, b) in &edges {
            neighbours[fill[a]] = b;
            fill[a] += 1;
            neighbours[fill[b]] = a;
            fill[b] += 1;
        }
        for u in 0..n {
            neighbours[row_start[u]..row_start[u + 1]].sort_unstable();
        }
        AdjacencyView { n, edges, degrees, has_duplicates, row_start, neighbours }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge multiset, each edge as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// True when some edge is contributed by more than one motif.
    pub fn has_duplicate_edges(&self) -> bool {
        self.has_duplicates
    }

    /// Neighbours of `u`, repeated according to edge multiplicity.
    pub fn neighbours(&self, u: usize) -> &[usize] {
        &self.neighbours[self.row_start[u]..self.row_start[u + 1]]
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// `out = A x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (u, o) in out.iter_mut().enumerate() {
            *o = self.neighbours(u).iter().map(|&v| x[v]).sum();
        }
    }

    /// Dense row-major copy of the adjacency matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for &(u, v) in &self.edges {
            a[u * n + v] += 1.0;
            a[v * n + u] += 1.0;
        }
        a
    }
}
