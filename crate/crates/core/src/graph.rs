//! Weighted directed graphs and the exact algebra built on their Laplacian.
//!
//! Node ids are 1-based in every public signature. An edge `(src, dst, w)`
//! means `src` sends its phase to `dst`, so `src` is an in-neighbour of `dst`
//! and `w` is the weight `dst` applies to it.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge ({src}, {dst}) references a node outside 1..={nodes}")]
    NodeOutOfRange { src: usize, dst: usize, nodes: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) has zero weight")]
    ZeroWeight(usize, usize),
    #[error("graph has {0} independent strongly connected components, expected 1")]
    NotConnected(usize),
    #[error("right-hand side is not in the range of the Laplacian (weighted sum {0})")]
    Inconsistent(String),
    #[error("vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("left null vector entry does not fit in 64 bits")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: u32,
}

/// A directed graph with positive integer weights and no self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct Digraph {
    node_count: usize,
    edges: Vec<Edge>,
    // in_edges[i] lists (src, weight) pairs, 0-based, for node i (0-based)
    in_edges: Vec<Vec<(usize, u32)>>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    nodes: usize,
    edges: Vec<(usize, usize, u32)>,
}

impl TryFrom<RawGraph> for Digraph {
    type Error = GraphError;

    fn try_from(raw: RawGraph) -> Result<Self, Self::Error> {
        Digraph::new(raw.nodes, raw.edges)
    }
}

impl From<Digraph> for RawGraph {
    fn from(g: Digraph) -> Self {
        RawGraph {
            nodes: g.node_count,
            edges: g.edges.iter().map(|e| (e.src, e.dst, e.weight)).collect(),
        }
    }
}

impl Digraph {
    /// Builds a graph from `(src, dst, weight)` triples with 1-based ids.
    /// Edges are stored sorted by `(src, dst)`.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, u32)>,
    ) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for (src, dst, weight) in edges {
            if src == 0 || dst == 0 || src > node_count || dst > node_count {
                return Err(GraphError::NodeOutOfRange { src, dst, nodes: node_count });
            }
            if src == dst {
                return Err(GraphError::SelfLoop(src));
            }
            if weight == 0 {
                return Err(GraphError::ZeroWeight(src, dst));
            }
            if !seen.insert((src, dst)) {
                return Err(GraphError::DuplicateEdge(src, dst));
            }
            list.push(Edge { src, dst, weight });
        }
        list.sort();
        let mut in_edges = vec![Vec::new(); node_count];
        for e in &list {
            in_edges[e.dst - 1].push((e.src - 1, e.weight));
        }
        Ok(Digraph { node_count, edges: list, in_edges })
    }

    /// Same as [`Digraph::new`] with every weight equal to one.
    pub fn unweighted(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        Self::new(node_count, edges.into_iter().map(|(s, d)| (s, d, 1)))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, src: usize, dst: usize) -> Option<u32> {
        self.in_edges
            .get(dst.wrapping_sub(1))?
            .iter()
            .find(|&&(s, _)| s + 1 == src)
            .map(|&(_, w)| w)
    }

    /// In-neighbours of `node` (1-based) as `(src, weight)` with 1-based ids.
    pub fn in_neighbors(&self, node: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.in_edges[node - 1].iter().map(|&(s, w)| (s + 1, w))
    }

    pub(crate) fn in_edges0(&self, node0: usize) -> &[(usize, u32)] {
        &self.in_edges[node0]
    }

    /// Weighted in-degree `d_i`.
    pub fn in_degree(&self, node: usize) -> u64 {
        self.in_edges[node - 1].iter().map(|&(_, w)| u64::from(w)).sum()
    }

    /// Returns a copy with the given edge weights replaced. Unknown edges
    /// are ignored.
    pub fn with_weights(&self, updates: &[(usize, usize, u32)]) -> Result<Self, GraphError> {
        let edges = self.edges.iter().map(|e| {
            let w = updates
                .iter()
                .find(|u| u.0 == e.src && u.1 == e.dst)
                .map_or(e.weight, |u| u.2);
            (e.src, e.dst, w)
        });
        Digraph::new(self.node_count, edges)
    }

    /// Strongly connected components, each sorted ascending, listed in
    /// order of their smallest member.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let comp = self.component_index();
        let count = comp.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); count];
        for (v, &c) in comp.iter().enumerate() {
            out[c].push(v + 1);
        }
        out
    }

    /// Component number of every node (0-based nodes). Components are
    /// numbered in order of their smallest member.
    pub(crate) fn component_index(&self) -> Vec<usize> {
        let n = self.node_count;
        let mut out_adj = vec![Vec::new(); n];
        for e in &self.edges {
            out_adj[e.src - 1].push(e.dst - 1);
        }
        // Kosaraju with explicit stacks: finishing order on the forward
        // graph, then sweep the reverse graph in reverse finishing order.
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for start in 0..n {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let mut stack = vec![(start, 0usize)];
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if let Some(&u) = out_adj[v].get(*next) {
                    *next += 1;
                    if !visited[u] {
                        visited[u] = true;
                        stack.push((u, 0));
                    }
                } else {
                    order.push(v);
                    stack.pop();
                }
            }
        }
        let mut raw = vec![usize::MAX; n];
        let mut count = 0;
        for &root in order.iter().rev() {
            if raw[root] != usize::MAX {
                continue;
            }
            raw[root] = count;
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for &(u, _) in &self.in_edges[v] {
                    if raw[u] == usize::MAX {
                        raw[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        // renumber by smallest member
        let mut relabel = vec![usize::MAX; count];
        let mut next = 0;
        for v in 0..n {
            if relabel[raw[v]] == usize::MAX {
                relabel[raw[v]] = next;
                next += 1;
            }
        }
        raw.iter().map(|&c| relabel[c]).collect()
    }

    /// SCCs that receive no edge from outside themselves.
    pub fn independent_sccs(&self) -> Vec<Vec<usize>> {
        let comp = self.component_index();
        let sccs = self.strongly_connected_components();
        let mut has_input = vec![false; sccs.len()];
        for e in &self.edges {
            let (cs, cd) = (comp[e.src - 1], comp[e.dst - 1]);
            if cs != cd {
                has_input[cd] = true;
            }
        }
        sccs.into_iter()
            .zip(has_input)
            .filter_map(|(c, input)| (!input).then_some(c))
            .collect()
    }

    /// True iff the graph contains a spanning tree, i.e. it has exactly one
    /// independent strongly connected component.
    pub fn is_connected(&self) -> bool {
        self.independent_sccs().len() == 1
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        let n = self.node_count;
        let mut entries = vec![vec![0i64; n]; n];
        for (i, row) in entries.iter_mut().enumerate() {
            for &(j, w) in &self.in_edges[i] {
                row[j] -= i64::from(w);
                row[i] += i64::from(w);
            }
        }
        LaplacianMatrix { entries }
    }

    /// Positive integer weights on the unique iSCC annihilating the
    /// Laplacian from the left.
    pub fn left_null_vector(&self) -> Result<LeftNullVector, GraphError> {
        let isccs = self.independent_sccs();
        if isccs.len() != 1 {
            return Err(GraphError::NotConnected(isccs.len()));
        }
        let nodes = isccs.into_iter().next().unwrap_or_default();
        let lap = self.laplacian();
        let k = nodes.len();
        // rows of the transpose restricted to the iSCC: (L_S)^T
        let mt: Vec<Vec<BigRational>> = (0..k)
            .map(|r| {
                (0..k)
                    .map(|c| exact::int(lap.entries[nodes[c] - 1][nodes[r] - 1]))
                    .collect()
            })
            .collect();
        let v = if k == 1 {
            vec![exact::int(1)]
        } else {
            exact::kernel_vector(mt).ok_or(GraphError::NotConnected(0))?
        };
        let mut ints = exact::primitive_integer_vector(&v);
        if ints.iter().any(|x| x.is_negative()) {
            ints.iter_mut().for_each(|x| *x = -x.clone());
        }
        let mut zeta = vec![0i64; self.node_count];
        for (pos, node) in nodes.iter().enumerate() {
            zeta[node - 1] = exact::to_i64(&ints[pos]).ok_or(GraphError::Overflow)?;
        }
        Ok(LeftNullVector { zeta, iscc_nodes: nodes })
    }
}

/// `L = D − A`, stored densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaplacianMatrix {
    entries: Vec<Vec<i64>>,
}

impl LaplacianMatrix {
    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row][col]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeftNullVector {
    /// One entry per node; zero outside the iSCC.
    pub zeta: Vec<i64>,
    /// iSCC members, 1-based, ascending.
    pub iscc_nodes: Vec<usize>,
}

impl LeftNullVector {
    pub fn sum(&self) -> i64 {
        self.zeta.iter().sum()
    }

    pub fn dot_i64(&self, v: &[i64]) -> i64 {
        self.zeta.iter().zip(v).map(|(z, x)| z * x).sum()
    }

    pub fn is_in_iscc(&self, node: usize) -> bool {
        self.zeta[node - 1] != 0
    }
}

/// Exact inverse of the grounded system `−L x = b`, `x[ground] = 0`.
///
/// One equation belonging to the iSCC is dropped: it is implied by the
/// others whenever `ζᵀ b = 0`, and the remaining square system is regular.
#[derive(Debug, Clone)]
pub struct GroundedSolver {
    zeta: Vec<i64>,
    ground: usize,
    kept_rows: Vec<usize>,
    kept_cols: Vec<usize>,
    inverse: Vec<Vec<BigRational>>,
    scaled: IntegerInverse,
}

#[derive(Debug, Clone)]
enum IntegerInverse {
    Small { numer: Vec<Vec<i128>>, denom: i128 },
    Big { numer: Vec<Vec<BigInt>>, denom: BigInt },
}

impl GroundedSolver {
    /// `ground` is a 1-based node id.
    pub fn new(g: &Digraph, ground: usize) -> Result<Self, GraphError> {
        let lnv = g.left_null_vector()?;
        let n = g.node_count();
        let lap = g.laplacian();
        let dropped_row = lnv.iscc_nodes[0] - 1;
        let kept_rows: Vec<usize> = (0..n).filter(|&r| r != dropped_row).collect();
        let kept_cols: Vec<usize> = (0..n).filter(|&c| c != ground - 1).collect();
        let m: Vec<Vec<BigRational>> = kept_rows
            .iter()
            .map(|&r| kept_cols.iter().map(|&c| exact::int(-lap.get(r, c))).collect())
            .collect();
        let inverse = exact::invert(m).ok_or(GraphError::NotConnected(0))?;
        let scaled = integer_form(&inverse);
        Ok(GroundedSolver { zeta: lnv.zeta, ground, kept_rows, kept_cols, inverse, scaled })
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    /// Solves exactly; errors if the right-hand side is not in the range.
    pub fn solve(&self, rhs: &[BigRational]) -> Result<Vec<BigRational>, GraphError> {
        let n = self.zeta.len();
        if rhs.len() != n {
            return Err(GraphError::LengthMismatch { got: rhs.len(), expected: n });
        }
        let weighted: BigRational = self
            .zeta
            .iter()
            .zip(rhs)
            .map(|(&z, b)| exact::int(z) * b)
            .fold(BigRational::zero(), |a, b| a + b);
        if !weighted.is_zero() {
            return Err(GraphError::Inconsistent(weighted.to_string()));
        }
        let mut x = vec![BigRational::zero(); n];
        for (k, &col) in self.kept_cols.iter().enumerate() {
            let mut acc = BigRational::zero();
            for (l, &row) in self.kept_rows.iter().enumerate() {
                acc += &self.inverse[k][l] * &rhs[row];
            }
            x[col] = acc;
        }
        Ok(x)
    }

    /// For an integer right-hand side, returns `Some(x)` when the unique
    /// grounded solution exists and is integral, `None` otherwise.
    pub fn integer_solution(&self, rhs: &[i64]) -> Option<Vec<i64>> {
        let n = self.zeta.len();
        if rhs.len() != n {
            return None;
        }
        let weighted: i128 = self
            .zeta
            .iter()
            .zip(rhs)
            .map(|(&z, &b)| i128::from(z) * i128::from(b))
            .sum();
        if weighted != 0 {
            return None;
        }
        let mut x = vec![0i64; n];
        match &self.scaled {
            IntegerInverse::Small { numer, denom } => {
                for (k, &col) in self.kept_cols.iter().enumerate() {
                    let mut acc: i128 = 0;
                    for (l, &row) in self.kept_rows.iter().enumerate() {
                        acc = acc.checked_add(numer[k][l].checked_mul(i128::from(rhs[row]))?)?;
                    }
                    if acc % denom != 0 {
                        return None;
                    }
                    x[col] = i64::try_from(acc / denom).ok()?;
                }
            }
            IntegerInverse::Big { numer, denom } => {
                for (k, &col) in self.kept_cols.iter().enumerate() {
                    let mut acc = BigInt::zero();
                    for (l, &row) in self.kept_rows.iter().enumerate() {
                        acc += &numer[k][l] * BigInt::from(rhs[row]);
                    }
                    let (q, r) = acc.div_rem(denom);
                    if !r.is_zero() {
                        return None;
                    }
                    x[col] = q.to_i64()?;
                }
            }
        }
        Some(x)
    }

    /// The grounded inverse as `(row node, column node, entry)` lookups:
    /// `x[col_nodes[k]] = Σ_l inverse[k][l] * rhs[row_nodes[l]]`, 0-based.
    pub fn inverse(&self) -> (&[usize], &[usize], &[Vec<BigRational>]) {
        (&self.kept_cols, &self.kept_rows, &self.inverse)
    }
}

fn integer_form(inv: &[Vec<BigRational>]) -> IntegerInverse {
    let denom = inv
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let numer: Vec<Vec<BigInt>> = inv
        .iter()
        .map(|row| row.iter().map(|x| (x * &denom).to_integer()).collect())
        .collect();
    let fits = |x: &BigInt| exact::abs_big(x) < BigInt::from(1i64 << 40);
    if fits(&denom) && numer.iter().flatten().all(fits) {
        let small = numer
            .iter()
            .map(|row| row.iter().map(|x| x.to_i128().unwrap_or(0)).collect())
            .collect();
        IntegerInverse::Small { numer: small, denom: denom.to_i128().unwrap_or(1) }
    } else {
        IntegerInverse::Big { numer, denom }
    }
}

/// Unique `x` with `x[ground] = 0` and `−L x = rhs`.
pub fn grounded_solve(
    g: &Digraph,
    rhs: &[BigRational],
    ground: usize,
) -> Result<Vec<BigRational>, GraphError> {
    GroundedSolver::new(g, ground)?.solve(rhs)
}
