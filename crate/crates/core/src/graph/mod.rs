//! Immutable undirected simple graphs.
//!
//! Edges are stored once as unordered pairs `(i, j)` with `i < j`. Adjacency
//! is kept both as sorted neighbor lists (for edge iteration) and as a packed
//! pair set (for constant-time non-edge checks); non-edges are never
//! materialized.

mod components;
mod edge_list;
mod gml;

pub use components::{connected_components, largest_connected_component};
pub use edge_list::{load_edge_list, read_labels, write_edge_list, write_id_map, LoadedGraph};
pub use gml::{load_gml_subset, GmlGraph};

use std::collections::HashSet;

use thiserror::Error;

/// Errors raised while building or parsing graphs.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("GML parse error at line {line}, column {column}: {message}")]
    Gml {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("edge references unknown node id {id}")]
    UnknownNode { id: i64 },
    #[error("node index {index} out of range for graph with {n_nodes} nodes")]
    NodeOutOfRange { index: usize, n_nodes: usize },
    #[error("input contains no nodes")]
    Empty,
}

/// Counts of input records discarded while building a [`Graph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

#[derive(Debug, Clone)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    pairs: HashSet<u64>,
}

#[inline]
fn pair_key(i: usize, j: usize) -> u64 {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    ((a as u64) << 32) | b as u64
}

impl Graph {
    /// Builds a graph on `n_nodes` nodes from arbitrary (possibly repeated,
    /// possibly reversed) pairs. Self-loops are dropped and duplicates merged.
    pub fn from_pairs<I>(n_nodes: usize, pairs: I) -> Result<(Self, BuildReport), GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut report = BuildReport::default();
        let mut edges = Vec::new();
        for (i, j) in pairs {
            for index in [i, j] {
                if index >= n_nodes {
                    return Err(GraphError::NodeOutOfRange { index, n_nodes });
                }
            }
            if i == j {
                report.self_loops_dropped += 1;
                continue;
            }
            edges.push(if i < j { (i, j) } else { (j, i) });
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        report.duplicates_collapsed = before - edges.len();
        Ok((Self::from_sorted_unique(n_nodes, edges), report))
    }

    /// Builds a graph from edges already normalized to `i < j`, sorted, and
    /// free of duplicates.
    pub(crate) fn from_sorted_unique(n_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let mut neighbors = vec![Vec::new(); n_nodes];
        let mut pairs = HashSet::with_capacity(edges.len());
        for &(i, j) in &edges {
            debug_assert!(i < j && j < n_nodes);
            neighbors[i].push(j);
            neighbors[j].push(i);
            pairs.insert(pair_key(i, j));
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self {
            n_nodes,
            edges,
            neighbors,
            pairs,
        }
    }

    pub fn empty(n_nodes: usize) -> Self {
        Self::from_sorted_unique(n_nodes, Vec::new())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of edges, `N_E`.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of unordered node pairs that are not edges, `N(N-1)/2 - N_E`.
    pub fn n_non_edges(&self) -> usize {
        self.n_pairs() - self.edges.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.n_nodes * self.n_nodes.saturating_sub(1) / 2
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbors of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.pairs.contains(&pair_key(i, j))
    }

    /// Edge density `N_E / (N(N-1)/2)`; zero for graphs with fewer than two nodes.
    pub fn density(&self) -> f64 {
        match self.n_pairs() {
            0 => 0.0,
            pairs => self.edges.len() as f64 / pairs as f64,
        }
    }

    /// Induced subgraph on `keep` (indices into this graph). Node `keep[t]`
    /// becomes node `t` of the result.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.n_nodes];
        for (t, &old) in keep.iter().enumerate() {
            new_index[old] = t;
        }
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter_map(|&(i, j)| {
                let (a, b) = (new_index[i], new_index[j]);
                (a != usize::MAX && b != usize::MAX).then_some(if a < b { (a, b) } else { (b, a) })
            })
            .collect();
        edges.sort_unstable();
        Self::from_sorted_unique(keep.len(), edges)
    }

    /// Drops zero-degree nodes. Returns the reduced graph and, for each new
    /// node, its index in this graph.
    pub fn drop_isolated(&self) -> (Self, Vec<usize>) {
        let keep: Vec<usize> = (0..self.n_nodes).filter(|&i| self.degree(i) > 0).collect();
        (self.induced_subgraph(&keep), keep)
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n_nodes == other.n_nodes && self.edges == other.edges
    }
}

impl Eq for Graph {}
