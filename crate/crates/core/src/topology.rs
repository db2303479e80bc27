//! Balanced digraphs: generators, Laplacian and algebraic connectivity.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("need at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("lattice with k = {k} needs more than {} nodes, got {nodes}", 2 * k)]
    LatticeTooDense { nodes: usize, k: usize },
    #[error("edge count {edges} is not a positive multiple of the node count {nodes}")]
    EdgesNotMultiple { nodes: usize, edges: usize },
    #[error("rewiring probability must lie in [0, 1]")]
    BadProbability,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a node outside the graph")]
    EdgeOutOfRange(usize, usize),
    #[error("graph is not balanced at node {0}")]
    Unbalanced(usize),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("could not draw a strongly connected small world in {0} attempts")]
    RewireExhausted(usize),
}

/// Directed 0/1 adjacency over `n` nodes; `adj[i][j]` means `i -> j`, i.e.
/// node `j` is an out-neighbor of `i` and receives what `i` broadcasts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    n: usize,
    adj: Vec<Vec<bool>>,
}

impl NetworkGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![vec![false; n]; n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<(), TopologyError> {
        if i >= self.n || j >= self.n {
            return Err(TopologyError::EdgeOutOfRange(i, j));
        }
        if i == j {
            return Err(TopologyError::SelfLoop(i));
        }
        self.adj[i][j] = true;
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        if i < self.n && j < self.n {
            self.adj[i][j] = false;
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    /// Directed edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.adj[i][j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.iter().filter(|&&b| b).count()).sum()
    }

    /// Out-neighbors of `i`, ascending.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.adj[i][j]).collect()
    }

    /// Neighbor sets of every node.
    pub fn neighbor_sets(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| self.neighbors(i)).collect()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.adj[i].iter().filter(|&&b| b).count()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.adj[j][i]).count()
    }

    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for (i, j) in self.edges() {
            a[(i, j)] = 1.0;
        }
        a
    }

    /// In-degree equals out-degree at every node.
    pub fn is_balanced(&self) -> bool {
        self.first_unbalanced().is_none()
    }

    fn first_unbalanced(&self) -> Option<usize> {
        (0..self.n).find(|&i| self.in_degree(i) != self.out_degree(i))
    }

    /// One forward and one backward search from node 0.
    pub fn is_strongly_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; self.n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for (v, s) in seen.iter_mut().enumerate() {
                    let e = if forward { self.adj[u][v] } else { self.adj[v][u] };
                    if e && !*s {
                        *s = true;
                        stack.push(v);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        };
        reach(true) && reach(false)
    }

    /// Checks what the consensus chemistries need: balance and strong
    /// connectivity.
    pub fn validate_for_consensus(&self) -> Result<(), TopologyError> {
        if let Some(i) = self.first_unbalanced() {
            return Err(TopologyError::Unbalanced(i));
        }
        if !self.is_strongly_connected() {
            return Err(TopologyError::NotStronglyConnected);
        }
        Ok(())
    }

    /// The same graph with every edge reversed.
    pub fn reversed(&self) -> Self {
        let mut g = Self::empty(self.n);
        for (i, j) in self.edges() {
            g.adj[j][i] = true;
        }
        g
    }

    /// Subgraph induced by the nodes flagged in `keep` (same indexing,
    /// dropped nodes become isolated).
    pub fn induced(&self, keep: &[bool]) -> Self {
        let mut g = Self::empty(self.n);
        for (i, j) in self.edges() {
            if keep[i] && keep[j] {
                g.adj[i][j] = true;
            }
        }
        g
    }
}

/// Directed cycle `0 -> 1 -> ... -> M-1 -> 0`.
pub fn make_ring(m: usize) -> Result<NetworkGraph, TopologyError> {
    if m < 2 {
        return Err(TopologyError::TooFewNodes { min: 2, got: m });
    }
    let mut g = NetworkGraph::empty(m);
    for i in 0..m {
        g.adj[i][(i + 1) % m] = true;
    }
    Ok(g)
}

pub fn make_complete(m: usize) -> Result<NetworkGraph, TopologyError> {
    if m < 2 {
        return Err(TopologyError::TooFewNodes { min: 2, got: m });
    }
    let mut g = NetworkGraph::empty(m);
    for i in 0..m {
        for j in 0..m {
            g.adj[i][j] = i != j;
        }
    }
    Ok(g)
}

/// Circulant graph linking every node to its `k` nearest neighbors on each
/// side, in both directions.
pub fn make_regular_lattice(m: usize, k: usize) -> Result<NetworkGraph, TopologyError> {
    if k == 0 || m <= 2 * k {
        return Err(TopologyError::LatticeTooDense { nodes: m, k });
    }
    let mut g = NetworkGraph::empty(m);
    for i in 0..m {
        for d in 1..=k {
            let j = (i + d) % m;
            g.adj[i][j] = true;
            g.adj[j][i] = true;
        }
    }
    Ok(g)
}

/// Watts–Strogatz small world with `undirected_edges = c * M` links: a
/// lattice with `k = c`, each undirected edge rewired with probability
/// `rewire_p` to a uniformly chosen endpoint that is neither the node itself
/// nor an existing neighbor. Links stay undirected, so the result is
/// balanced; draws repeat until it is connected.
pub fn make_small_world(
    m: usize,
    undirected_edges: usize,
    rewire_p: f64,
    seed: u64,
) -> Result<NetworkGraph, TopologyError> {
    if undirected_edges == 0 || !undirected_edges.is_multiple_of(m.max(1)) {
        return Err(TopologyError::EdgesNotMultiple {
            nodes: m,
            edges: undirected_edges,
        });
    }
    if !(0.0..=1.0).contains(&rewire_p) {
        return Err(TopologyError::BadProbability);
    }
    let k = undirected_edges / m;
    let base = make_regular_lattice(m, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        let mut g = base.clone();
        for d in 1..=k {
            for i in 0..m {
                let j = (i + d) % m;
                if rewire_p == 0.0 || rng.gen::<f64>() >= rewire_p {
                    continue;
                }
                let candidates: Vec<usize> =
                    (0..m).filter(|&w| w != i && !g.adj[i][w]).collect();
                if candidates.is_empty() {
                    continue;
                }
                let w = candidates[rng.gen_range(0..candidates.len())];
                g.adj[i][j] = false;
                g.adj[j][i] = false;
                g.adj[i][w] = true;
                g.adj[w][i] = true;
            }
        }
        if g.is_strongly_connected() {
            return Ok(g);
        }
    }
    Err(TopologyError::RewireExhausted(ATTEMPTS))
}

/// `L = D_out - A`.
pub fn laplacian(g: &NetworkGraph) -> Matrix {
    let n = g.node_count();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if g.adj[i][j] {
                l[(i, j)] = -1.0;
                l[(i, i)] += 1.0;
            }
        }
    }
    l
}

/// `(L + L^T) / 2`.
pub fn mirror_laplacian(g: &NetworkGraph) -> Matrix {
    let l = laplacian(g);
    l.add(&l.transpose()).scale(0.5)
}

/// Second-smallest eigenvalue of the mirror Laplacian. Zero (up to
/// round-off) for disconnected graphs.
pub fn algebraic_connectivity(g: &NetworkGraph) -> Result<f64, TopologyError> {
    if let Some(i) = g.first_unbalanced() {
        return Err(TopologyError::Unbalanced(i));
    }
    if g.node_count() < 2 {
        return Err(TopologyError::TooFewNodes {
            min: 2,
            got: g.node_count(),
        });
    }
    Ok(mirror_laplacian(g).symmetric_eigenvalues()[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    #[test]
    fn ring_is_cycle_permutation() {
        let g = make_ring(3).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 0)]);
        assert!((0..3).all(|i| g.in_degree(i) == 1 && g.out_degree(i) == 1));
        assert!(make_ring(1).is_err());
    }

    #[test]
    fn complete_edge_count() {
        let g = make_complete(7).unwrap();
        assert_eq!(g.edge_count(), 42);
        let g2 = make_complete(2).unwrap();
        assert_eq!(g2.edges(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn lattice_degrees() {
        let g = make_regular_lattice(25, 3).unwrap();
        assert_eq!(g.edge_count(), 2 * 3 * 25);
        assert!((0..25).all(|i| g.in_degree(i) == 6 && g.out_degree(i) == 6));
        assert!(make_regular_lattice(6, 3).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let l = laplacian(&make_complete(2).unwrap());
        assert_eq!(l, Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]));
        let l = laplacian(&make_ring(3).unwrap());
        assert_eq!(
            l,
            Matrix::from_rows(&[
                vec![1.0, -1.0, 0.0],
                vec![0.0, 1.0, -1.0],
                vec![-1.0, 0.0, 1.0]
            ])
        );
    }

    #[test]
    fn balance_and_connectivity_checks() {
        assert!(make_ring(5).unwrap().is_balanced());
        let path = NetworkGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(!path.is_balanced());
        let two = NetworkGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
            .unwrap();
        assert!(two.is_balanced());
        assert!(!two.is_strongly_connected());
        assert_eq!(two.validate_for_consensus(), Err(TopologyError::NotStronglyConnected));
        assert_eq!(algebraic_connectivity(&path), Err(TopologyError::Unbalanced(0)));
        assert!(NetworkGraph::from_edges(2, &[(1, 1)]).is_err());
    }

    #[test]
    fn closed_form_spectra() {
        let m = 25;
        let ring = algebraic_connectivity(&make_ring(m).unwrap()).unwrap();
        assert_abs_diff_eq!(ring, 1.0 - libm::cos(2.0 * PI / m as f64), epsilon = 1e-9);
        for mm in [5usize, 12, 40] {
            let und = make_regular_lattice(mm, 1).unwrap();
            let l2 = algebraic_connectivity(&und).unwrap();
            assert_abs_diff_eq!(l2, 2.0 * (1.0 - libm::cos(2.0 * PI / mm as f64)), epsilon = 1e-9);
        }
        let lat = algebraic_connectivity(&make_regular_lattice(m, 3).unwrap()).unwrap();
        let closed = 6.0
            - 2.0 * (1..=3).map(|j| libm::cos(2.0 * PI * j as f64 / m as f64)).sum::<f64>();
        assert_abs_diff_eq!(lat, closed, epsilon = 1e-9);
        let full = algebraic_connectivity(&make_complete(m).unwrap()).unwrap();
        assert_abs_diff_eq!(full, 25.0, epsilon = 1e-9);
    }

    #[test]
    fn disconnected_graph_has_zero_connectivity() {
        let two = NetworkGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
            .unwrap();
        assert_abs_diff_eq!(algebraic_connectivity(&two).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn small_world_without_rewiring_is_lattice() {
        let sw = make_small_world(25, 75, 0.0, 3).unwrap();
        assert_eq!(sw, make_regular_lattice(25, 3).unwrap());
    }

    #[test]
    fn small_world_preserves_edges() {
        for seed in 0..20 {
            let g = make_small_world(100, 300, 0.2, seed).unwrap();
            assert_eq!(g.edge_count(), 600);
            assert!(g.is_balanced());
            assert!(g.is_strongly_connected());
            assert_eq!(g, g.reversed());
        }
        assert!(make_small_world(10, 25, 0.2, 0).is_err());
        assert!(make_small_world(10, 30, 1.5, 0).is_err());
    }
}
