//! Immutable weighted undirected graphs in compressed adjacency form.
//!
//! Every undirected edge is stored twice, once per direction, so that the
//! losses and decoders can scan a node's neighborhood without branching.
//! Rows are sorted by neighbor index which makes `weight(i, j)` a binary
//! search.

mod io;
mod oracle;

pub use io::{parse_dimacs, parse_edge_list, IndexBase};
pub use oracle::{brute_force_expectation, brute_force_max_clique, SetObjective, MAX_ENUMERATION_NODES};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    degree: Vec<f64>,
    total_weight: f64,
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Zero-weight edges are dropped. If any weight exceeds one, all weights
    /// are divided by the maximum so that every weight lies in (0, 1].
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut kept = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i >= n {
                return Err(Error::NodeOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(Error::NodeOutOfRange { index: j, n });
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight { i, j, weight: w });
            }
            if w == 0.0 {
                continue;
            }
            kept.push((i.min(j), i.max(j), w));
        }
        kept.sort_by_key(|e| (e.0, e.1));
        for pair in kept.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::DuplicateEdge(pair[0].0, pair[0].1));
            }
        }

        let max_w = kept.iter().map(|e| e.2).fold(0.0_f64, f64::max);
        if max_w > 1.0 {
            for e in kept.iter_mut() {
                e.2 /= max_w;
            }
        }

        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in &kept {
            counts[i + 1] += 1;
            counts[j + 1] += 1;
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0usize; 2 * kept.len()];
        let mut weights = vec![0.0; 2 * kept.len()];
        for &(i, j, w) in &kept {
            neighbors[cursor[i]] = j;
            weights[cursor[i]] = w;
            cursor[i] += 1;
            neighbors[cursor[j]] = i;
            weights[cursor[j]] = w;
            cursor[j] += 1;
        }
        for v in 0..n {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            let mut row: Vec<(usize, f64)> = neighbors[lo..hi]
                .iter()
                .copied()
                .zip(weights[lo..hi].iter().copied())
                .collect();
            row.sort_by_key(|e| e.0);
            for (k, (u, w)) in row.into_iter().enumerate() {
                neighbors[lo + k] = u;
                weights[lo + k] = w;
            }
        }

        let degree: Vec<f64> = (0..n)
            .map(|v| weights[offsets[v]..offsets[v + 1]].iter().sum())
            .collect();
        let total_weight = kept.iter().map(|e| e.2).sum();

        Ok(Graph {
            offsets,
            neighbors,
            weights,
            degree,
            total_weight,
        })
    }

    /// Unit-weight graph from unordered pairs.
    pub fn from_unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        Self::from_edges(n, &weighted)
    }

    pub fn node_count(&self) -> usize {
        self.degree.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Weighted degree `d_i`.
    pub fn degree(&self, v: usize) -> f64 {
        self.degree[v]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    /// Number of neighbors of `v`.
    pub fn neighbor_count(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn neighbor_weights(&self, v: usize) -> &[f64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Iterates `(neighbor, weight)` pairs of `v`.
    pub fn adjacent(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.neighbors(v)
            .iter()
            .copied()
            .zip(self.neighbor_weights(v).iter().copied())
    }

    /// Weight of edge `(i, j)`, zero if absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.neighbors(i).binary_search(&j) {
            Ok(k) => self.neighbor_weights(i)[k],
            Err(_) => 0.0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Each undirected edge once, as `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.adjacent(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    pub fn max_degree(&self) -> f64 {
        self.degree.iter().copied().fold(0.0, f64::max)
    }

    /// True when every edge has weight exactly one.
    pub fn is_unit_weight(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// Hop distance from `source` for every node, `None` when unreachable.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &u in self.neighbors(v) {
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Canonical text form: a `# nodes N` header followed by sorted `i j [w]` lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes {}\n", self.node_count());
        for (i, j, w) in self.edges() {
            if w == 1.0 {
                out.push_str(&format!("{i} {j}\n"));
            } else {
                out.push_str(&format!("{i} {j} {w}\n"));
            }
        }
        out
    }

    /// FNV-1a digest of the canonical edge list, used to match results to graphs.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_edge_list().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.node_count() {
            Err(Error::NodeOutOfRange {
                index: v,
                n: self.node_count(),
            })
        } else {
            Ok(())
        }
    }
}

/// A subset of nodes with cached size and volume.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    members: Vec<bool>,
    size: usize,
    volume: f64,
}

impl NodeSet {
    pub fn empty(graph: &Graph) -> Self {
        NodeSet {
            members: vec![false; graph.node_count()],
            size: 0,
            volume: 0.0,
        }
    }

    pub fn full(graph: &Graph) -> Self {
        Self::from_mask(graph, vec![true; graph.node_count()])
    }

    pub fn from_nodes<I: IntoIterator<Item = usize>>(graph: &Graph, nodes: I) -> Result<Self> {
        let mut set = Self::empty(graph);
        for v in nodes {
            graph.check_node(v)?;
            set.insert(graph, v);
        }
        Ok(set)
    }

    pub fn from_mask(graph: &Graph, members: Vec<bool>) -> Self {
        assert_eq!(members.len(), graph.node_count(), "mask length must equal node count");
        let size = members.iter().filter(|&&b| b).count();
        let volume = members
            .iter()
            .zip(graph.degrees())
            .filter(|(&b, _)| b)
            .map(|(_, &d)| d)
            .sum();
        NodeSet {
            members,
            size,
            volume,
        }
    }

    pub fn insert(&mut self, graph: &Graph, v: usize) -> bool {
        if self.members[v] {
            return false;
        }
        self.members[v] = true;
        self.size += 1;
        self.volume += graph.degree(v);
        true
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members[v]
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Sum of weighted degrees of the members.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn mask(&self) -> &[bool] {
        &self.members
    }

    /// Member indices in ascending order.
    pub fn nodes(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn complement(&self, graph: &Graph) -> Self {
        Self::from_mask(graph, self.members.iter().map(|b| !b).collect())
    }
}

/// Total weight of edges with both endpoints in `set`.
pub fn set_weight(graph: &Graph, set: &NodeSet) -> f64 {
    let mut w = 0.0;
    for i in set.nodes() {
        for (j, wij) in graph.adjacent(i) {
            if j > i && set.contains(j) {
                w += wij;
            }
        }
    }
    w
}

/// Total weight of edges with exactly one endpoint in `set`.
pub fn cut_weight(graph: &Graph, set: &NodeSet) -> f64 {
    let mut c = 0.0;
    for i in set.nodes() {
        for (j, wij) in graph.adjacent(i) {
            if !set.contains(j) {
                c += wij;
            }
        }
    }
    c
}

pub fn volume(graph: &Graph, set: &NodeSet) -> f64 {
    set.nodes().iter().map(|&v| graph.degree(v)).sum()
}

/// True iff every pair of members is adjacent. Empty sets and singletons are cliques.
pub fn is_clique(graph: &Graph, set: &NodeSet) -> bool {
    let nodes = set.nodes();
    let k = nodes.len();
    nodes.iter().all(|&v| {
        let inside = graph.neighbors(v).iter().filter(|&&u| set.contains(u)).count();
        inside == k - 1
    })
}

/// `cut(S) / vol(S)`.
pub fn conductance(graph: &Graph, set: &NodeSet) -> Result<f64> {
    let vol = volume(graph, set);
    if set.is_empty() || vol <= 0.0 {
        return Err(Error::EmptyOrZeroVolume);
    }
    Ok(cut_weight(graph, set) / vol)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn triangle_degrees_and_weight() {
        let g = triangle();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.degrees(), &[2.0, 2.0, 2.0]);
        assert_eq!(g.total_weight(), 3.0);
        let sum: f64 = g.degrees().iter().sum();
        assert_eq!(sum, 2.0 * g.total_weight());
    }

    #[test]
    fn storage_is_symmetric() {
        let g = Graph::from_edges(4, &[(0, 1, 0.5), (2, 1, 0.25), (3, 0, 1.0)]).unwrap();
        for i in 0..4 {
            for (j, w) in g.adjacent(i) {
                assert_eq!(g.weight(j, i), w);
            }
        }
        assert_eq!(g.weight(0, 2), 0.0);
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(matches!(Graph::from_unweighted(2, &[(0, 0)]), Err(Error::SelfLoop(0))));
        assert!(matches!(
            Graph::from_unweighted(2, &[(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 1, -1.0)]),
            Err(Error::InvalidWeight { .. })
        ));
    }

    #[test]
    fn zero_weight_edges_are_dropped() {
        let g = Graph::from_edges(3, &[(0, 1, 0.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(!g.has_edge(0, 1));
    }

    #[test]
    fn heavy_weights_are_normalized() {
        let g = Graph::from_edges(3, &[(0, 1, 4.0), (1, 2, 2.0)]).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 2), 0.5);
    }

    #[test]
    fn set_weight_examples() {
        let k3 = triangle();
        let all = NodeSet::full(&k3);
        assert_eq!(set_weight(&k3, &all), 3.0);
        let s0 = NodeSet::from_nodes(&k3, [0]).unwrap();
        assert_eq!(set_weight(&k3, &s0), 0.0);
        let p = path3();
        let s = NodeSet::from_nodes(&p, [0, 2]).unwrap();
        assert_eq!(set_weight(&p, &s), 0.0);
    }

    #[test]
    fn cut_weight_examples() {
        let k3 = triangle();
        assert_eq!(cut_weight(&k3, &NodeSet::from_nodes(&k3, [0]).unwrap()), 2.0);
        assert_eq!(cut_weight(&k3, &NodeSet::empty(&k3)), 0.0);
        assert_eq!(cut_weight(&k3, &NodeSet::full(&k3)), 0.0);
        let k4 = complete(4);
        assert_eq!(cut_weight(&k4, &NodeSet::from_nodes(&k4, [0, 1]).unwrap()), 4.0);
    }

    #[test]
    fn clique_examples() {
        let k3 = triangle();
        assert!(is_clique(&k3, &NodeSet::full(&k3)));
        let p = path3();
        assert!(!is_clique(&p, &NodeSet::from_nodes(&p, [0, 2]).unwrap()));
        assert!(is_clique(&p, &NodeSet::from_nodes(&p, [2]).unwrap()));
        assert!(is_clique(&p, &NodeSet::empty(&p)));
    }

    #[test]
    fn conductance_examples() {
        let e = Graph::from_edges(2, &[(0, 1, 0.5)]).unwrap();
        assert_eq!(e.degrees(), &[0.5, 0.5]);
        assert_eq!(conductance(&e, &NodeSet::from_nodes(&e, [0]).unwrap()).unwrap(), 1.0);
        let k4 = complete(4);
        let phi = conductance(&k4, &NodeSet::from_nodes(&k4, [0, 1]).unwrap()).unwrap();
        assert!((phi - 4.0 / 6.0).abs() < 1e-15);
        let two = Graph::from_unweighted(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(conductance(&two, &NodeSet::from_nodes(&two, [0, 1]).unwrap()).unwrap(), 0.0);
        assert!(matches!(
            conductance(&two, &NodeSet::empty(&two)),
            Err(Error::EmptyOrZeroVolume)
        ));
        let iso = Graph::from_unweighted(2, &[]).unwrap();
        assert!(conductance(&iso, &NodeSet::from_nodes(&iso, [0]).unwrap()).is_err());
    }

    #[test]
    fn nodeset_caches_volume() {
        let k4 = complete(4);
        let s = NodeSet::from_nodes(&k4, [1, 3]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.volume(), 6.0);
        assert_eq!(s.volume() + s.complement(&k4).volume(), 12.0);
        assert!(NodeSet::from_nodes(&k4, [4]).is_err());
    }

    #[test]
    fn hop_distances_on_path() {
        let p = path3();
        assert_eq!(p.hop_distances(0), vec![Some(0), Some(1), Some(2)]);
        let iso = Graph::from_unweighted(2, &[]).unwrap();
        assert_eq!(iso.hop_distances(0), vec![Some(0), None]);
    }
}
