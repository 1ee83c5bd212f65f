//! Exact oracles for small instances: maximum-weight clique by branch and
//! bound, and expectations under a product distribution by enumerating all
//! `2^n` node sets.

use serde::{Deserialize, Serialize};

use super::{Graph, NodeSet};
use crate::error::{Error, Result};
use crate::parallel;

/// Largest graph `brute_force_expectation` will enumerate.
pub const MAX_ENUMERATION_NODES: usize = 20;

const WEIGHT_TIE: f64 = 1e-9;

/// Set functions the enumeration oracle can average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SetObjective {
    SetWeight,
    CutWeight,
    Volume,
    /// 1 when the set is a clique, 0 otherwise.
    CliqueIndicator,
    /// Sum over member pairs of `1 - w_ij` (`w_ij = 0` for non-edges).
    ComplementWeight,
    /// `gamma - w(S) + beta * [S is not a clique]`.
    CliquePenalty { gamma: f64, beta: f64 },
}

impl SetObjective {
    /// Evaluates the objective on a bitmask set (`n <= 64`).
    pub fn eval_mask(&self, graph: &Graph, mask: u64) -> f64 {
        let inside = |v: usize| mask >> v & 1 == 1;
        let mut weight = 0.0;
        let mut cut = 0.0;
        let mut inner_edges = 0usize;
        for (i, j, w) in graph.edges() {
            match (inside(i), inside(j)) {
                (true, true) => {
                    weight += w;
                    inner_edges += 1;
                }
                (true, false) | (false, true) => cut += w,
                _ => {}
            }
        }
        let size = mask.count_ones() as usize;
        let pairs = size * size.saturating_sub(1) / 2;
        let clique = inner_edges == pairs;
        match *self {
            SetObjective::SetWeight => weight,
            SetObjective::CutWeight => cut,
            SetObjective::Volume => (0..graph.node_count())
                .filter(|&v| inside(v))
                .map(|v| graph.degree(v))
                .sum(),
            SetObjective::CliqueIndicator => f64::from(u8::from(clique)),
            SetObjective::ComplementWeight => pairs as f64 - weight,
            SetObjective::CliquePenalty { gamma, beta } => {
                gamma - weight + if clique { 0.0 } else { beta }
            }
        }
    }
}

/// Exact `E[objective(S)]` for `S` drawn from the product distribution `p`.
pub fn brute_force_expectation(graph: &Graph, p: &[f64], objective: SetObjective) -> Result<f64> {
    let n = graph.node_count();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::TooLarge {
            n,
            max: MAX_ENUMERATION_NODES,
        });
    }
    if p.len() != n {
        return Err(Error::Dimension(format!("{} probabilities for {n} nodes", p.len())));
    }
    let total = 1usize << n;
    Ok(parallel::chunked_sum(total, 1024, |mask| {
        let prob: f64 = (0..n)
            .map(|v| if mask >> v & 1 == 1 { p[v] } else { 1.0 - p[v] })
            .product();
        if prob == 0.0 {
            0.0
        } else {
            prob * objective.eval_mask(graph, mask as u64)
        }
    }))
}

/// Maximum-weight clique by branch and bound with a greedy-coloring bound.
///
/// Ties on weight (within 1e-9) go to the lexicographically smallest sorted
/// member list. `budget` caps the number of branch nodes explored.
pub fn brute_force_max_clique(graph: &Graph, budget: u64) -> Result<NodeSet> {
    let n = graph.node_count();
    if n == 0 {
        return Ok(NodeSet::empty(graph));
    }
    let mut search = CliqueSearch {
        graph,
        budget,
        visited: 0,
        best: vec![0],
        best_weight: 0.0,
        current: Vec::new(),
    };
    let candidates: Vec<(usize, f64)> = (0..n).map(|v| (v, 0.0)).collect();
    search.expand(0.0, candidates)?;
    NodeSet::from_nodes(graph, search.best.iter().copied())
}

struct CliqueSearch<'g> {
    graph: &'g Graph,
    budget: u64,
    visited: u64,
    best: Vec<usize>,
    best_weight: f64,
    current: Vec<usize>,
}

impl CliqueSearch<'_> {
    /// `candidates` holds nodes adjacent to every member of `current`,
    /// ascending, each with its total weight to `current`.
    fn expand(&mut self, weight: f64, mut candidates: Vec<(usize, f64)>) -> Result<()> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Error::BudgetExceeded(self.budget));
        }
        if candidates.is_empty() {
            self.offer(weight);
            return Ok(());
        }
        while !candidates.is_empty() {
            if self.bound(weight, &candidates) < self.best_weight - WEIGHT_TIE {
                return Ok(());
            }
            let (v, gain) = candidates.remove(0);
            let next: Vec<(usize, f64)> = candidates
                .iter()
                .filter_map(|&(u, g)| {
                    let w = self.graph.weight(v, u);
                    (w > 0.0).then_some((u, g + w))
                })
                .collect();
            self.current.push(v);
            self.expand(weight + gain, next)?;
            self.current.pop();
        }
        // `current` itself is a clique whose extensions were all explored.
        self.offer(weight);
        Ok(())
    }

    fn offer(&mut self, weight: f64) {
        if self.current.is_empty() {
            return;
        }
        let mut members = self.current.clone();
        members.sort_unstable();
        if weight > self.best_weight + WEIGHT_TIE
            || (weight >= self.best_weight - WEIGHT_TIE && members < self.best)
        {
            self.best_weight = weight;
            self.best = members;
        }
    }

    /// Upper bound on the weight of any clique extending `current` by
    /// candidates: at most `k` of them fit, `k` the greedy color count, each
    /// adds its gain and every new pair weighs at most one.
    fn bound(&self, weight: f64, candidates: &[(usize, f64)]) -> f64 {
        let mut color_classes: Vec<Vec<usize>> = Vec::new();
        for &(v, _) in candidates {
            match color_classes
                .iter_mut()
                .find(|class| class.iter().all(|&u| !self.graph.has_edge(u, v)))
            {
                Some(class) => class.push(v),
                None => color_classes.push(vec![v]),
            }
        }
        let k = color_classes.len();
        let mut gains: Vec<f64> = candidates.iter().map(|c| c.1).collect();
        gains.sort_by(|a, b| b.total_cmp(a));
        weight + gains.iter().take(k).sum::<f64>() + (k * k.saturating_sub(1) / 2) as f64
    }
}
