//! Deterministic decoding by the method of conditional expectation.
//!
//! Nodes are fixed one at a time. Because every objective here is
//! multilinear in `p`, conditioning on `v_i in S` (resp. `v_i notin S`) is the
//! same as substituting `p_i = 1` (resp. `0`), and the current expectation is
//! the `p_i`-weighted average of the two, so picking the smaller one never
//! increases it. The evaluator keeps the neighbor sums `s_i`, `sum p`,
//! `sum p^2`, `E[w(S)]` and `E[vol(S)]` so a decision costs `O(deg(i))`.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{neighbor_sums, sample, CliqueLossParams, NodeDistribution};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};

/// Multilinear objectives the decoder can condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecodeObjective {
    /// Expectation of the clique penalty, i.e. the clique loss.
    CliquePenalty { beta: f64, gamma: f64 },
    /// `E[cut(S)]`.
    Cut,
    /// `-E[cut(S)]`, for max-cut.
    NegatedCut,
}

impl DecodeObjective {
    pub fn clique(params: &CliqueLossParams) -> Self {
        DecodeObjective::CliquePenalty {
            beta: params.beta,
            gamma: params.gamma,
        }
    }

    fn combine(&self, ew: f64, vol: f64, sum_p: f64, sum_sq: f64) -> f64 {
        match *self {
            DecodeObjective::CliquePenalty { beta, gamma } => {
                gamma - (beta + 1.0) * ew + 0.5 * beta * (sum_p * sum_p - sum_sq)
            }
            DecodeObjective::Cut => vol - 2.0 * ew,
            DecodeObjective::NegatedCut => 2.0 * ew - vol,
        }
    }

    /// Value of the objective on an integral set.
    pub fn value_on(&self, graph: &Graph, set: &NodeSet) -> f64 {
        self.expectation(graph, &NodeDistribution::indicator(set))
    }

    /// Full recomputation of the expectation under `p`.
    pub fn expectation(&self, graph: &Graph, p: &[f64]) -> f64 {
        let ew: f64 = graph.edges().map(|(i, j, w)| w * p[i] * p[j]).sum();
        let vol: f64 = graph.degrees().iter().zip(p).map(|(d, q)| d * q).sum();
        let sum_p: f64 = p.iter().sum();
        let sum_sq: f64 = p.iter().map(|q| q * q).sum();
        self.combine(ew, vol, sum_p, sum_sq)
    }
}

/// Order in which nodes are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitOrder {
    /// Decreasing probability, ties by ascending index.
    #[default]
    DecreasingProbability,
    Natural,
}

/// Hard constraint enforced while decoding: an include decision that would
/// break it is turned into an exclusion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Guard {
    #[default]
    None,
    /// Only include nodes adjacent to every node included so far.
    Clique,
    /// Never let the included volume exceed the cap.
    VolumeCap(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub visit_order: Vec<usize>,
    pub decisions: Vec<bool>,
    /// Expectation before any decision.
    pub initial: f64,
    /// Conditional expectation after each decision.
    pub expectation_path: Vec<f64>,
    /// Decisions flipped by the guard.
    pub overrides: usize,
}

impl DecodeTrace {
    pub fn final_value(&self) -> f64 {
        self.expectation_path.last().copied().unwrap_or(self.initial)
    }
}

/// Incrementally maintained expectation of a multilinear objective.
pub struct ConditionalEvaluator<'g> {
    graph: &'g Graph,
    objective: DecodeObjective,
    p: Vec<f64>,
    s: Vec<f64>,
    sum_p: f64,
    sum_sq: f64,
    ew: f64,
    vol: f64,
}

impl<'g> ConditionalEvaluator<'g> {
    pub fn new(graph: &'g Graph, p: &[f64], objective: DecodeObjective) -> Self {
        let s = neighbor_sums(graph, p);
        let ew = 0.5 * p.iter().zip(&s).map(|(q, si)| q * si).sum::<f64>();
        ConditionalEvaluator {
            graph,
            objective,
            p: p.to_vec(),
            sum_p: p.iter().sum(),
            sum_sq: p.iter().map(|q| q * q).sum(),
            vol: graph.degrees().iter().zip(p).map(|(d, q)| d * q).sum(),
            ew,
            s,
        }
    }

    pub fn value(&self) -> f64 {
        self.objective.combine(self.ew, self.vol, self.sum_p, self.sum_sq)
    }

    /// Expectation with `p_i` replaced by `x`.
    pub fn value_if(&self, i: usize, x: f64) -> f64 {
        let dp = x - self.p[i];
        self.objective.combine(
            self.ew + dp * self.s[i],
            self.vol + dp * self.graph.degree(i),
            self.sum_p + dp,
            self.sum_sq + x * x - self.p[i] * self.p[i],
        )
    }

    pub fn set(&mut self, i: usize, x: f64) {
        let dp = x - self.p[i];
        if dp == 0.0 {
            return;
        }
        self.ew += dp * self.s[i];
        self.vol += dp * self.graph.degree(i);
        self.sum_p += dp;
        self.sum_sq += x * x - self.p[i] * self.p[i];
        for (j, w) in self.graph.adjacent(i) {
            self.s[j] += w * dp;
        }
        self.p[i] = x;
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

pub fn visit_order(p: &[f64], order: VisitOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    if order == VisitOrder::DecreasingProbability {
        idx.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    }
    idx
}

/// Method of conditional expectation: includes `v_i` iff conditioning on it
/// gives a strictly smaller expectation. The final value is at most the
/// initial expectation.
pub fn decode_conditional(graph: &Graph, p: &[f64], objective: DecodeObjective) -> Result<(NodeSet, DecodeTrace)> {
    decode_with(graph, p, objective, VisitOrder::default(), None, Guard::None)
}

/// General form: optional visit order, a node pinned into the set before
/// decoding starts, and a guard that vetoes include decisions.
pub fn decode_with(
    graph: &Graph,
    p: &[f64],
    objective: DecodeObjective,
    order: VisitOrder,
    pinned: Option<usize>,
    guard: Guard,
) -> Result<(NodeSet, DecodeTrace)> {
    let n = graph.node_count();
    if p.len() != n {
        return Err(Error::Dimension(format!("{} probabilities for {n} nodes", p.len())));
    }
    let mut eval = ConditionalEvaluator::new(graph, p, objective);
    let initial = eval.value();
    let mut set = NodeSet::empty(graph);
    let mut trace = DecodeTrace {
        visit_order: Vec::with_capacity(n),
        decisions: Vec::with_capacity(n),
        initial,
        expectation_path: Vec::with_capacity(n),
        overrides: 0,
    };
    let mut members: Vec<usize> = Vec::new();

    if let Some(seed) = pinned {
        if seed >= n {
            return Err(Error::NodeOutOfRange { index: seed, n });
        }
        eval.set(seed, 1.0);
        set.insert(graph, seed);
        members.push(seed);
        trace.visit_order.push(seed);
        trace.decisions.push(true);
        trace.expectation_path.push(eval.value());
    }

    for i in visit_order(p, order) {
        if Some(i) == pinned {
            continue;
        }
        let with = eval.value_if(i, 1.0);
        let without = eval.value_if(i, 0.0);
        let mut include = with < without;
        if include {
            let allowed = match guard {
                Guard::None => true,
                Guard::Clique => members.iter().all(|&u| graph.has_edge(u, i)),
                Guard::VolumeCap(cap) => set.volume() + graph.degree(i) <= cap,
            };
            if !allowed {
                include = false;
                trace.overrides += 1;
            }
        }
        eval.set(i, if include { 1.0 } else { 0.0 });
        if include {
            set.insert(graph, i);
            members.push(i);
        }
        trace.visit_order.push(i);
        trace.decisions.push(include);
        trace.expectation_path.push(eval.value());
    }
    Ok((set, trace))
}

/// Side of a bipartition cutting at least half of the total edge weight,
/// decoded from the fair-coin distribution.
pub fn decode_maxcut_half(graph: &Graph) -> NodeSet {
    let p = vec![0.5; graph.node_count()];
    decode_with(graph, &p, DecodeObjective::NegatedCut, VisitOrder::Natural, None, Guard::None)
        .expect("dimensions match by construction")
        .0
}

/// Sweeps nodes by decreasing probability and keeps each one adjacent to
/// all nodes kept so far. Always returns a clique.
pub fn decode_clique_sweep(graph: &Graph, p: &[f64]) -> Result<NodeSet> {
    if p.len() != graph.node_count() {
        return Err(Error::Dimension(format!("{} probabilities for {} nodes", p.len(), graph.node_count())));
    }
    let mut set = NodeSet::empty(graph);
    let mut members: Vec<usize> = Vec::new();
    for i in visit_order(p, VisitOrder::DecreasingProbability) {
        if members.iter().all(|&u| graph.has_edge(u, i)) {
            set.insert(graph, i);
            members.push(i);
        }
    }
    Ok(set)
}

/// Outcome of the volume-guarded cut decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeDecode {
    pub set: NodeSet,
    pub trace: DecodeTrace,
    /// Whether `vol(S) >= v_l` was reached; `vol(S) <= v_h` always holds.
    pub reached_lower: bool,
}

/// Conditional-expectation decode of the expected cut with `seed` pinned
/// into the set and every include that would exceed `v_h` vetoed.
pub fn decode_cut_with_volume(graph: &Graph, p: &[f64], v_l: f64, v_h: f64, seed: usize) -> Result<VolumeDecode> {
    if seed >= graph.node_count() {
        return Err(Error::NodeOutOfRange {
            index: seed,
            n: graph.node_count(),
        });
    }
    if graph.degree(seed) > v_h {
        return Err(Error::Infeasible(format!(
            "seed {seed} has degree {} above the volume cap {v_h}",
            graph.degree(seed)
        )));
    }
    let (set, trace) = decode_with(
        graph,
        p,
        DecodeObjective::Cut,
        VisitOrder::DecreasingProbability,
        Some(seed),
        Guard::VolumeCap(v_h),
    )?;
    let reached_lower = set.volume() >= v_l;
    Ok(VolumeDecode {
        set,
        trace,
        reached_lower,
    })
}

/// Best of `k` samples under the objective's integral value; the first
/// sample wins ties.
pub fn decode_best_of_k<R: Rng + ?Sized>(
    graph: &Graph,
    p: &[f64],
    objective: DecodeObjective,
    k: usize,
    rng: &mut R,
) -> Result<NodeSet> {
    if k == 0 {
        return Err(Error::invalid("best-of-k decoding needs k >= 1"));
    }
    if p.len() != graph.node_count() {
        return Err(Error::Dimension(format!("{} probabilities for {} nodes", p.len(), graph.node_count())));
    }
    let mut best = sample(graph, p, rng);
    let mut best_value = objective.value_on(graph, &best);
    for _ in 1..k {
        let s = sample(graph, p, rng);
        let v = objective.value_on(graph, &s);
        if v < best_value {
            best = s;
            best_value = v;
        }
    }
    Ok(best)
}
