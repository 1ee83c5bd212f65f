//! Bernoulli product distributions over node sets.
//!
//! Node `i` joins the random set independently with probability `p_i`. All
//! expectations used by the losses are multilinear in `p` and are evaluated
//! in a single scan over the edges.

use std::collections::BTreeMap;
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeDistribution(Vec<f64>);

impl NodeDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some((i, &x)) = p.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::invalid(format!("p[{i}] = {x} is not a probability")));
        }
        Ok(NodeDistribution(p))
    }

    pub fn for_graph(graph: &Graph, p: Vec<f64>) -> Result<Self> {
        if p.len() != graph.node_count() {
            return Err(Error::Dimension(format!(
                "{} probabilities for {} nodes",
                p.len(),
                graph.node_count()
            )));
        }
        Self::new(p)
    }

    pub fn uniform(n: usize, q: f64) -> Self {
        assert!((0.0..=1.0).contains(&q));
        NodeDistribution(vec![q; n])
    }

    /// The point mass on `set`.
    pub fn indicator(set: &NodeSet) -> Self {
        NodeDistribution(set.mask().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for NodeDistribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Parameters of the clique penalty loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliqueLossParams {
    pub beta: f64,
    pub gamma: f64,
}

impl CliqueLossParams {
    /// Requires `0 < gamma <= beta`.
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= beta && beta.is_finite()) {
            return Err(Error::invalid(format!(
                "clique loss needs 0 < gamma <= beta, got gamma={gamma}, beta={beta}"
            )));
        }
        Ok(CliqueLossParams { beta, gamma })
    }

    /// `gamma = beta = w(V)`, the smallest choice that bounds `w(S)` for every `S`.
    pub fn for_graph(graph: &Graph) -> Self {
        let w = if graph.total_weight() > 0.0 { graph.total_weight() } else { 1.0 };
        CliqueLossParams { beta: w, gamma: w }
    }

    /// A tuned penalty `beta`; `gamma` is lowered to `beta` when needed.
    pub fn with_beta(graph: &Graph, beta: f64) -> Result<Self> {
        let w = if graph.total_weight() > 0.0 { graph.total_weight() } else { 1.0 };
        Self::new(beta, w.min(beta))
    }

    /// Whether `gamma >= max_S w(S)`, which the clique certificate needs.
    pub fn gamma_dominates(&self, graph: &Graph) -> bool {
        self.gamma >= graph.total_weight()
    }
}

/// Volume interval `[v_l, v_h]` for the constrained cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeConstraint {
    pub v_l: f64,
    pub v_h: f64,
}

impl VolumeConstraint {
    pub fn new(v_l: f64, v_h: f64) -> Result<Self> {
        if !(v_l >= 0.0 && v_l < v_h && v_h.is_finite()) {
            return Err(Error::invalid(format!("need 0 <= v_l < v_h, got [{v_l}, {v_h}]")));
        }
        Ok(VolumeConstraint { v_l, v_h })
    }

    pub fn target(&self) -> f64 {
        0.5 * (self.v_l + self.v_h)
    }

    pub fn contains(&self, volume: f64) -> bool {
        volume >= self.v_l && volume <= self.v_h
    }
}

/// A loss value with its gradient and the named quantities it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub terms: BTreeMap<String, f64>,
}

impl LossReport {
    pub fn term(&self, name: &str) -> f64 {
        self.terms[name]
    }
}

/// `s_i = sum_{j in N(i)} w_ij p_j` for every node.
pub fn neighbor_sums(graph: &Graph, p: &[f64]) -> Vec<f64> {
    (0..graph.node_count())
        .map(|i| graph.adjacent(i).map(|(j, w)| w * p[j]).sum())
        .collect()
}

/// `E[w(S)] = sum_E w_ij p_i p_j`.
pub fn expected_set_weight(graph: &Graph, p: &[f64]) -> f64 {
    graph.edges().map(|(i, j, w)| w * p[i] * p[j]).sum()
}

/// `sum_{i != j} p_i p_j` over ordered pairs, as `(sum p)^2 - sum p^2`.
pub fn ordered_pair_mass(p: &[f64]) -> f64 {
    let s: f64 = p.iter().sum();
    let sq: f64 = p.iter().map(|x| x * x).sum();
    s * s - sq
}

/// Markov bound on `P(S is not a clique)`: `E[w_bar(S)] = 1/2 sum_{i!=j} p_i p_j - E[w(S)]`.
pub fn clique_violation_bound(graph: &Graph, p: &[f64]) -> f64 {
    0.5 * ordered_pair_mass(p) - expected_set_weight(graph, p)
}

/// `gamma - (beta + 1) E[w(S)] + beta/2 sum_{i!=j} p_i p_j` and its gradient.
pub fn clique_loss(graph: &Graph, p: &[f64], params: &CliqueLossParams) -> LossReport {
    let CliqueLossParams { beta, gamma } = *params;
    let ew = expected_set_weight(graph, p);
    let pairs = ordered_pair_mass(p);
    let total: f64 = p.iter().sum();
    let value = gamma - (beta + 1.0) * ew + 0.5 * beta * pairs;
    let s = neighbor_sums(graph, p);
    let gradient = p
        .iter()
        .zip(&s)
        .map(|(&pi, &si)| -(beta + 1.0) * si + beta * (total - pi))
        .collect();
    let mut terms = BTreeMap::new();
    terms.insert("gamma".into(), gamma);
    terms.insert("beta".into(), beta);
    terms.insert("expected_weight".into(), ew);
    terms.insert("ordered_pair_mass".into(), pairs);
    terms.insert("violation_bound".into(), 0.5 * pairs - ew);
    LossReport {
        value,
        gradient,
        terms,
    }
}

/// `E[cut(S)] = sum_i d_i p_i - 2 sum_E w_ij p_i p_j`.
pub fn expected_cut(graph: &Graph, p: &[f64]) -> f64 {
    expected_volume(graph, p) - 2.0 * expected_set_weight(graph, p)
}

/// `d_i - 2 s_i`.
pub fn expected_cut_gradient(graph: &Graph, p: &[f64]) -> Vec<f64> {
    neighbor_sums(graph, p)
        .into_iter()
        .enumerate()
        .map(|(i, s)| graph.degree(i) - 2.0 * s)
        .collect()
}

pub fn expected_volume(graph: &Graph, p: &[f64]) -> f64 {
    graph.degrees().iter().zip(p).map(|(d, q)| d * q).sum()
}

/// Expected cut after rescaling `p0` so that `E[vol(S)]` hits the interval
/// midpoint. The gradient is taken with respect to `p0`: the rescaling acts
/// as a fixed factor on unsaturated coordinates and blocks saturated ones.
pub fn cut_loss(
    graph: &Graph,
    p0: &[f64],
    constraint: &VolumeConstraint,
) -> Result<(NodeDistribution, LossReport)> {
    let rescaled = rescale_to_target(p0, graph.degrees(), constraint.target())?;
    let p = rescaled.p;
    let value = expected_cut(graph, &p);
    let grad_p = expected_cut_gradient(graph, &p);
    let gradient = p0
        .iter()
        .zip(p.iter())
        .zip(&grad_p)
        .map(|((&q0, &q), &g)| if q < 1.0 && q0 > 0.0 { g * q / q0 } else { 0.0 })
        .collect();
    let mut terms = BTreeMap::new();
    terms.insert("expected_cut".into(), value);
    terms.insert("expected_volume".into(), expected_volume(graph, &p));
    terms.insert("target_volume".into(), constraint.target());
    Ok((
        p,
        LossReport {
            value,
            gradient,
            terms,
        },
    ))
}

/// Outcome of the clamp-and-rescale recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub p: NodeDistribution,
    pub iterations: usize,
    /// False when the target lies beyond what the positive coordinates can reach.
    pub reached: bool,
    /// Saturated set `{i : p_i = 1}` after each iteration.
    pub saturated: Vec<Vec<usize>>,
}

/// Rescales `p0` so that `sum_i a_i p_i = b` with `p_i = clamp(c p0_i, 0, 1)`.
///
/// Each round multiplies the unsaturated coordinates by
/// `(b - sum_{Q} a_i) / sum_{not Q} a_i p_i` and clamps; the saturated set
/// `Q` only grows, so at most `n + 1` rounds run. When `sum a_i <= b` every
/// coordinate is set to one.
pub fn rescale_to_target(p0: &[f64], a: &[f64], b: f64) -> Result<Rescaled> {
    let n = p0.len();
    if a.len() != n {
        return Err(Error::Dimension(format!("{} weights for {n} probabilities", a.len())));
    }
    if !(b > 0.0) || a.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid("rescaling needs b > 0 and non-negative weights"));
    }
    if p0.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid("rescaling needs probabilities in [0, 1]"));
    }
    let a_total: f64 = a.iter().sum();
    if a_total <= b {
        return Ok(Rescaled {
            p: NodeDistribution(vec![1.0; n]),
            iterations: 0,
            reached: (a_total - b).abs() <= 1e-9 * b,
            saturated: vec![(0..n).collect()],
        });
    }
    if p0.iter().zip(a).all(|(&q, &w)| q * w == 0.0) {
        return Err(Error::Infeasible(
            "no positive probability mass to rescale towards the target".into(),
        ));
    }

    let mut p = p0.to_vec();
    let mut saturated_mask = vec![false; n];
    let mut saturated = Vec::new();
    let mut iterations = 0;
    let mut reached = false;
    while iterations <= n {
        iterations += 1;
        let fixed: f64 = (0..n).filter(|&i| saturated_mask[i]).map(|i| a[i]).sum();
        let free: f64 = (0..n).filter(|&i| !saturated_mask[i]).map(|i| a[i] * p[i]).sum();
        if free <= 0.0 {
            break;
        }
        let c = (b - fixed) / free;
        let mut grew = false;
        for i in 0..n {
            if saturated_mask[i] {
                continue;
            }
            let scaled = c * p[i];
            if scaled >= 1.0 {
                p[i] = 1.0;
                saturated_mask[i] = true;
                grew = true;
            } else {
                p[i] = scaled.max(0.0);
            }
        }
        saturated.push((0..n).filter(|&i| saturated_mask[i]).collect());
        if !grew {
            reached = true;
            break;
        }
    }
    let achieved: f64 = a.iter().zip(&p).map(|(w, q)| w * q).sum();
    reached = reached || (achieved - b).abs() <= 1e-9 * b;
    Ok(Rescaled {
        p: NodeDistribution(p),
        iterations,
        reached,
        saturated,
    })
}

/// Independent Bernoulli draw of a node set.
pub fn sample<R: Rng + ?Sized>(graph: &Graph, p: &[f64], rng: &mut R) -> NodeSet {
    let mask = p.iter().map(|&q| rng.gen::<f64>() < q).collect();
    NodeSet::from_mask(graph, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::{brute_force_expectation, SetObjective};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn expected_weight_examples() {
        let k3 = triangle();
        assert_eq!(expected_set_weight(&k3, &[1.0; 3]), 3.0);
        let half = [0.5; 3];
        let oracle = brute_force_expectation(&k3, &half, SetObjective::SetWeight).unwrap();
        assert!(close(expected_set_weight(&k3, &half), oracle, 1e-12));
        assert_eq!(oracle, 0.75);
        assert_eq!(expected_set_weight(&k3, &[0.0; 3]), 0.0);
    }

    #[test]
    fn violation_bound_examples() {
        assert_eq!(clique_violation_bound(&triangle(), &[1.0; 3]), 0.0);
        let iso = Graph::from_unweighted(2, &[]).unwrap();
        assert_eq!(clique_violation_bound(&iso, &[1.0, 1.0]), 1.0);
        let oracle = brute_force_expectation(&iso, &[1.0, 1.0], SetObjective::ComplementWeight).unwrap();
        assert_eq!(oracle, 1.0);
        assert_eq!(clique_violation_bound(&petersen(), &[0.0; 10]), 0.0);
    }

    #[test]
    fn clique_loss_examples() {
        let k3 = triangle();
        let params = CliqueLossParams::new(3.0, 3.0).unwrap();
        let r = clique_loss(&k3, &[1.0; 3], &params);
        assert!(r.value.abs() < 1e-12);

        let iso = Graph::from_unweighted(2, &[]).unwrap();
        let r = clique_loss(&iso, &[1.0, 1.0], &CliqueLossParams::new(1.0, 1.0).unwrap());
        assert!((r.value - 2.0).abs() < 1e-12);

        let r = clique_loss(&petersen(), &[0.0; 10], &CliqueLossParams::new(20.0, 15.0).unwrap());
        assert_eq!(r.value, 15.0);
        assert!(r.gradient.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn clique_loss_terms_identity() {
        let g = petersen();
        let p: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).fract()).collect();
        let params = CliqueLossParams::new(4.0, 2.5).unwrap();
        let r = clique_loss(&g, &p, &params);
        let via_bound = params.gamma - r.term("expected_weight") + params.beta * r.term("violation_bound");
        assert!((r.value - via_bound).abs() < 1e-12);
        assert_eq!(r.gradient.len(), 10);
    }

    #[test]
    fn params_validation() {
        assert!(CliqueLossParams::new(1.0, 2.0).is_err());
        assert!(CliqueLossParams::new(1.0, 0.0).is_err());
        let k3 = triangle();
        let d = CliqueLossParams::for_graph(&k3);
        assert_eq!((d.beta, d.gamma), (3.0, 3.0));
        assert!(d.gamma_dominates(&k3));
        let tuned = CliqueLossParams::with_beta(&k3, 1.5).unwrap();
        assert_eq!(tuned.gamma, 1.5);
        assert!(!tuned.gamma_dominates(&k3));
    }

    #[test]
    fn expected_cut_examples() {
        let e = Graph::from_unweighted(2, &[(0, 1)]).unwrap();
        assert_eq!(expected_cut(&e, &[1.0, 0.0]), 1.0);
        assert_eq!(expected_cut(&e, &[0.5, 0.5]), 0.5);
        assert_eq!(
            brute_force_expectation(&e, &[0.5, 0.5], SetObjective::CutWeight).unwrap(),
            0.5
        );
        assert_eq!(expected_cut(&petersen(), &[1.0; 10]), 0.0);
        assert_eq!(expected_cut_gradient(&e, &[0.5, 0.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn expected_volume_examples() {
        let k3 = triangle();
        assert_eq!(expected_volume(&k3, &[1.0; 3]), 6.0);
        assert_eq!(expected_volume(&k3, &[0.5; 3]), 3.0);
        assert_eq!(expected_volume(&k3, &[0.0; 3]), 0.0);
    }

    #[test]
    fn rescale_examples() {
        let a = [1.0; 3];
        let r = rescale_to_target(&[0.5; 3], &a, 1.5).unwrap();
        assert_eq!(r.p.as_slice(), &[0.5; 3]);
        let r = rescale_to_target(&[1.0; 3], &a, 1.5).unwrap();
        assert_eq!(r.p.as_slice(), &[0.5; 3]);
        let r = rescale_to_target(&[0.9, 0.1, 0.1], &a, 1.8).unwrap();
        assert_eq!(r.p[0], 1.0);
        assert!((r.p[1] - 0.4).abs() < 1e-12 && (r.p[2] - 0.4).abs() < 1e-12);
        assert!((r.p.iter().sum::<f64>() - 1.8).abs() < 1e-12);
        assert_eq!(r.iterations, 2);
        assert!(r.reached);
    }

    #[test]
    fn rescale_saturates_when_target_unreachable() {
        let r = rescale_to_target(&[0.2, 0.3], &[1.0, 1.0], 5.0).unwrap();
        assert_eq!(r.p.as_slice(), &[1.0, 1.0]);
        assert!(matches!(
            rescale_to_target(&[0.0, 0.0], &[1.0, 1.0], 1.0),
            Err(Error::Infeasible(_))
        ));
        assert!(rescale_to_target(&[0.5], &[1.0], 0.0).is_err());
    }

    #[test]
    fn cut_loss_straight_through() {
        let k4 = complete(4);
        let c = VolumeConstraint::new(4.0, 8.0).unwrap();
        let p0 = [0.9, 0.2, 0.2, 0.1];
        let (p, report) = cut_loss(&k4, &p0, &c).unwrap();
        assert!((expected_volume(&k4, &p) - 6.0).abs() < 1e-9);
        assert!((report.value - expected_cut(&k4, &p)).abs() < 1e-12);
        assert_eq!(report.gradient.len(), 4);
    }

    #[test]
    fn sample_examples() {
        let g = petersen();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample(&g, &[1.0; 10], &mut rng).len(), 10);
        assert!(sample(&g, &[0.0; 10], &mut rng).is_empty());
        let draws = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            let s = sample(&g, &[0.5; 10], &mut rng);
            for (v, c) in counts.iter_mut().enumerate() {
                *c += usize::from(s.contains(v));
            }
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.5).abs() < 0.01);
        }
        let a = sample(&g, &[0.5; 10], &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample(&g, &[0.5; 10], &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn distribution_validation() {
        assert!(NodeDistribution::new(vec![0.5, 1.2]).is_err());
        assert!(NodeDistribution::for_graph(&triangle(), vec![0.5]).is_err());
        let json = serde_json::to_string(&NodeDistribution::uniform(2, 0.5)).unwrap();
        assert_eq!(json, "[0.5,0.5]");
    }
}
