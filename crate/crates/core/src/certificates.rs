//! Tail-bound certificates for distributions and checks of decoded sets
//! against them.
//!
//! * Markov: a non-negative cost with `E[f] = (1-t) eps` satisfies `f(S) < eps`
//!   with probability more than `t`.
//! * Penalty: the same bound on `E[f] + beta P(S not feasible)` with `eps < beta`
//!   also makes the set feasible.
//! * Box: after rescaling so the linear constraint holds in expectation,
//!   Hoeffding costs `2 exp(-(b_h - b_l)^2 / sum 2 a_i^2)` of confidence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{expected_cut, expected_volume, sample, VolumeConstraint};
use crate::error::{Error, Result};
use crate::graph::{cut_weight, is_clique, set_weight, Graph, NodeSet};
use crate::parallel;

const CLAIM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Markov,
    Penalty,
    BoxConstrained,
}

impl CertificateKind {
    fn name(self) -> &'static str {
        match self {
            CertificateKind::Markov => "markov",
            CertificateKind::Penalty => "penalty",
            CertificateKind::BoxConstrained => "box_constrained",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub t: f64,
    /// Loss value the certificate was issued for.
    pub loss: f64,
    /// Certified cost threshold `loss / (1 - t)`.
    pub bound: f64,
    pub hoeffding_term: Option<f64>,
    pub success_prob: f64,
    pub vacuous: bool,
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::invalid(format!("confidence t = {t} must lie in [0, 1)")))
    }
}

/// `P(f(S) < loss / (1 - t)) > t` for non-negative `f` with `E[f] <= loss`.
pub fn markov_certificate(loss_value: f64, t: f64) -> Result<Certificate> {
    check_t(t)?;
    if !(loss_value >= 0.0) {
        return Err(Error::invalid(format!("Markov certificate needs a non-negative loss, got {loss_value}")));
    }
    Ok(Certificate {
        kind: CertificateKind::Markov,
        t,
        loss: loss_value,
        bound: loss_value / (1.0 - t),
        hoeffding_term: None,
        success_prob: t,
        vacuous: false,
    })
}

/// With probability at least `t` a sample is feasible and costs less than
/// `loss / (1 - t)`, provided that threshold stays below `beta`. Otherwise the
/// certificate is returned flagged vacuous.
pub fn penalty_certificate(loss_value: f64, beta: f64, t: f64) -> Result<Certificate> {
    check_t(t)?;
    let bound = loss_value.max(0.0) / (1.0 - t);
    Ok(Certificate {
        kind: CertificateKind::Penalty,
        t,
        loss: loss_value,
        bound,
        hoeffding_term: None,
        success_prob: t,
        vacuous: !(bound < beta),
    })
}

/// Clique weight guaranteed by a penalty certificate for the loss with offset `gamma`.
pub fn certified_clique_weight(certificate: &Certificate, gamma: f64) -> f64 {
    gamma - certificate.bound
}

/// `2 exp(-(b_h - b_l)^2 / sum_i 2 a_i^2)`.
pub fn hoeffding_term(a: &[f64], b_l: f64, b_h: f64) -> Result<f64> {
    let sq: f64 = a.iter().map(|x| x * x).sum();
    if sq <= 0.0 {
        return Err(Error::invalid("Hoeffding term needs some non-zero coefficient"));
    }
    if b_h < b_l {
        return Err(Error::invalid(format!("empty interval [{b_l}, {b_h}]")));
    }
    let width = b_h - b_l;
    Ok(2.0 * (-(width * width) / (2.0 * sq)).exp())
}

/// Certificate for a distribution already rescaled so that `sum a_i p_i`
/// equals the interval midpoint.
pub fn box_certificate(loss_value: f64, t: f64, a: &[f64], b_l: f64, b_h: f64) -> Result<Certificate> {
    check_t(t)?;
    let h = hoeffding_term(a, b_l, b_h)?;
    let success = t - h;
    Ok(Certificate {
        kind: CertificateKind::BoxConstrained,
        t,
        loss: loss_value,
        bound: loss_value.max(0.0) / (1.0 - t),
        hoeffding_term: Some(h),
        success_prob: success,
        vacuous: success <= 0.0,
    })
}

/// Box certificate for the expected cut of `p` under a volume interval.
/// Fails when `p` has not been rescaled to the interval midpoint.
pub fn cut_certificate(graph: &Graph, p: &[f64], constraint: &VolumeConstraint, t: f64) -> Result<Certificate> {
    let vol = expected_volume(graph, p);
    let target = constraint.target();
    if (vol - target).abs() > 1e-6 * target.max(1.0) {
        return Err(Error::invalid(format!(
            "distribution not rescaled: expected volume {vol} but interval midpoint is {target}"
        )));
    }
    box_certificate(expected_cut(graph, p), t, graph.degrees(), constraint.v_l, constraint.v_h)
}

/// Probability that one of `k` independent samples succeeds when each does with probability `t`.
pub fn sampling_success(t: f64, k: u32) -> f64 {
    1.0 - (1.0 - t).powi(k as i32)
}

/// The objective a certificate talks about.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum CertifiedObjective {
    /// `f(S) = gamma - w(S)` subject to `S` being a clique.
    Clique { gamma: f64 },
    /// `f(S) = cut(S)` subject to `vol(S)` in the interval.
    Cut { v_l: f64, v_h: f64 },
}

impl CertifiedObjective {
    fn name(&self) -> &'static str {
        match self {
            CertifiedObjective::Clique { .. } => "clique",
            CertifiedObjective::Cut { .. } => "cut",
        }
    }

    pub fn cost(&self, graph: &Graph, set: &NodeSet) -> f64 {
        match *self {
            CertifiedObjective::Clique { gamma } => gamma - set_weight(graph, set),
            CertifiedObjective::Cut { .. } => cut_weight(graph, set),
        }
    }

    pub fn feasible(&self, graph: &Graph, set: &NodeSet) -> bool {
        match *self {
            CertifiedObjective::Clique { .. } => is_clique(graph, set),
            CertifiedObjective::Cut { v_l, v_h } => set.volume() >= v_l && set.volume() <= v_h,
        }
    }
}

/// How the two halves of a box certificate are checked on a decoded set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxCheck {
    /// Cost bound and volume interval must both hold (sampled sets).
    #[default]
    Both,
    /// One of them suffices, which is all the sequential decoder promises.
    Either,
}

pub fn verify_solution(
    graph: &Graph,
    set: &NodeSet,
    certificate: &Certificate,
    objective: &CertifiedObjective,
) -> Result<bool> {
    verify_solution_with(graph, set, certificate, objective, BoxCheck::Both)
}

pub fn verify_solution_with(
    graph: &Graph,
    set: &NodeSet,
    certificate: &Certificate,
    objective: &CertifiedObjective,
    mode: BoxCheck,
) -> Result<bool> {
    let cost_ok = objective.cost(graph, set) <= certificate.bound + CLAIM_SLACK;
    match (certificate.kind, objective) {
        (CertificateKind::Markov, _) => Ok(cost_ok),
        (CertificateKind::Penalty, CertifiedObjective::Clique { .. }) => {
            Ok(cost_ok && objective.feasible(graph, set))
        }
        (CertificateKind::BoxConstrained, CertifiedObjective::Cut { .. }) => {
            let feasible = objective.feasible(graph, set);
            Ok(match mode {
                BoxCheck::Both => cost_ok && feasible,
                BoxCheck::Either => cost_ok || feasible,
            })
        }
        (kind, obj) => Err(Error::KindMismatch {
            certificate: kind.name(),
            objective: obj.name(),
        }),
    }
}

/// Monte-Carlo frequency of `event` over `samples` draws from `p`.
///
/// Draws are split into fixed blocks, each with its own generator seeded
/// from `(seed, block)`, so the estimate is the same for any thread count.
pub fn monte_carlo_frequency<F>(graph: &Graph, p: &[f64], samples: usize, seed: u64, event: F) -> f64
where
    F: Fn(&NodeSet) -> bool + Sync + Send,
{
    const BLOCK: usize = 4096;
    let blocks = samples.div_ceil(BLOCK);
    let hits: usize = parallel::map_indices(blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let draws = BLOCK.min(samples - b * BLOCK);
        (0..draws).filter(|_| event(&sample(graph, p, &mut rng))).count()
    })
    .into_iter()
    .sum();
    hits as f64 / samples as f64
}
