//! End-to-end pipelines: multi-restart maximum clique and seeded local
//! partitioning over a schedule of volume intervals.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificates::{box_certificate, cut_certificate, penalty_certificate, Certificate};
use crate::derandomize::{decode_clique_sweep, decode_cut_with_volume, decode_with, visit_order, DecodeObjective, Guard, VisitOrder};
use crate::distribution::{
    clique_loss, expected_cut, sample, CliqueLossParams, NodeDistribution, VolumeConstraint,
};
use crate::error::{Error, Result};
use crate::graph::{conductance, cut_weight, is_clique, set_weight, Graph, NodeSet};
use crate::model::{ball_volume, mpnn_forward, optimize_direct_from, seed_local_logits, AdamConfig, LossSpec, MpnnParams};
use crate::parallel::{current_threads, map_indices};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Clique,
    Partition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Producer {
    #[default]
    Direct,
    Mpnn,
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeVariant {
    /// Method of conditional expectation (clique-guarded for cliques,
    /// volume-guarded for partitions).
    #[default]
    Conditional,
    /// Greedy sweep by decreasing probability. Cliques only.
    Sweep,
    /// Best of several samples.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub problem: Problem,
    /// Sorted member list.
    pub set: Vec<usize>,
    /// Clique weight or cut weight of `set`.
    pub objective: f64,
    pub constraint_ok: bool,
    pub conductance: Option<f64>,
    pub seed_node: Option<usize>,
    pub interval: Option<VolumeConstraint>,
    pub certificate: Certificate,
    pub seeds_tried: usize,
    #[serde(default)]
    pub wall_time: f64,
    pub producer: Producer,
    pub decode: DecodeVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CliqueConfig {
    pub producer: Producer,
    pub decode: DecodeVariant,
    /// Restart count. With a time limit it is the cap on restarts.
    pub restarts: usize,
    /// Optional wall-clock budget in seconds.
    pub time_limit: Option<f64>,
    /// Penalty used while optimizing and decoding. `None` means `W`.
    pub beta: Option<f64>,
    /// Offset of the search loss. `None` means `min(W, beta)`.
    pub gamma: Option<f64>,
    /// Confidence level of the reported certificate.
    pub t: f64,
    pub steps: usize,
    pub lr: f64,
    /// Initial logit magnitude around the restart's seed node.
    pub spread: f64,
    /// Samples per restart for the sampled decoder.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CliqueConfig {
    fn default() -> Self {
        CliqueConfig {
            producer: Producer::Direct,
            decode: DecodeVariant::Conditional,
            restarts: 10,
            time_limit: None,
            beta: Some(DEFAULT_CLIQUE_BETA),
            gamma: None,
            t: 0.5,
            steps: 300,
            lr: AdamConfig::direct().lr,
            spread: 2.0,
            samples: 16,
            seed: 0,
        }
    }
}

/// Search penalty for the clique loss. With `beta = W` the optimizer drives
/// every probability towards zero on dense graphs, so the search uses a
/// small penalty and the clique guard in the decoder keeps answers feasible.
pub const DEFAULT_CLIQUE_BETA: f64 = 2.0;

fn restart_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `job(k)` for `k` in `0..cap`: all at once for a count budget, or in
/// rounds of the pool size until the time limit passes.
fn run_budget<T, F>(cap: usize, time_limit: Option<f64>, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match time_limit {
        None => map_indices(cap, job),
        Some(limit) => {
            let start = Instant::now();
            let round = current_threads().max(1);
            let mut out = Vec::new();
            while out.len() < cap {
                let lo = out.len();
                let hi = (lo + round).min(cap);
                out.extend(map_indices(hi - lo, |k| job(lo + k)));
                if start.elapsed().as_secs_f64() >= limit {
                    break;
                }
            }
            out
        }
    }
}

fn uniform_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> NodeDistribution {
    NodeDistribution::new((0..n).map(|_| rng.gen::<f64>()).collect()).expect("uniform draws lie in [0, 1)")
}

fn require_model(model: Option<&MpnnParams>) -> Result<&MpnnParams> {
    model.ok_or_else(|| Error::invalid("the mpnn producer needs trained parameters"))
}

struct Restart {
    set: NodeSet,
    p: NodeDistribution,
}

fn clique_restart(
    graph: &Graph,
    config: &CliqueConfig,
    search: &CliqueLossParams,
    model: Option<&MpnnParams>,
    index: usize,
) -> Result<Restart> {
    let n = graph.node_count();
    let mut rng = restart_rng(config.seed, index as u64);
    let seed = rng.gen_range(0..n);
    let p = match config.producer {
        Producer::Direct => {
            let logits = seed_local_logits(graph, seed, config.spread, &mut rng);
            let adam = AdamConfig::with_lr(config.lr);
            optimize_direct_from(graph, &LossSpec::Clique(*search), logits, config.steps, adam)?.p
        }
        Producer::Mpnn => mpnn_forward(graph, require_model(model)?, seed)?,
        Producer::UniformRandom => uniform_probabilities(n, &mut rng),
    };
    let set = match config.decode {
        DecodeVariant::Conditional => {
            let objective = DecodeObjective::clique(search);
            let (set, _) = decode_with(graph, &p, objective, VisitOrder::DecreasingProbability, None, Guard::Clique)?;
            extend_to_maximal(graph, &p, set)
        }
        DecodeVariant::Sweep => decode_clique_sweep(graph, &p)?,
        DecodeVariant::Sampled => {
            let mut best = NodeSet::empty(graph);
            let mut best_w = f64::NEG_INFINITY;
            for _ in 0..config.samples.max(1) {
                let s = sample(graph, &p, &mut rng);
                let c = extend_to_maximal(graph, &p, greedy_clique_within(graph, &p, &s));
                let w = set_weight(graph, &c);
                if w > best_w {
                    best = c;
                    best_w = w;
                }
            }
            best
        }
    };
    Ok(Restart { set, p })
}

/// Adds, by decreasing probability, every node adjacent to the whole clique.
/// The conditional decoder can stop early when probabilities collapse (ties
/// exclude), and samples can be empty; each addition only increases the weight.
fn extend_to_maximal(graph: &Graph, p: &[f64], mut set: NodeSet) -> NodeSet {
    let mut members = set.nodes();
    for i in visit_order(p, VisitOrder::DecreasingProbability) {
        if !set.contains(i) && members.iter().all(|&u| graph.has_edge(u, i)) {
            set.insert(graph, i);
            members.push(i);
        }
    }
    set
}

/// Keeps sampled nodes, by decreasing probability, that are adjacent to all
/// nodes kept so far.
fn greedy_clique_within(graph: &Graph, p: &[f64], sampled: &NodeSet) -> NodeSet {
    let mut set = NodeSet::empty(graph);
    let mut members: Vec<usize> = Vec::new();
    for i in visit_order(p, VisitOrder::DecreasingProbability) {
        if sampled.contains(i) && members.iter().all(|&u| graph.has_edge(u, i)) {
            set.insert(graph, i);
            members.push(i);
        }
    }
    set
}

/// Best clique over `config.restarts` restarts, each seeded at a random node.
///
/// The seed node only shapes the initial distribution; it is not forced into
/// the answer. Ties keep the earliest restart, so a larger budget with the
/// same seed never does worse. The certificate is computed for the winning
/// distribution under the loss with `gamma = beta = W`.
pub fn solve_max_clique(graph: &Graph, config: &CliqueConfig, model: Option<&MpnnParams>) -> Result<SolveResult> {
    let start = Instant::now();
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyOrZeroVolume);
    }
    if config.restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    let search = match (config.beta, config.gamma) {
        (None, None) => CliqueLossParams::for_graph(graph),
        (Some(b), None) => CliqueLossParams::with_beta(graph, b)?,
        (b, Some(g)) => CliqueLossParams::new(b.unwrap_or_else(|| graph.total_weight().max(1.0)), g)?,
    };
    let runs = run_budget(config.restarts, config.time_limit, |k| {
        clique_restart(graph, config, &search, model, k)
    });
    let seeds_tried = runs.len();
    let mut best: Option<(f64, Restart)> = None;
    for r in runs {
        let r = r?;
        let w = set_weight(graph, &r.set);
        if best.as_ref().is_none_or(|(bw, b)| w > *bw || (w == *bw && r.set.len() > b.set.len())) {
            best = Some((w, r));
        }
    }
    let (objective, best) = best.expect("at least one restart ran");
    let certified = CliqueLossParams::for_graph(graph);
    let loss = clique_loss(graph, &best.p, &certified).value;
    let certificate = penalty_certificate(loss, certified.beta, config.t)?;
    Ok(SolveResult {
        problem: Problem::Clique,
        constraint_ok: is_clique(graph, &best.set),
        set: best.set.nodes(),
        objective,
        conductance: None,
        seed_node: None,
        interval: None,
        certificate,
        seeds_tried,
        wall_time: start.elapsed().as_secs_f64(),
        producer: config.producer,
        decode: config.decode,
    })
}

/// Same restarts and decoder, but with i.i.d. uniform probabilities.
pub fn uniform_random_baseline(graph: &Graph, config: &CliqueConfig) -> Result<SolveResult> {
    let config = CliqueConfig {
        producer: Producer::UniformRandom,
        ..*config
    };
    solve_max_clique(graph, &config, None)
}

/// `found / optimal`.
pub fn approximation_ratio(found: f64, optimal: f64) -> Result<f64> {
    if !(optimal > 0.0) {
        return Err(Error::invalid(format!("optimal value must be positive, got {optimal}")));
    }
    Ok(found / optimal)
}

/// Quality of a clique for ratio accounting: its size on unit-weight graphs,
/// where clique benchmarks report sizes, and its weight otherwise.
pub fn clique_score(graph: &Graph, set: &NodeSet) -> f64 {
    if graph.is_unit_weight() {
        set.len() as f64
    } else {
        set_weight(graph, set)
    }
}

/// Greedy maximal independent set in the complement graph, i.e. a maximal
/// clique built by repeatedly adding the highest-degree node adjacent to
/// everything chosen so far. Ties go to the lower index.
pub fn greedy_mis_complement(graph: &Graph) -> NodeSet {
    let mut set = NodeSet::empty(graph);
    let mut candidates: Vec<usize> = (0..graph.node_count()).collect();
    while !candidates.is_empty() {
        let mut pick = candidates[0];
        for &c in &candidates[1..] {
            if graph.degree(c) > graph.degree(pick) {
                pick = c;
            }
        }
        set.insert(graph, pick);
        candidates.retain(|&c| c != pick && graph.has_edge(pick, c));
    }
    set
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionConfig {
    pub producer: Producer,
    pub decode: DecodeVariant,
    /// Explicit intervals; when empty a schedule is generated.
    pub intervals: Vec<VolumeConstraint>,
    pub interval_count: usize,
    /// Radius of the ball around the seed that bounds the schedule.
    pub hops: usize,
    /// Interval half-width relative to its center.
    pub half_width: f64,
    pub t: f64,
    pub steps: usize,
    pub lr: f64,
    pub spread: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            producer: Producer::Direct,
            decode: DecodeVariant::Conditional,
            intervals: Vec::new(),
            interval_count: 8,
            hops: 3,
            half_width: 0.25,
            t: 0.5,
            steps: 300,
            lr: AdamConfig::direct().lr,
            spread: 1.0,
            samples: 16,
            seed: 0,
        }
    }
}

/// `count` intervals `(1 +- half_width) c` with centers geometrically spaced
/// between twice the seed degree and the volume of the `hops`-ball. The top
/// center is capped at half the total volume, since larger sets are better
/// described by their complement and `V` itself has conductance zero.
pub fn interval_schedule(
    graph: &Graph,
    seed: usize,
    count: usize,
    hops: usize,
    half_width: f64,
) -> Result<Vec<VolumeConstraint>> {
    let n = graph.node_count();
    if seed >= n {
        return Err(Error::NodeOutOfRange { index: seed, n });
    }
    if count == 0 || !(half_width > 0.0 && half_width < 1.0) {
        return Err(Error::invalid("need a positive interval count and a half-width in (0, 1)"));
    }
    let ball = ball_volume(graph, seed, hops).min(0.5 * graph.degrees().iter().sum::<f64>());
    if ball <= 0.0 {
        return Err(Error::EmptyOrZeroVolume);
    }
    let lo = (2.0 * graph.degree(seed)).min(ball);
    (0..count)
        .map(|k| {
            let frac = if count == 1 { 1.0 } else { k as f64 / (count - 1) as f64 };
            let c = lo * (ball / lo).powf(frac);
            VolumeConstraint::new((1.0 - half_width) * c, (1.0 + half_width) * c)
        })
        .collect()
}

struct Candidate {
    set: NodeSet,
    interval: VolumeConstraint,
    ok: bool,
    phi: f64,
    p: NodeDistribution,
}

fn partition_interval(
    graph: &Graph,
    seed: usize,
    vc: VolumeConstraint,
    config: &PartitionConfig,
    model: Option<&MpnnParams>,
    index: usize,
) -> Result<Option<Candidate>> {
    if graph.degree(seed) > vc.v_h {
        return Ok(None);
    }
    let n = graph.node_count();
    let mut rng = restart_rng(config.seed, index as u64);
    let spec = LossSpec::Cut(vc);
    let p = match config.producer {
        Producer::Direct => {
            let logits = seed_local_logits(graph, seed, config.spread, &mut rng);
            let adam = AdamConfig::with_lr(config.lr);
            optimize_direct_from(graph, &spec, logits, config.steps, adam)?.p
        }
        Producer::Mpnn => {
            let p0 = mpnn_forward(graph, require_model(model)?, seed)?;
            spec.evaluate(graph, &p0)?.0
        }
        Producer::UniformRandom => {
            let p0 = uniform_probabilities(n, &mut rng);
            spec.evaluate(graph, &p0)?.0
        }
    };
    let (set, ok) = match config.decode {
        DecodeVariant::Conditional => {
            let d = decode_cut_with_volume(graph, &p, vc.v_l, vc.v_h, seed)?;
            (d.set, d.reached_lower)
        }
        DecodeVariant::Sampled => {
            // samples with the seed forced in; the best in-interval sample
            // wins, then the best sample under the cap, then the seed alone
            let mut forced = p.clone().into_inner();
            forced[seed] = 1.0;
            let mut best: Option<(bool, f64, NodeSet)> = None;
            for _ in 0..config.samples.max(1) {
                let s = sample(graph, &forced, &mut rng);
                if s.volume() > vc.v_h {
                    continue;
                }
                let inside = s.volume() >= vc.v_l;
                let phi = conductance(graph, &s)?;
                let better = match &best {
                    None => true,
                    Some((bi, bp, _)) => (inside && !bi) || (inside == *bi && phi < *bp),
                };
                if better {
                    best = Some((inside, phi, s));
                }
            }
            match best {
                Some((inside, _, s)) => (s, inside),
                None => {
                    let s = NodeSet::from_nodes(graph, [seed])?;
                    let inside = vc.contains(s.volume());
                    (s, inside)
                }
            }
        }
        DecodeVariant::Sweep => return Err(Error::invalid("sweep decoding applies to cliques only")),
    };
    let phi = conductance(graph, &set)?;
    Ok(Some(Candidate {
        set,
        interval: vc,
        ok,
        phi,
        p,
    }))
}

fn interval_certificate(graph: &Graph, p: &[f64], vc: &VolumeConstraint, t: f64) -> Result<Certificate> {
    match cut_certificate(graph, p, vc, t) {
        Ok(c) => Ok(c),
        // the midpoint lies beyond vol(V); Hoeffding does not apply
        Err(Error::InvalidArgument(_)) => {
            let mut c = box_certificate(expected_cut(graph, p), t, graph.degrees(), vc.v_l, vc.v_h)?;
            c.success_prob = 0.0;
            c.vacuous = true;
            Ok(c)
        }
        Err(e) => Err(e),
    }
}

/// Scans volume intervals around `seed` and returns the decoded set of
/// smallest conductance. Sets whose volume reached the interval are preferred
/// to best-effort sets; `constraint_ok` reports which kind was returned. The
/// seed is always in the set and `vol(S) <= v_h` of the chosen interval.
pub fn solve_local_partition(
    graph: &Graph,
    seed: usize,
    config: &PartitionConfig,
    model: Option<&MpnnParams>,
) -> Result<SolveResult> {
    let start = Instant::now();
    let n = graph.node_count();
    if seed >= n {
        return Err(Error::NodeOutOfRange { index: seed, n });
    }
    if graph.degree(seed) <= 0.0 {
        return Err(Error::Infeasible(format!("seed {seed} is isolated; every set containing it has zero volume")));
    }
    let intervals = if config.intervals.is_empty() {
        interval_schedule(graph, seed, config.interval_count, config.hops, config.half_width)?
    } else {
        config.intervals.clone()
    };
    let runs = map_indices(intervals.len(), |k| partition_interval(graph, seed, intervals[k], config, model, k));
    let mut best: Option<Candidate> = None;
    for r in runs {
        let Some(c) = r? else { continue };
        let better = match &best {
            None => true,
            Some(b) => (c.ok && !b.ok) || (c.ok == b.ok && c.phi < b.phi),
        };
        if better {
            best = Some(c);
        }
    }
    let best = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "seed degree {} exceeds the upper end of every volume interval",
            graph.degree(seed)
        ))
    })?;
    let certificate = interval_certificate(graph, &best.p, &best.interval, config.t)?;
    Ok(SolveResult {
        problem: Problem::Partition,
        objective: cut_weight(graph, &best.set),
        set: best.set.nodes(),
        constraint_ok: best.ok,
        conductance: Some(best.phi),
        seed_node: Some(seed),
        interval: Some(best.interval),
        certificate,
        seeds_tried: intervals.len(),
        wall_time: start.elapsed().as_secs_f64(),
        producer: config.producer,
        decode: config.decode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn two_triangles_bridge() -> Graph {
        Graph::from_unweighted(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap()
    }

    #[test]
    fn complete_graph_is_found() {
        let g = complete(5);
        for decode in [DecodeVariant::Conditional, DecodeVariant::Sweep, DecodeVariant::Sampled] {
            let cfg = CliqueConfig { decode, ..Default::default() };
            let r = solve_max_clique(&g, &cfg, None).unwrap();
            assert_eq!(r.set, vec![0, 1, 2, 3, 4], "{decode:?}");
            assert!(r.constraint_ok);
            assert_eq!(approximation_ratio(r.objective, 10.0).unwrap(), 1.0);
        }
        let r = uniform_random_baseline(&g, &CliqueConfig { decode: DecodeVariant::Sweep, ..Default::default() }).unwrap();
        assert_eq!(r.set.len(), 5);
    }

    #[test]
    fn certificate_on_complete_graph() {
        let r = solve_max_clique(&complete(4), &CliqueConfig::default(), None).unwrap();
        assert!(!r.certificate.vacuous);
        assert!(r.certificate.bound < 1.0);
    }

    #[test]
    fn more_restarts_never_hurt() {
        let g = petersen();
        let mut prev = 0.0;
        for restarts in [1, 2, 5, 10] {
            let cfg = CliqueConfig {
                restarts,
                producer: Producer::UniformRandom,
                ..Default::default()
            };
            let r = solve_max_clique(&g, &cfg, None).unwrap();
            assert!(r.objective >= prev);
            prev = r.objective;
        }
    }

    #[test]
    fn empty_graph_and_missing_model_are_errors() {
        let g = Graph::from_unweighted(0, &[]).unwrap();
        assert!(solve_max_clique(&g, &CliqueConfig::default(), None).is_err());
        let cfg = CliqueConfig {
            producer: Producer::Mpnn,
            ..Default::default()
        };
        assert!(solve_max_clique(&triangle(), &cfg, None).is_err());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(approximation_ratio(3.0, 3.0).unwrap(), 1.0);
        assert_eq!(approximation_ratio(2.0, 4.0).unwrap(), 0.5);
        assert_eq!(approximation_ratio(0.0, 5.0).unwrap(), 0.0);
        assert!(approximation_ratio(1.0, 0.0).is_err());
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_mis_complement(&complete(4)).len(), 4);
        let s = greedy_mis_complement(&path3());
        assert_eq!(s.nodes(), vec![0, 1]);
        let empty = Graph::from_unweighted(4, &[]).unwrap();
        assert_eq!(greedy_mis_complement(&empty).nodes(), vec![0]);
        assert!(is_clique(&petersen(), &greedy_mis_complement(&petersen())));
    }

    #[test]
    fn bridged_triangles_partition() {
        let g = two_triangles_bridge();
        let cfg = PartitionConfig {
            intervals: vec![VolumeConstraint::new(5.0, 8.0).unwrap(), VolumeConstraint::new(6.0, 9.0).unwrap()],
            ..Default::default()
        };
        let r = solve_local_partition(&g, 0, &cfg, None).unwrap();
        assert_eq!(r.set, vec![0, 1, 2]);
        assert!((r.conductance.unwrap() - 1.0 / 7.0).abs() < 1e-12);
        assert!(r.constraint_ok);
    }

    #[test]
    fn bridged_triangles_default_schedule() {
        let r = solve_local_partition(&two_triangles_bridge(), 1, &PartitionConfig::default(), None).unwrap();
        assert_eq!(r.set, vec![0, 1, 2]);
    }

    #[test]
    fn component_has_zero_conductance() {
        let g = Graph::from_unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let cfg = PartitionConfig {
            intervals: vec![VolumeConstraint::new(4.0, 8.0).unwrap()],
            ..Default::default()
        };
        let r = solve_local_partition(&g, 4, &cfg, None).unwrap();
        assert_eq!(r.set, vec![3, 4, 5]);
        assert_eq!(r.conductance, Some(0.0));
    }

    #[test]
    fn seed_degree_interval_gives_singleton() {
        let g = petersen();
        let cfg = PartitionConfig {
            intervals: vec![VolumeConstraint::new(0.0, 3.0).unwrap()],
            ..Default::default()
        };
        let r = solve_local_partition(&g, 7, &cfg, None).unwrap();
        assert_eq!(r.set, vec![7]);
        let tight = PartitionConfig {
            intervals: vec![VolumeConstraint::new(0.0, 2.5).unwrap()],
            ..Default::default()
        };
        assert!(matches!(solve_local_partition(&g, 7, &tight, None), Err(Error::Infeasible(_))));
    }

    #[test]
    fn schedule_shape() {
        let g = petersen();
        let s = interval_schedule(&g, 0, 8, 1, 0.25).unwrap();
        assert_eq!(s.len(), 8);
        assert!((s[0].target() - 6.0).abs() < 1e-12);
        assert!((s[7].target() - 12.0).abs() < 1e-9);
        assert!(s.windows(2).all(|w| w[0].target() < w[1].target()));
    }
}
