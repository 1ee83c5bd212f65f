use rand::Rng;

use super::{AdamConfig, LossSpec, OptimState};
use crate::distribution::NodeDistribution;
use crate::error::{Error, Result};
use crate::graph::Graph;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectOutcome {
    /// Distribution the final loss is measured on.
    pub p: NodeDistribution,
    pub logits: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Adam on free logits starting from `p = 1/2` everywhere, with a little
/// jitter from `rng` to break ties between symmetric nodes.
pub fn optimize_direct<R: Rng + ?Sized>(
    graph: &Graph,
    loss: &LossSpec,
    steps: usize,
    config: AdamConfig,
    rng: &mut R,
) -> Result<DirectOutcome> {
    let logits: Vec<f64> = (0..graph.node_count())
        .map(|_| rng.gen_range(-1e-3..1e-3))
        .collect();
    optimize_direct_from(graph, loss, logits, steps, config)
}

/// Logits that favor the neighborhood of `seed`: `+spread` on the seed and
/// its neighbors, `-spread` elsewhere, plus jitter.
pub fn seed_local_logits<R: Rng + ?Sized>(graph: &Graph, seed: usize, spread: f64, rng: &mut R) -> Vec<f64> {
    let mut logits = vec![-spread; graph.node_count()];
    logits[seed] = spread;
    for &u in graph.neighbors(seed) {
        logits[u] = spread;
    }
    for l in logits.iter_mut() {
        *l += rng.gen_range(-0.05..0.05);
    }
    logits
}

pub fn optimize_direct_from(
    graph: &Graph,
    loss: &LossSpec,
    mut logits: Vec<f64>,
    steps: usize,
    config: AdamConfig,
) -> Result<DirectOutcome> {
    let n = graph.node_count();
    if logits.len() != n {
        return Err(Error::Dimension(format!("{} logits for {n} nodes", logits.len())));
    }
    let mut state = OptimState::new(n, config);
    let probs = |l: &[f64]| l.iter().map(|&x| sigmoid(x)).collect::<Vec<_>>();

    let (_, first) = loss.evaluate(graph, &probs(&logits))?;
    let initial_loss = first.value;
    let mut report = first;
    for step in 0..steps {
        let p0 = probs(&logits);
        let grad: Vec<f64> = report
            .gradient
            .iter()
            .zip(&p0)
            .map(|(g, q)| g * q * (1.0 - q))
            .collect();
        state.update(&mut logits, &grad);
        let (_, next) = loss.evaluate(graph, &probs(&logits)).map_err(|e| match e {
            Error::Divergence { detail, .. } => Error::Divergence { step: step + 1, detail },
            other => other,
        })?;
        if !next.value.is_finite() || next.gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                step: step + 1,
                detail: format!("loss {}", next.value),
            });
        }
        report = next;
    }
    let (p, last) = loss.evaluate(graph, &probs(&logits))?;
    Ok(DirectOutcome {
        p,
        logits,
        initial_loss,
        final_loss: last.value,
    })
}
