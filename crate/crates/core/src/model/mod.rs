//! Probability producers: free per-node logits optimized for one instance,
//! and a small message-passing network trained across a corpus.

mod adam;
mod direct;
mod mpnn;
mod train;

pub use adam::{AdamConfig, OptimState};
pub use direct::{optimize_direct, optimize_direct_from, seed_local_logits, sigmoid, DirectOutcome};
pub use mpnn::{mpnn_backward, mpnn_forward, MpnnCache, MpnnParams, FEATURES};
pub use mpnn::forward_cached;
pub use train::{
    ball_volume, random_interval, read_checkpoint, train_mpnn, write_checkpoint, Checkpoint, CheckpointFormat,
    TrainConfig, TrainLoss, TrainOutcome, TrainStart, CHECKPOINT_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::distribution::{clique_loss, cut_loss, CliqueLossParams, LossReport, NodeDistribution, VolumeConstraint};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Which probabilistic loss a producer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case")]
pub enum LossSpec {
    Clique(CliqueLossParams),
    /// Expected cut after rescaling to the interval midpoint.
    Cut(VolumeConstraint),
}

impl LossSpec {
    /// Loss of the raw producer output `p0`. Returns the distribution the
    /// loss is actually measured on (rescaled for cuts) and a gradient with
    /// respect to `p0`.
    pub fn evaluate(&self, graph: &Graph, p0: &[f64]) -> Result<(NodeDistribution, LossReport)> {
        let (p, report) = match self {
            LossSpec::Clique(params) => (NodeDistribution::new(p0.to_vec())?, clique_loss(graph, p0, params)),
            LossSpec::Cut(vc) => cut_loss(graph, p0, vc)?,
        };
        if !report.value.is_finite() {
            return Err(Error::Divergence {
                step: 0,
                detail: "loss evaluated to a non-finite value".into(),
            });
        }
        Ok((p, report))
    }
}
