use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mpnn::forward_cached;
use super::{mpnn_backward, AdamConfig, LossSpec, MpnnParams, OptimState};
use crate::distribution::{CliqueLossParams, VolumeConstraint};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::parallel::map_indices;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"PMCK";

/// Loss family used during training. The concrete parameters depend on the
/// graph (and, for cuts, on the sampled seed), so they are resolved per
/// example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case")]
pub enum TrainLoss {
    /// Clique penalty with `gamma = beta = W` when `beta` is absent, else
    /// `gamma = min(W, beta)`.
    Clique { beta: Option<f64> },
    /// Constrained cut with a random volume interval inside the receptive
    /// field of the seed.
    Cut,
}

impl TrainLoss {
    pub fn resolve<R: Rng + ?Sized>(&self, graph: &Graph, seed: usize, hops: usize, rng: &mut R) -> Result<LossSpec> {
        Ok(match *self {
            TrainLoss::Clique { beta: None } => LossSpec::Clique(CliqueLossParams::for_graph(graph)),
            TrainLoss::Clique { beta: Some(b) } => LossSpec::Clique(CliqueLossParams::with_beta(graph, b)?),
            TrainLoss::Cut => LossSpec::Cut(random_interval(graph, seed, hops, rng)?),
        })
    }
}

/// Volume of the nodes within `hops` hops of `seed`.
pub fn ball_volume(graph: &Graph, seed: usize, hops: usize) -> f64 {
    graph
        .hop_distances(seed)
        .iter()
        .zip(graph.degrees())
        .filter(|(h, _)| matches!(h, Some(x) if *x <= hops))
        .map(|(_, d)| d)
        .sum()
}

/// A `(1 +- 1/4) c` interval with `c` uniform between twice the seed degree
/// and the volume of the `hops`-ball around the seed.
pub fn random_interval<R: Rng + ?Sized>(graph: &Graph, seed: usize, hops: usize, rng: &mut R) -> Result<VolumeConstraint> {
    let n = graph.node_count();
    if seed >= n {
        return Err(Error::NodeOutOfRange { index: seed, n });
    }
    let ball = ball_volume(graph, seed, hops);
    if ball <= 0.0 {
        return Err(Error::EmptyOrZeroVolume);
    }
    let lo = (2.0 * graph.degree(seed)).min(ball);
    let center = if ball > lo { rng.gen_range(lo..=ball) } else { ball };
    VolumeConstraint::new(0.75 * center, 1.25 * center)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub layers: usize,
    pub hidden: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 8,
            layers: 3,
            hidden: 16,
            adam: AdamConfig::mpnn(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation loss seen (training loss when
    /// there is no validation split).
    pub params: MpnnParams,
    /// Parameters after the final update, for resuming.
    pub last: MpnnParams,
    pub optimizer: OptimState,
    pub epoch_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub best_epoch: Option<usize>,
}

/// Starting point for training: fresh weights or a resumed checkpoint.
#[derive(Debug, Clone)]
pub enum TrainStart {
    Fresh,
    Resume { params: MpnnParams, optimizer: OptimState },
}

fn example_rng(seed: u64, epoch: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index);
    rng
}

/// Loss and gradient for one graph with a random seed node.
fn example(
    graph: &Graph,
    params: &MpnnParams,
    loss: &TrainLoss,
    rng: &mut ChaCha8Rng,
    with_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyOrZeroVolume);
    }
    let seed = rng.gen_range(0..n);
    let spec = loss.resolve(graph, seed, params.layers, rng)?;
    let cache = forward_cached(graph, params, seed)?;
    let (_, report) = spec.evaluate(graph, &cache.p)?;
    let grad = if with_grad {
        Some(mpnn_backward(graph, params, &cache, &report.gradient)?)
    } else {
        None
    };
    Ok((report.value, grad))
}

fn validation_loss(val: &[Graph], params: &MpnnParams, loss: &TrainLoss, seed: u64) -> Result<f64> {
    let losses = map_indices(val.len(), |k| {
        let mut rng = example_rng(seed, u64::MAX, k as u64);
        example(&val[k], params, loss, &mut rng, false).map(|(l, _)| l)
    });
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / val.len() as f64)
}

/// Mini-batch Adam over a training corpus.
///
/// Every epoch draws a fresh seed node per graph. Per-example randomness is
/// derived from `(config.seed, epoch, graph index)`, so results do not depend
/// on how the batch is scheduled across threads.
pub fn train_mpnn(train: &[Graph], val: &[Graph], loss: &TrainLoss, config: &TrainConfig, start: TrainStart) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let (mut params, mut optimizer) = match start {
        TrainStart::Fresh => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let p = MpnnParams::init(config.layers, config.hidden, &mut rng);
            let st = OptimState::new(p.data.len(), config.adam);
            (p, st)
        }
        TrainStart::Resume { params, optimizer } => {
            if optimizer.len() != params.data.len() {
                return Err(Error::Dimension("optimizer state does not match parameters".into()));
            }
            (params, optimizer)
        }
    };
    let first_epoch = optimizer.step;
    let mut best = params.clone();
    let mut best_score = f64::INFINITY;
    let mut best_epoch = None;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut val_losses = Vec::new();

    for e in 0..config.epochs {
        let epoch = first_epoch + e as u64;
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut example_rng(config.seed, epoch, u64::MAX));
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results = map_indices(batch.len(), |b| {
                let k = batch[b];
                let mut rng = example_rng(config.seed, epoch, k as u64);
                example(&train[k], &params, loss, &mut rng, true)
            });
            let mut grad = vec![0.0; params.data.len()];
            for r in results {
                let (l, g) = r?;
                total += l;
                for (acc, x) in grad.iter_mut().zip(g.unwrap_or_default()) {
                    *acc += x;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            optimizer.update(&mut params.data, &grad);
            if params.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence {
                    step: optimizer.step as usize,
                    detail: "non-finite network parameter after update".into(),
                });
            }
        }
        let mean = total / train.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence {
                step: optimizer.step as usize,
                detail: format!("epoch {e} mean loss {mean}"),
            });
        }
        epoch_losses.push(mean);
        let score = if val.is_empty() {
            mean
        } else {
            let v = validation_loss(val, &params, loss, config.seed)?;
            val_losses.push(v);
            v
        };
        if score < best_score {
            best_score = score;
            best = params.clone();
            best_epoch = Some(e);
        }
    }

    Ok(TrainOutcome {
        params: best,
        last: params,
        optimizer,
        epoch_losses,
        val_losses,
        best_epoch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointFormat {
    #[default]
    Json,
    Binary,
}

impl CheckpointFormat {
    /// `.bin` selects the binary layout, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => CheckpointFormat::Binary,
            _ => CheckpointFormat::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub layers: usize,
    pub hidden: usize,
    pub loss: TrainLoss,
    pub config: TrainConfig,
    pub params: MpnnParams,
    pub last: MpnnParams,
    pub optimizer: OptimState,
    pub epoch_losses: Vec<f64>,
}

impl Checkpoint {
    pub fn new(loss: TrainLoss, config: TrainConfig, outcome: &TrainOutcome) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            layers: outcome.params.layers,
            hidden: outcome.params.hidden,
            loss,
            config,
            params: outcome.params.clone(),
            last: outcome.last.clone(),
            optimizer: outcome.optimizer.clone(),
            epoch_losses: outcome.epoch_losses.clone(),
        }
    }

    pub fn resume(&self) -> TrainStart {
        TrainStart::Resume {
            params: self.last.clone(),
            optimizer: self.optimizer.clone(),
        }
    }

    pub fn to_bytes(&self, format: CheckpointFormat) -> Result<Vec<u8>> {
        match format {
            CheckpointFormat::Json => Ok(serde_json::to_vec_pretty(self)?),
            CheckpointFormat::Binary => {
                // JSON header without the large arrays, then raw little-endian f64 blocks.
                let mut header = self.clone();
                let arrays = [
                    std::mem::take(&mut header.params.data),
                    std::mem::take(&mut header.last.data),
                    std::mem::take(&mut header.optimizer.m),
                    std::mem::take(&mut header.optimizer.v),
                ];
                let head = serde_json::to_vec(&header)?;
                let mut out = Vec::new();
                out.extend_from_slice(MAGIC);
                out.extend_from_slice(&self.version.to_le_bytes());
                out.extend_from_slice(&(head.len() as u64).to_le_bytes());
                out.extend_from_slice(&head);
                for a in &arrays {
                    out.extend_from_slice(&(a.len() as u64).to_le_bytes());
                    for x in a {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let ck: Checkpoint = if bytes.starts_with(MAGIC) {
            let mut cur = Cursor { bytes, at: 4 };
            let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
            if version != CHECKPOINT_VERSION {
                return Err(Error::invalid(format!("unsupported checkpoint version {version}")));
            }
            let head_len = cur.u64()? as usize;
            let mut ck: Checkpoint = serde_json::from_slice(cur.take(head_len)?)?;
            ck.params.data = cur.f64s()?;
            ck.last.data = cur.f64s()?;
            ck.optimizer.m = cur.f64s()?;
            ck.optimizer.v = cur.f64s()?;
            if cur.at != bytes.len() {
                return Err(Error::invalid("trailing bytes in checkpoint"));
            }
            ck
        } else {
            serde_json::from_slice(bytes)?
        };
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!("unsupported checkpoint version {}", ck.version)));
        }
        let expected = MpnnParams::parameter_count(ck.layers, ck.hidden);
        if ck.params.data.len() != expected || ck.last.data.len() != expected || ck.optimizer.len() != expected {
            return Err(Error::Dimension("checkpoint arrays do not match its layer count and width".into()));
        }
        Ok(ck)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::invalid("truncated checkpoint"))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let len = self.u64()? as usize;
        let raw = self.take(len.checked_mul(8).ok_or_else(|| Error::invalid("truncated checkpoint"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint, format: CheckpointFormat) -> Result<()> {
    fs::write(path, checkpoint.to_bytes(format)?)?;
    Ok(())
}

/// Reads either format; the binary layout is recognized by its magic bytes.
pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn tiny() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 2,
            layers: 2,
            hidden: 4,
            adam: AdamConfig::with_lr(0.01),
            seed: 11,
        }
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let cfg = TrainConfig { epochs: 0, ..tiny() };
        let out = train_mpnn(&[petersen()], &[], &TrainLoss::Clique { beta: None }, &cfg, TrainStart::Fresh).unwrap();
        let init = MpnnParams::init(cfg.layers, cfg.hidden, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
        assert_eq!(out.params, init);
        assert!(out.epoch_losses.is_empty());
    }

    #[test]
    fn empty_training_split_is_an_error() {
        assert!(train_mpnn(&[], &[], &TrainLoss::Cut, &tiny(), TrainStart::Fresh).is_err());
    }

    #[test]
    fn training_is_reproducible_and_finite() {
        let corpus = vec![petersen(), complete(5), triangle()];
        let a = train_mpnn(&corpus, &[complete(4)], &TrainLoss::Cut, &tiny(), TrainStart::Fresh).unwrap();
        let b = train_mpnn(&corpus, &[complete(4)], &TrainLoss::Cut, &tiny(), TrainStart::Fresh).unwrap();
        assert_eq!(a, b);
        assert!(a.epoch_losses.iter().chain(&a.val_losses).all(|l| l.is_finite()));
        assert_eq!(a.optimizer.step, 6);
    }

    #[test]
    fn resume_continues_step_count() {
        let corpus = vec![petersen(), complete(5)];
        let loss = TrainLoss::Clique { beta: Some(3.0) };
        let first = train_mpnn(&corpus, &[], &loss, &tiny(), TrainStart::Fresh).unwrap();
        let ck = Checkpoint::new(loss, tiny(), &first);
        let second = train_mpnn(&corpus, &[], &loss, &tiny(), ck.resume()).unwrap();
        assert_eq!(second.optimizer.step, 2 * first.optimizer.step);
    }

    #[test]
    fn checkpoint_round_trips_in_both_formats() {
        let corpus = vec![petersen()];
        let loss = TrainLoss::Clique { beta: None };
        let out = train_mpnn(&corpus, &[], &loss, &tiny(), TrainStart::Fresh).unwrap();
        let ck = Checkpoint::new(loss, tiny(), &out);
        for fmt in [CheckpointFormat::Json, CheckpointFormat::Binary] {
            let bytes = ck.to_bytes(fmt).unwrap();
            assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
        }
        let mut bin = ck.to_bytes(CheckpointFormat::Binary).unwrap();
        bin.truncate(bin.len() - 3);
        assert!(Checkpoint::from_bytes(&bin).is_err());
    }

    #[test]
    fn random_interval_lies_in_receptive_field() {
        let g = petersen();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let vc = random_interval(&g, 0, 1, &mut rng).unwrap();
            assert!(vc.target() >= 6.0 - 1e-12 && vc.target() <= 12.0 + 1e-12);
            assert!((vc.v_h / vc.v_l - 5.0 / 3.0).abs() < 1e-12);
        }
    }
}
