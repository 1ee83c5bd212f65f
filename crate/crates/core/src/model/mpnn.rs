//! A GIN-style message-passing network with hand-written backpropagation.
//!
//! Input features per node are `[seed one-hot, degree / max degree]`.
//! Each round computes `h' = relu(W (h_i + sum_{j in N(i)} h_j) + b) + h_i`
//! and then zeroes every node farther than `k + 1` hops from the seed. A
//! two-layer perceptron maps each node to a scalar and a graph-wide min-max
//! normalization turns the scalars into probabilities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::NodeDistribution;
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const FEATURES: usize = 2;

/// All weights in one flat vector so a single optimizer state covers them.
///
/// Layout: input `W_in (H x 2)`, `b_in (H)`, then per round `W (H x H)`,
/// `b (H)`, then readout `R (H x H)`, `c (H)`, `r (H)`, `c0 (1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpnnParams {
    pub layers: usize,
    pub hidden: usize,
    pub data: Vec<f64>,
}

struct Layout {
    w_in: usize,
    b_in: usize,
    rounds: Vec<(usize, usize)>,
    r1: usize,
    c1: usize,
    r2: usize,
    c2: usize,
    len: usize,
}

impl Layout {
    fn new(layers: usize, h: usize) -> Self {
        let mut at = 0;
        let mut take = |k: usize| {
            let start = at;
            at += k;
            start
        };
        let w_in = take(h * FEATURES);
        let b_in = take(h);
        let rounds = (0..layers).map(|_| (take(h * h), take(h))).collect();
        let r1 = take(h * h);
        let c1 = take(h);
        let r2 = take(h);
        let c2 = take(1);
        Layout {
            w_in,
            b_in,
            rounds,
            r1,
            c1,
            r2,
            c2,
            len: at,
        }
    }
}

impl MpnnParams {
    pub fn parameter_count(layers: usize, hidden: usize) -> usize {
        Layout::new(layers, hidden).len
    }

    /// Uniform initialization in `[-1/sqrt(H), 1/sqrt(H)]`.
    pub fn init<R: Rng + ?Sized>(layers: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let len = Self::parameter_count(layers, hidden);
        MpnnParams {
            layers,
            hidden,
            data: (0..len).map(|_| rng.gen_range(-bound..=bound)).collect(),
        }
    }

    pub fn zeros(layers: usize, hidden: usize) -> Self {
        MpnnParams {
            layers,
            hidden,
            data: vec![0.0; Self::parameter_count(layers, hidden)],
        }
    }

    fn check(&self) -> Result<Layout> {
        let layout = Layout::new(self.layers, self.hidden);
        if layout.len != self.data.len() || self.hidden == 0 {
            return Err(Error::Dimension(format!(
                "{} parameters for {} rounds of width {} (expected {})",
                self.data.len(),
                self.layers,
                self.hidden,
                layout.len
            )));
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite network parameter"));
        }
        Ok(layout)
    }

    fn digest(&self) -> u64 {
        self.data.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, x| {
            (h ^ x.to_bits()).wrapping_mul(0x0100_0000_01b3)
        })
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct MpnnCache {
    digest: u64,
    n: usize,
    seed: usize,
    features: Vec<[f64; FEATURES]>,
    /// `h[k]` is the `n x H` state entering round `k`; `h[L]` feeds the readout.
    h: Vec<Vec<f64>>,
    agg: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    /// Per round, whether each node survived the hop mask.
    alive: Vec<Vec<bool>>,
    u: Vec<f64>,
    z: Vec<f64>,
    span: Option<(usize, usize)>,
    pub p: NodeDistribution,
}

/// `y = W x` for row-major `W` of shape `rows x cols`.
fn matvec(w: &[f64], x: &[f64], rows: usize, cols: usize, y: &mut [f64]) {
    for r in 0..rows {
        y[r] = w[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// `y += W^T x`.
fn matvec_t_add(w: &[f64], x: &[f64], rows: usize, cols: usize, y: &mut [f64]) {
    for r in 0..rows {
        let xr = x[r];
        if xr == 0.0 {
            continue;
        }
        for c in 0..cols {
            y[c] += w[r * cols + c] * xr;
        }
    }
}

/// `G += x y^T`.
fn outer_add(g: &mut [f64], x: &[f64], y: &[f64]) {
    let cols = y.len();
    for (r, &xr) in x.iter().enumerate() {
        if xr == 0.0 {
            continue;
        }
        for c in 0..cols {
            g[r * cols + c] += xr * y[c];
        }
    }
}

pub fn mpnn_forward(graph: &Graph, params: &MpnnParams, seed: usize) -> Result<NodeDistribution> {
    Ok(forward_cached(graph, params, seed)?.p)
}

pub fn forward_cached(graph: &Graph, params: &MpnnParams, seed: usize) -> Result<MpnnCache> {
    let layout = params.check()?;
    let n = graph.node_count();
    if seed >= n {
        return Err(Error::NodeOutOfRange { index: seed, n });
    }
    let h_dim = params.hidden;
    let d = &params.data;
    let max_deg = graph.max_degree();
    let features: Vec<[f64; FEATURES]> = (0..n)
        .map(|i| {
            let deg = if max_deg > 0.0 { graph.degree(i) / max_deg } else { 0.0 };
            [if i == seed { 1.0 } else { 0.0 }, deg]
        })
        .collect();
    let hops = graph.hop_distances(seed);

    let mut h0 = vec![0.0; n * h_dim];
    for i in 0..n {
        let row = &mut h0[i * h_dim..(i + 1) * h_dim];
        matvec(&d[layout.w_in..layout.w_in + h_dim * FEATURES], &features[i], h_dim, FEATURES, row);
        for (x, b) in row.iter_mut().zip(&d[layout.b_in..layout.b_in + h_dim]) {
            *x += b;
        }
    }
    let mut h = vec![h0];
    let mut agg = Vec::with_capacity(params.layers);
    let mut pre = Vec::with_capacity(params.layers);
    let mut alive = Vec::with_capacity(params.layers);
    for (k, &(w_at, b_at)) in layout.rounds.iter().enumerate() {
        let cur = &h[k];
        let mut a = cur.clone();
        for i in 0..n {
            for &j in graph.neighbors(i) {
                for c in 0..h_dim {
                    a[i * h_dim + c] += cur[j * h_dim + c];
                }
            }
        }
        let mut z = vec![0.0; n * h_dim];
        let mut next = vec![0.0; n * h_dim];
        let keep: Vec<bool> = hops.iter().map(|hop| matches!(hop, Some(x) if *x <= k + 1)).collect();
        for i in 0..n {
            let zi = &mut z[i * h_dim..(i + 1) * h_dim];
            matvec(&d[w_at..w_at + h_dim * h_dim], &a[i * h_dim..(i + 1) * h_dim], h_dim, h_dim, zi);
            for (x, b) in zi.iter_mut().zip(&d[b_at..b_at + h_dim]) {
                *x += b;
            }
            if keep[i] {
                for c in 0..h_dim {
                    next[i * h_dim + c] = zi[c].max(0.0) + cur[i * h_dim + c];
                }
            }
        }
        agg.push(a);
        pre.push(z);
        alive.push(keep);
        h.push(next);
    }

    let last = &h[params.layers];
    let mut u = vec![0.0; n * h_dim];
    let mut z = vec![0.0; n];
    for i in 0..n {
        let ui = &mut u[i * h_dim..(i + 1) * h_dim];
        matvec(&d[layout.r1..layout.r1 + h_dim * h_dim], &last[i * h_dim..(i + 1) * h_dim], h_dim, h_dim, ui);
        for (x, b) in ui.iter_mut().zip(&d[layout.c1..layout.c1 + h_dim]) {
            *x += b;
        }
        z[i] = ui
            .iter()
            .zip(&d[layout.r2..layout.r2 + h_dim])
            .map(|(x, r)| x.max(0.0) * r)
            .sum::<f64>()
            + d[layout.c2];
    }

    let (lo, hi) = extremes(&z);
    let span = (z[hi] > z[lo]).then_some((lo, hi));
    let p = match span {
        Some((lo, hi)) => {
            let range = z[hi] - z[lo];
            z.iter()
                .enumerate()
                .map(|(i, &x)| {
                    if i == lo {
                        0.0
                    } else if i == hi {
                        1.0
                    } else {
                        ((x - z[lo]) / range).clamp(0.0, 1.0)
                    }
                })
                .collect()
        }
        None => vec![0.5; n],
    };

    Ok(MpnnCache {
        digest: params.digest(),
        n,
        seed,
        features,
        h,
        agg,
        pre,
        alive,
        u,
        z,
        span,
        p: NodeDistribution::new(p)?,
    })
}

/// First index of the minimum and of the maximum.
fn extremes(z: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &x) in z.iter().enumerate() {
        if x < z[lo] {
            lo = i;
        }
        if x > z[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

/// Gradient of a loss with respect to every parameter, given the loss
/// gradient with respect to the produced probabilities.
pub fn mpnn_backward(
    graph: &Graph,
    params: &MpnnParams,
    cache: &MpnnCache,
    grad_p: &[f64],
) -> Result<Vec<f64>> {
    let layout = params.check()?;
    let n = graph.node_count();
    if cache.digest != params.digest() || cache.n != n {
        return Err(Error::invalid("forward cache is stale for these parameters or this graph"));
    }
    if grad_p.len() != n {
        return Err(Error::Dimension(format!("{} gradient entries for {n} nodes", grad_p.len())));
    }
    let h_dim = params.hidden;
    let d = &params.data;
    let mut g = vec![0.0; layout.len];

    // min-max normalization
    let mut gz = vec![0.0; n];
    if let Some((lo, hi)) = cache.span {
        let range = cache.z[hi] - cache.z[lo];
        let mut g_min = 0.0;
        let mut g_max = 0.0;
        for i in 0..n {
            let pi = cache.p[i];
            gz[i] += grad_p[i] / range;
            g_min += grad_p[i] * (pi - 1.0) / range;
            g_max -= grad_p[i] * pi / range;
        }
        gz[lo] += g_min;
        gz[hi] += g_max;
    }

    // readout
    let last = &cache.h[params.layers];
    let mut gh = vec![0.0; n * h_dim];
    g[layout.c2] = gz.iter().sum();
    for i in 0..n {
        if gz[i] == 0.0 {
            continue;
        }
        let ui = &cache.u[i * h_dim..(i + 1) * h_dim];
        let mut gu = vec![0.0; h_dim];
        for c in 0..h_dim {
            g[layout.r2 + c] += gz[i] * ui[c].max(0.0);
            if ui[c] > 0.0 {
                gu[c] = gz[i] * d[layout.r2 + c];
            }
        }
        let hi = &last[i * h_dim..(i + 1) * h_dim];
        outer_add(&mut g[layout.r1..layout.r1 + h_dim * h_dim], &gu, hi);
        for c in 0..h_dim {
            g[layout.c1 + c] += gu[c];
        }
        matvec_t_add(&d[layout.r1..layout.r1 + h_dim * h_dim], &gu, h_dim, h_dim, &mut gh[i * h_dim..(i + 1) * h_dim]);
    }

    // message-passing rounds, last to first
    for k in (0..params.layers).rev() {
        let (w_at, b_at) = layout.rounds[k];
        let mut g_prev = vec![0.0; n * h_dim];
        let mut g_agg = vec![0.0; n * h_dim];
        for i in 0..n {
            if !cache.alive[k][i] {
                continue;
            }
            let gi = &gh[i * h_dim..(i + 1) * h_dim];
            for c in 0..h_dim {
                g_prev[i * h_dim + c] += gi[c];
            }
            let zi = &cache.pre[k][i * h_dim..(i + 1) * h_dim];
            let ga: Vec<f64> = (0..h_dim).map(|c| if zi[c] > 0.0 { gi[c] } else { 0.0 }).collect();
            outer_add(&mut g[w_at..w_at + h_dim * h_dim], &ga, &cache.agg[k][i * h_dim..(i + 1) * h_dim]);
            for c in 0..h_dim {
                g[b_at + c] += ga[c];
            }
            matvec_t_add(&d[w_at..w_at + h_dim * h_dim], &ga, h_dim, h_dim, &mut g_agg[i * h_dim..(i + 1) * h_dim]);
        }
        for i in 0..n {
            for c in 0..h_dim {
                g_prev[i * h_dim + c] += g_agg[i * h_dim + c];
            }
            for &j in graph.neighbors(i) {
                for c in 0..h_dim {
                    g_prev[i * h_dim + c] += g_agg[j * h_dim + c];
                }
            }
        }
        gh = g_prev;
    }

    // input embedding
    for i in 0..n {
        let gi = &gh[i * h_dim..(i + 1) * h_dim];
        outer_add(&mut g[layout.w_in..layout.w_in + h_dim * FEATURES], gi, &cache.features[i]);
        for c in 0..h_dim {
            g[layout.b_in + c] += gi[c];
        }
    }
    Ok(g)
}

impl MpnnCache {
    pub fn seed(&self) -> usize {
        self.seed
    }
}
