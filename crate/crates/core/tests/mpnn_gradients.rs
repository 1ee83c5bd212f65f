use probmethod::datasets::gen_gnp;
use probmethod::distribution::{clique_loss, CliqueLossParams};
use probmethod::model::{forward_cached, mpnn_backward, mpnn_forward, MpnnParams};
use probmethod::Graph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth scalar of the output so the check covers every output coordinate.
fn probe(p: &[f64], c: &[f64]) -> f64 {
    p.iter().zip(c).map(|(a, b)| a * b + 0.5 * a * a).sum()
}

fn probe_grad(p: &[f64], c: &[f64]) -> Vec<f64> {
    p.iter().zip(c).map(|(a, b)| b + a).collect()
}

/// Relative error, treating differences below the finite-difference noise
/// floor (cancellation error of about 1e-16 * |f| / h) as exact.
fn rel_err(analytic: f64, fd: f64) -> f64 {
    let diff = (analytic - fd).abs();
    if diff <= 1e-8 {
        0.0
    } else {
        diff / analytic.abs().max(fd.abs())
    }
}

/// Relative error of the analytic gradient against central differences, or
/// `None` when a perturbation crosses a ReLU kink or changes the argmin/argmax.
fn check_point(g: &Graph, params: &MpnnParams, seed: usize, c: &[f64], h: f64) -> Option<f64> {
    let cache = forward_cached(g, params, seed).unwrap();
    let analytic = mpnn_backward(g, params, &cache, &probe_grad(&cache.p, c)).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..params.data.len() {
        let mut plus = params.clone();
        plus.data[k] += h;
        let mut minus = params.clone();
        minus.data[k] -= h;
        let fp = probe(&mpnn_forward(g, &plus, seed).unwrap(), c);
        let fm = probe(&mpnn_forward(g, &minus, seed).unwrap(), c);
        let f0 = probe(&cache.p, c);
        let fd = (fp - fm) / (2.0 * h);
        // a kink shows up as a one-sided slope mismatch
        let left = (f0 - fm) / h;
        let right = (fp - f0) / h;
        if (left - right).abs() > 1e-3 * (1.0 + left.abs().max(right.abs())) {
            return None;
        }
        worst = worst.max(rel_err(analytic[k], fd));
    }
    Some(worst)
}

#[test]
fn backward_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 12 && attempts < 200 {
        attempts += 1;
        let n = rng.gen_range(4..10);
        let g = gen_gnp(n, 0.5, &mut rng).unwrap();
        let layers = rng.gen_range(0..3);
        let params = MpnnParams::init(layers, 4, &mut rng);
        let seed = rng.gen_range(0..n);
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(err) = check_point(&g, &params, seed, &c, 1e-5) {
            assert!(err <= 1e-4, "relative error {err} (n={n}, layers={layers})");
            checked += 1;
        }
    }
    assert_eq!(checked, 12, "too many points landed on kinks");
}

#[test]
fn backward_through_clique_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = gen_gnp(8, 0.6, &mut rng).unwrap();
    let loss = CliqueLossParams::with_beta(&g, 2.0).unwrap();
    let mut done = 0;
    for _ in 0..50 {
        let params = MpnnParams::init(2, 5, &mut rng);
        let cache = forward_cached(&g, &params, 0).unwrap();
        let grad = mpnn_backward(&g, &params, &cache, &clique_loss(&g, &cache.p, &loss).gradient).unwrap();
        let h = 1e-5;
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for k in 0..params.data.len() {
            let mut a = params.clone();
            a.data[k] += h;
            let mut b = params.clone();
            b.data[k] -= h;
            let fa = clique_loss(&g, &mpnn_forward(&g, &a, 0).unwrap(), &loss).value;
            let fb = clique_loss(&g, &mpnn_forward(&g, &b, 0).unwrap(), &loss).value;
            let f0 = clique_loss(&g, &cache.p, &loss).value;
            let (l, r) = ((f0 - fb) / h, (fa - f0) / h);
            if (l - r).abs() > 1e-3 * (1.0 + l.abs().max(r.abs())) {
                ok = false;
                break;
            }
            let fd = (fa - fb) / (2.0 * h);
            worst = worst.max(rel_err(grad[k], fd));
        }
        if ok {
            assert!(worst <= 1e-4, "relative error {worst}");
            done += 1;
            if done == 3 {
                return;
            }
        }
    }
    panic!("no kink-free point found");
}

#[test]
fn forward_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let n = rng.gen_range(2..=30);
        let g = gen_gnp(n, 0.2, &mut rng).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let edges: Vec<(usize, usize, f64)> = g.edges().map(|(i, j, w)| (perm[i], perm[j], w)).collect();
        let h = Graph::from_edges(n, &edges).unwrap();
        let params = MpnnParams::init(3, 6, &mut rng);
        let seed = rng.gen_range(0..n);
        let p = mpnn_forward(&g, &params, seed).unwrap();
        let q = mpnn_forward(&h, &params, perm[seed]).unwrap();
        for v in 0..n {
            assert!((p[v] - q[perm[v]]).abs() < 1e-9, "node {v}: {} vs {}", p[v], q[perm[v]]);
        }
    }
}

#[test]
fn outputs_hit_both_ends() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let g = gen_gnp(15, 0.3, &mut rng).unwrap();
        let params = MpnnParams::init(2, 8, &mut rng);
        let p = mpnn_forward(&g, &params, 0).unwrap();
        assert!(p.iter().all(|q| (0.0..=1.0).contains(q)));
        let distinct = p.iter().any(|&q| q != p[0]);
        if distinct {
            assert!(p.contains(&0.0) && p.contains(&1.0));
        }
    }
}
