//! Straight-line reference implementations used as test oracles.
#![allow(dead_code)]

use mvfusion::diffcore::Tensor2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor2 {
    Tensor2::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn as_rows(t: &Tensor2) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

/// Pearson-style correlation between column `i` of `a` and column `j` of `b`.
pub fn correlation_entry(a: &[Vec<f64>], b: &[Vec<f64>], i: usize, j: usize, center: bool) -> f64 {
    let n = a.len();
    let mut ma = 0.0;
    let mut mb = 0.0;
    if center {
        for r in 0..n {
            ma += a[r][i];
            mb += b[r][j];
        }
        ma /= n as f64;
        mb /= n as f64;
    }
    let mut num = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for r in 0..n {
        let x = a[r][i] - ma;
        let y = b[r][j] - mb;
        num += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    num / (na.sqrt() * nb.sqrt())
}

pub fn correlation(a: &Tensor2, b: &Tensor2, center: bool) -> Vec<Vec<f64>> {
    let (ra, rb) = (as_rows(a), as_rows(b));
    (0..a.cols())
        .map(|i| (0..b.cols()).map(|j| correlation_entry(&ra, &rb, i, j, center)).collect())
        .collect()
}

pub fn redundancy_term(c: &[Vec<f64>], lambda_ins: f64) -> f64 {
    let mut loss = 0.0;
    for i in 0..c.len() {
        for j in 0..c.len() {
            if i == j {
                loss += (1.0 - c[i][j]).powi(2);
            } else {
                loss += lambda_ins * c[i][j].powi(2);
            }
        }
    }
    loss
}

/// Sum of the redundancy term over `(z, h_v)` pairs, plus `(h_u, h_v)` when
/// symmetric.
pub fn instance_loss(z: &Tensor2, hs: &[Tensor2], lambda_ins: f64, asymmetric: bool, center: bool) -> f64 {
    let mut loss = 0.0;
    for h in hs {
        loss += redundancy_term(&correlation(z, h, center), lambda_ins);
    }
    if !asymmetric {
        for u in 0..hs.len() {
            for v in u + 1..hs.len() {
                loss += redundancy_term(&correlation(&hs[u], &hs[v], center), lambda_ins);
            }
        }
    }
    loss
}

/// Plain Sinkhorn on `exp(sᵀ/ε)` with row then column scaling. Returns the
/// `k × b` plan.
pub fn sinkhorn(scores: &Tensor2, eps: f64, iters: usize) -> Vec<Vec<f64>> {
    let (b, k) = scores.shape();
    let mut t = vec![vec![0.0; b]; k];
    for p in 0..k {
        for n in 0..b {
            t[p][n] = (scores.get(n, p) / eps).exp();
        }
    }
    for _ in 0..iters {
        for row in t.iter_mut() {
            let s: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v = *v / s / k as f64;
            }
        }
        for n in 0..b {
            let s: f64 = (0..k).map(|p| t[p][n]).sum();
            for row in t.iter_mut() {
                row[n] = row[n] / s / b as f64;
            }
        }
    }
    t
}

pub fn softmax_row(x: &[f64], tau: f64) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| ((v - m) / tau).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Swapped-prediction loss averaged over unordered pairs of score sets.
pub fn class_loss(sets: &[Tensor2], tau: f64, eps: f64, iters: usize) -> f64 {
    let b = sets[0].rows();
    let k = sets[0].cols();
    let plans: Vec<_> = sets.iter().map(|s| sinkhorn(s, eps, iters)).collect();
    let mut total = 0.0;
    let mut pairs = 0;
    for a in 0..sets.len() {
        for c in a + 1..sets.len() {
            let mut acc = 0.0;
            for n in 0..b {
                let pa = softmax_row(sets[a].row(n), tau);
                let pc = softmax_row(sets[c].row(n), tau);
                for p in 0..k {
                    let qa = b as f64 * plans[a][p][n];
                    let qc = b as f64 * plans[c][p][n];
                    acc += qa * pc[p].ln() + qc * pa[p].ln();
                }
            }
            total += -acc / (2.0 * b as f64);
            pairs += 1;
        }
    }
    total / pairs as f64
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best accuracy over every relabelling of predicted ids in `0..k`.
pub fn brute_force_acc(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    permutations(k)
        .iter()
        .map(|perm| pred.iter().zip(truth).filter(|(&p, &t)| perm[p] == t).count())
        .max()
        .unwrap() as f64
        / pred.len() as f64
}

/// Adam on a single scalar parameter.
pub fn adam_scalar(theta: f64, grads: &[f64], lr: f64) -> Vec<f64> {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let (mut m, mut v, mut x) = (0.0, 0.0, theta);
    let mut path = Vec::new();
    for (t, g) in grads.iter().enumerate() {
        let t = (t + 1) as i32;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1.powi(t));
        let vh = v / (1.0 - b2.powi(t));
        x -= lr * mh / (vh.sqrt() + eps);
        path.push(x);
    }
    path
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Parameters from `init_params` with every bias redrawn from U(−0.5, 0.5),
/// plus standard normal view inputs with `rows` rows. Random biases keep
/// ReLU units away from the exact kinks a zero bias puts on dead rows.
pub fn generic_point(
    arch: &mvfusion::model::ArchConfig,
    seed: u64,
    rows: usize,
) -> (mvfusion::diffcore::ParamSet, mvfusion::diffcore::ParamSet) {
    let mut params = mvfusion::model::init_params(arch, seed).unwrap().params().clone();
    let mut rng = rng(seed + 100);
    for (name, t) in params.iter_mut() {
        if name.ends_with(".b") {
            t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
    let mut inputs = mvfusion::diffcore::ParamSet::new();
    for (v, &d) in arch.view_dims.iter().enumerate() {
        inputs.insert(mvfusion::model::view_input(v), normal(&mut rng, rows, d));
    }
    (params, inputs)
}
