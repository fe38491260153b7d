use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffcore::Tensor2;
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_ITERS: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centroids: Tensor2,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus(z: &Tensor2, k: usize, rng: &mut ChaCha8Rng) -> Tensor2 {
    let n = z.rows();
    let mut centroids = Tensor2::zeros(k, z.cols());
    centroids.row_mut(0).copy_from_slice(z.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(z.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(z.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn assign(z: &Tensor2, centroids: &Tensor2, labels: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let (best, d) = (0..centroids.rows())
            .map(|c| (c, sq_dist(z.row(i), centroids.row(c))))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if *label != best {
            *label = best;
            changed = true;
        }
        inertia += d;
    }
    (changed, inertia)
}

fn lloyd(z: &Tensor2, k: usize, seed: u64) -> KMeans {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus(z, k, &mut rng);
    let mut labels = vec![usize::MAX; z.rows()];
    let mut inertia = assign(z, &centroids, &mut labels).1;
    for _ in 0..MAX_ITERS {
        let mut sums = Tensor2::zeros(k, z.cols());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, x) in sums.row_mut(l).iter_mut().zip(z.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = (0..z.rows())
                    .map(|i| (i, sq_dist(z.row(i), centroids.row(labels[i]))))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                    .0;
                centroids.row_mut(c).copy_from_slice(z.row(far));
            } else {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        let (changed, new_inertia) = assign(z, &centroids, &mut labels);
        inertia = new_inertia;
        if !changed {
            break;
        }
    }
    KMeans { labels, centroids, inertia }
}

/// Lloyd's algorithm with k-means++ seeding; keeps the restart with the
/// lowest inertia. Restart `r` is seeded from `(seed, r)`.
pub fn kmeans(z: &Tensor2, k: usize, seed: u64, restarts: usize) -> Result<KMeans> {
    kmeans_with(z, k, seed, restarts, Execution::default())
}

pub fn kmeans_with(z: &Tensor2, k: usize, seed: u64, restarts: usize, exec: Execution) -> Result<KMeans> {
    if k == 0 || restarts == 0 {
        return Err(Error::Contract("k-means needs k ≥ 1 and at least one restart".into()));
    }
    if z.rows() < k {
        return Err(Error::Contract(format!("k-means needs n ≥ k, got n={} k={k}", z.rows())));
    }
    if !z.is_finite() {
        return Err(Error::Contract("k-means input must be finite".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..restarts).map(|_| master.random()).collect();
    let runs = exec.map(seeds, |s| lloyd(z, k, s));
    Ok(runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("restarts ≥ 1"))
}
