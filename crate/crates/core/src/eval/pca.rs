use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

const MAX_ITERS: usize = 10_000;
const TOL: f64 = 1e-14;

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Leading eigenvector of a symmetric matrix by power iteration, with the
/// sign fixed so the largest-magnitude entry is positive.
fn power_iteration(cov: &Tensor2, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let d = cov.rows();
    let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERS {
        let mut next: Vec<f64> = (0..d).map(|r| cov.row(r).iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        lambda = normalize(&mut next);
        if lambda == 0.0 {
            break;
        }
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < TOL {
            break;
        }
    }
    let pivot = v.iter().copied().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (v, lambda)
}

/// Projects centred rows onto the top two principal directions of the
/// sample covariance. Columns are the first and second component scores.
pub fn pca_2d(z: &Tensor2) -> Result<Tensor2> {
    if z.rows() < 2 || z.cols() < 2 {
        return Err(Error::Contract(format!("pca needs at least 2 rows and 2 columns, got {:?}", z.shape())));
    }
    let means = z.col_means();
    let centred = Tensor2::from_fn(z.rows(), z.cols(), |r, c| z.get(r, c) - means[c]);
    let mut cov = centred.matmul_tn(&centred)?.scale(1.0 / (z.rows() - 1) as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut comps = Vec::with_capacity(2);
    for _ in 0..2 {
        let (v, lambda) = power_iteration(&cov, &mut rng);
        for r in 0..cov.rows() {
            for c in 0..cov.cols() {
                let x = cov.get(r, c) - lambda * v[r] * v[c];
                cov.set(r, c, x);
            }
        }
        comps.push(v);
    }
    Ok(Tensor2::from_fn(z.rows(), 2, |r, k| {
        centred.row(r).iter().zip(&comps[k]).map(|(a, b)| a * b).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_plane() {
        let z = Tensor2::from_fn(6, 3, |r, c| match c {
            0 => r as f64 * 2.0,
            1 => (r % 2) as f64,
            _ => 0.0,
        });
        let p = pca_2d(&z).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let dz: f64 = (0..3).map(|c| (z.get(i, c) - z.get(j, c)).powi(2)).sum();
                let dp: f64 = (0..2).map(|c| (p.get(i, c) - p.get(j, c)).powi(2)).sum();
                assert!((dz.sqrt() - dp.sqrt()).abs() < 1e-9);
            }
        }
    }
}
