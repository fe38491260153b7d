use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::MultiViewDataset;
use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

/// Gaussian-blob multi-view generator parameters.
///
/// Class centers are the vertices of a regular simplex with unit edge
/// length, embedded in each view by an independent random orthonormal map,
/// so every pair of centers is exactly 1 apart in every view. With
/// `σ_v ≤ 0.25` centers are separated by at least `4σ_v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub view_dims: Vec<usize>,
    /// Per-view isotropic noise standard deviation.
    pub view_noise: Vec<f64>,
    /// Fraction of samples whose last view receives extra `3σ` noise.
    pub corruption: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.per_class == 0 {
            return fail("per-class count must be at least 1".into());
        }
        if self.view_dims.is_empty() {
            return fail("at least one view is required".into());
        }
        if let Some(&d) = self.view_dims.iter().find(|&&d| d < self.classes) {
            return fail(format!(
                "view dimension {d} cannot hold a {}-class simplex (need >= {})",
                self.classes, self.classes
            ));
        }
        if self.view_noise.len() != self.view_dims.len() {
            return fail(format!(
                "{} noise levels for {} views",
                self.view_noise.len(),
                self.view_dims.len()
            ));
        }
        if self.view_noise.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return fail("noise levels must be finite and >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.corruption) {
            return fail(format!("corruption must lie in [0, 1], got {}", self.corruption));
        }
        Ok(())
    }
}

/// `d × k` matrix with orthonormal columns (Gram–Schmidt on Gaussian draws).
fn orthonormal_columns(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Tensor2 {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for q in &cols {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            cols.push(v);
        }
    }
    Tensor2::from_fn(d, k, |r, c| cols[c][r])
}

/// Unit-edge simplex vertices in `R^k`: `(e_c − 1/k) / √2`.
fn simplex(k: usize) -> Tensor2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Tensor2::from_fn(k, k, |c, j| (if c == j { 1.0 } else { 0.0 } - 1.0 / k as f64) * s)
}

/// Generates a labelled dataset; sample `i` has label `i mod classes`.
pub fn synth_gaussian(spec: &SynthSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let k = spec.classes;
    let n = k * spec.per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let vertices = simplex(k);

    let mut views = Vec::with_capacity(spec.view_dims.len());
    for (&d, &sigma) in spec.view_dims.iter().zip(&spec.view_noise) {
        // k × d: row c is class c's center in this view.
        let centers = vertices.matmul_nt(&orthonormal_columns(d, k, &mut rng))?;
        let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
        let x = Tensor2::from_fn(n, d, |i, j| centers.get(labels[i], j) + noise.sample(&mut rng));
        views.push(x);
    }

    let corrupted = (spec.corruption * n as f64).round() as usize;
    if corrupted > 0 {
        let last = views.len() - 1;
        let extra = Normal::new(0.0, 3.0 * spec.view_noise[last]).map_err(|e| Error::Config(e.to_string()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let view = &mut views[last];
        for &i in &order[..corrupted] {
            for v in view.row_mut(i) {
                *v += extra.sample(&mut rng);
            }
        }
    }

    let names = (0..views.len()).map(|v| format!("view{v}")).collect();
    MultiViewDataset::new(format!("synth-k{k}-s{}", spec.seed), names, views, Some(labels), Some(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sigma: f64, rho: f64) -> SynthSpec {
        SynthSpec {
            classes: 3,
            per_class: 100,
            view_dims: vec![16, 24],
            view_noise: vec![sigma, sigma],
            corruption: rho,
            seed: 7,
        }
    }

    #[test]
    fn sizes_and_balanced_labels() {
        let ds = synth_gaussian(&spec(0.25, 0.2)).unwrap();
        assert_eq!(ds.len(), 300);
        assert_eq!(ds.num_views(), 2);
        let mut counts = [0; 3];
        ds.labels().unwrap().iter().for_each(|&l| counts[l] += 1);
        assert_eq!(counts, [100, 100, 100]);
    }

    #[test]
    fn noiseless_samples_sit_on_unit_simplex() {
        let ds = synth_gaussian(&spec(0.0, 0.0)).unwrap();
        let labels = ds.labels().unwrap();
        for x in ds.views() {
            for i in 0..ds.len() {
                // same class → identical row, different class → distance 1
                let j = (i + 3) % ds.len();
                assert_eq!(x.row(i), x.row(j));
                let other = (i + 1) % ds.len();
                assert_ne!(labels[i], labels[other]);
                let d: f64 = x.row(i).iter().zip(x.row(other)).map(|(a, b)| (a - b).powi(2)).sum();
                assert!((d.sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(synth_gaussian(&spec(0.3, 0.2)).unwrap(), synth_gaussian(&spec(0.3, 0.2)).unwrap());
        let mut other = spec(0.3, 0.2);
        other.seed = 8;
        assert_ne!(synth_gaussian(&spec(0.3, 0.2)).unwrap(), synth_gaussian(&other).unwrap());
    }

    #[test]
    fn invalid_specs_are_config_errors() {
        let mut s = spec(0.1, 0.0);
        s.view_dims = vec![0, 4];
        assert!(matches!(synth_gaussian(&s), Err(Error::Config(_))));
        let mut s = spec(0.1, 1.5);
        s.corruption = 1.5;
        assert!(matches!(synth_gaussian(&s), Err(Error::Config(_))));
        let mut s = spec(0.1, 0.0);
        s.classes = 1;
        assert!(matches!(synth_gaussian(&s), Err(Error::Config(_))));
    }
}
