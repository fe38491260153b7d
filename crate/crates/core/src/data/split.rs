use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MultiViewDataset;
use crate::error::{Error, Result};

/// Train/validation/test proportions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    fn ratios(&self) -> Result<[f64; 3]> {
        let r = [self.train, self.val, self.test];
        if r.iter().any(|&x| !(x > 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split ratios must be positive and sum to 1, got {r:?}"
            )));
        }
        Ok(r)
    }
}

#[derive(Clone, Debug)]
pub struct Split {
    pub train: MultiViewDataset,
    pub val: MultiViewDataset,
    pub test: MultiViewDataset,
    /// Source row indices of train, val and test.
    pub indices: [Vec<usize>; 3],
}

/// Largest-remainder allocation of `n` items over `ratios`.
fn allocate(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        *s = e.floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    // Stable sort: ties go to the earlier part.
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).expect("finite")
    });
    let mut left = n - sizes.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Partitions `ds`, stratified by label when labels exist.
pub fn split(ds: &MultiViewDataset, spec: &SplitSpec) -> Result<Split> {
    let ratios = spec.ratios()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 3] = Default::default();

    let groups: Vec<Vec<usize>> = match (ds.labels(), ds.classes()) {
        (Some(labels), Some(classes)) => {
            let mut g = vec![Vec::new(); classes];
            for (i, &l) in labels.iter().enumerate() {
                g[l].push(i);
            }
            g.retain(|members| !members.is_empty());
            if let Some(small) = g.iter().find(|m| m.len() < 3) {
                return Err(Error::Stratification(format!(
                    "class of sample {} has {} members, fewer than the 3 parts",
                    small[0],
                    small.len()
                )));
            }
            g
        }
        _ => vec![(0..ds.len()).collect()],
    };
    let stratified = ds.labels().is_some();

    for mut members in groups {
        members.shuffle(&mut rng);
        let mut sizes = allocate(members.len(), &ratios);
        if stratified {
            // Every part gets at least one member of each class.
            for p in 0..3 {
                if sizes[p] == 0 {
                    let donor = (0..3).max_by_key(|&q| sizes[q]).expect("three parts");
                    sizes[donor] -= 1;
                    sizes[p] += 1;
                }
            }
        }
        let mut start = 0;
        for (part, size) in parts.iter_mut().zip(sizes) {
            part.extend_from_slice(&members[start..start + size]);
            start += size;
        }
    }
    for part in &mut parts {
        part.sort_unstable();
    }

    Ok(Split {
        train: ds.subset(&parts[0], format!("{}-train", ds.name())),
        val: ds.subset(&parts[1], format!("{}-val", ds.name())),
        test: ds.subset(&parts[2], format!("{}-test", ds.name())),
        indices: parts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Tensor2;

    fn dataset(n: usize, labels: Option<Vec<usize>>, classes: Option<usize>) -> MultiViewDataset {
        let a = Tensor2::from_fn(n, 2, |r, _| r as f64);
        let b = Tensor2::from_fn(n, 1, |r, _| -(r as f64));
        MultiViewDataset::new("d", vec!["a".into(), "b".into()], vec![a, b], labels, classes).unwrap()
    }

    #[test]
    fn sizes_8_1_1() {
        let s = split(&dataset(100, None, None), &SplitSpec::default()).unwrap();
        assert_eq!([s.train.len(), s.val.len(), s.test.len()], [80, 10, 10]);
    }

    #[test]
    fn parts_partition_the_index_set() {
        let s = split(&dataset(57, None, None), &SplitSpec { seed: 3, ..Default::default() }).unwrap();
        let mut all: Vec<usize> = s.indices.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..57).collect::<Vec<_>>());
    }

    #[test]
    fn stratified_parts_are_balanced() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let s = split(&dataset(100, Some(labels), Some(2)), &SplitSpec::default()).unwrap();
        for (part, expect) in [(&s.train, 40), (&s.val, 5), (&s.test, 5)] {
            // independent tally
            let ones = part.labels().unwrap().iter().filter(|&&l| l == 1).count();
            let zeros = part.labels().unwrap().iter().filter(|&&l| l == 0).count();
            assert_eq!((zeros, ones), (expect, expect));
        }
    }

    #[test]
    fn views_stay_aligned() {
        let s = split(&dataset(40, None, None), &SplitSpec::default()).unwrap();
        for part in [&s.train, &s.val, &s.test] {
            for r in 0..part.len() {
                assert_eq!(part.views()[0].get(r, 0), -part.views()[1].get(r, 0));
            }
        }
    }

    #[test]
    fn tiny_class_cannot_be_stratified() {
        let labels = vec![0, 0, 0, 0, 1, 1];
        let err = split(&dataset(6, Some(labels), Some(2)), &SplitSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Stratification(_)));
    }

    #[test]
    fn bad_ratios_are_rejected() {
        let spec = SplitSpec { train: 0.5, val: 0.5, test: 0.5, seed: 0 };
        assert!(matches!(split(&dataset(10, None, None), &spec), Err(Error::Config(_))));
    }
}
