mod common;

use mvfusion::diffcore::Tensor2;
use mvfusion::eval::{ari, classification_report, clustering_acc, hungarian, kmeans, nmi, pca_2d};
use proptest::prelude::*;
use rand::Rng;

fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..k, n)
}

#[test]
fn hungarian_acc_matches_brute_force() {
    let mut rng = common::rng(11);
    for trial in 0..1000 {
        let k = 1 + trial % 7;
        let n = rng.random_range(1..40);
        let pred = common::random_labels(&mut rng, n, k);
        let truth = common::random_labels(&mut rng, n, k);
        let got = clustering_acc(&pred, &truth).unwrap();
        let want = common::brute_force_acc(&pred, &truth, k);
        assert!((got - want).abs() < 1e-12, "trial {trial}: {got} vs {want}");
    }
}

#[test]
fn hungarian_cost_matches_brute_force_on_real_matrices() {
    let mut rng = common::rng(12);
    for k in 1..=6 {
        for _ in 0..30 {
            let m = Tensor2::from_fn(k, k, |_, _| rng.random_range(-5.0..5.0));
            let a = hungarian(&m).unwrap();
            let mut seen = vec![false; k];
            a.cols.iter().for_each(|&c| seen[c] = true);
            assert!(seen.iter().all(|&s| s));
            let mut best = f64::INFINITY;
            let mut perm: Vec<usize> = (0..k).collect();
            permute_all(&mut perm, 0, &mut |p| best = best.min((0..k).map(|r| m.get(r, p[r])).sum()));
            assert!((a.cost - best).abs() < 1e-9);
        }
    }
}

fn permute_all(p: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == p.len() {
        f(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute_all(p, i + 1, f);
        p.swap(i, j);
    }
}

#[test]
fn four_sample_hand_values() {
    let (pred, truth) = ([0, 0, 1, 2], [1, 1, 2, 2]);
    assert_eq!(clustering_acc(&pred, &truth).unwrap(), 0.75);
    // H(pred) = 1.5 ln 2, H(true) = ln 2, I = ln 2.
    assert!((nmi(&pred, &truth).unwrap() - 0.8).abs() < 1e-12);
    // index 1, expected 1·2/6, max 1.5.
    assert!((ari(&pred, &truth).unwrap() - 4.0 / 7.0).abs() < 1e-12);

    let (pred, truth) = ([0, 1, 0, 1], [0, 0, 1, 1]);
    assert_eq!(clustering_acc(&pred, &truth).unwrap(), 0.5);
    assert!(nmi(&pred, &truth).unwrap().abs() < 1e-12);
    assert!((ari(&pred, &truth).unwrap() + 0.5).abs() < 1e-12);
}

#[test]
fn random_labelings_have_ari_near_zero() {
    let mut rng = common::rng(13);
    let mut total = 0.0;
    for _ in 0..200 {
        let a = common::random_labels(&mut rng, 500, 4);
        let b = common::random_labels(&mut rng, 500, 4);
        total += ari(&a, &b).unwrap();
    }
    assert!((total / 200.0).abs() < 0.005);
}

#[test]
fn kmeans_finds_the_exhaustive_optimum() {
    let mut rng = common::rng(14);
    for _ in 0..10 {
        let pts: Vec<[f64; 2]> = (0..12)
            .map(|i| {
                let off = if i < 6 { -2.0 } else { 2.0 };
                [off + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            })
            .collect();
        let z = Tensor2::from_rows(&pts).unwrap();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << 12) - 1 {
            let mut cost = 0.0;
            for side in [0, 1] {
                let members: Vec<_> = (0..12).filter(|i| (mask >> i & 1) == side).collect();
                let m = members.len() as f64;
                let c: Vec<f64> = (0..2).map(|d| members.iter().map(|&i| pts[i][d]).sum::<f64>() / m).collect();
                cost += members.iter().map(|&i| (0..2).map(|d| (pts[i][d] - c[d]).powi(2)).sum::<f64>()).sum::<f64>();
            }
            best = best.min(cost);
        }
        let km = kmeans(&z, 2, 0, 10).unwrap();
        assert!((km.inertia - best).abs() < 1e-9, "{} vs {best}", km.inertia);
    }
}

#[test]
fn kmeans_is_deterministic_per_seed() {
    let mut rng = common::rng(15);
    let z = common::normal(&mut rng, 60, 3);
    assert_eq!(kmeans(&z, 4, 7, 5).unwrap(), kmeans(&z, 4, 7, 5).unwrap());
}

#[test]
fn pca_reconstructs_a_planted_plane() {
    let mut rng = common::rng(16);
    let dim = 16;
    // Two orthonormal directions from Gram-Schmidt on random vectors.
    let mut u = common::normal(&mut rng, 1, dim).row(0).to_vec();
    let mut v = common::normal(&mut rng, 1, dim).row(0).to_vec();
    let norm = |x: &Vec<f64>| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nu = norm(&u);
    u.iter_mut().for_each(|a| *a /= nu);
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(&u).for_each(|(b, a)| *b -= dot * a);
    let nv = norm(&v);
    v.iter_mut().for_each(|a| *a /= nv);

    let coords: Vec<(f64, f64)> = (0..50).map(|_| (rng.random_range(-5.0..5.0), rng.random_range(-1.0..1.0))).collect();
    let z = Tensor2::from_fn(50, dim, |r, c| 3.0 + coords[r].0 * u[c] + coords[r].1 * v[c]);
    let p = pca_2d(&z).unwrap();
    for i in 0..50 {
        for j in 0..i {
            let dz: f64 = (0..dim).map(|c| (z.get(i, c) - z.get(j, c)).powi(2)).sum::<f64>().sqrt();
            let dp: f64 = (0..2).map(|c| (p.get(i, c) - p.get(j, c)).powi(2)).sum::<f64>().sqrt();
            assert!((dz - dp).abs() < 1e-6, "{dz} vs {dp}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn acc_ignores_cluster_ids(pred in labels(30, 5), truth in labels(30, 5), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let renamed: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        prop_assert_eq!(clustering_acc(&pred, &truth).unwrap(), clustering_acc(&renamed, &truth).unwrap());
        prop_assert!((nmi(&pred, &truth).unwrap() - nmi(&renamed, &truth).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&pred, &truth).unwrap() - ari(&renamed, &truth).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn nmi_and_ari_are_symmetric(a in labels(25, 4), b in labels(25, 4)) {
        prop_assert!((nmi(&a, &b).unwrap() - nmi(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&a, &b).unwrap() - ari(&b, &a).unwrap()).abs() < 1e-12);
        let n = nmi(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&n));
    }

    #[test]
    fn perfect_agreement_scores_one(a in labels(20, 4)) {
        prop_assert_eq!(clustering_acc(&a, &a).unwrap(), 1.0);
        prop_assert!((nmi(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((ari(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification_scores_are_bounded(pred in labels(20, 3), truth in labels(20, 3)) {
        let r = classification_report(&pred, &truth).unwrap();
        for v in [r.acc, r.precision, r.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
