use serde::{Deserialize, Serialize};

use crate::diffcore::{softmax_rows, Tensor2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { epochs: 200, lr: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassScore {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub acc: f64,
    /// Macro average over classes that occur in the truth or the predictions.
    pub precision: f64,
    pub f1: f64,
    pub per_class: Vec<ClassScore>,
    pub predicted: Vec<usize>,
}

/// Accuracy with macro precision and F1. A class that is never predicted
/// has precision 0.
pub fn classification_report(pred: &[usize], truth: &[usize]) -> Result<ClassificationReport> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Contract(format!(
            "need equal, non-empty label lists, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let k = pred.iter().chain(truth).max().map_or(0, |m| m + 1);
    let (mut tp, mut predicted, mut actual) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (&p, &t) in pred.iter().zip(truth) {
        predicted[p] += 1;
        actual[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let per_class: Vec<ClassScore> = (0..k)
        .filter(|&c| predicted[c] + actual[c] > 0)
        .map(|c| {
            let precision = ratio(tp[c], predicted[c]);
            let recall = ratio(tp[c], actual[c]);
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            ClassScore { class: c, precision, recall, f1, support: actual[c] }
        })
        .collect();
    let m = per_class.len() as f64;
    Ok(ClassificationReport {
        acc: ratio(tp.iter().sum(), pred.len()),
        precision: per_class.iter().map(|s| s.precision).sum::<f64>() / m,
        f1: per_class.iter().map(|s| s.f1).sum::<f64>() / m,
        per_class,
        predicted: pred.to_vec(),
    })
}

fn standardize(x: &Tensor2, means: &[f64], stds: &[f64]) -> Tensor2 {
    Tensor2::from_fn(x.rows(), x.cols(), |r, c| (x.get(r, c) - means[c]) / stds[c])
}

/// Softmax regression trained by full-batch gradient descent on `train`,
/// scored on `test`. Features are standardised with training statistics.
pub fn linear_probe(
    train: (&Tensor2, &[usize]),
    test: (&Tensor2, &[usize]),
    cfg: &ProbeConfig,
) -> Result<ClassificationReport> {
    let (xtr, ytr) = train;
    let (xte, yte) = test;
    if xtr.rows() != ytr.len() || xte.rows() != yte.len() {
        return Err(Error::Contract("probe features and labels differ in length".into()));
    }
    if xtr.rows() == 0 || xte.rows() == 0 {
        return Err(Error::Contract("probe needs non-empty train and test sets".into()));
    }
    if xtr.cols() != xte.cols() {
        return Err(Error::dim("probe", format!("train width {} vs test width {}", xtr.cols(), xte.cols())));
    }
    let k = ytr.iter().chain(yte).max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    ytr.iter().for_each(|&y| seen[y] = true);
    if let Some(&missing) = yte.iter().find(|&&y| !seen[y]) {
        return Err(Error::Stratification(format!("class {missing} is in the test set but not in training")));
    }

    let means = xtr.col_means();
    let n = xtr.rows() as f64;
    let stds: Vec<f64> = (0..xtr.cols())
        .map(|c| {
            let var = (0..xtr.rows()).map(|r| (xtr.get(r, c) - means[c]).powi(2)).sum::<f64>() / n;
            if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 }
        })
        .collect();
    let xs = standardize(xtr, &means, &stds);
    let mut w = Tensor2::zeros(xs.cols(), k);
    let mut b = vec![0.0; k];
    for _ in 0..cfg.epochs {
        let mut logits = xs.matmul(&w)?;
        for r in 0..logits.rows() {
            logits.row_mut(r).iter_mut().zip(&b).for_each(|(v, bb)| *v += bb);
        }
        let mut d = softmax_rows(&logits);
        for (r, &y) in ytr.iter().enumerate() {
            let v = d.get(r, y);
            d.set(r, y, v - 1.0);
        }
        let d = d.scale(1.0 / n);
        let gw = xs.matmul_tn(&d)?;
        w.data_mut().iter_mut().zip(gw.data()).for_each(|(w, g)| *w -= cfg.lr * g);
        b.iter_mut().zip(d.col_sums()).for_each(|(b, g)| *b -= cfg.lr * g);
    }

    let logits = standardize(xte, &means, &stds).matmul(&w)?;
    let pred: Vec<usize> = (0..logits.rows())
        .map(|r| {
            let row = logits.row(r);
            (0..k)
                .map(|c| (c, row[c] + b[c]))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
                .0
        })
        .collect();
    classification_report(&pred, yte)
}
