use super::hungarian::hungarian;
use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub predicted: Vec<usize>,
    /// k-means objective, when the labels came from k-means.
    pub inertia: Option<f64>,
}

/// `counts[p][t]` for predicted cluster `p` and true class `t`.
fn contingency(pred: &[usize], truth: &[usize]) -> Vec<Vec<f64>> {
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0.0; kt]; kp];
    for (&p, &t) in pred.iter().zip(truth) {
        table[p][t] += 1.0;
    }
    table
}

fn check(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Contract(format!(
            "label lengths differ: {} predicted vs {} true",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Contract("metrics need at least one sample".into()));
    }
    Ok(())
}

/// Clustering accuracy under the best one-to-one mapping of cluster ids
/// to classes.
pub fn clustering_acc(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    let table = contingency(pred, truth);
    let k = table.len().max(table[0].len());
    let cost = Tensor2::from_fn(k, k, |p, t| -table.get(p).and_then(|row| row.get(t)).copied().unwrap_or(0.0));
    let matched = -hungarian(&cost)?.cost;
    Ok(matched / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = f64>, n: f64) -> f64 {
    counts.filter(|&c| c > 0.0).map(|c| -(c / n) * (c / n).ln()).sum()
}

/// Mutual information normalised by the arithmetic mean of the two
/// entropies. Two single-cluster labelings score 1.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    let table = contingency(pred, truth);
    let n = pred.len() as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..table[0].len()).map(|t| table.iter().map(|r| r[t]).sum()).collect();
    let (hp, ht) = (entropy(rows.iter().copied(), n), entropy(cols.iter().copied(), n));
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (p, row) in table.iter().enumerate() {
        for (t, &c) in row.iter().enumerate() {
            if c > 0.0 {
                mi += (c / n) * (c * n / (rows[p] * cols[t])).ln();
            }
        }
    }
    Ok((mi / ((hp + ht) / 2.0)).clamp(0.0, 1.0))
}

fn pairs(c: f64) -> f64 {
    c * (c - 1.0) / 2.0
}

/// Adjusted Rand index from pair counts.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    let table = contingency(pred, truth);
    let n = pred.len() as f64;
    let index: f64 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let a: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let b: f64 = (0..table[0].len()).map(|t| pairs(table.iter().map(|r| r[t]).sum())).sum();
    let expected = a * b / pairs(n).max(1.0);
    let max = (a + b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

pub fn clustering_metrics(pred: &[usize], truth: &[usize]) -> Result<ClusteringReport> {
    Ok(ClusteringReport {
        acc: clustering_acc(pred, truth)?,
        nmi: nmi(pred, truth)?,
        ari: ari(pred, truth)?,
        predicted: pred.to_vec(),
        inertia: None,
    })
}
