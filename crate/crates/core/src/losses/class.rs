use super::sinkhorn::sinkhorn;
use crate::diffcore::{CustomOp, Tensor2};
use crate::error::{Error, Result};

/// Swapped-prediction loss over prototype scores.
///
/// For every unordered pair `(a, c)` of score sets, targets `Q` come from
/// Sinkhorn on each set and predictions `P` are `softmax(scores / τ)`:
///
/// `L(a,c) = −1/(2b) Σ_n Σ_k [Q_a log P_c + Q_c log P_a]`
///
/// and the loss is the mean over pairs. Targets are constants for
/// differentiation.
///
/// As a graph op the inputs are `[s_0…s_m, t_0…t_m]`: the `s_i` receive
/// gradients and the `t_i` (normally stop-gradient copies of the same
/// scores) feed Sinkhorn.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassLoss {
    pub tau: f64,
    pub eps: f64,
    pub iters: usize,
    pub round: bool,
}

/// Row-wise `log softmax(x / τ)`.
fn log_softmax(x: &Tensor2, tau: f64) -> Tensor2 {
    let mut out = x.scale(1.0 / tau);
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.iter_mut().for_each(|v| *v -= lse);
    }
    out
}

/// All unordered index pairs `i < j` among `m` sets.
pub fn class_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect()
}

impl ClassLoss {
    fn split<'a, 'b>(&self, inputs: &'b [&'a Tensor2]) -> Result<(&'b [&'a Tensor2], &'b [&'a Tensor2])> {
        if !inputs.len().is_multiple_of(2) || inputs.len() < 4 {
            return Err(Error::Contract(format!(
                "class loss needs 2 or more score sets plus their target copies, got {} inputs",
                inputs.len()
            )));
        }
        let (scores, targets) = inputs.split_at(inputs.len() / 2);
        let shape = scores[0].shape();
        for s in scores.iter().chain(targets) {
            if s.shape() != shape {
                return Err(Error::dim(
                    "class-loss",
                    format!("score sets {:?} and {:?} differ", shape, s.shape()),
                ));
            }
        }
        Ok((scores, targets))
    }

    /// Per-sample soft labels for every target set.
    pub fn targets(&self, scores: &[&Tensor2]) -> Result<Vec<Tensor2>> {
        scores
            .iter()
            .map(|s| Ok(sinkhorn(s, self.eps, self.iters, self.round)?.assignments()))
            .collect()
    }

    /// Loss for score sets ordered `[g(z), g(h¹), …, g(hⱽ)]`.
    pub fn evaluate(&self, score_sets: &[Tensor2]) -> Result<f64> {
        let mut inputs: Vec<&Tensor2> = score_sets.iter().collect();
        inputs.extend(score_sets);
        self.forward(&inputs)
    }
}

impl CustomOp for ClassLoss {
    fn name(&self) -> &str {
        "class-loss"
    }

    fn forward(&self, inputs: &[&Tensor2]) -> Result<f64> {
        let (scores, targets) = self.split(inputs)?;
        let q = self.targets(targets)?;
        let logp: Vec<_> = scores.iter().map(|s| log_softmax(s, self.tau)).collect();
        let b = scores[0].rows() as f64;
        let pairs = class_pairs(scores.len());
        let mut total = 0.0;
        for &(a, c) in &pairs {
            let cross = |q: &Tensor2, lp: &Tensor2| -> f64 {
                q.data().iter().zip(lp.data()).map(|(q, l)| q * l).sum()
            };
            total += -(cross(&q[a], &logp[c]) + cross(&q[c], &logp[a])) / (2.0 * b);
        }
        Ok(total / pairs.len() as f64)
    }

    fn backward(&self, inputs: &[&Tensor2], upstream: f64) -> Result<Vec<Option<Tensor2>>> {
        let (scores, targets) = self.split(inputs)?;
        let q = self.targets(targets)?;
        let m = scores.len();
        let b = scores[0].rows() as f64;
        let pairs = class_pairs(m);
        let factor = upstream / (2.0 * b * pairs.len() as f64 * self.tau);
        let probs: Vec<_> = scores.iter().map(|s| log_softmax(s, self.tau).map(f64::exp)).collect();

        let mut grads: Vec<Tensor2> = scores.iter().map(|s| Tensor2::zeros(s.rows(), s.cols())).collect();
        // ∂/∂s_a of −Σ Q_c log softmax(s_a/τ) = (P_a·ΣQ_c − Q_c) / τ
        let mut add = |pred: usize, target: usize| {
            let (p, qt) = (&probs[pred], &q[target]);
            for r in 0..p.rows() {
                let mass: f64 = qt.row(r).iter().sum();
                for ((g, &pv), &qv) in grads[pred].row_mut(r).iter_mut().zip(p.row(r)).zip(qt.row(r)) {
                    *g += factor * (pv * mass - qv);
                }
            }
        };
        for &(a, c) in &pairs {
            add(c, a);
            add(a, c);
        }
        let mut out: Vec<Option<Tensor2>> = grads.into_iter().map(Some).collect();
        out.extend((0..m).map(|_| None));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss() -> ClassLoss {
        ClassLoss { tau: 0.07, eps: 0.05, iters: 3, round: false }
    }

    #[test]
    fn uniform_case_is_log_k() {
        let s = Tensor2::filled(8, 4, 0.25);
        let v = loss().evaluate(&[s.clone(), s.clone(), s]).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn mismatched_k_is_a_dimension_error() {
        let err = loss().evaluate(&[Tensor2::zeros(4, 3), Tensor2::zeros(4, 2)]).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn pairs_cover_every_unordered_pair() {
        assert_eq!(class_pairs(3), vec![(0, 1), (0, 2), (1, 2)]);
    }
}
