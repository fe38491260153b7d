use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

/// Entropic transport plan between `k` prototypes and `b` samples.
///
/// Rows sum to `1/k` (up to convergence), columns to `1/b` exactly up to
/// rounding, because the last scaling step is over columns.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    plan: Tensor2,
}

impl TransportPlan {
    /// The `k × b` plan `T`.
    pub fn matrix(&self) -> &Tensor2 {
        &self.plan
    }

    pub fn prototypes(&self) -> usize {
        self.plan.rows()
    }

    pub fn samples(&self) -> usize {
        self.plan.cols()
    }

    /// Per-sample soft labels, `b × k`: `b · Tᵀ`, so each row sums to 1.
    pub fn assignments(&self) -> Tensor2 {
        let b = self.samples() as f64;
        Tensor2::from_fn(self.samples(), self.prototypes(), |n, k| b * self.plan.get(k, n))
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Sinkhorn–Knopp on `exp(scoresᵀ / ε)` towards uniform marginals.
///
/// Each round rescales rows to `1/k`, then columns to `1/b`. The kernel is
/// kept in log space, which is the same iteration without underflow for
/// small `ε`. With `round`, each column is replaced by a one-hot of its
/// argmax scaled to `1/b`.
pub fn sinkhorn(scores: &Tensor2, eps: f64, iters: usize, round: bool) -> Result<TransportPlan> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Contract(format!("sinkhorn ε must be positive, got {eps}")));
    }
    if iters == 0 {
        return Err(Error::Contract("sinkhorn needs at least one iteration".into()));
    }
    if !scores.is_finite() {
        return Err(Error::Contract("sinkhorn scores must be finite".into()));
    }
    let (b, k) = scores.shape();
    if b == 0 || k == 0 {
        return Err(Error::Contract(format!("sinkhorn needs a non-empty score matrix, got {b}x{k}")));
    }
    let max = scores.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut log_t = Tensor2::from_fn(k, b, |r, c| (scores.get(c, r) - max) / eps);
    let log_row = -(k as f64).ln();
    let log_col = -(b as f64).ln();

    for _ in 0..iters {
        for r in 0..k {
            let shift = log_row - log_sum_exp(log_t.row(r).iter().copied());
            log_t.row_mut(r).iter_mut().for_each(|v| *v += shift);
        }
        for c in 0..b {
            let shift = log_col - log_sum_exp((0..k).map(|r| log_t.get(r, c)));
            for r in 0..k {
                log_t.set(r, c, log_t.get(r, c) + shift);
            }
        }
    }

    let mut plan = log_t.map(f64::exp);
    if round {
        for c in 0..b {
            let best = (0..k)
                .max_by(|&x, &y| plan.get(x, c).total_cmp(&plan.get(y, c)).then(y.cmp(&x)))
                .expect("k > 0");
            for r in 0..k {
                plan.set(r, c, if r == best { 1.0 / b as f64 } else { 0.0 });
            }
        }
    }
    Ok(TransportPlan { plan })
}
