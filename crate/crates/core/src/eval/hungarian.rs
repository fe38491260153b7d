use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

/// Minimum-cost perfect matching of a square cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `cols[r]` is the column matched to row `r`.
    pub cols: Vec<usize>,
    pub cost: f64,
}

/// Hungarian algorithm with row/column potentials, `O(k³)`.
pub fn hungarian(cost: &Tensor2) -> Result<Assignment> {
    let (n, m) = cost.shape();
    if n != m {
        return Err(Error::Contract(format!("hungarian needs a square cost matrix, got {n}x{m}")));
    }
    if !cost.is_finite() {
        return Err(Error::Contract("hungarian needs finite costs".into()));
    }
    if n == 0 {
        return Ok(Assignment { cols: Vec::new(), cost: 0.0 });
    }
    // 1-based arrays; column 0 is a virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0; n];
    for j in 1..=n {
        cols[row_of[j] - 1] = j - 1;
    }
    let total = cols.iter().enumerate().map(|(r, &c)| cost.get(r, c)).sum();
    Ok(Assignment { cols, cost: total })
}
