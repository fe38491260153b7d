use super::correlation::{check_pair, unit_columns, unit_columns_vjp};
use crate::diffcore::{CustomOp, Tensor2};
use crate::error::{Error, Result};

/// A representation taking part in an alignment pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// The fused representation `z`.
    Common,
    /// View-specific representation `h^v`.
    View(usize),
}

/// Pairs aligned by the instance-level loss.
///
/// Asymmetric mode anchors every view on `z` and never aligns two views
/// directly: `{(z,h¹),…,(z,hⱽ)}`. Symmetric mode adds every `(h^u, h^v)`
/// with `u < v`.
pub fn instance_pairs(views: usize, asymmetric: bool) -> Vec<(Branch, Branch)> {
    let mut pairs: Vec<_> = (0..views).map(|v| (Branch::Common, Branch::View(v))).collect();
    if !asymmetric {
        for u in 0..views {
            for v in u + 1..views {
                pairs.push((Branch::View(u), Branch::View(v)));
            }
        }
    }
    pairs
}

/// Redundancy-reduction loss summed over the aligned pairs:
/// `Σ_i (1 − C_ii)² + λ_ins · Σ_{i≠j} C_ij²` per pair.
///
/// As a graph op it takes inputs `[z_proj, h¹_proj, …, hⱽ_proj]`.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceLoss {
    pub lambda_ins: f64,
    pub asymmetric: bool,
    pub center: bool,
}

impl InstanceLoss {
    fn slot(b: Branch) -> usize {
        match b {
            Branch::Common => 0,
            Branch::View(v) => v + 1,
        }
    }

    fn check(&self, inputs: &[&Tensor2]) -> Result<()> {
        if inputs.len() < 2 {
            return Err(Error::Contract("instance loss needs at least one view".into()));
        }
        for h in &inputs[1..] {
            check_pair(inputs[0], h, self.center)?;
        }
        Ok(())
    }

    /// Loss value and `∂L/∂C` for one correlation matrix.
    fn term(&self, c: &Tensor2) -> (f64, Tensor2) {
        let d = c.rows();
        let mut loss = 0.0;
        let mut grad = Tensor2::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let v = c.get(i, j);
                if i == j {
                    loss += (1.0 - v) * (1.0 - v);
                    grad.set(i, j, -2.0 * (1.0 - v));
                } else {
                    loss += self.lambda_ins * v * v;
                    grad.set(i, j, 2.0 * self.lambda_ins * v);
                }
            }
        }
        (loss, grad)
    }

    pub fn evaluate(&self, z_proj: &Tensor2, h_proj: &[Tensor2]) -> Result<f64> {
        let mut inputs = vec![z_proj];
        inputs.extend(h_proj);
        self.forward(&inputs)
    }
}

impl CustomOp for InstanceLoss {
    fn name(&self) -> &str {
        "instance-loss"
    }

    fn forward(&self, inputs: &[&Tensor2]) -> Result<f64> {
        self.check(inputs)?;
        let unit: Vec<_> = inputs.iter().map(|x| unit_columns(x, self.center)).collect();
        let mut total = 0.0;
        for (a, b) in instance_pairs(inputs.len() - 1, self.asymmetric) {
            let c = unit[Self::slot(a)].unit.matmul_tn(&unit[Self::slot(b)].unit)?;
            total += self.term(&c).0;
        }
        Ok(total)
    }

    fn backward(&self, inputs: &[&Tensor2], upstream: f64) -> Result<Vec<Option<Tensor2>>> {
        self.check(inputs)?;
        let unit: Vec<_> = inputs.iter().map(|x| unit_columns(x, self.center)).collect();
        let mut d_unit: Vec<Tensor2> = inputs.iter().map(|x| Tensor2::zeros(x.rows(), x.cols())).collect();
        for (a, b) in instance_pairs(inputs.len() - 1, self.asymmetric) {
            let (ia, ib) = (Self::slot(a), Self::slot(b));
            let (ua, ub) = (&unit[ia].unit, &unit[ib].unit);
            let c = ua.matmul_tn(ub)?;
            let (_, g) = self.term(&c);
            let g = g.scale(upstream);
            // C = uaᵀ·ub  ⇒  dua = ub·Gᵀ, dub = ua·G
            d_unit[ia].add_assign(&ub.matmul_nt(&g)?)?;
            d_unit[ib].add_assign(&ua.matmul(&g)?)?;
        }
        Ok(unit
            .iter()
            .zip(&d_unit)
            .map(|(u, du)| Some(unit_columns_vjp(u, du, self.center)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn asymmetric_pairs_anchor_on_common() {
        let pairs: BTreeSet<_> = instance_pairs(3, true).into_iter().collect();
        let expect: BTreeSet<_> = (0..3).map(|v| (Branch::Common, Branch::View(v))).collect();
        assert_eq!(pairs, expect);
        assert_eq!(instance_pairs(3, false).len(), 6);
    }

    #[test]
    fn perfect_alignment_gives_zero() {
        // Orthogonal, zero-mean columns: C = I for z against itself.
        let z = Tensor2::from_rows(&[[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]).unwrap();
        let loss = InstanceLoss { lambda_ins: 5e-3, asymmetric: true, center: true };
        assert!(loss.evaluate(&z, &[z.clone(), z.clone()]).unwrap().abs() < 1e-24);
    }

    #[test]
    fn zero_correlation_leaves_invariance_term() {
        // z columns vs h columns mutually orthogonal after centring.
        let z = Tensor2::from_rows(&[
            [1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, -1.0],
            [-1.0, 1.0, -1.0, 1.0],
            [-1.0, -1.0, -1.0, -1.0],
        ])
        .unwrap();
        let h = Tensor2::from_rows(&[
            [1.0, 1.0, 1.0, 1.0],
            [-1.0, -1.0, -1.0, -1.0],
            [-1.0, -1.0, -1.0, -1.0],
            [1.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let loss = InstanceLoss { lambda_ins: 5e-3, asymmetric: true, center: true };
        let c = super::super::cross_correlation(&z, &h, true).unwrap();
        assert!(c.matrix().data().iter().all(|v| v.abs() < 1e-15));
        assert!((loss.evaluate(&z, &[h]).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn no_views_is_a_contract_error() {
        let loss = InstanceLoss { lambda_ins: 5e-3, asymmetric: true, center: true };
        assert!(matches!(loss.evaluate(&Tensor2::zeros(4, 2), &[]), Err(Error::Contract(_))));
    }
}
