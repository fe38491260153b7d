use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

/// Columns with a norm at or below this are treated as zero.
pub const NORM_GUARD: f64 = 1e-12;

/// `d × d` normalized cross-correlation between two `b × d` batches.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossCorrelation {
    c: Tensor2,
}

impl CrossCorrelation {
    pub fn matrix(&self) -> &Tensor2 {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.c.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c.get(i, j)
    }

    pub fn into_matrix(self) -> Tensor2 {
        self.c
    }
}

/// Optionally centred, unit-norm columns of a batch.
pub(crate) struct UnitColumns {
    pub unit: Tensor2,
    pub norms: Vec<f64>,
}

pub(crate) fn unit_columns(x: &Tensor2, center: bool) -> UnitColumns {
    let mut unit = x.clone();
    if center {
        let means = x.col_means();
        for r in 0..unit.rows() {
            for (v, m) in unit.row_mut(r).iter_mut().zip(&means) {
                *v -= m;
            }
        }
    }
    let mut norms = vec![0.0; x.cols()];
    for r in 0..unit.rows() {
        for (n, v) in norms.iter_mut().zip(unit.row(r)) {
            *n += v * v;
        }
    }
    norms.iter_mut().for_each(|n| *n = n.sqrt());
    for r in 0..unit.rows() {
        for (v, &n) in unit.row_mut(r).iter_mut().zip(&norms) {
            *v = if n > NORM_GUARD { *v / n } else { 0.0 };
        }
    }
    UnitColumns { unit, norms }
}

/// Pulls a gradient on the unit columns back to the raw batch.
pub(crate) fn unit_columns_vjp(cols: &UnitColumns, d_unit: &Tensor2, center: bool) -> Tensor2 {
    let (rows, d) = cols.unit.shape();
    // Per column: dx̄ = (du − u·(u·du)) / ‖x̄‖
    let mut proj = vec![0.0; d];
    for r in 0..rows {
        for ((p, u), g) in proj.iter_mut().zip(cols.unit.row(r)).zip(d_unit.row(r)) {
            *p += u * g;
        }
    }
    let mut dx = Tensor2::zeros(rows, d);
    for r in 0..rows {
        let u = cols.unit.row(r);
        let g = d_unit.row(r);
        for (j, out) in dx.row_mut(r).iter_mut().enumerate() {
            let n = cols.norms[j];
            *out = if n > NORM_GUARD { (g[j] - u[j] * proj[j]) / n } else { 0.0 };
        }
    }
    if center {
        let means = dx.col_means();
        for r in 0..rows {
            for (v, m) in dx.row_mut(r).iter_mut().zip(&means) {
                *v -= m;
            }
        }
    }
    dx
}

pub(crate) fn check_pair(a: &Tensor2, b: &Tensor2, center: bool) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            "cross-correlation",
            format!("batches {:?} and {:?} differ in shape", a.shape(), b.shape()),
        ));
    }
    if center && a.rows() < 2 {
        return Err(Error::Contract(format!(
            "centred cross-correlation needs at least 2 rows, got {}",
            a.rows()
        )));
    }
    Ok(())
}

/// `C_ij = Σ_b a_bi·b_bj / (‖a_·i‖·‖b_·j‖)`, after per-column mean removal
/// when `center` is set. Zero-norm columns give zero rows/columns of `C`.
pub fn cross_correlation(a: &Tensor2, b: &Tensor2, center: bool) -> Result<CrossCorrelation> {
    check_pair(a, b, center)?;
    let ua = unit_columns(a, center);
    let ub = unit_columns(b, center);
    let mut c = ua.unit.matmul_tn(&ub.unit)?;
    // Rounding can push |C_ij| a hair past 1.
    c.data_mut().iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    Ok(CrossCorrelation { c })
}
