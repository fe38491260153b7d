use crate::diffcore::{ParamSet, Tensor2};
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates for every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: ParamSet,
    pub v: ParamSet,
    pub t: u64,
}

impl AdamState {
    /// Zero moments shaped like `params`.
    pub fn new(params: &ParamSet) -> Self {
        let mut m = ParamSet::new();
        for (name, p) in params.iter() {
            m.insert(name, Tensor2::zeros(p.rows(), p.cols()));
        }
        Self { v: m.clone(), m, t: 0 }
    }
}

/// One bias-corrected Adam update, in place.
///
/// Parameters without an entry in `grads` are treated as having a zero
/// gradient. Gradients are checked before anything is modified, so a
/// failing step leaves `params` and `state` untouched.
pub fn adam_step(params: &mut ParamSet, grads: &ParamSet, state: &mut AdamState, lr: f64) -> Result<()> {
    for (name, g) in grads.iter() {
        let p = params
            .get(name)
            .ok_or_else(|| Error::Contract(format!("gradient for unknown parameter {name}")))?;
        if p.shape() != g.shape() {
            return Err(Error::dim(
                name,
                format!("gradient {:?} does not match parameter {:?}", g.shape(), p.shape()),
            ));
        }
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient(name.to_string()));
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for (name, p) in params.iter_mut() {
        let g = grads.get(name);
        let (m, v) = match (state.m.get_mut(name), state.v.get_mut(name)) {
            (Some(m), Some(v)) => (m.data_mut(), v.data_mut()),
            _ => return Err(Error::Contract(format!("no optimizer state for {name}"))),
        };
        for i in 0..p.len() {
            let gi = g.map_or(0.0, |g| g.data()[i]);
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p.data_mut()[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    Ok(())
}

/// Rescales `grads` so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut ParamSet, max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flat_map(|(_, g)| g.data().iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for (_, g) in grads.iter_mut() {
            g.data_mut().iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}
