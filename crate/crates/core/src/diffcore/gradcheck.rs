use super::{Bindings, Graph, NodeId, ParamSet};
use crate::error::{Error, Result};

/// Outcome of comparing analytic gradients with central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// max over entries of |analytic − numeric| / max(|analytic|, |numeric|, 1e-12)
    pub max_relative_error: f64,
    /// Parameter name and flat index where the maximum occurred.
    pub worst: Option<(String, usize)>,
    pub entries_checked: usize,
}

/// Checks every learnable leaf of `graph` against central finite
/// differences with the given step. Stop-gradient nodes are held at their
/// values from the unperturbed point.
pub fn grad_check(
    graph: &mut Graph,
    root: NodeId,
    params: &mut ParamSet,
    inputs: &ParamSet,
    step: f64,
) -> Result<GradCheckReport> {
    if !(step > 0.0) {
        return Err(Error::Contract(format!("finite-difference step must be > 0, got {step}")));
    }
    {
        let b = Bindings::new().with_set(inputs).with_set(params);
        graph.forward(root, &b)?;
    }
    let analytic = graph.backward(root)?;

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        entries_checked: 0,
    };
    for (name, grad) in analytic.iter() {
        let len = params
            .get(name)
            .ok_or_else(|| Error::Contract(format!("parameter `{name}` is not bound")))?
            .len();
        for idx in 0..len {
            let original = params.get(name).expect("checked").data()[idx];
            let mut eval_at = |value: f64| -> Result<f64> {
                params.get_mut(name).expect("checked").data_mut()[idx] = value;
                let b = Bindings::new().with_set(inputs).with_set(params);
                graph.forward_frozen(root, &b)
            };
            let plus = eval_at(original + step)?;
            let minus = eval_at(original - step)?;
            params.get_mut(name).expect("checked").data_mut()[idx] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = grad.data()[idx];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
            report.entries_checked += 1;
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((name.to_string(), idx));
            }
        }
    }
    // Leave caches consistent with the restored parameters.
    let b = Bindings::new().with_set(inputs).with_set(params);
    graph.forward(root, &b)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Tensor2;

    #[test]
    fn quadratic_is_exact_up_to_rounding() {
        let mut params = ParamSet::new();
        params.insert("w", Tensor2::scalar(3.0));
        let mut g = Graph::new();
        let w = g.param("w");
        let ww = g.matmul(w, w);
        let root = g.sum(ww);
        let report = grad_check(&mut g, root, &mut params, &ParamSet::new(), 1e-5).unwrap();
        assert!(report.max_relative_error < 1e-8, "{report:?}");
        assert_eq!(report.entries_checked, 1);
        assert_eq!(params.get("w").unwrap().get(0, 0), 3.0);
    }

    #[test]
    fn rejects_non_positive_step() {
        let mut params = ParamSet::new();
        params.insert("w", Tensor2::scalar(1.0));
        let mut g = Graph::new();
        let w = g.param("w");
        let root = g.sum(w);
        let err = grad_check(&mut g, root, &mut params, &ParamSet::new(), 0.0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
