//! The hybrid contrastive objective.
//!
//! `L = λ1·L_ins + λ2·L_cls`, where the instance term aligns the projected
//! fused representation with each projected view representation through a
//! redundancy-reduction loss on their cross-correlation, and the class term
//! asks every pair of prototype-score sets to predict each other's
//! Sinkhorn soft labels.

mod class;
mod correlation;
mod instance;
mod sinkhorn;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use class::{class_pairs, ClassLoss};
pub use correlation::{cross_correlation, CrossCorrelation, NORM_GUARD};
pub use instance::{instance_pairs, Branch, InstanceLoss};
pub use sinkhorn::{sinkhorn, TransportPlan};

use crate::diffcore::{Bindings, Graph, NodeId, Tensor2};
use crate::error::{Error, Result};
use crate::model::{build_project, build_prototype_scores, ModelParams};

/// Trade-off factors and solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_ins: f64,
    pub tau: f64,
    pub sinkhorn_eps: f64,
    pub sinkhorn_iters: usize,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 0.5,
            lambda_ins: 5e-3,
            tau: 0.07,
            sinkhorn_eps: 0.05,
            sinkhorn_iters: 3,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda_ins", self.lambda_ins),
            ("tau", self.tau),
            ("sinkhorn_eps", self.sinkhorn_eps),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
        if self.sinkhorn_iters == 0 {
            return Err(Error::Config("sinkhorn_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn instance(&self, toggles: &Toggles) -> InstanceLoss {
        InstanceLoss {
            lambda_ins: self.lambda_ins,
            asymmetric: toggles.asymmetric,
            center: toggles.center,
        }
    }

    pub fn class(&self, toggles: &Toggles) -> ClassLoss {
        ClassLoss {
            tau: self.tau,
            eps: self.sinkhorn_eps,
            iters: self.sinkhorn_iters,
            round: toggles.round_targets,
        }
    }
}

/// Which terms are active and how they are computed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Toggles {
    pub instance: bool,
    pub class: bool,
    /// Align only `(z, h^v)` pairs in the instance term. When off, view
    /// pairs `(h^u, h^v)` are aligned as well.
    pub asymmetric: bool,
    /// Mean-centre each dimension before correlating.
    pub center: bool,
    /// Harden Sinkhorn targets to one-hot assignments.
    pub round_targets: bool,
    /// Stop gradients through `z` on the instance-term anchor.
    pub detach_common: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            instance: true,
            class: true,
            asymmetric: true,
            center: true,
            round_targets: false,
            detach_common: false,
        }
    }
}

impl Toggles {
    pub fn validate(&self) -> Result<()> {
        if !self.instance && !self.class {
            return Err(Error::Config("at least one of the instance and class terms must be enabled".into()));
        }
        Ok(())
    }
}

/// Value of the objective and of each active term.
#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub instance: Option<f64>,
    pub class: Option<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ObjectiveNodes {
    pub total: NodeId,
    pub instance: Option<NodeId>,
    pub class: Option<NodeId>,
}

/// Appends the objective on top of `z` and `h¹…hⱽ` nodes. Projections
/// feed the instance term and prototype scores feed the class term.
pub fn build_objective(
    g: &mut Graph,
    z: NodeId,
    hs: &[NodeId],
    weights: &LossWeights,
    toggles: &Toggles,
) -> Result<ObjectiveNodes> {
    weights.validate()?;
    toggles.validate()?;
    if hs.is_empty() {
        return Err(Error::Contract("the objective needs at least one view".into()));
    }
    let mut terms = Vec::new();

    let instance = if toggles.instance {
        let anchor = if toggles.detach_common { g.stop_gradient(z) } else { z };
        let mut proj = vec![build_project(g, anchor)];
        proj.extend(hs.iter().map(|&h| build_project(g, h)));
        let node = g.custom(Arc::new(weights.instance(toggles)), &proj);
        terms.push(g.scale(node, weights.lambda1));
        Some(node)
    } else {
        None
    };

    let class = if toggles.class {
        let mut inputs: Vec<NodeId> = std::iter::once(z)
            .chain(hs.iter().copied())
            .map(|r| build_prototype_scores(g, r))
            .collect();
        let targets: Vec<NodeId> = inputs.iter().map(|&s| g.stop_gradient(s)).collect();
        inputs.extend(targets);
        let node = g.custom(Arc::new(weights.class(toggles)), &inputs);
        terms.push(g.scale(node, weights.lambda2));
        Some(node)
    } else {
        None
    };

    let total = match terms[..] {
        [single] => single,
        [a, b] => g.add(a, b),
        _ => unreachable!("validated above"),
    };
    Ok(ObjectiveNodes { total, instance, class })
}

pub(crate) fn breakdown(g: &Graph, nodes: &ObjectiveNodes, weights: &LossWeights) -> LossBreakdown {
    let scalar = |id: NodeId| g.value(id).expect("evaluated").get(0, 0);
    LossBreakdown {
        total: scalar(nodes.total),
        instance: nodes.instance.map(scalar),
        class: nodes.class.map(scalar),
        lambda1: weights.lambda1,
        lambda2: weights.lambda2,
    }
}

/// Evaluates the objective for given `z` and `h` batches.
pub fn total_loss(
    params: &ModelParams,
    z: &Tensor2,
    hs: &[Tensor2],
    weights: &LossWeights,
    toggles: &Toggles,
) -> Result<LossBreakdown> {
    let mut g = Graph::new();
    let zn = g.input("z");
    let names: Vec<String> = (0..hs.len()).map(|v| format!("h{v}")).collect();
    let hn: Vec<NodeId> = names.iter().map(|n| g.input(n.as_str())).collect();
    let nodes = build_objective(&mut g, zn, &hn, weights, toggles)?;
    let mut b = Bindings::new().with_set(params.params()).with("z", z);
    for (n, h) in names.iter().zip(hs) {
        b.bind(n.as_str(), h);
    }
    g.forward(nodes.total, &b)?;
    Ok(breakdown(&g, &nodes, weights))
}
