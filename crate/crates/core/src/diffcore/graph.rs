//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! Nodes are appended in construction order, which is also a valid
//! topological order: every op only refers to nodes that already exist.
//! [`Graph::forward`] evaluates nodes `0..=root` and caches their values;
//! [`Graph::backward`] walks the same range in reverse and accumulates
//! gradients into every node that depends on a learnable leaf.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::{Bindings, ParamSet, Tensor2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A scalar-valued operation with a hand-written vector-Jacobian product.
///
/// `backward` returns one entry per input; `None` means the input receives
/// no gradient from this op.
pub trait CustomOp: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;
    fn forward(&self, inputs: &[&Tensor2]) -> Result<f64>;
    fn backward(&self, inputs: &[&Tensor2], upstream: f64) -> Result<Vec<Option<Tensor2>>>;
}

#[derive(Clone, Debug)]
pub enum Op {
    Input(String),
    Param(String),
    /// `a · b`
    MatMul,
    /// `x + 1·biasᵀ`, bias is `1 × cols`.
    AddBias,
    Add,
    Relu,
    ConcatCols,
    SoftmaxRows,
    Scale(f64),
    Sum,
    /// Identity in the forward pass; blocks gradient flow.
    StopGradient,
    Custom(Arc<dyn CustomOp>),
}

impl Op {
    pub fn kind(&self) -> &str {
        match self {
            Op::Input(_) => "input",
            Op::Param(_) => "param",
            Op::MatMul => "matmul",
            Op::AddBias => "add-bias",
            Op::Add => "add",
            Op::Relu => "relu",
            Op::ConcatCols => "concat-cols",
            Op::SoftmaxRows => "softmax-rows",
            Op::Scale(_) => "scale",
            Op::Sum => "sum",
            Op::StopGradient => "stop-gradient",
            Op::Custom(c) => c.name(),
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    requires_grad: bool,
    value: Option<Tensor2>,
    grad: Option<Tensor2>,
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<String, NodeId>,
    inputs: HashMap<String, NodeId>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>) -> NodeId {
        let requires_grad = match op {
            Op::Param(_) => true,
            Op::Input(_) | Op::StopGradient => false,
            _ => inputs.iter().any(|i| self.nodes[i.0].requires_grad),
        };
        self.nodes.push(Node {
            op,
            inputs,
            requires_grad,
            value: None,
            grad: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Constant leaf bound by name at evaluation time.
    pub fn input(&mut self, name: impl Into<String>) -> NodeId {
        let name = name.into();
        if let Some(&id) = self.inputs.get(&name) {
            return id;
        }
        let id = self.push(Op::Input(name.clone()), vec![]);
        self.inputs.insert(name, id);
        id
    }

    /// Learnable leaf; repeated calls with the same name share one node.
    pub fn param(&mut self, name: impl Into<String>) -> NodeId {
        let name = name.into();
        if let Some(&id) = self.params.get(&name) {
            return id;
        }
        let id = self.push(Op::Param(name.clone()), vec![]);
        self.params.insert(name, id);
        id
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::MatMul, vec![a, b])
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> NodeId {
        self.push(Op::AddBias, vec![x, bias])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add, vec![a, b])
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Relu, vec![x])
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        self.push(Op::ConcatCols, parts.to_vec())
    }

    pub fn softmax_rows(&mut self, x: NodeId) -> NodeId {
        self.push(Op::SoftmaxRows, vec![x])
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        self.push(Op::Scale(factor), vec![x])
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Sum, vec![x])
    }

    pub fn stop_gradient(&mut self, x: NodeId) -> NodeId {
        self.push(Op::StopGradient, vec![x])
    }

    pub fn custom(&mut self, op: Arc<dyn CustomOp>, inputs: &[NodeId]) -> NodeId {
        self.push(Op::Custom(op), inputs.to_vec())
    }

    pub fn op(&self, id: NodeId) -> &Op {
        &self.nodes[id.0].op
    }

    pub fn value(&self, id: NodeId) -> Option<&Tensor2> {
        self.nodes.get(id.0).and_then(|n| n.value.as_ref())
    }

    pub fn grad(&self, id: NodeId) -> Option<&Tensor2> {
        self.nodes.get(id.0).and_then(|n| n.grad.as_ref())
    }

    /// Names of learnable leaves in creation order.
    pub fn param_names(&self) -> Vec<String> {
        let mut named: Vec<_> = self.params.iter().map(|(n, id)| (*id, n.clone())).collect();
        named.sort();
        named.into_iter().map(|(_, n)| n).collect()
    }

    fn label(&self, id: NodeId) -> String {
        let node = &self.nodes[id.0];
        match &node.op {
            Op::Input(n) | Op::Param(n) => format!("node #{} ({} `{n}`)", id.0, node.op.kind()),
            op => format!("node #{} ({})", id.0, op.kind()),
        }
    }

    /// Evaluates every node up to `root` and returns the root value.
    pub fn forward(&mut self, root: NodeId, bindings: &Bindings<'_>) -> Result<&Tensor2> {
        self.evaluate(root, bindings, false)?;
        Ok(self.nodes[root.0].value.as_ref().expect("evaluated"))
    }

    /// Like [`forward`](Self::forward), but stop-gradient nodes keep the
    /// values cached by the previous evaluation. This makes finite
    /// differences see the same constants the analytic gradient assumes.
    pub(crate) fn forward_frozen(&mut self, root: NodeId, bindings: &Bindings<'_>) -> Result<f64> {
        self.evaluate(root, bindings, true)?;
        Ok(self.nodes[root.0].value.as_ref().expect("evaluated").get(0, 0))
    }

    fn evaluate(&mut self, root: NodeId, bindings: &Bindings<'_>, frozen: bool) -> Result<()> {
        if root.0 >= self.nodes.len() {
            return Err(Error::Contract(format!("root {} is not in the graph", root.0)));
        }
        for i in 0..=root.0 {
            if frozen
                && matches!(self.nodes[i].op, Op::StopGradient)
                && self.nodes[i].value.is_some()
            {
                continue;
            }
            let value = self.eval_node(NodeId(i), bindings)?;
            if !value.is_finite() && self.nodes[i].inputs.iter().all(|&j| self.nodes[j.0].value.as_ref().is_some_and(Tensor2::is_finite)) {
                return Err(Error::Numeric(format!(
                    "{} produced a non-finite value from finite inputs",
                    self.label(NodeId(i))
                )));
            }
            let node = &mut self.nodes[i];
            node.value = Some(value);
            node.grad = None;
        }
        Ok(())
    }

    fn eval_node(&self, id: NodeId, bindings: &Bindings<'_>) -> Result<Tensor2> {
        let node = &self.nodes[id.0];
        let dim = |detail: String| Error::dim(self.label(id), detail);
        let arg = |k: usize| -> &Tensor2 {
            self.nodes[node.inputs[k].0]
                .value
                .as_ref()
                .expect("inputs precede their consumers")
        };
        Ok(match &node.op {
            Op::Input(name) | Op::Param(name) => bindings
                .resolve(name)
                .ok_or_else(|| Error::Contract(format!("{} is not bound", self.label(id))))?
                .clone(),
            Op::MatMul => {
                let (a, b) = (arg(0), arg(1));
                if a.cols() != b.rows() {
                    return Err(dim(format!(
                        "cannot multiply {:?} by {:?}",
                        a.shape(),
                        b.shape()
                    )));
                }
                a.matmul(b)?
            }
            Op::AddBias => {
                let (x, bias) = (arg(0), arg(1));
                if bias.shape() != (1, x.cols()) {
                    return Err(dim(format!(
                        "bias {:?} does not fit input {:?}",
                        bias.shape(),
                        x.shape()
                    )));
                }
                let mut out = x.clone();
                for r in 0..out.rows() {
                    for (o, b) in out.row_mut(r).iter_mut().zip(bias.data()) {
                        *o += b;
                    }
                }
                out
            }
            Op::Add => {
                let (a, b) = (arg(0), arg(1));
                if a.shape() != b.shape() {
                    return Err(dim(format!("cannot add {:?} and {:?}", a.shape(), b.shape())));
                }
                a.add(b)?
            }
            Op::Relu => arg(0).map(|v| v.max(0.0)),
            Op::ConcatCols => {
                let parts: Vec<&Tensor2> = (0..node.inputs.len()).map(arg).collect();
                Tensor2::hcat(&parts).map_err(|e| dim(e.to_string()))?
            }
            Op::SoftmaxRows => softmax_rows(arg(0)),
            Op::Scale(c) => arg(0).scale(*c),
            Op::Sum => Tensor2::scalar(arg(0).sum()),
            Op::StopGradient => arg(0).clone(),
            Op::Custom(op) => {
                let parts: Vec<&Tensor2> = (0..node.inputs.len()).map(arg).collect();
                let v = op.forward(&parts).map_err(|e| match e {
                    Error::Dimension { detail, .. } => dim(detail),
                    other => other,
                })?;
                Tensor2::scalar(v)
            }
        })
    }

    /// Back-propagates from a scalar root and returns the gradient of every
    /// learnable leaf reachable from it (zeros for unreachable ones).
    pub fn backward(&mut self, root: NodeId) -> Result<ParamSet> {
        let root_value = self
            .value(root)
            .ok_or_else(|| Error::Contract("backward called before forward".into()))?;
        if root_value.shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a 1x1 root, {} is {:?}",
                self.label(root),
                root_value.shape()
            )));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[root.0].grad = Some(Tensor2::scalar(1.0));

        for i in (0..=root.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(upstream) = self.nodes[i].grad.take() else {
                continue;
            };
            let contributions = self.vjp(NodeId(i), &upstream)?;
            self.nodes[i].grad = Some(upstream);
            for (input, g) in contributions {
                let slot = &mut self.nodes[input.0].grad;
                match slot {
                    Some(acc) => acc.add_assign(&g)?,
                    None => *slot = Some(g),
                }
            }
        }

        let mut grads = ParamSet::new();
        for name in self.param_names() {
            let id = self.params[&name];
            let node = &self.nodes[id.0];
            let g = match (&node.grad, &node.value) {
                (Some(g), _) => g.clone(),
                (None, Some(v)) => Tensor2::zeros(v.rows(), v.cols()),
                (None, None) => continue,
            };
            grads.insert(name, g);
        }
        Ok(grads)
    }

    /// Gradient contributions of node `id` to its inputs that need them.
    fn vjp(&self, id: NodeId, up: &Tensor2) -> Result<Vec<(NodeId, Tensor2)>> {
        let node = &self.nodes[id.0];
        let needs = |k: usize| self.nodes[node.inputs[k].0].requires_grad;
        let arg = |k: usize| self.nodes[node.inputs[k].0].value.as_ref().expect("forward ran");
        let mut out = Vec::with_capacity(node.inputs.len());
        match &node.op {
            Op::Input(_) | Op::Param(_) | Op::StopGradient => {}
            Op::MatMul => {
                let (a, b) = (arg(0), arg(1));
                if needs(0) {
                    out.push((node.inputs[0], up.matmul_nt(b)?));
                }
                if needs(1) {
                    out.push((node.inputs[1], a.matmul_tn(up)?));
                }
            }
            Op::AddBias => {
                if needs(0) {
                    out.push((node.inputs[0], up.clone()));
                }
                if needs(1) {
                    out.push((node.inputs[1], Tensor2::from_vec(1, up.cols(), up.col_sums())?));
                }
            }
            Op::Add => {
                for k in 0..2 {
                    if needs(k) {
                        out.push((node.inputs[k], up.clone()));
                    }
                }
            }
            Op::Relu => {
                // Subgradient at exactly zero is taken as zero.
                let x = arg(0);
                out.push((node.inputs[0], x.zip_map(up, |x, g| if x > 0.0 { g } else { 0.0 })?));
            }
            Op::ConcatCols => {
                let mut start = 0;
                for (k, &input) in node.inputs.iter().enumerate() {
                    let width = arg(k).cols();
                    if needs(k) {
                        out.push((input, up.col_block(start, width)));
                    }
                    start += width;
                }
            }
            Op::SoftmaxRows => {
                let y = node.value.as_ref().expect("forward ran");
                let mut g = Tensor2::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let dot: f64 = y.row(r).iter().zip(up.row(r)).map(|(a, b)| a * b).sum();
                    for ((o, &yv), &u) in g.row_mut(r).iter_mut().zip(y.row(r)).zip(up.row(r)) {
                        *o = yv * (u - dot);
                    }
                }
                out.push((node.inputs[0], g));
            }
            Op::Scale(c) => out.push((node.inputs[0], up.scale(*c))),
            Op::Sum => {
                let x = arg(0);
                out.push((node.inputs[0], Tensor2::filled(x.rows(), x.cols(), up.get(0, 0))));
            }
            Op::Custom(op) => {
                let parts: Vec<&Tensor2> = (0..node.inputs.len()).map(arg).collect();
                let grads = op.backward(&parts, up.get(0, 0))?;
                for (k, g) in grads.into_iter().enumerate() {
                    if let Some(g) = g {
                        if needs(k) {
                            out.push((node.inputs[k], g));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Numerically stable row-wise softmax.
pub fn softmax_rows(x: &Tensor2) -> Tensor2 {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}
