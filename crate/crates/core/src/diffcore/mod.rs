//! Dense tensors and a small reverse-mode differentiation engine.
//!
//! The op set is deliberately closed: matrix products, bias broadcast,
//! elementwise add, ReLU, column concatenation, row softmax, scaling, sum,
//! stop-gradient, and scalar-valued custom ops carrying their own
//! vector-Jacobian products. Everything is `f64`.

mod gradcheck;
mod graph;
mod params;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use graph::{softmax_rows, CustomOp, Graph, NodeId, Op};
pub use params::{Bindings, ParamSet};
pub use tensor::Tensor2;
