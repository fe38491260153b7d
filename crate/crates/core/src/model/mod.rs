//! The fusion network: per-view encoders, a residual fusion block, a
//! projection head and a prototype (soft-label) head.
//!
//! Weights are stored `in × out` so a layer computes `x · W + b` on
//! row-major batches. Parameter names follow `<block>.<layer>.<w|b>`:
//!
//! | block            | layers                           |
//! |------------------|----------------------------------|
//! | `enc{v}`         | `d_v → hidden… → O`, ReLU between |
//! | `fusion.adapter` | `V·O → O`, weight only            |
//! | `fusion`         | `O → fusion_hidden → O`           |
//! | `proj`           | `O → projection_hidden → O`, no biases |
//! | `proto`          | `O → O → k`                       |

mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::{Bindings, Graph, NodeId, ParamSet, Tensor2};
use crate::error::{Error, Result};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};

/// Layer widths of the network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub view_dims: Vec<usize>,
    /// Encoder output width `O`, shared by `h`, `z` and the projections.
    pub output_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub prototypes: usize,
    pub fusion_hidden: usize,
    pub projection_hidden: usize,
}

impl ArchConfig {
    /// Default widths: three 1024-wide encoder layers, `O/2` fusion hidden
    /// width and `4·O` projection hidden width.
    pub fn new(view_dims: Vec<usize>, output_dim: usize, prototypes: usize) -> Self {
        Self {
            view_dims,
            output_dim,
            encoder_hidden: vec![1024, 1024, 1024],
            prototypes,
            fusion_hidden: output_dim / 2,
            projection_hidden: 4 * output_dim,
        }
    }

    pub fn with_encoder_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.encoder_hidden = hidden;
        self
    }

    pub fn views(&self) -> usize {
        self.view_dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.view_dims.is_empty() {
            return fail("at least one view is required".into());
        }
        if let Some(v) = self.view_dims.iter().position(|&d| d == 0) {
            return fail(format!("view {v} has dimension 0"));
        }
        if self.output_dim == 0 || !self.output_dim.is_multiple_of(2) {
            return fail(format!("output dim must be even and positive, got {}", self.output_dim));
        }
        if self.prototypes < 2 {
            return fail(format!("need at least 2 prototypes, got {}", self.prototypes));
        }
        if self.encoder_hidden.contains(&0) || self.fusion_hidden == 0 || self.projection_hidden == 0 {
            return fail("hidden widths must be positive".into());
        }
        Ok(())
    }

    fn encoder_dims(&self, v: usize) -> Vec<usize> {
        let mut dims = vec![self.view_dims[v]];
        dims.extend(&self.encoder_hidden);
        dims.push(self.output_dim);
        dims
    }

    /// `(prefix, widths)` for every biased MLP block, in parameter order.
    fn mlp_blocks(&self) -> Vec<(String, Vec<usize>)> {
        let o = self.output_dim;
        let mut blocks: Vec<_> = (0..self.views())
            .map(|v| (format!("enc{v}"), self.encoder_dims(v)))
            .collect();
        blocks.push(("fusion".into(), vec![o, self.fusion_hidden, o]));
        blocks.push(("proj".into(), vec![o, self.projection_hidden, o]));
        blocks.push(("proto".into(), vec![o, o, self.prototypes]));
        blocks
    }
}

pub const ADAPTER: &str = "fusion.adapter.w";

fn weight_name(prefix: &str, layer: usize) -> String {
    format!("{prefix}.{layer}.w")
}

fn bias_name(prefix: &str, layer: usize) -> String {
    format!("{prefix}.{layer}.b")
}

/// Graph input name for view `v`.
pub fn view_input(v: usize) -> String {
    format!("x{v}")
}

/// All learnable weights plus the architecture they were built for.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    arch: ArchConfig,
    params: ParamSet,
}

impl ModelParams {
    pub fn from_parts(arch: ArchConfig, params: ParamSet) -> Result<Self> {
        arch.validate()?;
        let reference = init_params(&arch, 0)?;
        for (name, t) in reference.params.iter() {
            let found = params
                .get(name)
                .ok_or_else(|| Error::Config(format!("missing parameter `{name}`")))?;
            if found.shape() != t.shape() {
                return Err(Error::dim(
                    name,
                    format!("expected {:?}, found {:?}", t.shape(), found.shape()),
                ));
            }
        }
        if params.len() != reference.params.len() {
            return Err(Error::Config("unexpected extra parameters".into()));
        }
        Ok(Self { arch, params })
    }

    pub fn arch(&self) -> &ArchConfig {
        &self.arch
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Zeroes every layer of one MLP block (`"fusion"`, `"proj"`, …).
    pub fn zero_block(&mut self, prefix: &str) {
        let dot = format!("{prefix}.");
        for (name, t) in self.params.iter_mut() {
            if name.starts_with(&dot) && name != ADAPTER {
                t.data_mut().fill(0.0);
            }
        }
    }
}

/// Weights ~ U(−1/√fan_in, 1/√fan_in), biases zero. Deterministic per seed.
pub fn init_params(arch: &ArchConfig, seed: u64) -> Result<ModelParams> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let uniform = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
        let bound = 1.0 / (rows as f64).sqrt();
        Tensor2::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
    };
    let blocks = arch.mlp_blocks();
    let (encoders, heads) = blocks.split_at(arch.views());
    for (prefix, dims) in encoders {
        for (l, pair) in dims.windows(2).enumerate() {
            params.insert(weight_name(prefix, l), uniform(pair[0], pair[1], &mut rng));
            params.insert(bias_name(prefix, l), Tensor2::zeros(1, pair[1]));
        }
    }
    let o = arch.output_dim;
    params.insert(ADAPTER, uniform(arch.views() * o, o, &mut rng));
    for (prefix, dims) in heads {
        for (l, pair) in dims.windows(2).enumerate() {
            params.insert(weight_name(prefix, l), uniform(pair[0], pair[1], &mut rng));
            if has_bias(prefix, l, dims.len() - 1) {
                params.insert(bias_name(prefix, l), Tensor2::zeros(1, pair[1]));
            }
        }
    }
    Ok(ModelParams {
        arch: arch.clone(),
        params,
    })
}

// The projection head is bias-free. Its output only feeds a per-dimension
// centred correlation, which cancels constant offsets.
fn has_bias(prefix: &str, _layer: usize, _layers: usize) -> bool {
    prefix != "proj"
}

/// Appends `Linear → ReLU → … → Linear` with `layers` linear layers.
fn build_mlp(g: &mut Graph, prefix: &str, layers: usize, x: NodeId) -> NodeId {
    let mut cur = x;
    for l in 0..layers {
        let w = g.param(weight_name(prefix, l));
        cur = g.matmul(cur, w);
        if has_bias(prefix, l, layers) {
            let b = g.param(bias_name(prefix, l));
            cur = g.add_bias(cur, b);
        }
        if l + 1 < layers {
            cur = g.relu(cur);
        }
    }
    cur
}

pub fn build_encode(g: &mut Graph, arch: &ArchConfig, x: NodeId, v: usize) -> NodeId {
    build_mlp(g, &format!("enc{v}"), arch.encoder_hidden.len() + 1, x)
}

/// `s = [h¹,…,hⱽ]·A`, then `z = s + MLP(s)`.
pub fn build_fuse(g: &mut Graph, hs: &[NodeId]) -> NodeId {
    let cat = g.concat_cols(hs);
    let adapter = g.param(ADAPTER);
    let s = g.matmul(cat, adapter);
    let residual = build_mlp(g, "fusion", 2, s);
    g.add(s, residual)
}

pub fn build_project(g: &mut Graph, r: NodeId) -> NodeId {
    build_mlp(g, "proj", 2, r)
}

pub fn build_prototype_scores(g: &mut Graph, r: NodeId) -> NodeId {
    build_mlp(g, "proto", 2, r)
}

/// Encoder and fusion nodes for one batch.
#[derive(Clone, Debug)]
pub struct NetworkNodes {
    pub inputs: Vec<NodeId>,
    pub h: Vec<NodeId>,
    pub z: NodeId,
}

/// Builds encoders for inputs `x0..x{V-1}` followed by the fusion block.
pub fn build_network(g: &mut Graph, arch: &ArchConfig) -> NetworkNodes {
    let inputs: Vec<_> = (0..arch.views()).map(|v| g.input(view_input(v))).collect();
    let h: Vec<_> = inputs
        .iter()
        .enumerate()
        .map(|(v, &x)| build_encode(g, arch, x, v))
        .collect();
    let z = build_fuse(g, &h);
    NetworkNodes { inputs, h, z }
}

fn expect_width(t: &Tensor2, width: usize, what: &str) -> Result<()> {
    if t.cols() != width {
        return Err(Error::dim(what, format!("expected {width} columns, got {}", t.cols())));
    }
    Ok(())
}

fn run_single(params: &ModelParams, input: &Tensor2, build: impl FnOnce(&mut Graph, NodeId) -> NodeId) -> Result<Tensor2> {
    let mut g = Graph::new();
    let x = g.input("in");
    let out = build(&mut g, x);
    let b = Bindings::new().with_set(&params.params).with("in", input);
    Ok(g.forward(out, &b)?.clone())
}

/// `h_v = e_v(X_v)`.
pub fn encode(params: &ModelParams, x: &Tensor2, v: usize) -> Result<Tensor2> {
    let arch = &params.arch;
    if v >= arch.views() {
        return Err(Error::Contract(format!("view index {v} out of range for {} views", arch.views())));
    }
    expect_width(x, arch.view_dims[v], &format!("encoder {v} input"))?;
    run_single(params, x, |g, x| build_encode(g, arch, x, v))
}

pub fn fuse(params: &ModelParams, hs: &[Tensor2]) -> Result<Tensor2> {
    let arch = &params.arch;
    if hs.len() != arch.views() {
        return Err(Error::dim("fusion input", format!("expected {} views, got {}", arch.views(), hs.len())));
    }
    let rows = hs[0].rows();
    for (v, h) in hs.iter().enumerate() {
        expect_width(h, arch.output_dim, &format!("fusion input {v}"))?;
        if h.rows() != rows {
            return Err(Error::dim(format!("fusion input {v}"), format!("batch {} vs {rows}", h.rows())));
        }
    }
    let mut g = Graph::new();
    let names: Vec<String> = (0..hs.len()).map(|v| format!("h{v}")).collect();
    let ids: Vec<_> = names.iter().map(|n| g.input(n.as_str())).collect();
    let z = build_fuse(&mut g, &ids);
    let mut b = Bindings::new().with_set(&params.params);
    for (n, h) in names.iter().zip(hs) {
        b.bind(n.as_str(), h);
    }
    Ok(g.forward(z, &b)?.clone())
}

pub fn project(params: &ModelParams, r: &Tensor2) -> Result<Tensor2> {
    expect_width(r, params.arch.output_dim, "projection input")?;
    run_single(params, r, build_project)
}

pub fn prototype_scores(params: &ModelParams, r: &Tensor2) -> Result<Tensor2> {
    expect_width(r, params.arch.output_dim, "prototype input")?;
    run_single(params, r, build_prototype_scores)
}

/// View-specific and fused representations of a full dataset.
#[derive(Clone, Debug)]
pub struct Embeddings {
    pub h: Vec<Tensor2>,
    pub z: Tensor2,
}

/// Runs encoders and fusion over all rows.
pub fn embed(params: &ModelParams, views: &[Tensor2]) -> Result<Embeddings> {
    let arch = &params.arch;
    if views.len() != arch.views() {
        return Err(Error::dim("embed", format!("expected {} views, got {}", arch.views(), views.len())));
    }
    for (v, x) in views.iter().enumerate() {
        expect_width(x, arch.view_dims[v], &format!("view {v}"))?;
    }
    let mut g = Graph::new();
    let net = build_network(&mut g, arch);
    let names: Vec<String> = (0..views.len()).map(view_input).collect();
    let mut b = Bindings::new().with_set(&params.params);
    for (n, x) in names.iter().zip(views) {
        b.bind(n.as_str(), x);
    }
    g.forward(net.z, &b)?;
    Ok(Embeddings {
        h: net.h.iter().map(|&id| g.value(id).expect("evaluated").clone()).collect(),
        z: g.value(net.z).expect("evaluated").clone(),
    })
}
