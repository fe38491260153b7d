//! Mini-batch training: Adam over every network parameter, multi-seed runs
//! and lowest-loss selection.

mod adam;

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, clip_global_norm, AdamState, BETA1, BETA2, EPSILON};

use crate::data::{batches, MultiViewDataset};
use crate::diffcore::{Bindings, Graph};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::losses::{breakdown, build_objective, LossWeights, Toggles};
use crate::model::{build_network, init_params, view_input, ArchConfig, ModelParams};

// Keeps the shuffle stream independent of the initialisation stream.
const SHUFFLE_SALT: u64 = 0x5eed_0f5e_ed5e_ed01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub shuffle: bool,
    /// Optional global gradient-norm cap. Off by default.
    pub clip_norm: Option<f64>,
    pub weights: LossWeights,
    pub toggles: Toggles,
    pub arch: ArchConfig,
}

impl TrainConfig {
    /// Defaults: lr 1e-4, 100 epochs, batch 256, seeds 0–4.
    pub fn new(arch: ArchConfig) -> Self {
        Self {
            lr: 1e-4,
            epochs: 100,
            batch_size: 256,
            seeds: (0..5).collect(),
            shuffle: true,
            clip_norm: None,
            weights: LossWeights::default(),
            toggles: Toggles::default(),
            arch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!("batch_size must be at least 2, got {}", self.batch_size)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("clip_norm must be positive, got {c}")));
            }
        }
        self.weights.validate()?;
        self.toggles.validate()?;
        self.arch.validate()
    }
}

/// Mean loss terms over the batches of one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub total: f64,
    pub instance: Option<f64>,
    pub class: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub params: ModelParams,
    pub history: Vec<EpochLoss>,
    pub seed: u64,
    pub wall_time: Duration,
}

impl RunResult {
    pub fn final_loss(&self) -> f64 {
        self.history.last().map_or(f64::INFINITY, |e| e.total)
    }
}

fn check_dataset(cfg: &TrainConfig, ds: &MultiViewDataset) -> Result<usize> {
    if ds.view_dims() != cfg.arch.view_dims {
        return Err(Error::dim(
            "dataset",
            format!("view widths {:?} do not match architecture {:?}", ds.view_dims(), cfg.arch.view_dims),
        ));
    }
    let per_epoch = ds.len() / cfg.batch_size;
    if per_epoch == 0 {
        return Err(Error::Config(format!(
            "batch_size {} exceeds the {} available samples",
            cfg.batch_size,
            ds.len()
        )));
    }
    Ok(per_epoch)
}

/// Trains one model from `seed`.
pub fn train_run(cfg: &TrainConfig, ds: &MultiViewDataset, seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    check_dataset(cfg, ds)?;
    let start = Instant::now();
    let mut params = init_params(&cfg.arch, seed)?;
    let mut state = AdamState::new(params.params());
    let mut order_rng = ChaCha8Rng::seed_from_u64(seed ^ SHUFFLE_SALT);
    let input_names: Vec<String> = (0..cfg.arch.views()).map(view_input).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let epoch_seed: u64 = order_rng.random();
        let mut sums = (0.0, 0.0, 0.0);
        let mut last = None;
        let batch_list = batches(ds, cfg.batch_size, cfg.shuffle, epoch_seed)?;
        for batch in &batch_list {
            let mut g = Graph::new();
            let net = build_network(&mut g, &cfg.arch);
            let nodes = build_objective(&mut g, net.z, &net.h, &cfg.weights, &cfg.toggles)?;
            let mut grads = {
                let mut b = Bindings::new().with_set(params.params());
                for (n, x) in input_names.iter().zip(&batch.views) {
                    b.bind(n.as_str(), x);
                }
                g.forward(nodes.total, &b)?;
                g.backward(nodes.total)?
            };
            let terms = breakdown(&g, &nodes, &cfg.weights);
            sums.0 += terms.total;
            sums.1 += terms.instance.unwrap_or(0.0);
            sums.2 += terms.class.unwrap_or(0.0);
            last = Some(terms);
            if let Some(c) = cfg.clip_norm {
                clip_global_norm(&mut grads, c);
            }
            adam_step(params.params_mut(), &grads, &mut state, cfg.lr)?;
        }
        let n = batch_list.len() as f64;
        let last = last.expect("at least one batch per epoch");
        history.push(EpochLoss {
            epoch,
            total: sums.0 / n,
            instance: last.instance.map(|_| sums.1 / n),
            class: last.class.map(|_| sums.2 / n),
        });
    }

    Ok(RunResult { params, history, seed, wall_time: start.elapsed() })
}

/// Index of the run with the lowest final total loss; equal losses go to
/// the lowest seed.
pub fn select_best(runs: &[RunResult]) -> Option<usize> {
    (0..runs.len()).min_by(|&a, &b| {
        runs[a]
            .final_loss()
            .total_cmp(&runs[b].final_loss())
            .then(runs[a].seed.cmp(&runs[b].seed))
    })
}

#[derive(Clone, Debug)]
pub struct MultiSeedResult {
    /// One run per configured seed, in configuration order.
    pub runs: Vec<RunResult>,
    pub best: usize,
}

impl MultiSeedResult {
    pub fn best(&self) -> &RunResult {
        &self.runs[self.best]
    }
}

/// Trains one run per seed, concurrently under [`Execution::Parallel`].
pub fn multi_seed(cfg: &TrainConfig, ds: &MultiViewDataset, exec: Execution) -> Result<MultiSeedResult> {
    cfg.validate()?;
    check_dataset(cfg, ds)?;
    let runs = exec.try_map(cfg.seeds.clone(), |seed| train_run(cfg, ds, seed))?;
    let best = select_best(&runs).expect("at least one seed");
    Ok(MultiSeedResult { runs, best })
}

pub const HISTORY_HEADER: &str = "epoch,total,instance,class";

/// Loss history as CSV. Disabled terms are left empty.
pub fn write_history<W: Write>(out: &mut W, history: &[EpochLoss]) -> std::io::Result<()> {
    let opt = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    writeln!(out, "{HISTORY_HEADER}")?;
    for e in history {
        writeln!(out, "{},{:?},{},{}", e.epoch, e.total, opt(e.instance), opt(e.class))?;
    }
    Ok(())
}

pub fn write_history_csv(history: &[EpochLoss], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_history(&mut buf, history).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
