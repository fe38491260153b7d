//! Experiment configuration.
//!
//! A config is a flat TOML file. Every key is optional; missing keys take
//! the defaults below, so an empty file trains the reference setup on the
//! dataset given by `data` or `[synth]`.
//!
//! | key                 | default              |
//! |---------------------|----------------------|
//! | `data`              | unset (or `[synth]`) |
//! | `output`            | `runs/default`       |
//! | `lr`                | `1e-4`               |
//! | `epochs`            | `100`                |
//! | `batch_size`        | `256`                |
//! | `seeds`             | `[0, 1, 2, 3, 4]`    |
//! | `shuffle`           | `true`               |
//! | `clip_norm`         | unset                |
//! | `lambda1`           | `1.0`                |
//! | `lambda2`           | `0.5`                |
//! | `lambda_ins`        | `0.005`              |
//! | `tau`               | `0.07`               |
//! | `sinkhorn_eps`      | `0.05`               |
//! | `sinkhorn_iters`    | `3`                  |
//! | `instance`          | `true`               |
//! | `class`             | `true`               |
//! | `asymmetric`        | `true`               |
//! | `center`            | `true`               |
//! | `round_targets`     | `false`              |
//! | `detach_common`     | `false`              |
//! | `output_dim`        | `128`                |
//! | `encoder_hidden`    | `[1024, 1024, 1024]` |
//! | `fusion_hidden`     | `output_dim / 2`     |
//! | `projection_hidden` | `4 * output_dim`     |
//! | `prototypes`        | number of classes    |
//! | `clusters`          | number of classes    |
//! | `probe`             | `true`               |
//! | `split`             | `[0.8, 0.1, 0.1]`    |
//! | `split_seed`        | `0`                  |
//! | `eval_seed`         | `0`                  |
//! | `probe_epochs`      | `200`                |
//! | `probe_lr`          | `0.01`               |

use std::path::{Path, PathBuf};

use mvfusion::data::{load_dataset, synth_gaussian, MultiViewDataset, SplitSpec, SynthSpec};
use mvfusion::eval::ProbeConfig;
use mvfusion::losses::{LossWeights, Toggles};
use mvfusion::model::ArchConfig;
use mvfusion::train::TrainConfig;
use mvfusion::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: Option<PathBuf>,
    pub output: Option<PathBuf>,

    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub shuffle: Option<bool>,
    pub clip_norm: Option<f64>,

    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda_ins: Option<f64>,
    pub tau: Option<f64>,
    pub sinkhorn_eps: Option<f64>,
    pub sinkhorn_iters: Option<usize>,

    pub instance: Option<bool>,
    pub class: Option<bool>,
    pub asymmetric: Option<bool>,
    pub center: Option<bool>,
    pub round_targets: Option<bool>,
    pub detach_common: Option<bool>,

    pub output_dim: Option<usize>,
    pub encoder_hidden: Option<Vec<usize>>,
    pub fusion_hidden: Option<usize>,
    pub projection_hidden: Option<usize>,
    pub prototypes: Option<usize>,
    /// Checked against the dataset when present.
    pub view_dims: Option<Vec<usize>>,

    pub clusters: Option<usize>,
    pub probe: Option<bool>,
    pub split: Option<[f64; 3]>,
    pub split_seed: Option<u64>,
    pub eval_seed: Option<u64>,
    pub probe_epochs: Option<usize>,
    pub probe_lr: Option<f64>,

    pub synth: Option<SynthSpec>,
}

/// Every setting of a run with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub data: DataSource,
    pub output: PathBuf,
    pub train: TrainConfig,
    pub clusters: usize,
    pub probe: bool,
    pub split: SplitSpec,
    pub eval_seed: u64,
    pub probe_cfg: ProbeConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Dir(PathBuf),
    Synth(SynthSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<MultiViewDataset> {
        match self {
            DataSource::Dir(p) => load_dataset(p),
            DataSource::Synth(s) => synth_gaussian(s),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::Config(format!("config file {} not found", path.display()))
            } else {
                Error::Config(format!("cannot read {}: {e}", path.display()))
            }
        })?;
        Self::parse(&text, path)
    }

    fn source(&self, base: &Path) -> Result<DataSource> {
        match (&self.data, &self.synth) {
            (Some(d), None) => Ok(DataSource::Dir(base.join(d))),
            (None, Some(s)) => Ok(DataSource::Synth(s.clone())),
            (Some(_), Some(_)) => Err(Error::Config("set either `data` or `[synth]`, not both".into())),
            (None, None) => Err(Error::Config("no data source: set `data` or a `[synth]` table".into())),
        }
    }

    /// Fills defaults. Relative paths are taken relative to `base`; the
    /// dataset supplies view widths and the class count.
    pub fn resolve(&self, base: &Path, ds: Option<&MultiViewDataset>) -> Result<(Resolved, MultiViewDataset)> {
        let data = self.source(base)?;
        let ds = match ds {
            Some(d) => d.clone(),
            None => data.load()?,
        };
        let classes = ds.classes();
        if let Some(dims) = &self.view_dims {
            if dims != &ds.view_dims() {
                return Err(Error::Config(format!(
                    "view_dims {dims:?} do not match the dataset's {:?}",
                    ds.view_dims()
                )));
            }
        }
        let k_default = || {
            classes.ok_or_else(|| Error::Config("`prototypes` is required when the dataset has no labels".into()))
        };
        let output_dim = self.output_dim.unwrap_or(128);
        let mut arch = ArchConfig::new(ds.view_dims(), output_dim, match self.prototypes {
            Some(k) => k,
            None => k_default()?,
        });
        if let Some(h) = &self.encoder_hidden {
            arch.encoder_hidden = h.clone();
        }
        if let Some(h) = self.fusion_hidden {
            arch.fusion_hidden = h;
        }
        if let Some(h) = self.projection_hidden {
            arch.projection_hidden = h;
        }

        let wd = LossWeights::default();
        let weights = LossWeights {
            lambda1: self.lambda1.unwrap_or(wd.lambda1),
            lambda2: self.lambda2.unwrap_or(wd.lambda2),
            lambda_ins: self.lambda_ins.unwrap_or(wd.lambda_ins),
            tau: self.tau.unwrap_or(wd.tau),
            sinkhorn_eps: self.sinkhorn_eps.unwrap_or(wd.sinkhorn_eps),
            sinkhorn_iters: self.sinkhorn_iters.unwrap_or(wd.sinkhorn_iters),
        };
        let td = Toggles::default();
        let toggles = Toggles {
            instance: self.instance.unwrap_or(td.instance),
            class: self.class.unwrap_or(td.class),
            asymmetric: self.asymmetric.unwrap_or(td.asymmetric),
            center: self.center.unwrap_or(td.center),
            round_targets: self.round_targets.unwrap_or(td.round_targets),
            detach_common: self.detach_common.unwrap_or(td.detach_common),
        };
        let mut train = TrainConfig::new(arch);
        train.weights = weights;
        train.toggles = toggles;
        train.lr = self.lr.unwrap_or(train.lr);
        train.epochs = self.epochs.unwrap_or(train.epochs);
        train.batch_size = self.batch_size.unwrap_or(train.batch_size);
        train.shuffle = self.shuffle.unwrap_or(train.shuffle);
        train.clip_norm = self.clip_norm;
        if let Some(s) = &self.seeds {
            train.seeds = s.clone();
        }
        train.validate()?;

        let clusters = match self.clusters {
            Some(k) => k,
            None => classes.unwrap_or(train.arch.prototypes),
        };
        let [tr, va, te] = self.split.unwrap_or([0.8, 0.1, 0.1]);
        let pd = ProbeConfig::default();
        let resolved = Resolved {
            data,
            output: base.join(self.output.clone().unwrap_or_else(|| PathBuf::from("runs/default"))),
            train,
            clusters,
            probe: self.probe.unwrap_or(true),
            split: SplitSpec { train: tr, val: va, test: te, seed: self.split_seed.unwrap_or(0) },
            eval_seed: self.eval_seed.unwrap_or(0),
            probe_cfg: ProbeConfig {
                epochs: self.probe_epochs.unwrap_or(pd.epochs),
                lr: self.probe_lr.unwrap_or(pd.lr),
            },
        };
        Ok((resolved, ds))
    }
}

impl Resolved {
    /// The fully explicit config, usable as input to reproduce the run.
    pub fn manifest(&self) -> ExperimentConfig {
        let t = &self.train;
        let (data, synth) = match &self.data {
            DataSource::Dir(p) => (Some(absolute(p)), None),
            DataSource::Synth(s) => (None, Some(s.clone())),
        };
        ExperimentConfig {
            data,
            output: Some(absolute(&self.output)),
            lr: Some(t.lr),
            epochs: Some(t.epochs),
            batch_size: Some(t.batch_size),
            seeds: Some(t.seeds.clone()),
            shuffle: Some(t.shuffle),
            clip_norm: t.clip_norm,
            lambda1: Some(t.weights.lambda1),
            lambda2: Some(t.weights.lambda2),
            lambda_ins: Some(t.weights.lambda_ins),
            tau: Some(t.weights.tau),
            sinkhorn_eps: Some(t.weights.sinkhorn_eps),
            sinkhorn_iters: Some(t.weights.sinkhorn_iters),
            instance: Some(t.toggles.instance),
            class: Some(t.toggles.class),
            asymmetric: Some(t.toggles.asymmetric),
            center: Some(t.toggles.center),
            round_targets: Some(t.toggles.round_targets),
            detach_common: Some(t.toggles.detach_common),
            output_dim: Some(t.arch.output_dim),
            encoder_hidden: Some(t.arch.encoder_hidden.clone()),
            fusion_hidden: Some(t.arch.fusion_hidden),
            projection_hidden: Some(t.arch.projection_hidden),
            prototypes: Some(t.arch.prototypes),
            view_dims: Some(t.arch.view_dims.clone()),
            clusters: Some(self.clusters),
            probe: Some(self.probe),
            split: Some([self.split.train, self.split.val, self.split.test]),
            split_seed: Some(self.split.seed),
            eval_seed: Some(self.eval_seed),
            probe_epochs: Some(self.probe_cfg.epochs),
            probe_lr: Some(self.probe_cfg.lr),
            synth,
        }
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

pub fn to_toml(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(format!("cannot serialise config: {e}")))
}
