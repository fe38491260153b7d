//! Multi-view representation learning with hybrid contrastive fusion.
//!
//! Each view is encoded by its own MLP, the view representations are fused
//! into a common representation `z` through a residual block, and the
//! network is trained with two terms:
//!
//! * an instance-level redundancy-reduction loss that aligns `z` with every
//!   view representation (never two views directly), and
//! * a class-level swapped-prediction loss whose soft labels come from a
//!   few Sinkhorn–Knopp iterations on prototype scores.
//!
//! ```no_run
//! use mvfusion::data::{synth_gaussian, SynthSpec};
//! use mvfusion::model::ArchConfig;
//! use mvfusion::train::{multi_seed, TrainConfig};
//! use mvfusion::eval::evaluate_clustering;
//! use mvfusion::model::embed;
//! use mvfusion::Execution;
//!
//! let ds = synth_gaussian(&SynthSpec {
//!     classes: 3,
//!     per_class: 400,
//!     view_dims: vec![16, 24],
//!     view_noise: vec![0.25, 0.25],
//!     corruption: 0.2,
//!     seed: 0,
//! })?;
//! let mut cfg = TrainConfig::new(ArchConfig::new(ds.view_dims(), 128, 3));
//! cfg.epochs = 50;
//! cfg.batch_size = 128;
//! let result = multi_seed(&cfg, &ds, Execution::Parallel)?;
//! let z = embed(&result.best().params, ds.views())?.z;
//! let report = evaluate_clustering(&z, ds.labels().unwrap(), 3, 0)?;
//! println!("ACC {:.4}", report.acc);
//! # Ok::<(), mvfusion::Error>(())
//! ```

pub mod data;
pub mod diffcore;
pub mod error;
pub mod eval;
pub mod exec;
pub mod losses;
pub mod model;
pub mod train;

pub use error::{Error, ErrorKind, Result};
pub use exec::Execution;
