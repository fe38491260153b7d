//! Multi-view datasets: loading, synthetic generation, splits and batching.

mod batch;
mod io;
mod split;
mod synth;

pub use batch::{batches, MultiViewBatch};
pub use io::{format_row, load_dataset, parse_matrix, save_dataset, write_matrix, Meta, ViewMeta};
pub(crate) use io::parse_row;
pub use split::{split, Split, SplitSpec};
pub use synth::{synth_gaussian, SynthSpec};

use crate::diffcore::Tensor2;
use crate::error::{Error, Result};

/// `V` row-aligned views over the same `n` samples, optionally labelled.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    name: String,
    view_names: Vec<String>,
    views: Vec<Tensor2>,
    labels: Option<Vec<usize>>,
    classes: Option<usize>,
}

impl MultiViewDataset {
    pub fn new(
        name: impl Into<String>,
        view_names: Vec<String>,
        views: Vec<Tensor2>,
        labels: Option<Vec<usize>>,
        classes: Option<usize>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Meta("a dataset needs at least one view".into()));
        }
        if view_names.len() != views.len() {
            return Err(Error::Meta(format!(
                "{} view names for {} views",
                view_names.len(),
                views.len()
            )));
        }
        let n = views[0].rows();
        for (name, v) in view_names.iter().zip(&views) {
            if v.rows() != n {
                return Err(Error::RowCountMismatch {
                    view: name.clone(),
                    expected: n,
                    found: v.rows(),
                });
            }
            if let Some(pos) = v.data().iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    file: name.clone(),
                    line: pos / v.cols().max(1) + 1,
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::RowCountMismatch {
                    view: "labels".into(),
                    expected: n,
                    found: labels.len(),
                });
            }
            let classes = classes.ok_or_else(|| Error::Meta("labels given without a class count".into()))?;
            if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
                return Err(Error::LabelOutOfRange {
                    line: i + 1,
                    label: l as i64,
                    classes,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            view_names,
            views,
            labels,
            classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.views[0].rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(Tensor2::cols).collect()
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    pub fn views(&self) -> &[Tensor2] {
        &self.views
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn classes(&self) -> Option<usize> {
        self.classes
    }

    /// Rows `indices` of every view (and label), in that order.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            view_names: self.view_names.clone(),
            views: self.views.iter().map(|v| v.select_rows(indices)).collect(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            classes: self.classes,
        }
    }
}
