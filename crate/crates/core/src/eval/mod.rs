//! Clustering and classification evaluation of learned representations.
//!
//! Clustering runs k-means on `z` and scores the partition with
//! Hungarian-matched accuracy, NMI (arithmetic normalisation) and ARI.
//! Classification trains a softmax probe on frozen features and reports
//! accuracy with macro-averaged precision and F1.

mod hungarian;
mod kmeans;
mod metrics;
mod pca;
mod probe;

pub use hungarian::{hungarian, Assignment};
pub use kmeans::{kmeans, kmeans_with, KMeans, DEFAULT_RESTARTS};
pub use metrics::{ari, clustering_acc, clustering_metrics, nmi, ClusteringReport};
pub use pca::pca_2d;
pub use probe::{classification_report, linear_probe, ClassScore, ClassificationReport, ProbeConfig};

use crate::diffcore::Tensor2;
use crate::error::Result;

/// k-means on `z` followed by [`clustering_metrics`] against `truth`.
pub fn evaluate_clustering(z: &Tensor2, truth: &[usize], k: usize, seed: u64) -> Result<ClusteringReport> {
    let km = kmeans(z, k, seed, DEFAULT_RESTARTS)?;
    let mut report = clustering_metrics(&km.labels, truth)?;
    report.inertia = Some(km.inertia);
    Ok(report)
}

pub const CLUSTERING_HEADER: &str = "ACC,NMI,ARI";
pub const CLASSIFICATION_HEADER: &str = "ACC,Precision,F-score";

pub fn clustering_csv(r: &ClusteringReport) -> String {
    format!("{CLUSTERING_HEADER}\n{:?},{:?},{:?}\n", r.acc, r.nmi, r.ari)
}

pub fn classification_csv(r: &ClassificationReport) -> String {
    format!("{CLASSIFICATION_HEADER}\n{:?},{:?},{:?}\n", r.acc, r.precision, r.f1)
}

/// Aligned text table, one row per named result, values in percent.
pub fn table(header: &str, rows: &[(String, [f64; 3])]) -> String {
    let cols: Vec<&str> = header.split(',').collect();
    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(4);
    let mut out = format!("{:<name_w$}", "");
    for c in &cols {
        out.push_str(&format!("  {c:>8}"));
    }
    out.push('\n');
    for (name, vals) in rows {
        out.push_str(&format!("{name:<name_w$}"));
        for v in vals {
            out.push_str(&format!("  {:>8.2}", v * 100.0));
        }
        out.push('\n');
    }
    out
}
