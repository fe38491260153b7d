//! `mvfusion` command-line driver.
//!
//! ```text
//! mvfusion synth    --classes 3 --per-class 400 --views 16,24 --seed 7 --out data/toy
//! mvfusion train    --config exp.toml [--toggle no-class] [--out runs/exp]
//! mvfusion eval     --checkpoint runs/exp/best.ckpt --data data/toy [--probe] --out runs/exp/eval
//! mvfusion embed    --checkpoint runs/exp/best.ckpt --data data/toy [--pca2d] [--views] --out runs/exp/embed
//! mvfusion ablation --config exp.toml --out runs/ablation [--run]
//! ```
//!
//! Exit status is 0 on success, 2 for configuration errors, 3 for data
//! errors and 4 for numeric failures.
//!
//! Output files:
//!
//! | command    | file                  | header                                 |
//! |------------|-----------------------|----------------------------------------|
//! | `train`    | `best.ckpt`           | checkpoint of the lowest-loss seed     |
//! | `train`    | `history.csv`         | `epoch,total,instance,class` (best)    |
//! | `train`    | `history_seed<S>.csv` | `epoch,total,instance,class`           |
//! | `train`    | `runs.csv`            | `seed,final_loss,selected`             |
//! | `train`    | `manifest.toml`       | resolved config                        |
//! | `eval`     | `clustering.csv`      | `ACC,NMI,ARI`                          |
//! | `eval`     | `classification.csv`  | `ACC,Precision,F-score`                |
//! | `embed`    | `z.csv`               | `z0,…` or `pc1,pc2` with `--pca2d`     |
//! | `embed`    | `h<V>.csv`            | `h<V>_0,…` or `pc1,pc2`                |
//! | `ablation` | `<row>/manifest.toml` | one per ablation row                   |
//! | `ablation` | `ablation.csv`        | `row,ACC,NMI,ARI` (with `--run`)       |

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mvfusion::data::{save_dataset, split, synth_gaussian, MultiViewDataset, SplitSpec, SynthSpec};
use mvfusion::diffcore::Tensor2;
use mvfusion::eval::{
    classification_csv, clustering_csv, evaluate_clustering, linear_probe, pca_2d, table, ProbeConfig,
    CLASSIFICATION_HEADER, CLUSTERING_HEADER,
};
use mvfusion::model::{embed, read_checkpoint, write_checkpoint, ModelParams};
use mvfusion::train::{multi_seed, write_history_csv};
use mvfusion::{Error, ErrorKind, Execution, Result};

use config::{to_toml, ExperimentConfig, Resolved};

#[derive(Parser)]
#[command(name = "mvfusion", version, about = "Multi-view hybrid contrastive fusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Gaussian multi-view dataset.
    Synth {
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        per_class: usize,
        /// Comma-separated view widths.
        #[arg(long, value_delimiter = ',', required = true)]
        views: Vec<usize>,
        /// Noise standard deviation, one value for all views or one per view.
        #[arg(long, value_delimiter = ',', default_value = "0.25")]
        noise: Vec<f64>,
        /// Fraction of samples whose last view is corrupted.
        #[arg(long, default_value_t = 0.0)]
        corruption: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train over every configured seed and keep the lowest-loss run.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Switch off part of the objective.
        #[arg(long, value_enum)]
        toggle: Vec<Toggle>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster the fused representation and optionally fit a linear probe.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Number of clusters; defaults to the number of classes.
        #[arg(long)]
        clusters: Option<usize>,
        /// Also train a linear probe on the train split and score the test split.
        #[arg(long)]
        probe: bool,
        #[arg(long, value_delimiter = ',', default_value = "0.8,0.1,0.1")]
        split: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        /// k-means seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the fused representation, optionally per view and in 2-D.
    Embed {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        pca2d: bool,
        /// Also write each view-specific representation.
        #[arg(long)]
        views: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one manifest per ablation row, and train them with `--run`.
    Ablation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        run: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Toggle {
    NoClass,
    NoInstance,
    NoAsym,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config | ErrorKind::Contract => 2,
        ErrorKind::Data | ErrorKind::Dimension | ErrorKind::Io => 3,
        ErrorKind::Numeric => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { classes, per_class, views, noise, corruption, seed, out } => {
            cmd_synth(classes, per_class, views, noise, corruption, seed, &out)
        }
        Command::Train { config, toggle, out } => cmd_train(&config, &toggle, out.as_deref()),
        Command::Eval { checkpoint, data, clusters, probe, split, split_seed, seed, out } => {
            let split = split_spec(&split, split_seed);
            split.and_then(|s| {
                let opts = EvalOptions { clusters, probe: probe.then_some(s), seed, probe_cfg: ProbeConfig::default() };
                cmd_eval(&checkpoint, &data, &opts, &out)
            })
        }
        Command::Embed { checkpoint, data, pca2d, views, out } => cmd_embed(&checkpoint, &data, pca2d, views, &out),
        Command::Ablation { config, out, run } => cmd_ablation(&config, &out, run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

fn split_spec(ratios: &[f64], seed: u64) -> Result<SplitSpec> {
    match ratios {
        &[train, val, test] => Ok(SplitSpec { train, val, test, seed }),
        _ => Err(Error::Config(format!("--split takes three ratios, got {}", ratios.len()))),
    }
}

fn cmd_synth(
    classes: usize,
    per_class: usize,
    views: Vec<usize>,
    noise: Vec<f64>,
    corruption: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let view_noise = match noise.as_slice() {
        &[s] => vec![s; views.len()],
        _ => noise,
    };
    let spec = SynthSpec { classes, per_class, view_dims: views, view_noise, corruption, seed };
    let ds = synth_gaussian(&spec)?;
    save_dataset(&ds, out)?;
    println!("wrote {} samples, {} views to {}", ds.len(), ds.num_views(), out.display());
    Ok(())
}

fn config_base(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn apply_toggles(cfg: &mut ExperimentConfig, toggles: &[Toggle]) {
    for t in toggles {
        match t {
            Toggle::NoClass => cfg.class = Some(false),
            Toggle::NoInstance => cfg.instance = Some(false),
            Toggle::NoAsym => cfg.asymmetric = Some(false),
        }
    }
}

fn cmd_train(config: &Path, toggles: &[Toggle], out: Option<&Path>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    apply_toggles(&mut cfg, toggles);
    let (mut resolved, ds) = cfg.resolve(&config_base(config), None)?;
    if let Some(out) = out {
        resolved.output = out.to_path_buf();
    }
    train_resolved(&resolved, &ds)?;
    Ok(())
}

/// Trains every seed and writes the run artifacts. Returns the best model.
fn train_resolved(resolved: &Resolved, ds: &MultiViewDataset) -> Result<ModelParams> {
    let out = &resolved.output;
    create_dir(out)?;
    write_file(&out.join("manifest.toml"), &to_toml(&resolved.manifest())?)?;
    let result = multi_seed(&resolved.train, ds, Execution::default())?;
    let mut summary = String::from("seed,final_loss,selected\n");
    for (i, run) in result.runs.iter().enumerate() {
        write_history_csv(&run.history, out.join(format!("history_seed{}.csv", run.seed)))?;
        writeln!(summary, "{},{:?},{}", run.seed, run.final_loss(), i == result.best).expect("string write");
    }
    write_file(&out.join("runs.csv"), &summary)?;
    let best = result.best();
    write_history_csv(&best.history, out.join("history.csv"))?;
    write_checkpoint(&best.params, out.join("best.ckpt"))?;
    println!(
        "{}: best seed {} with final loss {:.6}",
        out.display(),
        best.seed,
        best.final_loss()
    );
    Ok(best.params.clone())
}

struct EvalOptions {
    clusters: Option<usize>,
    probe: Option<SplitSpec>,
    seed: u64,
    probe_cfg: ProbeConfig,
}

fn cmd_eval(checkpoint: &Path, data: &Path, opts: &EvalOptions, out: &Path) -> Result<()> {
    let params = read_checkpoint(checkpoint)?;
    let ds = mvfusion::data::load_dataset(data)?;
    let rows = evaluate(&params, &ds, opts, out)?;
    print!("{}", rows);
    Ok(())
}

/// Writes the report CSVs and returns a printable summary.
fn evaluate(params: &ModelParams, ds: &MultiViewDataset, opts: &EvalOptions, out: &Path) -> Result<String> {
    let truth = ds.labels().ok_or_else(|| Error::NoGroundTruth(format!("clustering evaluation of `{}`", ds.name())))?;
    let k = opts.clusters.or(ds.classes()).expect("labelled datasets know their class count");
    let z = embed(params, ds.views())?.z;
    let report = evaluate_clustering(&z, truth, k, opts.seed)?;
    create_dir(out)?;
    write_file(&out.join("clustering.csv"), &clustering_csv(&report))?;
    let mut text = table(CLUSTERING_HEADER, &[("clustering".into(), [report.acc, report.nmi, report.ari])]);
    if let Some(spec) = &opts.probe {
        let parts = split(ds, spec)?;
        let ztr = embed(params, parts.train.views())?.z;
        let zte = embed(params, parts.test.views())?.z;
        let ytr = parts.train.labels().expect("split keeps labels");
        let yte = parts.test.labels().expect("split keeps labels");
        let rep = linear_probe((&ztr, ytr), (&zte, yte), &opts.probe_cfg)?;
        write_file(&out.join("classification.csv"), &classification_csv(&rep))?;
        text.push_str(&table(CLASSIFICATION_HEADER, &[("probe".into(), [rep.acc, rep.precision, rep.f1])]));
    }
    Ok(text)
}

fn matrix_csv(header: &[String], t: &Tensor2) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in 0..t.rows() {
        s.push_str(&mvfusion::data::format_row(t.row(r)));
        s.push('\n');
    }
    s
}

fn write_embedding(path: &Path, prefix: &str, t: &Tensor2, pca2d: bool) -> Result<()> {
    let (t, header) = if pca2d {
        (pca_2d(t)?, vec!["pc1".to_string(), "pc2".to_string()])
    } else {
        (t.clone(), (0..t.cols()).map(|c| format!("{prefix}{c}")).collect())
    };
    write_file(path, &matrix_csv(&header, &t))
}

fn cmd_embed(checkpoint: &Path, data: &Path, pca2d: bool, views: bool, out: &Path) -> Result<()> {
    let params = read_checkpoint(checkpoint)?;
    let ds = mvfusion::data::load_dataset(data)?;
    let e = embed(&params, ds.views())?;
    create_dir(out)?;
    write_embedding(&out.join("z.csv"), "z", &e.z, pca2d)?;
    if views {
        for (v, h) in e.h.iter().enumerate() {
            write_embedding(&out.join(format!("h{v}.csv")), &format!("h{v}_"), h, pca2d)?;
        }
    }
    println!("wrote {} rows to {}", e.z.rows(), out.display());
    Ok(())
}

/// Ablation rows as (name, instance, class, asymmetric).
const ABLATION_ROWS: [(&str, bool, bool, bool); 6] = [
    ("ins-cls-asym", true, true, true),
    ("ins", true, false, false),
    ("ins-asym", true, false, true),
    ("cls", false, true, false),
    ("cls-asym", false, true, true),
    ("ins-cls", true, true, false),
];

fn cmd_ablation(config: &Path, out: &Path, run: bool) -> Result<()> {
    let base_cfg = ExperimentConfig::load(config)?;
    let base = config_base(config);
    let ds = base_cfg.resolve(&base, None)?.1;
    let mut rows = Vec::new();
    for (name, instance, class, asymmetric) in ABLATION_ROWS {
        let cfg = ExperimentConfig {
            instance: Some(instance),
            class: Some(class),
            asymmetric: Some(asymmetric),
            ..base_cfg.clone()
        };
        let (mut resolved, _) = cfg.resolve(&base, Some(&ds))?;
        resolved.output = out.join(name);
        create_dir(&resolved.output)?;
        write_file(&resolved.output.join("manifest.toml"), &to_toml(&resolved.manifest())?)?;
        rows.push((name, resolved));
    }
    println!("wrote {} manifests under {}", rows.len(), out.display());
    if !run {
        return Ok(());
    }
    let mut scores = Vec::new();
    for (name, resolved) in &rows {
        let params = train_resolved(resolved, &ds)?;
        if let Some(truth) = ds.labels() {
            let z = embed(&params, ds.views())?.z;
            let r = evaluate_clustering(&z, truth, resolved.clusters, resolved.eval_seed)?;
            scores.push((name.to_string(), [r.acc, r.nmi, r.ari]));
        }
    }
    if !scores.is_empty() {
        let mut csv = format!("row,{CLUSTERING_HEADER}\n");
        for (name, [a, n, r]) in &scores {
            writeln!(csv, "{name},{a:?},{n:?},{r:?}").expect("string write");
        }
        write_file(&out.join("ablation.csv"), &csv)?;
        print!("{}", table(CLUSTERING_HEADER, &scores));
    }
    Ok(())
}
