use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use resilience_core::experiments::{self, IdxPaths};
use resilience_core::manifest::{DatasetSource, Experiment, Manifest};
use resilience_core::resources::{estimate, fit_cost_model, CostModel, REFERENCE_ANCHORS};

/// Digital-twin experiments for noisy Hadamard-test inner products.
#[derive(Debug, Parser)]
#[command(name = "resilience-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON manifest; keys override the subcommand defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides config.seed).
    #[arg(long, global = true, env = "RESILIENCE_LAB_SEED")]
    seed: Option<u64>,
    /// Output directory (default: out/<experiment>).
    #[arg(long, global = true, env = "RESILIENCE_LAB_OUT")]
    out: Option<PathBuf>,
    /// MNIST IDX image file; switches the dataset source from synthetic.
    #[arg(long, global = true, requires = "mnist_labels")]
    mnist_images: Option<PathBuf>,
    #[arg(long, global = true, requires = "mnist_images")]
    mnist_labels: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the shrink product on 100 probes and emit the S-curve.
    Calibrate100,
    /// Twin versus drift-emulated hardware on 512 sorted probes.
    Sorted512,
    /// Gate-noise sweep at fixed readout error.
    NoiseSweep,
    /// Twin rank fidelity across shot budgets.
    ShotSweep,
    /// Twin and hardware rank fidelity across feature counts.
    DepthAblation,
    /// Resilient fraction and accuracy over a (lambda, shots) grid.
    ResilienceRegion,
    /// Survival and regime label across circuit depth.
    CoherenceWall,
    /// Monolithic versus partitioned evaluation under one shot budget.
    Distrib(DistribArgs),
    /// Per-sample noisy classification.
    Classify(ClassifyArgs),
    /// Cost-model estimates, one CSV row per N.
    Resources(ResourcesArgs),
    /// Print the default manifest for an experiment.
    Manifest { experiment: String },
}

#[derive(Debug, Args)]
struct DistribArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Total shot budget.
    #[arg(long)]
    shots: Option<u64>,
    /// Give every slice the full budget instead of an equal share.
    #[arg(long)]
    unfair: bool,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Debug, Args)]
struct ResourcesArgs {
    /// Feature counts (powers of two); repeatable.
    #[arg(long = "n", required = true, num_args = 1..)]
    n: Vec<usize>,
    /// Coherence depth for the survival column.
    #[arg(long)]
    d_max: Option<f64>,
}

fn load_manifest(experiment: Experiment, common: &Common) -> Result<Manifest> {
    let mut m = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Manifest::from_json_overlay(experiment, &text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Manifest::default_for(experiment),
    };
    if let Some(seed) = common.seed {
        m.config.seed = seed;
    }
    if common.mnist_images.is_some() {
        m.dataset_source = DatasetSource::IdxFiles;
    }
    m.output_dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    Ok(m)
}

fn set_features(m: &mut Manifest, n: Option<usize>) {
    if let Some(n) = n {
        m.params.n_features = n;
        m.params.synthetic.n_features = n;
    }
}

fn execute(m: Manifest, common: &Common) -> Result<()> {
    m.validate()?;
    let idx = match (&common.mnist_images, &common.mnist_labels) {
        (Some(images), Some(labels)) => Some(IdxPaths {
            images: images.clone(),
            labels: labels.clone(),
        }),
        _ => None,
    };
    let output = experiments::run(&m, idx.as_ref())?;
    let m = m.stamped();
    let written = experiments::write_run(&m.output_dir, &m, &output)?;
    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    print_json(&output.summary)
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn resources(args: &ResourcesArgs, common: &Common) -> Result<()> {
    let model = match args.d_max {
        Some(d) => fit_cost_model(&REFERENCE_ANCHORS, d)?,
        None => CostModel::default(),
    };
    let mut body = String::from("n_features,n_qubits,cnot_count,hw_depth,survival,extrapolated\n");
    for &n in &args.n {
        let e = estimate(n, &model)?;
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.n_features, e.n_qubits, e.cnot_count, e.hw_depth, e.survival, e.extrapolated
        ));
    }
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("resources.csv");
        fs::write(&path, &body).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    std::io::stdout().write_all(body.as_bytes())?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let common = &cli.common;
    let plain = |e: Experiment| -> Result<()> { execute(load_manifest(e, common)?, common) };
    match &cli.command {
        Command::Calibrate100 => plain(Experiment::Calibrate100),
        Command::Sorted512 => plain(Experiment::Sorted512),
        Command::NoiseSweep => plain(Experiment::NoiseSweep),
        Command::ShotSweep => plain(Experiment::ShotSweep),
        Command::DepthAblation => plain(Experiment::DepthAblation),
        Command::ResilienceRegion => plain(Experiment::ResilienceRegion),
        Command::CoherenceWall => plain(Experiment::CoherenceWall),
        Command::Distrib(a) => {
            let mut m = load_manifest(Experiment::DistribCompare, common)?;
            set_features(&mut m, a.n);
            if let Some(k) = a.k {
                m.params.partitions = k;
            }
            if let Some(s) = a.shots {
                m.config.shots = s;
            }
            if a.unfair {
                m.params.fair_budget = false;
            }
            execute(m, common)
        }
        Command::Classify(a) => {
            let mut m = load_manifest(Experiment::ClassifyMnist, common)?;
            set_features(&mut m, a.n);
            if let Some(s) = a.shots {
                m.config.shots = s;
            }
            execute(m, common)
        }
        Command::Resources(a) => resources(a, common),
        Command::Manifest { experiment } => {
            let e: Experiment = experiment.parse()?;
            print_json(&serde_json::to_value(Manifest::default_for(e))?)
        }
    }
}
