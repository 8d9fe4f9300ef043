use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use voxelwise_core::pipeline::{self, PipelineConfig};
use voxelwise_core::synth::SynthSpec;
use voxelwise_core::tensor_store::{read_json, read_tensor};

/// Voxelwise encoding of fMRI responses from compressed video-network activations.
#[derive(Parser)]
#[command(name = "voxelwise", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config (a synthetic dataset spec for `synth`, a pipeline config otherwise).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (tensors, manifest, ground truth).
    Synth(Common),
    /// Compress activations into one design matrix per representation.
    Compress(Common),
    /// Fit and score every representation with leave-one-session-out ridge.
    FitScore(Common),
    /// Score differences between layers.
    Contrast(Common),
    /// Sign-profile parcellation of active voxels.
    Parcellate(Common),
    /// Compare PCA, APIC and APBIC on two outer splits.
    BenchmarkCompression(Common),
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&common.config)
        .with_context(|| format!("loading config {}", common.config.display()))?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Every declared output must exist and decode before we report success.
fn verify_tensors<'a>(root: &Path, paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<()> {
    for rel in paths {
        let path = root.join(rel);
        read_tensor(&path).with_context(|| format!("validating output {}", path.display()))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(common) => {
            let mut spec: SynthSpec = read_json(&common.config)
                .with_context(|| format!("loading synthetic spec {}", common.config.display()))?;
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            let Some(out) = common.out else {
                bail!("synth needs --out DIR");
            };
            let manifest = pipeline::run_synth(&spec, &out)?;
            voxelwise_core::tensor_store::DatasetManifest::load(&manifest)
                .context("validating written manifest")?;
            println!("{}", manifest.display());
        }
        Command::Compress(common) => {
            let cfg = load_config(&common)?;
            let records = pipeline::run_compress(&cfg)?;
            verify_tensors(&cfg.output_dir, records.iter().map(|r| &r.path))?;
            for r in &records {
                println!(
                    "{}\t{} x {}",
                    r.representation_id, r.n_samples, r.n_features
                );
            }
        }
        Command::FitScore(common) => {
            let cfg = load_config(&common)?;
            let report = pipeline::run_fit_score(&cfg)?;
            verify_tensors(
                &cfg.output_dir,
                report.representations.iter().map(|r| &r.scores_path),
            )?;
            for r in &report.representations {
                let alphas: Vec<String> = r
                    .splits
                    .iter()
                    .map(|s| format!("{:.3e}", s.selection.chosen_alpha))
                    .collect();
                println!(
                    "{}\tvoxels>{}: {}\talphas: {}",
                    r.representation_id,
                    cfg.ridge.selection_threshold,
                    r.voxels_above_threshold,
                    alphas.join(",")
                );
            }
        }
        Command::Contrast(common) => {
            let cfg = load_config(&common)?;
            let records = pipeline::run_contrast(&cfg)?;
            verify_tensors(&cfg.output_dir, records.iter().map(|r| &r.path))?;
            for r in &records {
                println!(
                    "{}\t+{} -{} flagged {}",
                    r.contrast_id, r.positive, r.negative, r.flagged
                );
            }
        }
        Command::Parcellate(common) => {
            let cfg = load_config(&common)?;
            let (_, table) = pipeline::run_parcellate(&cfg)?;
            let profile = cfg
                .output_dir
                .join(pipeline::PROFILE_DIR)
                .join("profile.dvft");
            pipeline::read_profile(&profile)
                .with_context(|| format!("validating {}", profile.display()))?;
            print!("{table}");
        }
        Command::BenchmarkCompression(common) => {
            let cfg = load_config(&common)?;
            let report = pipeline::run_benchmark(&cfg)?;
            let csv = cfg
                .output_dir
                .join(pipeline::BENCHMARK_DIR)
                .join("benchmark.csv");
            let text = std::fs::read_to_string(&csv)
                .with_context(|| format!("validating {}", csv.display()))?;
            if text.lines().count() != report.rows.len() + 1 {
                bail!("{} is incomplete", csv.display());
            }
            print!("{text}");
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VOXELWISE_LOG", "warn")).init();
    let threads = match &cli.command {
        Command::Synth(c)
        | Command::Compress(c)
        | Command::FitScore(c)
        | Command::Contrast(c)
        | Command::Parcellate(c)
        | Command::BenchmarkCompression(c) => c.threads,
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: configuring {n} threads: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
