use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::analysis::{
    contrast_id, contrast_named, format_summary_table, parcellate, parcellation_contrasts,
    profile_summary, ContrastMap, ProfileCount, ProfileMap,
};
use crate::compression::{
    apbic_compress, apic_compress, pca_fit, resample_sessions, shift_rows, DesignMatrix, PoolSpec,
    Scheme,
};
use crate::encoder::{
    combine_splits, evaluate, evaluate_split, outer_held_sessions, Evaluation, RidgeConfig,
    ScoreMap, SplitReport,
};
use crate::error::{Error, Result};
use crate::tensor_store::{
    read_header, read_json, read_tensor, session_ranges, write_json, write_tensor, ActivationEntry,
    DatasetManifest, Dtype, Layer, LayerActivationSeries, Stream, VoxelSeries,
};

pub const DESIGNS_DIR: &str = "designs";
pub const DESIGN_INDEX: &str = "designs/designs.json";
pub const SCORES_DIR: &str = "scores";
pub const FIT_REPORT: &str = "fit_report.json";
pub const CONTRASTS_DIR: &str = "contrasts";
pub const CONTRAST_INDEX: &str = "contrasts/contrasts.json";
pub const PROFILE_DIR: &str = "profile";
pub const BENCHMARK_DIR: &str = "benchmark";

/// `"<stream>.<layer>.<scheme>"`.
pub fn representation_id(stream: Stream, layer: Layer, scheme: Scheme) -> String {
    format!("{stream}.{layer}.{scheme}")
}

/// Contrasts written by the contrast stage, as (minuend, subtrahend).
pub fn reported_contrasts() -> Vec<((Layer, Stream), (Layer, Stream))> {
    let (l1f, l2f, l4f) = (
        (Layer::L1, Stream::Flow),
        (Layer::L2, Stream::Flow),
        (Layer::L4, Stream::Flow),
    );
    let (l2r, l4r) = ((Layer::L2, Stream::Rgb), (Layer::L4, Stream::Rgb));
    vec![(l4f, l2f), (l4r, l2r), (l1f, l4r), (l2f, l4f), (l2r, l4r)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRecord {
    pub representation_id: String,
    pub stream: Stream,
    pub layer: Layer,
    pub scheme: Scheme,
    /// Relative to the output directory.
    pub path: PathBuf,
    pub n_samples: usize,
    pub n_features: usize,
    pub session_lengths: Vec<usize>,
    pub lag_trs: usize,
    /// Lag already applied to the stored rows. PCA designs hold resampled
    /// raw features; projection and lag happen per split at fit time.
    pub lag_applied: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PoolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_components: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Representation {
    pub record: DesignRecord,
    pub design: DesignMatrix,
}

/// Smallest training-set size over the outer splits.
pub fn min_train_samples(session_lengths: &[usize], outer_splits: usize) -> usize {
    let total: usize = session_lengths.iter().sum();
    let held = session_lengths
        .iter()
        .take(outer_splits)
        .copied()
        .max()
        .unwrap_or(0);
    total - held
}

fn check_components(n: usize, t_train: usize, d: usize, what: &str) -> Result<()> {
    if n > t_train {
        return Err(Error::Config(format!(
            "{what}: n_components {n} exceeds the {t_train} training samples"
        )));
    }
    if n > d {
        return Err(Error::Config(format!(
            "{what}: n_components {n} exceeds {d} features"
        )));
    }
    Ok(())
}

fn sorted_entries(manifest: &DatasetManifest) -> Vec<&ActivationEntry> {
    let mut entries: Vec<_> = manifest.activations.iter().collect();
    entries.sort_by_key(|e| (e.stream, e.layer));
    entries
}

/// Raw feature count of an activation file, read from its header.
fn raw_features(manifest: &DatasetManifest, entry: &ActivationEntry) -> Result<usize> {
    let header = read_header(manifest.resolve(&entry.path))?;
    if header.dims.len() != 4 {
        return Err(Error::Manifest(format!(
            "{}.{}: activation tensor must be 4-D, got {:?}",
            entry.stream, entry.layer, header.dims
        )));
    }
    Ok(header.dims[1..].iter().product())
}

/// How many components each layer gets.
#[derive(Debug, Clone, Copy)]
pub enum ComponentRule {
    /// Exactly this many; an error when the data cannot support it.
    Exact(usize),
    /// At most this many, capped at `T_train - 1` and the feature count.
    Capped(usize),
}

fn components_for(rule: ComponentRule, t_train: usize, d: usize, what: &str) -> Result<usize> {
    match rule {
        ComponentRule::Exact(n) => check_components(n, t_train, d, what).map(|_| n),
        ComponentRule::Capped(n) => Ok(n.min(t_train.saturating_sub(1)).min(d).max(1)),
    }
}

/// Spatial compression and TR resampling of one layer.
pub fn compress_layer(
    cfg: &PipelineConfig,
    manifest: &DatasetManifest,
    entry: &ActivationEntry,
    acts: &LayerActivationSeries,
    scheme: Scheme,
    n_components: Option<usize>,
) -> Result<Representation> {
    let dims = acts.frame_shape();
    let (stream, layer) = (acts.stream, acts.layer);
    let (frames, pool, lag) = match scheme {
        Scheme::Apic => {
            let spec = cfg.compression.apic_spec(stream, layer, dims)?;
            (apic_compress(acts, &spec)?, Some(spec), cfg.lag_trs)
        }
        Scheme::Apbic => {
            let spec = cfg.compression.apbic_spec(stream, layer, dims)?;
            (apbic_compress(acts, &spec)?, Some(spec), cfg.lag_trs)
        }
        Scheme::Pca => (acts.flatten_frames(), None, 0),
    };
    let x = resample_sessions(
        frames.view(),
        &entry.session_frames,
        &manifest.session_lengths,
        entry.frame_rate,
        manifest.tr_seconds,
        lag,
    )?;
    let id = representation_id(stream, layer, scheme);
    let design = DesignMatrix::new(x, manifest.session_lengths.clone(), id.clone())?;
    let record = DesignRecord {
        representation_id: id.clone(),
        stream,
        layer,
        scheme,
        path: PathBuf::from(format!("{DESIGNS_DIR}/{id}.dvft")),
        n_samples: design.n_samples(),
        n_features: design.n_features(),
        session_lengths: manifest.session_lengths.clone(),
        lag_trs: cfg.lag_trs,
        lag_applied: lag,
        pool,
        n_components: (scheme == Scheme::Pca).then_some(n_components).flatten(),
    };
    Ok(Representation { record, design })
}

/// Compresses every manifest layer under `scheme`, in (stream, layer) order.
///
/// PCA component counts are validated against headers before any tensor
/// data is read.
pub fn compress_all(
    cfg: &PipelineConfig,
    manifest: &DatasetManifest,
    scheme: Scheme,
    rule: ComponentRule,
    outer_splits: usize,
) -> Result<Vec<Representation>> {
    let entries = sorted_entries(manifest);
    if entries.is_empty() {
        return Err(Error::Manifest("no activation entries".into()));
    }
    let t_train = min_train_samples(&manifest.session_lengths, outer_splits);
    let mut components = Vec::with_capacity(entries.len());
    for e in &entries {
        components.push(if scheme == Scheme::Pca {
            let d = raw_features(manifest, e)?;
            Some(components_for(
                rule,
                t_train,
                d,
                &format!("{}.{}", e.stream, e.layer),
            )?)
        } else {
            None
        });
    }
    entries
        .into_iter()
        .zip(components)
        .map(|(e, n)| {
            let acts = manifest.load_activations(e)?;
            compress_layer(cfg, manifest, e, &acts, scheme, n)
        })
        .collect()
}

/// PCA learned on the training sessions of one split, applied to all rows,
/// then lagged within each session.
pub fn pca_split_design(
    raw: &DesignMatrix,
    held: usize,
    n_components: usize,
    lag_trs: usize,
) -> Result<DesignMatrix> {
    let train = raw.rows_excluding_session(held);
    let model = pca_fit(raw.data.select(Axis(0), &train).view(), n_components)?;
    let z = model.transform(raw.data.view())?;
    let mut out = Array2::<f64>::zeros(z.dim());
    for r in session_ranges(&raw.session_lengths) {
        out.slice_mut(s![r.clone(), ..])
            .assign(&shift_rows(z.slice(s![r, ..]), lag_trs));
    }
    DesignMatrix::new(
        out,
        raw.session_lengths.clone(),
        raw.representation_id.clone(),
    )
}

/// Leave-one-session-out evaluation of one representation.
pub fn evaluate_representation(
    rep: &Representation,
    y: &VoxelSeries,
    ridge: &RidgeConfig,
) -> Result<Evaluation> {
    match rep.record.scheme {
        Scheme::Pca => {
            ridge.validate()?;
            let n = rep.record.n_components.ok_or_else(|| {
                Error::Config(format!(
                    "{}: PCA design without n_components",
                    rep.record.representation_id
                ))
            })?;
            let lag = rep.record.lag_trs - rep.record.lag_applied;
            let outcomes = outer_held_sessions(rep.design.n_sessions(), ridge.outer_splits)?
                .into_iter()
                .map(|held| {
                    let design = pca_split_design(&rep.design, held, n, lag)?;
                    evaluate_split(&design, y, held, ridge)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(combine_splits(
                &rep.record.representation_id,
                y.n_voxels(),
                outcomes,
            ))
        }
        _ => evaluate(&rep.design, y, ridge),
    }
}

/// `compress`: writes one design tensor per representation plus an index.
pub fn run_compress(cfg: &PipelineConfig) -> Result<Vec<DesignRecord>> {
    let manifest = cfg.load_manifest()?;
    let reps = compress_all(
        cfg,
        &manifest,
        cfg.compression.scheme,
        ComponentRule::Exact(cfg.compression.n_components),
        cfg.ridge.outer_splits,
    )?;
    let mut records = Vec::with_capacity(reps.len());
    for rep in reps {
        write_tensor(
            cfg.output_dir.join(&rep.record.path),
            rep.design.data.view().into_dyn(),
            Dtype::F64,
        )?;
        log::info!(
            "{}: {} samples x {} features",
            rep.record.representation_id,
            rep.record.n_samples,
            rep.record.n_features
        );
        records.push(rep.record);
    }
    write_json(cfg.output_dir.join(DESIGN_INDEX), &records)?;
    Ok(records)
}

fn read_index<T: serde::de::DeserializeOwned>(out: &Path, rel: &str, producer: &str) -> Result<T> {
    let path = out.join(rel);
    if !path.exists() {
        return Err(Error::Missing(format!(
            "{} not found; run `{producer}` first",
            path.display()
        )));
    }
    read_json(path)
}

pub fn load_designs(output_dir: &Path) -> Result<Vec<Representation>> {
    let records: Vec<DesignRecord> = read_index(output_dir, DESIGN_INDEX, "compress")?;
    records
        .into_iter()
        .map(|record| {
            let data = read_tensor(output_dir.join(&record.path))?;
            let design = DesignMatrix::from_dyn(
                data,
                record.session_lengths.clone(),
                record.representation_id.clone(),
            )?;
            if design.n_features() != record.n_features {
                return Err(Error::Shape(format!(
                    "{}: index lists {} features, tensor has {}",
                    record.representation_id,
                    record.n_features,
                    design.n_features()
                )));
            }
            Ok(Representation { record, design })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub representation_id: String,
    pub stream: Stream,
    pub layer: Layer,
    pub scheme: Scheme,
    pub scores_path: PathBuf,
    pub n_features: usize,
    pub n_splits_used: usize,
    /// Voxels whose split-averaged score exceeds the selection threshold.
    pub voxels_above_threshold: usize,
    pub flagged_voxels: usize,
    pub splits: Vec<SplitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seed: u64,
    pub n_voxels: usize,
    pub n_masked_voxels: usize,
    pub ridge: RidgeConfig,
    pub representations: Vec<RepresentationReport>,
}

/// `fit-score`: evaluates every compressed representation and writes its
/// score map and the run report.
pub fn run_fit_score(cfg: &PipelineConfig) -> Result<FitReport> {
    let manifest = cfg.load_manifest()?;
    let y = manifest.load_responses()?;
    let reps = load_designs(&cfg.output_dir)?;
    let mut reports = Vec::with_capacity(reps.len());
    for rep in &reps {
        let r = &rep.record;
        if r.session_lengths != manifest.session_lengths {
            return Err(Error::Shape(format!(
                "{}: design sessions {:?} differ from manifest {:?}",
                r.representation_id, r.session_lengths, manifest.session_lengths
            )));
        }
        if r.lag_trs != cfg.lag_trs {
            return Err(Error::Config(format!(
                "{} was compressed with lag_trs {}, config says {}; rerun compress",
                r.representation_id, r.lag_trs, cfg.lag_trs
            )));
        }
        let ev = evaluate_representation(rep, &y, &cfg.ridge)?;
        let scores_path = PathBuf::from(format!("{SCORES_DIR}/{}.dvft", r.representation_id));
        ev.scores.write(
            cfg.output_dir.join(&scores_path),
            cfg.output_dir
                .join(format!("{SCORES_DIR}/{}.csv", r.representation_id)),
        )?;
        log::info!(
            "{}: {} voxels above {}",
            r.representation_id,
            ev.scores.count_above(cfg.ridge.selection_threshold),
            cfg.ridge.selection_threshold
        );
        reports.push(RepresentationReport {
            representation_id: r.representation_id.clone(),
            stream: r.stream,
            layer: r.layer,
            scheme: r.scheme,
            scores_path,
            n_features: r.n_features,
            n_splits_used: ev.scores.n_splits_used,
            voxels_above_threshold: ev.scores.count_above(cfg.ridge.selection_threshold),
            flagged_voxels: ev.scores.scores.iter().filter(|s| s.is_none()).count(),
            splits: ev.splits,
        });
    }
    let report = FitReport {
        seed: cfg.seed,
        n_voxels: y.n_voxels(),
        n_masked_voxels: y.masked_indices().len(),
        ridge: cfg.ridge.clone(),
        representations: reports,
    };
    write_json(cfg.output_dir.join(FIT_REPORT), &report)?;
    Ok(report)
}

fn load_scores(cfg: &PipelineConfig) -> Result<(FitReport, Vec<ScoreMap>)> {
    let report: FitReport = read_index(&cfg.output_dir, FIT_REPORT, "fit-score")?;
    let maps = report
        .representations
        .iter()
        .map(|r| {
            let path = cfg.output_dir.join(&r.scores_path);
            if !path.exists() {
                return Err(Error::Missing(format!("score map {}", path.display())));
            }
            ScoreMap::read(path, r.representation_id.clone(), r.n_splits_used)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((report, maps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastRecord {
    pub contrast_id: String,
    pub minuend: String,
    pub subtrahend: String,
    pub path: PathBuf,
    pub positive: usize,
    pub negative: usize,
    pub flagged: usize,
}

/// `contrast`: score differences between layers for every contrast whose
/// two score maps exist.
pub fn run_contrast(cfg: &PipelineConfig) -> Result<Vec<ContrastRecord>> {
    let (report, maps) = load_scores(cfg)?;
    let find = |key: (Layer, Stream)| {
        report
            .representations
            .iter()
            .position(|r| (r.layer, r.stream) == key)
    };
    let mut records = Vec::new();
    for (a, b) in reported_contrasts() {
        let (Some(ia), Some(ib)) = (find(a), find(b)) else {
            log::warn!("skipping {}: score map missing", contrast_id(a, b));
            continue;
        };
        let id = contrast_id(a, b);
        let c = contrast_named(&maps[ia], &maps[ib], id.clone())?;
        let path = PathBuf::from(format!("{CONTRASTS_DIR}/{id}.dvft"));
        c.write(
            cfg.output_dir.join(&path),
            cfg.output_dir.join(format!("{CONTRASTS_DIR}/{id}.csv")),
        )?;
        records.push(ContrastRecord {
            contrast_id: id,
            minuend: maps[ia].representation_id.clone(),
            subtrahend: maps[ib].representation_id.clone(),
            path,
            positive: c
                .values
                .iter()
                .filter(|v| matches!(v, Some(x) if *x > 0.0))
                .count(),
            negative: c
                .values
                .iter()
                .filter(|v| matches!(v, Some(x) if *x < 0.0))
                .count(),
            flagged: c.values.iter().filter(|v| v.is_none()).count(),
        });
    }
    if records.is_empty() {
        return Err(Error::Missing(
            "no contrast computable: score maps for the contrasted layers are missing".into(),
        ));
    }
    write_json(cfg.output_dir.join(CONTRAST_INDEX), &records)?;
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParcellationReport {
    pub threshold: f64,
    pub n_voxels: usize,
    pub active_voxels: usize,
    pub contrasts: Vec<String>,
    pub profiles: Vec<ProfileCount>,
}

/// `parcellate`: 3-bit sign profiles of active voxels and their summary.
/// Returns the report and a printable table.
pub fn run_parcellate(cfg: &PipelineConfig) -> Result<(ParcellationReport, String)> {
    let (_, maps) = load_scores(cfg)?;
    let records: Vec<ContrastRecord> = read_index(&cfg.output_dir, CONTRAST_INDEX, "contrast")?;
    let mut contrasts = Vec::with_capacity(3);
    for (a, b) in parcellation_contrasts() {
        let id = contrast_id(a, b);
        let rec = records
            .iter()
            .find(|r| r.contrast_id == id)
            .ok_or_else(|| {
                Error::Missing(format!("contrast {id}; its score maps were not produced"))
            })?;
        contrasts.push(ContrastMap::read(cfg.output_dir.join(&rec.path), id)?);
    }
    let activity: Vec<&ScoreMap> = maps.iter().collect();
    let threshold = cfg.ridge.selection_threshold;
    let profile = parcellate(
        &contrasts[0],
        &contrasts[1],
        &contrasts[2],
        &activity,
        threshold,
    )?;
    let dir = cfg.output_dir.join(PROFILE_DIR);
    profile.write(dir.join("profile.dvft"), dir.join("profile.csv"))?;
    let summary = profile_summary(&profile);
    let report = ParcellationReport {
        threshold,
        n_voxels: profile.codes.len(),
        active_voxels: profile.active_count(),
        contrasts: contrasts.iter().map(|c| c.contrast_id.clone()).collect(),
        profiles: summary,
    };
    write_json(dir.join("profile_summary.json"), &report)?;
    let mut table = format!(
        "{} of {} voxels active\n",
        report.active_voxels, report.n_voxels
    );
    table.push_str(&format_summary_table(&report.profiles));
    Ok((report, table))
}

/// Reads a stored profile tensor back into codes.
pub fn read_profile(path: impl AsRef<Path>) -> Result<ProfileMap> {
    let t = read_tensor(path)?;
    let codes = t
        .iter()
        .map(|&v| match v {
            v if v < 0.0 => Ok(None),
            v if v <= 7.0 && v.fract() == 0.0 => Ok(Some(v as u8)),
            v => Err(Error::Format(format!("invalid profile code {v}"))),
        })
        .collect::<Result<_>>()?;
    Ok(ProfileMap { codes })
}

/// `count / baseline`, with `inf` for a zero baseline and `1` when both are zero.
pub fn count_ratio(count: usize, baseline: usize) -> f64 {
    match (count, baseline) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        (c, b) => c as f64 / b as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub scheme: Scheme,
    pub split: usize,
    pub held_session: usize,
    /// Features summed over the scheme's representations.
    pub n_features: usize,
    /// Voxels whose best held-out score over representations exceeds the threshold.
    pub voxels_above_threshold: usize,
    /// Serialized as a string so `inf` survives JSON.
    pub ratio_vs_pca: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRepresentationRow {
    pub scheme: Scheme,
    pub representation_id: String,
    pub split: usize,
    pub held_session: usize,
    pub n_features: usize,
    pub chosen_alpha: f64,
    pub voxels_above_threshold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub outer_splits: usize,
    pub threshold: f64,
    pub pca_components: Vec<(String, usize)>,
    pub rows: Vec<BenchmarkRow>,
    pub representations: Vec<BenchmarkRepresentationRow>,
}

pub const BENCHMARK_SPLITS: usize = 2;

fn format_ratio(r: f64) -> String {
    if r.is_infinite() {
        "inf".into()
    } else {
        format!("{r:.6}")
    }
}

/// `benchmark-compression`: runs PCA, APIC and APBIC through two outer
/// splits on the same dataset and compares voxel counts above threshold.
pub fn run_benchmark(cfg: &PipelineConfig) -> Result<BenchmarkReport> {
    let manifest = cfg.load_manifest()?;
    let y = manifest.load_responses()?;
    let ridge = RidgeConfig {
        outer_splits: BENCHMARK_SPLITS,
        ..cfg.ridge.clone()
    };
    ridge.validate()?;
    outer_held_sessions(manifest.session_lengths.len(), BENCHMARK_SPLITS)?;
    let thr = ridge.selection_threshold;

    let mut per_scheme: Vec<(Scheme, Vec<usize>, usize)> = Vec::new();
    let mut rep_rows = Vec::new();
    let mut held_sessions = Vec::new();
    let mut pca_components = Vec::new();
    for scheme in Scheme::ALL {
        let reps = compress_all(
            cfg,
            &manifest,
            scheme,
            ComponentRule::Capped(cfg.compression.n_components),
            BENCHMARK_SPLITS,
        )?;
        let mut best = vec![vec![f64::NEG_INFINITY; y.n_voxels()]; BENCHMARK_SPLITS];
        let mut features = 0;
        for rep in &reps {
            let ev = evaluate_representation(rep, &y, &ridge)?;
            let n_features = rep.record.n_components.unwrap_or(rep.record.n_features);
            features += n_features;
            if let Some(n) = rep.record.n_components {
                pca_components.push((rep.record.representation_id.clone(), n));
            }
            for (k, (split, scores)) in ev.splits.iter().zip(&ev.split_scores).enumerate() {
                for (b, s) in best[k].iter_mut().zip(scores) {
                    if let Some(s) = s {
                        *b = b.max(*s);
                    }
                }
                rep_rows.push(BenchmarkRepresentationRow {
                    scheme,
                    representation_id: rep.record.representation_id.clone(),
                    split: k,
                    held_session: split.held_session,
                    n_features,
                    chosen_alpha: split.selection.chosen_alpha,
                    voxels_above_threshold: split.voxels_above_threshold,
                });
                if held_sessions.len() <= k {
                    held_sessions.push(split.held_session);
                }
            }
        }
        let counts = best
            .iter()
            .map(|b| b.iter().filter(|&&s| s > thr).count())
            .collect();
        log::info!("{scheme}: voxels above threshold per split {counts:?}");
        per_scheme.push((scheme, counts, features));
    }

    let pca_counts = per_scheme
        .iter()
        .find(|(s, _, _)| *s == Scheme::Pca)
        .map(|(_, c, _)| c.clone())
        .expect("pca is benchmarked");
    let rows = per_scheme
        .iter()
        .flat_map(|(scheme, counts, features)| {
            let pca = &pca_counts;
            let held = &held_sessions;
            counts.iter().enumerate().map(move |(k, &c)| BenchmarkRow {
                scheme: *scheme,
                split: k,
                held_session: held[k],
                n_features: *features,
                voxels_above_threshold: c,
                ratio_vs_pca: format_ratio(count_ratio(c, pca[k])),
            })
        })
        .collect();
    let report = BenchmarkReport {
        outer_splits: BENCHMARK_SPLITS,
        threshold: thr,
        pca_components,
        rows,
        representations: rep_rows,
    };
    write_benchmark(&cfg.output_dir.join(BENCHMARK_DIR), &report)?;
    Ok(report)
}

fn write_benchmark(dir: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut csv =
        String::from("scheme,split,held_session,n_features,voxels_above_threshold,ratio_vs_pca\n");
    for r in &report.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.scheme,
            r.split,
            r.held_session,
            r.n_features,
            r.voxels_above_threshold,
            r.ratio_vs_pca
        )
        .expect("writing to a String");
    }
    let mut reps =
        String::from("scheme,representation_id,split,held_session,n_features,chosen_alpha,voxels_above_threshold\n");
    for r in &report.representations {
        writeln!(
            reps,
            "{},{},{},{},{},{:e},{}",
            r.scheme,
            r.representation_id,
            r.split,
            r.held_session,
            r.n_features,
            r.chosen_alpha,
            r.voxels_above_threshold
        )
        .expect("writing to a String");
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [
        ("benchmark.csv", csv),
        ("benchmark_representations.csv", reps),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    write_json(dir.join("benchmark_report.json"), report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios() {
        assert_eq!(count_ratio(7, 7), 1.0);
        assert_eq!(count_ratio(0, 0), 1.0);
        assert_eq!(count_ratio(3, 0), f64::INFINITY);
        assert_eq!(count_ratio(1, 4), 0.25);
        assert_eq!(format_ratio(f64::INFINITY), "inf");
    }

    #[test]
    fn train_sizes() {
        assert_eq!(min_train_samples(&[10, 12, 8], 2), 18);
        assert_eq!(min_train_samples(&[100; 12], 5), 1100);
    }

    #[test]
    fn component_rules() {
        assert_eq!(
            components_for(ComponentRule::Capped(2000), 125, 4096, "x").unwrap(),
            124
        );
        assert_eq!(
            components_for(ComponentRule::Capped(50), 125, 4096, "x").unwrap(),
            50
        );
        assert!(components_for(ComponentRule::Exact(2000), 125, 4096, "x").is_err());
        assert!(components_for(ComponentRule::Exact(20), 125, 10, "x").is_err());
    }
}
