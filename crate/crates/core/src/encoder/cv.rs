use std::ops::Range;
use std::time::Instant;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{JobSvd, SVDDC};
use serde::{Deserialize, Serialize};

use super::kernel::{gram, krr_fit, krr_predict};
use super::score::{m_cv_columns, mean_unflagged, ScoreMap};
use super::spectral::symmetric_eigen;
use crate::compression::{cell_range, DesignMatrix, Standardizer};
use crate::error::{Error, Result};
use crate::tensor_store::{session_ranges, VoxelSeries};

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|k| match k {
                    0 => lo,
                    k if k == n - 1 => hi,
                    k => 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeConfig {
    /// Candidate l2 penalties, strictly positive and ascending.
    pub alpha_grid: Vec<f64>,
    pub inner_folds: usize,
    pub outer_splits: usize,
    /// Voxels whose mean inner-fold `m_cv` exceeds this count toward a penalty.
    pub selection_threshold: f64,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig {
            alpha_grid: log_spaced(1e-3, 1e5, 20),
            inner_folds: 5,
            outer_splits: 5,
            selection_threshold: 0.1,
        }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(Error::Config("alpha_grid is empty".into()));
        }
        if self.alpha_grid.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Config(
                "alpha_grid values must be finite and positive".into(),
            ));
        }
        if self.alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "alpha_grid must be strictly ascending".into(),
            ));
        }
        if self.inner_folds < 2 {
            return Err(Error::Config("inner_folds must be at least 2".into()));
        }
        if self.outer_splits < 1 {
            return Err(Error::Config("outer_splits must be at least 1".into()));
        }
        if !self.selection_threshold.is_finite() {
            return Err(Error::Config("selection_threshold must be finite".into()));
        }
        Ok(())
    }
}

/// Contiguous inner-fold blocks over the concatenated training sessions.
///
/// Whole sessions are grouped when there are at least as many sessions as
/// folds; otherwise the samples are cut into equal contiguous blocks.
pub fn inner_fold_blocks(session_lengths: &[usize], folds: usize) -> Result<Vec<Range<usize>>> {
    let n: usize = session_lengths.iter().sum();
    if folds < 2 || n < 2 * folds {
        return Err(Error::Invalid(format!(
            "{n} training samples cannot form {folds} inner folds"
        )));
    }
    let ranges = session_ranges(session_lengths);
    let blocks: Vec<Range<usize>> = if session_lengths.len() >= folds {
        (0..folds)
            .map(|k| {
                let group = cell_range(session_lengths.len(), folds, k);
                ranges[group.start].start..ranges[group.end - 1].end
            })
            .collect()
    } else {
        (0..folds).map(|k| cell_range(n, folds, k)).collect()
    };
    if blocks.iter().any(|b| b.len() < 2 || n - b.len() < 1) {
        return Err(Error::Invalid(
            "inner fold with fewer than 2 samples".into(),
        ));
    }
    Ok(blocks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSelection {
    pub alphas: Vec<f64>,
    /// Masked voxels above threshold, per alpha.
    pub counts: Vec<usize>,
    /// Inner-fold mean `m_cv` of the voxels counted above threshold, per alpha.
    pub mean_scores: Vec<Option<f64>>,
    pub chosen_alpha: f64,
    pub inner_folds: usize,
    pub n_masked_voxels: usize,
}

/// Picks the penalty that maximizes the number of masked voxels whose
/// inner-fold mean `m_cv` exceeds the threshold.
///
/// Equal counts are decided by the mean `m_cv` of the counted voxels, then
/// by the larger α, so a grid with no voxel above threshold yields its
/// largest penalty.
pub fn select_alpha(
    x_train: &DesignMatrix,
    y_train: &VoxelSeries,
    cfg: &RidgeConfig,
) -> Result<AlphaSelection> {
    if x_train.session_lengths != y_train.session_lengths {
        return Err(Error::Shape(
            "design and response session lengths differ".into(),
        ));
    }
    let masked = y_train.masked_indices();
    let y = y_train.data.select(Axis(1), &masked);
    select_alpha_features(x_train.data.view(), y.view(), &y_train.session_lengths, cfg)
}

/// Held-fold predictions for every penalty, `pred(α) = G (Λ + α)⁻¹ H`.
///
/// `G` is `K_ht Q` and `H` is `Qᵀ y_t` for the eigenvectors `Q` of the
/// fold's training Gram block with nonzero spectrum `Λ`; the null space of
/// a linear kernel contributes nothing to held-out predictions.
struct FoldSpectrum {
    g: Array2<f64>,
    values: Array1<f64>,
    h: Array2<f64>,
}

fn spectrum_from_gram(
    k_tt: ArrayView2<'_, f64>,
    k_ht: ArrayView2<'_, f64>,
    y_t: ArrayView2<'_, f64>,
) -> Result<FoldSpectrum> {
    let eig = symmetric_eigen(k_tt)?;
    Ok(FoldSpectrum {
        g: k_ht.dot(&eig.vectors_t.t()),
        h: eig.vectors_t.dot(&y_t),
        values: eig.values,
    })
}

/// Same spectrum from the thin SVD `X_t = U S Vᵀ`: `Q = U`, `Λ = S²` and
/// `K_ht U = X_h V S`. Cheaper whenever features are fewer than samples.
fn spectrum_from_features(
    x_t: ArrayView2<'_, f64>,
    x_h: ArrayView2<'_, f64>,
    y_t: ArrayView2<'_, f64>,
) -> Result<FoldSpectrum> {
    let (u, sv, vt) = x_t
        .to_owned()
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Linalg(format!("svd of fold design: {e}")))?;
    let (u, vt) = (u.expect("requested U"), vt.expect("requested Vt"));
    let mut g = x_h.dot(&vt.t());
    for (mut col, &s) in g.columns_mut().into_iter().zip(sv.iter()) {
        col *= s;
    }
    Ok(FoldSpectrum {
        g,
        h: u.t().dot(&y_t),
        values: sv.mapv(|s| s * s),
    })
}

/// `select_alpha` on a precomputed training Gram matrix and the masked
/// response columns.
///
/// Each inner fold decomposes its training Gram block once,
/// `K = Q Λ Qᵀ`, so that every penalty on the grid is solved exactly as
/// `(K + αI)⁻¹ = Q (Λ + α)⁻¹ Qᵀ`.
pub fn select_alpha_gram(
    k_train: ArrayView2<'_, f64>,
    y_masked: ArrayView2<'_, f64>,
    session_lengths: &[usize],
    cfg: &RidgeConfig,
) -> Result<AlphaSelection> {
    let n = k_train.nrows();
    if k_train.ncols() != n {
        return Err(Error::Shape("gram matrix must be square".into()));
    }
    select_with(n, y_masked, session_lengths, cfg, |train, block, y_t| {
        let k_tt = k_train.select(Axis(0), train).select(Axis(1), train);
        let k_ht = k_train.slice(s![block.clone(), ..]).select(Axis(1), train);
        spectrum_from_gram(k_tt.view(), k_ht.view(), y_t)
    })
}

/// `select_alpha` on standardized training features. Folds with fewer
/// features than training rows take the SVD route, the others the Gram
/// route; both yield the same predictions.
pub fn select_alpha_features(
    x_train: ArrayView2<'_, f64>,
    y_masked: ArrayView2<'_, f64>,
    session_lengths: &[usize],
    cfg: &RidgeConfig,
) -> Result<AlphaSelection> {
    let n = x_train.nrows();
    select_with(n, y_masked, session_lengths, cfg, |train, block, y_t| {
        let x_t = x_train.select(Axis(0), train);
        let x_h = x_train.slice(s![block.clone(), ..]);
        if x_train.ncols() < train.len() {
            spectrum_from_features(x_t.view(), x_h, y_t)
        } else {
            let k_tt = gram(x_t.view(), x_t.view())?;
            let k_ht = gram(x_h, x_t.view())?;
            spectrum_from_gram(k_tt.view(), k_ht.view(), y_t)
        }
    })
}

fn select_with<F>(
    n: usize,
    y_masked: ArrayView2<'_, f64>,
    session_lengths: &[usize],
    cfg: &RidgeConfig,
    mut spectrum: F,
) -> Result<AlphaSelection>
where
    F: FnMut(&[usize], &Range<usize>, ArrayView2<'_, f64>) -> Result<FoldSpectrum>,
{
    cfg.validate()?;
    let n_vox = y_masked.ncols();
    if n_vox == 0 {
        return Err(Error::Invalid("selection mask is empty".into()));
    }
    if y_masked.nrows() != n {
        return Err(Error::Shape(
            "training rows and targets disagree on sample count".into(),
        ));
    }
    let folds = inner_fold_blocks(session_lengths, cfg.inner_folds)?;
    let n_alpha = cfg.alpha_grid.len();
    let mut sums = Array2::<f64>::zeros((n_alpha, n_vox));
    let mut scored = Array2::<usize>::zeros((n_alpha, n_vox));

    for block in &folds {
        let train: Vec<usize> = (0..block.start).chain(block.end..n).collect();
        let y_t = y_masked.select(Axis(0), &train);
        let y_h = y_masked.slice(s![block.clone(), ..]);
        let fold = spectrum(&train, block, y_t.view())?;
        for (a, &alpha) in cfg.alpha_grid.iter().enumerate() {
            let mut gd = fold.g.clone();
            for (j, mut col) in gd.columns_mut().into_iter().enumerate() {
                let shifted = fold.values[j] + alpha;
                if shifted.is_nan() || shifted <= 0.0 {
                    return Err(Error::Factorization { pivot: j, alpha });
                }
                col /= shifted;
            }
            let pred = gd.dot(&fold.h);
            for (v, score) in m_cv_columns(pred.view(), y_h)?.into_iter().enumerate() {
                if let Some(s) = score {
                    sums[[a, v]] += s;
                    scored[[a, v]] += 1;
                }
            }
        }
    }

    let counts: Vec<usize> = (0..n_alpha)
        .map(|a| {
            (0..n_vox)
                .filter(|&v| {
                    let c = scored[[a, v]];
                    c > 0 && sums[[a, v]] / c as f64 > cfg.selection_threshold
                })
                .count()
        })
        .collect();
    let mean_scores: Vec<Option<f64>> = (0..n_alpha)
        .map(|a| {
            let per_voxel: Vec<f64> = (0..n_vox)
                .filter(|&v| scored[[a, v]] > 0)
                .map(|v| sums[[a, v]] / scored[[a, v]] as f64)
                .filter(|&m| m > cfg.selection_threshold)
                .collect();
            (!per_voxel.is_empty()).then(|| per_voxel.iter().sum::<f64>() / per_voxel.len() as f64)
        })
        .collect();
    let best = best_alpha_index(&counts, &mean_scores);
    Ok(AlphaSelection {
        alphas: cfg.alpha_grid.clone(),
        counts,
        mean_scores,
        chosen_alpha: cfg.alpha_grid[best],
        inner_folds: folds.len(),
        n_masked_voxels: n_vox,
    })
}

/// Index of the winning grid entry: highest count, then highest mean score,
/// then the later (larger) α.
pub fn best_alpha_index(counts: &[usize], mean_scores: &[Option<f64>]) -> usize {
    let score = |a: usize| mean_scores[a].unwrap_or(f64::NEG_INFINITY);
    let mut best = 0;
    for a in 1..counts.len() {
        let key = (counts[a], score(a));
        let cur = (counts[best], score(best));
        if key.0 > cur.0 || (key.0 == cur.0 && key.1 >= cur.1) {
            best = a;
        }
    }
    best
}

/// Held-out sessions of the outer loop: the first `outer_splits` sessions.
pub fn outer_held_sessions(n_sessions: usize, outer_splits: usize) -> Result<Vec<usize>> {
    if n_sessions < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 sessions, got {n_sessions}"
        )));
    }
    if outer_splits > n_sessions {
        return Err(Error::Invalid(format!(
            "fewer sessions ({n_sessions}) than outer splits ({outer_splits})"
        )));
    }
    Ok((0..outer_splits).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub held_session: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub selection: AlphaSelection,
    /// Voxels (whole brain) with held-out `m_cv` above the selection threshold.
    pub voxels_above_threshold: usize,
    pub flagged_voxels: usize,
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub scores: Vec<Option<f64>>,
    pub report: SplitReport,
}

/// One leave-one-session-out split: standardize with training statistics,
/// select α on training sessions, refit, and score the held session.
pub fn evaluate_split(
    x: &DesignMatrix,
    y: &VoxelSeries,
    held: usize,
    cfg: &RidgeConfig,
) -> Result<SplitOutcome> {
    let started = Instant::now();
    if x.session_lengths != y.session_lengths {
        return Err(Error::Shape(format!(
            "{}: design sessions {:?} vs response sessions {:?}",
            x.representation_id, x.session_lengths, y.session_lengths
        )));
    }
    let ranges = session_ranges(&x.session_lengths);
    let test = ranges
        .get(held)
        .cloned()
        .ok_or_else(|| Error::Invalid(format!("held session {held} out of range")))?;
    let train = x.rows_excluding_session(held);
    let train_lengths: Vec<usize> = x
        .session_lengths
        .iter()
        .enumerate()
        .filter_map(|(k, &l)| (k != held).then_some(l))
        .collect();

    let xs = Standardizer::fit_rows(x.data.view(), &train).apply(x.data.view());
    let ys = Standardizer::fit_rows(y.data.view(), &train).apply(y.data.view());
    let x_train = xs.select(Axis(0), &train);
    let x_test = xs.slice(s![test.clone(), ..]);
    let y_train = ys.select(Axis(0), &train);
    let y_test = ys.slice(s![test.clone(), ..]);

    let k_train = gram(x_train.view(), x_train.view())?;
    let k_test = gram(x_test, x_train.view())?;

    let masked = y.masked_indices();
    let selection = select_alpha_features(
        x_train.view(),
        y_train.select(Axis(1), &masked).view(),
        &train_lengths,
        cfg,
    )?;
    let mut sol = krr_fit(k_train.view(), y_train.view(), selection.chosen_alpha)?;
    sol.train_rows = train.clone();
    let pred = krr_predict(k_test.view(), &sol)?;
    let scores = m_cv_columns(pred.view(), y_test)?;

    let report = SplitReport {
        held_session: held,
        n_train: train.len(),
        n_test: test.len(),
        voxels_above_threshold: scores
            .iter()
            .filter(|s| matches!(s, Some(v) if *v > cfg.selection_threshold))
            .count(),
        flagged_voxels: scores.iter().filter(|s| s.is_none()).count(),
        selection,
    };
    log::debug!(
        "{} held session {held}: alpha {:e}, {} voxels above threshold ({:?})",
        x.representation_id,
        report.selection.chosen_alpha,
        report.voxels_above_threshold,
        started.elapsed()
    );
    Ok(SplitOutcome { scores, report })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub scores: ScoreMap,
    pub splits: Vec<SplitReport>,
    /// Held-session scores, one vector per split.
    pub split_scores: Vec<Vec<Option<f64>>>,
}

/// Combines per-split outcomes into the per-voxel mean score map.
pub fn combine_splits(
    representation_id: &str,
    n_voxels: usize,
    outcomes: Vec<SplitOutcome>,
) -> Evaluation {
    let per_split: Vec<Vec<Option<f64>>> = outcomes.iter().map(|o| o.scores.clone()).collect();
    Evaluation {
        scores: ScoreMap {
            scores: mean_unflagged(&per_split, n_voxels),
            representation_id: representation_id.to_string(),
            n_splits_used: outcomes.len(),
        },
        splits: outcomes.into_iter().map(|o| o.report).collect(),
        split_scores: per_split,
    }
}

/// Leave-one-session-out evaluation over the first `outer_splits` sessions.
pub fn evaluate(x: &DesignMatrix, y: &VoxelSeries, cfg: &RidgeConfig) -> Result<Evaluation> {
    cfg.validate()?;
    let held = outer_held_sessions(x.n_sessions(), cfg.outer_splits)?;
    let outcomes = held
        .into_iter()
        .map(|h| evaluate_split(x, y, h, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_splits(&x.representation_id, y.n_voxels(), outcomes))
}
