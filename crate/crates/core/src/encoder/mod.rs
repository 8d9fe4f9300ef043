//! Linear-kernel ridge encoding models scored with the cross-validated
//! coefficient of determination.

mod cv;
mod kernel;
mod score;
mod spectral;

pub use cv::{
    best_alpha_index, combine_splits, evaluate, evaluate_split, inner_fold_blocks, log_spaced,
    outer_held_sessions, select_alpha, select_alpha_features, select_alpha_gram, AlphaSelection,
    Evaluation, RidgeConfig, SplitOutcome, SplitReport,
};
pub use kernel::{gram, krr_fit, krr_predict, CholeskyFactor, DualSolution};
pub use score::{m_cv, m_cv_columns, mean_unflagged, write_voxel_csv, ScoreMap, ZERO_VARIANCE_EPS};
pub use spectral::{symmetric_eigen, SymmetricEigen};
