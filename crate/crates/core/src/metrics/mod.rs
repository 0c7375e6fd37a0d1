//! Identifiability metrics between representation sets: Hungarian-matched
//! strong MCC, CCA-aligned weak MCC with in/out-of-sample evaluation, and the
//! Wilcoxon signed-rank test used to compare model families.

mod cca;
mod hungarian;
mod mcc;
mod pearson;
mod wilcoxon;

pub use cca::{fit_cca, weak_mcc, CcaModel};
pub use hungarian::{hungarian, Assignment};
pub use mcc::{strong_mcc, strong_mcc_split, MccReport};
pub use pearson::{elbo_mcc_correlation, pearson, pearson_corr_matrix, CorrelationMatrix};
pub use wilcoxon::{
    normal_cdf, wilcoxon_signed_rank, wilcoxon_signed_rank_with_method, WilcoxonMethod,
    WilcoxonResult,
};
