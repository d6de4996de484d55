//! Per-repetition criteria, between-approach comparisons, and report tables.

mod criteria;
mod report;
mod wilcoxon;

pub use criteria::{count_found_defects, diff, final_auc, rdiff, CriterionSet};
pub use report::{
    aggregate, build_report, BaselineRow, Cell, Criterion, RepetitionResult, Report, ReportRow, AVERAGE_LABEL, PAIRS,
    PAIR_LABELS,
};
pub use wilcoxon::{
    exact_p_value, normal_p_value, wilcoxon_signed_rank, wilcoxon_signed_rank_with, SignedRanks, WilcoxonMethod,
    EXACT_LIMIT,
};
