use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::criteria::{diff, rdiff, CriterionSet};
use super::wilcoxon::wilcoxon_signed_rank;
use crate::bandit::PolicyKind;
use crate::error::{Error, Result};
use crate::rng::StreamSeeds;

/// All approaches of one repetition, evaluated on one shared baseline trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub policy: PolicyKind,
    pub n_projects: usize,
    pub learning_projects: Vec<String>,
    pub seeds: StreamSeeds,
    pub baseline: CriterionSet,
    pub retest: Option<CriterionSet>,
    pub multiple_retests: Option<CriterionSet>,
}

impl RepetitionResult {
    fn approaches(&self) -> [Option<&CriterionSet>; 3] {
        [
            Some(&self.baseline),
            self.retest.as_ref(),
            self.multiple_retests.as_ref(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    Auc,
    FoundDefects,
}

impl Criterion {
    pub const ALL: [Criterion; 2] = [Criterion::Auc, Criterion::FoundDefects];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Auc => "auc",
            Criterion::FoundDefects => "found_defects",
        }
    }

    fn value(self, set: &CriterionSet) -> f64 {
        match self {
            Criterion::Auc => set.auc,
            Criterion::FoundDefects => set.found_defects as f64,
        }
    }
}

/// A report value: a number, a ratio with zero denominator, or a quantity
/// whose approach was not run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Value(f64),
    Undefined,
    NotAvailable,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }

    fn from_ratio(r: Result<f64>) -> Self {
        r.map_or(Cell::Undefined, Cell::Value)
    }

    fn fmt_with(self, f: impl Fn(f64) -> String) -> String {
        match self {
            Cell::Value(v) => f(v),
            Cell::Undefined => "undefined".into(),
            Cell::NotAvailable => "NA".into(),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(|v| v.to_string()))
    }
}

/// Approach pairs in column order: (B, R), (B, MR), (R, MR).
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
pub const PAIR_LABELS: [&str; 3] = ["B, R", "B, MR", "R, MR"];
const PAIR_KEYS: [&str; 3] = ["b_r", "b_mr", "r_mr"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n_projects: usize,
    /// Policy label, or `Average` for the pooled row.
    pub group: String,
    pub criterion: Criterion,
    pub repetitions: usize,
    /// Means of Baseline, Retest, MultipleRetests.
    pub means: [Cell; 3],
    pub diffs: [Cell; 3],
    /// RDIFF of the means.
    pub rdiffs: [Cell; 3],
    pub p_values: [Cell; 3],
    /// Mean of per-repetition RDIFFs over repetitions with a non-zero
    /// denominator.
    pub rdiff_per_repetition: [Cell; 3],
}

fn summarize(
    group: String,
    n_projects: usize,
    results: &[&RepetitionResult],
    criterion: Criterion,
) -> Result<ReportRow> {
    let count = results.len();
    let column = |a: usize| -> Option<Vec<f64>> {
        results
            .iter()
            .map(|r| r.approaches()[a].map(|s| criterion.value(s)))
            .collect()
    };
    let columns: [Option<Vec<f64>>; 3] = [column(0), column(1), column(2)];
    let means: [Cell; 3] = std::array::from_fn(|a| match &columns[a] {
        Some(v) if !v.is_empty() => Cell::Value(v.iter().sum::<f64>() / v.len() as f64),
        _ => Cell::NotAvailable,
    });

    let mut diffs = [Cell::NotAvailable; 3];
    let mut rdiffs = [Cell::NotAvailable; 3];
    let mut p_values = [Cell::NotAvailable; 3];
    let mut per_rep = [Cell::NotAvailable; 3];
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        let (Some(xs), Some(ys)) = (&columns[a], &columns[b]) else {
            continue;
        };
        let (Some(ma), Some(mb)) = (means[a].value(), means[b].value()) else {
            continue;
        };
        diffs[k] = Cell::Value(diff(ma, mb));
        rdiffs[k] = Cell::from_ratio(rdiff(ma, mb));
        let pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        p_values[k] = Cell::Value(wilcoxon_signed_rank(&pairs)?);
        let defined: Vec<f64> = pairs.iter().filter_map(|&(x, y)| rdiff(x, y).ok()).collect();
        per_rep[k] = if defined.is_empty() {
            Cell::Undefined
        } else {
            Cell::Value(defined.iter().sum::<f64>() / defined.len() as f64)
        };
    }

    if criterion == Criterion::FoundDefects {
        for k in [0, 2] {
            if let Cell::Value(d) = diffs[k] {
                if d < 0.0 {
                    return Err(Error::Statistics(format!(
                        "found-defect DIFF({}) = {d} < 0 for {group}: retests must never lose defects",
                        PAIR_LABELS[k]
                    )));
                }
            }
        }
    }

    Ok(ReportRow {
        n_projects,
        group,
        criterion,
        repetitions: count,
        means,
        diffs,
        rdiffs,
        p_values,
        rdiff_per_repetition: per_rep,
    })
}

/// Rows for one (policy, learning-set size) cell: one per criterion.
pub fn aggregate(results: &[RepetitionResult]) -> Result<Vec<ReportRow>> {
    let first = results
        .first()
        .ok_or_else(|| Error::Statistics("no repetitions to aggregate".into()))?;
    if results
        .iter()
        .any(|r| r.policy != first.policy || r.n_projects != first.n_projects)
    {
        return Err(Error::Statistics(
            "repetitions with mixed policy or learning-set size".into(),
        ));
    }
    let refs: Vec<&RepetitionResult> = results.iter().collect();
    Criterion::ALL
        .iter()
        .map(|&c| summarize(first.policy.label(), first.n_projects, &refs, c))
        .collect()
}

/// Baseline-only means for one (policy, size) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub n_projects: usize,
    pub group: String,
    pub repetitions: usize,
    pub auc: f64,
    pub found_defects: f64,
    pub retests_retest: Cell,
    pub retests_multiple: Cell,
}

fn baseline_row(group: String, n_projects: usize, results: &[&RepetitionResult]) -> BaselineRow {
    let n = results.len() as f64;
    let mean_retests = |pick: fn(&RepetitionResult) -> Option<&CriterionSet>| -> Cell {
        let values: Option<Vec<f64>> = results.iter().map(|r| pick(r).map(|s| s.retests as f64)).collect();
        match values {
            Some(v) if !v.is_empty() => Cell::Value(v.iter().sum::<f64>() / v.len() as f64),
            _ => Cell::NotAvailable,
        }
    };
    BaselineRow {
        n_projects,
        group,
        repetitions: results.len(),
        auc: results.iter().map(|r| r.baseline.auc).sum::<f64>() / n,
        found_defects: results.iter().map(|r| r.baseline.found_defects as f64).sum::<f64>() / n,
        retests_retest: mean_retests(|r| r.retest.as_ref()),
        retests_multiple: mean_retests(|r| r.multiple_retests.as_ref()),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub table1: Vec<ReportRow>,
    pub table2: Vec<BaselineRow>,
}

pub const AVERAGE_LABEL: &str = "Average";

/// Groups results by size then policy (in the given orders) and appends a
/// pooled `Average` row per size. Cells with no results are skipped.
pub fn build_report(results: &[RepetitionResult], sizes: &[usize], policies: &[PolicyKind]) -> Result<Report> {
    let mut report = Report::default();
    for &size in sizes {
        let mut pooled: Vec<&RepetitionResult> = Vec::new();
        for policy in policies {
            let cell: Vec<RepetitionResult> = results
                .iter()
                .filter(|r| r.n_projects == size && r.policy == *policy)
                .cloned()
                .collect();
            if cell.is_empty() {
                continue;
            }
            report.table1.extend(aggregate(&cell)?);
            let refs: Vec<&RepetitionResult> = results
                .iter()
                .filter(|r| r.n_projects == size && r.policy == *policy)
                .collect();
            report.table2.push(baseline_row(policy.label(), size, &refs));
            pooled.extend(refs);
        }
        if pooled.is_empty() {
            continue;
        }
        for c in Criterion::ALL {
            report.table1.push(summarize(AVERAGE_LABEL.into(), size, &pooled, c)?);
        }
        report.table2.push(baseline_row(AVERAGE_LABEL.into(), size, &pooled));
    }
    Ok(report)
}

impl Report {
    pub fn table1_csv(&self) -> String {
        let mut out = String::from("n_projects,policy,criterion,repetitions,mean_b,mean_r,mean_mr");
        for prefix in ["diff", "rdiff", "p", "rdiff_rep"] {
            for key in PAIR_KEYS {
                let _ = write!(out, ",{prefix}_{key}");
            }
        }
        out.push('\n');
        for row in &self.table1 {
            let _ = write!(
                out,
                "{},{},{},{}",
                row.n_projects,
                row.group,
                row.criterion.name(),
                row.repetitions
            );
            for cells in [
                &row.means,
                &row.diffs,
                &row.rdiffs,
                &row.p_values,
                &row.rdiff_per_repetition,
            ] {
                for c in cells {
                    let _ = write!(out, ",{c}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn table2_csv(&self) -> String {
        let mut out =
            String::from("n_projects,policy,repetitions,baseline_auc,baseline_found_defects,retests_r,retests_mr\n");
        for row in &self.table2 {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.n_projects,
                row.group,
                row.repetitions,
                row.auc,
                row.found_defects,
                row.retests_retest,
                row.retests_multiple
            );
        }
        out
    }

    /// Plain-text rendering of the DIFF/RDIFF table, one block per size.
    /// p-values are shown to two decimals in parentheses.
    pub fn table1_text(&self) -> String {
        let mut sizes: Vec<usize> = Vec::new();
        for row in &self.table1 {
            if !sizes.contains(&row.n_projects) {
                sizes.push(row.n_projects);
            }
        }
        let mut out = String::new();
        for size in sizes {
            let _ = writeln!(out, "{size} projects used as learning data");
            let mut header = format!("{:<14}", "Type");
            for crit in ["AUC", "Found defects"] {
                for label in PAIR_LABELS {
                    header.push_str(&format!(" | {:>16}", format!("{crit} DIFF({label})")));
                }
                for label in PAIR_LABELS {
                    header.push_str(&format!(" | {:>14}", format!("RDIFF({label})")));
                }
            }
            let _ = writeln!(out, "{header}");
            let _ = writeln!(out, "{}", "-".repeat(header.len()));
            let groups: Vec<&str> = {
                let mut g: Vec<&str> = Vec::new();
                for row in self.table1.iter().filter(|r| r.n_projects == size) {
                    if !g.contains(&row.group.as_str()) {
                        g.push(&row.group);
                    }
                }
                g
            };
            for group in groups {
                let mut line = format!("{group:<14}");
                for crit in Criterion::ALL {
                    let Some(row) = self
                        .table1
                        .iter()
                        .find(|r| r.n_projects == size && r.group == group && r.criterion == crit)
                    else {
                        continue;
                    };
                    for k in 0..3 {
                        let d = row.diffs[k].fmt_with(|v| match crit {
                            Criterion::Auc => format!("{v:.3}"),
                            Criterion::FoundDefects => format!("{v:.1}"),
                        });
                        let p = row.p_values[k].fmt_with(|v| format!("{v:.2}"));
                        line.push_str(&format!(" | {:>16}", format!("{d} ({p})")));
                    }
                    for k in 0..3 {
                        let r = row.rdiffs[k].fmt_with(|v| format!("{:.1}%", v * 100.0));
                        line.push_str(&format!(" | {r:>14}"));
                    }
                }
                let _ = writeln!(out, "{line}");
            }
            out.push('\n');
        }
        out
    }

    /// Plain-text baseline table: AUC and found defects per size.
    pub fn table2_text(&self) -> String {
        let mut sizes: Vec<usize> = Vec::new();
        let mut groups: Vec<&str> = Vec::new();
        for row in &self.table2 {
            if !sizes.contains(&row.n_projects) {
                sizes.push(row.n_projects);
            }
            if !groups.contains(&row.group.as_str()) {
                groups.push(&row.group);
            }
        }
        let mut out = String::new();
        let mut header = format!("{:<14}", "Type");
        for s in &sizes {
            header.push_str(&format!(" | {:>12}", format!("AUC {s} Proj.")));
        }
        for s in &sizes {
            header.push_str(&format!(" | {:>14}", format!("Found {s} Proj.")));
        }
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{}", "-".repeat(header.len()));
        for group in groups {
            let mut line = format!("{group:<14}");
            let find = |s: usize| self.table2.iter().find(|r| r.group == group && r.n_projects == s);
            for &s in &sizes {
                let v = find(s).map_or("NA".to_string(), |r| format!("{:.3}", r.auc));
                line.push_str(&format!(" | {v:>12}"));
            }
            for &s in &sizes {
                let v = find(s).map_or("NA".to_string(), |r| format!("{:.1}", r.found_defects));
                line.push_str(&format!(" | {v:>14}"));
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }
}
