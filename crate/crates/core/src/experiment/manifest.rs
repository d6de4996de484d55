//! Run manifest: everything needed to reproduce a report.
//!
//! Plain text with four `[section]` blocks. `[config]` echoes the canonical
//! config, `[datasets]` and `[repetitions]` are comma-separated with a header
//! line, and `[aborted]` lists cells dropped for lack of trainable models.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFingerprint {
    pub name: String,
    pub modules: usize,
    pub defective: usize,
    pub fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionRecord {
    pub n_projects: usize,
    /// Policy in config syntax, e.g. `epsilon:0.1`.
    pub policy: String,
    pub repetition: usize,
    pub seed: u64,
    pub learning_projects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbortedCell {
    pub n_projects: usize,
    pub policy: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub version: String,
    pub config: String,
    pub datasets: Vec<DatasetFingerprint>,
    pub repetitions: Vec<RepetitionRecord>,
    pub aborted: Vec<AbortedCell>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version = {}", self.version);
        s.push_str("\n[config]\n");
        s.push_str(&self.config);
        if !self.config.ends_with('\n') {
            s.push('\n');
        }
        s.push_str("\n[datasets]\nname,modules,defective,fingerprint\n");
        for d in &self.datasets {
            let _ = writeln!(s, "{},{},{},{:016x}", d.name, d.modules, d.defective, d.fingerprint);
        }
        s.push_str("\n[repetitions]\nn_projects,policy,repetition,seed,learning_projects\n");
        for r in &self.repetitions {
            let _ = writeln!(
                s,
                "{},{},{},{:016x},{}",
                r.n_projects,
                r.policy,
                r.repetition,
                r.seed,
                r.learning_projects.join(";")
            );
        }
        s.push_str("\n[aborted]\nn_projects,policy,reason\n");
        for a in &self.aborted {
            let _ = writeln!(
                s,
                "{},{},{}",
                a.n_projects,
                a.policy,
                a.reason.replace(['\n', ','], " ")
            );
        }
        s
    }
}

/// Reads back the `[repetitions]` block of a manifest.
pub fn parse_repetition_records(text: &str) -> Result<Vec<RepetitionRecord>> {
    let mut in_section = false;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            in_section = trimmed == "[repetitions]";
            continue;
        }
        if !in_section || trimmed.is_empty() || trimmed.starts_with("n_projects,") {
            continue;
        }
        let bad = |m: &str| Error::Trace {
            line: line_no,
            message: format!("manifest repetition row: {m}"),
        };
        let fields: Vec<&str> = trimmed.splitn(5, ',').collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        records.push(RepetitionRecord {
            n_projects: fields[0].parse().map_err(|_| bad("bad size"))?,
            policy: fields[1].to_string(),
            repetition: fields[2].parse().map_err(|_| bad("bad repetition"))?,
            seed: u64::from_str_radix(fields[3], 16).map_err(|_| bad("bad seed"))?,
            learning_projects: fields[4]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
        });
    }
    Ok(records)
}
