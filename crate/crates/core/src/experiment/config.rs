//! Experiment configuration.
//!
//! The config file is TOML. Every key is optional; an empty file yields the
//! replication settings (sizes 8/16/32, ε ∈ {0, 0.1, 0.2, 0.3} and UCB, all
//! three approaches, 40 repetitions, 20% overlooking) on synthetic data.
//!
//! ```toml
//! target = "arc"
//! dataset_dir = "data/defectdata"      # omit to synthesize projects
//! id_column = "name"
//! label_column = "bug"
//! ignore_columns = ["version"]
//! learning_sizes = [8, 16, 32]
//! policies = ["epsilon:0", "epsilon:0.1", "epsilon:0.2", "epsilon:0.3", "ucb"]
//! approaches = ["baseline", "retest", "multiple_retests:2"]
//! repetitions = 40
//! p_overlook = 0.2
//! seed = 1
//! reward_auc = "binary"                # or "probability"
//! retest_noise = true
//! resample_projects = true
//! reprediction_selection = "greedy"    # or "policy"
//! output_dir = "results"
//! write_traces = false
//!
//! [synthetic]
//! learning_projects = 32
//! target_modules = 235
//! target_defect_rate = 0.115
//! target_signal = 0.6
//! metrics = 20
//! learning_modules = [80, 600]
//! learning_defect_rate = [0.05, 0.45]
//! learning_signal = [0.0, 1.2]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandit::{PolicyKind, RewardMode};
use crate::dataset::{LoadOptions, DEFAULT_ID_COLUMN, DEFAULT_LABEL_COLUMN};
use crate::error::{Error, Result};
use crate::reprediction::{ApproachKind, RepredictionSelection};
use crate::simulator::DEFAULT_P_OVERLOOK;

pub const DEFAULT_TARGET: &str = "arc";
pub const DEFAULT_REPETITIONS: usize = 40;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SIZES: [usize; 3] = [8, 16, 32];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    id_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ignore_columns: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    learning_sizes: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policies: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    approaches: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    repetitions: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_overlook: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reward_auc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    retest_noise: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resample_projects: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reprediction_selection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    write_traces: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthetic: Option<RawSynthetic>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynthetic {
    #[serde(skip_serializing_if = "Option::is_none")]
    learning_projects: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_modules: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_defect_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_signal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    learning_modules: Option<[i64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    learning_defect_rate: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    learning_signal: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

/// Parameters of the synthetic project family.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub learning_projects: usize,
    pub target_modules: usize,
    pub target_defect_rate: f64,
    pub target_signal: f64,
    pub metrics: usize,
    /// Inclusive range of learning-project module counts.
    pub learning_modules: (usize, usize),
    pub learning_defect_rate: (f64, f64),
    pub learning_signal: (f64, f64),
    /// Generation seed; derived from the master seed when absent.
    pub seed: Option<u64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            learning_projects: 32,
            target_modules: 235,
            target_defect_rate: 0.115,
            target_signal: 0.6,
            metrics: 20,
            learning_modules: (80, 600),
            learning_defect_rate: (0.05, 0.45),
            learning_signal: (0.0, 1.2),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Directory(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    pub target: String,
    pub id_column: String,
    pub label_column: String,
    pub ignore_columns: Vec<String>,
    pub learning_sizes: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    pub approaches: Vec<ApproachKind>,
    pub repetitions: usize,
    pub p_overlook: f64,
    pub seed: u64,
    pub reward: RewardMode,
    pub retest_noise: bool,
    pub resample_projects: bool,
    pub reprediction_selection: RepredictionSelection,
    pub output_dir: PathBuf,
    pub write_traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: DatasetSource::Synthetic(SyntheticSpec::default()),
            target: DEFAULT_TARGET.to_string(),
            id_column: DEFAULT_ID_COLUMN.to_string(),
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            ignore_columns: Vec::new(),
            learning_sizes: DEFAULT_SIZES.to_vec(),
            policies: PolicyKind::replication_set(),
            approaches: ApproachKind::all(),
            repetitions: DEFAULT_REPETITIONS,
            p_overlook: DEFAULT_P_OVERLOOK,
            seed: DEFAULT_SEED,
            reward: RewardMode::Binary,
            retest_noise: true,
            resample_projects: true,
            reprediction_selection: RepredictionSelection::Greedy,
            output_dir: PathBuf::from("results"),
            write_traces: false,
        }
    }
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigField {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: i64) -> Result<usize> {
    if v < 1 {
        return Err(field_err(field, format!("must be at least 1, got {v}")));
    }
    Ok(v as usize)
}

fn unit_interval(field: &str, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(field_err(field, format!("must lie in [0, 1], got {v}")));
    }
    Ok(v)
}

fn ordered_range<T: PartialOrd + Copy + std::fmt::Debug>(field: &str, r: [T; 2]) -> Result<(T, T)> {
    if r[0] > r[1] {
        return Err(field_err(field, format!("range {r:?} is reversed")));
    }
    Ok((r[0], r[1]))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let d = Self::default();
        let learning_sizes = match raw.learning_sizes {
            Some(v) => {
                if v.is_empty() {
                    return Err(field_err("learning_sizes", "must not be empty"));
                }
                v.into_iter()
                    .map(|s| {
                        if s < 2 {
                            Err(field_err(
                                "learning_sizes",
                                format!("each size must be at least 2, got {s}"),
                            ))
                        } else {
                            Ok(s as usize)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            None => d.learning_sizes,
        };
        let policies = match raw.policies {
            Some(v) => {
                if v.is_empty() {
                    return Err(field_err("policies", "must not be empty"));
                }
                v.iter()
                    .map(|s| s.parse().map_err(|e: Error| field_err("policies", e.to_string())))
                    .collect::<Result<Vec<_>>>()?
            }
            None => d.policies,
        };
        let approaches = match raw.approaches {
            Some(v) => {
                let parsed = v
                    .iter()
                    .map(|s| s.parse().map_err(|e: Error| field_err("approaches", e.to_string())))
                    .collect::<Result<Vec<ApproachKind>>>()?;
                if !parsed.contains(&ApproachKind::Baseline) {
                    return Err(field_err("approaches", "must include \"baseline\""));
                }
                let multiple = parsed
                    .iter()
                    .filter(|a| matches!(a, ApproachKind::MultipleRetests { .. }))
                    .count();
                if multiple > 1 || parsed.iter().filter(|a| **a == ApproachKind::Retest).count() > 1 {
                    return Err(field_err("approaches", "each approach may appear once"));
                }
                parsed
            }
            None => d.approaches,
        };
        let repetitions = match raw.repetitions {
            Some(v) => positive("repetitions", v)?,
            None => d.repetitions,
        };
        let p_overlook = match raw.p_overlook {
            Some(v) => unit_interval("p_overlook", v)?,
            None => d.p_overlook,
        };
        let reward = match raw.reward_auc.as_deref() {
            None | Some("binary") => RewardMode::Binary,
            Some("probability") => RewardMode::Probability,
            Some(other) => {
                return Err(field_err(
                    "reward_auc",
                    format!("expected \"binary\" or \"probability\", got {other:?}"),
                ))
            }
        };
        let reprediction_selection = match raw.reprediction_selection.as_deref() {
            None | Some("greedy") => RepredictionSelection::Greedy,
            Some("policy") => RepredictionSelection::Policy,
            Some(other) => {
                return Err(field_err(
                    "reprediction_selection",
                    format!("expected \"greedy\" or \"policy\", got {other:?}"),
                ))
            }
        };

        let source = match (raw.dataset_dir, raw.synthetic) {
            (Some(_), Some(_)) => {
                return Err(field_err("synthetic", "cannot be combined with dataset_dir"));
            }
            (Some(dir), None) => DatasetSource::Directory(dir),
            (None, synthetic) => {
                let s = synthetic.unwrap_or_default();
                let sd = SyntheticSpec::default();
                let spec = SyntheticSpec {
                    learning_projects: s
                        .learning_projects
                        .map(|v| positive("synthetic.learning_projects", v))
                        .transpose()?
                        .unwrap_or(sd.learning_projects),
                    target_modules: s
                        .target_modules
                        .map(|v| positive("synthetic.target_modules", v))
                        .transpose()?
                        .unwrap_or(sd.target_modules),
                    target_defect_rate: s.target_defect_rate.unwrap_or(sd.target_defect_rate),
                    target_signal: s.target_signal.unwrap_or(sd.target_signal),
                    metrics: s
                        .metrics
                        .map(|v| positive("synthetic.metrics", v))
                        .transpose()?
                        .unwrap_or(sd.metrics),
                    learning_modules: match s.learning_modules {
                        Some(r) => {
                            let (lo, hi) = ordered_range("synthetic.learning_modules", r)?;
                            (
                                positive("synthetic.learning_modules", lo)?,
                                positive("synthetic.learning_modules", hi)?,
                            )
                        }
                        None => sd.learning_modules,
                    },
                    learning_defect_rate: match s.learning_defect_rate {
                        Some(r) => ordered_range("synthetic.learning_defect_rate", r)?,
                        None => sd.learning_defect_rate,
                    },
                    learning_signal: match s.learning_signal {
                        Some(r) => ordered_range("synthetic.learning_signal", r)?,
                        None => sd.learning_signal,
                    },
                    seed: s.seed,
                };
                for (field, rate) in [
                    ("synthetic.target_defect_rate", spec.target_defect_rate),
                    ("synthetic.learning_defect_rate", spec.learning_defect_rate.0),
                    ("synthetic.learning_defect_rate", spec.learning_defect_rate.1),
                ] {
                    if !(rate > 0.0 && rate < 1.0) {
                        return Err(field_err(field, format!("must lie in (0, 1), got {rate}")));
                    }
                }
                for (field, signal) in [
                    ("synthetic.target_signal", spec.target_signal),
                    ("synthetic.learning_signal", spec.learning_signal.0),
                    ("synthetic.learning_signal", spec.learning_signal.1),
                ] {
                    if !(signal >= 0.0 && signal.is_finite()) {
                        return Err(field_err(
                            field,
                            format!("must be finite and non-negative, got {signal}"),
                        ));
                    }
                }
                if let Some(&too_big) = learning_sizes.iter().find(|&&k| k > spec.learning_projects) {
                    return Err(field_err(
                        "learning_sizes",
                        format!(
                            "size {too_big} exceeds the {} synthetic learning projects",
                            spec.learning_projects
                        ),
                    ));
                }
                DatasetSource::Synthetic(spec)
            }
        };

        Ok(Self {
            source,
            target: raw.target.unwrap_or(d.target),
            id_column: raw.id_column.unwrap_or(d.id_column),
            label_column: raw.label_column.unwrap_or(d.label_column),
            ignore_columns: raw.ignore_columns.unwrap_or_default(),
            learning_sizes,
            policies,
            approaches,
            repetitions,
            p_overlook,
            seed: raw.seed.unwrap_or(d.seed),
            reward,
            retest_noise: raw.retest_noise.unwrap_or(d.retest_noise),
            resample_projects: raw.resample_projects.unwrap_or(d.resample_projects),
            reprediction_selection,
            output_dir: raw.output_dir.unwrap_or(d.output_dir),
            write_traces: raw.write_traces.unwrap_or(d.write_traces),
        })
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            id_column: self.id_column.clone(),
            label_column: self.label_column.clone(),
            ignore_columns: self.ignore_columns.clone(),
        }
    }

    /// Canonical TOML with every setting spelled out. The output directory
    /// is omitted so manifests do not depend on where results are written.
    pub fn to_canonical_toml(&self) -> String {
        let synthetic = match &self.source {
            DatasetSource::Synthetic(s) => Some(RawSynthetic {
                learning_projects: Some(s.learning_projects as i64),
                target_modules: Some(s.target_modules as i64),
                target_defect_rate: Some(s.target_defect_rate),
                target_signal: Some(s.target_signal),
                metrics: Some(s.metrics as i64),
                learning_modules: Some([s.learning_modules.0 as i64, s.learning_modules.1 as i64]),
                learning_defect_rate: Some([s.learning_defect_rate.0, s.learning_defect_rate.1]),
                learning_signal: Some([s.learning_signal.0, s.learning_signal.1]),
                seed: s.seed,
            }),
            DatasetSource::Directory(_) => None,
        };
        let raw = RawConfig {
            target: Some(self.target.clone()),
            dataset_dir: match &self.source {
                DatasetSource::Directory(dir) => Some(dir.clone()),
                DatasetSource::Synthetic(_) => None,
            },
            id_column: Some(self.id_column.clone()),
            label_column: Some(self.label_column.clone()),
            ignore_columns: Some(self.ignore_columns.clone()),
            learning_sizes: Some(self.learning_sizes.iter().map(|&s| s as i64).collect()),
            policies: Some(self.policies.iter().map(|p| p.to_string()).collect()),
            approaches: Some(self.approaches.iter().map(|a| a.to_string()).collect()),
            repetitions: Some(self.repetitions as i64),
            p_overlook: Some(self.p_overlook),
            seed: Some(self.seed),
            reward_auc: Some(
                match self.reward {
                    RewardMode::Binary => "binary",
                    RewardMode::Probability => "probability",
                }
                .into(),
            ),
            retest_noise: Some(self.retest_noise),
            resample_projects: Some(self.resample_projects),
            reprediction_selection: Some(
                match self.reprediction_selection {
                    RepredictionSelection::Greedy => "greedy",
                    RepredictionSelection::Policy => "policy",
                }
                .into(),
            ),
            output_dir: None,
            write_traces: Some(self.write_traces),
            synthetic,
        };
        toml::to_string(&raw).expect("config serializes")
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_toml_str(&text)
}
