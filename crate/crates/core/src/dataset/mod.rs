//! CK-metric defect datasets: loading, validation, and learning-project
//! sampling.

pub mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::fnv1a64;

pub use synthetic::{generate_synthetic_project, CK_METRICS};

pub const DEFAULT_ID_COLUMN: &str = "name";
pub const DEFAULT_LABEL_COLUMN: &str = "bug";

/// One module (class) of a project.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleRecord {
    pub id: String,
    /// Metric values keyed by metric name, in schema order.
    pub features: IndexMap<String, f64>,
    pub defect_count: u64,
    pub label: bool,
}

impl ModuleRecord {
    pub fn new(id: impl Into<String>, features: IndexMap<String, f64>, defect_count: u64) -> Self {
        Self {
            id: id.into(),
            features,
            defect_count,
            label: defect_count > 0,
        }
    }

    pub fn feature(&self, name: &str) -> Option<f64> {
        self.features.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectDataset {
    pub name: String,
    pub metric_schema: Vec<String>,
    pub modules: Vec<ModuleRecord>,
}

impl ProjectDataset {
    /// Builds a dataset after checking the module invariants.
    pub fn new(name: impl Into<String>, metric_schema: Vec<String>, modules: Vec<ModuleRecord>) -> Result<Self> {
        let dataset = Self {
            name: name.into(),
            metric_schema,
            modules,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modules.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::with_capacity(self.modules.len());
        for module in &self.modules {
            if !seen.insert(module.id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate module id {:?} in project {:?}",
                    module.id, self.name
                )));
            }
            if module.label != (module.defect_count > 0) {
                return Err(Error::Validation(format!(
                    "module {:?}: label disagrees with defect count {}",
                    module.id, module.defect_count
                )));
            }
            if module.features.len() != self.metric_schema.len()
                || module.features.keys().zip(&self.metric_schema).any(|(k, s)| k != s)
            {
                return Err(Error::Validation(format!(
                    "module {:?}: feature keys differ from the metric schema",
                    module.id
                )));
            }
            if let Some((k, v)) = module.features.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "module {:?}: feature {k:?} is not finite ({v})",
                    module.id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn defective_count(&self) -> usize {
        self.modules.iter().filter(|m| m.label).count()
    }

    pub fn defect_rate(&self) -> f64 {
        if self.modules.is_empty() {
            return 0.0;
        }
        self.defective_count() as f64 / self.modules.len() as f64
    }

    pub fn labels(&self) -> Vec<bool> {
        self.modules.iter().map(|m| m.label).collect()
    }

    /// Row-major feature matrix in schema order.
    pub fn feature_matrix(&self) -> Vec<Vec<f64>> {
        self.modules
            .iter()
            .map(|m| m.features.values().copied().collect())
            .collect()
    }

    /// Serializes to the same comma-separated layout `load_project` reads.
    pub fn to_csv_string(&self, id_column: &str, label_column: &str) -> String {
        let mut out = String::new();
        out.push_str(id_column);
        for metric in &self.metric_schema {
            out.push(',');
            out.push_str(metric);
        }
        out.push(',');
        out.push_str(label_column);
        out.push('\n');
        for module in &self.modules {
            out.push_str(&module.id);
            for value in module.features.values() {
                out.push(',');
                out.push_str(&value.to_string());
            }
            out.push(',');
            out.push_str(&module.defect_count.to_string());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path, id_column: &str, label_column: &str) -> Result<()> {
        fs::write(path, self.to_csv_string(id_column, label_column)).map_err(|e| Error::io(path, e))
    }

    /// FNV-1a digest of the canonical serialization, recorded in run manifests.
    pub fn fingerprint(&self) -> u64 {
        fnv1a64(self.to_csv_string(DEFAULT_ID_COLUMN, DEFAULT_LABEL_COLUMN).as_bytes())
    }
}

pub fn binarize_label(defect_count: i64) -> Result<bool> {
    if defect_count < 0 {
        return Err(Error::Validation(format!("negative defect count {defect_count}")));
    }
    Ok(defect_count > 0)
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub id_column: String,
    pub label_column: String,
    /// Columns that are neither id, label, nor metrics (e.g. a version tag).
    pub ignore_columns: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            id_column: DEFAULT_ID_COLUMN.to_string(),
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            ignore_columns: Vec::new(),
        }
    }
}

pub fn load_project(path: &Path, label_column: &str, id_column: &str) -> Result<ProjectDataset> {
    load_project_with(
        path,
        &LoadOptions {
            id_column: id_column.to_string(),
            label_column: label_column.to_string(),
            ignore_columns: Vec::new(),
        },
    )
}

/// Loads a project file. The project name is the file stem.
pub fn load_project_with(path: &Path, options: &LoadOptions) -> Result<ProjectDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_project(&name, &text, options).map_err(|e| match e {
        Error::Csv { message, .. } => Error::Csv {
            path: path.to_path_buf(),
            message,
        },
        Error::Dataset { message, .. } => Error::Dataset {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Parses project text. Every column other than the id, label, and ignored
/// columns is a metric; data rows are numbered from 1.
pub fn parse_project(name: &str, text: &str, options: &LoadOptions) -> Result<ProjectDataset> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: name.into(),
        message: e.to_string(),
    };
    let dataset_err = |message: String| Error::Dataset {
        path: name.into(),
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();

    let mut seen = HashSet::new();
    for column in &header {
        if !seen.insert(column.as_str()) {
            return Err(dataset_err(format!("duplicate header column {column:?}")));
        }
    }
    let position = |column: &str| {
        header
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| dataset_err(format!("missing header column {column:?}")))
    };
    let id_pos = position(&options.id_column)?;
    let label_pos = position(&options.label_column)?;
    let metric_positions: Vec<usize> = (0..header.len())
        .filter(|&i| i != id_pos && i != label_pos && !options.ignore_columns.contains(&header[i]))
        .collect();
    let metric_schema: Vec<String> = metric_positions.iter().map(|&i| header[i].clone()).collect();

    let mut modules = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record.map_err(csv_err)?;
        let cell = |pos: usize| record.get(pos).unwrap_or("");
        let numeric = |pos: usize| -> Result<f64> {
            let raw = cell(pos);
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumericCell {
                    row,
                    column: header[pos].clone(),
                    value: raw.to_string(),
                })
        };

        let raw_count = numeric(label_pos)?;
        if raw_count.fract() != 0.0 {
            return Err(Error::NonNumericCell {
                row,
                column: header[label_pos].clone(),
                value: cell(label_pos).to_string(),
            });
        }
        if raw_count < 0.0 {
            return Err(dataset_err(format!("negative defect count {raw_count} at row {row}")));
        }
        let defect_count = raw_count as u64;
        binarize_label(raw_count as i64)?;

        let mut features = IndexMap::with_capacity(metric_positions.len());
        for &pos in &metric_positions {
            features.insert(header[pos].clone(), numeric(pos)?);
        }
        modules.push(ModuleRecord::new(cell(id_pos), features, defect_count));
    }

    if modules.is_empty() {
        return Err(Error::EmptyDataset);
    }
    ProjectDataset::new(name, metric_schema, modules)
}

/// All projects of an experiment plus the designated target.
#[derive(Debug, Clone)]
pub struct ProjectRegistry {
    projects: BTreeMap<String, ProjectDataset>,
    target_name: String,
}

impl ProjectRegistry {
    pub fn new(projects: Vec<ProjectDataset>, target_name: impl Into<String>) -> Result<Self> {
        let target_name = target_name.into();
        let mut map = BTreeMap::new();
        for project in projects {
            if let Some(dup) = map.insert(project.name.clone(), project) {
                return Err(Error::Validation(format!("duplicate project name {:?}", dup.name)));
            }
        }
        let target = map
            .get(&target_name)
            .ok_or_else(|| Error::Config(format!("target project {target_name:?} not found")))?;
        let schema = target.metric_schema.clone();
        if let Some(bad) = map.values().find(|p| p.metric_schema != schema) {
            return Err(Error::Validation(format!(
                "project {:?} has a metric schema different from target {:?}",
                bad.name, target_name
            )));
        }
        Ok(Self {
            projects: map,
            target_name,
        })
    }

    /// Loads every `*.csv` file in `dir`.
    pub fn load_dir(dir: &Path, target_name: &str, options: &LoadOptions) -> Result<Self> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")))
            .collect();
        paths.sort();
        let projects = paths
            .iter()
            .map(|p| load_project_with(p, options))
            .collect::<Result<Vec<_>>>()?;
        Self::new(projects, target_name)
    }

    pub fn target(&self) -> &ProjectDataset {
        &self.projects[&self.target_name]
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn get(&self, name: &str) -> Option<&ProjectDataset> {
        self.projects.get(name)
    }

    pub fn projects(&self) -> impl Iterator<Item = &ProjectDataset> {
        self.projects.values()
    }

    /// Non-target project names in sorted order.
    pub fn candidate_names(&self) -> Vec<&str> {
        self.projects
            .keys()
            .filter(|name| **name != self.target_name)
            .map(String::as_str)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }
}

/// Draws `k` distinct learning projects uniformly without replacement,
/// never the target. Names are returned in draw order.
pub fn select_learning_projects<R: Rng + ?Sized>(
    registry: &ProjectRegistry,
    k: usize,
    rng: &mut R,
) -> Result<Vec<String>> {
    let candidates = registry.candidate_names();
    if k == 0 || k > candidates.len() {
        return Err(Error::Config(format!(
            "cannot select {k} learning projects from {} candidates",
            candidates.len()
        )));
    }
    Ok(candidates
        .choose_multiple(rng, k)
        .map(|name| name.to_string())
        .collect())
}
