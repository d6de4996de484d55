//! Per-project defect models: z-score standardization, CFS, and logistic
//! regression. One trained model is one bandit arm.

mod cfs;
mod logistic;
mod standardize;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ModuleRecord, ProjectDataset};
use crate::error::{Error, Result};

pub use cfs::{cfs_select, pearson, subset_merit, FeatureSubset};
pub use logistic::{
    sigmoid, train_logistic, train_logistic_with, LogisticFit, LogisticObjective, DEFAULT_LAMBDA, GRADIENT_TOLERANCE,
    MAX_ITERATIONS,
};
pub use standardize::{standardize_fit, StandardizationParams};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectModel {
    pub source_project: String,
    /// Full training schema; `subset.indices` index into it.
    pub feature_names: Vec<String>,
    pub standardization: StandardizationParams,
    pub subset: FeatureSubset,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
}

impl DefectModel {
    pub fn linear_score(&self, module: &ModuleRecord) -> Result<f64> {
        let mut z = self.bias;
        for (&j, w) in self.subset.indices.iter().zip(&self.weights) {
            let name = &self.feature_names[j];
            let raw = module.feature(name).ok_or_else(|| Error::MissingFeature {
                module: module.id.clone(),
                feature: name.clone(),
            })?;
            z += w * self.standardization.apply_value(j, raw);
        }
        Ok(z)
    }

    pub fn predict_prob(&self, module: &ModuleRecord) -> Result<f64> {
        self.linear_score(module).map(sigmoid)
    }

    /// Defective (`true`) when the probability reaches the threshold.
    pub fn predict_label(&self, module: &ModuleRecord) -> Result<bool> {
        self.predict_prob(module).map(|p| self.label_for(p))
    }

    pub fn label_for(&self, probability: f64) -> bool {
        probability >= self.threshold
    }

    /// Debug text form: one `key: values` line per field.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let subset_names: Vec<&str> = self
            .subset
            .indices
            .iter()
            .map(|&j| self.feature_names[j].as_str())
            .collect();
        let subset_means: Vec<f64> = self
            .subset
            .indices
            .iter()
            .map(|&j| self.standardization.means[j])
            .collect();
        let subset_scales: Vec<f64> = self
            .subset
            .indices
            .iter()
            .map(|&j| self.standardization.scales[j])
            .collect();
        let mut out = String::new();
        let _ = writeln!(out, "project: {}", self.source_project);
        let _ = writeln!(out, "subset: {}", subset_names.join(","));
        let _ = writeln!(out, "merit: {}", self.subset.merit);
        let _ = writeln!(out, "means: {}", join(&subset_means));
        let _ = writeln!(out, "scales: {}", join(&subset_scales));
        let _ = writeln!(out, "weights: {}", join(&self.weights));
        let _ = writeln!(out, "bias: {}", self.bias);
        let _ = writeln!(out, "threshold: {}", self.threshold);
        out
    }
}

/// Standardize, select features, and fit the logistic model for one project.
pub fn train_model(project: &ProjectDataset) -> Result<DefectModel> {
    let raw = project.feature_matrix();
    let labels = project.labels();
    let standardization = standardize_fit(&raw)?;
    let z = standardization.apply(&raw);
    let subset = cfs_select(&z, &labels)?;
    let design: Vec<Vec<f64>> = z
        .iter()
        .map(|row| subset.indices.iter().map(|&j| row[j]).collect())
        .collect();
    let fit = train_logistic(&design, &labels)?;
    if fit.weights.iter().any(|w| !w.is_finite()) || !fit.bias.is_finite() {
        return Err(Error::Training("non-finite weights".into()));
    }
    Ok(DefectModel {
        source_project: project.name.clone(),
        feature_names: project.metric_schema.clone(),
        standardization,
        subset,
        weights: fit.weights,
        bias: fit.bias,
        threshold: DEFAULT_THRESHOLD,
    })
}

/// Trains one model per project, in input order. Projects that fail to train
/// are dropped with a warning; fewer than two surviving models is an error.
pub fn build_arm_models(projects: &[&ProjectDataset]) -> Result<Vec<DefectModel>> {
    let trained: Vec<Result<DefectModel>> = projects.par_iter().map(|p| train_model(p)).collect();
    let mut models = Vec::with_capacity(projects.len());
    let mut failures = Vec::new();
    for (project, result) in projects.iter().zip(trained) {
        match result {
            Ok(model) => models.push(model),
            Err(e) => {
                log::warn!("dropping arm for project {:?}: {e}", project.name);
                failures.push(format!("{}: {e}", project.name));
            }
        }
    }
    if models.len() < 2 {
        return Err(Error::TooFewArms(format!(
            "{} of {} projects trained ({})",
            models.len(),
            projects.len(),
            failures.join("; ")
        )));
    }
    Ok(models)
}
