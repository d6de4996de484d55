//! Runs the (size × policy × repetition) matrix.
//!
//! Training is deterministic, so every candidate project is trained once and
//! its predictions on the target are cached; a repetition only samples
//! projects, draws a module order, and runs the testing passes.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use super::config::{DatasetSource, ExperimentConfig, SyntheticSpec};
use super::manifest::{AbortedCell, DatasetFingerprint, RepetitionRecord, RunManifest, ARTIFACT_VERSION};
use super::trace::emit_trace;
use crate::bandit::PolicyKind;
use crate::dataset::synthetic::generate_synthetic_project;
use crate::dataset::{select_learning_projects, ProjectDataset, ProjectRegistry};
use crate::error::{Error, Result};
use crate::evaluation::{build_report, CriterionSet, RepetitionResult, Report};
use crate::learner::{train_model, DefectModel};
use crate::reprediction::{run_approach, ApproachKind, ApproachOutcome, RetestStreams};
use crate::rng::{derive_seed, repetition_seed, rng_from_seed, StreamSeeds, Streams};
use crate::simulator::{make_order, run_baseline_with_table, OverlookModel, PredictionTable, SimulationRun};

/// Builds the synthetic project family: the target plus `proj01`, `proj02`,
/// ... whose size, defect rate, and signal are drawn uniformly from the
/// configured ranges.
pub fn synthesize_projects(spec: &SyntheticSpec, target: &str, seed: u64) -> Result<Vec<ProjectDataset>> {
    let mut rng = rng_from_seed(seed);
    let mut projects = vec![generate_synthetic_project(
        target,
        spec.target_modules,
        spec.target_defect_rate,
        spec.metrics,
        spec.target_signal,
        &mut rng,
    )?];
    let width = spec.learning_projects.to_string().len().max(2);
    for i in 1..=spec.learning_projects {
        let modules = rng.gen_range(spec.learning_modules.0..=spec.learning_modules.1);
        let rate = uniform(&mut rng, spec.learning_defect_rate);
        let signal = uniform(&mut rng, spec.learning_signal);
        let name = format!("proj{i:0width$}");
        projects.push(generate_synthetic_project(
            &name,
            modules,
            rate,
            spec.metrics,
            signal,
            &mut rng,
        )?);
    }
    Ok(projects)
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// A trained candidate and its predictions on the target.
#[derive(Debug, Clone)]
struct CachedArm {
    model: DefectModel,
    labels: Vec<bool>,
    probabilities: Vec<f64>,
}

/// Everything shared by the repetitions of one experiment.
pub struct ExperimentContext {
    pub config: ExperimentConfig,
    pub registry: ProjectRegistry,
    arms: std::collections::BTreeMap<String, std::result::Result<CachedArm, String>>,
}

/// All artifacts of one repetition.
#[derive(Debug, Clone)]
pub struct RepetitionRun {
    pub result: RepetitionResult,
    pub baseline: SimulationRun,
    pub outcomes: Vec<ApproachOutcome>,
}

impl RepetitionRun {
    /// The richest retest log available, for trace export.
    pub fn deepest_outcome(&self) -> Option<&ApproachOutcome> {
        self.outcomes.iter().max_by_key(|o| o.approach.passes())
    }

    pub fn trace_text(&self) -> String {
        match self.deepest_outcome() {
            Some(o) => emit_trace(&o.run, &o.retest_log),
            None => emit_trace(&self.baseline, &[]),
        }
    }
}

impl ExperimentContext {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        let projects = match &config.source {
            DatasetSource::Directory(dir) => {
                let registry = ProjectRegistry::load_dir(dir, &config.target, &config.load_options())?;
                return Self::with_registry(config, registry);
            }
            DatasetSource::Synthetic(spec) => {
                let seed = spec.seed.unwrap_or_else(|| derive_seed(config.seed, "synthetic"));
                synthesize_projects(spec, &config.target, seed)?
            }
        };
        let registry = ProjectRegistry::new(projects, config.target.clone())?;
        Self::with_registry(config, registry)
    }

    pub fn with_registry(config: ExperimentConfig, registry: ProjectRegistry) -> Result<Self> {
        let candidates = registry.candidate_names();
        if let Some(&k) = config.learning_sizes.iter().find(|&&k| k > candidates.len()) {
            return Err(Error::ConfigField {
                field: "learning_sizes".into(),
                message: format!("size {k} exceeds the {} available learning projects", candidates.len()),
            });
        }
        let target = registry.target();
        let trained: Vec<(String, std::result::Result<CachedArm, String>)> = candidates
            .par_iter()
            .map(|&name| {
                let project = registry.get(name).expect("candidate exists");
                let arm = train_model(project)
                    .and_then(|model| {
                        let table = PredictionTable::compute(std::slice::from_ref(&model), target)?;
                        let n = table.n_modules();
                        Ok(CachedArm {
                            model,
                            labels: (0..n).map(|m| table.labels(m)[0]).collect(),
                            probabilities: (0..n).map(|m| table.probabilities(m)[0]).collect(),
                        })
                    })
                    .map_err(|e| e.to_string());
                (name.to_string(), arm)
            })
            .collect();
        for (name, arm) in &trained {
            if let Err(e) = arm {
                log::warn!("training on project {name} failed; it will be dropped when sampled: {e}");
            }
        }
        Ok(Self {
            config,
            registry,
            arms: trained.into_iter().collect(),
        })
    }

    pub fn model(&self, project: &str) -> Option<&DefectModel> {
        self.arms.get(project)?.as_ref().ok().map(|a| &a.model)
    }

    pub fn fingerprints(&self) -> Vec<DatasetFingerprint> {
        self.registry
            .projects()
            .map(|p| DatasetFingerprint {
                name: p.name.clone(),
                modules: p.len(),
                defective: p.defective_count(),
                fingerprint: p.fingerprint(),
            })
            .collect()
    }

    fn overlook(&self) -> Result<OverlookModel> {
        OverlookModel::new(self.config.p_overlook)
    }

    fn learning_projects(&self, size: usize, streams: &mut Streams) -> Result<Vec<String>> {
        if self.config.resample_projects {
            select_learning_projects(&self.registry, size, &mut streams.sampling)
        } else {
            // One fixed sample per size, shared by every repetition.
            let seed = derive_seed(derive_seed(self.config.seed, &format!("size:{size}")), "fixed-sample");
            select_learning_projects(&self.registry, size, &mut rng_from_seed(seed))
        }
    }

    fn prediction_table(&self, projects: &[String]) -> Result<PredictionTable> {
        let usable: Vec<(&String, &CachedArm)> = projects
            .iter()
            .filter_map(|name| match self.arms.get(name) {
                Some(Ok(arm)) => Some((name, arm)),
                _ => {
                    log::warn!("dropping learning project {name}: no trained model");
                    None
                }
            })
            .collect();
        if usable.len() < 2 {
            return Err(Error::TooFewArms(format!(
                "{} of {} sampled learning projects trained",
                usable.len(),
                projects.len()
            )));
        }
        let labels: Vec<&[bool]> = usable.iter().map(|(_, a)| a.labels.as_slice()).collect();
        let probabilities: Vec<&[f64]> = usable.iter().map(|(_, a)| a.probabilities.as_slice()).collect();
        PredictionTable::from_columns(
            usable.iter().map(|(n, _)| (*n).clone()).collect(),
            &labels,
            &probabilities,
        )
    }

    /// Runs one repetition from its derived seed alone, so any repetition
    /// can be reproduced in isolation.
    pub fn run_repetition(&self, size: usize, policy: &PolicyKind, repetition: usize) -> Result<RepetitionRun> {
        let seeds = StreamSeeds::from_repetition_seed(repetition_seed(self.config.seed, size, repetition));
        let mut streams = Streams::new(&seeds);
        let learning = self.learning_projects(size, &mut streams)?;
        let table = self.prediction_table(&learning)?;
        let target = self.registry.target();
        let order = make_order(target.len(), &mut streams.order);
        let overlook = self.overlook()?;
        let mut baseline = run_baseline_with_table(
            table,
            target.modules.iter().map(|m| m.id.clone()).collect(),
            target.labels(),
            &order,
            policy,
            overlook,
            self.config.reward,
            &mut streams.policy,
            &mut streams.test_noise,
        )?;
        baseline.seeds = Some(seeds);

        let retest_overlook = if self.config.retest_noise {
            overlook
        } else {
            OverlookModel::none()
        };
        let retest_streams = RetestStreams {
            noise: streams.retest_noise,
            policy: streams.policy,
        };
        let mut outcomes = Vec::new();
        for &approach in self.config.approaches.iter().filter(|a| **a != ApproachKind::Baseline) {
            outcomes.push(run_approach(
                &baseline,
                approach,
                retest_overlook,
                self.config.reprediction_selection,
                &retest_streams,
            )?);
        }
        let find = |pred: fn(&ApproachKind) -> bool| {
            outcomes
                .iter()
                .find(|o| pred(&o.approach))
                .map(CriterionSet::of_outcome)
        };
        let result = RepetitionResult {
            repetition,
            policy: *policy,
            n_projects: size,
            learning_projects: learning,
            seeds,
            baseline: CriterionSet::of_run(&baseline, 0),
            retest: find(|a| *a == ApproachKind::Retest),
            multiple_retests: find(|a| matches!(a, ApproachKind::MultipleRetests { .. })),
        };
        Ok(RepetitionRun {
            result,
            baseline,
            outcomes,
        })
    }
}

/// Results, report, manifest, and (optionally) traces of a full run.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub results: Vec<RepetitionResult>,
    pub report: Report,
    pub manifest: RunManifest,
    pub aborted: Vec<AbortedCell>,
    /// `(file name, contents)` pairs.
    pub traces: Vec<(String, String)>,
}

pub fn trace_file_name(size: usize, policy: &PolicyKind, repetition: usize) -> String {
    let policy = policy.to_string().replace(':', "-");
    format!("trace_k{size}_{policy}_rep{repetition:03}.csv")
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let context = ExperimentContext::prepare(config.clone())?;
    run_prepared(&context)
}

pub fn run_prepared(context: &ExperimentContext) -> Result<ExperimentOutput> {
    let config = &context.config;
    let mut results = Vec::new();
    let mut aborted = Vec::new();
    let mut traces = Vec::new();
    for &size in &config.learning_sizes {
        for policy in &config.policies {
            let runs: Vec<Result<RepetitionRun>> = (0..config.repetitions)
                .into_par_iter()
                .map(|rep| context.run_repetition(size, policy, rep))
                .collect();
            let runs: Result<Vec<RepetitionRun>> = runs.into_iter().collect();
            match runs {
                Ok(runs) => {
                    for run in runs {
                        if config.write_traces {
                            traces.push((trace_file_name(size, policy, run.result.repetition), run.trace_text()));
                        }
                        results.push(run.result);
                    }
                }
                Err(Error::TooFewArms(reason)) => {
                    log::error!("aborting cell size={size} policy={policy}: fewer than 2 arms ({reason})");
                    aborted.push(AbortedCell {
                        n_projects: size,
                        policy: policy.to_string(),
                        reason,
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    let report = build_report(&results, &config.learning_sizes, &config.policies)?;
    let manifest = RunManifest {
        version: ARTIFACT_VERSION.to_string(),
        config: config.to_canonical_toml(),
        datasets: context.fingerprints(),
        repetitions: results
            .iter()
            .map(|r| RepetitionRecord {
                n_projects: r.n_projects,
                policy: r.policy.to_string(),
                repetition: r.repetition,
                seed: r.seeds.repetition,
                learning_projects: r.learning_projects.clone(),
            })
            .collect(),
        aborted: aborted.clone(),
    };
    Ok(ExperimentOutput {
        results,
        report,
        manifest,
        aborted,
        traces,
    })
}

pub const TABLE1_CSV: &str = "report_table1.csv";
pub const TABLE2_CSV: &str = "report_table2.csv";
pub const TABLE1_TEXT: &str = "report_table1.txt";
pub const TABLE2_TEXT: &str = "report_table2.txt";
pub const MANIFEST: &str = "manifest.txt";

impl ExperimentOutput {
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: &str| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write(TABLE1_CSV, &self.report.table1_csv())?;
        write(TABLE2_CSV, &self.report.table2_csv())?;
        write(TABLE1_TEXT, &self.report.table1_text())?;
        write(TABLE2_TEXT, &self.report.table2_text())?;
        write(MANIFEST, &self.manifest.to_text())?;
        if !self.traces.is_empty() {
            let trace_dir = dir.join("traces");
            fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
            for (name, text) in &self.traces {
                let path = trace_dir.join(name);
                fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
        }
        Ok(())
    }
}
