use indexmap::IndexMap;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use super::{ModuleRecord, ProjectDataset};
use crate::error::{Error, Result};

/// The ckjm metric suite used for synthetic schemas.
pub const CK_METRICS: [&str; 20] = [
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3", "loc", "dam", "moa", "mfa", "cam", "ic",
    "cbm", "amc", "max_cc", "avg_cc",
];

fn metric_name(j: usize) -> String {
    CK_METRICS
        .get(j)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("m{j}"))
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Generates a project whose defective modules have metric means shifted by
/// `signal_strength` (in noise standard deviations) along a shared direction.
///
/// Even-indexed metrics carry the full shift, odd-indexed ones 30% of it.
/// Each project perturbs that direction and draws its own per-metric offset
/// and scale, which mimics the distribution shift between projects. A shared
/// latent "size" factor correlates the metrics with each other.
pub fn generate_synthetic_project<R: Rng + ?Sized>(
    name: &str,
    n_modules: usize,
    defect_rate: f64,
    n_metrics: usize,
    signal_strength: f64,
    rng: &mut R,
) -> Result<ProjectDataset> {
    if n_modules == 0 || n_metrics == 0 {
        return Err(Error::Validation(
            "synthetic project needs at least one module and one metric".into(),
        ));
    }
    if !(defect_rate > 0.0 && defect_rate < 1.0) {
        return Err(Error::Validation(format!("defect rate {defect_rate} outside (0, 1)")));
    }
    if !(signal_strength >= 0.0 && signal_strength.is_finite()) {
        return Err(Error::Validation(format!(
            "signal strength {signal_strength} must be finite and non-negative"
        )));
    }

    let schema: Vec<String> = (0..n_metrics).map(metric_name).collect();
    let offsets: Vec<f64> = (0..n_metrics).map(|_| 0.5 * normal(rng)).collect();
    let scales: Vec<f64> = (0..n_metrics).map(|_| (0.2 * normal(rng)).exp()).collect();
    let direction: Vec<f64> = (0..n_metrics)
        .map(|j| {
            let base = if j % 2 == 0 { 1.0 } else { 0.3 };
            base + 0.3 * normal(rng)
        })
        .collect();

    let coin = Bernoulli::new(defect_rate).expect("rate checked above");
    let modules = (0..n_modules)
        .map(|i| {
            let label = coin.sample(rng);
            let size = normal(rng);
            let shift = if label { signal_strength } else { 0.0 };
            let features: IndexMap<String, f64> = schema
                .iter()
                .enumerate()
                .map(|(j, metric)| {
                    let noise = normal(rng);
                    let raw = 0.6 * size + 0.8 * noise + shift * direction[j];
                    (metric.clone(), offsets[j] + scales[j] * raw)
                })
                .collect();
            ModuleRecord::new(format!("{name}.M{i:04}"), features, u64::from(label))
        })
        .collect();

    ProjectDataset::new(name, schema, modules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn expected_defective_count_matches_rate() {
        // E[count] = 235 * 0.115 = 27.025
        let total: usize = (0..1000)
            .map(|seed| {
                generate_synthetic_project("t", 235, 0.115, 4, 1.0, &mut rng_from_seed(seed))
                    .unwrap()
                    .defective_count()
            })
            .sum();
        let mean = total as f64 / 1000.0;
        assert!((mean - 27.025).abs() <= 0.5, "mean defective count {mean}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic_project("t", 50, 0.2, 5, 1.0, &mut rng_from_seed(4)).unwrap();
        let b = generate_synthetic_project("t", 50, 0.2, 5, 1.0, &mut rng_from_seed(4)).unwrap();
        assert_eq!(a.to_csv_string("name", "bug"), b.to_csv_string("name", "bug"));
    }

    #[test]
    fn schema_uses_ck_names_then_generic() {
        let d = generate_synthetic_project("t", 10, 0.3, 22, 0.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(d.metric_schema[0], "wmc");
        assert_eq!(d.metric_schema[19], "avg_cc");
        assert_eq!(d.metric_schema[21], "m21");
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = rng_from_seed(0);
        assert!(generate_synthetic_project("t", 0, 0.1, 3, 1.0, &mut rng).is_err());
        assert!(generate_synthetic_project("t", 10, 0.0, 3, 1.0, &mut rng).is_err());
        assert!(generate_synthetic_project("t", 10, 1.0, 3, 1.0, &mut rng).is_err());
        assert!(generate_synthetic_project("t", 10, 0.1, 0, 1.0, &mut rng).is_err());
        assert!(generate_synthetic_project("t", 10, 0.1, 3, -1.0, &mut rng).is_err());
    }
}
