//! Synthetic optimization period from clustered historical days.

mod features;
mod kmeans;
mod markov;

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::HistoricalDay;
use crate::error::{Error, Result};
use crate::par::Execution;

pub use features::{extract_features, FeatureVector, Standardization, FEATURE_LEN};
pub use kmeans::{kmeans, kmeans_with, lloyd, select_representatives, Clustering, DEFAULT_RESTARTS};
pub use markov::{cluster_weights, fit_transition, sample_sequence};

/// Clustered history and the sampled synthetic period.
///
/// Representative day profiles are embedded so the model is self-contained
/// once written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub clusters: usize,
    pub seed: u64,
    pub standardization: Standardization,
    /// Centroids in standardized feature space.
    pub centroids: Vec<Vec<f64>>,
    pub historical_dates: Vec<NaiveDate>,
    /// Cluster of each historical day.
    pub labels: Vec<usize>,
    /// Historical index of each cluster's representative day.
    pub rep_days: Vec<usize>,
    pub rep_dates: Vec<NaiveDate>,
    pub weights: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    /// Cluster of each synthetic day.
    pub sequence: Vec<usize>,
    /// Profiles of the representative days, indexed by cluster.
    pub representatives: Vec<HistoricalDay>,
}

impl ScenarioModel {
    pub fn synthetic_len(&self) -> usize {
        self.sequence.len()
    }

    pub fn steps_per_day(&self) -> usize {
        self.representatives.first().map_or(0, HistoricalDay::steps)
    }

    pub fn synthetic_day(&self, t: usize) -> &HistoricalDay {
        &self.representatives[self.sequence[t]]
    }

    pub fn synthetic_days(&self) -> impl Iterator<Item = &HistoricalDay> + '_ {
        self.sequence.iter().map(|&w| &self.representatives[w])
    }

    /// Per-step series over the whole synthetic period.
    pub fn price(&self) -> Vec<f64> {
        self.synthetic_days().flat_map(|d| d.price.iter().copied()).collect()
    }

    pub fn demand_ch(&self) -> Vec<f64> {
        self.synthetic_days()
            .flat_map(|d| d.demand_ch.iter().copied())
            .collect()
    }

    pub fn demand_wh(&self) -> Vec<f64> {
        self.synthetic_days()
            .flat_map(|d| d.demand_wh.iter().copied())
            .collect()
    }

    pub fn pv_cf(&self) -> Vec<f64> {
        self.synthetic_days().flat_map(|d| d.pv_cf.iter().copied()).collect()
    }

    /// A scenario whose synthetic period is exactly `days`, in order, each day
    /// its own cluster.
    pub fn verbatim(days: Vec<HistoricalDay>) -> Result<Self> {
        if days.is_empty() {
            return Err(Error::Scenario("no days given".into()));
        }
        let n = days.len();
        let labels: Vec<usize> = (0..n).collect();
        let features: Vec<FeatureVector> = days.iter().map(extract_features).collect();
        let standardization = Standardization::fit(&features);
        let model = ScenarioModel {
            clusters: n,
            seed: 0,
            centroids: features.iter().map(|f| standardization.apply(f)).collect(),
            standardization,
            historical_dates: days.iter().map(|d| d.date).collect(),
            weights: cluster_weights(&labels, n),
            transition: fit_transition(&labels, n),
            rep_days: labels.clone(),
            rep_dates: days.iter().map(|d| d.date).collect(),
            sequence: labels.clone(),
            labels,
            representatives: days,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.clusters;
        let fail = |msg: String| Err(Error::Scenario(msg));
        if self.weights.len() != w
            || self.transition.len() != w
            || self.rep_days.len() != w
            || self.representatives.len() != w
        {
            return fail("cluster-indexed fields disagree in length".into());
        }
        if self.weights.iter().sum::<f64>() != 1.0 {
            return fail("cluster weights do not sum to one".into());
        }
        for (i, row) in self.transition.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if row.len() != w || (s - 1.0).abs() > 1e-12 || row.iter().any(|&a| a < 0.0) {
                return fail(format!("transition row {i} is not a distribution"));
            }
        }
        for (c, &r) in self.rep_days.iter().enumerate() {
            if self.labels.get(r) != Some(&c) {
                return fail(format!("representative of cluster {c} carries another label"));
            }
        }
        for c in 0..w {
            if !self.sequence.contains(&c) {
                return fail(format!("cluster {c} missing from the synthetic sequence"));
            }
        }
        let steps = self.steps_per_day();
        for d in &self.representatives {
            d.validate(steps)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ScenarioModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

pub fn build_scenario(
    days: &[HistoricalDay],
    clusters: usize,
    synthetic_days: usize,
    seed: u64,
) -> Result<ScenarioModel> {
    build_scenario_with(days, clusters, synthetic_days, seed, Execution::default())
}

pub fn build_scenario_with(
    days: &[HistoricalDay],
    clusters: usize,
    synthetic_days: usize,
    seed: u64,
    exec: Execution,
) -> Result<ScenarioModel> {
    if days.is_empty() {
        return Err(Error::Scenario("no historical days".into()));
    }
    let steps = days[0].steps();
    for d in days {
        d.validate(steps)?;
    }
    if synthetic_days < clusters {
        return Err(Error::Scenario(format!(
            "cannot cover all clusters: {synthetic_days} days for {clusters} clusters"
        )));
    }
    let features = exec.map(days, extract_features);
    let standardization = Standardization::fit(&features);
    let points: Vec<Vec<f64>> = features.iter().map(|f| standardization.apply(f)).collect();
    let clustering = kmeans_with(&points, clusters, seed, DEFAULT_RESTARTS, exec)?;
    let rep_days = select_representatives(&points, &clustering.centroids, &clustering.labels);
    let weights = cluster_weights(&clustering.labels, clusters);
    let transition = fit_transition(&clustering.labels, clusters);
    let sequence = sample_sequence(&transition, &weights, synthetic_days, seed)?;
    let model = ScenarioModel {
        clusters,
        seed,
        standardization,
        centroids: clustering.centroids,
        historical_dates: days.iter().map(|d| d.date).collect(),
        labels: clustering.labels,
        rep_dates: rep_days.iter().map(|&i| days[i].date).collect(),
        representatives: rep_days.iter().map(|&i| days[i].clone()).collect(),
        rep_days,
        weights,
        transition,
        sequence,
    };
    model.validate()?;
    Ok(model)
}
