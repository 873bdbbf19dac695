//! Affordance-based viewpoint quality.
//!
//! Operator trials are scored per subject, outliers are dropped, and each
//! viewpoint on the task-centered hemisphere gets a value `|v|` (lower is
//! better). Viewpoints are then clustered into manifolds of similar value,
//! and a manifold model can be projected onto a voxel grid as a reward field.

mod cluster;
mod fixture;
mod hemisphere;
mod reward;

pub use cluster::{
    cut_inconsistent, dimension_stds, inconsistency, pairwise_dissimilarities, standardized_distance, upgma_cluster,
    upgma_linkage, Inconsistency, Linkage, Merge,
};
pub use fixture::{load_default_manifolds, published_manifold_values, PUBLISHED_THRESHOLDS};
pub use hemisphere::{sample_hemisphere, HemisphereGroup, Viewpoint, DEFAULT_VIEWPOINT_COUNT, HEMISPHERE_RADIUS};
pub use reward::{reward_field, RewardField, TaskPose};

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ViewpointError {
    #[error("subject {subject} has {count} trials; at least 2 are needed to normalize")]
    TooFewTrials { subject: String, count: usize },
    #[error("subject {subject} has zero spread in {channel}; cannot normalize")]
    DegenerateNormalization { subject: String, channel: &'static str },
    #[error("outlier group {group} has {count} records; at least 3 are needed")]
    SmallGroup { group: String, count: usize },
    #[error("invalid trial record: {0}")]
    InvalidRecord(String),
    #[error("need at least {min} viewpoints, got {got}")]
    TooFewViewpoints { min: usize, got: usize },
    #[error("dimension {0} has zero spread")]
    DegenerateDimension(usize),
    #[error("clustering needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("inconsistency threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("affordance {0} is not in the model set")]
    MissingAffordance(Affordance),
    #[error("task position ({0}, {1}, {2}) is outside the grid")]
    TaskOutOfBounds(f64, f64, f64),
    #[error("unsupported manifold document schema {0:?}")]
    Schema(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Affordance {
    Reachability,
    Passability,
    Manipulability,
    Traversability,
}

impl Affordance {
    pub const ALL: [Affordance; 4] =
        [Affordance::Reachability, Affordance::Passability, Affordance::Manipulability, Affordance::Traversability];
}

impl std::fmt::Display for Affordance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for Affordance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Affordance::ALL
            .into_iter()
            .find(|a| a.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown affordance {s:?}"))
    }
}

/// One operator trial: completion time and error count for a subject,
/// affordance and viewpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub subject: String,
    pub affordance: Affordance,
    pub viewpoint: usize,
    pub time_s: f64,
    pub errors: u32,
}

impl TrialRecord {
    fn validate(&self) -> Result<(), ViewpointError> {
        if !(self.time_s > 0.0) || !self.time_s.is_finite() {
            return Err(ViewpointError::InvalidRecord(format!(
                "subject {} viewpoint {}: time {} must be positive",
                self.subject, self.viewpoint, self.time_s
            )));
        }
        Ok(())
    }
}

/// Read `subject,affordance,viewpoint,time_s,errors` records with a header row.
pub fn read_trials<R: Read>(reader: R) -> Result<Vec<TrialRecord>, ViewpointError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let rec: TrialRecord = rec?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Weight of normalized completion time in the performance score.
pub const TIME_WEIGHT: f64 = 0.4;
/// Weight of normalized error count; errors weigh slightly more than time.
pub const ERROR_WEIGHT: f64 = 0.6;

/// Performance scores of one subject's trials: a weighted sum of the
/// z-normalized time and error count, normalized over all of that subject's
/// trials. Lower is better.
pub fn performance_score(records: &[TrialRecord]) -> Result<Vec<f64>, ViewpointError> {
    let subject = records.first().map(|r| r.subject.clone()).unwrap_or_default();
    if records.len() < 2 {
        return Err(ViewpointError::TooFewTrials { subject, count: records.len() });
    }
    if let Some(other) = records.iter().find(|r| r.subject != subject) {
        return Err(ViewpointError::InvalidRecord(format!(
            "mixed subjects {subject} and {} in one scoring batch",
            other.subject
        )));
    }
    for r in records {
        r.validate()?;
    }
    let (t_mean, t_std) = mean_std(records.iter().map(|r| r.time_s));
    let (e_mean, e_std) = mean_std(records.iter().map(|r| r.errors as f64));
    if !(t_std > 0.0) {
        return Err(ViewpointError::DegenerateNormalization { subject, channel: "time" });
    }
    if !(e_std > 0.0) {
        return Err(ViewpointError::DegenerateNormalization { subject, channel: "errors" });
    }
    Ok(records
        .iter()
        .map(|r| TIME_WEIGHT * (r.time_s - t_mean) / t_std + ERROR_WEIGHT * (r.errors as f64 - e_mean) / e_std)
        .collect())
}

/// How trials are grouped when looking for time outliers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutlierGrouping {
    #[default]
    Affordance,
    AffordanceViewpoint,
}

/// Scale turning a median absolute deviation into a normal-consistent spread.
pub const MAD_SCALE: f64 = 1.4826;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Drop records whose time is more than three scaled MADs from its group's
/// median. Groups with zero MAD keep every record.
pub fn reject_outliers(records: &[TrialRecord], grouping: OutlierGrouping) -> Result<Vec<TrialRecord>, ViewpointError> {
    let key = |r: &TrialRecord| match grouping {
        OutlierGrouping::Affordance => (r.affordance, None),
        OutlierGrouping::AffordanceViewpoint => (r.affordance, Some(r.viewpoint)),
    };
    let mut groups: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(key(r)).or_default().push(r.time_s);
    }
    let mut limits = BTreeMap::new();
    for (k, mut times) in groups {
        if times.len() < 3 {
            let group = match k.1 {
                Some(v) => format!("{}/{v}", k.0),
                None => k.0.to_string(),
            };
            return Err(ViewpointError::SmallGroup { group, count: times.len() });
        }
        times.sort_by(f64::total_cmp);
        let med = median(&times);
        let mut dev: Vec<f64> = times.iter().map(|t| (t - med).abs()).collect();
        dev.sort_by(f64::total_cmp);
        limits.insert(k, (med, 3.0 * MAD_SCALE * median(&dev)));
    }
    Ok(records
        .iter()
        .filter(|r| {
            let (med, limit) = limits[&key(r)];
            limit == 0.0 || (r.time_s - med).abs() <= limit
        })
        .cloned()
        .collect())
}

/// Viewpoint values `|v|` per affordance: score every subject, reject
/// outliers, then average the surviving scores per viewpoint.
pub fn viewpoint_values(
    records: &[TrialRecord],
    grouping: OutlierGrouping,
) -> Result<BTreeMap<(Affordance, usize), f64>, ViewpointError> {
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_subject.entry(r.subject.as_str()).or_default().push(i);
    }
    let mut scores = vec![0.0; records.len()];
    for idx in by_subject.values() {
        let batch: Vec<TrialRecord> = idx.iter().map(|&i| records[i].clone()).collect();
        for (&i, s) in idx.iter().zip(performance_score(&batch)?) {
            scores[i] = s;
        }
    }
    let kept = reject_outliers(records, grouping)?;
    // records are matched back by position among identical copies
    let mut remaining: Vec<bool> = vec![false; records.len()];
    let mut cursor = 0;
    for k in &kept {
        while records[cursor] != *k {
            cursor += 1;
        }
        remaining[cursor] = true;
        cursor += 1;
    }
    let mut sums: BTreeMap<(Affordance, usize), (f64, usize)> = BTreeMap::new();
    for (i, r) in records.iter().enumerate().filter(|(i, _)| remaining[*i]) {
        let e = sums.entry((r.affordance, r.viewpoint)).or_insert((0.0, 0));
        e.0 += scores[i];
        e.1 += 1;
    }
    Ok(sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect())
}

/// Clustering input: viewpoint position in task-centered spherical
/// coordinates and its value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub value: f64,
}

impl SamplePoint {
    pub fn as_array(&self) -> [f64; 4] {
        [self.r, self.theta, self.phi, self.value]
    }
}

/// A cluster of viewpoints with similar value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifold {
    /// Viewpoint indices, ascending.
    pub members: Vec<usize>,
    /// Mean member value.
    pub value: f64,
    /// 1-based rank, best (lowest value) first.
    pub rank: usize,
}

/// Manifolds of one affordance on the task-centered hemisphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffordanceModel {
    pub affordance: Affordance,
    pub radius: f64,
    pub inconsistency_threshold: f64,
    pub viewpoints: Vec<Viewpoint>,
    /// Ranked ascending by value.
    pub manifolds: Vec<Manifold>,
}

impl AffordanceModel {
    /// Manifold index (into `manifolds`) of each viewpoint.
    pub fn membership(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.viewpoints.len()];
        for (m, man) in self.manifolds.iter().enumerate() {
            for &i in &man.members {
                out[i] = m;
            }
        }
        out
    }

    pub fn best_value(&self) -> f64 {
        self.manifolds.iter().map(|m| m.value).fold(f64::INFINITY, f64::min)
    }

    pub fn worst_value(&self) -> f64 {
        self.manifolds.iter().map(|m| m.value).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub const MANIFOLD_SCHEMA: &str = "tetherplan/manifolds@1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldDocument {
    pub schema: String,
    pub models: Vec<AffordanceModel>,
}

pub fn write_models(models: &[AffordanceModel]) -> String {
    let doc = ManifoldDocument { schema: MANIFOLD_SCHEMA.to_string(), models: models.to_vec() };
    serde_json::to_string_pretty(&doc).expect("manifold document serializes")
}

pub fn read_models(text: &str) -> Result<Vec<AffordanceModel>, ViewpointError> {
    let doc: ManifoldDocument = serde_json::from_str(text)?;
    if doc.schema != MANIFOLD_SCHEMA {
        return Err(ViewpointError::Schema(doc.schema));
    }
    Ok(doc.models)
}
