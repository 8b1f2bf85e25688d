use std::collections::BTreeMap;

use serde::Serialize;

use super::config::RunConfig;
use crate::circuit::CutPoint;
use crate::decomposition::CutParameters;
use crate::partition::Partition;

pub const SCHEMA_VERSION: u32 = 1;
/// Distributions with more outcomes than this are written sparsely.
pub const DENSE_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Distribution {
    Dense(Vec<f64>),
    /// Outcome (decimal) -> value, zeros omitted.
    Sparse(BTreeMap<String, f64>),
}

impl Distribution {
    pub fn new(p: &[f64]) -> Self {
        if p.len() <= DENSE_LIMIT {
            Distribution::Dense(p.to_vec())
        } else {
            Distribution::Sparse(
                p.iter()
                    .enumerate()
                    .filter(|&(_, &v)| v != 0.0)
                    .map(|(i, &v)| (i.to_string(), v))
                    .collect(),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSummary {
    pub num_qubits: usize,
    pub num_fragments: usize,
    pub fragment_widths: Vec<usize>,
    pub num_cuts: usize,
    pub num_configurations: usize,
    pub cuts: Vec<CutPoint>,
}

impl PartitionSummary {
    pub fn new(p: &Partition, num_configurations: usize) -> Self {
        PartitionSummary {
            num_qubits: p.num_qubits,
            num_fragments: p.fragments.len(),
            fragment_widths: p.fragments.iter().map(|f| f.width()).collect(),
            num_cuts: p.num_cuts(),
            num_configurations,
            cuts: p.cuts.iter().map(|c| c.point).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub kind: &'static str,
    pub budget: u64,
    pub allocation: Vec<u64>,
    /// The variance model was degenerate and the stage fell back to an even split.
    pub even_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationSummary {
    pub objective: &'static str,
    pub initial_loss: f64,
    pub best_loss: f64,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub partition: PartitionSummary,
    pub stages: Vec<StageReport>,
    pub shots_per_configuration: Vec<u64>,
    pub thetas: Vec<CutParameters>,
    pub optimization: Option<OptimizationSummary>,
    pub variance_coefficients: Vec<f64>,
    /// `Σ f_e / N_e` for the final tables and shot counts.
    pub predicted_err: Option<f64>,
    /// `E Σf / (Σ√f)²` of the final coefficients.
    pub improvement_ratio: Option<f64>,
    pub distribution_raw: Distribution,
    pub distribution_clamped: Distribution,
    /// Whether clamping to [0, 1] and renormalizing changed the distribution.
    pub clamped: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Clamps to [0, 1] and renormalizes. Returns the result and whether anything changed.
pub fn clamp_distribution(p: &[f64]) -> (Vec<f64>, bool) {
    let mut q: Vec<f64> = p.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let sum: f64 = q.iter().sum();
    if sum > 0.0 {
        q.iter_mut().for_each(|v| *v /= sum);
    }
    let changed = q.iter().zip(p).any(|(a, b)| a != b);
    (q, changed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub per_repetition_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub preset: String,
    pub empirical_err: f64,
    /// `Err_compare / Err_config`.
    pub ratio: f64,
    /// Equivalent shot overhead of the comparison preset, `ratio` under `Err ∝ 1/N`.
    pub overhead_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub partition: PartitionSummary,
    pub repetitions: usize,
    pub empirical_err: f64,
    pub mean_predicted_err: Option<f64>,
    pub mean_distribution: Distribution,
    pub comparison: Option<Comparison>,
    pub timings: Timings,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_renormalizes() {
        let (q, changed) = clamp_distribution(&[0.6, -0.1, 0.5]);
        assert!(changed);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(q[1], 0.0);
        let (q, changed) = clamp_distribution(&[0.25, 0.75]);
        assert!(!changed);
        assert_eq!(q, vec![0.25, 0.75]);
    }

    #[test]
    fn sparse_above_limit() {
        let mut p = vec![0.0; DENSE_LIMIT * 2];
        p[7] = 1.0;
        match Distribution::new(&p) {
            Distribution::Sparse(m) => assert_eq!(m, BTreeMap::from([("7".to_string(), 1.0)])),
            _ => panic!("expected sparse"),
        }
        assert!(matches!(Distribution::new(&[1.0, 0.0]), Distribution::Dense(_)));
    }
}
