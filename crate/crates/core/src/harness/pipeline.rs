use std::time::Instant;

use rayon::prelude::*;

use super::config::{AllocationMode, ParamOptimization, Preset, RunConfig};
use super::report::{
    clamp_distribution, Comparison, Distribution, EvaluationReport, OptimizationSummary,
    PartitionSummary, RunReport, StageReport, Timings, SCHEMA_VERSION,
};
use crate::circuit::CircuitDocument;
use crate::decomposition::{initial_parameters, CutParameters, DecompositionScheme};
use crate::error::{CutError, Result};
use crate::optimizer::{
    allocate, even_allocation, improvement_ratio, optimize_parameters, segment_schedule,
    tables_for, LossKind, Objective, ShotPlan,
};
use crate::partition::{apply_cuts, enumerate_configurations, ConfigSpace, Partition};
use crate::reconstruction::{reconstruct, variance_coefficients, ConfigValues, Outcomes};
use crate::simulator::{derive_seed, sample, simulate_exact_with_limit, ConfigurationDistribution};

/// Stream tag separating repetition seeds from stage seeds.
const REPETITION_STREAM: u64 = 0x5eed_0e7a;

/// A partitioned circuit with the exact distribution of every configuration.
pub struct Prepared {
    pub partition: Partition,
    pub space: ConfigSpace,
    pub dists: Vec<ConfigurationDistribution>,
}

pub fn prepare(
    doc: &CircuitDocument,
    scheme: DecompositionScheme,
    width_limit: usize,
) -> Result<Prepared> {
    let circuit = doc.circuit();
    let partition =
        apply_cuts(&circuit, &doc.cuts, width_limit).map_err(|e| e.in_stage("partition"))?;
    let space = enumerate_configurations(&partition, scheme);
    let dists = space
        .configs
        .par_iter()
        .enumerate()
        .map(|(ord, cfg)| {
            simulate_exact_with_limit(&partition.fragments[cfg.fragment], cfg, ord, width_limit)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("simulate"))?;
    Ok(Prepared {
        partition,
        space,
        dists,
    })
}

pub fn run_pipeline(config: &RunConfig, doc: &CircuitDocument) -> Result<RunReport> {
    config.validate()?;
    let prep = prepare(doc, config.scheme, config.width_limit)?;
    run_prepared(config, &prep)
}

struct Accumulator {
    counts: Vec<Vec<u64>>,
    shots: Vec<u64>,
}

impl Accumulator {
    fn new(dists: &[ConfigurationDistribution]) -> Self {
        Accumulator {
            counts: dists.iter().map(|d| vec![0; d.probs.len()]).collect(),
            shots: vec![0; dists.len()],
        }
    }

    fn add_stage(&mut self, dists: &[ConfigurationDistribution], plan: &ShotPlan, seed: u64, stage: u64) {
        let records: Vec<_> = dists
            .par_iter()
            .zip(&plan.allocation)
            .enumerate()
            .map(|(ord, (d, &n))| sample(d, n, derive_seed(seed, ord as u64, stage)))
            .collect();
        for (ord, rec) in records.into_iter().enumerate() {
            for (&outcome, &c) in &rec.counts {
                self.counts[ord][outcome] += c;
            }
            self.shots[ord] += rec.n_shots;
        }
    }

    fn estimates(&self) -> Vec<ConfigValues> {
        self.counts
            .iter()
            .zip(&self.shots)
            .map(|(c, &n)| ConfigValues {
                probs: (n > 0).then(|| c.iter().map(|&k| k as f64 / n as f64).collect()),
                shots: n,
                exact: false,
            })
            .collect()
    }
}

/// Configuration values used for variance modelling: sampled estimates, or in
/// exact mode the true distributions treated as if they had been sampled.
fn model_values(config: &RunConfig, prep: &Prepared, acc: &Accumulator) -> Vec<ConfigValues> {
    if config.exact {
        prep.dists
            .iter()
            .zip(&acc.shots)
            .map(|(d, &n)| ConfigValues {
                probs: Some(d.probs.clone()),
                shots: n,
                exact: false,
            })
            .collect()
    } else {
        acc.estimates()
    }
}

fn optimize_stage(
    config: &RunConfig,
    prep: &Prepared,
    values: &[ConfigValues],
    thetas: &[CutParameters],
    kind: LossKind,
) -> Result<(Vec<CutParameters>, OptimizationSummary)> {
    let objective_name = match kind {
        LossKind::SqrtSum { .. } => "sqrt_sum",
        LossKind::PredictedErr { .. } => "predicted_err",
    };
    let objective = Objective {
        partition: &prep.partition,
        space: &prep.space,
        values,
        scheme: config.scheme,
        kind,
    };
    let r = optimize_parameters(thetas, &objective, &config.optimizer)?;
    Ok((
        r.thetas,
        OptimizationSummary {
            objective: objective_name,
            initial_loss: r.initial_loss,
            best_loss: r.best_loss,
            trace: r.trace,
        },
    ))
}

/// Runs the full workflow on an already prepared circuit.
pub fn run_prepared(config: &RunConfig, prep: &Prepared) -> Result<RunReport> {
    config.validate()?;
    if prep.space.prep_states != config.scheme.prep_states() {
        return Err(CutError::InvalidArgument(format!(
            "circuit was prepared for a different scheme than {}",
            config.scheme.name()
        )));
    }
    let (partition, space) = (&prep.partition, &prep.space);
    let num_configs = space.len();
    let mut thetas = vec![initial_parameters(config.scheme); partition.num_cuts()];
    let mut acc = Accumulator::new(&prep.dists);
    let mut stages = Vec::new();
    let mut optimization = None;

    let budgets = match config.allocation {
        AllocationMode::Even => vec![config.total_shots],
        AllocationMode::Optimal => {
            segment_schedule(config.total_shots, config.prior_ratio, config.segments)
                .map_err(|e| e.in_stage("schedule"))?
        }
    };

    for (stage, &budget) in budgets.iter().enumerate() {
        let (plan, even_fallback, kind) = if stage == 0 {
            let kind = match config.allocation {
                AllocationMode::Even => "even",
                AllocationMode::Optimal => "prior",
            };
            (even_allocation(num_configs, budget), false, kind)
        } else {
            let tables = tables_for(&thetas, config.scheme)?;
            let model = variance_coefficients(partition, space, &tables, &model_values(config, prep, &acc))
                .map_err(|e| e.in_stage(format!("variance model, stage {stage}")))?;
            match allocate(&model, budget) {
                Ok(plan) => (plan, false, "posterior"),
                Err(CutError::DegenerateModel) => (even_allocation(num_configs, budget), true, "posterior"),
                Err(e) => return Err(e.in_stage(format!("allocation, stage {stage}"))),
            }
        };
        if !config.exact {
            acc.add_stage(&prep.dists, &plan, config.seed, stage as u64);
        } else {
            for (s, n) in acc.shots.iter_mut().zip(&plan.allocation) {
                *s += n;
            }
        }
        stages.push(StageReport {
            kind,
            budget,
            allocation: plan.allocation,
            even_fallback,
        });

        if stage == 0 && config.param_optimization == ParamOptimization::AfterPrior {
            let values = model_values(config, prep, &acc);
            let (t, summary) = optimize_stage(
                config,
                prep,
                &values,
                &thetas,
                LossKind::SqrtSum {
                    floor: config.optimizer.epsilon_floor,
                },
            )
            .map_err(|e| e.in_stage("parameter optimization"))?;
            thetas = t;
            optimization = Some(summary);
        }
    }

    if config.param_optimization == ParamOptimization::AfterSampling {
        let values = model_values(config, prep, &acc);
        let (t, summary) = optimize_stage(
            config,
            prep,
            &values,
            &thetas,
            LossKind::PredictedErr {
                shots: acc.shots.clone(),
            },
        )
        .map_err(|e| e.in_stage("parameter optimization"))?;
        thetas = t;
        optimization = Some(summary);
    }

    let tables = tables_for(&thetas, config.scheme)?;
    let recon_values: Vec<ConfigValues> = if config.exact {
        prep.dists.iter().map(|d| ConfigValues::exact(d.probs.clone())).collect()
    } else {
        acc.estimates()
    };
    let raw = reconstruct(partition, space, &tables, &recon_values, &Outcomes::All)
        .map_err(|e| e.in_stage("reconstruction"))?
        .p;
    let model = variance_coefficients(partition, space, &tables, &model_values(config, prep, &acc))
        .map_err(|e| e.in_stage("variance model"))?;
    let predicted_err = model.predicted_err(&acc.shots).ok();
    let ratio = improvement_ratio(&model.f).ok();
    let (clamped_p, clamped) = clamp_distribution(&raw);

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        partition: PartitionSummary::new(partition, num_configs),
        stages,
        shots_per_configuration: acc.shots,
        thetas,
        optimization,
        variance_coefficients: model.f,
        predicted_err,
        improvement_ratio: ratio,
        distribution_raw: Distribution::new(&raw),
        distribution_clamped: Distribution::new(&clamped_p),
        clamped,
    })
}

/// Raw reconstructed distribution and predicted error of each repetition.
pub struct Repetitions {
    pub distributions: Vec<Vec<f64>>,
    pub predicted: Vec<Option<f64>>,
}

pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master ^ REPETITION_STREAM, rep as u64, REPETITION_STREAM)
}

pub fn run_repetitions(config: &RunConfig, prep: &Prepared, repetitions: usize) -> Result<Repetitions> {
    let results: Vec<(Vec<f64>, Option<f64>)> = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.seed = repetition_seed(config.seed, r);
            cfg.optimizer.seed = cfg.seed;
            let report = run_prepared(&cfg, prep)?;
            let p = match report.distribution_raw {
                Distribution::Dense(p) => p,
                Distribution::Sparse(_) => {
                    return Err(CutError::InvalidArgument(
                        "evaluation supports at most 16 qubits".into(),
                    ))
                }
            };
            Ok((p, report.predicted_err))
        })
        .collect::<Result<_>>()?;
    let (distributions, predicted) = results.into_iter().unzip();
    Ok(Repetitions {
        distributions,
        predicted,
    })
}

/// `Σ_i` of the unbiased sample variance of `p_i` across repetitions.
pub fn empirical_err(distributions: &[Vec<f64>]) -> f64 {
    let reps = distributions.len();
    if reps < 2 {
        return 0.0;
    }
    let len = distributions[0].len();
    (0..len)
        .map(|i| {
            let mean = distributions.iter().map(|d| d[i]).sum::<f64>() / reps as f64;
            distributions.iter().map(|d| (d[i] - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
        })
        .sum()
}

fn mean_distribution(distributions: &[Vec<f64>]) -> Vec<f64> {
    let reps = distributions.len() as f64;
    let len = distributions.first().map_or(0, Vec::len);
    (0..len)
        .map(|i| distributions.iter().map(|d| d[i]).sum::<f64>() / reps)
        .collect()
}

/// Repeats the pipeline with derived seeds and measures the total variance of
/// the reconstructed distribution; optionally against another preset.
pub fn evaluate_variance(
    config: &RunConfig,
    doc: &CircuitDocument,
    repetitions: usize,
    compare: Option<Preset>,
) -> Result<EvaluationReport> {
    if repetitions < 2 {
        return Err(CutError::InvalidArgument(
            "evaluation needs at least 2 repetitions".into(),
        ));
    }
    config.validate()?;
    let start = Instant::now();
    let prep = prepare(doc, config.scheme, config.width_limit)?;
    let reps = run_repetitions(config, &prep, repetitions)?;
    let err = empirical_err(&reps.distributions);
    let predicted: Option<Vec<f64>> = reps.predicted.iter().copied().collect();
    let mean_predicted_err = predicted.map(|v| v.iter().sum::<f64>() / v.len() as f64);

    let comparison = match compare {
        None => None,
        Some(other) => {
            let mut cfg = RunConfig::from_preset(other, config.total_shots, config.seed);
            cfg.exact = config.exact;
            cfg.width_limit = config.width_limit;
            cfg.circuit_path = config.circuit_path.clone();
            let other_prep = if cfg.scheme.prep_states() == config.scheme.prep_states() {
                None
            } else {
                Some(prepare(doc, cfg.scheme, cfg.width_limit)?)
            };
            let other_reps = run_repetitions(&cfg, other_prep.as_ref().unwrap_or(&prep), repetitions)?;
            let other_err = empirical_err(&other_reps.distributions);
            let ratio = other_err / err;
            Some(Comparison {
                preset: other.name().to_string(),
                empirical_err: other_err,
                ratio,
                overhead_factor: ratio,
            })
        }
    };
    let total_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(EvaluationReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        partition: PartitionSummary::new(&prep.partition, prep.space.len()),
        repetitions,
        empirical_err: err,
        mean_predicted_err,
        mean_distribution: Distribution::new(&mean_distribution(&reps.distributions)),
        comparison,
        timings: Timings {
            total_ms,
            per_repetition_ms: total_ms / repetitions as f64,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CutPoint, GateKind, QuantumCircuit};
    use crate::simulator::simulate_circuit;

    fn fig1_doc() -> CircuitDocument {
        let mut c = QuantumCircuit::new(3);
        c.h(0).h(1).cx(0, 1).push(GateKind::Rz, &[0.3], &[1]);
        c.cx(1, 2).h(2);
        CircuitDocument::new(c, vec![CutPoint::new(1, 3)])
    }

    #[test]
    fn baseline_even_split() {
        let cfg = RunConfig::from_preset(Preset::Baseline, 7000, 1);
        let r = run_pipeline(&cfg, &fig1_doc()).unwrap();
        assert_eq!(r.partition.num_configurations, 7);
        assert_eq!(r.shots_per_configuration, vec![1000; 7]);
        assert_eq!(r.stages.len(), 1);
    }

    #[test]
    fn preset_a_and_b_stages() {
        let r = run_pipeline(&RunConfig::from_preset(Preset::A, 1000, 1), &fig1_doc()).unwrap();
        let budgets: Vec<u64> = r.stages.iter().map(|s| s.budget).collect();
        assert_eq!(budgets, vec![200, 800]);
        assert_eq!(r.shots_per_configuration.iter().sum::<u64>(), 1000);
        let r = run_pipeline(&RunConfig::from_preset(Preset::B, 1000, 1), &fig1_doc()).unwrap();
        let budgets: Vec<u64> = r.stages.iter().map(|s| s.budget).collect();
        assert_eq!(budgets, vec![200, 160, 160, 160, 160, 160]);
        assert_eq!(r.shots_per_configuration.iter().sum::<u64>(), 1000);
    }

    #[test]
    fn exact_mode_every_preset() {
        let doc = fig1_doc();
        let want = simulate_circuit(&doc.circuit());
        for preset in Preset::NAMED {
            let mut cfg = RunConfig::from_preset(preset, 700, 4);
            cfg.exact = true;
            cfg.optimizer.iterations = 3;
            let r = run_pipeline(&cfg, &doc).unwrap();
            let Distribution::Dense(p) = r.distribution_raw else { panic!() };
            for (a, b) in p.iter().zip(&want) {
                assert!((a - b).abs() < 1e-9, "{preset:?}");
            }
        }
    }

    #[test]
    fn exact_evaluation_has_zero_err() {
        let mut cfg = RunConfig::from_preset(Preset::A, 700, 4);
        cfg.exact = true;
        let r = evaluate_variance(&cfg, &fig1_doc(), 3, Some(Preset::Baseline)).unwrap();
        assert_eq!(r.empirical_err, 0.0);
    }

    #[test]
    fn empirical_err_of_constant_is_zero() {
        assert_eq!(empirical_err(&[vec![0.5, 0.5], vec![0.5, 0.5]]), 0.0);
        let e = empirical_err(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((e - 1.0).abs() < 1e-15);
    }
}
