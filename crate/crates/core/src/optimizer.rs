//! Shot allocation across configurations and cut-parameter search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{
    build_table, build_table_l4_projected, l4_subspace_project, preset_table, CoefficientTable,
    CutParameters, DecompositionScheme,
};
use crate::error::{CutError, Result};
use crate::partition::{ConfigSpace, Partition};
use crate::reconstruction::{variance_coefficients, ConfigValues, VarianceModel};

/// Floor added inside the square root of the loss.
pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-12;
/// Central finite-difference step for loss gradients.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShotPlan {
    pub allocation: Vec<u64>,
    pub total: u64,
}

impl ShotPlan {
    fn from_allocation(allocation: Vec<u64>) -> Self {
        let total = allocation.iter().sum();
        ShotPlan { allocation, total }
    }
}

/// Rounds non-negative real targets summing to `total` down, then hands the
/// leftover units to the largest remainders (lower index first on ties).
pub fn largest_remainder(targets: &[f64], total: u64) -> Vec<u64> {
    let mut out: Vec<u64> = targets.iter().map(|t| t.floor().max(0.0) as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (targets[a] - targets[a].floor(), targets[b] - targets[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

pub fn even_allocation(num_configs: usize, total: u64) -> ShotPlan {
    let target = total as f64 / num_configs as f64;
    ShotPlan::from_allocation(largest_remainder(&vec![target; num_configs], total))
}

/// Unrounded optimum `N √f_e / Σ √f_e`.
pub fn continuous_allocation(f: &[f64], total: u64) -> Result<Vec<f64>> {
    let roots: Vec<f64> = f.iter().map(|v| v.max(0.0).sqrt()).collect();
    let sum: f64 = roots.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(CutError::DegenerateModel);
    }
    Ok(roots.iter().map(|r| total as f64 * r / sum).collect())
}

/// Shots proportional to `√f_e`, summing exactly to `total`.
///
/// When the budget allows, every configuration with `f_e > 0` receives at
/// least one shot so the predicted error stays finite; the shot comes from
/// the largest allocation (lowest ordinal on ties).
pub fn allocate(model: &VarianceModel, total: u64) -> Result<ShotPlan> {
    let targets = continuous_allocation(&model.f, total)?;
    let mut alloc = largest_remainder(&targets, total);
    let positive = model.f.iter().filter(|&&f| f > 0.0).count() as u64;
    if positive <= total {
        for e in 0..alloc.len() {
            if model.f[e] > 0.0 && alloc[e] == 0 {
                let donor = (0..alloc.len())
                    .max_by(|&a, &b| alloc[a].cmp(&alloc[b]).then(b.cmp(&a)))
                    .unwrap();
                alloc[donor] -= 1;
                alloc[e] += 1;
            }
        }
    }
    Ok(ShotPlan::from_allocation(alloc))
}

/// `E Σf / (Σ√f)²`, the fixed-N variance ratio of even over optimal allocation.
pub fn improvement_ratio(f: &[f64]) -> Result<f64> {
    if f.is_empty() {
        return Err(CutError::InvalidArgument("empty coefficient list".into()));
    }
    if f.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(CutError::InvalidArgument(
            "coefficients must be finite and non-negative".into(),
        ));
    }
    let sum: f64 = f.iter().sum();
    let root_sum: f64 = f.iter().map(|v| v.sqrt()).sum();
    if root_sum == 0.0 {
        return Err(CutError::DegenerateModel);
    }
    Ok(f.len() as f64 * sum / (root_sum * root_sum))
}

/// Stage budgets: the prior stage first, then `segments` posterior stages.
pub fn segment_schedule(total: u64, prior_ratio: f64, segments: usize) -> Result<Vec<u64>> {
    if !(0.0..=1.0).contains(&prior_ratio) {
        return Err(CutError::InvalidArgument(format!(
            "prior ratio {prior_ratio} outside [0, 1]"
        )));
    }
    if segments == 0 || total < segments as u64 {
        return Err(CutError::InvalidArgument(format!(
            "cannot split {total} shots into {segments} segment(s)"
        )));
    }
    let prior = (prior_ratio * total as f64).round() as u64;
    let posterior = total - prior;
    let mut stages = vec![prior];
    if posterior > 0 {
        let each = posterior as f64 / segments as f64;
        stages.extend(largest_remainder(&vec![each; segments], posterior));
    }
    Ok(stages)
}

/// Coefficient tables for per-cut parameters. `ParamL4` projects first; the
/// preset schemes ignore `thetas`.
pub fn tables_for(thetas: &[CutParameters], scheme: DecompositionScheme) -> Result<Vec<CoefficientTable>> {
    thetas
        .iter()
        .map(|t| match scheme {
            DecompositionScheme::ParamL4 => build_table_l4_projected(t),
            DecompositionScheme::ParamL6 => build_table(t, scheme),
            _ => Ok(preset_table(scheme)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    /// `Σ √(f_e + floor)`: optimal-allocation error times `N`, square-rooted.
    SqrtSum { floor: f64 },
    /// `Σ f_e / N_e` for a fixed allocation.
    PredictedErr { shots: Vec<u64> },
}

pub struct Objective<'a> {
    pub partition: &'a Partition,
    pub space: &'a ConfigSpace,
    pub values: &'a [ConfigValues],
    pub scheme: DecompositionScheme,
    pub kind: LossKind,
}

impl Objective<'_> {
    pub fn model(&self, thetas: &[CutParameters]) -> Result<VarianceModel> {
        let tables = tables_for(thetas, self.scheme)?;
        variance_coefficients(self.partition, self.space, &tables, self.values)
    }

    pub fn eval(&self, thetas: &[CutParameters]) -> Result<f64> {
        let model = self.model(thetas)?;
        let value = match &self.kind {
            LossKind::SqrtSum { floor } => model.f.iter().map(|f| (f + floor).sqrt()).sum(),
            LossKind::PredictedErr { shots } => model.predicted_err(shots)?,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(CutError::NonFiniteLoss(flatten(thetas)))
        }
    }

    fn eval_flat(&self, x: &[f64]) -> Result<f64> {
        self.eval(&unflatten(x))
    }

    /// Central finite differences, one coordinate per task.
    pub fn gradient(&self, thetas: &[CutParameters]) -> Result<Vec<f64>> {
        let x = flatten(thetas);
        (0..x.len())
            .into_par_iter()
            .map(|k| {
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[k] += FD_STEP;
                lo[k] -= FD_STEP;
                Ok((self.eval_flat(&hi)? - self.eval_flat(&lo)?) / (2.0 * FD_STEP))
            })
            .collect()
    }
}

/// `Σ_e √(f_e + floor)` under the tables built from `thetas`.
pub fn loss(
    thetas: &[CutParameters],
    partition: &Partition,
    space: &ConfigSpace,
    values: &[ConfigValues],
    scheme: DecompositionScheme,
    floor: f64,
) -> Result<f64> {
    Objective {
        partition,
        space,
        values,
        scheme,
        kind: LossKind::SqrtSum { floor },
    }
    .eval(thetas)
}

fn flatten(thetas: &[CutParameters]) -> Vec<f64> {
    thetas.iter().flat_map(|t| t.to_vec()).collect()
}

fn unflatten(x: &[f64]) -> Vec<CutParameters> {
    x.chunks(CutParameters::LEN)
        .map(CutParameters::from_slice)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMethod {
    GradientDescent,
    AdamLike,
    SimulatedAnnealing,
}

impl std::str::FromStr for OptimizerMethod {
    type Err = CutError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient_descent" => Ok(OptimizerMethod::GradientDescent),
            "adam_like" => Ok(OptimizerMethod::AdamLike),
            "simulated_annealing" => Ok(OptimizerMethod::SimulatedAnnealing),
            other => Err(CutError::InvalidArgument(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    pub iterations: usize,
    pub step_size: f64,
    pub epsilon_floor: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            method: OptimizerMethod::AdamLike,
            iterations: 100,
            step_size: 0.05,
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(CutError::InvalidArgument("step_size must be positive".into()));
        }
        if !(self.epsilon_floor >= 0.0 && self.epsilon_floor.is_finite()) {
            return Err(CutError::InvalidArgument(
                "epsilon_floor must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    /// Best parameters seen, per cut.
    pub thetas: Vec<CutParameters>,
    /// Loss of the iterate after each step; entry 0 is the starting point.
    pub trace: Vec<f64>,
    pub initial_loss: f64,
    pub best_loss: f64,
}

fn project(x: &mut [f64], scheme: DecompositionScheme) {
    if scheme == DecompositionScheme::ParamL4 {
        for chunk in x.chunks_mut(CutParameters::LEN) {
            let p = l4_subspace_project(&CutParameters::from_slice(chunk));
            chunk.copy_from_slice(&p.to_vec());
        }
    }
}

/// Minimizes the objective over the cut parameters and returns the best point seen.
pub fn optimize_parameters(
    initial: &[CutParameters],
    objective: &Objective<'_>,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let mut x = flatten(initial);
    project(&mut x, objective.scheme);
    let initial_loss = objective.eval_flat(&x)?;
    let mut best = (x.clone(), initial_loss);
    let mut trace = vec![initial_loss];
    let n = x.len();
    let iters = config.iterations;

    match config.method {
        OptimizerMethod::GradientDescent => {
            for _ in 0..iters {
                let g = objective.gradient(&unflatten(&x))?;
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi -= config.step_size * gi;
                }
                project(&mut x, objective.scheme);
                let l = objective.eval_flat(&x)?;
                trace.push(l);
                if l < best.1 {
                    best = (x.clone(), l);
                }
            }
        }
        OptimizerMethod::AdamLike => {
            let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
            let mut m = vec![0.0; n];
            let mut v = vec![0.0; n];
            for t in 1..=iters {
                let g = objective.gradient(&unflatten(&x))?;
                // linear decay to half the initial step
                let lr = config.step_size * (1.0 - 0.5 * (t - 1) as f64 / iters as f64);
                for k in 0..n {
                    m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                    v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                    let mh = m[k] / (1.0 - beta1.powi(t as i32));
                    let vh = v[k] / (1.0 - beta2.powi(t as i32));
                    x[k] -= lr * mh / (vh.sqrt() + eps);
                }
                project(&mut x, objective.scheme);
                let l = objective.eval_flat(&x)?;
                trace.push(l);
                if l < best.1 {
                    best = (x.clone(), l);
                }
            }
        }
        OptimizerMethod::SimulatedAnnealing => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let normal = Normal::new(0.0, config.step_size).expect("positive step");
            let t0 = 0.05 * initial_loss.abs().max(1e-12);
            let mut cur = (x.clone(), initial_loss);
            for t in 0..iters {
                let temp = t0 * (1.0 - t as f64 / iters as f64);
                let mut cand = cur.0.clone();
                for c in cand.iter_mut() {
                    *c += normal.sample(&mut rng);
                }
                project(&mut cand, objective.scheme);
                let l = objective.eval_flat(&cand)?;
                let accept = l <= cur.1 || {
                    let u: f64 = rng.random();
                    temp > 0.0 && u < (-(l - cur.1) / temp).exp()
                };
                if accept {
                    cur = (cand, l);
                }
                trace.push(cur.1);
                if cur.1 < best.1 {
                    best = cur.clone();
                }
            }
        }
    }

    Ok(OptimizationResult {
        thetas: unflatten(&best.0),
        trace,
        initial_loss,
        best_loss: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CutPoint, QuantumCircuit};
    use crate::decomposition::initial_parameters;
    use crate::partition::{apply_cuts, enumerate_configurations};
    use crate::simulator::simulate_exact;

    fn model(f: &[f64]) -> VarianceModel {
        VarianceModel { f: f.to_vec() }
    }

    #[test]
    fn allocate_examples() {
        assert_eq!(allocate(&model(&[1.0, 4.0]), 300).unwrap().allocation, vec![100, 200]);
        assert_eq!(
            allocate(&model(&[1.0, 1.0, 1.0]), 100).unwrap().allocation,
            vec![34, 33, 33]
        );
        assert_eq!(allocate(&model(&[0.0, 1.0]), 50).unwrap().allocation, vec![0, 50]);
        assert!(matches!(
            allocate(&model(&[0.0, 0.0]), 50),
            Err(CutError::DegenerateModel)
        ));
    }

    #[test]
    fn allocate_keeps_tiny_coefficients_sampled() {
        let plan = allocate(&model(&[1e-12, 1.0, 1.0]), 100).unwrap();
        assert_eq!(plan.total, 100);
        assert!(plan.allocation[0] >= 1);
    }

    #[test]
    fn ratio_examples() {
        assert!((improvement_ratio(&[2.0; 5]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(improvement_ratio(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 4.0);
        assert!((improvement_ratio(&[1.0, 4.0]).unwrap() - 10.0 / 9.0).abs() < 1e-12);
        assert!(improvement_ratio(&[]).is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(segment_schedule(1000, 0.2, 1).unwrap(), vec![200, 800]);
        assert_eq!(
            segment_schedule(1000, 0.2, 5).unwrap(),
            vec![200, 160, 160, 160, 160, 160]
        );
        assert_eq!(segment_schedule(1000, 1.0, 3).unwrap(), vec![1000]);
        assert_eq!(segment_schedule(1003, 0.2, 2).unwrap(), vec![201, 401, 401]);
        assert!(segment_schedule(3, 0.2, 5).is_err());
        assert!(segment_schedule(100, 1.5, 1).is_err());
    }

    #[test]
    fn even_split() {
        assert_eq!(even_allocation(3, 100).allocation, vec![34, 33, 33]);
        assert_eq!(even_allocation(7, 7000).allocation, vec![1000; 7]);
    }

    fn bell_objective_parts() -> (Partition, ConfigSpace, Vec<ConfigValues>) {
        let mut c = QuantumCircuit::new(2);
        c.h(0).cx(0, 1);
        let p = apply_cuts(&c, &[CutPoint::new(0, 0)], 20).unwrap();
        let space = enumerate_configurations(&p, DecompositionScheme::ParamL6);
        let vals = space
            .configs
            .iter()
            .enumerate()
            .map(|(o, c)| {
                let mut v: ConfigValues = simulate_exact(&p.fragments[c.fragment], c, o).unwrap().into();
                v.exact = false;
                v
            })
            .collect();
        (p, space, vals)
    }

    #[test]
    fn zero_iterations_is_identity() {
        let (p, space, vals) = bell_objective_parts();
        let obj = Objective {
            partition: &p,
            space: &space,
            values: &vals,
            scheme: DecompositionScheme::ParamL6,
            kind: LossKind::SqrtSum { floor: 1e-12 },
        };
        let init = vec![initial_parameters(DecompositionScheme::ParamL6)];
        let cfg = OptimizerConfig {
            iterations: 0,
            ..Default::default()
        };
        let r = optimize_parameters(&init, &obj, &cfg).unwrap();
        assert_eq!(r.thetas, init);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn every_method_never_worsens() {
        let (p, space, vals) = bell_objective_parts();
        let obj = Objective {
            partition: &p,
            space: &space,
            values: &vals,
            scheme: DecompositionScheme::ParamL6,
            kind: LossKind::SqrtSum { floor: 1e-12 },
        };
        let init = vec![CutParameters::zero()];
        for method in [
            OptimizerMethod::GradientDescent,
            OptimizerMethod::AdamLike,
            OptimizerMethod::SimulatedAnnealing,
        ] {
            let cfg = OptimizerConfig {
                method,
                iterations: 15,
                seed: 3,
                ..Default::default()
            };
            let r = optimize_parameters(&init, &obj, &cfg).unwrap();
            assert!(r.best_loss <= r.initial_loss, "{method:?}");
            assert_eq!(r.trace.len(), 16);
            let again = optimize_parameters(&init, &obj, &cfg).unwrap();
            assert_eq!(r, again);
        }
    }
}
