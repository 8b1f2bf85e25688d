use serde::{Deserialize, Serialize};

use crate::decomposition::DecompositionScheme;
use crate::error::{CutError, Result};
use crate::optimizer::OptimizerConfig;
use crate::partition::DEFAULT_WIDTH_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "baseline")]
    Baseline,
    A,
    B,
    C,
    D,
    E,
    F,
    #[serde(rename = "custom")]
    Custom,
}

impl Preset {
    pub const NAMED: [Preset; 7] = [
        Preset::Baseline,
        Preset::A,
        Preset::B,
        Preset::C,
        Preset::D,
        Preset::E,
        Preset::F,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Baseline => "baseline",
            Preset::A => "A",
            Preset::B => "B",
            Preset::C => "C",
            Preset::D => "D",
            Preset::E => "E",
            Preset::F => "F",
            Preset::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = CutError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Preset::Baseline),
            "A" | "a" => Ok(Preset::A),
            "B" | "b" => Ok(Preset::B),
            "C" | "c" => Ok(Preset::C),
            "D" | "d" => Ok(Preset::D),
            "E" | "e" => Ok(Preset::E),
            "F" | "f" => Ok(Preset::F),
            "custom" => Ok(Preset::Custom),
            other => Err(CutError::InvalidArgument(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMode {
    /// One stage, shots split evenly.
    Even,
    /// Even prior stage, then posterior stages allocated by `√f_e`.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamOptimization {
    None,
    /// Minimize `Σ√f_e` on the prior estimates, before posterior allocation.
    AfterPrior,
    /// Minimize the predicted error of the final allocation, before reconstruction.
    AfterSampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Echoed in the report; the pipeline takes the parsed document directly.
    pub circuit_path: Option<String>,
    pub preset: Preset,
    pub total_shots: u64,
    pub prior_ratio: f64,
    pub segments: usize,
    pub scheme: DecompositionScheme,
    pub allocation: AllocationMode,
    pub param_optimization: ParamOptimization,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Replace sampling by exact configuration distributions.
    pub exact: bool,
    pub width_limit: usize,
    pub repetitions: usize,
}

impl RunConfig {
    pub fn from_preset(preset: Preset, total_shots: u64, seed: u64) -> Self {
        let mut cfg = RunConfig {
            circuit_path: None,
            preset,
            total_shots,
            prior_ratio: 0.2,
            segments: 1,
            scheme: DecompositionScheme::ParamL4,
            allocation: AllocationMode::Optimal,
            param_optimization: ParamOptimization::None,
            optimizer: OptimizerConfig {
                seed,
                ..OptimizerConfig::default()
            },
            seed,
            exact: false,
            width_limit: DEFAULT_WIDTH_LIMIT,
            repetitions: 0,
        };
        match preset {
            Preset::Baseline => {
                cfg.scheme = DecompositionScheme::L4Preset;
                cfg.allocation = AllocationMode::Even;
            }
            Preset::A | Preset::Custom => {}
            Preset::B => cfg.segments = 5,
            Preset::C => cfg.param_optimization = ParamOptimization::AfterPrior,
            Preset::D => {
                cfg.param_optimization = ParamOptimization::AfterPrior;
                cfg.scheme = DecompositionScheme::ParamL6;
            }
            Preset::E => {
                cfg.allocation = AllocationMode::Even;
                cfg.param_optimization = ParamOptimization::AfterSampling;
            }
            Preset::F => {
                cfg.allocation = AllocationMode::Even;
                cfg.param_optimization = ParamOptimization::AfterSampling;
                cfg.scheme = DecompositionScheme::ParamL6;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.prior_ratio) {
            return Err(CutError::InvalidArgument(format!(
                "prior ratio {} outside [0, 1]",
                self.prior_ratio
            )));
        }
        if self.segments == 0 {
            return Err(CutError::InvalidArgument("segments must be at least 1".into()));
        }
        if self.param_optimization != ParamOptimization::None && !self.scheme.is_parameterized() {
            return Err(CutError::InvalidArgument(format!(
                "parameter optimization needs PARAM_L4 or PARAM_L6, got {}",
                self.scheme.name()
            )));
        }
        self.optimizer.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_table() {
        use AllocationMode::*;
        use DecompositionScheme::*;
        use ParamOptimization::*;
        let rows = [
            (Preset::Baseline, L4Preset, Even, None, 1),
            (Preset::A, ParamL4, Optimal, None, 1),
            (Preset::B, ParamL4, Optimal, None, 5),
            (Preset::C, ParamL4, Optimal, AfterPrior, 1),
            (Preset::D, ParamL6, Optimal, AfterPrior, 1),
            (Preset::E, ParamL4, Even, AfterSampling, 1),
            (Preset::F, ParamL6, Even, AfterSampling, 1),
        ];
        for (preset, scheme, alloc, opt, segs) in rows {
            let c = RunConfig::from_preset(preset, 1000, 1);
            assert_eq!(c.scheme, scheme, "{preset:?}");
            assert_eq!(c.allocation, alloc, "{preset:?}");
            assert_eq!(c.param_optimization, opt, "{preset:?}");
            assert_eq!(c.segments, segs, "{preset:?}");
            assert_eq!(c.prior_ratio, 0.2);
            assert!(c.validate().is_ok());
        }
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::NAMED {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("G".parse::<Preset>().is_err());
    }
}
