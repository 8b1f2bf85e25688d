//! Dense statevector simulation of fragment configurations and shot sampling.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{Gate, GateKind, QuantumCircuit};
use crate::decomposition::{Basis, PrepState};
use crate::error::{CutError, Result};
use crate::partition::{Configuration, Fragment, DEFAULT_WIDTH_LIMIT};

/// Probabilities below this are treated as exactly zero before sampling.
pub const PROB_FLOOR: f64 = 1e-15;

/// Amplitudes over `2^m` basis states; qubit 0 is the least significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

type Mat = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single_qubit_matrix(kind: GateKind, params: &[f64]) -> Mat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let phase = |theta: f64| Complex64::from_polar(1.0, theta);
    match kind {
        GateKind::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        GateKind::X => [[zero, one], [one, zero]],
        GateKind::Y => [[zero, c(0.0, -1.0)], [c(0.0, 1.0), zero]],
        GateKind::Z => [[one, zero], [zero, c(-1.0, 0.0)]],
        GateKind::S => [[one, zero], [zero, c(0.0, 1.0)]],
        GateKind::Sdg => [[one, zero], [zero, c(0.0, -1.0)]],
        GateKind::T => [[one, zero], [zero, phase(std::f64::consts::FRAC_PI_4)]],
        GateKind::Tdg => [[one, zero], [zero, phase(-std::f64::consts::FRAC_PI_4)]],
        GateKind::Rx => {
            let (sin, cos) = (params[0] / 2.0).sin_cos();
            [[c(cos, 0.0), c(0.0, -sin)], [c(0.0, -sin), c(cos, 0.0)]]
        }
        GateKind::Ry => {
            let (sin, cos) = (params[0] / 2.0).sin_cos();
            [[c(cos, 0.0), c(-sin, 0.0)], [c(sin, 0.0), c(cos, 0.0)]]
        }
        GateKind::Rz => [[phase(-params[0] / 2.0), zero], [zero, phase(params[0] / 2.0)]],
        GateKind::P => [[one, zero], [zero, phase(params[0])]],
        _ => unreachable!("{kind} is not a single-qubit gate"),
    }
}

impl StateVector {
    pub fn zero_state(num_qubits: usize) -> Self {
        let mut amps = vec![c(0.0, 0.0); 1 << num_qubits];
        amps[0] = c(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        assert!(amps.len().is_power_of_two(), "length must be a power of two");
        let num_qubits = amps.len().trailing_zeros() as usize;
        StateVector { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn apply_1q(&mut self, m: &Mat, target: usize) {
        let bit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        let q = &gate.qubits;
        match gate.name {
            GateKind::Cx => {
                let (cb, tb) = (1usize << q[0], 1usize << q[1]);
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
            GateKind::Cz => {
                let mask = (1usize << q[0]) | (1usize << q[1]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a = -*a;
                    }
                }
            }
            GateKind::Cp => {
                let mask = (1usize << q[0]) | (1usize << q[1]);
                let ph = Complex64::from_polar(1.0, gate.params[0]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a *= ph;
                    }
                }
            }
            GateKind::Swap => {
                let (ab, bb) = (1usize << q[0], 1usize << q[1]);
                for i in 0..self.amps.len() {
                    if i & ab != 0 && i & bb == 0 {
                        self.amps.swap(i, (i & !ab) | bb);
                    }
                }
            }
            kind => self.apply_1q(&single_qubit_matrix(kind, &gate.params), q[0]),
        }
    }

    pub fn run(&mut self, circuit: &QuantumCircuit) {
        for gate in &circuit.gates {
            self.apply(gate);
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Born-rule probabilities of an uncut circuit, computational basis, little-endian.
pub fn simulate_circuit(circuit: &QuantumCircuit) -> Vec<f64> {
    let mut sv = StateVector::zero_state(circuit.num_qubits);
    sv.run(circuit);
    sv.probabilities()
}

/// Gates that turn |0> into `state`.
pub fn prep_gates(state: PrepState, line: usize) -> Vec<Gate> {
    use GateKind::*;
    let kinds: &[GateKind] = match state {
        PrepState::Zero => &[],
        PrepState::One => &[X],
        PrepState::Plus => &[H],
        PrepState::Minus => &[X, H],
        PrepState::PlusI => &[H, S],
        PrepState::MinusI => &[X, H, S],
    };
    kinds
        .iter()
        .map(|&k| Gate::new(k, vec![], vec![line]))
        .collect()
}

/// Gates rotating `basis` onto the computational basis (+1 eigenstate -> |0>).
pub fn basis_change_gates(basis: Basis, line: usize) -> Vec<Gate> {
    let kinds: &[GateKind] = match basis {
        Basis::Z => &[],
        Basis::X => &[GateKind::H],
        Basis::Y => &[GateKind::Sdg, GateKind::H],
    };
    kinds
        .iter()
        .map(|&k| Gate::new(k, vec![], vec![line]))
        .collect()
}

/// The concrete circuit run for one configuration of a fragment.
pub fn instantiate(fragment: &Fragment, config: &Configuration) -> QuantumCircuit {
    let mut circuit = QuantumCircuit::new(fragment.width());
    for (slot, &state) in fragment.prep_slots.iter().zip(&config.states) {
        circuit.gates.extend(prep_gates(state, slot.line));
    }
    circuit.gates.extend(fragment.circuit.gates.iter().cloned());
    for (slot, &basis) in fragment.meas_slots.iter().zip(&config.bases) {
        circuit.gates.extend(basis_change_gates(basis, slot.line));
    }
    circuit
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationDistribution {
    pub config: usize,
    /// Joint probabilities over all local lines of the fragment.
    pub probs: Vec<f64>,
}

pub fn simulate_exact_with_limit(
    fragment: &Fragment,
    config: &Configuration,
    ordinal: usize,
    width_limit: usize,
) -> Result<ConfigurationDistribution> {
    if fragment.width() > width_limit {
        return Err(CutError::FragmentTooWide {
            fragment: config.fragment,
            width: fragment.width(),
            limit: width_limit,
        });
    }
    Ok(ConfigurationDistribution {
        config: ordinal,
        probs: simulate_circuit(&instantiate(fragment, config)),
    })
}

pub fn simulate_exact(
    fragment: &Fragment,
    config: &Configuration,
    ordinal: usize,
) -> Result<ConfigurationDistribution> {
    simulate_exact_with_limit(fragment, config, ordinal, DEFAULT_WIDTH_LIMIT)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotRecord {
    pub config: usize,
    pub counts: BTreeMap<usize, u64>,
    pub n_shots: u64,
}

impl ShotRecord {
    pub fn empty(config: usize) -> Self {
        ShotRecord {
            config,
            counts: BTreeMap::new(),
            n_shots: 0,
        }
    }
}

/// Draws `n_shots` outcomes by inverse-CDF lookup with a generator seeded by `seed`.
pub fn sample(dist: &ConfigurationDistribution, n_shots: u64, seed: u64) -> ShotRecord {
    if n_shots == 0 {
        return ShotRecord::empty(dist.config);
    }
    let mut cdf = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for &p in &dist.probs {
        if p > PROB_FLOOR {
            acc += p;
        }
        cdf.push(acc);
    }
    let last_nonzero = dist
        .probs
        .iter()
        .rposition(|&p| p > PROB_FLOOR)
        .unwrap_or(0);
    let mut hits = vec![0u64; dist.probs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_shots {
        let u = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last_nonzero);
        hits[idx] += 1;
    }
    ShotRecord {
        config: dist.config,
        counts: hits
            .into_iter()
            .enumerate()
            .filter(|&(_, n)| n > 0)
            .collect(),
        n_shots,
    }
}

/// Pooled outcome frequencies for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationEstimate {
    pub config: usize,
    /// `None` when no shots were taken.
    pub probs: Option<Vec<f64>>,
    pub shots: u64,
}

pub fn estimate(records: &[ShotRecord], num_outcomes: usize) -> Result<ConfigurationEstimate> {
    let first = records
        .first()
        .ok_or_else(|| CutError::EmptyEstimate("no shot records".into()))?;
    if records.iter().any(|r| r.config != first.config) {
        return Err(CutError::InvalidArgument(
            "records belong to different configurations".into(),
        ));
    }
    let shots: u64 = records.iter().map(|r| r.n_shots).sum();
    let probs = (shots > 0).then(|| {
        let mut p = vec![0.0; num_outcomes];
        for r in records {
            for (&o, &n) in &r.counts {
                p[o] += n as f64;
            }
        }
        p.iter_mut().for_each(|v| *v /= shots as f64);
        p
    });
    Ok(ConfigurationEstimate {
        config: first.config,
        probs,
        shots,
    })
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one (configuration, stage) pair, independent of execution order.
pub fn derive_seed(master: u64, ordinal: u64, segment: u64) -> u64 {
    mix64(mix64(mix64(master) ^ ordinal) ^ segment.rotate_left(32))
}
