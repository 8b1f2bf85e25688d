//! Desk-scale benchmark circuits with suggested cut points.
//!
//! Suggested cuts are a simple heuristic, not a cut finder; supply real cuts
//! for serious runs.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitDocument, CutPoint, GateKind, QuantumCircuit};
use crate::error::{CutError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Bv,
    QaoaRegular,
    Adder,
    Aqft,
}

impl std::str::FromStr for BenchmarkKind {
    type Err = CutError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bv" => Ok(BenchmarkKind::Bv),
            "qaoa_regular" | "qaoa" => Ok(BenchmarkKind::QaoaRegular),
            "adder" => Ok(BenchmarkKind::Adder),
            "aqft" => Ok(BenchmarkKind::Aqft),
            other => Err(CutError::InvalidArgument(format!("unknown benchmark `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub circuit: QuantumCircuit,
    pub cuts: Vec<CutPoint>,
}

impl Benchmark {
    pub fn document(&self) -> CircuitDocument {
        CircuitDocument::new(self.circuit.clone(), self.cuts.clone())
    }
}

pub fn generate_benchmark(kind: BenchmarkKind, n: usize, seed: u64) -> Result<Benchmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        BenchmarkKind::Bv => {
            if n < 2 {
                return Err(CutError::InvalidArgument("bv needs n >= 2".into()));
            }
            let secret: Vec<bool> = (0..n - 1).map(|_| rng.random()).collect();
            let circuit = bernstein_vazirani(&secret);
            let cuts = suggested_cuts(&circuit);
            Ok(Benchmark { circuit, cuts })
        }
        BenchmarkKind::QaoaRegular => {
            let circuit = qaoa_regular(n, &mut rng)?;
            let cuts = suggested_cuts(&circuit);
            Ok(Benchmark { circuit, cuts })
        }
        BenchmarkKind::Adder => {
            if n < 4 || !n.is_multiple_of(2) {
                return Err(CutError::InvalidArgument(
                    "adder needs an even n >= 4 (two registers plus carry-in and carry-out)".into(),
                ));
            }
            let m = (n - 2) / 2;
            let a = rng.random_range(0..1u64 << m);
            let b = rng.random_range(0..1u64 << m);
            Ok(adder(m, a, b))
        }
        BenchmarkKind::Aqft => {
            if n < 2 {
                return Err(CutError::InvalidArgument("aqft needs n >= 2".into()));
            }
            let input = rng.random_range(0..1u64 << n);
            let threshold = (n as f64).log2().ceil() as usize + 1;
            let circuit = aqft(n, Some(threshold), input);
            let cuts = suggested_cuts(&circuit);
            Ok(Benchmark { circuit, cuts })
        }
    }
}

/// Data qubits `0..secret.len()`, ancilla last. The output is the secret on the
/// data qubits and 1 on the ancilla.
pub fn bernstein_vazirani(secret: &[bool]) -> QuantumCircuit {
    let m = secret.len();
    let anc = m;
    let mut c = QuantumCircuit::new(m + 1);
    c.x(anc);
    for q in 0..=m {
        c.h(q);
    }
    for (q, &bit) in secret.iter().enumerate() {
        if bit {
            c.cx(q, anc);
        }
    }
    for q in 0..=m {
        c.h(q);
    }
    c
}

pub fn bv_expected_outcome(secret: &[bool]) -> usize {
    secret
        .iter()
        .enumerate()
        .fold(1 << secret.len(), |acc, (q, &b)| acc | (b as usize) << q)
}

/// Cuts the ancilla wire after each of its first `k` controlled-NOTs.
pub fn bv_chain_cuts(circuit: &QuantumCircuit, k: usize) -> Result<Vec<CutPoint>> {
    let anc = circuit.num_qubits - 1;
    let cnots: Vec<usize> = circuit
        .gates
        .iter()
        .enumerate()
        .filter(|(_, g)| g.name == GateKind::Cx && g.qubits[1] == anc)
        .map(|(i, _)| i)
        .collect();
    if k > cnots.len() {
        return Err(CutError::InvalidArgument(format!(
            "only {} ancilla interactions, cannot place {k} cuts",
            cnots.len()
        )));
    }
    Ok(cnots[..k].iter().map(|&g| CutPoint::new(anc, g)).collect())
}

fn random_regular_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    // pairing model with rejection of loops and multi-edges
    loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(rng);
        let mut edges: Vec<(usize, usize)> = stubs
            .chunks(2)
            .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
            .collect();
        edges.sort_unstable();
        let simple = edges.iter().all(|&(a, b)| a != b) && edges.windows(2).all(|w| w[0] != w[1]);
        if simple {
            return edges;
        }
    }
}

/// One QAOA layer on a random 3-regular graph.
pub fn qaoa_regular(n: usize, rng: &mut ChaCha8Rng) -> Result<QuantumCircuit> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(CutError::InvalidArgument(
            "a 3-regular graph needs an even number of vertices >= 4".into(),
        ));
    }
    let edges = random_regular_edges(n, rng);
    let gamma = rng.random_range(0.1..PI - 0.1);
    let beta = rng.random_range(0.1..PI / 2.0 - 0.1);
    let mut c = QuantumCircuit::new(n);
    for q in 0..n {
        c.h(q);
    }
    for (u, v) in edges {
        c.cx(u, v);
        c.push(GateKind::Rz, &[2.0 * gamma], &[v]);
        c.cx(u, v);
    }
    for q in 0..n {
        c.push(GateKind::Rx, &[2.0 * beta], &[q]);
    }
    Ok(c)
}

fn ccx(c: &mut QuantumCircuit, a: usize, b: usize, t: usize) {
    use GateKind::*;
    c.h(t);
    c.cx(b, t).push(Tdg, &[], &[t]);
    c.cx(a, t).push(T, &[], &[t]);
    c.cx(b, t).push(Tdg, &[], &[t]);
    c.cx(a, t).push(T, &[], &[b]).push(T, &[], &[t]);
    c.h(t);
    c.cx(a, b).push(T, &[], &[a]).push(Tdg, &[], &[b]);
    c.cx(a, b);
}

fn maj(c: &mut QuantumCircuit, x: usize, y: usize, z: usize) {
    c.cx(z, y).cx(z, x);
    ccx(c, x, y, z);
}

fn uma(c: &mut QuantumCircuit, x: usize, y: usize, z: usize) {
    ccx(c, x, y, z);
    c.cx(z, x).cx(x, y);
}

/// Qubit layout of the ripple-carry adder on `m`-bit registers: carry-in,
/// then (b_i, a_i) pairs, then carry-out.
pub struct AdderLayout {
    pub m: usize,
}

impl AdderLayout {
    pub fn carry_in(&self) -> usize {
        0
    }
    pub fn b(&self, i: usize) -> usize {
        1 + 2 * i
    }
    pub fn a(&self, i: usize) -> usize {
        2 + 2 * i
    }
    pub fn carry_out(&self) -> usize {
        2 * self.m + 1
    }

    /// Output outcome holding `a` and the sum `a + b` (low bits in b, high bit in carry-out).
    pub fn expected_outcome(&self, a: u64, b: u64) -> usize {
        let sum = a + b;
        let mut out = 0usize;
        for i in 0..self.m {
            out |= ((a >> i & 1) as usize) << self.a(i);
            out |= ((sum >> i & 1) as usize) << self.b(i);
        }
        out | ((sum >> self.m & 1) as usize) << self.carry_out()
    }
}

/// Ripple-carry adder computing `b <- a + b` with inputs set by X gates.
/// For `m >= 2` the suggested cuts split the wire of `a_0` after the first
/// majority block and after the second-to-last unmajority block.
pub fn adder(m: usize, a: u64, b: u64) -> Benchmark {
    let l = AdderLayout { m };
    let mut c = QuantumCircuit::new(2 * m + 2);
    for i in 0..m {
        if a >> i & 1 == 1 {
            c.x(l.a(i));
        }
        if b >> i & 1 == 1 {
            c.x(l.b(i));
        }
    }
    maj(&mut c, l.carry_in(), l.b(0), l.a(0));
    let after_first_maj = c.gates.len() - 1;
    for i in 1..m {
        maj(&mut c, l.a(i - 1), l.b(i), l.a(i));
    }
    c.cx(l.a(m - 1), l.carry_out());
    for i in (1..m).rev() {
        uma(&mut c, l.a(i - 1), l.b(i), l.a(i));
    }
    let after_second_uma = c.gates.len() - 1;
    uma(&mut c, l.carry_in(), l.b(0), l.a(0));

    let cuts = if m >= 2 {
        let q = l.a(0);
        let last_on = |end: usize| (0..=end).rev().find(|&g| c.gates[g].acts_on(q)).unwrap();
        vec![
            CutPoint::new(q, last_on(after_first_maj)),
            CutPoint::new(q, last_on(after_second_uma)),
        ]
    } else {
        suggested_cuts(&c)
    };
    Benchmark { circuit: c, cuts }
}

/// Quantum Fourier transform on the basis state `input`, keeping only
/// controlled phases `π/2^k` with `k <= threshold` (`None` keeps all).
pub fn aqft(n: usize, threshold: Option<usize>, input: u64) -> QuantumCircuit {
    let mut c = QuantumCircuit::new(n);
    for q in 0..n {
        if input >> q & 1 == 1 {
            c.x(q);
        }
    }
    for j in (0..n).rev() {
        c.h(j);
        for k in (0..j).rev() {
            let dist = j - k;
            if threshold.is_none_or(|t| dist <= t) {
                c.push(GateKind::Cp, &[PI / (1u64 << dist) as f64], &[k, j]);
            }
        }
    }
    for q in 0..n / 2 {
        c.push(GateKind::Swap, &[], &[q, n - 1 - q]);
    }
    c
}

/// Splits the gate list at the index (within the middle half) that crosses
/// the fewest wires, and cuts each crossing wire after its last gate before
/// the split. Ties go to the split closest to the middle.
pub fn suggested_cuts(circuit: &QuantumCircuit) -> Vec<CutPoint> {
    let g = circuit.gates.len();
    if g < 2 {
        return Vec::new();
    }
    let lo = (g / 4).max(1);
    let hi = (3 * g / 4).max(lo);
    let crossing = |t: usize| -> Vec<CutPoint> {
        (0..circuit.num_qubits)
            .filter_map(|q| {
                let before = (0..t).rev().find(|&i| circuit.gates[i].acts_on(q))?;
                circuit.gates[t..]
                    .iter()
                    .any(|gate| gate.acts_on(q))
                    .then_some(CutPoint::new(q, before))
            })
            .collect()
    };
    (lo..=hi)
        .map(|t| (crossing(t), t))
        .min_by_key(|(cuts, t)| (cuts.len(), t.abs_diff(g / 2)))
        .map(|(cuts, _)| cuts)
        .unwrap_or_default()
}
