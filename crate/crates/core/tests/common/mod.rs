#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use wirecut::circuit::{CircuitDocument, CutPoint, GateKind, QuantumCircuit};
use wirecut::harness::benchmarks::{adder, AdderLayout};
use wirecut::partition::apply_cuts;

/// 3 qubits, one cut on the middle wire.
pub fn fig1() -> CircuitDocument {
    let mut c = QuantumCircuit::new(3);
    c.h(0).h(1).cx(0, 1).push(GateKind::Rz, &[0.3], &[1]);
    c.cx(1, 2).h(2);
    CircuitDocument::new(c, vec![CutPoint::new(1, 3)])
}

pub fn bell() -> CircuitDocument {
    let mut c = QuantumCircuit::new(2);
    c.h(0).cx(0, 1);
    CircuitDocument::new(c, vec![CutPoint::new(0, 0)])
}

/// 6 qubits, 2 cuts, 3 fragments.
pub fn desk6() -> CircuitDocument {
    let mut c = QuantumCircuit::new(6);
    for (q, a) in [0.3, 1.1, 0.7, 2.0, 0.4, 1.6].into_iter().enumerate() {
        c.push(GateKind::Ry, &[a], &[q]);
    }
    c.cx(0, 1).cx(1, 2);
    let cut0 = c.gates.len() - 1;
    c.push(GateKind::Rz, &[0.5], &[2]);
    c.cx(2, 3).cx(3, 4).cx(4, 5);
    let cut1 = c.gates.len() - 2;
    c.push(GateKind::Ry, &[0.9], &[3]);
    c.cx(0, 3);
    for q in 0..6 {
        c.push(GateKind::Ry, &[0.2 * q as f64 + 0.1], &[q]);
    }
    CircuitDocument::new(c, vec![CutPoint::new(2, cut0), CutPoint::new(3, cut1)])
}

/// 3-bit ripple-carry adder with `a` in uniform superposition and a tilted
/// carry-in, cut twice on a0.
pub fn adder_superposed() -> CircuitDocument {
    let bench = adder(3, 0, 5);
    let l = AdderLayout { m: 3 };
    let mut c = QuantumCircuit::new(bench.circuit.num_qubits);
    for i in 0..3 {
        c.h(l.a(i));
    }
    c.push(GateKind::Ry, &[0.7], &[l.carry_in()]);
    let shift = c.gates.len();
    c.gates.extend(bench.circuit.gates.iter().cloned());
    let cuts = bench
        .cuts
        .iter()
        .map(|p| CutPoint::new(p.qubit, p.after_gate + shift))
        .collect();
    CircuitDocument::new(c, cuts)
}

pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> QuantumCircuit {
    let mut c = QuantumCircuit::new(n);
    for q in 0..n {
        c.push(GateKind::Ry, &[rng.random_range(0.0..std::f64::consts::TAU)], &[q]);
    }
    for _ in 0..depth {
        let kind = GateKind::ALL[rng.random_range(0..GateKind::ALL.len())];
        let a = rng.random_range(0..n);
        let mut qubits = vec![a];
        if kind.num_qubits() == 2 {
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            qubits.push(b);
        }
        let params: Vec<f64> = (0..kind.num_params())
            .map(|_| rng.random_range(-3.2..3.2))
            .collect();
        c.push(kind, &params, &qubits);
    }
    c
}

/// `k` distinct cuts, each followed by another gate on its wire, that
/// partition the circuit within `width_limit`.
pub fn random_cuts(rng: &mut ChaCha8Rng, c: &QuantumCircuit, k: usize, width_limit: usize) -> Option<Vec<CutPoint>> {
    let candidates: Vec<CutPoint> = c
        .gates
        .iter()
        .enumerate()
        .flat_map(|(g, gate)| gate.qubits.iter().map(move |&q| CutPoint::new(q, g)))
        .filter(|p| c.gates[p.after_gate + 1..].iter().any(|g| g.acts_on(p.qubit)))
        .collect();
    for _ in 0..100 {
        let mut cuts: Vec<CutPoint> = Vec::new();
        while cuts.len() < k.min(candidates.len()) {
            let p = candidates[rng.random_range(0..candidates.len())];
            if !cuts.contains(&p) {
                cuts.push(p);
            }
        }
        if apply_cuts(c, &cuts, width_limit).is_ok() {
            return Some(cuts);
        }
    }
    None
}
