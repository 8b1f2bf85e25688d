//! Gate-list circuit representation and the JSON circuit document.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CutError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    P,
    Cx,
    Cz,
    Cp,
    Swap,
}

impl GateKind {
    pub const ALL: [GateKind; 16] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::P,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Cp,
        GateKind::Swap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::P => "p",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Cp => "cp",
            GateKind::Swap => "swap",
        }
    }

    pub fn num_qubits(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Cp | GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::P | GateKind::Cp => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = CutError;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| CutError::UnknownGate(s.to_string()))
    }
}

impl Serialize for GateKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for GateKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: GateKind,
    #[serde(default)]
    pub params: Vec<f64>,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(name: GateKind, params: Vec<f64>, qubits: Vec<usize>) -> Self {
        Gate {
            name,
            params,
            qubits,
        }
    }

    pub fn acts_on(&self, qubit: usize) -> bool {
        self.qubits.contains(&qubit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumCircuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

impl QuantumCircuit {
    pub fn new(num_qubits: usize) -> Self {
        QuantumCircuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    /// Appends a gate without validating it; call [`QuantumCircuit::validate`] once built.
    pub fn push(&mut self, name: GateKind, params: &[f64], qubits: &[usize]) -> &mut Self {
        self.gates
            .push(Gate::new(name, params.to_vec(), qubits.to_vec()));
        self
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.push(GateKind::H, &[], &[q])
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.push(GateKind::X, &[], &[q])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(GateKind::Cx, &[], &[control, target])
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(CutError::Malformed("num_qubits must be positive".into()));
        }
        for (index, gate) in self.gates.iter().enumerate() {
            let arity_err = |reason: String| CutError::GateArity {
                index,
                name: gate.name.to_string(),
                reason,
            };
            if gate.qubits.len() != gate.name.num_qubits() {
                return Err(arity_err(format!(
                    "expects {} qubit(s), got {}",
                    gate.name.num_qubits(),
                    gate.qubits.len()
                )));
            }
            if gate.params.len() != gate.name.num_params() {
                return Err(arity_err(format!(
                    "expects {} parameter(s), got {}",
                    gate.name.num_params(),
                    gate.params.len()
                )));
            }
            if gate.params.iter().any(|p| !p.is_finite()) {
                return Err(arity_err("non-finite angle".into()));
            }
            if gate.qubits.len() == 2 && gate.qubits[0] == gate.qubits[1] {
                return Err(arity_err(format!(
                    "duplicate qubit {} in 2-qubit gate",
                    gate.qubits[0]
                )));
            }
            if let Some(&qubit) = gate.qubits.iter().find(|&&q| q >= self.num_qubits) {
                return Err(CutError::QubitOutOfRange {
                    index,
                    qubit,
                    num_qubits: self.num_qubits,
                });
            }
        }
        Ok(())
    }
}

/// Severs the wire of `qubit` immediately after gate `after_gate` acts on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CutPoint {
    pub qubit: usize,
    pub after_gate: usize,
}

impl CutPoint {
    pub fn new(qubit: usize, after_gate: usize) -> Self {
        CutPoint { qubit, after_gate }
    }
}

/// On-disk circuit description: the circuit plus optional cut points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDocument {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    #[serde(default)]
    pub cuts: Vec<CutPoint>,
}

impl CircuitDocument {
    pub fn new(circuit: QuantumCircuit, cuts: Vec<CutPoint>) -> Self {
        CircuitDocument {
            num_qubits: circuit.num_qubits,
            gates: circuit.gates,
            cuts,
        }
    }

    pub fn circuit(&self) -> QuantumCircuit {
        QuantumCircuit {
            num_qubits: self.num_qubits,
            gates: self.gates.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit document serializes")
    }
}

/// Parses and validates a circuit document. Gate order is preserved.
pub fn parse_document(text: &str) -> Result<CircuitDocument> {
    let doc: CircuitDocument = serde_json::from_str(text).map_err(|e| {
        // serde reports unknown gate names through a custom message
        let msg = e.to_string();
        match msg.strip_prefix("unknown gate `") {
            Some(rest) => CutError::UnknownGate(rest.split('`').next().unwrap_or("").to_string()),
            None => CutError::Malformed(msg),
        }
    })?;
    doc.circuit().validate()?;
    Ok(doc)
}

pub fn parse_circuit(text: &str) -> Result<QuantumCircuit> {
    parse_document(text).map(|doc| doc.circuit())
}
