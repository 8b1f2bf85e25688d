//! Cut application, fragment extraction and configuration enumeration.
//!
//! A cut splits the wire of one qubit into two *lines*. Lines are joined by
//! two-qubit gates, and the connected components of that graph are the
//! fragments. The upstream line of each cut ends in a measure slot and the
//! downstream line starts in a prepare slot.

use serde::Serialize;

use crate::circuit::{CutPoint, Gate, QuantumCircuit};
use crate::decomposition::{Basis, DecompositionScheme, PrepState};
use crate::error::{CutError, Result};

/// Default width limit for fragments handed to the statevector simulator.
pub const DEFAULT_WIDTH_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Slot {
    /// Local line inside the fragment.
    pub line: usize,
    pub cut: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    /// Circuit over local lines; contains only gates of the original circuit.
    pub circuit: QuantumCircuit,
    /// Original gate index of every local gate.
    pub gate_origin: Vec<usize>,
    /// Original qubit of every local line.
    pub line_origin: Vec<usize>,
    pub prep_slots: Vec<Slot>,
    pub meas_slots: Vec<Slot>,
    /// (local line, original output bit) for every line that reaches the end of the circuit.
    pub output_map: Vec<(usize, usize)>,
}

impl Fragment {
    pub fn width(&self) -> usize {
        self.circuit.num_qubits
    }

    pub fn num_outputs(&self) -> usize {
        self.output_map.len()
    }

    /// Cut ids touching this fragment, ascending and without repeats.
    pub fn incident_cuts(&self) -> Vec<usize> {
        let mut cuts: Vec<usize> = self
            .meas_slots
            .iter()
            .chain(&self.prep_slots)
            .map(|s| s.cut)
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        cuts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CutLink {
    pub point: CutPoint,
    pub upstream: usize,
    pub downstream: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub num_qubits: usize,
    pub fragments: Vec<Fragment>,
    pub cuts: Vec<CutLink>,
}

impl Partition {
    pub fn num_cuts(&self) -> usize {
        self.cuts.len()
    }

    /// Stitches the fragments back together at their cut ids.
    pub fn replay(&self) -> QuantumCircuit {
        let mut gates: Vec<(usize, Gate)> = Vec::new();
        for frag in &self.fragments {
            for (gate, &origin) in frag.circuit.gates.iter().zip(&frag.gate_origin) {
                let qubits = gate.qubits.iter().map(|&l| frag.line_origin[l]).collect();
                gates.push((origin, Gate::new(gate.name, gate.params.clone(), qubits)));
            }
        }
        gates.sort_by_key(|(origin, _)| *origin);
        QuantumCircuit {
            num_qubits: self.num_qubits,
            gates: gates.into_iter().map(|(_, g)| g).collect(),
        }
    }
}

fn validate_cuts(circuit: &QuantumCircuit, cuts: &[CutPoint]) -> Result<()> {
    let invalid = |cut: &CutPoint, reason: &str| CutError::InvalidCut {
        qubit: cut.qubit,
        after_gate: cut.after_gate,
        reason: reason.to_string(),
    };
    for (i, cut) in cuts.iter().enumerate() {
        if cut.qubit >= circuit.num_qubits {
            return Err(invalid(cut, "qubit out of range"));
        }
        let Some(gate) = circuit.gates.get(cut.after_gate) else {
            return Err(invalid(cut, "gate index out of range"));
        };
        if !gate.acts_on(cut.qubit) {
            return Err(invalid(cut, "referenced gate does not act on the qubit"));
        }
        if !circuit.gates[cut.after_gate + 1..]
            .iter()
            .any(|g| g.acts_on(cut.qubit))
        {
            return Err(invalid(cut, "no later gate acts on the qubit"));
        }
        if cuts[..i].contains(cut) {
            return Err(invalid(cut, "duplicate cut point"));
        }
    }
    Ok(())
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Cuts `circuit` at `cuts` and returns the fragments as connected components.
///
/// Cut ids are positions in `cuts`. Fragments are ordered by their first line,
/// lines by (original qubit, segment).
pub fn apply_cuts(
    circuit: &QuantumCircuit,
    cuts: &[CutPoint],
    width_limit: usize,
) -> Result<Partition> {
    circuit.validate()?;
    validate_cuts(circuit, cuts)?;
    let n = circuit.num_qubits;

    // cuts on each qubit, ordered along the wire
    let mut wire_cuts: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, cut) in cuts.iter().enumerate() {
        wire_cuts[cut.qubit].push(id);
    }
    for list in &mut wire_cuts {
        list.sort_by_key(|&id| cuts[id].after_gate);
    }
    let mut line_base = vec![0usize; n + 1];
    for q in 0..n {
        line_base[q + 1] = line_base[q] + wire_cuts[q].len() + 1;
    }
    let num_lines = line_base[n];
    let segment_of = |q: usize, gate: usize| -> usize {
        wire_cuts[q]
            .iter()
            .take_while(|&&id| cuts[id].after_gate < gate)
            .count()
    };

    let gate_lines: Vec<Vec<usize>> = circuit
        .gates
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            g.qubits
                .iter()
                .map(|&q| line_base[q] + segment_of(q, gi))
                .collect()
        })
        .collect();

    let mut uf = UnionFind((0..num_lines).collect());
    for lines in &gate_lines {
        for pair in lines.windows(2) {
            uf.union(pair[0], pair[1]);
        }
    }

    // fragment id per root, in order of first line
    let mut root_to_frag = vec![usize::MAX; num_lines];
    let mut frag_lines: Vec<Vec<usize>> = Vec::new();
    for line in 0..num_lines {
        let root = uf.find(line);
        if root_to_frag[root] == usize::MAX {
            root_to_frag[root] = frag_lines.len();
            frag_lines.push(Vec::new());
        }
        frag_lines[root_to_frag[root]].push(line);
    }
    let line_frag: Vec<usize> = (0..num_lines)
        .map(|l| root_to_frag[uf.find(l)])
        .collect();
    let mut local_of = vec![0usize; num_lines];
    for lines in &frag_lines {
        for (local, &line) in lines.iter().enumerate() {
            local_of[line] = local;
        }
    }
    let qubit_of = |line: usize| line_base.partition_point(|&b| b <= line) - 1;

    let mut fragments: Vec<Fragment> = frag_lines
        .iter()
        .map(|lines| Fragment {
            circuit: QuantumCircuit::new(lines.len()),
            gate_origin: Vec::new(),
            line_origin: lines.iter().map(|&l| qubit_of(l)).collect(),
            prep_slots: Vec::new(),
            meas_slots: Vec::new(),
            output_map: Vec::new(),
        })
        .collect();

    for (gi, (gate, lines)) in circuit.gates.iter().zip(&gate_lines).enumerate() {
        let frag = &mut fragments[line_frag[lines[0]]];
        let local: Vec<usize> = lines.iter().map(|&l| local_of[l]).collect();
        frag.circuit
            .gates
            .push(Gate::new(gate.name, gate.params.clone(), local));
        frag.gate_origin.push(gi);
    }

    let mut links = Vec::with_capacity(cuts.len());
    for (id, cut) in cuts.iter().enumerate() {
        let seg = wire_cuts[cut.qubit].iter().position(|&c| c == id).unwrap();
        let up = line_base[cut.qubit] + seg;
        let down = up + 1;
        let (fu, fd) = (line_frag[up], line_frag[down]);
        fragments[fu].meas_slots.push(Slot {
            line: local_of[up],
            cut: id,
        });
        fragments[fd].prep_slots.push(Slot {
            line: local_of[down],
            cut: id,
        });
        links.push(CutLink {
            point: *cut,
            upstream: fu,
            downstream: fd,
        });
    }
    for q in 0..n {
        let last = line_base[q + 1] - 1;
        fragments[line_frag[last]]
            .output_map
            .push((local_of[last], q));
    }
    for frag in &mut fragments {
        frag.output_map.sort_unstable();
    }

    for (id, frag) in fragments.iter().enumerate() {
        if frag.width() > width_limit {
            return Err(CutError::FragmentTooWide {
                fragment: id,
                width: frag.width(),
                limit: width_limit,
            });
        }
    }

    Ok(Partition {
        num_qubits: n,
        fragments,
        cuts: links,
    })
}

/// One instantiation of a fragment: a basis per measure slot and a state per prepare slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    pub fragment: usize,
    /// Aligned with the fragment's `meas_slots`.
    pub bases: Vec<Basis>,
    /// Aligned with the fragment's `prep_slots`.
    pub states: Vec<PrepState>,
}

/// The enumerated configurations of a partition under a scheme, with
/// ordinal lookup.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    pub configs: Vec<Configuration>,
    /// Ordinal of the first configuration of each fragment.
    pub offsets: Vec<usize>,
    pub prep_states: Vec<PrepState>,
}

impl ConfigSpace {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Ordinal from basis digits (X=0, Y=1, Z=2) and prep-state positions
    /// within `prep_states`. Returns `None` if a state is not prepared by the scheme.
    pub fn ordinal(&self, fragment: usize, bases: &[Basis], states: &[PrepState]) -> Option<usize> {
        let mut idx = 0usize;
        for b in bases {
            idx = idx * 3 + b.index();
        }
        let ell = self.prep_states.len();
        for s in states {
            let pos = self.prep_states.iter().position(|p| p == s)?;
            idx = idx * ell + pos;
        }
        Some(self.offsets[fragment] + idx)
    }

    pub fn fragment_range(&self, fragment: usize) -> std::ops::Range<usize> {
        let end = self
            .offsets
            .get(fragment + 1)
            .copied()
            .unwrap_or(self.configs.len());
        self.offsets[fragment]..end
    }
}

/// All configurations, ordered by fragment then lexicographically over
/// (measure slots, prepare slots) with X<Y<Z and the scheme's state order.
pub fn enumerate_configurations(partition: &Partition, scheme: DecompositionScheme) -> ConfigSpace {
    let prep_states = scheme.prep_states().to_vec();
    let ell = prep_states.len();
    let mut configs = Vec::new();
    let mut offsets = Vec::with_capacity(partition.fragments.len());
    for (fid, frag) in partition.fragments.iter().enumerate() {
        offsets.push(configs.len());
        let m = frag.meas_slots.len();
        let p = frag.prep_slots.len();
        let radices: Vec<usize> = std::iter::repeat_n(3, m)
            .chain(std::iter::repeat_n(ell, p))
            .collect();
        let total: usize = radices.iter().product();
        let mut digits = vec![0usize; m + p];
        for _ in 0..total {
            configs.push(Configuration {
                fragment: fid,
                bases: digits[..m].iter().map(|&d| Basis::ALL[d]).collect(),
                states: digits[m..].iter().map(|&d| prep_states[d]).collect(),
            });
            for pos in (0..m + p).rev() {
                digits[pos] += 1;
                if digits[pos] < radices[pos] {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
    ConfigSpace {
        configs,
        offsets,
        prep_states,
    }
}
