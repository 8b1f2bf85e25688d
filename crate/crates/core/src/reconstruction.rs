//! Recombination of fragment configuration probabilities into the uncut
//! output distribution, and the per-configuration variance coefficients.
//!
//! Every cut contributes a row index (an active prepare state of its table).
//! For a fixed row assignment the fragments are independent, so the output
//! probability is a sum over row tuples of a product of per-fragment values
//! `V_f[rows][x_f]`. Measure slots fold the table columns into `V_f`:
//! `Σ_j r[row][j] q(basis(j), sign(j), x_f)`; prepare slots pick the
//! configuration whose state equals the row.

use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::{Basis, CoefficientTable, MeasOutcome, PrepState};
use crate::error::{CutError, Result};
use crate::partition::{ConfigSpace, Partition};
use crate::simulator::{ConfigurationDistribution, ConfigurationEstimate};

/// Outcome probabilities available for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigValues {
    /// Joint probabilities over the fragment's local lines, `None` if never sampled.
    pub probs: Option<Vec<f64>>,
    pub shots: u64,
    /// Exact values carry no sampling variance.
    pub exact: bool,
}

impl ConfigValues {
    pub fn exact(probs: Vec<f64>) -> Self {
        ConfigValues {
            probs: Some(probs),
            shots: 0,
            exact: true,
        }
    }

    pub fn missing() -> Self {
        ConfigValues {
            probs: None,
            shots: 0,
            exact: false,
        }
    }
}

impl From<ConfigurationEstimate> for ConfigValues {
    fn from(e: ConfigurationEstimate) -> Self {
        ConfigValues {
            probs: e.probs,
            shots: e.shots,
            exact: false,
        }
    }
}

impl From<ConfigurationDistribution> for ConfigValues {
    fn from(d: ConfigurationDistribution) -> Self {
        ConfigValues::exact(d.probs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcomes {
    All,
    Subset(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionResult {
    pub num_qubits: usize,
    /// `None` for the full distribution, otherwise the queried outcomes.
    pub outcomes: Option<Vec<usize>>,
    /// Aligned with `outcomes`, or indexed by outcome when full.
    pub p: Vec<f64>,
}

impl ReconstructionResult {
    pub fn get(&self, outcome: usize) -> Option<f64> {
        match &self.outcomes {
            None => self.p.get(outcome).copied(),
            Some(list) => list.iter().position(|&o| o == outcome).map(|i| self.p[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceModel {
    /// `f_e` per configuration ordinal.
    pub f: Vec<f64>,
}

impl VarianceModel {
    /// `Σ_e f_e / N_e`, skipping configurations with `f_e = 0`.
    pub fn predicted_err(&self, shots: &[u64]) -> Result<f64> {
        predicted_err(self, shots)
    }

    pub fn sqrt_sum(&self) -> f64 {
        self.f.iter().map(|f| f.sqrt()).sum()
    }
}

pub fn predicted_err(model: &VarianceModel, shots: &[u64]) -> Result<f64> {
    if shots.len() != model.f.len() {
        return Err(CutError::ConfigCountMismatch {
            expected: model.f.len(),
            got: shots.len(),
        });
    }
    let mut err = 0.0;
    for (config, (&f, &n)) in model.f.iter().zip(shots).enumerate() {
        if f > 0.0 {
            if n == 0 {
                return Err(CutError::UnsampledConfiguration { config, f });
            }
            err += f / n as f64;
        }
    }
    Ok(err)
}

struct FragmentTensor {
    /// Incident cut ids, ascending.
    cuts: Vec<usize>,
    radix: Vec<usize>,
    num_rows: usize,
    num_outputs: usize,
    /// Global qubit of each output bit.
    global_bits: Vec<usize>,
    /// Local outcome index contributed by each output pattern.
    out_offset: Vec<usize>,
    /// Local outcome index contributed by each meas sign pattern.
    sign_offset: Vec<usize>,
    /// `[row tuple][x_f]`
    v: Vec<f64>,
}

impl FragmentTensor {
    fn slice(&self, rt: usize) -> &[f64] {
        let w = 1 << self.num_outputs;
        &self.v[rt * w..(rt + 1) * w]
    }

    fn row_index(&self, digits: &[usize]) -> usize {
        self.cuts
            .iter()
            .zip(&self.radix)
            .fold(0, |idx, (&k, &r)| idx * r + digits[k])
    }

    /// Like `row_index`, with digits in incident-cut order.
    fn row_index_local(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.radix).fold(0, |idx, (&d, &r)| idx * r + d)
    }
}

/// Fragment tensors for one set of tables and probabilities.
pub struct Contraction<'a> {
    partition: &'a Partition,
    space: &'a ConfigSpace,
    tables: &'a [CoefficientTable],
    values: &'a [ConfigValues],
    /// Active rows per cut.
    rows: Vec<Vec<PrepState>>,
    frags: Vec<FragmentTensor>,
}

fn scatter(bits: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .filter(|&(t, _)| bits >> t & 1 == 1)
        .fold(0, |acc, (_, &p)| acc | 1 << p)
}

fn odometer(digits: &mut [usize], radix: &[usize]) -> bool {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < radix[pos] {
            return true;
        }
        digits[pos] = 0;
    }
    false
}

fn kron_into(acc: &[f64], v: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for &b in v {
        out.extend(acc.iter().map(|&a| a * b));
    }
}

impl<'a> Contraction<'a> {
    pub fn new(
        partition: &'a Partition,
        space: &'a ConfigSpace,
        tables: &'a [CoefficientTable],
        values: &'a [ConfigValues],
    ) -> Result<Self> {
        if tables.len() != partition.num_cuts() {
            return Err(CutError::TableCountMismatch {
                expected: partition.num_cuts(),
                got: tables.len(),
            });
        }
        if values.len() != space.len() {
            return Err(CutError::ConfigCountMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        let mut rows = Vec::with_capacity(tables.len());
        for (cut, t) in tables.iter().enumerate() {
            let active = t.active_rows();
            if let Some(s) = active.iter().find(|s| !space.prep_states.contains(s)) {
                return Err(CutError::InactiveState {
                    cut,
                    state: s.label().to_string(),
                });
            }
            rows.push(active);
        }
        let mut c = Contraction {
            partition,
            space,
            tables,
            values,
            rows,
            frags: Vec::new(),
        };
        c.frags = (0..partition.fragments.len())
            .map(|f| c.build_fragment(f))
            .collect::<Result<_>>()?;
        Ok(c)
    }

    fn build_fragment(&self, f: usize) -> Result<FragmentTensor> {
        let frag = &self.partition.fragments[f];
        let cuts = frag.incident_cuts();
        let radix: Vec<usize> = cuts.iter().map(|&k| self.rows[k].len()).collect();
        let num_rows: usize = radix.iter().product();
        let num_outputs = frag.num_outputs();
        let out_lines: Vec<usize> = frag.output_map.iter().map(|&(l, _)| l).collect();
        let meas_lines: Vec<usize> = frag.meas_slots.iter().map(|s| s.line).collect();
        let out_offset: Vec<usize> = (0..1 << num_outputs).map(|x| scatter(x, &out_lines)).collect();
        let m = meas_lines.len();
        let sign_offset: Vec<usize> = (0..1 << m).map(|s| scatter(s, &meas_lines)).collect();
        let pos_of = |k: usize| cuts.binary_search(&k).unwrap();

        let w = 1 << num_outputs;
        let mut v = vec![0.0; num_rows * w];
        let mut digits = vec![0usize; cuts.len()];
        let col_radix = vec![6usize; m];
        for rt in 0..num_rows {
            let states: Vec<PrepState> = frag
                .prep_slots
                .iter()
                .map(|s| self.rows[s.cut][digits[pos_of(s.cut)]])
                .collect();
            let meas_rows: Vec<usize> = frag
                .meas_slots
                .iter()
                .map(|s| self.rows[s.cut][digits[pos_of(s.cut)]].index())
                .collect();
            let out = &mut v[rt * w..(rt + 1) * w];
            let mut cols = vec![0usize; m];
            loop {
                let coeff: f64 = frag
                    .meas_slots
                    .iter()
                    .zip(&meas_rows)
                    .zip(&cols)
                    .map(|((s, &row), &j)| self.tables[s.cut].r[row][j])
                    .product();
                if coeff != 0.0 {
                    let bases: Vec<Basis> = cols.iter().map(|&j| MeasOutcome::ALL[j].basis()).collect();
                    let signs = cols
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (s, &j)| acc | MeasOutcome::ALL[j].bit() << s);
                    let ord = self
                        .space
                        .ordinal(f, &bases, &states)
                        .expect("active rows are prepared by the scheme");
                    let q = self.values[ord]
                        .probs
                        .as_ref()
                        .ok_or(CutError::MissingEstimate(ord))?;
                    let base = sign_offset[signs];
                    for (x, o) in out.iter_mut().enumerate() {
                        *o += coeff * q[base | out_offset[x]];
                    }
                }
                if !odometer(&mut cols, &col_radix) {
                    break;
                }
            }
            odometer(&mut digits, &radix);
        }
        Ok(FragmentTensor {
            cuts,
            radix,
            num_rows,
            num_outputs,
            global_bits: frag.output_map.iter().map(|&(_, q)| q).collect(),
            out_offset,
            sign_offset,
            v,
        })
    }

    fn cut_radix(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    /// Calls `visit(digits)` for every global row tuple, in odometer order.
    fn for_each_tuple(&self, mut visit: impl FnMut(&[usize])) {
        let radix = self.cut_radix();
        if radix.contains(&0) {
            return;
        }
        let mut digits = vec![0usize; radix.len()];
        loop {
            visit(&digits);
            if !odometer(&mut digits, &radix) {
                break;
            }
        }
    }

    /// Output pattern of each fragment for a global outcome.
    fn split(&self, x: usize) -> Vec<usize> {
        self.frags
            .iter()
            .map(|t| {
                t.global_bits
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (b, &q)| acc | (x >> q & 1) << b)
            })
            .collect()
    }

    /// Global outcome of the fragment-major index `y` (fragment 0 least significant).
    fn fragment_major_to_global(&self) -> Vec<usize> {
        let n = self.partition.num_qubits;
        let mut global_bits = Vec::with_capacity(n);
        for t in &self.frags {
            global_bits.extend_from_slice(&t.global_bits);
        }
        (0..1usize << n).map(|y| scatter(y, &global_bits)).collect()
    }

    pub fn full(&self) -> Vec<f64> {
        let n = self.partition.num_qubits;
        let mut acc = vec![0.0; 1 << n];
        let (mut cur, mut next) = (Vec::with_capacity(1 << n), Vec::with_capacity(1 << n));
        self.for_each_tuple(|digits| {
            cur.clear();
            cur.push(1.0);
            for t in &self.frags {
                kron_into(&cur, t.slice(t.row_index(digits)), &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c;
            }
        });
        let map = self.fragment_major_to_global();
        let mut p = vec![0.0; 1 << n];
        for (y, &x) in map.iter().enumerate() {
            p[x] = acc[y];
        }
        p
    }

    pub fn at(&self, x: usize) -> f64 {
        let parts = self.split(x);
        let mut total = 0.0;
        self.for_each_tuple(|digits| {
            total += self
                .frags
                .iter()
                .zip(&parts)
                .map(|(t, &xf)| t.slice(t.row_index(digits))[xf])
                .product::<f64>();
        });
        total
    }

    /// `Env_f[rt_f][y]`: contraction of all other fragments, `y` fragment-major over them.
    fn environment(&self, f: usize) -> Vec<f64> {
        let n = self.partition.num_qubits;
        let others = 1usize << (n - self.frags[f].num_outputs);
        let mut env = vec![0.0; self.frags[f].num_rows * others];
        let (mut cur, mut next) = (Vec::with_capacity(others), Vec::with_capacity(others));
        self.for_each_tuple(|digits| {
            cur.clear();
            cur.push(1.0);
            for (g, t) in self.frags.iter().enumerate() {
                if g != f {
                    kron_into(&cur, t.slice(t.row_index(digits)), &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
            }
            let rt = self.frags[f].row_index(digits);
            for (e, c) in env[rt * others..(rt + 1) * others].iter_mut().zip(&cur) {
                *e += c;
            }
        });
        env
    }

    /// Row tuples of a configuration's fragment compatible with its prepared
    /// states, with the measure-slot coefficient for every sign pattern.
    /// Empty when a prepared state is not an active row.
    fn config_terms(&self, ordinal: usize) -> Vec<(usize, Vec<f64>)> {
        let cfg = &self.space.configs[ordinal];
        let frag = &self.partition.fragments[cfg.fragment];
        let t = &self.frags[cfg.fragment];
        let pos_of = |k: usize| t.cuts.binary_search(&k).unwrap();
        let mut fixed: Vec<Option<usize>> = vec![None; t.cuts.len()];
        for (slot, state) in frag.prep_slots.iter().zip(&cfg.states) {
            match self.rows[slot.cut].iter().position(|s| s == state) {
                Some(d) => fixed[pos_of(slot.cut)] = Some(d),
                None => return Vec::new(),
            }
        }
        let m = frag.meas_slots.len();
        let mut terms = Vec::new();
        for rt in 0..t.num_rows {
            let mut digits = vec![0usize; t.cuts.len()];
            let mut rem = rt;
            for p in (0..t.cuts.len()).rev() {
                digits[p] = rem % t.radix[p];
                rem /= t.radix[p];
            }
            if fixed
                .iter()
                .zip(&digits)
                .any(|(fx, &d)| fx.is_some_and(|v| v != d))
            {
                continue;
            }
            let coeffs: Vec<f64> = (0..1usize << m)
                .map(|signs| {
                    frag.meas_slots
                        .iter()
                        .zip(&cfg.bases)
                        .enumerate()
                        .map(|(s, (slot, &b))| {
                            let row = self.rows[slot.cut][digits[pos_of(slot.cut)]].index();
                            let col = MeasOutcome::from_parts(b, signs >> s & 1).index();
                            self.tables[slot.cut].r[row][col]
                        })
                        .product()
                })
                .collect();
            terms.push((rt, coeffs));
        }
        terms
    }

    /// `∂p_x / ∂q` for every local outcome `q` of configuration `ordinal`.
    pub fn gradient(&self, ordinal: usize, x: usize) -> Vec<f64> {
        let f = self.space.configs[ordinal].fragment;
        let t = &self.frags[f];
        let width = self.partition.fragments[f].width();
        let mut g = vec![0.0; 1 << width];
        let parts = self.split(x);
        let mut y = 0usize;
        let mut shift = 0;
        for (h, (u, &xf)) in self.frags.iter().zip(&parts).enumerate() {
            if h != f {
                y |= xf << shift;
                shift += u.num_outputs;
            }
        }
        let env = self.environment(f);
        let others = 1usize << (self.partition.num_qubits - t.num_outputs);
        for (rt, coeffs) in self.config_terms(ordinal) {
            let e = env[rt * others + y];
            for (signs, c) in coeffs.iter().enumerate() {
                g[t.sign_offset[signs] | t.out_offset[parts[f]]] += e * c;
            }
        }
        g
    }

    /// `G[y][signs]`: gradient of `p` w.r.t. the configuration's outcome
    /// probabilities, for every outcome `y` of the other fragments. The
    /// environment is contracted one measure slot at a time. `None` when a
    /// prepared state is not an active row.
    fn config_gradients(&self, ordinal: usize, env: &[f64]) -> Option<Vec<f64>> {
        let cfg = &self.space.configs[ordinal];
        let frag = &self.partition.fragments[cfg.fragment];
        let t = &self.frags[cfg.fragment];
        let others = 1usize << (self.partition.num_qubits - t.num_outputs);
        let pos_of = |k: usize| t.cuts.binary_search(&k).unwrap();

        let mut fixed: Vec<Option<usize>> = vec![None; t.cuts.len()];
        for (slot, state) in frag.prep_slots.iter().zip(&cfg.states) {
            fixed[pos_of(slot.cut)] = Some(self.rows[slot.cut].iter().position(|s| s == state)?);
        }
        // one axis per measure slot: its cut's free row digit, or a single fixed row
        let m = frag.meas_slots.len();
        let axis_rows: Vec<Vec<usize>> = frag
            .meas_slots
            .iter()
            .map(|s| match fixed[pos_of(s.cut)] {
                Some(d) => vec![d],
                None => (0..self.rows[s.cut].len()).collect(),
            })
            .collect();
        let mut shape: Vec<usize> = std::iter::once(others)
            .chain(axis_rows.iter().map(Vec::len))
            .collect();
        let total: usize = shape.iter().product();
        let mut tensor = vec![0.0; total];
        let mut digits: Vec<usize> = fixed.iter().map(|d| d.unwrap_or(0)).collect();
        let mut axis_idx = vec![0usize; m];
        let axis_radix: Vec<usize> = shape[1..].to_vec();
        let inner: usize = axis_radix.iter().product();
        for a in 0..inner {
            for (s, slot) in frag.meas_slots.iter().enumerate() {
                digits[pos_of(slot.cut)] = axis_rows[s][axis_idx[s]];
            }
            let rt = t.row_index_local(&digits);
            for y in 0..others {
                tensor[y * inner + a] = env[rt * others + y];
            }
            odometer(&mut axis_idx, &axis_radix);
        }

        for (s, (slot, &basis)) in frag.meas_slots.iter().zip(&cfg.bases).enumerate() {
            let table = &self.tables[slot.cut].r;
            let mat: Vec<[f64; 2]> = axis_rows[s]
                .iter()
                .map(|&d| {
                    let row = self.rows[slot.cut][d].index();
                    [0, 1].map(|bit| table[row][MeasOutcome::from_parts(basis, bit).index()])
                })
                .collect();
            let axis = s + 1;
            let outer: usize = shape[..axis].iter().product();
            let inner: usize = shape[axis + 1..].iter().product();
            let d = shape[axis];
            let mut out = vec![0.0; outer * 2 * inner];
            for o in 0..outer {
                for (r, row) in mat.iter().enumerate() {
                    let src = &tensor[(o * d + r) * inner..(o * d + r + 1) * inner];
                    for (sign, &c) in row.iter().enumerate() {
                        if c != 0.0 {
                            let dst = &mut out[(o * 2 + sign) * inner..(o * 2 + sign + 1) * inner];
                            for (x, v) in dst.iter_mut().zip(src) {
                                *x += c * v;
                            }
                        }
                    }
                }
            }
            tensor = out;
            shape[axis] = 2;
        }

        // row-major sign axes (slot 0 most significant) -> bit s of the sign pattern
        let n_signs = 1usize << m;
        let mut g = vec![0.0; others * n_signs];
        for y in 0..others {
            for a in 0..n_signs {
                let signs = (0..m).fold(0, |acc, s| acc | (a >> (m - 1 - s) & 1) << s);
                g[y * n_signs + signs] = tensor[y * n_signs + a];
            }
        }
        Some(g)
    }

    /// Variance coefficient of one configuration, given its fragment environment.
    fn coefficient(&self, ordinal: usize, env: &[f64]) -> Result<f64> {
        let val = &self.values[ordinal];
        if val.exact {
            return Ok(0.0);
        }
        let Some(g) = self.config_gradients(ordinal, env) else {
            return Ok(0.0);
        };
        let Some(q) = val.probs.as_ref() else {
            return if g.iter().any(|&v| v != 0.0) {
                Err(CutError::MissingEstimate(ordinal))
            } else {
                Ok(0.0)
            };
        };
        let t = &self.frags[self.space.configs[ordinal].fragment];
        let n_signs = t.sign_offset.len();
        let mut total = 0.0;
        for gy in g.chunks(n_signs) {
            for &xo in &t.out_offset {
                let (mut sq, mut lin) = (0.0, 0.0);
                for (&gs, &so) in gy.iter().zip(&t.sign_offset) {
                    let qv = q[so | xo];
                    sq += gs * gs * qv;
                    lin += gs * qv;
                }
                total += sq - lin * lin;
            }
        }
        Ok(total.max(0.0))
    }

    pub fn variance(&self) -> Result<VarianceModel> {
        let envs: Vec<Vec<f64>> = (0..self.frags.len())
            .into_par_iter()
            .map(|f| self.environment(f))
            .collect();
        let f = (0..self.space.len())
            .into_par_iter()
            .map(|e| self.coefficient(e, &envs[self.space.configs[e].fragment]))
            .collect::<Result<Vec<f64>>>()?;
        Ok(VarianceModel { f })
    }
}

pub fn reconstruct(
    partition: &Partition,
    space: &ConfigSpace,
    tables: &[CoefficientTable],
    values: &[ConfigValues],
    outcomes: &Outcomes,
) -> Result<ReconstructionResult> {
    let c = Contraction::new(partition, space, tables, values)?;
    Ok(match outcomes {
        Outcomes::All => ReconstructionResult {
            num_qubits: partition.num_qubits,
            outcomes: None,
            p: c.full(),
        },
        Outcomes::Subset(list) => {
            if let Some(&bad) = list.iter().find(|&&x| x >> partition.num_qubits != 0) {
                return Err(CutError::InvalidArgument(format!(
                    "outcome {bad} out of range for {} qubits",
                    partition.num_qubits
                )));
            }
            ReconstructionResult {
                num_qubits: partition.num_qubits,
                outcomes: Some(list.clone()),
                p: list.iter().map(|&x| c.at(x)).collect(),
            }
        }
    })
}

pub fn variance_coefficients(
    partition: &Partition,
    space: &ConfigSpace,
    tables: &[CoefficientTable],
    values: &[ConfigValues],
) -> Result<VarianceModel> {
    Contraction::new(partition, space, tables, values)?.variance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CutPoint, GateKind, QuantumCircuit};
    use crate::decomposition::{preset_table, DecompositionScheme};
    use crate::partition::{apply_cuts, enumerate_configurations};
    use crate::simulator::{simulate_circuit, simulate_exact};

    fn exact_values(p: &Partition, space: &ConfigSpace) -> Vec<ConfigValues> {
        space
            .configs
            .iter()
            .enumerate()
            .map(|(o, c)| simulate_exact(&p.fragments[c.fragment], c, o).unwrap().into())
            .collect()
    }

    fn bell() -> (QuantumCircuit, Partition) {
        let mut c = QuantumCircuit::new(2);
        c.h(0).cx(0, 1);
        let p = apply_cuts(&c, &[CutPoint::new(0, 0)], 20).unwrap();
        (c, p)
    }

    #[test]
    fn bell_exact() {
        let (_, p) = bell();
        for scheme in [DecompositionScheme::L4Preset, DecompositionScheme::L8Preset] {
            let space = enumerate_configurations(&p, scheme);
            let vals = exact_values(&p, &space);
            let r = reconstruct(&p, &space, &[preset_table(scheme)], &vals, &Outcomes::All).unwrap();
            for (got, want) in r.p.iter().zip([0.5, 0.0, 0.0, 0.5]) {
                assert!((got - want).abs() < 1e-12, "{:?}", r.p);
            }
        }
    }

    #[test]
    fn fig1_matches_uncut() {
        let mut c = QuantumCircuit::new(3);
        c.h(0).h(1).cx(0, 1).push(GateKind::Rz, &[0.3], &[1]);
        c.cx(1, 2).h(2);
        let p = apply_cuts(&c, &[CutPoint::new(1, 3)], 20).unwrap();
        let space = enumerate_configurations(&p, DecompositionScheme::L4Preset);
        let vals = exact_values(&p, &space);
        let tables = [preset_table(DecompositionScheme::L4Preset)];
        let r = reconstruct(&p, &space, &tables, &vals, &Outcomes::All).unwrap();
        let want = simulate_circuit(&c);
        for (a, b) in r.p.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
        let sub = reconstruct(&p, &space, &tables, &vals, &Outcomes::Subset(vec![5, 2])).unwrap();
        assert!((sub.get(5).unwrap() - want[5]).abs() < 1e-10);
        assert!((sub.get(2).unwrap() - want[2]).abs() < 1e-10);
    }

    #[test]
    fn missing_estimate_reported() {
        let (_, p) = bell();
        let space = enumerate_configurations(&p, DecompositionScheme::L4Preset);
        let mut vals = exact_values(&p, &space);
        vals[0] = ConfigValues::missing();
        let err = reconstruct(
            &p,
            &space,
            &[preset_table(DecompositionScheme::L4Preset)],
            &vals,
            &Outcomes::All,
        )
        .unwrap_err();
        assert!(matches!(err, CutError::MissingEstimate(0)));
    }

    #[test]
    fn table_count_checked() {
        let (_, p) = bell();
        let space = enumerate_configurations(&p, DecompositionScheme::L4Preset);
        let vals = exact_values(&p, &space);
        assert!(matches!(
            reconstruct(&p, &space, &[], &vals, &Outcomes::All),
            Err(CutError::TableCountMismatch { .. })
        ));
        // an ℓ=6 table on an ℓ=4 configuration space
        assert!(matches!(
            reconstruct(&p, &space, &[preset_table(DecompositionScheme::L8Preset)], &vals, &Outcomes::All),
            Err(CutError::InactiveState { .. })
        ));
    }

    #[test]
    fn predicted_err_formula() {
        let m = VarianceModel { f: vec![1.0, 4.0] };
        assert!((m.predicted_err(&[100, 200]).unwrap() - 0.03).abs() < 1e-15);
        assert!((m.predicted_err(&[200, 400]).unwrap() - 0.015).abs() < 1e-15);
        let m = VarianceModel { f: vec![0.0, 4.0] };
        assert!((m.predicted_err(&[0, 200]).unwrap() - 0.02).abs() < 1e-15);
        let m = VarianceModel { f: vec![1.0, 4.0] };
        assert!(matches!(
            m.predicted_err(&[0, 200]),
            Err(CutError::UnsampledConfiguration { config: 0, .. })
        ));
    }

    #[test]
    fn exact_values_have_no_variance() {
        let (_, p) = bell();
        let space = enumerate_configurations(&p, DecompositionScheme::L4Preset);
        let vals = exact_values(&p, &space);
        let m = variance_coefficients(&p, &space, &[preset_table(DecompositionScheme::L4Preset)], &vals)
            .unwrap();
        assert!(m.f.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn bell_variance_is_positive_and_sparse() {
        let (_, p) = bell();
        let space = enumerate_configurations(&p, DecompositionScheme::L4Preset);
        let mut vals = exact_values(&p, &space);
        vals.iter_mut().for_each(|v| v.exact = false);
        let m = variance_coefficients(&p, &space, &[preset_table(DecompositionScheme::L4Preset)], &vals)
            .unwrap();
        assert_eq!(m.f.len(), 7);
        assert!(m.f.iter().all(|&f| f >= 0.0));
        assert!(m.f.iter().any(|&f| f > 0.0));
        // H|0> is an X eigenstate: its Y and Z measurements carry variance, X does not
        assert!(m.f[0].abs() < 1e-15, "{:?}", m.f);
    }

    fn coefficient_from_gradients(c: &Contraction, vals: &[ConfigValues], e: usize, n: usize) -> f64 {
        let q = vals[e].probs.as_ref().unwrap();
        (0..1usize << n)
            .map(|x| {
                let g = c.gradient(e, x);
                let sq: f64 = g.iter().zip(q).map(|(g, q)| g * g * q).sum();
                let lin: f64 = g.iter().zip(q).map(|(g, q)| g * q).sum();
                sq - lin * lin
            })
            .sum::<f64>()
            .max(0.0)
    }

    #[test]
    fn coefficients_match_gradient_route() {
        let mut c = QuantumCircuit::new(4);
        for q in 0..4 {
            c.push(GateKind::Ry, &[0.4 + 0.3 * q as f64], &[q]);
        }
        c.cx(0, 1).cx(1, 2).push(GateKind::Rz, &[0.7], &[1]).cx(2, 3);
        c.push(GateKind::Ry, &[1.1], &[2]).cx(1, 3).h(1).cx(0, 2);
        // q1 cut twice, q2 once
        let cuts = [CutPoint::new(1, 4), CutPoint::new(2, 5), CutPoint::new(1, 6)];
        let p = apply_cuts(&c, &cuts, 20).unwrap();
        for scheme in [DecompositionScheme::L4Preset, DecompositionScheme::L8Preset] {
            let space = enumerate_configurations(&p, scheme);
            let mut vals = exact_values(&p, &space);
            vals.iter_mut().for_each(|v| v.exact = false);
            let tables = vec![preset_table(scheme); p.num_cuts()];
            let m = variance_coefficients(&p, &space, &tables, &vals).unwrap();
            let con = Contraction::new(&p, &space, &tables, &vals).unwrap();
            for (e, &f) in m.f.iter().enumerate() {
                let want = coefficient_from_gradients(&con, &vals, e, 4);
                assert!((f - want).abs() < 1e-10 * want.max(1.0), "{e}: {f} vs {want}");
            }
        }
    }
}
