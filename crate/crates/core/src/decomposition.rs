//! Quasiprobability coefficient tables for a single wire cut.
//!
//! A table `r` satisfies `B = Σ_{i,j} r[i][j] Tr[B O_j] ρ_i` for every 2x2
//! matrix `B`, where `ρ_i` ranges over the six Pauli eigenstates and `O_j`
//! over the six Pauli measurement projectors. The 24 parameters in
//! [`CutParameters`] move weight between entries along directions that keep
//! the identity intact:
//!
//! * `a[i]`, `b[i]`: shift row `i` by `-a` on both X columns, `-b` on both Y
//!   columns and `+(a+b)` on both Z columns (all three pairs sum to `I`).
//! * `c[j]`: shift column `j` by `-c` on rows |+>,|-> and `+c` on rows |0>,|1>.
//! * `d[j]`: shift column `j` by `-d` on rows |+i>,|-i> and `+d` on rows |0>,|1>.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CutError, Result};
use crate::mat2::Mat2;

/// Default acceptance tolerance for [`validate_table`].
pub const VALIDITY_TOL: f64 = 1e-12;
/// Entries at or below this magnitude count as zero when deciding active rows.
pub const ZERO_ROW_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrepState {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl PrepState {
    pub const ALL: [PrepState; 6] = [
        PrepState::Zero,
        PrepState::One,
        PrepState::Plus,
        PrepState::Minus,
        PrepState::PlusI,
        PrepState::MinusI,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            PrepState::Zero => "|0>",
            PrepState::One => "|1>",
            PrepState::Plus => "|+>",
            PrepState::Minus => "|->",
            PrepState::PlusI => "|+i>",
            PrepState::MinusI => "|-i>",
        }
    }

    pub fn ket(self) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match self {
            PrepState::Zero => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            PrepState::One => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
            PrepState::Plus => (Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
            PrepState::Minus => (Complex64::new(s, 0.0), Complex64::new(-s, 0.0)),
            PrepState::PlusI => (Complex64::new(s, 0.0), Complex64::new(0.0, s)),
            PrepState::MinusI => (Complex64::new(s, 0.0), Complex64::new(0.0, -s)),
        };
        [a, b]
    }

    pub fn density(self) -> Mat2 {
        Mat2::projector(self.ket())
    }
}

impl fmt::Display for PrepState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for PrepState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Measurement outcome of a cut: basis plus eigenvalue sign. Column order of
/// every coefficient table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasOutcome {
    XPlus,
    XMinus,
    YPlus,
    YMinus,
    ZPlus,
    ZMinus,
}

impl MeasOutcome {
    pub const ALL: [MeasOutcome; 6] = [
        MeasOutcome::XPlus,
        MeasOutcome::XMinus,
        MeasOutcome::YPlus,
        MeasOutcome::YMinus,
        MeasOutcome::ZPlus,
        MeasOutcome::ZMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column for `basis` and measured bit (0 = +1 eigenvalue).
    pub fn from_parts(basis: Basis, bit: usize) -> MeasOutcome {
        MeasOutcome::ALL[basis.index() * 2 + bit]
    }

    pub fn basis(self) -> Basis {
        Basis::ALL[self.index() / 2]
    }

    pub fn bit(self) -> usize {
        self.index() % 2
    }

    pub fn projector(self) -> Mat2 {
        let state = match self {
            MeasOutcome::XPlus => PrepState::Plus,
            MeasOutcome::XMinus => PrepState::Minus,
            MeasOutcome::YPlus => PrepState::PlusI,
            MeasOutcome::YMinus => PrepState::MinusI,
            MeasOutcome::ZPlus => PrepState::Zero,
            MeasOutcome::ZMinus => PrepState::One,
        };
        state.density()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecompositionScheme {
    #[serde(rename = "L8_PRESET")]
    L8Preset,
    #[serde(rename = "L4_PRESET")]
    L4Preset,
    #[serde(rename = "PARAM_L6")]
    ParamL6,
    #[serde(rename = "PARAM_L4")]
    ParamL4,
}

const L4_STATES: [PrepState; 4] = [
    PrepState::Zero,
    PrepState::One,
    PrepState::Plus,
    PrepState::PlusI,
];

impl DecompositionScheme {
    pub fn prep_states(self) -> &'static [PrepState] {
        match self {
            DecompositionScheme::L4Preset | DecompositionScheme::ParamL4 => &L4_STATES,
            DecompositionScheme::L8Preset | DecompositionScheme::ParamL6 => &PrepState::ALL,
        }
    }

    pub fn ell(self) -> usize {
        self.prep_states().len()
    }

    pub fn is_parameterized(self) -> bool {
        matches!(
            self,
            DecompositionScheme::ParamL4 | DecompositionScheme::ParamL6
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            DecompositionScheme::L8Preset => "L8_PRESET",
            DecompositionScheme::L4Preset => "L4_PRESET",
            DecompositionScheme::ParamL6 => "PARAM_L6",
            DecompositionScheme::ParamL4 => "PARAM_L4",
        }
    }
}

impl std::str::FromStr for DecompositionScheme {
    type Err = CutError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L8_PRESET" => Ok(DecompositionScheme::L8Preset),
            "L4_PRESET" => Ok(DecompositionScheme::L4Preset),
            "PARAM_L6" => Ok(DecompositionScheme::ParamL6),
            "PARAM_L4" => Ok(DecompositionScheme::ParamL4),
            other => Err(CutError::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

/// The 24 free parameters of one cut's table.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CutParameters {
    /// Per prep-state row, shifts the X/Z column pairs.
    pub a: [f64; 6],
    /// Per prep-state row, shifts the Y/Z column pairs.
    pub b: [f64; 6],
    /// Per outcome column, moves weight from rows |+>,|-> to |0>,|1>.
    pub c: [f64; 6],
    /// Per outcome column, moves weight from rows |+i>,|-i> to |0>,|1>.
    pub d: [f64; 6],
}

impl CutParameters {
    pub const LEN: usize = 24;

    pub fn zero() -> Self {
        Self::default()
    }

    /// Flattened as `a ++ b ++ c ++ d`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.c)
            .chain(&self.d)
            .copied()
            .collect()
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), Self::LEN, "cut parameters have 24 entries");
        let mut p = Self::zero();
        p.a.copy_from_slice(&v[0..6]);
        p.b.copy_from_slice(&v[6..12]);
        p.c.copy_from_slice(&v[12..18]);
        p.d.copy_from_slice(&v[18..24]);
        p
    }

    fn check_finite(&self) -> Result<()> {
        match self.to_vec().iter().position(|x| !x.is_finite()) {
            Some(i) => Err(CutError::NonFiniteParameter(i)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    /// `r[i][j]`: prep state `i` (row), measurement outcome `j` (column).
    pub r: [[f64; 6]; 6],
    pub scheme: DecompositionScheme,
}

impl CoefficientTable {
    /// Prep states whose row has a nonzero entry.
    pub fn active_rows(&self) -> Vec<PrepState> {
        PrepState::ALL
            .iter()
            .copied()
            .filter(|s| self.r[s.index()].iter().any(|v| v.abs() > ZERO_ROW_TOL))
            .collect()
    }

    pub fn ell(&self) -> usize {
        self.active_rows().len()
    }

    pub fn abs_sum(&self) -> f64 {
        self.r.iter().flatten().map(|v| v.abs()).sum()
    }

    /// `Σ r[i][j] Tr[B O_j] ρ_i`.
    pub fn apply(&self, b: &Mat2) -> Mat2 {
        let traces: Vec<f64> = MeasOutcome::ALL
            .iter()
            .map(|o| (*b * o.projector()).trace().re)
            .collect();
        let traces_im: Vec<f64> = MeasOutcome::ALL
            .iter()
            .map(|o| (*b * o.projector()).trace().im)
            .collect();
        let mut out = Mat2::ZERO;
        for state in PrepState::ALL {
            let row = &self.r[state.index()];
            let (mut re, mut im) = (0.0, 0.0);
            for j in 0..6 {
                re += row[j] * traces[j];
                im += row[j] * traces_im[j];
            }
            if re != 0.0 || im != 0.0 {
                let rho = state.density();
                for r in 0..2 {
                    for c in 0..2 {
                        out.0[r][c] += rho.0[r][c] * Complex64::new(re, im);
                    }
                }
            }
        }
        out
    }
}

/// Table I: the ℓ=8 scheme from `A = [Tr(A)I + Tr(AX)X + Tr(AY)Y + Tr(AZ)Z]/2`.
const L8_BASE: [[f64; 6]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],  // |0>
    [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],  // |1>
    [0.5, -0.5, 0.0, 0.0, 0.0, 0.0], // |+>
    [-0.5, 0.5, 0.0, 0.0, 0.0, 0.0], // |->
    [0.0, 0.0, 0.5, -0.5, 0.0, 0.0], // |+i>
    [0.0, 0.0, -0.5, 0.5, 0.0, 0.0], // |-i>
];

/// ℓ=4 scheme on {|0>,|1>,|+>,|+i>} with observables
/// {2|0><0| - X - Y, 2|1><1| - X - Y, 2X, 2Y} at weight 1/2 each.
const L4_BASE: [[f64; 6]; 6] = [
    [-0.5, 0.5, -0.5, 0.5, 1.0, 0.0],
    [-0.5, 0.5, -0.5, 0.5, 0.0, 1.0],
    [1.0, -1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0; 6],
    [0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
    [0.0; 6],
];

fn param_table(theta: &CutParameters) -> [[f64; 6]; 6] {
    let mut r = L8_BASE;
    for (i, row) in r.iter_mut().enumerate() {
        let (a, b) = (theta.a[i], theta.b[i]);
        row[0] -= a;
        row[1] -= a;
        row[2] -= b;
        row[3] -= b;
        row[4] += a + b;
        row[5] += a + b;
    }
    for j in 0..6 {
        let (c, d) = (theta.c[j], theta.d[j]);
        r[PrepState::Plus.index()][j] -= c;
        r[PrepState::Minus.index()][j] -= c;
        r[PrepState::PlusI.index()][j] -= d;
        r[PrepState::MinusI.index()][j] -= d;
        r[PrepState::Zero.index()][j] += c + d;
        r[PrepState::One.index()][j] += c + d;
    }
    r
}

const DROPPED_ROWS: [PrepState; 2] = [PrepState::Minus, PrepState::MinusI];

fn dropped_row_residual(r: &[[f64; 6]; 6]) -> f64 {
    DROPPED_ROWS
        .iter()
        .flat_map(|s| r[s.index()].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Builds the table for `theta`. In `ParamL4` mode `theta` must already zero
/// rows |-> and |-i> (see [`l4_subspace_project`]); those rows are then set to
/// exactly zero.
pub fn build_table(theta: &CutParameters, mode: DecompositionScheme) -> Result<CoefficientTable> {
    theta.check_finite()?;
    let mut r = param_table(theta);
    match mode {
        DecompositionScheme::ParamL6 => {}
        DecompositionScheme::ParamL4 => {
            let scale = 1.0 + theta.to_vec().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let residual = dropped_row_residual(&r);
            if residual > VALIDITY_TOL * scale {
                return Err(CutError::OutsideL4Subspace(residual));
            }
            for s in DROPPED_ROWS {
                r[s.index()] = [0.0; 6];
            }
        }
        other => {
            return Err(CutError::InvalidArgument(format!(
                "build_table needs a parameterized scheme, got {}",
                other.name()
            )))
        }
    }
    Ok(CoefficientTable { r, scheme: mode })
}

/// Projects onto the ℓ=4 subspace and builds the table.
pub fn build_table_l4_projected(theta: &CutParameters) -> Result<CoefficientTable> {
    build_table(&l4_subspace_project(theta), DecompositionScheme::ParamL4)
}

pub fn preset_table(scheme: DecompositionScheme) -> CoefficientTable {
    let r = match scheme {
        DecompositionScheme::L8Preset | DecompositionScheme::ParamL6 => L8_BASE,
        DecompositionScheme::L4Preset | DecompositionScheme::ParamL4 => L4_BASE,
    };
    CoefficientTable { r, scheme }
}

/// Table at the scheme's default parameters (θ = 0, projected for ℓ=4).
pub fn default_table(scheme: DecompositionScheme) -> CoefficientTable {
    match scheme {
        DecompositionScheme::L8Preset | DecompositionScheme::L4Preset => preset_table(scheme),
        DecompositionScheme::ParamL6 => build_table(&CutParameters::zero(), scheme)
            .expect("zero parameters are valid"),
        DecompositionScheme::ParamL4 => build_table_l4_projected(&CutParameters::zero())
            .expect("projected parameters are valid"),
    }
}

/// Starting parameters for a scheme: zero, projected into the ℓ=4 subspace when needed.
pub fn initial_parameters(scheme: DecompositionScheme) -> CutParameters {
    match scheme {
        DecompositionScheme::ParamL4 | DecompositionScheme::L4Preset => {
            l4_subspace_project(&CutParameters::zero())
        }
        _ => CutParameters::zero(),
    }
}

/// Max elementwise residual of reconstructing the four elementary matrices |a><b|.
pub fn validate_table(table: &CoefficientTable) -> f64 {
    let mut worst = 0.0f64;
    for row in 0..2 {
        for col in 0..2 {
            let e = Mat2::unit(row, col);
            worst = worst.max(table.apply(&e).max_abs_diff(&e));
        }
    }
    worst
}

pub fn is_valid(table: &CoefficientTable, tol: f64) -> bool {
    validate_table(table) <= tol
}

struct L4Subspace {
    /// Linear map θ -> dropped-row entries (12 x 24).
    a: DMatrix<f64>,
    /// Dropped-row entries at θ = 0.
    offset: DVector<f64>,
    /// (A Aᵀ)⁻¹
    gram_inv: DMatrix<f64>,
    dimension: usize,
}

fn dropped_rows_vec(theta: &[f64]) -> DVector<f64> {
    let r = param_table(&CutParameters::from_slice(theta));
    DVector::from_iterator(
        12,
        DROPPED_ROWS.iter().flat_map(|s| r[s.index()].iter().copied()),
    )
}

fn l4_subspace() -> &'static L4Subspace {
    static CELL: OnceLock<L4Subspace> = OnceLock::new();
    CELL.get_or_init(|| {
        let zero = vec![0.0; CutParameters::LEN];
        let offset = dropped_rows_vec(&zero);
        // the map is affine, so unit probes recover its linear part exactly
        let mut a = DMatrix::zeros(12, CutParameters::LEN);
        for k in 0..CutParameters::LEN {
            let mut e = zero.clone();
            e[k] = 1.0;
            a.set_column(k, &(dropped_rows_vec(&e) - &offset));
        }
        let rank = a.clone().svd(false, false).rank(1e-10);
        let gram_inv = (&a * a.transpose())
            .try_inverse()
            .expect("row-annihilation constraints are independent");
        L4Subspace {
            a,
            offset,
            gram_inv,
            dimension: CutParameters::LEN - rank,
        }
    })
}

/// Dimension of the parameter subspace that zeroes rows |-> and |-i>.
pub fn l4_subspace_dimension() -> usize {
    l4_subspace().dimension
}

/// Nearest parameters (Euclidean) whose table has zero rows |-> and |-i>.
pub fn l4_subspace_project(theta: &CutParameters) -> CutParameters {
    let sub = l4_subspace();
    let t = DVector::from_vec(theta.to_vec());
    let residual = &sub.a * &t + &sub.offset;
    let projected = &t - sub.a.transpose() * (&sub.gram_inv * residual);
    CutParameters::from_slice(projected.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_theta(rng: &mut ChaCha8Rng) -> CutParameters {
        let v: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
        CutParameters::from_slice(&v)
    }

    #[test]
    fn zero_parameters_give_table_one() {
        let t = build_table(&CutParameters::zero(), DecompositionScheme::ParamL6).unwrap();
        assert_eq!(t.r, preset_table(DecompositionScheme::L8Preset).r);
        assert_eq!(t.r[PrepState::Plus.index()][MeasOutcome::XPlus.index()], 0.5);
        assert_eq!(t.r[PrepState::Plus.index()][MeasOutcome::XMinus.index()], -0.5);
        assert_eq!(t.r[PrepState::Zero.index()][MeasOutcome::ZPlus.index()], 1.0);
        assert_eq!(t.active_rows().len(), 6);
        assert!(validate_table(&t) <= 1e-14);
    }

    #[test]
    fn single_row_shift() {
        let mut theta = CutParameters::zero();
        theta.a[PrepState::Plus.index()] = 0.3;
        let t = build_table(&theta, DecompositionScheme::ParamL6).unwrap();
        let row = t.r[PrepState::Plus.index()];
        let expect = [0.2, -0.8, 0.0, 0.0, 0.3, 0.3];
        for (got, want) in row.iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{row:?}");
        }
        assert!(validate_table(&t) <= 1e-12);
    }

    #[test]
    fn l4_preset_shape() {
        let t = preset_table(DecompositionScheme::L4Preset);
        assert_eq!(
            t.active_rows(),
            vec![PrepState::Zero, PrepState::One, PrepState::Plus, PrepState::PlusI]
        );
        assert_eq!(t.ell(), 4);
        assert!(validate_table(&t) <= 1e-14);
    }

    #[test]
    fn l8_abs_sum() {
        let t = preset_table(DecompositionScheme::L8Preset);
        assert!((t.abs_sum() - 6.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_table_fails() {
        let mut t = preset_table(DecompositionScheme::L8Preset);
        t.r[PrepState::Zero.index()][MeasOutcome::XPlus.index()] += 0.1;
        assert!(validate_table(&t) >= 0.05);
        assert!(!is_valid(&t, VALIDITY_TOL));
    }

    #[test]
    fn random_parameters_stay_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = build_table(&random_theta(&mut rng), DecompositionScheme::ParamL6).unwrap();
            assert!(validate_table(&t) <= 1e-12);
        }
    }

    #[test]
    fn projection_from_zero() {
        let p = l4_subspace_project(&CutParameters::zero());
        let want_c = [-0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
        let want_d = [0.0, 0.0, -0.5, 0.5, 0.0, 0.0];
        for j in 0..6 {
            assert!((p.c[j] - want_c[j]).abs() < 1e-12, "{:?}", p.c);
            assert!((p.d[j] - want_d[j]).abs() < 1e-12, "{:?}", p.d);
        }
        let t = build_table(&p, DecompositionScheme::ParamL4).unwrap();
        assert!(t
            .active_rows()
            .iter()
            .all(|s| DecompositionScheme::ParamL4.prep_states().contains(s)));
        assert!(validate_table(&t) <= 1e-12);
        // the projected origin is the ℓ=4 preset
        for i in 0..6 {
            for j in 0..6 {
                assert!((t.r[i][j] - L4_BASE[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = l4_subspace_project(&random_theta(&mut rng));
            let pp = l4_subspace_project(&p);
            for (x, y) in p.to_vec().iter().zip(pp.to_vec()) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!(dropped_row_residual(&param_table(&p)) <= 1e-12);
        }
    }

    #[test]
    fn subspace_dimension_is_twelve() {
        assert_eq!(l4_subspace_dimension(), 12);
    }

    #[test]
    fn l4_mode_rejects_outside_subspace() {
        let err = build_table(&CutParameters::zero(), DecompositionScheme::ParamL4).unwrap_err();
        assert!(matches!(err, CutError::OutsideL4Subspace(_)));
    }

    #[test]
    fn non_finite_rejected() {
        let mut theta = CutParameters::zero();
        theta.b[2] = f64::NAN;
        assert!(matches!(
            build_table(&theta, DecompositionScheme::ParamL6),
            Err(CutError::NonFiniteParameter(8))
        ));
    }

    #[test]
    fn preset_not_buildable() {
        assert!(build_table(&CutParameters::zero(), DecompositionScheme::L8Preset).is_err());
    }

    #[test]
    fn measurement_pairs_sum_to_identity() {
        for basis in Basis::ALL {
            let sum = MeasOutcome::from_parts(basis, 0).projector()
                + MeasOutcome::from_parts(basis, 1).projector();
            assert!(sum.max_abs_diff(&Mat2::IDENTITY) < 1e-15);
        }
    }
}
