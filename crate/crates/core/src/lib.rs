//! Wire cutting with parameterized quasiprobability decompositions and
//! variance-aware shot allocation.

pub mod circuit;
pub mod decomposition;
pub mod error;
pub mod harness;
pub mod mat2;
pub mod optimizer;
pub mod partition;
pub mod reconstruction;
pub mod simulator;

pub use circuit::{CircuitDocument, CutPoint, Gate, GateKind, QuantumCircuit};
pub use decomposition::{
    build_table, CoefficientTable, CutParameters, DecompositionScheme, PrepState,
};
pub use error::{CutError, Result};
pub use partition::{apply_cuts, enumerate_configurations, ConfigSpace, Partition};
pub use reconstruction::{reconstruct, variance_coefficients, ConfigValues, VarianceModel};
