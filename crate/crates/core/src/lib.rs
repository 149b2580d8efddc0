//! Grover–Rudolph state preparation for sparse, real, nonnegative states.
//!
//! The pipeline builds the preparation tree of a [`SparseState`], reads off
//! the baseline rotation angles, and shrinks the resulting circuit in two
//! stages:
//!
//! * [`exact`] strips controls that only guard unreachable branches and
//!   merges equal-angle neighbors, leaving the prepared state untouched;
//! * [`approx`] additionally merges gates with different angles, choosing
//!   each merged angle optimally and keeping an overlap estimate above a
//!   user-given floor.
//!
//! [`bound`] evaluates a rigorous lower bound on the final overlap and the
//! [`simulator`] computes the true overlap, which the test-suite uses as the
//! oracle for everything else. [`experiment`] drives the CNOT-count and
//! fidelity studies behind the `grsparse` command-line tool.
//!
//! ```
//! use grsparse::{PreparationTree, SparseState, exact, simulator};
//!
//! let psi = SparseState::from_entries(3, [(0b001, 1.0), (0b011, 1.0), (0b100, 1.0)])?;
//! let tree = PreparationTree::build(&psi);
//! let result = exact::optimize_exact(&tree.baseline_angles(), &tree);
//! assert_eq!(result.cost.total, 6);
//!
//! let prepared = simulator::simulate(&result.optimized);
//! assert!((simulator::overlap(&psi, &prepared)? - 1.0).abs() < 1e-12);
//! # Ok::<(), grsparse::Error>(())
//! ```

pub mod approx;
pub mod bound;
pub mod circuit;
pub mod cost;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod pattern;
pub mod region;
pub mod simulator;
pub mod state;

pub use circuit::{Circuit, GateLayer};
pub use cost::{CostReport, LayerMode};
pub use error::{Error, Result};
pub use pattern::{ControlPattern, Trit};
pub use state::{BaselineCircuit, PreparationTree, SparseState};

/// Angles at or below this magnitude are zero: such gates are never applied.
pub const ZERO_ANGLE: f64 = 1e-12;
