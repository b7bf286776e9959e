//! Chained low-rank adapter training with a conditional-gradient companion
//! solver, verified at desk scale on synthetic tasks.
//!
//! Three layers:
//!
//! - numeric core: [`linalg`] (dense matrices, seeded RNG, top singular
//!   pair), [`lora`] (adapter lifecycle), [`model`] (linear stacks with
//!   adapter injection and manual backprop), [`optim`] (AdamW with full
//!   state reset);
//! - training drivers: [`cola`] (tune / tie-a-knot / extend-the-chain
//!   residual chaining with knot and rank schedules plus a training-cost
//!   ledger) and [`frankwolfe`] (trace-norm-ball conditional gradient with
//!   a certified rank-one oracle and average-gap bound verification);
//! - [`harness`]: synthetic tasks, experiment configs, seed sweeps, CSV and
//!   JSON reporting, and the pieces behind the `cola` binary.
//!
//! See the crate examples for one runnable program per capability.

// Validation guards are written as `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cola;
pub mod frankwolfe;
pub mod harness;
pub mod linalg;
pub mod lora;
pub mod model;
pub mod optim;

pub use crate::cola::{run_cola, ColaDataset, ColaOutcome, ColaSchedule, RunTrace, TrainParams};
pub use crate::frankwolfe::{run_fw, verify_theorem_bound, FwConfig, FwTrace, TraceNormBall};
pub use crate::linalg::{DenseMatrix, SeededRng};
pub use crate::lora::LoraAdapter;
pub use crate::model::{Batch, LoraLinearModel, Targets};
