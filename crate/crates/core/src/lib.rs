//! Partition function estimation and bounds for binary graphical models via
//! MAP queries under random parity constraints.

pub mod error;
pub mod gf2;
pub mod harness;
pub mod hashing;
pub mod model;
pub mod solvers;
pub mod wish;

pub use error::{Error, Result};
pub use gf2::{BitVec, ParityRow, ParitySystem};
pub use hashing::{HashFamily, HashFamilySpec, SeededRng};
pub use model::{FactorGraph, GridSpec};
pub use harness::{ExperimentConfig, RunRecord};
pub use solvers::{Budget, IlpModel, LpResult, MapResult, MapStatus, SolverKind};
pub use wish::{Guarantee, Mode, WishConfig, WishEstimate};
