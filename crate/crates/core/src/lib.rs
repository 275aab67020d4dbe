//! Numerical toolkit for impulsive, non-local Caputo fractional control
//! systems: Mittag-Leffler solution operators, a mild-solution Picard
//! solver, controllability Grammians with steering controls, and a Bolza
//! optimal-control search.
//!
//! Every routine is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod scalar;
pub mod special;

pub mod bolza;
pub mod grammian;
pub mod mlfunc;
pub mod solver;
pub mod system;

pub use bolza::{AdmissibleSet, BolzaCost, OptimalTriplet, OptimizeConfig};
pub use error::{Error, Result};
pub use grammian::{GrammianPair, TerminalError, Waypoints};
pub use mlfunc::{FracOrder, MatrixFunctionPlan, OperatorPair};
pub use scalar::Scalar;
pub use solver::{SolveReport, SolverConfig, SolverContext};
pub use system::{ControlLaw, DeclaredConstants, SampledPath, SegmentControl, SystemSpec, Trajectory};

pub type FracOrder64 = FracOrder<f64>;
pub type OperatorPair64 = OperatorPair<f64>;
pub type SystemSpec64 = SystemSpec<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolverContext64 = SolverContext<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ControlLaw64 = ControlLaw<f64>;
pub type Waypoints64 = Waypoints<f64>;
pub type GrammianPair64 = GrammianPair<f64>;
pub type AdmissibleSet64 = AdmissibleSet<f64>;
pub type BolzaCost64 = BolzaCost<f64>;
