//! Problem specification, trajectories, controls, fractional-calculus
//! utilities and hypothesis diagnostics.

mod calculus;
mod control;
mod hypothesis;
mod spec;
mod trajectory;

pub(crate) use calculus::caputo_l1;
pub use calculus::{caputo_derivative, fractional_integral, volterra_apply};
pub use control::{ControlLaw, SegmentControl};
pub use hypothesis::{hypothesis_check, ContractionFlags, DeclaredConstants, HypothesisReport, KernelBound};
pub use spec::{validate_spec, Forcing, ImpulseMap, NonlocalMap, SystemSpec, VolterraKernel};
pub use trajectory::{SampledPath, Trajectory};
