use nalgebra::DVector;

use super::SystemSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Continuous control on one segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentControl<T: Scalar> {
    Constant(DVector<T>),
    /// One value per solver grid node of the segment.
    Sampled(Vec<DVector<T>>),
    /// `u(t) = Bᵀ T_q(t_end - t)ᵀ c`, the steering form produced by the
    /// Grammian synthesis. Singular at `t_end` when `q < 1`.
    Steering { coefficient: DVector<T> },
}

/// Continuous controls `u` per segment and impulse controls `v(t_i⁻)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw<T: Scalar> {
    pub u_segments: Vec<SegmentControl<T>>,
    pub v_impulses: Vec<DVector<T>>,
}

impl<T: Scalar> ControlLaw<T> {
    pub fn zero(spec: &SystemSpec<T>) -> Self {
        let p = spec.p();
        Self {
            u_segments: vec![SegmentControl::Constant(DVector::zeros(p)); spec.segment_count()],
            v_impulses: vec![DVector::zeros(p); spec.m()],
        }
    }

    pub fn constant(spec: &SystemSpec<T>, u: DVector<T>) -> Self {
        Self {
            u_segments: vec![SegmentControl::Constant(u); spec.segment_count()],
            v_impulses: vec![DVector::zeros(spec.p()); spec.m()],
        }
    }

    /// Checks segment/impulse counts, control dimension and, for sampled
    /// segments, the node count `nodes + 1`.
    pub fn check_shape(&self, spec: &SystemSpec<T>, nodes: usize) -> Result<()> {
        let p = spec.p();
        if self.u_segments.len() != spec.segment_count() {
            return Err(Error::ControlShape(format!(
                "{} segment controls for {} segments",
                self.u_segments.len(),
                spec.segment_count()
            )));
        }
        if self.v_impulses.len() != spec.m() {
            return Err(Error::ControlShape(format!(
                "{} impulse controls for {} impulses",
                self.v_impulses.len(),
                spec.m()
            )));
        }
        if self.v_impulses.iter().any(|v| v.len() != p) {
            return Err(Error::ControlShape(format!("impulse control must have length {p}")));
        }
        for (i, seg) in self.u_segments.iter().enumerate() {
            match seg {
                SegmentControl::Constant(u) if u.len() != p => {
                    return Err(Error::ControlShape(format!("segment {i}: control length {} != {p}", u.len())));
                }
                SegmentControl::Sampled(us) => {
                    if us.len() != nodes + 1 {
                        return Err(Error::ControlShape(format!(
                            "segment {i}: {} samples for {} grid nodes",
                            us.len(),
                            nodes + 1
                        )));
                    }
                    if us.iter().any(|u| u.len() != p) {
                        return Err(Error::ControlShape(format!("segment {i}: sample length != {p}")));
                    }
                }
                SegmentControl::Steering { coefficient } if coefficient.len() != spec.n() => {
                    return Err(Error::ControlShape(format!(
                        "segment {i}: steering coefficient length {} != {}",
                        coefficient.len(),
                        spec.n()
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
