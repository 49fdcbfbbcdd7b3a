use thiserror::Error;

use crate::branch::BranchPoint;
use crate::freqset::{AdmissibilityReport, FreqVector, ModeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },

    #[error("expected a {expected}-dimensional frequency vector, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coefficient of {vector} exceeds the bound {bound}")]
    CoefficientOutOfBound { vector: String, bound: i32 },

    #[error("lattice vectors {a} and {b} embed to the same frequency")]
    Collision { a: FreqVector, b: FreqVector },

    #[error("{0}")]
    Inadmissible(AdmissibilityReport),

    #[error("trigonometric sums live on different lattices")]
    BasisMismatch,

    #[error("point ({x}, {y}) lies outside the strip -{h} <= y <= 0")]
    OutsideStrip { x: f64, y: f64, h: f64 },

    #[error("surface dips below the bed: w({x}) = {value} <= -h = {neg_h}")]
    SurfaceBelowBed { x: f64, value: f64, neg_h: f64 },

    #[error("resonant configuration: {} modes in the kernel: {}", .modes.len(), fmt_modes(.modes))]
    Resonance { modes: Vec<ModeId> },

    #[error("Newton failed to converge at s = {s}: residual {residual:e} after {iterations} iterations")]
    NonConvergence { s: f64, residual: f64, iterations: usize },

    #[error("singular Jacobian at s = {s}")]
    SingularJacobian { s: f64 },

    #[error("continuation stalled after s = {}: {source}", .last_good.s)]
    Stalled {
        last_good: Box<BranchPoint>,
        #[source]
        source: Box<Error>,
    },
}

fn fmt_modes(modes: &[ModeId]) -> String {
    modes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", ")
}

impl Error {
    /// Mathematical refusals, as opposed to bad input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Resonance { .. }
                | Error::NonConvergence { .. }
                | Error::SingularJacobian { .. }
                | Error::Stalled { .. }
        )
    }
}
