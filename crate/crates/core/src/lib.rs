//! Small-amplitude steady almost-periodic gravity water waves with constant
//! vorticity.
//!
//! The free-boundary problem is rewritten as one equation for the surface
//! elevation `w`, posed on finite trigonometric sums over a frequency
//! lattice. Local branches of solutions bifurcating from laminar flow are
//! computed by Newton continuation, and every computed wave can be mapped
//! back to the original flow and checked residually.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod dno;
pub mod error;
pub mod freqset;
pub mod reconstruct;
pub mod trig;
pub mod waveop;

pub use error::{Error, Result};
pub use freqset::{AdmissiblePair, FreqVector, GeneratorBasis, ModeId, ModeKind, PairSpec};
pub use trig::TrigSum;
pub use waveop::WaveParams;

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattices.md")]
    mod lattices {}
    #[doc = include_str!("../../../book/src/trig.md")]
    mod trig {}
    #[doc = include_str!("../../../book/src/dn.md")]
    mod dn {}
    #[doc = include_str!("../../../book/src/dispersion.md")]
    mod dispersion {}
    #[doc = include_str!("../../../book/src/branches.md")]
    mod branches {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
