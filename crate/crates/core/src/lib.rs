//! Reproducing one quantum measurement with repeated uses of another.
//!
//! * [`qcore`]: complex linear algebra, POVMs, instruments, Haar sampling.
//! * [`vnsynth`]: partition protocols that approximate a von Neumann measurement.
//! * [`rms`]: closed-form and Monte Carlo reproduction errors.
//! * [`subroutines`]: post-measurement isometry and generalized classical cloning.
//! * [`coding`]: associated classical channels, capacity and block-coding protocols.

pub mod coding;
pub mod error;
pub mod qcore;
pub mod rms;
pub mod subroutines;
pub mod vnsynth;

pub use error::{Error, Result};
