//! Complex linear algebra and the quantum object model: operators, states, POVMs,
//! instruments and Haar sampling.

mod eig;
mod instrument;
mod matrix;
pub mod named;
mod povm;
pub mod random;
mod rng;
mod state;

pub use eig::{hermitian_eig, sqrt_psd, HermitianEigen};
pub use instrument::{induced_povm, Instrument, ZERO_PROBABILITY};
pub use matrix::{
    partial_trace, tensor, tensor_all, tensor_vec, tensor_with_cap, ComplexMatrix, DIM_CAP,
    HERMITIAN_TOL,
};
pub use num_complex::Complex64;
pub use povm::{
    is_proportional_to_identity, validate_elements, validate_povm, Povm, PovmReport, Violation,
    COMPLETENESS_TOL, POSITIVITY_TOL, TRIVIALITY_TOL,
};
pub use rng::Rng;
pub use state::{haar_state, StateVector};
