//! Associated classical channels, their capacity, and block-coding protocols.

mod block;
mod channel;

pub use block::{
    block_distribution_exact, block_distribution_statevector, repetition_error_exact, simulate_block_protocol,
    BlockCode, BlockDistribution, BlockSimulation, CodeKind, CODEBOOK_LIMIT, EXACT_STRING_LIMIT,
};
pub use channel::{
    associated_channel, blahut_arimoto, mutual_information, CapacityResult, ClassicalChannel, DEFAULT_CAPACITY_ITER,
    DEFAULT_CAPACITY_TOL,
};
