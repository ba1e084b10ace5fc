//! Synthesis of protocols that reproduce a von Neumann measurement from `N` uses of an
//! available POVM: coarse-graining of outcome strings, error minimization over achievable
//! expectation values, and preparation of the measured states.

mod partition;
mod protocols;
mod qp;
mod search;
mod states;

pub use partition::{
    build_partition_povm, contains_outcome_map, map_from_fn, string_count, string_index,
    string_of, string_operator, PartitionProtocol,
};
pub use protocols::{
    noisy_z_optimal, trine_optimal_protocol, NoisyZParams, NoisyZRegion, SynthesizedProtocol,
};
pub use qp::{
    project_capped_simplex, qubit_bounds, qubit_objective, solve_box_quadratic_qubit, spectral_bounds,
    BoxQuadSolution, QubitRegion, QuditQpProblem, QuditQpSolution, QP_KKT_TOL,
};
pub use search::{
    canonical_map, exhaustive_search, hill_climb_search, SearchResult, CO_OPTIMAL_TOL,
    EXHAUSTIVE_STRING_LIMIT, HILL_CLIMB_STRING_LIMIT,
};
pub use states::{construct_states, implemented_povm, StatePrep};
