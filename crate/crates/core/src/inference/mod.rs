//! Step 1: binary code inference, one bit at a time.
//!
//! For bit `k` the code objective reduces to a binary quadratic problem
//! with integer coefficients. Blocks without internal dissimilar pairs have
//! submodular conditional energies, which are minimized exactly by a min
//! cut; sweeping blocks gives a monotone block coordinate descent. With
//! singleton blocks this is ICM.

mod codes;
pub mod maxflow;
mod energy;
mod sweep;

pub use codes::{words_for_bits, CodeMatrix};
pub use energy::{
    bit_objective, block_energy_terms, compute_bit_coefficients, solve_block_mincut,
    total_objective, BitEnergy, BlockEnergyTerms, BlockWorkspace,
};
pub use sweep::{
    infer_bit, infer_codes, infer_with_energy, initial_bits, BitInference, InferConfig,
    InferStats, InitPolicy,
};
