//! Energies, the bounded minimiser and the decomposition solvers.

pub mod anls;
pub mod bilateral;
pub mod config;
pub mod energy;
pub mod full;
pub mod minimize;

pub use anls::{
    anls, estimate_primary_pigments, joint_summarize, relative_change, solve_palette, solve_weights_subset,
    subset_energy, AnlsOutcome, Estimate, InitMode,
};
pub use bilateral::SmoothingOperator;
pub use config::{BilateralParams, SolverConfig};
pub use energy::{e_data, e_smooth, e_sparse, e_spatial, e_sum, SmoothWeights};
pub use full::{pyramid_sizes, solve_weights_full, FullObjective, FullSolve, LevelReport};
pub use minimize::{bounded_minimize, MinimizeOptions, Minimum, StopReason};
