//! Full-wave forward model: Green's functions, dipole fields, the
//! volume-integral-equation solve, and channel-matrix assembly.

pub mod channel;
pub mod green;
pub mod solve;

pub use channel::{channel_matrix, simulate_sample, simulate_sample_with, ChannelMatrix};
pub use green::{dipole_field, dyadic_green, incident_matrix, receive_matrix, scalar_green};
pub use solve::{
    effective_radius, self_term, solve_total_fields, solve_total_fields_with, SolveMethod,
    SolverOptions, SolverReport, TotalFieldSolution,
};
