//! Combinatorial modulus of the annulus-crossing path families.

pub mod dimension;
pub mod family;
pub mod ipm;
pub mod scale;
pub mod solve;

pub use family::PathFamily;
pub use scale::{find_n0, mod_p_at_scale, ScaleModulus, VertexModulus};
pub use solve::{brute_force_modulus, solve_modulus, ModulusResult, SolveStatus, SolverOptions};
