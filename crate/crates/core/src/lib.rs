//! Fractional-order evolution equations with multi-delay state and control
//! terms and a nonlocal initial condition: mild-solution solver, regularized
//! approximate-controllability synthesis and the supporting special
//! functions.

pub mod cli;
pub mod control;
pub mod error;
pub mod kernels;
pub mod quadrature;
pub mod registry;
pub mod solver;
pub mod special;
pub mod spectral;
pub mod strategies;
pub mod verification;

pub use error::{Error, Result};
pub use kernels::{FracOrder, SampledFunction, SingularWeights};
pub use registry::{Descriptor, Registries, Registry};
pub use spectral::{synthesize_physical, KernelRule, ModelSpec, Propagators, SpectralState};
pub use solver::{picard_solve, ControlInput, Solver, SolverConfig, TimeGrid, Trajectory};
pub use control::{beta_sweep, closed_loop_solve, compute_grammian, resolvent_apply, ClosedLoop, ControlProblem, Grammian, SweepReport};
