//! Constrained minimizers of a trapped Gross–Pitaevskii energy with the
//! singular focusing nonlinearity `|x|^{-b}|u|^{p+1}` in the mass-subcritical
//! regime, and the profile `w` describing their blow-up as the mass grows.

pub mod asymptotics;
pub mod decay;
pub mod error;
pub mod exec;
pub mod grid;
pub mod interp;
pub mod minimizer;
pub mod ode;
pub mod params;
pub mod profile;
pub mod report;

pub use error::{Error, ParamField, Result};
pub use exec::Execution;
pub use grid::{build_grid, GridSpec, RadialField, RadialGrid};
pub use minimizer::{gfdn_minimize, FlowConfig, Init, MinimizerResult};
pub use params::{Exponents, Potential, ProblemParams};
pub use profile::{solve_w_flow, solve_w_shooting, GroundStateW};
