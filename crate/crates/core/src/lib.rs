//! Discontinuous Galerkin time-domain solver for the 2D transverse-electric
//! Maxwell system on (-1, 1) x (0, 1) with a surface current on {x1 = 0}.

pub mod error;
pub mod harness;
pub mod leapfrog;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod selftest;
pub mod solutions;
pub mod space;

pub use error::{Error, Result};
pub use mesh::{build_cartesian_mesh, build_alternating_mesh, build_tensor_mesh, mesh_size, Face, FaceKind, Mesh2D, Point, Subdomain};
pub use space::{DgSpace, MaterialParams, TEState};
pub use operators::{estimate_cfl_norm, CflEstimate, FluxVariant, LiftMode, MaxwellOperators};
pub use leapfrog::{cfl_timestep, integrate, leapfrog_step, verify_one_step_identity, Forcing, Leapfrog, LeapfrogConfig, Schedule, SourceTerm};
