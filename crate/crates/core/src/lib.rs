//! Energy-minimal computation offloading for two users sharing an uplink.
//!
//! Each user either uploads its task to an edge server (binary mode) or
//! splits it between local and remote execution (partial mode) under a
//! deadline. The uplink is shared under one of four multiple-access
//! schemes; the solvers return the minimum total energy and the slot
//! durations, rates and powers that achieve it.

pub mod binary_offload;
pub mod error;
pub mod model;
pub mod partial_offload;
pub mod scalar_opt;

pub use error::{Error, Result};
pub use model::{
    Allocation, LocalComputeModel, LocalEnergy, Mode, RadioLink, Scenario, Scheme, Solution, TaskSpec,
};
pub use partial_offload::solve;
