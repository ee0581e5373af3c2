//! Simulation-based placement and sizing of wireless charging units (WCUs)
//! on signalized intersection approaches.
//!
//! The workflow runs a base microsimulation, keeps the lanes operating at
//! level of service C, samples a low/mid/high grid of unit counts and green
//! splits per candidate lane, fits interpolants to the sampled utility and
//! delay, and searches the interpolants with a mixed-integer genetic
//! algorithm under budget and delay constraints. An edge betweenness
//! baseline allocates the same budget for comparison.

pub mod centrality;
pub mod error;
pub mod los;
pub mod model;
pub mod optimize;
pub mod sim;
pub mod surrogate;

pub use error::{ModelError, OptimizeError, SimError, SurrogateError};
