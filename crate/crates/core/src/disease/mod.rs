//! Disease state, transmission and progression.

pub mod agents;
pub mod calibrate;
pub mod dynamics;
pub mod params;
pub mod stage;

pub use agents::{AgentArrays, NEVER};
pub use dynamics::{infection_step, progression_step, seed_initial_infections, Transition};
pub use params::DiseaseParams;
pub use stage::Stage;
