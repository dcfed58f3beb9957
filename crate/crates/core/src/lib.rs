//! Agent-based epidemic simulator with testing, self-quarantine, vaccination
//! and contact tracing interventions.

pub mod costs;
pub mod disease;
pub mod engine;
pub mod error;
pub mod events;
pub mod interventions;
pub mod io;
pub mod networks;
pub mod popgen;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use io::config::{parse_config, parse_config_with_overrides, ScenarioConfig};
