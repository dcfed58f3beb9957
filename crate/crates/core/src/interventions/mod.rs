//! Testing, self-quarantine, vaccination and contact tracing.

pub mod quarantine;
pub mod testing;
pub mod tracing;
pub mod vaccination;

use rand_distr::{Distribution, StandardNormal};

use crate::rng::{Purpose, RngStream, StreamKey};

/// Per-agent compliance. Every agent carries one persistent standard-normal
/// offset `z`; for a requested action with nominal probability `p` the agent's
/// level is `clip(p + sigma * z, 0, 1)`. With `sigma = 0` this is exactly
/// Bernoulli(p).
#[derive(Debug, Clone, Copy)]
pub struct Compliance {
    sigma: f64,
    key: StreamKey,
}

impl Compliance {
    pub fn new(sigma: f64, key: StreamKey) -> Self {
        Self { sigma, key }
    }

    pub fn level(&self, agent: u32, p: f64) -> f64 {
        if self.sigma == 0.0 {
            return p.clamp(0.0, 1.0);
        }
        let mut rng = self.key.stream(Purpose::Compliance, 0, u64::from(agent));
        let z: f64 = StandardNormal.sample(&mut rng);
        (p + self.sigma * z).clamp(0.0, 1.0)
    }

    pub fn complies(&self, agent: u32, p: f64, rng: &mut RngStream) -> bool {
        rng.bernoulli(self.level(agent, p))
    }
}
