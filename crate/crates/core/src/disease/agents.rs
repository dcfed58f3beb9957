use crate::disease::stage::{Stage, NUM_STAGES};
use crate::interventions::quarantine::QuarantineState;
use crate::interventions::testing::TestingState;
use crate::interventions::vaccination::VaccineState;

/// Sentinel for "never happened" in step-valued columns.
pub const NEVER: u32 = u32::MAX;

/// Per-agent state, one column per field.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentArrays {
    pub stage: Vec<Stage>,
    pub stage_entry_step: Vec<u32>,
    /// Sampled holding time of the current stage, in days.
    pub stage_duration: Vec<u32>,
    /// First step on which the current infection can be transmitted.
    pub infectious_from: Vec<u32>,
    pub infected_step: Vec<u32>,
    /// Multiplier on the agent's outgoing hazard; zeroed after a completed quarantine.
    pub infectiousness_scale: Vec<f32>,
    /// Vaccine-conferred immunity. Carried beside the stage, gates susceptibility.
    pub immunized: Vec<bool>,
    pub quarantine: QuarantineState,
    pub vaccine: VaccineState,
    pub testing: TestingState,
}

impl AgentArrays {
    pub fn new(n: usize) -> Self {
        Self {
            stage: vec![Stage::Susceptible; n],
            stage_entry_step: vec![0; n],
            stage_duration: vec![0; n],
            infectious_from: vec![0; n],
            infected_step: vec![NEVER; n],
            infectiousness_scale: vec![1.0; n],
            immunized: vec![false; n],
            quarantine: QuarantineState::new(n),
            vaccine: VaccineState::new(n),
            testing: TestingState::new(n),
        }
    }

    pub fn len(&self) -> usize {
        self.stage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stage.is_empty()
    }

    pub fn stage_counts(&self) -> [u64; NUM_STAGES] {
        let mut counts = [0u64; NUM_STAGES];
        for s in &self.stage {
            counts[*s as usize] += 1;
        }
        counts
    }

    /// Susceptible and not protected by a vaccine.
    #[inline]
    pub fn is_susceptible(&self, agent: usize) -> bool {
        self.stage[agent] == Stage::Susceptible && !self.immunized[agent]
    }

    /// Whether the agent may appear in any interaction layer this step.
    #[inline]
    pub fn is_eligible_for_contact(&self, agent: usize) -> bool {
        !self.stage[agent].is_isolated() && !self.quarantine.active[agent]
    }

    pub fn eligibility_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|a| self.is_eligible_for_contact(a)).collect()
    }
}
