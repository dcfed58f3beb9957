//! Self-quarantine: entry on a trigger, daily early exit, completion.
//!
//! An agent entering on step `e` drops out of every layer from step `e + 1`.
//! Exit checks run on steps `e + 1 ..= e + days - 1`; surviving all of them the
//! agent completes at the end of step `e + days`.

use crate::disease::agents::{AgentArrays, NEVER};
use crate::interventions::Compliance;
use crate::io::config::ScenarioConfig;
use crate::rng::{Purpose, StreamKey};

#[derive(Debug, Clone, PartialEq)]
pub struct QuarantinePolicy {
    pub enabled: bool,
    /// Entry probability after one's own positive result.
    pub enter_prob: f64,
    pub break_prob: f64,
    pub days: u32,
}

impl QuarantinePolicy {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self {
            enabled: c.use_quarantine_logic,
            enter_prob: c.en_quarantine_enter_prob,
            break_prob: c.quarantine_break_prob,
            days: c.quarantine_days.max(0) as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarantineState {
    pub active: Vec<bool>,
    /// Step of the current (or last) entry, or `NEVER`.
    pub entered: Vec<u32>,
}

impl QuarantineState {
    pub fn new(n: usize) -> Self {
        Self {
            active: vec![false; n],
            entered: vec![NEVER; n],
        }
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|&&q| q).count()
    }
}

/// Puts each listed agent into quarantine with probability `p` (subject to
/// compliance). Agents already quarantined or dead are skipped. Returns the
/// agents that entered.
pub fn enter_quarantine(
    agents: &mut AgentArrays,
    candidates: &[(u32, f64)],
    compliance: &Compliance,
    step: u32,
    key: StreamKey,
) -> Vec<u32> {
    let mut entered = Vec::new();
    for &(agent, p) in candidates {
        let a = agent as usize;
        if agents.quarantine.active[a] || agents.stage[a] == crate::disease::stage::Stage::Death {
            continue;
        }
        let mut rng = key.stream(Purpose::QuarantineEnter, step, u64::from(agent));
        if compliance.complies(agent, p, &mut rng) {
            agents.quarantine.active[a] = true;
            agents.quarantine.entered[a] = step;
            entered.push(agent);
        }
    }
    entered
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuarantineUpdate {
    pub broke: Vec<u32>,
    pub completed: Vec<u32>,
}

/// End-of-day bookkeeping for every quarantined agent. On completion a
/// still-infected agent's infectiousness is reset to zero.
pub fn quarantine_daily(agents: &mut AgentArrays, policy: &QuarantinePolicy, step: u32, key: StreamKey) -> QuarantineUpdate {
    let mut update = QuarantineUpdate::default();
    for a in 0..agents.len() {
        if !agents.quarantine.active[a] {
            continue;
        }
        let entered = agents.quarantine.entered[a];
        if step - entered >= policy.days {
            agents.quarantine.active[a] = false;
            if agents.stage[a].is_infected() {
                agents.infectiousness_scale[a] = 0.0;
            }
            update.completed.push(a as u32);
        } else if step > entered {
            let mut rng = key.stream(Purpose::QuarantineBreak, step, a as u64);
            if rng.bernoulli(policy.break_prob) {
                agents.quarantine.active[a] = false;
                update.broke.push(a as u32);
            }
        }
    }
    update
}
