//! Two-dose vaccination with daily production, FIFO expiry and oldest-first
//! allocation.

use std::collections::VecDeque;

use crate::disease::agents::{AgentArrays, NEVER};
use crate::io::config::ScenarioConfig;
use crate::popgen::Population;
use crate::rng::{Purpose, StreamKey};

#[derive(Debug, Clone, PartialEq)]
pub struct VaccinePolicy {
    pub enabled: bool,
    pub start_date: u32,
    pub daily_prod: u64,
    /// Days a produced dose stays usable.
    pub shelf_life: u32,
    /// Days from a dose to its efficacy trial.
    pub dose_delay: u32,
    pub dose1_priority: bool,
    pub dose1_eff: f64,
    pub dose2_gap: u32,
    pub dose2_eff: f64,
    pub dose2_drop: f64,
    pub price: f64,
}

impl VaccinePolicy {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self {
            enabled: c.use_vaccination_logic,
            start_date: c.vaccine_start_date.max(0) as u32,
            daily_prod: c.vaccine_daily_production.max(0) as u64,
            shelf_life: c.vaccine_shelf_life.max(0) as u32,
            dose_delay: c.vaccine_first_dose_kick_in_days.max(0) as u32,
            dose1_priority: c.vaccine_first_dose_priority,
            dose1_eff: c.vaccine_first_dose_effectivness,
            dose2_gap: c.vaccine_second_dose_delay.max(0) as u32,
            dose2_eff: c.vaccine_second_dose_effectiveness,
            dose2_drop: c.vaccine_drop_prob_before_second_dose,
            price: c.vaccine_price,
        }
    }
}

/// Stockpile of produced doses, oldest batch first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VaccineSupply {
    batches: VecDeque<(u32, u64)>,
}

impl VaccineSupply {
    pub fn produce(&mut self, step: u32, doses: u64) {
        if doses > 0 {
            self.batches.push_back((step, doses));
        }
    }

    /// Discards batches with `step - produced >= shelf_life`; returns the
    /// number of doses discarded.
    pub fn expire(&mut self, step: u32, shelf_life: u32) -> u64 {
        let mut expired = 0;
        while let Some(&(produced, doses)) = self.batches.front() {
            if step - produced < shelf_life {
                break;
            }
            expired += doses;
            self.batches.pop_front();
        }
        expired
    }

    pub fn available(&self) -> u64 {
        self.batches.iter().map(|b| b.1).sum()
    }

    /// Takes one dose from the oldest batch.
    pub fn take(&mut self) -> bool {
        let Some(front) = self.batches.front_mut() else {
            return false;
        };
        front.1 -= 1;
        if front.1 == 0 {
            self.batches.pop_front();
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaccineState {
    /// Doses received (0, 1 or 2).
    pub doses: Vec<u8>,
    pub dose1_step: Vec<u32>,
    /// Decided at dose 1: will not come back for dose 2.
    pub dropped_out: Vec<bool>,
}

impl VaccineState {
    pub fn new(n: usize) -> Self {
        Self {
            doses: vec![0; n],
            dose1_step: vec![NEVER; n],
            dropped_out: vec![false; n],
        }
    }
}

/// Agents sorted oldest age group first, ties by index.
pub fn priority_order(pop: &Population) -> Vec<u32> {
    let mut order: Vec<u32> = (0..pop.len() as u32).collect();
    order.sort_by_key(|&a| (std::cmp::Reverse(pop.age_group[a as usize].index()), a));
    order
}

/// Alive, not in hospital, not a known positive, not quarantined.
pub fn is_eligible(agents: &AgentArrays, agent: usize) -> bool {
    let s = agents.stage[agent];
    s != crate::disease::stage::Stage::Death
        && !s.is_hospitalized()
        && !agents.testing.known_positive[agent]
        && !agents.quarantine.active[agent]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dose {
    pub agent: u32,
    pub dose: u8,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VaccinationReport {
    pub doses: Vec<Dose>,
    pub produced: u64,
    pub expired: u64,
    /// Eligible candidates in allocation order, filled when diagnostics are on.
    pub dose1_candidates: Option<Vec<u32>>,
    pub dose2_candidates: Option<Vec<u32>>,
}

/// Produces, expires and allocates today's doses. Immunization onsets are
/// returned as doses; the caller schedules their efficacy trials.
pub fn vaccination_step(
    agents: &mut AgentArrays,
    order: &[u32],
    policy: &VaccinePolicy,
    supply: &mut VaccineSupply,
    step: u32,
    key: StreamKey,
    diagnostics: bool,
) -> VaccinationReport {
    let mut report = VaccinationReport::default();
    if !policy.enabled || step < policy.start_date {
        return report;
    }
    supply.produce(step, policy.daily_prod);
    report.produced = policy.daily_prod;
    report.expired = supply.expire(step, policy.shelf_life);

    let is_dose1 = |agents: &AgentArrays, a: usize| agents.vaccine.doses[a] == 0;
    let is_dose2 = |agents: &AgentArrays, a: usize| {
        agents.vaccine.doses[a] == 1
            && !agents.vaccine.dropped_out[a]
            && step >= agents.vaccine.dose1_step[a].saturating_add(policy.dose2_gap)
    };
    let mut dose1 = Vec::new();
    let mut dose2 = Vec::new();
    let mut merged = Vec::new();
    for &agent in order {
        let a = agent as usize;
        if !is_eligible(agents, a) {
            continue;
        }
        if is_dose1(agents, a) {
            dose1.push(agent);
            merged.push(agent);
        } else if is_dose2(agents, a) {
            dose2.push(agent);
            merged.push(agent);
        }
    }
    let queue: Vec<u32> = if policy.dose1_priority {
        dose1.iter().chain(&dose2).copied().collect()
    } else {
        merged
    };
    for agent in queue {
        if !supply.take() {
            break;
        }
        let a = agent as usize;
        let v = &mut agents.vaccine;
        v.doses[a] += 1;
        if v.doses[a] == 1 {
            v.dose1_step[a] = step;
            let mut rng = key.stream(Purpose::Vaccination, step, u64::from(agent));
            v.dropped_out[a] = rng.bernoulli(policy.dose2_drop);
        }
        report.doses.push(Dose {
            agent,
            dose: v.doses[a],
        });
    }
    if diagnostics {
        report.dose1_candidates = Some(dose1);
        report.dose2_candidates = Some(dose2);
    }
    report
}

/// Efficacy trial `dose_delay` days after a dose. A second dose only counts
/// for agents the first dose did not protect. Returns whether the agent
/// became immunized now.
pub fn apply_onset(agents: &mut AgentArrays, policy: &VaccinePolicy, dose: Dose, step: u32, key: StreamKey) -> bool {
    let a = dose.agent as usize;
    if agents.immunized[a] {
        return false;
    }
    let eff = if dose.dose == 1 { policy.dose1_eff } else { policy.dose2_eff };
    let mut rng = key.stream(Purpose::Immunization, step, (u64::from(dose.agent) << 2) | u64::from(dose.dose));
    if rng.bernoulli(eff) {
        agents.immunized[a] = true;
        true
    } else {
        false
    }
}
