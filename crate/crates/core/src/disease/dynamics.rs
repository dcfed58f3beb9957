//! Infection (Markovian, per-contact hazards) and progression (semi-Markov
//! stage machine with gamma holding times).

use std::collections::BTreeMap;

use crate::disease::agents::AgentArrays;
use crate::disease::params::DiseaseParams;
use crate::disease::stage::Stage;
use crate::error::{Error, Result};
use crate::networks::Edge;
use crate::popgen::Population;
use crate::rng::{Purpose, RngStream, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub agent: u32,
    pub from: Stage,
    pub to: Stage,
}

/// Moves `agent` into `stage` at `step`, sampling its holding time.
pub fn enter_stage(
    agents: &mut AgentArrays,
    agent: usize,
    stage: Stage,
    step: u32,
    params: &DiseaseParams,
    rng: &mut RngStream,
) {
    let d = &params.durations;
    agents.stage[agent] = stage;
    agents.stage_entry_step[agent] = step;
    agents.stage_duration[agent] = match stage {
        Stage::Asymptomatic => {
            let latent = d.latent.sample_days(rng);
            agents.infectious_from[agent] = step + latent;
            latent + d.asymptomatic_recovery.sample_days(rng)
        }
        Stage::PresymptomaticMild | Stage::PresymptomaticSevere => {
            let latent = d.latent.sample_days(rng);
            agents.infectious_from[agent] = step + latent;
            latent + d.presymptomatic.sample_days(rng)
        }
        Stage::MildSymptoms => d.mild_recovery.sample_days(rng),
        Stage::SevereSymptoms => d.symptomatic_to_hospital.sample_days(rng),
        Stage::Hospitalized => d.hospital_stay.sample_days(rng),
        Stage::CriticalIcu => d.icu_stay.sample_days(rng),
        Stage::HospitalizedRecovering => d.hospital_recovering.sample_days(rng),
        Stage::Susceptible | Stage::Death | Stage::Recovered => 0,
    };
}

/// Starts a new infection: picks the initial branch from the age table.
pub fn infect(
    agents: &mut AgentArrays,
    pop: &Population,
    agent: usize,
    step: u32,
    params: &DiseaseParams,
    rng: &mut RngStream,
) {
    let row = &params.infection_branch_probs[pop.age_group[agent].index()];
    let stage = match rng.categorical(row) {
        0 => Stage::Asymptomatic,
        1 => Stage::PresymptomaticMild,
        _ => Stage::PresymptomaticSevere,
    };
    agents.infected_step[agent] = step;
    enter_stage(agents, agent, stage, step, params, rng);
}

/// Outgoing per-contact weight of `agent` at `step`, before beta and layer
/// weighting. Zero unless the agent is past its latent period in a
/// transmitting stage.
#[inline]
pub fn infectivity(agents: &AgentArrays, params: &DiseaseParams, agent: usize, step: u32) -> f64 {
    let stage = agents.stage[agent];
    if stage.can_transmit() && step >= agents.infectious_from[agent] {
        params.infectiousness(stage) * f64::from(agents.infectiousness_scale[agent])
    } else {
        0.0
    }
}

/// Incoming per-contact weight of `agent`, zero unless susceptible.
#[inline]
pub fn susceptibility(agents: &AgentArrays, pop: &Population, params: &DiseaseParams, agent: usize) -> f64 {
    if agents.is_susceptible(agent) {
        params.rel_susceptibility[pop.age_group[agent].index()]
    } else {
        0.0
    }
}

/// Total daily hazard on every agent from `edges`:
/// `lambda_i = sum over edges (i, j) of beta * infectivity_j * susceptibility_i * w_layer`.
pub fn accumulate_hazards(
    agents: &AgentArrays,
    pop: &Population,
    edges: &[Edge],
    params: &DiseaseParams,
    step: u32,
    hazard: &mut [f64],
) {
    let n = agents.len();
    let infectivity: Vec<f64> = (0..n).map(|a| infectivity(agents, params, a, step)).collect();
    let susceptibility: Vec<f64> = (0..n).map(|a| susceptibility(agents, pop, params, a)).collect();
    for e in edges {
        let (a, b) = (e.src as usize, e.dst as usize);
        let w = params.beta * params.network_weights.get(e.layer);
        if infectivity[b] > 0.0 && susceptibility[a] > 0.0 {
            hazard[a] += w * infectivity[b] * susceptibility[a];
        }
        if infectivity[a] > 0.0 && susceptibility[b] > 0.0 {
            hazard[b] += w * infectivity[a] * susceptibility[b];
        }
    }
}

/// One day of transmission. Each susceptible agent is infected with
/// probability `1 - exp(-lambda)`; newly infected agents enter their initial
/// branch immediately. Returns them in ascending order.
pub fn infection_step(
    agents: &mut AgentArrays,
    pop: &Population,
    edges: &[Edge],
    params: &DiseaseParams,
    step: u32,
    key: StreamKey,
) -> Vec<u32> {
    let mut hazard = vec![0.0; agents.len()];
    accumulate_hazards(agents, pop, edges, params, step, &mut hazard);
    let mut infected = Vec::new();
    for (agent, &lambda) in hazard.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        let mut rng = key.stream(Purpose::Infection, step, agent as u64);
        if rng.uniform() < -(-lambda).exp_m1() {
            infected.push(agent as u32);
        }
    }
    for &agent in &infected {
        let mut rng = key.stream(Purpose::InfectionBranch, step, u64::from(agent));
        infect(agents, pop, agent as usize, step, params, &mut rng);
    }
    infected
}

fn next_stage(stage: Stage, age: usize, params: &DiseaseParams, rng: &mut RngStream) -> Stage {
    match stage {
        Stage::Asymptomatic | Stage::MildSymptoms | Stage::HospitalizedRecovering => Stage::Recovered,
        Stage::PresymptomaticMild => Stage::MildSymptoms,
        Stage::PresymptomaticSevere => Stage::SevereSymptoms,
        Stage::SevereSymptoms => {
            if rng.bernoulli(params.hospitalization_probs[age]) {
                Stage::Hospitalized
            } else {
                Stage::Recovered
            }
        }
        Stage::Hospitalized => {
            if rng.bernoulli(params.icu_probs[age]) {
                Stage::CriticalIcu
            } else {
                Stage::HospitalizedRecovering
            }
        }
        Stage::CriticalIcu => {
            if rng.bernoulli(params.death_probs[age]) {
                Stage::Death
            } else {
                Stage::HospitalizedRecovering
            }
        }
        Stage::Susceptible | Stage::Death | Stage::Recovered => stage,
    }
}

/// Advances every agent whose holding time has elapsed by one edge of the
/// stage graph. Absorbing and susceptible agents are untouched.
pub fn progression_step(
    agents: &mut AgentArrays,
    pop: &Population,
    params: &DiseaseParams,
    step: u32,
    key: StreamKey,
) -> Vec<Transition> {
    let mut transitions = Vec::new();
    for agent in 0..agents.len() {
        if !is_due(agents, agent, step) {
            continue;
        }
        let mut rng = key.stream(Purpose::Progression, step, agent as u64);
        transitions.push(advance(agents, pop, params, agent, step, &mut rng));
    }
    transitions
}

/// Infected and past the end of its current stage.
#[inline]
pub fn is_due(agents: &AgentArrays, agent: usize, step: u32) -> bool {
    agents.stage[agent].is_infected() && step >= agents.stage_entry_step[agent] + agents.stage_duration[agent]
}

/// Moves one due agent along the stage graph.
pub fn advance(
    agents: &mut AgentArrays,
    pop: &Population,
    params: &DiseaseParams,
    agent: usize,
    step: u32,
    rng: &mut RngStream,
) -> Transition {
    let from = agents.stage[agent];
    let to = next_stage(from, pop.age_group[agent].index(), params, rng);
    enter_stage(agents, agent, to, step, params, rng);
    Transition {
        agent: agent as u32,
        from,
        to,
    }
}

/// Places exactly `counts[stage]` agents in each stage, chosen uniformly at
/// random. Infected seeds start their stage on step 0.
pub fn seed_initial_infections(
    agents: &mut AgentArrays,
    counts: &BTreeMap<u8, u64>,
    params: &DiseaseParams,
    key: StreamKey,
) -> Result<()> {
    let n = agents.len();
    let total: u64 = counts.values().sum();
    if total != n as u64 {
        return Err(Error::config(
            "stage_ix_pop_dict",
            format!("counts sum to {total}, expected {n}"),
        ));
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = key.stream(Purpose::Seeding, 0, 0);
    rng.shuffle(&mut order);
    let mut cursor = 0usize;
    for (&code, &count) in counts {
        let stage = Stage::from_code(code)
            .ok_or_else(|| Error::config("stage_ix_pop_dict", format!("unknown stage code {code}")))?;
        if stage == Stage::Susceptible {
            continue;
        }
        for &agent in &order[cursor..cursor + count as usize] {
            let agent = agent as usize;
            agents.infected_step[agent] = 0;
            let mut rng = key.stream(Purpose::Seeding, 0, 1 + agent as u64);
            enter_stage(agents, agent, stage, 0, params, &mut rng);
        }
        cursor += count as usize;
    }
    Ok(())
}
