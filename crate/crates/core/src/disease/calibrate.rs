//! Calibration of the per-contact transmission rate to a target
//! one-generation reproduction number.
//!
//! An index case is infected in a fully susceptible population and followed
//! until it recovers or dies. Each day it is infectious and not isolated, its
//! household, occupation and random contacts are sampled from the same layer
//! models the engine uses, and every contact `j` accumulates an exposure
//! weight `W_j` (infectiousness times layer weight times susceptibility,
//! summed over days). Given the exposures, the expected number of secondary
//! infections at rate `beta` is `sum_j (1 - exp(-beta * W_j))`. Averaging over
//! many index cases gives a smooth increasing function of `beta`, solved for
//! the target by bracketing and bisection. The exposures are drawn once, so
//! the solution is deterministic for a given seed.

use crate::disease::agents::AgentArrays;
use crate::disease::dynamics::{advance, infect, infectivity, is_due, susceptibility};
use crate::disease::params::DiseaseParams;
use crate::error::{Error, Result};
use crate::io::config::ScenarioConfig;
use crate::networks::{sample_ego_neighbours, Layer};
use crate::popgen::{sample_population, Demographics, Population};
use crate::rng::{Purpose, StreamKey};

pub const DEFAULT_TRIALS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub beta: f64,
    pub target_r: f64,
    /// Expected secondary infections at `beta` over the sampled index cases.
    pub achieved_r: f64,
    pub trials: usize,
}

/// Exposure weights per contact (at unit beta) for a set of index cases.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposures {
    trials: Vec<Vec<f64>>,
}

impl Exposures {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Mean expected secondary infections per index case at `beta`.
    pub fn expected_secondary(&self, beta: f64) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .trials
            .iter()
            .map(|w| w.iter().map(|&x| -(-beta * x).exp_m1()).sum::<f64>())
            .sum();
        total / self.trials.len() as f64
    }

    /// Mean number of distinct contacts with positive exposure; the limit of
    /// `expected_secondary` as beta grows.
    pub fn mean_exposed_contacts(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        self.trials.iter().map(|w| w.len() as f64).sum::<f64>() / self.trials.len() as f64
    }
}

/// Follows `trials` index cases through their infection in `pop` and records
/// each one's per-contact exposure weights.
pub fn sample_exposures(config: &ScenarioConfig, pop: &Population, trials: usize, key: StreamKey) -> Exposures {
    let params = &config.disease;
    let n = pop.len();
    let everyone: Vec<u32> = (0..n as u32).collect();
    let occupation_mean = config.occupation_mean_contacts;
    let random_mean = config.random_mean_contacts * config.scale_random_interact;
    let mut agents = AgentArrays::new(n);
    let mut weight = vec![0.0; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut contacts: Vec<u32> = Vec::new();
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = key.stream(Purpose::Calibration, 0, t as u64);
        let index = rng.below(n as u64) as usize;
        infect(&mut agents, pop, index, 0, params, &mut rng);
        let mut day = 1;
        while agents.stage[index].is_infected() {
            let inf = infectivity(&agents, params, index, day);
            if inf > 0.0 && !agents.stage[index].is_isolated() {
                let hh = pop.household(pop.household_id[index] as usize);
                let layers = [
                    (Layer::Household, None),
                    (Layer::Occupation, Some((pop.occupation_group(pop.occupation[index] as usize), occupation_mean))),
                    (Layer::Random, Some((&everyone[..], random_mean))),
                ];
                for (layer, ego) in layers {
                    contacts.clear();
                    match ego {
                        None => contacts.extend(hh.iter().copied().filter(|&a| a as usize != index)),
                        Some((group, mean)) => sample_ego_neighbours(group, mean, index as u32, &mut rng, &mut contacts),
                    }
                    let w = inf * params.network_weights.get(layer);
                    for &j in &contacts {
                        let sus = susceptibility(&agents, pop, params, j as usize);
                        if sus > 0.0 {
                            if weight[j as usize] == 0.0 {
                                touched.push(j);
                            }
                            weight[j as usize] += w * sus;
                        }
                    }
                }
            }
            if is_due(&agents, index, day) {
                advance(&mut agents, pop, params, index, day, &mut rng);
            }
            day += 1;
        }
        out.push(touched.iter().map(|&j| weight[j as usize]).collect());
        for &j in &touched {
            weight[j as usize] = 0.0;
        }
        touched.clear();
        reset_agent(&mut agents, index);
    }
    Exposures { trials: out }
}

fn reset_agent(agents: &mut AgentArrays, a: usize) {
    let fresh = AgentArrays::new(1);
    agents.stage[a] = fresh.stage[0];
    agents.stage_entry_step[a] = 0;
    agents.stage_duration[a] = 0;
    agents.infectious_from[a] = 0;
    agents.infected_step[a] = fresh.infected_step[0];
}

/// Solves `exposures.expected_secondary(beta) = target` for beta.
pub fn solve_beta(exposures: &Exposures, target: f64) -> Result<f64> {
    if !(target >= 0.0) {
        return Err(Error::Calibration(format!("target R must be >= 0, got {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let sup = exposures.mean_exposed_contacts();
    let mut lo = 0.0;
    let mut hi = 1e-3;
    let mut r_hi = exposures.expected_secondary(hi);
    let mut doublings = 0;
    while r_hi < target {
        lo = hi;
        hi *= 2.0;
        r_hi = exposures.expected_secondary(hi);
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Calibration(format!(
                "search bounds do not bracket target R {target}: R({hi:.3e}) = {r_hi:.4}, \
                 mean exposed contacts per index case = {sup:.4}, index cases = {}",
                exposures.len()
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if exposures.expected_secondary(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Calibrates beta for `config` (interventions are irrelevant here: the
/// index case and its contacts are never tested, traced or vaccinated).
pub fn calibrate_beta(config: &ScenarioConfig, target_r: f64, trials: usize) -> Result<Calibration> {
    if trials == 0 {
        return Err(Error::Calibration("need at least one index case".into()));
    }
    let key = StreamKey::root(config.seed).child(Purpose::Calibration as u64);
    let pop = sample_population(&Demographics::from_config(config), key)?;
    let exposures = sample_exposures(config, &pop, trials, key);
    let beta = solve_beta(&exposures, target_r)?;
    Ok(Calibration {
        beta,
        target_r,
        achieved_r: exposures.expected_secondary(beta),
        trials,
    })
}

/// `params` with `beta` replaced.
pub fn with_beta(params: &DiseaseParams, beta: f64) -> DiseaseParams {
    DiseaseParams {
        beta,
        ..params.clone()
    }
}
