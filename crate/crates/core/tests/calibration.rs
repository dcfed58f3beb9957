//! Re-measures the reproduction number of a calibrated transmission rate by
//! direct simulation: one index case in a fully susceptible population, full
//! daily contact networks, and secondary cases made non-infectious so only
//! first-generation infections are counted.

use pandemic_abm::disease::agents::AgentArrays;
use pandemic_abm::disease::calibrate::{calibrate_beta, with_beta};
use pandemic_abm::disease::dynamics::infect;
use pandemic_abm::disease::{infection_step, progression_step, DiseaseParams};
use pandemic_abm::networks::{
    active_household_edges, build_household_edges, sample_occupation_edges, sample_random_edges, NetworkParams,
};
use pandemic_abm::popgen::{sample_population, Demographics, Population};
use pandemic_abm::rng::{Purpose, StreamKey};
use pandemic_abm::{parse_config_with_overrides, ScenarioConfig};

const BASELINE: &str = include_str!("../../../scenarios/baseline.yaml");

fn config(n: u32) -> ScenarioConfig {
    parse_config_with_overrides(BASELINE, &[("num_agents".into(), n.to_string())]).unwrap()
}

/// Mean and standard error of first-generation infections per index case.
fn measure_r(config: &ScenarioConfig, pop: &Population, params: &DiseaseParams, trials: u64) -> (f64, f64) {
    let net = NetworkParams {
        occupation_mean_contacts: config.occupation_mean_contacts,
        random_mean_contacts: config.random_mean_contacts,
        scale_random_interact: config.scale_random_interact,
    };
    let households = build_household_edges(pop);
    let n = pop.len();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for trial in 0..trials {
        let key = StreamKey::root(0xC0FFEE).child(trial);
        let mut agents = AgentArrays::new(n);
        let mut rng = key.stream(Purpose::Seeding, 0, 0);
        let index = rng.below(n as u64) as usize;
        infect(&mut agents, pop, index, 0, params, &mut rng);
        let mut secondary = 0u64;
        let mut step = 1;
        while agents.stage[index].is_infected() {
            let eligible = agents.eligibility_mask();
            let mut edges = active_household_edges(&households, &eligible, step);
            edges.extend(sample_occupation_edges(pop, &net, &eligible, step, key));
            edges.extend(sample_random_edges(pop, &net, &eligible, step, key));
            for a in infection_step(&mut agents, pop, &edges.edges, params, step, key) {
                agents.infectiousness_scale[a as usize] = 0.0;
                secondary += 1;
            }
            progression_step(&mut agents, pop, params, step, key);
            step += 1;
        }
        let x = secondary as f64;
        sum += x;
        sum_sq += x * x;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean) * t / (t - 1.0);
    (mean, (var / t).sqrt())
}

#[test]
fn calibrated_beta_reproduces_target_r() {
    let config = config(2000);
    let target = 5.02;
    let cal = calibrate_beta(&config, target, 20_000).unwrap();
    let params = with_beta(&config.disease, cal.beta);
    let pop = sample_population(
        &Demographics::from_config(&config),
        StreamKey::root(config.seed).child(Purpose::Calibration as u64),
    )
    .unwrap();
    let (r, se) = measure_r(&config, &pop, &params, 10_000);
    assert!(
        (r / target - 1.0).abs() < 0.02,
        "beta {} gives measured R {r:.3} +/- {se:.3}, target {target}",
        cal.beta
    );
}

#[test]
fn zero_beta_has_no_secondary_cases() {
    let config = config(1000);
    let cal = calibrate_beta(&config, 0.0, 100).unwrap();
    assert_eq!(cal.beta, 0.0);
    let params = with_beta(&config.disease, cal.beta);
    let pop = sample_population(&Demographics::from_config(&config), StreamKey::root(3)).unwrap();
    assert_eq!(measure_r(&config, &pop, &params, 50).0, 0.0);
}
