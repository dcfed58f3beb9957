//! Randomized invariants over configurations and whole runs.

use proptest::prelude::*;

use pandemic_abm::engine::{run, Series, World, WorldOptions};
use pandemic_abm::scenario::SweepSpec;
use pandemic_abm::{parse_config, parse_config_with_overrides, ScenarioConfig};

const BASELINE: &str = include_str!("../../../scenarios/baseline.yaml");

fn small(n: u32, seed: u64, toggles: [bool; 5]) -> ScenarioConfig {
    let [testing, quarantine, dct, mct, vaccination] = toggles;
    let ov: Vec<(String, String)> = [
        ("num_agents", n.to_string()),
        ("num_steps", "60".to_string()),
        ("seed", seed.to_string()),
        ("use_rtpcr_test_logic", testing.to_string()),
        ("use_quarantine_logic", quarantine.to_string()),
        ("use_den_logic", dct.to_string()),
        ("use_mct_logic", mct.to_string()),
        ("use_hybrid_logic", (dct && mct).to_string()),
        ("use_vaccination_logic", vaccination.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    parse_config_with_overrides(BASELINE, &ov).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn config_round_trips(days in 1i64..40, rate in 0.0f64..=1.0, seed in any::<u32>(), sigma in 0.0f64..0.5) {
        let ov = vec![
            ("quarantine_days".to_string(), days.to_string()),
            ("app_adoption_rate".to_string(), rate.to_string()),
            ("seed".to_string(), seed.to_string()),
            ("compliance_sigma".to_string(), sigma.to_string()),
        ];
        let c = parse_config_with_overrides(BASELINE, &ov).unwrap();
        let again = parse_config(&c.to_yaml()).unwrap();
        prop_assert_eq!(c.config_hash(), again.config_hash());
        prop_assert_eq!(c, again);
    }

    #[test]
    fn sweep_ranges_hit_both_ends(lo in -10.0f64..10.0, width in 0.0f64..10.0, steps in 2usize..12) {
        let hi = lo + width;
        let values = SweepSpec::parse_values(&format!("{lo}:{hi}:{steps}")).unwrap();
        prop_assert_eq!(values.len(), steps);
        let first: f64 = values[0].parse().unwrap();
        let last: f64 = values[steps - 1].parse().unwrap();
        prop_assert!((first - lo).abs() < 1e-9);
        prop_assert!((last - hi).abs() < 1e-9 * hi.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_conserve_agents_and_isolate_quarantined(
        n in 200u32..1500,
        seed in any::<u64>(),
        toggles in any::<[bool; 5]>(),
    ) {
        let c = small(n, seed, toggles);
        let mut world = World::new(&c, 0, WorldOptions::default()).unwrap();
        for _ in 0..c.num_steps {
            let isolated: Vec<bool> = (0..world.agents.len())
                .map(|a| world.agents.quarantine.active[a] || world.agents.stage[a].is_isolated())
                .collect();
            world.step();
            prop_assert_eq!(world.agents.stage_counts().iter().sum::<u64>(), u64::from(n));
            for e in &world.last_edges.edges {
                prop_assert!(!isolated[e.src as usize] && !isolated[e.dst as usize]);
                prop_assert!(e.src != e.dst);
            }
        }
        let r = world.result();
        for s in Series::ALL.into_iter().filter(|s| s.is_cumulative()) {
            prop_assert!(r.series(s).windows(2).all(|w| w[1] >= w[0]), "{} decreases", s.name());
        }
        let infected: f64 = r.series(Series::NewInfections).iter().sum();
        prop_assert_eq!(infected, r.final_value(Series::CumulativeInfections));
        prop_assert_eq!(
            r.total_cost,
            c.test_cost * r.tests_total as f64 + c.vaccine_price * r.doses_total as f64
        );
        prop_assert_eq!(r.len(), c.num_steps as usize);
    }

    #[test]
    fn runs_are_reproducible(seed in any::<u64>(), run_index in 0u32..5, toggles in any::<[bool; 5]>()) {
        let c = small(400, seed, toggles);
        prop_assert_eq!(run(&c, run_index).unwrap(), run(&c, run_index).unwrap());
    }
}
