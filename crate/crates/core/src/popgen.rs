//! Synthetic population: ages, households, occupations, app ownership.

use crate::error::{Error, Result};
use crate::io::config::ScenarioConfig;
use crate::rng::{Purpose, StreamKey};

pub const NUM_AGE_GROUPS: usize = 9;
pub const AGE_GROUP_NAMES: [&str; NUM_AGE_GROUPS] = [
    "AGE_0_9", "AGE_10_19", "AGE_20_29", "AGE_30_39", "AGE_40_49", "AGE_50_59", "AGE_60_69",
    "AGE_70_79", "AGE_80",
];

/// Occupations drawn from the working-age distribution (indices 0..=18).
pub const NUM_WORK_OCCUPATIONS: usize = 19;
pub const ELDERLY_OCCUPATION: u8 = 19;
pub const CHILD_OCCUPATION: u8 = 20;
pub const NUM_OCCUPATIONS: usize = 21;

/// Decade age band, 0 (0-9) through 8 (80+).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgeGroup(u8);

impl AgeGroup {
    pub fn new(index: u8) -> Option<Self> {
        ((index as usize) < NUM_AGE_GROUPS).then_some(Self(index))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Inputs to population sampling, lifted out of a scenario.
#[derive(Debug, Clone)]
pub struct Demographics {
    pub num_agents: u32,
    pub age_probs: Vec<f64>,
    pub household_sizes: Vec<u32>,
    pub household_probs: Vec<f64>,
    pub occupation_probs: Vec<f64>,
    pub child_upper_index: u8,
    pub adult_upper_index: u8,
}

impl Demographics {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self {
            num_agents: c.num_agents,
            age_probs: c.age_ix_prob_list.clone(),
            household_sizes: c.households_sizes_list.clone(),
            household_probs: c.households_sizes_prob_list.clone(),
            occupation_probs: c.occupations_sizes_prob_list.clone(),
            child_upper_index: c.child_upper_index,
            adult_upper_index: c.adult_upper_index,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_agents == 0 {
            return Err(Error::config("num_agents", "must be >= 1"));
        }
        for (key, probs, len) in [
            ("age_ix_prob_list", &self.age_probs, NUM_AGE_GROUPS),
            ("households_sizes_prob_list", &self.household_probs, self.household_sizes.len()),
            ("occupations_sizes_prob_list", &self.occupation_probs, NUM_WORK_OCCUPATIONS),
        ] {
            let sum: f64 = probs.iter().sum();
            if probs.len() != len || (sum - 1.0).abs() > 1e-6 || probs.iter().any(|p| *p < 0.0) {
                return Err(Error::config(
                    key,
                    format!("expected {len} non-negative probabilities summing to 1, got sum {sum}"),
                ));
            }
        }
        if self.household_sizes.iter().any(|&s| s == 0) {
            return Err(Error::config("households_sizes_list", "sizes must be >= 1"));
        }
        Ok(())
    }

    pub fn occupation_for_age(&self, age: AgeGroup, draw: impl FnOnce() -> u8) -> u8 {
        if age.0 <= self.child_upper_index {
            CHILD_OCCUPATION
        } else if age.0 > self.adult_upper_index {
            ELDERLY_OCCUPATION
        } else {
            draw()
        }
    }
}

/// Column-oriented synthetic population. Immutable once built, apart from
/// app ownership which is assigned in a second pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub age_group: Vec<AgeGroup>,
    /// Dense household id per agent.
    pub household_id: Vec<u32>,
    pub occupation: Vec<u8>,
    pub has_app: Vec<bool>,
    /// Members of household `h` are `household_members[household_offsets[h]..household_offsets[h + 1]]`.
    household_members: Vec<u32>,
    household_offsets: Vec<u32>,
    occupation_members: Vec<Vec<u32>>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.age_group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.age_group.is_empty()
    }

    pub fn num_households(&self) -> usize {
        self.household_offsets.len() - 1
    }

    pub fn household(&self, h: usize) -> &[u32] {
        let lo = self.household_offsets[h] as usize;
        let hi = self.household_offsets[h + 1] as usize;
        &self.household_members[lo..hi]
    }

    pub fn households(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.num_households()).map(move |h| self.household(h))
    }

    /// Agents of occupation `occ`, ascending by index.
    pub fn occupation_group(&self, occ: usize) -> &[u32] {
        &self.occupation_members[occ]
    }

    pub fn age_counts(&self) -> [u64; NUM_AGE_GROUPS] {
        let mut counts = [0u64; NUM_AGE_GROUPS];
        for a in &self.age_group {
            counts[a.index()] += 1;
        }
        counts
    }

    /// Builds the derived indices from per-agent columns. Households must be
    /// dense ids `0..H`.
    pub fn from_columns(
        age_group: Vec<AgeGroup>,
        household_id: Vec<u32>,
        occupation: Vec<u8>,
    ) -> Self {
        let n = age_group.len();
        assert_eq!(household_id.len(), n);
        assert_eq!(occupation.len(), n);
        let num_households = household_id.iter().map(|&h| h as usize + 1).max().unwrap_or(0);
        let mut offsets = vec![0u32; num_households + 1];
        for &h in &household_id {
            offsets[h as usize + 1] += 1;
        }
        for h in 0..num_households {
            offsets[h + 1] += offsets[h];
        }
        let mut cursor = offsets.clone();
        let mut members = vec![0u32; n];
        for (agent, &h) in household_id.iter().enumerate() {
            members[cursor[h as usize] as usize] = agent as u32;
            cursor[h as usize] += 1;
        }
        let mut occupation_members = vec![Vec::new(); NUM_OCCUPATIONS];
        for (agent, &occ) in occupation.iter().enumerate() {
            occupation_members[occ as usize].push(agent as u32);
        }
        Self {
            age_group,
            household_id,
            occupation,
            has_app: vec![false; n],
            household_members: members,
            household_offsets: offsets,
            occupation_members,
        }
    }
}

/// Samples ages, households and occupations.
///
/// Ages are i.i.d. from the age distribution. Households are filled by
/// drawing a size and taking that many agents uniformly from the pool of
/// agents not yet housed; the last household is truncated so the population
/// is exactly `num_agents`.
pub fn sample_population(demo: &Demographics, key: StreamKey) -> Result<Population> {
    demo.validate()?;
    let n = demo.num_agents as usize;

    let mut rng = key.stream(Purpose::Ages, 0, 0);
    let age_group: Vec<AgeGroup> = (0..n)
        .map(|_| AgeGroup(rng.categorical(&demo.age_probs) as u8))
        .collect();

    let mut rng = key.stream(Purpose::Households, 0, 0);
    let mut pool: Vec<u32> = (0..n as u32).collect();
    rng.shuffle(&mut pool);
    let mut household_id = vec![0u32; n];
    let mut next = 0usize;
    let mut h = 0u32;
    while next < n {
        let size = demo.household_sizes[rng.categorical(&demo.household_probs)] as usize;
        let end = (next + size).min(n);
        for &agent in &pool[next..end] {
            household_id[agent as usize] = h;
        }
        next = end;
        h += 1;
    }

    let mut rng = key.stream(Purpose::Occupations, 0, 0);
    let occupation: Vec<u8> = age_group
        .iter()
        .map(|&age| {
            demo.occupation_for_age(age, || rng.categorical(&demo.occupation_probs) as u8)
        })
        .collect();

    Ok(Population::from_columns(age_group, household_id, occupation))
}

/// How app ownership is assigned at the start of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct AppOwnership {
    /// Target population-level adoption rate.
    pub rate: f64,
    /// Relative per-age ownership table, used when set.
    pub age_table: Option<[f64; NUM_AGE_GROUPS]>,
}

impl AppOwnership {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        let age_table = c.use_app_age_dist.then(|| {
            let mut t = [0.0; NUM_AGE_GROUPS];
            for (g, name) in AGE_GROUP_NAMES.iter().enumerate() {
                t[g] = c.app_user_agewise_probs_dict.get(*name).copied().unwrap_or(0.0);
            }
            t
        });
        Self {
            rate: c.app_adoption_rate,
            age_table,
        }
    }

    /// Per-group ownership probabilities. In age-stratified mode the table is
    /// rescaled by one common factor so the expected population rate equals
    /// `rate` under the age distribution `age_probs`.
    pub fn group_probabilities(&self, age_probs: &[f64]) -> Result<[f64; NUM_AGE_GROUPS]> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::config("app_adoption_rate", "must lie in [0, 1]"));
        }
        let Some(table) = self.age_table else {
            return Ok([self.rate; NUM_AGE_GROUPS]);
        };
        let expected: f64 = table.iter().zip(age_probs).map(|(p, f)| p * f).sum();
        if expected <= 0.0 {
            if self.rate == 0.0 {
                return Ok([0.0; NUM_AGE_GROUPS]);
            }
            return Err(Error::config(
                "app_user_agewise_probs_dict",
                "all-zero table cannot be rescaled to a positive adoption rate",
            ));
        }
        let scale = self.rate / expected;
        let mut out = [0.0; NUM_AGE_GROUPS];
        for (g, p) in table.iter().enumerate() {
            let q = p * scale;
            if q > 1.0 + 1e-12 {
                return Err(Error::config(
                    "app_user_agewise_probs_dict",
                    format!(
                        "{} rescaled to {q:.4} > 1 for target adoption {}",
                        AGE_GROUP_NAMES[g], self.rate
                    ),
                ));
            }
            out[g] = q.min(1.0);
        }
        Ok(out)
    }
}

/// Independent per-agent Bernoulli ownership draws.
pub fn assign_app_ownership(
    pop: &mut Population,
    policy: &AppOwnership,
    age_probs: &[f64],
    key: StreamKey,
) -> Result<()> {
    let probs = policy.group_probabilities(age_probs)?;
    for (agent, (owns, age)) in pop.has_app.iter_mut().zip(&pop.age_group).enumerate() {
        let mut rng = key.stream(Purpose::AppOwnership, 0, agent as u64);
        *owns = rng.bernoulli(probs[age.index()]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::{parse_config, tests::BASELINE};

    fn baseline_demo(n: u32) -> Demographics {
        let mut d = Demographics::from_config(&parse_config(BASELINE).unwrap());
        d.num_agents = n;
        d
    }

    #[test]
    fn single_agent_single_household() {
        let pop = sample_population(&baseline_demo(1), StreamKey::root(1)).unwrap();
        assert_eq!(pop.len(), 1);
        assert_eq!(pop.num_households(), 1);
        assert_eq!(pop.household(0), &[0]);
    }

    #[test]
    fn zero_agents_is_a_config_error() {
        assert!(sample_population(&baseline_demo(0), StreamKey::root(1)).is_err());
    }

    #[test]
    fn bad_distribution_is_a_config_error() {
        let mut d = baseline_demo(10);
        d.age_probs[0] += 0.01;
        let err = sample_population(&d, StreamKey::root(1)).unwrap_err().to_string();
        assert!(err.contains("age_ix_prob_list"), "{err}");
    }

    #[test]
    fn households_partition_agents_and_occupations_follow_age() {
        let demo = baseline_demo(20_000);
        let pop = sample_population(&demo, StreamKey::root(3)).unwrap();
        let total: usize = pop.households().map(|h| h.len()).sum();
        assert_eq!(total, 20_000);
        for (h, members) in pop.households().enumerate() {
            assert!((1..=6).contains(&members.len()));
            for &a in members {
                assert_eq!(pop.household_id[a as usize] as usize, h);
            }
        }
        for (a, age) in pop.age_group.iter().enumerate() {
            let occ = pop.occupation[a];
            match age.0 {
                0..=1 => assert_eq!(occ, CHILD_OCCUPATION),
                7..=8 => assert_eq!(occ, ELDERLY_OCCUPATION),
                _ => assert!((occ as usize) < NUM_WORK_OCCUPATIONS),
            }
        }
    }

    #[test]
    fn same_seed_same_population() {
        let demo = baseline_demo(5000);
        let a = sample_population(&demo, StreamKey::root(11)).unwrap();
        let b = sample_population(&demo, StreamKey::root(11)).unwrap();
        assert_eq!(a, b);
        let c = sample_population(&demo, StreamKey::root(12)).unwrap();
        assert_ne!(a.age_group, c.age_group);
    }

    #[test]
    fn zero_rate_means_no_owners() {
        let mut pop = sample_population(&baseline_demo(1000), StreamKey::root(1)).unwrap();
        let policy = AppOwnership { rate: 0.0, age_table: None };
        assign_app_ownership(&mut pop, &policy, &[1.0 / 9.0; 9], StreamKey::root(2)).unwrap();
        assert!(pop.has_app.iter().all(|o| !o));
    }

    #[test]
    fn rescale_overflow_reports_group() {
        let policy = AppOwnership {
            rate: 0.95,
            age_table: Some([0.09, 0.8, 0.97, 0.96, 0.94, 0.86, 0.7, 0.48, 0.32]),
        };
        let c = parse_config(BASELINE).unwrap();
        let err = policy.group_probabilities(&c.age_ix_prob_list).unwrap_err().to_string();
        assert!(err.contains("AGE_10_19"), "{err}");
    }
}
