//! Transmission and progression parameters.
//!
//! The defaults below are declared assumptions: the duration, severity and
//! multiplier tables are not published alongside the scenario file, so they
//! are chosen from the usual COVID-19 agent-based model family and tuned so
//! that the shipped scenario reproduces the reference epidemic shape. Every
//! value can be overridden from the `disease:` block of a scenario file.

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::disease::stage::{Stage, NUM_STAGES};
use crate::error::{Error, Result};
use crate::networks::Layer;
use crate::popgen::NUM_AGE_GROUPS;
use crate::rng::RngStream;

/// Gamma-distributed holding time, parameterised by mean and standard
/// deviation in days. Samples are rounded to whole days, minimum one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationDist {
    pub mean: f64,
    pub sd: f64,
}

impl DurationDist {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }

    pub fn sample_days(&self, rng: &mut RngStream) -> u32 {
        let days = if self.sd <= 0.0 {
            self.mean
        } else {
            let shape = (self.mean / self.sd).powi(2);
            let scale = self.sd * self.sd / self.mean;
            // parameters are validated at load time
            Gamma::new(shape, scale)
                .map(|g| g.sample(rng))
                .unwrap_or(self.mean)
        };
        (days.round() as u32).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Durations {
    /// Infection to onset of infectiousness.
    pub latent: DurationDist,
    /// Infectious window before symptom onset.
    pub presymptomatic: DurationDist,
    /// Infectious period of asymptomatic cases after the latent period.
    pub asymptomatic_recovery: DurationDist,
    pub mild_recovery: DurationDist,
    /// Severe symptom onset to hospital admission (or recovery at home).
    pub symptomatic_to_hospital: DurationDist,
    pub hospital_stay: DurationDist,
    pub icu_stay: DurationDist,
    pub hospital_recovering: DurationDist,
}

impl Default for Durations {
    fn default() -> Self {
        Self {
            latent: DurationDist::new(4.6, 2.4),
            presymptomatic: DurationDist::new(1.9, 0.9),
            asymptomatic_recovery: DurationDist::new(8.0, 3.0),
            mild_recovery: DurationDist::new(8.0, 3.0),
            symptomatic_to_hospital: DurationDist::new(5.1, 2.4),
            hospital_stay: DurationDist::new(8.0, 4.0),
            icu_stay: DurationDist::new(10.0, 5.0),
            hospital_recovering: DurationDist::new(4.0, 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkWeights {
    pub household: f64,
    pub occupation: f64,
    pub random: f64,
}

impl NetworkWeights {
    #[inline]
    pub fn get(&self, layer: Layer) -> f64 {
        match layer {
            Layer::Household => self.household,
            Layer::Occupation => self.occupation,
            Layer::Random => self.random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiseaseParams {
    /// Baseline transmission hazard per contact-day.
    pub beta: f64,
    /// Per-stage multiplier, indexed by stage code.
    pub rel_infectiousness: Vec<f64>,
    /// Per-age-group multiplier.
    pub rel_susceptibility: Vec<f64>,
    pub network_weights: NetworkWeights,
    /// Per age group: probabilities of (asymptomatic, mild, severe) at infection.
    pub infection_branch_probs: Vec<[f64; 3]>,
    /// Per age group: severe case admitted to hospital.
    pub hospitalization_probs: Vec<f64>,
    /// Per age group: hospitalized case escalates to ICU.
    pub icu_probs: Vec<f64>,
    /// Per age group: ICU case dies.
    pub death_probs: Vec<f64>,
    pub durations: Durations,
}

impl Default for DiseaseParams {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            rel_infectiousness: vec![0.0, 0.5, 1.0, 1.0, 0.3, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0],
            rel_susceptibility: vec![0.04, 0.08, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            network_weights: NetworkWeights {
                household: 2.0,
                occupation: 1.0,
                random: 1.0,
            },
            infection_branch_probs: vec![
                [0.08, 0.90, 0.02],
                [0.06, 0.92, 0.02],
                [0.04, 0.92, 0.04],
                [0.03, 0.91, 0.06],
                [0.03, 0.89, 0.08],
                [0.03, 0.85, 0.12],
                [0.02, 0.80, 0.18],
                [0.02, 0.70, 0.28],
                [0.02, 0.58, 0.40],
            ],
            hospitalization_probs: vec![0.10, 0.10, 0.15, 0.20, 0.25, 0.35, 0.45, 0.60, 0.70],
            icu_probs: vec![0.05, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.35],
            death_probs: vec![0.20, 0.20, 0.25, 0.30, 0.35, 0.45, 0.55, 0.65, 0.75],
            durations: Durations::default(),
        }
    }
}

/// Transmission hazard calibrated for the shipped defaults to a one-generation
/// reproduction number of 5.02 (see `pandemic-abm calibrate`).
pub const DEFAULT_BETA: f64 = 0.4802;

fn check_prob(key: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::config(key, format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

impl DiseaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config("disease.beta", "must be finite and >= 0"));
        }
        if self.rel_infectiousness.len() != NUM_STAGES {
            return Err(Error::config(
                "disease.rel_infectiousness",
                format!("expected {NUM_STAGES} entries, one per stage"),
            ));
        }
        let tables: [(&str, &Vec<f64>); 4] = [
            ("disease.rel_susceptibility", &self.rel_susceptibility),
            ("disease.hospitalization_probs", &self.hospitalization_probs),
            ("disease.icu_probs", &self.icu_probs),
            ("disease.death_probs", &self.death_probs),
        ];
        for (key, table) in tables {
            if table.len() != NUM_AGE_GROUPS {
                return Err(Error::config(
                    key,
                    format!("expected {NUM_AGE_GROUPS} entries, one per age group"),
                ));
            }
        }
        for (key, v) in self
            .rel_infectiousness
            .iter()
            .map(|v| ("disease.rel_infectiousness", *v))
            .chain(self.rel_susceptibility.iter().map(|v| ("disease.rel_susceptibility", *v)))
            .chain([
                ("disease.network_weights.household", self.network_weights.household),
                ("disease.network_weights.occupation", self.network_weights.occupation),
                ("disease.network_weights.random", self.network_weights.random),
            ])
        {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("multiplier {v} must be finite and >= 0")));
            }
        }
        for (key, table) in [
            ("disease.hospitalization_probs", &self.hospitalization_probs),
            ("disease.icu_probs", &self.icu_probs),
            ("disease.death_probs", &self.death_probs),
        ] {
            for &p in table.iter() {
                check_prob(key, p)?;
            }
        }
        if self.infection_branch_probs.len() != NUM_AGE_GROUPS {
            return Err(Error::config(
                "disease.infection_branch_probs",
                format!("expected {NUM_AGE_GROUPS} rows, one per age group"),
            ));
        }
        for (g, row) in self.infection_branch_probs.iter().enumerate() {
            for &p in row {
                check_prob("disease.infection_branch_probs", p)?;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::config(
                    "disease.infection_branch_probs",
                    format!("row for age group {g} sums to {sum}, expected 1"),
                ));
            }
        }
        let d = &self.durations;
        for (name, dist) in [
            ("latent", d.latent),
            ("presymptomatic", d.presymptomatic),
            ("asymptomatic_recovery", d.asymptomatic_recovery),
            ("mild_recovery", d.mild_recovery),
            ("symptomatic_to_hospital", d.symptomatic_to_hospital),
            ("hospital_stay", d.hospital_stay),
            ("icu_stay", d.icu_stay),
            ("hospital_recovering", d.hospital_recovering),
        ] {
            if !(dist.mean > 0.0 && dist.mean.is_finite() && dist.sd >= 0.0 && dist.sd.is_finite()) {
                return Err(Error::config(
                    format!("disease.durations.{name}"),
                    "mean must be > 0 and sd >= 0",
                ));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn infectiousness(&self, stage: Stage) -> f64 {
        self.rel_infectiousness[stage as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamKey};

    #[test]
    fn defaults_validate() {
        DiseaseParams::default().validate().unwrap();
    }

    #[test]
    fn bad_branch_row_is_rejected() {
        let mut p = DiseaseParams::default();
        p.infection_branch_probs[3] = [0.5, 0.5, 0.5];
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("age group 3"), "{err}");
    }

    #[test]
    fn durations_are_whole_days_at_least_one() {
        let dist = DurationDist::new(1.9, 0.9);
        let mut rng = StreamKey::root(5).stream(Purpose::Progression, 0, 0);
        let n = 50_000;
        let mut sum = 0u64;
        for _ in 0..n {
            let d = dist.sample_days(&mut rng);
            assert!(d >= 1);
            sum += u64::from(d);
        }
        // rounding and the floor at one shift the mean only slightly
        let mean = sum as f64 / n as f64;
        assert!((mean - 1.95).abs() < 0.15, "{mean}");
    }

    #[test]
    fn zero_sd_is_deterministic() {
        let mut rng = StreamKey::root(5).stream(Purpose::Progression, 0, 0);
        assert_eq!(DurationDist::new(14.0, 0.0).sample_days(&mut rng), 14);
    }
}
