//! Scenario file schema.
//!
//! Key names follow the published scenario file exactly (including its
//! spelling, e.g. `genrerated_params_file_name` and
//! `vaccine_first_dose_effectivness`). Unknown keys are rejected. A handful of
//! keys that the published file does not carry are optional and documented on
//! their fields; everything else is required.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value};
use sha2::{Digest, Sha256};

use crate::disease::params::DiseaseParams;
use crate::disease::stage::{Stage, NUM_STAGES};
use crate::error::{Error, Result};
use crate::popgen::{AGE_GROUP_NAMES, CHILD_OCCUPATION, ELDERLY_OCCUPATION, NUM_AGE_GROUPS, NUM_WORK_OCCUPATIONS};

fn default_scale_random_interact() -> f64 {
    1.0
}
fn default_occupation_mean_contacts() -> f64 {
    1.0
}
fn default_random_mean_contacts() -> f64 {
    1.0
}
fn default_hospital_bed_capacity() -> u32 {
    55
}
fn default_test_cost() -> f64 {
    5.0
}
fn default_vaccine_price() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    // -- demographics
    #[serde(rename = "ADULT_Upper_Index")]
    pub adult_upper_index: u8,
    #[serde(rename = "CHILD_Upper_Index")]
    pub child_upper_index: u8,
    /// Target one-generation reproduction number used by calibration.
    #[serde(rename = "R")]
    pub r: f64,
    pub age_groups_to_ix_dict: BTreeMap<String, u8>,
    /// Census counts per age group; cross-checked against `age_ix_prob_list`.
    pub age_ix_pop_dict: BTreeMap<u8, u64>,
    pub age_ix_prob_list: Vec<f64>,
    pub app_user_agewise_probs_dict: BTreeMap<String, f64>,
    /// Raises the default log level to debug.
    pub debug: bool,
    /// Name of the resolved-parameter file written next to run outputs.
    pub genrerated_params_file_name: String,
    pub households_sizes_list: Vec<u32>,
    pub households_sizes_prob_list: Vec<f64>,
    pub num_agents: u32,
    pub num_runs: u32,
    pub num_stages: u32,
    pub num_steps: u32,
    pub occupation_ix_to_occupations_dict: BTreeMap<String, u8>,
    pub occupations_sizes_prob_list: Vec<f64>,
    #[serde(default = "default_scale_random_interact")]
    pub scale_random_interact: f64,
    pub seed: u64,
    pub stage_ix_pop_dict: BTreeMap<u8, u64>,
    pub stage_ix_to_stages_dict: BTreeMap<u8, String>,
    /// Provenance tag of the file; carried through, not interpreted.
    #[serde(rename = "type")]
    pub kind: String,
    /// Accepted for compatibility and ignored: the simulator runs on the CPU.
    pub use_gpu: bool,

    // -- point-of-care test
    pub poc_test_on_symptoms: bool,
    pub poc_test_start_date: i64,
    pub poc_test_true_positive: f64,
    pub poc_test_false_positive: f64,

    // -- RT-PCR test
    pub rtpcr_test_start_date: i64,
    pub test_false_positive: f64,
    pub test_results_dates: Vec<i64>,
    pub test_results_dates_probs: Vec<f64>,
    pub test_true_positive: f64,
    /// Days a result stays valid; -1 means indefinitely.
    pub test_validity_days: i64,

    // -- digital contact tracing
    pub app_adoption_rate: f64,
    pub use_app_age_dist: bool,
    pub max_den_contact_days: i64,
    pub poc_den_inform_prob: f64,
    pub dct_poc_comply_prob: f64,
    pub dct_rtpcr_comply_prob: f64,

    // -- manual contact tracing
    pub poc_mct_inform_prob: f64,
    pub max_mct_contact_days: i64,
    pub mct_recall_prob: f64,
    pub mct_reachable_prob: f64,
    pub mct_poc_comply_prob: f64,
    pub mct_rtpcr_comply_prob: f64,

    // -- self-quarantine
    pub en_quarantine_enter_prob: f64,
    pub mct_quarantine_enter_prob: f64,
    pub quarantine_break_prob: f64,
    pub quarantine_days: i64,

    // -- vaccination
    pub vaccine_daily_production: i64,
    pub vaccine_drop_prob_before_second_dose: f64,
    pub vaccine_first_dose_effectivness: f64,
    pub vaccine_first_dose_kick_in_days: i64,
    pub vaccine_first_dose_priority: bool,
    pub vaccine_second_dose_delay: i64,
    pub vaccine_second_dose_effectiveness: f64,
    pub vaccine_shelf_life: i64,
    pub vaccine_start_date: i64,

    // -- toggles
    pub use_den_logic: bool,
    /// Location-based tracing is not modelled; must stay false.
    pub use_gps_logic: bool,
    pub use_mct_logic: bool,
    pub use_hybrid_logic: bool,
    pub use_poc_test_on_ct_logic: bool,
    pub use_rtpcr_test_on_ct_logic: bool,
    pub use_rtpcr_test_logic: bool,
    pub use_quarantine_logic: bool,
    pub use_vaccination_logic: bool,
    pub results_file_postfix: String,

    // -- optional keys (not in the published file)
    /// Mean daily occupation-layer degree. Assumed; default 10.
    #[serde(default = "default_occupation_mean_contacts")]
    pub occupation_mean_contacts: f64,
    /// Mean daily random-layer degree before `scale_random_interact`. Assumed; default 4.
    #[serde(default = "default_random_mean_contacts")]
    pub random_mean_contacts: f64,
    /// Spread of the per-agent Gaussian compliance draw; 0 gives plain Bernoulli.
    #[serde(default)]
    pub compliance_sigma: f64,
    /// Hospital beds per 100,000 people, reported against peak occupancy.
    #[serde(default = "default_hospital_bed_capacity")]
    pub hospital_bed_capacity: u32,
    #[serde(default = "default_test_cost")]
    pub test_cost: f64,
    #[serde(default = "default_vaccine_price")]
    pub vaccine_price: f64,
    /// When set, daily vaccine production is derived from this budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vaccine_budget: Option<f64>,
    #[serde(default)]
    pub disease: DiseaseParams,
}

/// Canonical age-group names in index order.
pub fn canonical_age_groups() -> BTreeMap<String, u8> {
    AGE_GROUP_NAMES
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), i as u8))
        .collect()
}

/// Canonical occupation names and indices.
pub const OCCUPATION_NAMES: [(&str, u8); 21] = [
    ("AGRICULTURE", 0),
    ("MINING", 1),
    ("UTILITIES", 2),
    ("CONSTRUCTION", 3),
    ("MANUFACTURING", 4),
    ("WHOLESALETRADE", 5),
    ("RETAILTRADE", 6),
    ("TRANSPORTATION", 7),
    ("INFORMATION", 8),
    ("FINANCEINSURANCE", 9),
    ("REALESTATERENTAL", 10),
    ("SCIENTIFICTECHNICAL", 11),
    ("ENTERPRISEMANAGEMENT", 12),
    ("WASTEMANAGEMENT", 13),
    ("EDUCATION", 14),
    ("HEALTHCARE", 15),
    ("ART", 16),
    ("FOOD", 17),
    ("OTHER", 18),
    ("ELDERLY", ELDERLY_OCCUPATION),
    ("CHILD", CHILD_OCCUPATION),
];

fn check_prob(key: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::config(key, format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_distribution(key: &str, probs: &[f64], expected_len: Option<usize>) -> Result<()> {
    if let Some(n) = expected_len {
        if probs.len() != n {
            return Err(Error::config(key, format!("expected {n} entries, found {}", probs.len())));
        }
    }
    if probs.is_empty() {
        return Err(Error::config(key, "distribution is empty"));
    }
    for &p in probs {
        check_prob(key, p)?;
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::config(key, format!("probabilities sum to {sum}, expected 1 within 1e-6")));
    }
    Ok(())
}

fn check_nonneg_days(key: &str, v: i64) -> Result<()> {
    if v < 0 {
        return Err(Error::config(key, format!("{v} must be >= 0")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_agents == 0 {
            return Err(Error::config("num_agents", "must be >= 1"));
        }
        if self.num_stages as usize != NUM_STAGES {
            return Err(Error::config("num_stages", format!("must be {NUM_STAGES}")));
        }
        if self.num_runs == 0 {
            return Err(Error::config("num_runs", "must be >= 1"));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::config("R", "must be finite and >= 0"));
        }
        if self.age_groups_to_ix_dict != canonical_age_groups() {
            return Err(Error::config(
                "age_groups_to_ix_dict",
                format!("must map {:?} to 0..8 in order", AGE_GROUP_NAMES),
            ));
        }
        if !(self.child_upper_index < self.adult_upper_index
            && (self.adult_upper_index as usize) < NUM_AGE_GROUPS)
        {
            return Err(Error::config(
                "ADULT_Upper_Index",
                "requires CHILD_Upper_Index < ADULT_Upper_Index < 9",
            ));
        }
        check_distribution("age_ix_prob_list", &self.age_ix_prob_list, Some(NUM_AGE_GROUPS))?;
        if !self.age_ix_pop_dict.is_empty() {
            let total: u64 = self.age_ix_pop_dict.values().sum();
            for g in 0..NUM_AGE_GROUPS as u8 {
                let count = *self.age_ix_pop_dict.get(&g).ok_or_else(|| {
                    Error::config("age_ix_pop_dict", format!("missing age group {g}"))
                })?;
                let share = count as f64 / total as f64;
                if (share - self.age_ix_prob_list[g as usize]).abs() > 1e-6 {
                    return Err(Error::config(
                        "age_ix_pop_dict",
                        format!("census share of group {g} ({share}) disagrees with age_ix_prob_list"),
                    ));
                }
            }
            if self.age_ix_pop_dict.len() != NUM_AGE_GROUPS {
                return Err(Error::config("age_ix_pop_dict", "expected exactly 9 age groups"));
            }
        }
        let app_keys: Vec<&String> = self.app_user_agewise_probs_dict.keys().collect();
        let mut expected: Vec<&str> = AGE_GROUP_NAMES.to_vec();
        expected.sort_unstable();
        if app_keys.iter().map(|s| s.as_str()).collect::<Vec<_>>() != expected {
            return Err(Error::config(
                "app_user_agewise_probs_dict",
                "must have one entry per age group name",
            ));
        }
        for &p in self.app_user_agewise_probs_dict.values() {
            check_prob("app_user_agewise_probs_dict", p)?;
        }
        if self.households_sizes_list.is_empty()
            || self.households_sizes_list.iter().any(|&s| s == 0)
        {
            return Err(Error::config("households_sizes_list", "sizes must be >= 1"));
        }
        check_distribution(
            "households_sizes_prob_list",
            &self.households_sizes_prob_list,
            Some(self.households_sizes_list.len()),
        )?;
        let expected_occ: BTreeMap<String, u8> = OCCUPATION_NAMES
            .iter()
            .map(|(n, i)| (n.to_string(), *i))
            .collect();
        if self.occupation_ix_to_occupations_dict != expected_occ {
            return Err(Error::config(
                "occupation_ix_to_occupations_dict",
                "must list the 21 standard occupations with CHILD=20 and ELDERLY=19",
            ));
        }
        check_distribution(
            "occupations_sizes_prob_list",
            &self.occupations_sizes_prob_list,
            Some(NUM_WORK_OCCUPATIONS),
        )?;
        for (key, v) in [
            ("scale_random_interact", self.scale_random_interact),
            ("occupation_mean_contacts", self.occupation_mean_contacts),
            ("random_mean_contacts", self.random_mean_contacts),
            ("compliance_sigma", self.compliance_sigma),
            ("test_cost", self.test_cost),
            ("vaccine_price", self.vaccine_price),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("{v} must be finite and >= 0")));
            }
        }
        if let Some(b) = self.vaccine_budget {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::config("vaccine_budget", "must be finite and >= 0"));
            }
            if self.vaccine_price <= 0.0 {
                return Err(Error::config("vaccine_price", "must be > 0 when a budget is set"));
            }
        }

        // stage seeding
        for (code, name) in &self.stage_ix_to_stages_dict {
            let stage = Stage::from_code(*code).ok_or_else(|| {
                Error::config("stage_ix_to_stages_dict", format!("unknown stage code {code}"))
            })?;
            if stage.name() != name {
                return Err(Error::config(
                    "stage_ix_to_stages_dict",
                    format!("code {code} must be {}, found {name}", stage.name()),
                ));
            }
        }
        if self.stage_ix_to_stages_dict.len() != NUM_STAGES {
            return Err(Error::config("stage_ix_to_stages_dict", "expected 11 stages"));
        }
        if let Some(code) = self.stage_ix_pop_dict.keys().find(|c| Stage::from_code(**c).is_none()) {
            return Err(Error::config("stage_ix_pop_dict", format!("unknown stage code {code}")));
        }
        let seeded: u64 = self.stage_ix_pop_dict.values().sum();
        if seeded != u64::from(self.num_agents) {
            return Err(Error::config(
                "stage_ix_pop_dict",
                format!("counts sum to {seeded}, expected num_agents = {}", self.num_agents),
            ));
        }

        // testing
        for (key, p) in [
            ("poc_test_true_positive", self.poc_test_true_positive),
            ("poc_test_false_positive", self.poc_test_false_positive),
            ("test_true_positive", self.test_true_positive),
            ("test_false_positive", self.test_false_positive),
        ] {
            check_prob(key, p)?;
        }
        check_nonneg_days("poc_test_start_date", self.poc_test_start_date)?;
        check_nonneg_days("rtpcr_test_start_date", self.rtpcr_test_start_date)?;
        if self.test_results_dates.len() != self.test_results_dates_probs.len() {
            return Err(Error::config(
                "test_results_dates_probs",
                "must have one probability per entry of test_results_dates",
            ));
        }
        for &d in &self.test_results_dates {
            check_nonneg_days("test_results_dates", d)?;
        }
        check_distribution("test_results_dates_probs", &self.test_results_dates_probs, None)?;
        if self.test_validity_days < -1 {
            return Err(Error::config("test_validity_days", "must be -1 (indefinite) or >= 0"));
        }

        // tracing
        for (key, p) in [
            ("app_adoption_rate", self.app_adoption_rate),
            ("poc_den_inform_prob", self.poc_den_inform_prob),
            ("dct_poc_comply_prob", self.dct_poc_comply_prob),
            ("dct_rtpcr_comply_prob", self.dct_rtpcr_comply_prob),
            ("poc_mct_inform_prob", self.poc_mct_inform_prob),
            ("mct_recall_prob", self.mct_recall_prob),
            ("mct_reachable_prob", self.mct_reachable_prob),
            ("mct_poc_comply_prob", self.mct_poc_comply_prob),
            ("mct_rtpcr_comply_prob", self.mct_rtpcr_comply_prob),
            ("en_quarantine_enter_prob", self.en_quarantine_enter_prob),
            ("mct_quarantine_enter_prob", self.mct_quarantine_enter_prob),
            ("quarantine_break_prob", self.quarantine_break_prob),
            ("vaccine_drop_prob_before_second_dose", self.vaccine_drop_prob_before_second_dose),
            ("vaccine_first_dose_effectivness", self.vaccine_first_dose_effectivness),
            ("vaccine_second_dose_effectiveness", self.vaccine_second_dose_effectiveness),
        ] {
            check_prob(key, p)?;
        }
        for (key, v) in [
            ("max_den_contact_days", self.max_den_contact_days),
            ("max_mct_contact_days", self.max_mct_contact_days),
        ] {
            if v < 1 {
                return Err(Error::config(key, format!("{v} must be >= 1")));
            }
        }
        check_nonneg_days("quarantine_days", self.quarantine_days)?;
        check_nonneg_days("vaccine_daily_production", self.vaccine_daily_production)?;
        check_nonneg_days("vaccine_first_dose_kick_in_days", self.vaccine_first_dose_kick_in_days)?;
        check_nonneg_days("vaccine_second_dose_delay", self.vaccine_second_dose_delay)?;
        check_nonneg_days("vaccine_start_date", self.vaccine_start_date)?;
        if self.vaccine_shelf_life < 1 {
            return Err(Error::config("vaccine_shelf_life", "must be >= 1 day"));
        }
        if self.use_gps_logic {
            return Err(Error::config("use_gps_logic", "location-based tracing is not supported"));
        }
        if self.use_app_age_dist {
            // surfaces the rescale error at load time instead of at population build
            crate::popgen::AppOwnership::from_config(self).group_probabilities(&self.age_ix_prob_list)?;
        }

        self.disease.validate()
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes")
    }

    /// Resizes the population, absorbing the change into the susceptible count.
    pub fn with_num_agents(mut self, n: u32) -> Self {
        let others: u64 = self
            .stage_ix_pop_dict
            .iter()
            .filter(|(k, _)| **k != 0)
            .map(|(_, v)| *v)
            .sum();
        self.num_agents = n;
        self.stage_ix_pop_dict
            .insert(0, u64::from(n).saturating_sub(others));
        self
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_with_overrides(text, &[])
}

/// Parses a scenario file, applies `key=value` overrides (dot paths reach into
/// nested blocks, values are YAML scalars or flow sequences), then validates.
///
/// When `num_agents` is overridden and `stage_ix_pop_dict` is not, the
/// susceptible count absorbs the difference so the seeding still sums to the
/// population.
pub fn parse_config_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<ScenarioConfig> {
    let mut root: Value = serde_yaml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if !root.is_mapping() {
        return Err(Error::Parse("top level must be a mapping".into()));
    }
    let touches_disease = overrides.iter().any(|(k, _)| k.starts_with("disease."));
    if touches_disease && root.get("disease").is_none() {
        let defaults = serde_yaml::to_value(DiseaseParams::default()).map_err(|e| Error::Parse(e.to_string()))?;
        root.as_mapping_mut()
            .expect("checked above")
            .insert(Value::String("disease".into()), defaults);
    }
    for (key, raw) in overrides {
        let value: Value = serde_yaml::from_str(raw)
            .map_err(|e| Error::config(key.clone(), format!("cannot parse override value `{raw}`: {e}")))?;
        set_path(&mut root, key, value)?;
    }
    let mut config: ScenarioConfig = serde_path_to_error::deserialize(root).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        if path == "." {
            Error::Parse(inner)
        } else {
            Error::config(path, inner)
        }
    })?;
    let resized = overrides.iter().any(|(k, _)| k == "num_agents");
    let reseeded = overrides.iter().any(|(k, _)| k.starts_with("stage_ix_pop_dict"));
    if resized && !reseeded {
        let n = config.num_agents;
        config = config.with_num_agents(n);
    }
    config.validate()?;
    if config.use_gpu {
        log::warn!("use_gpu is accepted for compatibility and ignored");
    }
    Ok(config)
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(path, "malformed key path"));
    }
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let map = match node {
            Value::Mapping(m) => m,
            Value::Null => {
                *node = Value::Mapping(Mapping::new());
                node.as_mapping_mut().expect("just created")
            }
            _ => {
                return Err(Error::config(
                    path,
                    format!("`{}` is not a mapping", parts[..i].join(".")),
                ))
            }
        };
        let key = map_key(map, part);
        if i + 1 == parts.len() {
            map.insert(key, value);
            return Ok(());
        }
        node = map.entry(key).or_insert(Value::Null);
    }
    unreachable!("path has at least one component")
}

/// Integer-keyed maps (stage and age dictionaries) need numeric YAML keys.
fn map_key(map: &Mapping, part: &str) -> Value {
    if let Ok(n) = part.parse::<u64>() {
        let numeric = Value::Number(n.into());
        if map.contains_key(&numeric) || !map.contains_key(part) {
            return numeric;
        }
    }
    Value::String(part.to_string())
}
