//! Named intervention presets and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use serde_yaml::Value;

use crate::engine::{aggregate, run_ensemble, RunResult, Series, Stat, Summary};
use crate::error::{Error, Result};
use crate::io::config::{parse_config_with_overrides, ScenarioConfig};

/// Intervention bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    /// No intervention.
    Ni,
    /// Symptomatic testing and self-quarantine.
    Sq,
    /// Vaccination only.
    Vacc,
    /// Testing, self-quarantine and hybrid contact tracing.
    Ct,
    /// Everything.
    All,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::Ni, Scenario::Sq, Scenario::Vacc, Scenario::Ct, Scenario::All];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Ni => "NI",
            Scenario::Sq => "SQ",
            Scenario::Vacc => "VACC",
            Scenario::Ct => "CT",
            Scenario::All => "ALL",
        }
    }

    /// `base` with this preset's toggles. Everything else is kept.
    pub fn apply(self, base: &ScenarioConfig) -> ScenarioConfig {
        let mut c = base.clone();
        let testing = matches!(self, Scenario::Sq | Scenario::Ct | Scenario::All);
        let tracing = matches!(self, Scenario::Ct | Scenario::All);
        let vaccination = matches!(self, Scenario::Vacc | Scenario::All);
        c.use_rtpcr_test_logic = testing;
        c.poc_test_on_symptoms = false;
        c.use_quarantine_logic = testing;
        c.use_den_logic = tracing;
        c.use_mct_logic = tracing;
        c.use_hybrid_logic = tracing;
        c.use_poc_test_on_ct_logic = false;
        c.use_rtpcr_test_on_ct_logic = false;
        c.use_gps_logic = false;
        c.use_vaccination_logic = vaccination;
        c.results_file_postfix = self.name().to_string();
        c
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("scenario", format!("unknown scenario `{s}` (expected NI, SQ, VACC, CT or ALL)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    PeakHospitalizations,
    CumulativeInfections,
    TotalCost,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::PeakHospitalizations, Metric::CumulativeInfections, Metric::TotalCost];

    pub fn name(self) -> &'static str {
        match self {
            Metric::PeakHospitalizations => "peak_hospitalizations",
            Metric::CumulativeInfections => "cumulative_infections",
            Metric::TotalCost => "total_cost",
        }
    }

    /// Across-run mean and std of the per-run metric.
    pub fn evaluate(self, runs: &[RunResult]) -> Stat {
        let values: Vec<f64> = runs
            .iter()
            .map(|r| match self {
                Metric::PeakHospitalizations => r.peak(Series::Hospitalized).value,
                Metric::CumulativeInfections => r.final_value(Series::CumulativeInfections),
                Metric::TotalCost => r.total_cost,
            })
            .collect();
        Stat::of(&values)
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Sweep(format!("unknown metric `{s}`")))
    }
}

/// One parameter varied over a list of values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Dot path into the scenario, e.g. `app_adoption_rate` or `disease.beta`.
    pub path: String,
    /// Values as YAML scalars.
    pub values: Vec<String>,
    pub metrics: Vec<Metric>,
}

impl SweepSpec {
    /// Parses values given either as a comma list (`0.2,0.4`) or as a range
    /// `lo:hi:steps` with `steps >= 1` evenly spaced points.
    pub fn parse_values(text: &str) -> Result<Vec<String>> {
        let text = text.trim();
        let parts: Vec<&str> = text.split(':').collect();
        let values: Vec<String> = if parts.len() == 3 {
            let lo: f64 = parts[0].trim().parse().map_err(|_| Error::Sweep(format!("bad range start in `{text}`")))?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| Error::Sweep(format!("bad range end in `{text}`")))?;
            let steps: usize = parts[2].trim().parse().map_err(|_| Error::Sweep(format!("bad step count in `{text}`")))?;
            match steps {
                0 => Vec::new(),
                1 => vec![format!("{lo}")],
                _ => (0..steps)
                    .map(|i| format!("{}", lo + (hi - lo) * i as f64 / (steps - 1) as f64))
                    .collect(),
            }
        } else {
            text.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
        };
        if values.is_empty() {
            return Err(Error::Sweep("need at least one value".into()));
        }
        Ok(values)
    }

    /// Checks that `path` names an existing key of `config`.
    pub fn check_path(&self, config: &ScenarioConfig) -> Result<()> {
        let root = serde_yaml::to_value(config).map_err(|e| Error::Sweep(e.to_string()))?;
        let mut node = &root;
        for part in self.path.split('.') {
            let next = match node {
                Value::Mapping(m) => m.get(part).or_else(|| part.parse::<u64>().ok().and_then(|n| m.get(Value::Number(n.into())))),
                Value::Sequence(s) => part.parse::<usize>().ok().and_then(|i| s.get(i)),
                _ => None,
            };
            node = next.ok_or_else(|| Error::Sweep(format!("parameter path `{}` does not resolve", self.path)))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: String,
    pub summary: Summary,
    pub metrics: Vec<(Metric, Stat)>,
}

/// Runs one ensemble per sweep value on top of `text` plus `overrides`.
pub fn run_sweep(
    text: &str,
    overrides: &[(String, String)],
    spec: &SweepSpec,
    runs: Option<u32>,
    jobs: usize,
) -> Result<Vec<SweepPoint>> {
    let base = parse_config_with_overrides(text, overrides)?;
    spec.check_path(&base)?;
    let mut points = Vec::with_capacity(spec.values.len());
    for value in &spec.values {
        let mut ov = overrides.to_vec();
        ov.push((spec.path.clone(), value.clone()));
        let config = parse_config_with_overrides(text, &ov)?;
        let results = run_ensemble(&config, runs.unwrap_or(config.num_runs), jobs)?;
        let summary = aggregate(&results)?;
        let metrics = spec.metrics.iter().map(|&m| (m, m.evaluate(&results))).collect();
        points.push(SweepPoint {
            value: value.clone(),
            summary,
            metrics,
        });
    }
    Ok(points)
}
