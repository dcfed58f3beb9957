//! Per-run time series and their ensemble summary.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::popgen::NUM_AGE_GROUPS;

/// Recorded per-step quantities. Counts are levels at the end of the step
/// unless named as daily.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Series {
    /// Daily new infections.
    NewInfections,
    CumulativeInfections,
    Susceptible,
    /// Infected agents not yet recovered or dead.
    ActiveInfections,
    /// In hospital: ward, ICU, or recovering ward.
    Hospitalized,
    Icu,
    Deaths,
    Recovered,
    Immunized,
    Quarantined,
    /// Daily tests administered.
    Tests,
    /// Daily doses administered.
    Doses,
    CumulativeCost,
}

pub const NUM_SERIES: usize = 13;

impl Series {
    pub const ALL: [Series; NUM_SERIES] = [
        Series::NewInfections,
        Series::CumulativeInfections,
        Series::Susceptible,
        Series::ActiveInfections,
        Series::Hospitalized,
        Series::Icu,
        Series::Deaths,
        Series::Recovered,
        Series::Immunized,
        Series::Quarantined,
        Series::Tests,
        Series::Doses,
        Series::CumulativeCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Series::NewInfections => "new_infections",
            Series::CumulativeInfections => "cumulative_infections",
            Series::Susceptible => "susceptible",
            Series::ActiveInfections => "active_infections",
            Series::Hospitalized => "hospitalized",
            Series::Icu => "icu",
            Series::Deaths => "deaths",
            Series::Recovered => "recovered",
            Series::Immunized => "immunized",
            Series::Quarantined => "quarantined",
            Series::Tests => "tests",
            Series::Doses => "doses",
            Series::CumulativeCost => "cumulative_cost",
        }
    }

    /// Series that can only grow.
    pub fn is_cumulative(self) -> bool {
        matches!(self, Series::CumulativeInfections | Series::Deaths | Series::Recovered | Series::CumulativeCost)
    }
}

/// Output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_index: u32,
    pub num_agents: u32,
    series: Vec<Vec<f64>>,
    pub age_infections: [u64; NUM_AGE_GROUPS],
    pub age_population: [u64; NUM_AGE_GROUPS],
    pub tests_total: u64,
    pub doses_total: u64,
    pub total_cost: f64,
}

impl RunResult {
    pub fn new(run_index: u32, num_agents: u32, age_population: [u64; NUM_AGE_GROUPS]) -> Self {
        Self {
            run_index,
            num_agents,
            series: vec![Vec::new(); NUM_SERIES],
            age_infections: [0; NUM_AGE_GROUPS],
            age_population,
            tests_total: 0,
            doses_total: 0,
            total_cost: 0.0,
        }
    }

    pub fn push_row(&mut self, row: &[f64; NUM_SERIES]) {
        for (col, v) in self.series.iter_mut().zip(row) {
            col.push(*v);
        }
    }

    pub fn series(&self, s: Series) -> &[f64] {
        &self.series[s as usize]
    }

    pub fn len(&self) -> usize {
        self.series[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest value and the first step it occurs on.
    pub fn peak(&self, s: Series) -> Peak {
        Peak::of(self.series(s))
    }

    pub fn final_value(&self, s: Series) -> f64 {
        self.series(s).last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub value: f64,
    pub day: u32,
}

impl Peak {
    pub fn of(values: &[f64]) -> Self {
        let mut best = Peak { value: 0.0, day: 0 };
        for (day, &v) in values.iter().enumerate() {
            if v > best.value {
                best = Peak { value: v, day: day as u32 };
            }
        }
        best
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Stat { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Ensemble summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub num_runs: usize,
    pub num_steps: usize,
    pub num_agents: u32,
    series: Vec<SeriesStats>,
    /// Peak of the mean hospitalization curve.
    pub peak_hospitalized: Peak,
    /// Peak of the mean daily-infection curve.
    pub peak_daily_infections: Peak,
    /// Per-run peaks, averaged across runs.
    pub run_peak_hospitalized: Stat,
    pub run_peak_hospitalized_day: Stat,
    pub run_peak_daily_infections: Stat,
    pub run_peak_daily_infections_day: Stat,
    pub final_cumulative_fraction: Stat,
    pub total_cost: Stat,
    pub tests_total: Stat,
    pub doses_total: Stat,
    /// Mean fraction of each age group ever infected.
    pub age_infection_fraction: [f64; NUM_AGE_GROUPS],
}

impl Summary {
    pub fn series(&self, s: Series) -> &SeriesStats {
        &self.series[s as usize]
    }

    /// Mean of `s` at `step`, or at the last step if the run is shorter.
    pub fn mean_at(&self, s: Series, step: usize) -> f64 {
        let m = &self.series(s).mean;
        m.get(step).or(m.last()).copied().unwrap_or(0.0)
    }
}

/// Pointwise mean/std of every series plus scalar summaries.
pub fn aggregate(results: &[RunResult]) -> Result<Summary> {
    let first = results.first().ok_or_else(|| Error::Aggregate("no runs to aggregate".into()))?;
    let len = first.len();
    if let Some(bad) = results.iter().find(|r| r.len() != len) {
        return Err(Error::Aggregate(format!(
            "run {} has {} steps, run {} has {len}",
            bad.run_index,
            bad.len(),
            first.run_index
        )));
    }
    let n_runs = results.len();
    let mut series = Vec::with_capacity(NUM_SERIES);
    let mut column = vec![0.0; n_runs];
    for s in Series::ALL {
        let mut mean = Vec::with_capacity(len);
        let mut std = Vec::with_capacity(len);
        for t in 0..len {
            for (c, r) in column.iter_mut().zip(results) {
                *c = r.series(s)[t];
            }
            let st = Stat::of(&column);
            mean.push(st.mean);
            std.push(st.std);
        }
        series.push(SeriesStats { mean, std });
    }
    let per_run = |f: &dyn Fn(&RunResult) -> f64| Stat::of(&results.iter().map(f).collect::<Vec<_>>());
    let mut age_infection_fraction = [0.0; NUM_AGE_GROUPS];
    for (g, frac) in age_infection_fraction.iter_mut().enumerate() {
        *frac = results
            .iter()
            .map(|r| {
                if r.age_population[g] == 0 {
                    0.0
                } else {
                    r.age_infections[g] as f64 / r.age_population[g] as f64
                }
            })
            .sum::<f64>()
            / n_runs as f64;
    }
    let summary = Summary {
        num_runs: n_runs,
        num_steps: len,
        num_agents: first.num_agents,
        peak_hospitalized: Peak::of(&series[Series::Hospitalized as usize].mean),
        peak_daily_infections: Peak::of(&series[Series::NewInfections as usize].mean),
        series,
        run_peak_hospitalized: per_run(&|r| r.peak(Series::Hospitalized).value),
        run_peak_hospitalized_day: per_run(&|r| f64::from(r.peak(Series::Hospitalized).day)),
        run_peak_daily_infections: per_run(&|r| r.peak(Series::NewInfections).value),
        run_peak_daily_infections_day: per_run(&|r| f64::from(r.peak(Series::NewInfections).day)),
        final_cumulative_fraction: per_run(&|r| {
            r.final_value(Series::CumulativeInfections) / f64::from(r.num_agents.max(1))
        }),
        total_cost: per_run(&|r| r.total_cost),
        tests_total: per_run(&|r| r.tests_total as f64),
        doses_total: per_run(&|r| r.doses_total as f64),
        age_infection_fraction,
    };
    Ok(summary)
}
