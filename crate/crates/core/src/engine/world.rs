//! One simulated run: population, agent state, queues and the daily pipeline.

use std::collections::BTreeMap;

use crate::costs::{budget_scaled_policy, total_cost, CostLedger};
use crate::disease::agents::{AgentArrays, NEVER};
use crate::disease::dynamics::{infection_step, progression_step, seed_initial_infections, Transition};
use crate::disease::stage::Stage;
use crate::engine::result::{RunResult, Series, NUM_SERIES};
use crate::error::Result;
use crate::events::{EventKind, EventLog};
use crate::interventions::quarantine::{enter_quarantine, quarantine_daily, QuarantinePolicy, QuarantineUpdate};
use crate::interventions::testing::{deliver_results, testing_step, AdministeredTest, TestKind, TestResult, TestingPolicy};
use crate::interventions::tracing::{dct_notify, mct_trace, InteractionLog, Notice, TracingMode, TracingPolicy};
use crate::interventions::vaccination::{
    apply_onset, priority_order, vaccination_step, Dose, VaccinationReport, VaccinePolicy, VaccineSupply,
};
use crate::interventions::Compliance;
use crate::io::config::ScenarioConfig;
use crate::networks::{
    active_household_edges, build_household_edges, sample_occupation_edges, sample_random_edges, EdgeList,
    NetworkParams,
};
use crate::popgen::{assign_app_ownership, sample_population, AppOwnership, Demographics, Population, NUM_AGE_GROUPS};
use crate::rng::StreamKey;

/// Everything that does not change during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Policies {
    pub network: NetworkParams,
    pub testing: TestingPolicy,
    pub quarantine: QuarantinePolicy,
    pub vaccine: VaccinePolicy,
    pub tracing: TracingPolicy,
    pub compliance_sigma: f64,
}

impl Policies {
    pub fn from_config(c: &ScenarioConfig) -> Result<Self> {
        let mut vaccine = VaccinePolicy::from_config(c);
        if let Some(budget) = c.vaccine_budget {
            vaccine = budget_scaled_policy(budget, &vaccine, c.num_steps)?;
        }
        Ok(Self {
            network: NetworkParams {
                occupation_mean_contacts: c.occupation_mean_contacts,
                random_mean_contacts: c.random_mean_contacts,
                scale_random_interact: c.scale_random_interact,
            },
            testing: TestingPolicy::from_config(c),
            quarantine: QuarantinePolicy::from_config(c),
            vaccine,
            tracing: TracingPolicy::from_config(c),
            compliance_sigma: c.compliance_sigma,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorldOptions {
    /// Keep a per-agent event log.
    pub events: bool,
    /// Keep the vaccination candidate lists of each step.
    pub diagnostics: bool,
}

/// What happened during the last step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub step: u32,
    pub new_infections: Vec<u32>,
    pub transitions: Vec<Transition>,
    pub tests: Vec<AdministeredTest>,
    pub results: Vec<TestResult>,
    pub vaccination: VaccinationReport,
    pub immunized: Vec<u32>,
    pub dct_notified: Vec<Notice>,
    pub mct_reached: Vec<Notice>,
    pub quarantine_entered: Vec<u32>,
    pub quarantine: QuarantineUpdate,
}

pub struct World {
    pub config: ScenarioConfig,
    pub policies: Policies,
    pub pop: Population,
    pub agents: AgentArrays,
    household_edges: EdgeList,
    pub log: Option<InteractionLog>,
    pub supply: VaccineSupply,
    pub ledger: CostLedger,
    step: u32,
    result_queue: BTreeMap<u32, Vec<TestResult>>,
    onset_queue: BTreeMap<u32, Vec<Dose>>,
    trace_tests: Vec<u32>,
    priority: Vec<u32>,
    key: StreamKey,
    compliance: Compliance,
    pub events: EventLog,
    /// Contacts of the last step after eligibility filtering.
    pub last_edges: EdgeList,
    pub last_report: StepReport,
    options: WorldOptions,
    result: RunResult,
    seeded_infections: u64,
}

impl World {
    /// Builds the population and seeds the initial stages for run `run_index`.
    pub fn new(config: &ScenarioConfig, run_index: u32, options: WorldOptions) -> Result<Self> {
        let policies = Policies::from_config(config)?;
        let key = StreamKey::for_run(config.seed, u64::from(run_index));
        let demo = Demographics::from_config(config);
        let mut pop = sample_population(&demo, key)?;
        assign_app_ownership(&mut pop, &AppOwnership::from_config(config), &config.age_ix_prob_list, key)?;
        let mut agents = AgentArrays::new(pop.len());
        seed_initial_infections(&mut agents, &config.stage_ix_pop_dict, &config.disease, key)?;
        let log = (policies.tracing.mode != TracingMode::Off).then(|| InteractionLog::new(&policies.tracing));
        let household_edges = build_household_edges(&pop);
        let priority = if policies.vaccine.enabled {
            priority_order(&pop)
        } else {
            Vec::new()
        };
        let mut result = RunResult::new(run_index, config.num_agents, pop.age_counts());
        let mut seeded_infections = 0;
        for a in 0..agents.len() {
            if agents.infected_step[a] != NEVER {
                seeded_infections += 1;
                result.age_infections[pop.age_group[a].index()] += 1;
            }
        }
        Ok(Self {
            config: config.clone(),
            ledger: CostLedger::new(policies.testing.cost, policies.vaccine.price),
            compliance: Compliance::new(policies.compliance_sigma, key),
            policies,
            pop,
            agents,
            household_edges,
            log,
            supply: VaccineSupply::default(),
            step: 0,
            result_queue: BTreeMap::new(),
            onset_queue: BTreeMap::new(),
            trace_tests: Vec::new(),
            priority,
            key,
            events: EventLog::new(options.events),
            last_edges: EdgeList::new(0),
            last_report: StepReport::default(),
            options,
            result,
            seeded_infections,
        })
    }

    /// Index of the next step to execute.
    pub fn current_step(&self) -> u32 {
        self.step
    }

    pub fn result(&self) -> &RunResult {
        &self.result
    }

    pub fn into_result(self) -> RunResult {
        self.result
    }

    /// Executes one day. Day 0 only records the seeded state.
    pub fn step(&mut self) {
        let s = self.step;
        let mut report = StepReport {
            step: s,
            ..Default::default()
        };
        if s > 0 {
            self.run_pipeline(s, &mut report);
        }
        self.record(s, &report);
        self.last_report = report;
        self.step += 1;
    }

    fn run_pipeline(&mut self, s: u32, report: &mut StepReport) {
        let key = self.key;
        let disease = &self.config.disease;

        // (1) contacts, transmission, progression
        let eligible = self.agents.eligibility_mask();
        let mut edges = active_household_edges(&self.household_edges, &eligible, s);
        edges.extend(sample_occupation_edges(&self.pop, &self.policies.network, &eligible, s, key));
        edges.extend(sample_random_edges(&self.pop, &self.policies.network, &eligible, s, key));
        if let Some(log) = self.log.as_mut() {
            log.log_interactions(&edges, &self.pop.has_app);
        }
        report.new_infections = infection_step(&mut self.agents, &self.pop, &edges.edges, disease, s, key);
        self.last_edges = edges;
        report.transitions = progression_step(&mut self.agents, &self.pop, disease, s, key);
        for t in &report.transitions {
            if t.to == Stage::Recovered {
                self.agents.testing.known_positive[t.agent as usize] = false;
            }
        }
        for &a in &report.new_infections {
            self.result.age_infections[self.pop.age_group[a as usize].index()] += 1;
        }
        self.agents.testing.expire(s);

        // (2) testing and result delivery
        if self.policies.testing.is_active() {
            let traced = std::mem::take(&mut self.trace_tests);
            report.tests = testing_step(&mut self.agents, &self.policies.testing, &traced, s, key);
            self.ledger.add_tests(report.tests.len() as u64);
            for t in &report.tests {
                self.events.push(s, EventKind::TestAdministered, t.agent, || t.kind.name().to_string());
                self.result_queue.entry(t.due).or_default().push(TestResult {
                    agent: t.agent,
                    kind: t.kind,
                    positive: t.positive,
                });
            }
        }
        report.results = self.result_queue.remove(&s).unwrap_or_default();
        deliver_results(&mut self.agents, &self.policies.testing, &report.results, s);
        for r in &report.results {
            self.events.push(s, EventKind::TestResult, r.agent, || {
                if r.positive { "positive" } else { "negative" }.to_string()
            });
        }
        let positives: Vec<(u32, TestKind)> =
            report.results.iter().filter(|r| r.positive).map(|r| (r.agent, r.kind)).collect();

        // (3a) quarantine of positives
        if self.policies.quarantine.enabled {
            let cands: Vec<(u32, f64)> =
                positives.iter().map(|&(a, _)| (a, self.policies.quarantine.enter_prob)).collect();
            self.quarantine(&cands, "positive", s, report);
        }

        // (3b) vaccination and immunization onsets
        if self.policies.vaccine.enabled {
            report.vaccination = vaccination_step(
                &mut self.agents,
                &self.priority,
                &self.policies.vaccine,
                &mut self.supply,
                s,
                key,
                self.options.diagnostics,
            );
            self.ledger.add_doses(report.vaccination.doses.len() as u64);
            for d in &report.vaccination.doses {
                let kind = if d.dose == 1 { EventKind::Dose1 } else { EventKind::Dose2 };
                self.events.push(s, kind, d.agent, String::new);
                self.onset_queue.entry(s + self.policies.vaccine.dose_delay).or_default().push(*d);
            }
        }
        for d in self.onset_queue.remove(&s).unwrap_or_default() {
            if apply_onset(&mut self.agents, &self.policies.vaccine, d, s, key) {
                report.immunized.push(d.agent);
                self.events.push(s, EventKind::Immunized, d.agent, || format!("dose{}", d.dose));
            }
        }

        // (3c/4c) tracing from today's positives
        let tracing = &self.policies.tracing;
        if let (Some(log), false) = (self.log.as_ref(), positives.is_empty()) {
            let mct_targets = if tracing.mode.uses_dct() {
                let out = dct_notify(log, &self.pop.has_app, &positives, tracing, &self.compliance, s, key);
                report.dct_notified = out.notified;
                out.not_handled
            } else {
                positives.clone()
            };
            if tracing.mode.uses_mct() && !mct_targets.is_empty() {
                report.mct_reached = mct_trace(log, &mct_targets, tracing, &self.compliance, s, key);
            }
        }
        for n in &report.dct_notified {
            self.events.push(s, EventKind::DctNotified, n.agent, || n.index.to_string());
        }
        for n in &report.mct_reached {
            self.events.push(s, EventKind::MctReached, n.agent, || n.index.to_string());
        }

        // (5c) quarantine of notified and reached contacts
        if self.policies.quarantine.enabled {
            let dct: Vec<(u32, f64)> =
                report.dct_notified.iter().map(|n| (n.agent, tracing.dct_comply_prob(n.kind))).collect();
            self.quarantine(&dct, "dct", s, report);
            let tracing = &self.policies.tracing;
            let mct: Vec<(u32, f64)> =
                report.mct_reached.iter().map(|n| (n.agent, tracing.mct_enter_prob(n.kind))).collect();
            self.quarantine(&mct, "mct", s, report);
        }
        if self.policies.testing.on_trace.is_some() {
            self.trace_tests = report.dct_notified.iter().chain(&report.mct_reached).map(|n| n.agent).collect();
            self.trace_tests.sort_unstable();
            self.trace_tests.dedup();
        }

        // daily quarantine bookkeeping
        if self.policies.quarantine.enabled {
            report.quarantine = quarantine_daily(&mut self.agents, &self.policies.quarantine, s, key);
            for &a in &report.quarantine.broke {
                self.events.push(s, EventKind::QuarantineBreak, a, String::new);
            }
            for &a in &report.quarantine.completed {
                self.events.push(s, EventKind::QuarantineComplete, a, String::new);
            }
        }
    }

    fn quarantine(&mut self, cands: &[(u32, f64)], trigger: &'static str, s: u32, report: &mut StepReport) {
        let key = self.key.child(match trigger {
            "positive" => 0,
            "dct" => 1,
            _ => 2,
        });
        let entered = enter_quarantine(&mut self.agents, cands, &self.compliance, s, key);
        for &a in &entered {
            self.events.push(s, EventKind::QuarantineEnter, a, || trigger.to_string());
        }
        report.quarantine_entered.extend(entered);
    }

    fn record(&mut self, s: u32, report: &StepReport) {
        let counts = self.agents.stage_counts();
        let new = if s == 0 {
            self.seeded_infections
        } else {
            report.new_infections.len() as u64
        };
        let cumulative = self.result.series(Series::CumulativeInfections).last().copied().unwrap_or(0.0) + new as f64;
        let active: u64 = Stage::ALL
            .iter()
            .filter(|st| st.is_infected())
            .map(|st| counts[*st as usize])
            .sum();
        let mut row = [0.0; NUM_SERIES];
        row[Series::NewInfections as usize] = new as f64;
        row[Series::CumulativeInfections as usize] = cumulative;
        row[Series::Susceptible as usize] = counts[Stage::Susceptible as usize] as f64;
        row[Series::ActiveInfections as usize] = active as f64;
        row[Series::Hospitalized as usize] = (counts[Stage::Hospitalized as usize]
            + counts[Stage::CriticalIcu as usize]
            + counts[Stage::HospitalizedRecovering as usize]) as f64;
        row[Series::Icu as usize] = counts[Stage::CriticalIcu as usize] as f64;
        row[Series::Deaths as usize] = counts[Stage::Death as usize] as f64;
        row[Series::Recovered as usize] = counts[Stage::Recovered as usize] as f64;
        row[Series::Immunized as usize] = self.agents.immunized.iter().filter(|&&i| i).count() as f64;
        row[Series::Quarantined as usize] = self.agents.quarantine.count() as f64;
        row[Series::Tests as usize] = report.tests.len() as f64;
        row[Series::Doses as usize] = report.vaccination.doses.len() as f64;
        row[Series::CumulativeCost as usize] = self.ledger.close_step();
        self.result.push_row(&row);
        self.result.tests_total = self.ledger.tests;
        self.result.doses_total = self.ledger.doses;
        self.result.total_cost = total_cost(&self.ledger);
    }

    /// Per-age counts of the population.
    pub fn age_counts(&self) -> [u64; NUM_AGE_GROUPS] {
        self.pop.age_counts()
    }
}
