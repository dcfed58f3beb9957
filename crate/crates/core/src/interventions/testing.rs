//! Symptom- and trace-triggered diagnostic testing.

use crate::disease::agents::{AgentArrays, NEVER};
use crate::io::config::ScenarioConfig;
use crate::rng::{Purpose, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TestKind {
    Rtpcr,
    Poc,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Rtpcr => "rtpcr",
            TestKind::Poc => "poc",
        }
    }
}

/// One test product.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSpec {
    pub kind: TestKind,
    pub start_date: u32,
    pub true_positive: f64,
    pub false_positive: f64,
    /// Turnaround offsets in days, paired with `results_probs`.
    pub results_dates: Vec<u32>,
    pub results_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestingPolicy {
    pub rtpcr: TestSpec,
    pub poc: TestSpec,
    /// Test used on symptomatic agents, if symptomatic testing is on.
    pub on_symptoms: Option<TestKind>,
    /// Test used on traced contacts, if trace testing is on.
    pub on_trace: Option<TestKind>,
    /// Days a result exempts an agent from retesting; `None` is indefinite.
    pub validity_days: Option<u32>,
    pub cost: f64,
}

impl TestingPolicy {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        let rtpcr = TestSpec {
            kind: TestKind::Rtpcr,
            start_date: c.rtpcr_test_start_date.max(0) as u32,
            true_positive: c.test_true_positive,
            false_positive: c.test_false_positive,
            results_dates: c.test_results_dates.iter().map(|&d| d.max(0) as u32).collect(),
            results_probs: c.test_results_dates_probs.clone(),
        };
        let poc = TestSpec {
            kind: TestKind::Poc,
            start_date: c.poc_test_start_date.max(0) as u32,
            true_positive: c.poc_test_true_positive,
            false_positive: c.poc_test_false_positive,
            results_dates: vec![0],
            results_probs: vec![1.0],
        };
        let on_symptoms = if c.poc_test_on_symptoms {
            Some(TestKind::Poc)
        } else if c.use_rtpcr_test_logic {
            Some(TestKind::Rtpcr)
        } else {
            None
        };
        let on_trace = if c.use_poc_test_on_ct_logic {
            Some(TestKind::Poc)
        } else if c.use_rtpcr_test_on_ct_logic {
            Some(TestKind::Rtpcr)
        } else {
            None
        };
        Self {
            rtpcr,
            poc,
            on_symptoms,
            on_trace,
            validity_days: u32::try_from(c.test_validity_days).ok(),
            cost: c.test_cost,
        }
    }

    pub fn spec(&self, kind: TestKind) -> &TestSpec {
        match kind {
            TestKind::Rtpcr => &self.rtpcr,
            TestKind::Poc => &self.poc,
        }
    }

    pub fn is_active(&self) -> bool {
        self.on_symptoms.is_some() || self.on_trace.is_some()
    }
}

/// Per-agent testing columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TestingState {
    /// A result is on its way.
    pub pending: Vec<bool>,
    /// Step the last result was delivered, or `NEVER`.
    pub last_result_step: Vec<u32>,
    /// Holds a positive result that has not cleared yet.
    pub known_positive: Vec<bool>,
    /// Step at which a positive flag lapses (validity), or `NEVER`.
    pub positive_expires: Vec<u32>,
}

impl TestingState {
    pub fn new(n: usize) -> Self {
        Self {
            pending: vec![false; n],
            last_result_step: vec![NEVER; n],
            known_positive: vec![false; n],
            positive_expires: vec![NEVER; n],
        }
    }

    pub fn has_valid_result(&self, agent: usize, step: u32, validity: Option<u32>) -> bool {
        let last = self.last_result_step[agent];
        if last == NEVER {
            return false;
        }
        match validity {
            None => true,
            Some(days) => step < last.saturating_add(days),
        }
    }

    /// Drops positive flags whose validity has run out.
    pub fn expire(&mut self, step: u32) {
        for (flag, &until) in self.known_positive.iter_mut().zip(&self.positive_expires) {
            if *flag && step >= until {
                *flag = false;
            }
        }
    }
}

/// A test taken this step. The outcome is fixed at administration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdministeredTest {
    pub agent: u32,
    pub kind: TestKind,
    pub positive: bool,
    pub due: u32,
}

/// A delivered result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestResult {
    pub agent: u32,
    pub kind: TestKind,
    pub positive: bool,
}

fn can_test(agents: &AgentArrays, agent: usize, step: u32, policy: &TestingPolicy) -> bool {
    !agents.testing.pending[agent]
        && agents.stage[agent] != crate::disease::stage::Stage::Death
        && !agents.testing.has_valid_result(agent, step, policy.validity_days)
}

/// Administers tests to symptomatic agents and to `traced` agents. Each agent
/// is tested at most once per step; a symptomatic trigger takes precedence.
pub fn testing_step(
    agents: &mut AgentArrays,
    policy: &TestingPolicy,
    traced: &[u32],
    step: u32,
    key: StreamKey,
) -> Vec<AdministeredTest> {
    let mut out = Vec::new();
    let mut administer = |agents: &mut AgentArrays, agent: usize, kind: TestKind| {
        let spec = policy.spec(kind);
        let mut rng = key.stream(Purpose::Testing, step, agent as u64);
        let p = if agents.stage[agent].is_infected() {
            spec.true_positive
        } else {
            spec.false_positive
        };
        let positive = rng.bernoulli(p);
        let mut delay_rng = key.stream(Purpose::TestDelay, step, agent as u64);
        let delay = spec.results_dates[delay_rng.categorical(&spec.results_probs)];
        agents.testing.pending[agent] = true;
        out.push(AdministeredTest {
            agent: agent as u32,
            kind,
            positive,
            due: step + delay,
        });
    };
    if let Some(kind) = policy.on_symptoms {
        if step >= policy.spec(kind).start_date {
            for agent in 0..agents.len() {
                if agents.stage[agent].is_symptomatic() && can_test(agents, agent, step, policy) {
                    administer(agents, agent, kind);
                }
            }
        }
    }
    if let Some(kind) = policy.on_trace {
        if step >= policy.spec(kind).start_date {
            for &agent in traced {
                let agent = agent as usize;
                if can_test(agents, agent, step, policy) {
                    administer(agents, agent, kind);
                }
            }
        }
    }
    out
}

/// Applies delivered results to the agent columns.
pub fn deliver_results(agents: &mut AgentArrays, policy: &TestingPolicy, results: &[TestResult], step: u32) {
    for r in results {
        let a = r.agent as usize;
        let t = &mut agents.testing;
        t.pending[a] = false;
        t.last_result_step[a] = step;
        if r.positive {
            t.known_positive[a] = true;
            t.positive_expires[a] = policy.validity_days.map_or(NEVER, |d| step.saturating_add(d));
        }
    }
}
