//! Digital (app-based) and manual (interview-based) contact tracing.

use std::collections::VecDeque;

use crate::interventions::testing::TestKind;
use crate::interventions::Compliance;
use crate::io::config::ScenarioConfig;
use crate::networks::{Edge, EdgeList, Layer};
use crate::rng::{Purpose, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracingMode {
    Off,
    Dct,
    Mct,
    /// DCT first, MCT for positives without the app or who did not inform.
    Hybrid,
}

impl TracingMode {
    pub fn uses_dct(self) -> bool {
        matches!(self, TracingMode::Dct | TracingMode::Hybrid)
    }

    pub fn uses_mct(self) -> bool {
        matches!(self, TracingMode::Mct | TracingMode::Hybrid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracingPolicy {
    pub mode: TracingMode,
    pub dct_window: u32,
    pub mct_window: u32,
    pub dct_inform_prob: f64,
    pub mct_inform_prob: f64,
    pub mct_recall_prob: f64,
    pub mct_reachable_prob: f64,
    pub dct_rtpcr_comply_prob: f64,
    pub dct_poc_comply_prob: f64,
    pub mct_rtpcr_comply_prob: f64,
    pub mct_poc_comply_prob: f64,
    /// Applied on top of the MCT compliance when a reached contact enters quarantine.
    pub mct_quarantine_enter_prob: f64,
}

impl TracingPolicy {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        let mode = match (c.use_den_logic, c.use_mct_logic) {
            _ if c.use_hybrid_logic => TracingMode::Hybrid,
            (true, true) => TracingMode::Hybrid,
            (true, false) => TracingMode::Dct,
            (false, true) => TracingMode::Mct,
            (false, false) => TracingMode::Off,
        };
        Self {
            mode,
            dct_window: c.max_den_contact_days.max(1) as u32,
            mct_window: c.max_mct_contact_days.max(1) as u32,
            dct_inform_prob: c.poc_den_inform_prob,
            mct_inform_prob: c.poc_mct_inform_prob,
            mct_recall_prob: c.mct_recall_prob,
            mct_reachable_prob: c.mct_reachable_prob,
            dct_rtpcr_comply_prob: c.dct_rtpcr_comply_prob,
            dct_poc_comply_prob: c.dct_poc_comply_prob,
            mct_rtpcr_comply_prob: c.mct_rtpcr_comply_prob,
            mct_poc_comply_prob: c.mct_poc_comply_prob,
            mct_quarantine_enter_prob: c.mct_quarantine_enter_prob,
        }
    }

    pub fn dct_comply_prob(&self, kind: TestKind) -> f64 {
        match kind {
            TestKind::Rtpcr => self.dct_rtpcr_comply_prob,
            TestKind::Poc => self.dct_poc_comply_prob,
        }
    }

    /// Probability that a reached contact ends up in quarantine.
    pub fn mct_enter_prob(&self, kind: TestKind) -> f64 {
        let comply = match kind {
            TestKind::Rtpcr => self.mct_rtpcr_comply_prob,
            TestKind::Poc => self.mct_poc_comply_prob,
        };
        comply * self.mct_quarantine_enter_prob
    }
}

#[derive(Debug, Clone, PartialEq)]
struct DayLog {
    step: u32,
    dct: Vec<Edge>,
    mct: Vec<Edge>,
}

/// Rolling record of the last few days of contacts. Only what tracing can
/// use is kept: edges between two app owners (DCT view) and household or
/// occupation edges (MCT view).
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionLog {
    dct_window: u32,
    mct_window: u32,
    keep_dct: bool,
    keep_mct: bool,
    num_agents: usize,
    days: VecDeque<DayLog>,
}

impl InteractionLog {
    pub fn new(policy: &TracingPolicy) -> Self {
        Self {
            dct_window: policy.dct_window,
            mct_window: policy.mct_window,
            keep_dct: policy.mode.uses_dct(),
            keep_mct: policy.mode.uses_mct(),
            num_agents: 0,
            days: VecDeque::new(),
        }
    }

    pub fn with_windows(dct_window: u32, mct_window: u32) -> Self {
        Self {
            dct_window,
            mct_window,
            keep_dct: true,
            keep_mct: true,
            num_agents: 0,
            days: VecDeque::new(),
        }
    }

    fn capacity(&self) -> u32 {
        self.dct_window.max(self.mct_window).max(1)
    }

    /// Appends one day and evicts days that fell out of the window.
    pub fn log_interactions(&mut self, edges: &EdgeList, has_app: &[bool]) {
        self.num_agents = self.num_agents.max(has_app.len());
        let dct = if self.keep_dct {
            edges
                .edges
                .iter()
                .filter(|e| has_app[e.src as usize] && has_app[e.dst as usize])
                .copied()
                .collect()
        } else {
            Vec::new()
        };
        let mct = if self.keep_mct {
            edges.edges.iter().filter(|e| e.layer != Layer::Random).copied().collect()
        } else {
            Vec::new()
        };
        self.days.push_back(DayLog {
            step: edges.step,
            dct,
            mct,
        });
        while self.days.len() > self.capacity() as usize {
            self.days.pop_front();
        }
    }

    pub fn days_held(&self) -> usize {
        self.days.len()
    }

    pub fn oldest_step(&self) -> Option<u32> {
        self.days.front().map(|d| d.step)
    }

    fn window(&self, window: u32, step: u32) -> impl Iterator<Item = &DayLog> + '_ {
        self.days.iter().filter(move |d| d.step + window > step)
    }

    /// Both-app edges within the DCT window ending at `step`.
    pub fn dct_view(&self, step: u32) -> impl Iterator<Item = &Edge> + '_ {
        self.window(self.dct_window, step).flat_map(|d| d.dct.iter())
    }

    /// Household and occupation edges within the MCT window ending at `step`.
    pub fn mct_view(&self, step: u32) -> impl Iterator<Item = &Edge> + '_ {
        self.window(self.mct_window, step).flat_map(|d| d.mct.iter())
    }
}

/// A contact flagged by tracing, with the index case that led to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Notice {
    pub agent: u32,
    pub index: u32,
    pub kind: TestKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DctOutcome {
    /// One notice per notified agent (lowest index case kept).
    pub notified: Vec<Notice>,
    /// App-owning positives who informed.
    pub informed: Vec<u32>,
    /// Positives not handled by DCT: no app, or declined to inform.
    pub not_handled: Vec<(u32, TestKind)>,
}

fn dedup_by_agent(mut notices: Vec<Notice>) -> Vec<Notice> {
    notices.sort();
    notices.dedup_by_key(|n| n.agent);
    notices
}

/// Dense index-case lookup: `marks[agent]` is the index case's test kind.
struct IndexMarks(Vec<Option<TestKind>>);

impl IndexMarks {
    fn new(n: usize) -> Self {
        Self(vec![None; n])
    }

    fn insert(&mut self, agent: u32, kind: TestKind) {
        let a = agent as usize;
        if a >= self.0.len() {
            self.0.resize(a + 1, None);
        }
        self.0[a] = Some(kind);
    }

    #[inline]
    fn get(&self, agent: u32) -> Option<TestKind> {
        self.0.get(agent as usize).copied().flatten()
    }
}

fn contacts_of<'a>(edges: impl Iterator<Item = &'a Edge>, indices: &IndexMarks) -> Vec<Notice> {
    let mut out = Vec::new();
    for e in edges {
        if let Some(kind) = indices.get(e.src) {
            out.push(Notice {
                agent: e.dst,
                index: e.src,
                kind,
            });
        }
        if let Some(kind) = indices.get(e.dst) {
            out.push(Notice {
                agent: e.src,
                index: e.dst,
                kind,
            });
        }
    }
    out
}

/// Exposure notifications from newly delivered positives. Each app-owning
/// positive informs with the DCT inform probability; everyone it shared a
/// both-app edge with inside the window is notified.
pub fn dct_notify(
    log: &InteractionLog,
    has_app: &[bool],
    positives: &[(u32, TestKind)],
    policy: &TracingPolicy,
    compliance: &Compliance,
    step: u32,
    key: StreamKey,
) -> DctOutcome {
    let mut outcome = DctOutcome::default();
    let mut informers = IndexMarks::new(has_app.len());
    for &(agent, kind) in positives {
        if !has_app[agent as usize] {
            outcome.not_handled.push((agent, kind));
            continue;
        }
        let mut rng = key.stream(Purpose::DctInform, step, u64::from(agent));
        if compliance.complies(agent, policy.dct_inform_prob, &mut rng) {
            informers.insert(agent, kind);
            outcome.informed.push(agent);
        } else {
            outcome.not_handled.push((agent, kind));
        }
    }
    if !outcome.informed.is_empty() {
        outcome.notified = dedup_by_agent(contacts_of(log.dct_view(step), &informers));
    }
    outcome
}

/// Manual tracing from `positives`. Each positive cooperates with the MCT
/// inform probability; each distinct household or occupation contact in the
/// window is then recalled and reached with independent Bernoulli trials.
pub fn mct_trace(
    log: &InteractionLog,
    positives: &[(u32, TestKind)],
    policy: &TracingPolicy,
    compliance: &Compliance,
    step: u32,
    key: StreamKey,
) -> Vec<Notice> {
    let mut indices = IndexMarks::new(log.num_agents);
    let mut any = false;
    for &(agent, kind) in positives {
        let mut rng = key.stream(Purpose::MctTrace, step, u64::from(agent));
        if compliance.complies(agent, policy.mct_inform_prob, &mut rng) {
            indices.insert(agent, kind);
            any = true;
        }
    }
    if !any {
        return Vec::new();
    }
    let mut pairs = contacts_of(log.mct_view(step), &indices);
    pairs.sort_by_key(|n| (n.index, n.agent));
    pairs.dedup_by_key(|n| (n.index, n.agent));
    let reached = pairs
        .into_iter()
        .filter(|n| {
            let unit = (u64::from(n.index) << 32) | u64::from(n.agent);
            let mut rng = key.child(1).stream(Purpose::MctTrace, step, unit);
            rng.bernoulli(policy.mct_recall_prob) && rng.bernoulli(policy.mct_reachable_prob)
        })
        .collect();
    dedup_by_agent(reached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::{parse_config, tests::BASELINE};

    fn policy() -> TracingPolicy {
        TracingPolicy::from_config(&parse_config(BASELINE).unwrap())
    }

    fn day(step: u32, edges: &[(u32, u32, Layer)]) -> EdgeList {
        let mut l = EdgeList::new(step);
        l.edges = edges.iter().map(|&(a, b, layer)| Edge::new(a, b, layer)).collect();
        l
    }

    fn no_compliance_noise() -> Compliance {
        Compliance::new(0.0, StreamKey::root(0))
    }

    #[test]
    fn baseline_is_hybrid() {
        let p = policy();
        assert_eq!(p.mode, TracingMode::Hybrid);
        assert_eq!((p.dct_window, p.mct_window), (7, 7));
        assert!((p.mct_enter_prob(TestKind::Rtpcr) - 0.855).abs() < 1e-12);
    }

    #[test]
    fn ring_evicts_oldest_day() {
        let mut log = InteractionLog::with_windows(7, 7);
        let app = vec![true; 4];
        for step in 1..=8 {
            log.log_interactions(&day(step, &[(0, 1, Layer::Household)]), &app);
        }
        assert_eq!(log.days_held(), 7);
        assert_eq!(log.oldest_step(), Some(2));
    }

    #[test]
    fn views_filter_app_and_layer() {
        let mut log = InteractionLog::with_windows(7, 7);
        let app = vec![true, true, false];
        log.log_interactions(
            &day(1, &[(0, 1, Layer::Random), (0, 2, Layer::Household), (1, 2, Layer::Occupation)]),
            &app,
        );
        let dct: Vec<_> = log.dct_view(1).copied().collect();
        assert_eq!(dct, vec![Edge::new(0, 1, Layer::Random)]);
        assert!(log.mct_view(1).all(|e| e.layer != Layer::Random));
        assert_eq!(log.mct_view(1).count(), 2);
    }

    #[test]
    fn positive_without_app_notifies_nobody() {
        let mut log = InteractionLog::with_windows(7, 7);
        let app = vec![false, true, true];
        log.log_interactions(&day(1, &[(0, 1, Layer::Household), (0, 2, Layer::Random)]), &app);
        let out = dct_notify(&log, &app, &[(0, TestKind::Rtpcr)], &policy(), &no_compliance_noise(), 1, StreamKey::root(1));
        assert!(out.notified.is_empty());
        assert_eq!(out.not_handled, vec![(0, TestKind::Rtpcr)]);
    }

    #[test]
    fn informing_positive_notifies_exactly_its_app_contacts() {
        let mut log = InteractionLog::with_windows(7, 7);
        let app = vec![true; 6];
        log.log_interactions(&day(1, &[(0, 1, Layer::Household), (0, 2, Layer::Random)]), &app);
        log.log_interactions(&day(2, &[(3, 0, Layer::Occupation), (4, 5, Layer::Random)]), &app);
        let out = dct_notify(&log, &app, &[(0, TestKind::Rtpcr)], &policy(), &no_compliance_noise(), 2, StreamKey::root(1));
        let agents: Vec<u32> = out.notified.iter().map(|n| n.agent).collect();
        assert_eq!(agents, vec![1, 2, 3]);
        assert!(out.notified.iter().all(|n| n.index == 0));
    }

    #[test]
    fn window_excludes_old_days() {
        let mut log = InteractionLog::with_windows(2, 2);
        let app = vec![true; 3];
        log.log_interactions(&day(1, &[(0, 1, Layer::Household)]), &app);
        log.log_interactions(&day(2, &[(0, 2, Layer::Household)]), &app);
        log.log_interactions(&day(3, &[]), &app);
        let out = dct_notify(&log, &app, &[(0, TestKind::Rtpcr)], &policy(), &no_compliance_noise(), 3, StreamKey::root(1));
        assert_eq!(out.notified.len(), 1);
        assert_eq!(out.notified[0].agent, 2);
    }

    #[test]
    fn mct_recall_extremes() {
        let mut log = InteractionLog::with_windows(7, 7);
        let app = vec![false; 5];
        log.log_interactions(
            &day(1, &[(0, 1, Layer::Household), (0, 2, Layer::Occupation), (0, 3, Layer::Random)]),
            &app,
        );
        let mut p = policy();
        p.mct_recall_prob = 0.0;
        let c = no_compliance_noise();
        assert!(mct_trace(&log, &[(0, TestKind::Rtpcr)], &p, &c, 1, StreamKey::root(1)).is_empty());
        p.mct_recall_prob = 1.0;
        p.mct_reachable_prob = 1.0;
        let reached: Vec<u32> = mct_trace(&log, &[(0, TestKind::Rtpcr)], &p, &c, 1, StreamKey::root(1))
            .iter()
            .map(|n| n.agent)
            .collect();
        assert_eq!(reached, vec![1, 2]);
    }

    #[test]
    fn mct_reached_fraction_matches_product() {
        let n = 100_000u32;
        let mut log = InteractionLog::with_windows(7, 7);
        let app = vec![false; n as usize + 1];
        let edges: Vec<(u32, u32, Layer)> = (1..=n).map(|j| (0, j, Layer::Occupation)).collect();
        log.log_interactions(&day(1, &edges), &app);
        let reached = mct_trace(&log, &[(0, TestKind::Rtpcr)], &policy(), &no_compliance_noise(), 1, StreamKey::root(9)).len() as f64;
        let p = 0.7 * 0.95;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((reached - n as f64 * p).abs() < 3.0 * sd, "{reached}");
    }
}
