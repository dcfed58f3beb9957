//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::time::{Duration, Instant};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use pandemic_abm::disease::calibrate::{calibrate_beta, with_beta, DEFAULT_TRIALS};
use pandemic_abm::engine::{aggregate, run_ensemble, RunResult, Series, Summary, World, WorldOptions};
use pandemic_abm::events::EventKind;
use pandemic_abm::interventions::testing::TestKind;
use pandemic_abm::io::output::{write_outputs, OutputOptions};
use pandemic_abm::networks::Layer;
use pandemic_abm::popgen::NUM_AGE_GROUPS;
use pandemic_abm::scenario::Scenario;
use pandemic_abm::{parse_config_with_overrides, ScenarioConfig};

const BASELINE: &str = include_str!("../../../scenarios/baseline.yaml");
const SMALL_N: &str = "10000";

fn config(overrides: &[(&str, &str)]) -> ScenarioConfig {
    let ov: Vec<(String, String)> = overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    parse_config_with_overrides(BASELINE, &ov).expect("baseline config parses")
}

fn small(scenario: Scenario) -> ScenarioConfig {
    scenario.apply(&config(&[("num_agents", SMALL_N)]))
}

struct Verdicts {
    failed: Vec<u32>,
}

impl Verdicts {
    fn report(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        println!("{} criterion {id:2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }
}

fn same_pair(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Everything criteria 2 to 8 need from one stepped run.
#[derive(Default)]
struct Observations {
    runs: usize,
    steps: usize,
    conservation_violations: Vec<String>,
    quarantine_edge_violations: usize,
    edges_scanned: usize,
    dct_checked: usize,
    dct_violations: Vec<String>,
    mct_checked: usize,
    mct_violations: Vec<String>,
    constrained_steps: usize,
    priority_violations: Vec<String>,
    cost_violations: Vec<String>,
    rtpcr_delays: [u64; 4],
    quarantine_completed: u64,
    quarantine_broke: u64,
}

fn observe(config: &ScenarioConfig, run: u32, obs: &mut Observations) {
    let mut world = World::new(
        config,
        run,
        WorldOptions {
            events: true,
            diagnostics: true,
        },
    )
    .expect("world builds");
    let n = config.num_agents as u64;
    let dct_window = config.max_den_contact_days.max(1) as u32;
    let mct_window = config.max_mct_contact_days.max(1) as u32;
    let has_app = world.pop.has_app.clone();
    let ages: Vec<usize> = world.pop.age_group.iter().map(|g| g.index()).collect();
    // step -> (any-layer pairs, household/occupation pairs)
    let mut history: HashMap<u32, (HashSet<(u32, u32)>, HashSet<(u32, u32)>)> = HashMap::new();
    let mut events_seen = 0;
    for _ in 0..config.num_steps {
        let isolated: Vec<bool> = (0..world.agents.len())
            .map(|a| world.agents.quarantine.active[a] || world.agents.stage[a].is_isolated())
            .collect();
        let supply_before = world.supply.available();
        world.step();
        let s = world.current_step() - 1;
        obs.steps += 1;

        let counts = world.agents.stage_counts();
        if counts.iter().sum::<u64>() != n {
            obs.conservation_violations.push(format!("run {run} step {s}: stage counts sum to {}", counts.iter().sum::<u64>()));
        }

        let mut all = HashSet::new();
        let mut traceable = HashSet::new();
        for e in &world.last_edges.edges {
            obs.edges_scanned += 1;
            if isolated[e.src as usize] || isolated[e.dst as usize] {
                obs.quarantine_edge_violations += 1;
            }
            all.insert(same_pair(e.src, e.dst));
            if e.layer != Layer::Random {
                traceable.insert(same_pair(e.src, e.dst));
            }
        }
        history.insert(s, (all, traceable));
        history.retain(|&t, _| t + dct_window.max(mct_window) > s);

        let events = world.events.events();
        for ev in &events[events_seen..] {
            match ev.kind {
                EventKind::DctNotified => {
                    obs.dct_checked += 1;
                    let index: u32 = ev.detail.parse().expect("index in detail");
                    let pair = same_pair(ev.agent, index);
                    let met = history.iter().any(|(&t, (all, _))| t + dct_window > ev.step && all.contains(&pair));
                    if !(has_app[ev.agent as usize] && has_app[index as usize] && met) {
                        obs.dct_violations.push(format!("step {} agent {} index {index}", ev.step, ev.agent));
                    }
                }
                EventKind::MctReached => {
                    obs.mct_checked += 1;
                    let index: u32 = ev.detail.parse().expect("index in detail");
                    let pair = same_pair(ev.agent, index);
                    let met = history.iter().any(|(&t, (_, tr))| t + mct_window > ev.step && tr.contains(&pair));
                    if !met {
                        obs.mct_violations.push(format!("step {} agent {} index {index}", ev.step, ev.agent));
                    }
                }
                _ => {}
            }
        }
        events_seen = events.len();

        let report = &world.last_report;
        for t in &report.tests {
            if t.kind == TestKind::Rtpcr {
                let d = (t.due - s) as usize;
                obs.rtpcr_delays[d.min(3)] += 1;
            }
        }
        obs.quarantine_completed += report.quarantine.completed.len() as u64;
        obs.quarantine_broke += report.quarantine.broke.len() as u64;

        let v = &report.vaccination;
        if let (Some(d1), Some(d2)) = (&v.dose1_candidates, &v.dose2_candidates) {
            let wanted = d1.len() + d2.len();
            let available = supply_before + v.produced - v.expired;
            if (available as usize) < wanted {
                obs.constrained_steps += 1;
                let sort = |c: &[u32]| {
                    let mut c = c.to_vec();
                    c.sort_by(|&a, &b| ages[b as usize].cmp(&ages[a as usize]).then(a.cmp(&b)));
                    c
                };
                let expected: Vec<u32> = sort(d1).into_iter().chain(sort(d2)).take(available as usize).collect();
                let got: Vec<u32> = v.doses.iter().map(|d| d.agent).collect();
                if got != expected {
                    obs.priority_violations.push(format!("run {run} step {s}: {} doses differ from sort oracle", got.len()));
                }
                let skipped_dose1 = d1.len() > v.doses.iter().filter(|d| d.dose == 1).count();
                if skipped_dose1 && v.doses.iter().any(|d| d.dose == 2) {
                    obs.priority_violations.push(format!("run {run} step {s}: dose 2 given while dose-1 candidates waited"));
                }
            }
        }
    }
    let r = world.result();
    for s in Series::ALL.into_iter().filter(|s| s.is_cumulative()) {
        if r.series(s).windows(2).any(|w| w[1] < w[0]) {
            obs.conservation_violations.push(format!("run {run}: {} decreases", s.name()));
        }
    }
    let expected_cost = config.test_cost * r.tests_total as f64 + config.vaccine_price * r.doses_total as f64;
    let ledger = pandemic_abm::costs::total_cost(&world.ledger);
    if r.total_cost != expected_cost || r.final_value(Series::CumulativeCost) != expected_cost || ledger != expected_cost {
        obs.cost_violations.push(format!(
            "run {run}: total {} vs 5x{} + 20x{} = {expected_cost}",
            r.total_cost, r.tests_total, r.doses_total
        ));
    }
    obs.runs += 1;
}

fn first<T: std::fmt::Debug>(v: &[T]) -> String {
    v.first().map(|x| format!("{x:?}")).unwrap_or_default()
}

fn determinism(v: &mut Verdicts) {
    let c = config(&[("num_agents", SMALL_N)]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let write = |jobs: usize, dir: &Path| -> Duration {
        let t = Instant::now();
        let runs = run_ensemble(&c, c.num_runs, jobs).unwrap();
        let summary = aggregate(&runs).unwrap();
        write_outputs(&summary, &runs, &c, dir, OutputOptions::default()).unwrap();
        t.elapsed()
    };
    let t1 = write(1, a.path());
    let t4 = write(4, b.path());
    let files = ["timeseries_CT.csv", "summary_CT.json", "runs_CT.csv"];
    let identical = files
        .iter()
        .all(|f| std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap());
    let fast = t1.max(t4) < Duration::from_secs(30);
    v.report(
        1,
        "determinism",
        identical && fast,
        format!("outputs identical for jobs 1 and 4: {identical}; runtimes {:.1}s / {:.1}s (< 30 s)", t1.as_secs_f64(), t4.as_secs_f64()),
    );
}

fn property_suites(v: &mut Verdicts) {
    let mut obs = Observations::default();
    let ct = small(Scenario::Ct);
    let all = small(Scenario::All);
    for run in 0..ct.num_runs {
        observe(&ct, run, &mut obs);
        observe(&all, run, &mut obs);
    }
    v.report(
        2,
        "conservation",
        obs.conservation_violations.is_empty(),
        format!("{} runs x {} steps, {} violations {}", obs.runs, obs.steps / obs.runs.max(1), obs.conservation_violations.len(), first(&obs.conservation_violations)),
    );
    v.report(
        3,
        "quarantine isolation",
        obs.quarantine_edge_violations == 0 && obs.edges_scanned > 0,
        format!("{} edges scanned, {} touch isolated agents", obs.edges_scanned, obs.quarantine_edge_violations),
    );
    v.report(
        4,
        "tracing soundness",
        obs.dct_violations.is_empty() && obs.mct_violations.is_empty() && obs.dct_checked > 0 && obs.mct_checked > 0,
        format!(
            "{} DCT notices ({} unsound {}), {} MCT reaches ({} without household/occupation contact {})",
            obs.dct_checked,
            obs.dct_violations.len(),
            first(&obs.dct_violations),
            obs.mct_checked,
            obs.mct_violations.len(),
            first(&obs.mct_violations)
        ),
    );
    v.report(
        5,
        "vaccination priority",
        obs.priority_violations.is_empty() && obs.constrained_steps > 0,
        format!("{} supply-constrained steps, {} violations {}", obs.constrained_steps, obs.priority_violations.len(), first(&obs.priority_violations)),
    );
    v.report(
        6,
        "cost reconciliation",
        obs.cost_violations.is_empty(),
        format!("{} runs, {} mismatches {}", obs.runs, obs.cost_violations.len(), first(&obs.cost_violations)),
    );

    let counts = &obs.rtpcr_delays;
    let total: u64 = counts[1..].iter().sum();
    let probs = [0.3, 0.4, 0.3];
    let chi2: f64 = (1..=3)
        .map(|d| {
            let e = probs[d - 1] * total as f64;
            (counts[d] as f64 - e).powi(2) / e
        })
        .sum();
    let p = 1.0 - ChiSquared::new(2.0).unwrap().cdf(chi2);
    v.report(
        7,
        "turnaround distribution",
        total >= 10_000 && counts[0] == 0 && p > 0.01,
        format!("{total} RT-PCR tests, delays 1/2/3 = {}/{}/{}, other {}, chi2 {chi2:.2}, p {p:.3}", counts[1], counts[2], counts[3], counts[0]),
    );

    let resolved = obs.quarantine_completed + obs.quarantine_broke;
    let expected = 0.99f64.powi(13);
    let rate = obs.quarantine_completed as f64 / resolved.max(1) as f64;
    let sigma = (expected * (1.0 - expected) / resolved.max(1) as f64).sqrt();
    v.report(
        8,
        "quarantine completion",
        resolved >= 10_000 && (rate - expected).abs() <= 3.0 * sigma,
        format!("{resolved} quarantines, completion {rate:.4} vs {expected:.4} +/- {:.4}", 3.0 * sigma),
    );
}

fn zero_hazard(v: &mut Verdicts) {
    let mut details = Vec::new();
    let mut ok = true;
    for sc in [Scenario::Ni, Scenario::Ct] {
        let mut c = small(sc);
        c.disease.beta = 0.0;
        let runs = run_ensemble(&c, 3, 1).unwrap();
        for r in &runs {
            let seeded = r.series(Series::NewInfections)[0];
            let later: f64 = r.series(Series::NewInfections)[1..].iter().sum();
            let active = r.final_value(Series::ActiveInfections);
            ok &= later == 0.0 && r.final_value(Series::CumulativeInfections) == seeded && active == 0.0;
            details.push(format!("{sc} run {}: seeded {seeded}, later {later}, active at end {active}", r.run_index));
        }
    }
    v.report(9, "zero hazard", ok, details.join("; "));
}

struct Ensembles {
    ni: Summary,
    sq: Summary,
    ct: Summary,
    vacc: Summary,
    vacc30_ct: Summary,
}

fn ensembles() -> Ensembles {
    let base = config(&[]);
    let t = Instant::now();
    let cal = calibrate_beta(&base, base.r, DEFAULT_TRIALS).expect("calibration converges");
    println!("calibrated beta {:.5} (R {:.4}) in {:.1}s", cal.beta, cal.achieved_r, t.elapsed().as_secs_f64());
    let mut base = base;
    base.disease = with_beta(&base.disease, cal.beta);
    let run = |c: ScenarioConfig| -> Summary {
        let t = Instant::now();
        let runs: Vec<RunResult> = run_ensemble(&c, c.num_runs, std::thread::available_parallelism().map_or(1, |n| n.get())).unwrap();
        let s = aggregate(&runs).unwrap();
        println!(
            "  {:>8}: final {:.3}, peak daily {:.0} on day {}, peak hospitalized {:.0} on day {}, tests {:.0}, doses {:.0}, cost {:.0} ({:.0}s)",
            c.results_file_postfix,
            s.final_cumulative_fraction.mean,
            s.peak_daily_infections.value,
            s.peak_daily_infections.day,
            s.peak_hospitalized.value,
            s.peak_hospitalized.day,
            s.tests_total.mean,
            s.doses_total.mean,
            s.total_cost.mean,
            t.elapsed().as_secs_f64()
        );
        s
    };
    let mut vacc30_ct = Scenario::All.apply(&base);
    vacc30_ct.vaccine_start_date = 30;
    vacc30_ct.results_file_postfix = "VACC30+CT".into();
    let mut vacc = Scenario::Vacc.apply(&base);
    vacc.vaccine_start_date = 10;
    Ensembles {
        ni: run(Scenario::Ni.apply(&base)),
        sq: run(Scenario::Sq.apply(&base)),
        ct: run(Scenario::Ct.apply(&base)),
        vacc: run(vacc),
        vacc30_ct: run(vacc30_ct),
    }
}

fn reproductions(v: &mut Verdicts) {
    let t = Instant::now();
    let e = ensembles();
    println!("calibrated ensembles took {:.0}s", t.elapsed().as_secs_f64());
    let n = f64::from(e.ni.num_agents);

    let f = e.ni.final_cumulative_fraction.mean;
    v.report(10, "NI final size", (f - 0.81).abs() <= 0.08, format!("{:.1}% (target 81% +/- 8 pp)", 100.0 * f));

    let peak = e.ni.peak_daily_infections.value * 100_000.0 / n;
    let day = e.ni.peak_daily_infections.day;
    v.report(
        11,
        "NI peak daily infections",
        (peak / 281.0 - 1.0).abs() <= 0.25 && day < 100,
        format!("{peak:.0} per 100k on day {day} (target 281 +/- 25%, day < 100)"),
    );

    let (cn, cs, cc) = (
        e.ni.final_cumulative_fraction.mean,
        e.sq.final_cumulative_fraction.mean,
        e.ct.final_cumulative_fraction.mean,
    );
    let (dn, dc) = (e.ni.peak_hospitalized.day, e.ct.peak_hospitalized.day);
    v.report(
        12,
        "intervention ordering",
        cc < cs && cs < cn && dc >= dn + 7,
        format!("CT {cc:.3} < SQ {cs:.3} < NI {cn:.3}; hospital peak day CT {dc} vs NI {dn} + 7"),
    );

    let (kc, ks, kv) = (e.ct.total_cost.mean, e.sq.total_cost.mean, e.vacc.total_cost.mean);
    v.report(
        13,
        "cost ordering",
        kc < ks && ks < kv && (kv / 1.02e6 - 1.0).abs() <= 0.15 && (kc / 0.42e6 - 1.0).abs() <= 0.25,
        format!("CT ${kc:.0} < SQ ${ks:.0} < VACC ${kv:.0}; VACC vs $1.02M +/- 15%, CT vs $0.42M +/- 25%"),
    );

    let (hv, hc) = (e.vacc.run_peak_hospitalized.mean, e.vacc30_ct.run_peak_hospitalized.mean);
    let (pv, pc) = (e.vacc.peak_hospitalized.day, e.vacc30_ct.peak_hospitalized.day);
    v.report(
        14,
        "delayed vaccination with tracing",
        hc < hv && pc > pv,
        format!("peak hospitalized VACC(t=30)+CT {hc:.0} < VACC(t=10) {hv:.0}; peak day {pc} > {pv}"),
    );

    let reduction = |g: usize| 1.0 - e.vacc.age_infection_fraction[g] / e.ni.age_infection_fraction[g];
    let overall = 1.0 - e.vacc.final_cumulative_fraction.mean / e.ni.final_cumulative_fraction.mean;
    let (r70, r80) = (reduction(NUM_AGE_GROUPS - 2), reduction(NUM_AGE_GROUPS - 1));
    v.report(
        15,
        "age stratification",
        r70 > overall && r80 > overall,
        format!("reduction 70-79 {:.1}%, 80+ {:.1}%, all ages {:.1}%", 100.0 * r70, 100.0 * r80, 100.0 * overall),
    );
}

fn main() {
    // `cargo test` passes harness flags; a filter argument that names no
    // criterion group skips the run.
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    if filter.as_deref().is_some_and(|f| !"acceptance".contains(f)) {
        return;
    }
    let mut v = Verdicts { failed: Vec::new() };
    determinism(&mut v);
    property_suites(&mut v);
    zero_hazard(&mut v);
    reproductions(&mut v);
    if v.failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed criteria: {:?}", v.failed);
        std::process::exit(1);
    }
}
