//! `pandemic-abm`: run scenarios, compare intervention presets, sweep a
//! parameter, or calibrate the transmission rate.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_yaml::Value;

use pandemic_abm::disease::calibrate::{calibrate_beta, DEFAULT_TRIALS};
use pandemic_abm::engine::{aggregate, run, run_ensemble, run_with, RunResult, Summary, WorldOptions};
use pandemic_abm::io::output::{line_chart, write_comparison, write_outputs, write_sweep, OutputOptions, PLOTTED};
use pandemic_abm::scenario::{run_sweep, Metric, Scenario, SweepSpec};
use pandemic_abm::{parse_config_with_overrides, Error, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "pandemic-abm", version, about = "Agent-based epidemic simulator with testing, quarantine, vaccination and contact tracing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario as configured.
    Run {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Also write the event log of run 0.
        #[arg(long)]
        events: bool,
    },
    /// Run several intervention presets on the same base scenario.
    Compare {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Presets to run.
        #[arg(long, value_delimiter = ',', default_value = "NI,SQ,VACC,CT,ALL")]
        scenarios: Vec<Scenario>,
    },
    /// Run one ensemble per value of a parameter.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Dot path of the parameter, e.g. `app_adoption_rate`.
        #[arg(long, value_name = "PATH")]
        param: String,
        /// Comma list `a,b,c` or range `lo:hi:steps`.
        #[arg(long)]
        values: String,
        /// Metrics to report.
        #[arg(long, value_delimiter = ',', default_value = "peak_hospitalizations,cumulative_infections,total_cost")]
        metrics: Vec<Metric>,
    },
    /// Solve for the transmission rate giving a target reproduction number
    /// and write it as a config overlay.
    Calibrate {
        #[command(flatten)]
        input: Input,
        /// Target reproduction number (default: the config's `R`).
        #[arg(long)]
        target: Option<f64>,
        /// Number of simulated index cases.
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Overlay file to write.
        #[arg(long, default_value = "beta_overlay.yaml")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Input {
    /// Scenario file (YAML).
    #[arg(value_name = "CONFIG", required_unless_present = "config")]
    config_file: Option<PathBuf>,
    /// Scenario file (YAML), alternative to the positional argument.
    #[arg(long, value_name = "PATH", conflicts_with = "config_file")]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set num_agents=10000`. Repeatable.
    #[arg(long = "set", value_name = "K=V", value_parser = parse_assignment)]
    set: Vec<(String, String)>,
    /// YAML file whose values override the config (e.g. a calibration
    /// overlay). Applied before `--set`. Repeatable.
    #[arg(long, value_name = "PATH")]
    overlay: Vec<PathBuf>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed vaccine budget in dollars; daily production is derived from it.
    #[arg(long, value_name = "USD")]
    budget: Option<f64>,
}

#[derive(Args)]
struct Output {
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Number of runs per ensemble (default: the config's `num_runs`).
    #[arg(long)]
    runs: Option<u32>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write SVG line charts.
    #[arg(long)]
    plot: bool,
}

impl Output {
    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

fn parse_assignment(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.to_string())),
        _ => Err(format!("expected KEY=VALUE, got `{s}`")),
    }
}

/// Flattens a YAML mapping into dot-path overrides.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) -> Result<()> {
    match value {
        Value::Mapping(m) => {
            for (k, v) in m {
                let key = match k {
                    Value::String(s) => s.clone(),
                    Value::Number(n) => n.to_string(),
                    other => return Err(Error::Parse(format!("unsupported overlay key {other:?}"))),
                };
                let path = if prefix.is_empty() { key } else { format!("{prefix}.{key}") };
                flatten(&path, v, out)?;
            }
        }
        leaf => {
            if prefix.is_empty() {
                return Err(Error::Parse("overlay must be a mapping".into()));
            }
            let text = serde_yaml::to_string(leaf).map_err(|e| Error::Parse(e.to_string()))?;
            out.push((prefix.to_string(), text));
        }
    }
    Ok(())
}

impl Input {
    fn path(&self) -> &Path {
        self.config_file
            .as_deref()
            .or(self.config.as_deref())
            .expect("clap enforces a config path")
    }

    fn text(&self) -> Result<String> {
        let path = self.path();
        fs::read_to_string(path).map_err(|e| Error::io(path, e))
    }

    fn overrides(&self, runs: Option<u32>) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for path in &self.overlay {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let value: Value = serde_yaml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            flatten("", &value, &mut out)?;
        }
        out.extend(self.set.iter().cloned());
        if let Some(seed) = self.seed {
            out.push(("seed".into(), seed.to_string()));
        }
        if let Some(budget) = self.budget {
            out.push(("vaccine_budget".into(), budget.to_string()));
        }
        if let Some(runs) = runs {
            out.push(("num_runs".into(), runs.to_string()));
        }
        Ok(out)
    }
}

fn ensemble(config: &ScenarioConfig, jobs: usize, events_dir: Option<&Path>) -> Result<Vec<RunResult>> {
    let Some(dir) = events_dir else {
        return run_ensemble(config, config.num_runs, jobs);
    };
    let world = run_with(
        config,
        0,
        WorldOptions {
            events: true,
            ..Default::default()
        },
    )?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("events_{}.csv", config.results_file_postfix));
    world.events.save(&path)?;
    info!("wrote {}", path.display());
    let mut results = vec![world.into_result()];
    for r in 1..config.num_runs {
        results.push(run(config, r)?);
    }
    Ok(results)
}

fn report(name: &str, s: &Summary) {
    println!(
        "{name}: infected {:.3} (sd {:.3}), peak hospitalized {:.1} on day {}, peak daily infections {:.1} on day {}, cost ${:.0}",
        s.final_cumulative_fraction.mean,
        s.final_cumulative_fraction.std,
        s.peak_hospitalized.value,
        s.peak_hospitalized.day,
        s.peak_daily_infections.value,
        s.peak_daily_infections.day,
        s.total_cost.mean,
    );
}

fn simulate(config: &ScenarioConfig, output: &Output, events: bool) -> Result<Summary> {
    info!(
        "{}: {} runs of {} steps over {} agents",
        config.results_file_postfix, config.num_runs, config.num_steps, config.num_agents
    );
    let results = ensemble(config, output.jobs(), events.then_some(output.out.as_path()))?;
    let summary = aggregate(&results)?;
    let files = write_outputs(&summary, &results, config, &output.out, OutputOptions { plot: output.plot })?;
    for f in files {
        info!("wrote {}", f.display());
    }
    report(&config.results_file_postfix, &summary);
    Ok(summary)
}

const LOG_ENV: &str = "PANDEMIC_ABM_LOG";

/// Raises logging to debug when the config asks for it and the environment
/// does not set a level.
fn debug_logging(config: &ScenarioConfig) {
    if config.debug && std::env::var_os(LOG_ENV).is_none() {
        log::set_max_level(log::LevelFilter::Debug);
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { input, output, events } => {
            let config = parse_config_with_overrides(&input.text()?, &input.overrides(output.runs)?)?;
            debug_logging(&config);
            simulate(&config, &output, events)?;
        }
        Command::Compare { input, output, scenarios } => {
            let base = parse_config_with_overrides(&input.text()?, &input.overrides(output.runs)?)?;
            debug_logging(&base);
            let mut rows = Vec::new();
            for sc in scenarios {
                let config = sc.apply(&base);
                config.validate()?;
                rows.push((sc.name().to_string(), simulate(&config, &output, false)?));
            }
            let path = output.out.join("comparison.csv");
            write_comparison(&path, &rows)?;
            info!("wrote {}", path.display());
            if output.plot {
                for s in PLOTTED {
                    let path = output.out.join(format!("compare_{}.svg", s.name()));
                    let curves: Vec<(&str, &[f64])> =
                        rows.iter().map(|(n, sum)| (n.as_str(), sum.series(s).mean.as_slice())).collect();
                    line_chart(&path, s.name(), &curves)?;
                }
            }
        }
        Command::Sweep {
            input,
            output,
            param,
            values,
            metrics,
        } => {
            let spec = SweepSpec {
                path: param,
                values: SweepSpec::parse_values(&values)?,
                metrics,
            };
            let (text, overrides) = (input.text()?, input.overrides(None)?);
            debug_logging(&parse_config_with_overrides(&text, &overrides)?);
            let points = run_sweep(&text, &overrides, &spec, output.runs, output.jobs())?;
            fs::create_dir_all(&output.out).map_err(|e| Error::io(&output.out, e))?;
            let path = output.out.join("sweep.csv");
            write_sweep(&path, &points)?;
            for p in &points {
                report(&format!("{}={}", spec.path, p.value), &p.summary);
            }
            info!("wrote {}", path.display());
        }
        Command::Calibrate {
            input,
            target,
            trials,
            out,
        } => {
            let config = parse_config_with_overrides(&input.text()?, &input.overrides(None)?)?;
            debug_logging(&config);
            let target = target.unwrap_or(config.r);
            let cal = calibrate_beta(&config, target, trials)?;
            let text = format!(
                "# target R {}, achieved {:.4} over {} index cases\ndisease:\n  beta: {}\n",
                cal.target_r, cal.achieved_r, cal.trials, cal.beta
            );
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
            println!("beta = {} (R {:.4})", cal.beta, cal.achieved_r);
            info!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if std::env::var_os(LOG_ENV).is_some() {
        env_logger::Builder::from_env(LOG_ENV).init();
    } else {
        env_logger::Builder::new().filter_level(log::LevelFilter::Debug).init();
        log::set_max_level(log::LevelFilter::Warn);
    }
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
