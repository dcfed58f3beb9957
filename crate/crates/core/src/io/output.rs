//! Result files: per-step CSV, JSON summary, per-run scalars, comparison and
//! sweep tables, and optional SVG line charts.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde_json::{json, Map, Value};

use crate::engine::{RunResult, Series, Stat, Summary};
use crate::error::{Error, Result};
use crate::io::config::ScenarioConfig;
use crate::popgen::AGE_GROUP_NAMES;
use crate::scenario::SweepPoint;

/// Series drawn when plotting is requested.
pub const PLOTTED: [Series; 4] = [Series::NewInfections, Series::Hospitalized, Series::Quarantined, Series::CumulativeCost];

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut buf);
        w.write_record(header).map_err(|e| csv_error(path, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Header and rows of the per-step table: `step`, then `<series>_mean` and
/// `<series>_std` for every series.
pub fn timeseries_table(summary: &Summary) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["step".to_string()];
    for s in Series::ALL {
        header.push(format!("{}_mean", s.name()));
        header.push(format!("{}_std", s.name()));
    }
    let rows = (0..summary.num_steps)
        .map(|t| {
            let mut row = vec![t.to_string()];
            for s in Series::ALL {
                let st = summary.series(s);
                row.push(num(st.mean[t]));
                row.push(num(st.std[t]));
            }
            row
        })
        .collect();
    (header, rows)
}

fn stat(s: Stat) -> Value {
    json!({ "mean": s.mean, "std": s.std })
}

/// Scalar summary with keys in a fixed order.
pub fn summary_json(summary: &Summary, config: &ScenarioConfig) -> Value {
    let mut ages = Map::new();
    for (name, frac) in AGE_GROUP_NAMES.iter().zip(summary.age_infection_fraction) {
        ages.insert(name.to_string(), json!(frac));
    }
    let beds = hospital_beds(config.hospital_bed_capacity, summary.num_agents);
    let hospitalized = &summary.series(Series::Hospitalized).mean;
    json!({
        "scenario": config.results_file_postfix,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "num_agents": summary.num_agents,
        "num_runs": summary.num_runs,
        "num_steps": summary.num_steps,
        "final_cumulative_fraction": stat(summary.final_cumulative_fraction),
        "peak_hospitalized": { "value": summary.peak_hospitalized.value, "day": summary.peak_hospitalized.day },
        "peak_daily_infections": { "value": summary.peak_daily_infections.value, "day": summary.peak_daily_infections.day },
        "run_peak_hospitalized": stat(summary.run_peak_hospitalized),
        "run_peak_hospitalized_day": stat(summary.run_peak_hospitalized_day),
        "run_peak_daily_infections": stat(summary.run_peak_daily_infections),
        "run_peak_daily_infections_day": stat(summary.run_peak_daily_infections_day),
        "total_cost": stat(summary.total_cost),
        "tests_total": stat(summary.tests_total),
        "doses_total": stat(summary.doses_total),
        "age_infection_fraction": Value::Object(ages),
        "hospital_beds": {
            "capacity": beds,
            "peak_occupancy_ratio": if beds > 0.0 { summary.peak_hospitalized.value / beds } else { 0.0 },
            "days_over_capacity": hospitalized.iter().filter(|&&h| h > beds).count(),
        },
    })
}

/// Beds available to the simulated population, given beds per 100,000 people.
pub fn hospital_beds(per_100k: u32, num_agents: u32) -> f64 {
    per_100k as f64 * num_agents as f64 / 100_000.0
}

fn runs_table(runs: &[RunResult]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "run",
        "final_cumulative_infections",
        "peak_hospitalized",
        "peak_hospitalized_day",
        "peak_daily_infections",
        "peak_daily_infections_day",
        "tests_total",
        "doses_total",
        "total_cost",
    ]
    .map(String::from)
    .to_vec();
    let rows = runs
        .iter()
        .map(|r| {
            let h = r.peak(Series::Hospitalized);
            let i = r.peak(Series::NewInfections);
            vec![
                r.run_index.to_string(),
                num(r.final_value(Series::CumulativeInfections)),
                num(h.value),
                h.day.to_string(),
                num(i.value),
                i.day.to_string(),
                r.tests_total.to_string(),
                r.doses_total.to_string(),
                num(r.total_cost),
            ]
        })
        .collect();
    (header, rows)
}

/// Options for [`write_outputs`].
#[derive(Debug, Clone, Copy, Default)]
pub struct OutputOptions {
    pub plot: bool,
}

/// Writes the result files for one ensemble into `out_dir` and returns their
/// paths. Files are named after `config.results_file_postfix`; the resolved
/// configuration goes to `config.genrerated_params_file_name`.
pub fn write_outputs(
    summary: &Summary,
    runs: &[RunResult],
    config: &ScenarioConfig,
    out_dir: &Path,
    options: OutputOptions,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let postfix = &config.results_file_postfix;
    let mut written = Vec::new();

    let path = out_dir.join(format!("timeseries_{postfix}.csv"));
    let (header, rows) = timeseries_table(summary);
    write_csv(&path, &header, &rows)?;
    written.push(path);

    let path = out_dir.join(format!("summary_{postfix}.json"));
    write_json(&path, &summary_json(summary, config))?;
    written.push(path);

    let path = out_dir.join(format!("runs_{postfix}.csv"));
    let (header, rows) = runs_table(runs);
    write_csv(&path, &header, &rows)?;
    written.push(path);

    if !config.genrerated_params_file_name.is_empty() {
        let path = out_dir.join(&config.genrerated_params_file_name);
        fs::write(&path, config.to_yaml()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    if options.plot {
        for s in PLOTTED {
            let path = out_dir.join(format!("{}_{postfix}.svg", s.name()));
            let st = summary.series(s);
            line_chart(&path, &format!("{} ({postfix})", s.name()), &[(postfix.as_str(), &st.mean)])?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One row per scenario with its scalar summaries.
pub fn write_comparison(path: &Path, rows: &[(String, Summary)]) -> Result<()> {
    let header = [
        "scenario",
        "final_cumulative_fraction_mean",
        "final_cumulative_fraction_std",
        "peak_hospitalized",
        "peak_hospitalized_day",
        "peak_daily_infections",
        "peak_daily_infections_day",
        "tests_total_mean",
        "doses_total_mean",
        "total_cost_mean",
        "total_cost_std",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, s)| {
            vec![
                name.clone(),
                num(s.final_cumulative_fraction.mean),
                num(s.final_cumulative_fraction.std),
                num(s.peak_hospitalized.value),
                s.peak_hospitalized.day.to_string(),
                num(s.peak_daily_infections.value),
                s.peak_daily_infections.day.to_string(),
                num(s.tests_total.mean),
                num(s.doses_total.mean),
                num(s.total_cost.mean),
                num(s.total_cost.std),
            ]
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Long format: one row per sweep value and metric.
pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let header = ["value", "metric", "mean", "std"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = points
        .iter()
        .flat_map(|p| {
            p.metrics
                .iter()
                .map(|(m, st)| vec![p.value.clone(), m.name().to_string(), num(st.mean), num(st.std)])
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Draws one line per curve against the step index.
pub fn line_chart(path: &Path, title: &str, curves: &[(&str, &[f64])]) -> Result<()> {
    let draw = || -> std::result::Result<(), Box<dyn std::error::Error>> {
        let len = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0).max(2);
        let top = curves.iter().flat_map(|(_, c)| c.iter().copied()).fold(0.0f64, f64::max);
        let top = if top > 0.0 { top * 1.05 } else { 1.0 };
        let root = SVGBackend::new(path, (800, 480)).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(0.0..(len - 1) as f64, 0.0..top)?;
        chart.configure_mesh().x_desc("day").draw()?;
        for (i, (name, curve)) in curves.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(curve.iter().enumerate().map(|(t, &v)| (t as f64, v)), color.stroke_width(2)))?
                .label(*name)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
}
