//! Report artifacts for a timeline run.
//!
//! CSV columns are fixed: `step,variable,state,backend,prior,posterior`, one
//! row per step, tracked variable, state and backend, followed by
//! `# rms,<backend>,<percent>` footer lines. Numbers use shortest round-trip
//! formatting, so output is byte-identical for identical runs.

use std::collections::BTreeMap;
use std::fmt::Write;

use dqbn_core::{Backend, TimelineResult};
use serde::Serialize;

use crate::model_file::ParsedModel;

pub const CSV_HEADER: [&str; 6] = ["step", "variable", "state", "backend", "prior", "posterior"];

pub fn timeline_csv(result: &TimelineResult, parsed: &ParsedModel) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for step in &result.steps {
        for var in &result.tracked {
            let labels = parsed.labels(var);
            for (s, label) in labels.iter().enumerate() {
                for backend in &result.backends {
                    let r = &step.records[backend];
                    w.write_record([
                        step.step.to_string(),
                        var.clone(),
                        label.clone(),
                        backend.name().to_string(),
                        r.priors[var].get(s).to_string(),
                        r.posteriors[var].get(s).to_string(),
                    ])
                    .expect("in-memory write");
                }
            }
        }
    }
    let mut out =
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 records");
    for backend in &result.backends {
        writeln!(
            out,
            "# rms,{},{}",
            backend.name(),
            result.rms_percent[backend]
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct TimelineJson<'a> {
    states: BTreeMap<&'a str, Vec<String>>,
    #[serde(flatten)]
    result: &'a TimelineResult,
}

pub fn timeline_json(result: &TimelineResult, parsed: &ParsedModel) -> String {
    let states = result
        .tracked
        .iter()
        .map(|v| (v.as_str(), parsed.labels(v)))
        .collect();
    serde_json::to_string_pretty(&TimelineJson { states, result }).expect("timeline serializes")
}

/// Aligned RMS table: backend, RMS percent, Grover rounds per step.
pub fn rms_table(result: &TimelineResult) -> String {
    let mut out = format!(
        "{:<15} {:>12}  {}\n",
        "backend", "rms_percent", "iterations"
    );
    for backend in &result.backends {
        let ks: Vec<String> = result
            .steps
            .iter()
            .map(|s| match s.records[backend].iterations {
                Some(k) => k.to_string(),
                None => "-".into(),
            })
            .collect();
        writeln!(
            out,
            "{:<15} {:>12.6}  {}",
            backend.name(),
            result.rms_percent[backend],
            ks.join(",")
        )
        .unwrap();
    }
    out
}

fn colour(backend: Backend) -> &'static str {
    match backend {
        Backend::Classical => "#4c72b0",
        Backend::QuantumExact => "#55a868",
        Backend::QuantumShots => "#dd8452",
        Backend::QuantumNoisy => "#c44e52",
    }
}

const PANEL_H: f64 = 260.0;
const PLOT_H: f64 = 180.0;
const LEFT: f64 = 60.0;
const BAR_W: f64 = 12.0;
const GAP: f64 = 28.0;

/// Grouped bars of P(state 0) per step: prior and posterior for every
/// backend, one panel per tracked variable. Priors are drawn translucent.
pub fn timeline_svg(result: &TimelineResult, parsed: &ParsedModel) -> String {
    let per_group = 2 * result.backends.len();
    let group_w = per_group as f64 * BAR_W;
    let width = LEFT + result.steps.len() as f64 * (group_w + GAP) + 40.0;
    let legend_h = 20.0 * result.backends.len() as f64 + 20.0;
    let height = PANEL_H * result.tracked.len() as f64 + legend_h;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (p, var) in result.tracked.iter().enumerate() {
        let top = p as f64 * PANEL_H + 30.0;
        let base = top + PLOT_H;
        let label = parsed.labels(var).first().cloned().unwrap_or_default();
        writeln!(
            s,
            r#"<text x="{LEFT}" y="{:.1}" font-size="13">P({var} = {label}) per step</text>"#,
            top - 10.0
        )
        .unwrap();
        for tick in 0..=4 {
            let v = tick as f64 / 4.0;
            let y = base - v * PLOT_H;
            writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
                width - 30.0,
                LEFT - 6.0,
                y + 4.0
            )
            .unwrap();
        }
        for (g, step) in result.steps.iter().enumerate() {
            let x0 = LEFT + GAP / 2.0 + g as f64 * (group_w + GAP);
            for (b, backend) in result.backends.iter().enumerate() {
                let r = &step.records[backend];
                for (k, (value, opacity)) in [
                    (r.priors[var].get(0), 0.45),
                    (r.posteriors[var].get(0), 1.0),
                ]
                .into_iter()
                .enumerate()
                {
                    let x = x0 + (2 * b + k) as f64 * BAR_W;
                    let h = value * PLOT_H;
                    writeln!(
                        s,
                        r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}" fill-opacity="{opacity}"><title>{} {} t={}: {value:.5}</title></rect>"#,
                        base - h,
                        BAR_W - 1.0,
                        colour(*backend),
                        backend.name(),
                        if k == 0 { "prior" } else { "posterior" },
                        step.step
                    )
                    .unwrap();
                }
            }
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t = {}</text>"#,
                x0 + group_w / 2.0,
                base + 16.0,
                step.step
            )
            .unwrap();
        }
    }
    let legend_top = PANEL_H * result.tracked.len() as f64 + 10.0;
    for (b, backend) in result.backends.iter().enumerate() {
        let y = legend_top + 20.0 * b as f64;
        writeln!(
            s,
            r#"<rect x="{LEFT}" y="{y:.1}" width="10" height="10" fill="{c}" fill-opacity="0.45"/><rect x="{:.1}" y="{y:.1}" width="10" height="10" fill="{c}"/><text x="{:.1}" y="{:.1}">{} (prior, posterior)</text>"#,
            LEFT + 12.0,
            LEFT + 28.0,
            y + 9.0,
            backend.name(),
            c = colour(*backend)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
