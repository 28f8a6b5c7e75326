//! Grading and persistence: the pass/fail report, the machine table (CSV)
//! and the structured log (JSON).
//!
//! Every pass/fail line is graded against a threshold from the
//! configuration's `[tolerances]` section.  A level is live when the
//! predicted modulus clears `live_abs`; live levels are graded relatively
//! (`match_rel`), dead levels absolutely (`dead_abs`).  Power-law fits are
//! reported as information, not grades: the grading happens per level,
//! where the tolerance semantics are unambiguous.
//!
//! The CSV is bit-identical across reruns of the same configuration; the
//! wall-clock data lives only in the JSON log.

use crate::config::ExperimentConfig;
use crate::experiment::{PredictionState, ResultRecord, RunData, Status};
use anyhow::{Context, Result};
use serde::Serialize;
use std::path::Path;
use szegolab::asymptotics::fit_power_law;
use szegolab::C64;

/// One line of the report: information or a graded check.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportItem {
    Info { text: String },
    Check {
        label: String,
        passed: bool,
        detail: String,
    },
}

fn info(text: impl Into<String>) -> ReportItem {
    ReportItem::Info { text: text.into() }
}

fn check(label: impl Into<String>, passed: bool, detail: impl Into<String>) -> ReportItem {
    ReportItem::Check {
        label: label.into(),
        passed,
        detail: detail.into(),
    }
}

/// True when no graded line failed.
pub fn verdict(items: &[ReportItem]) -> bool {
    items.iter().all(|item| match item {
        ReportItem::Check { passed, .. } => *passed,
        ReportItem::Info { .. } => true,
    })
}

/// Grades a finished run against the configured tolerances.
pub fn grade(config: &ExperimentConfig, data: &RunData) -> Vec<ReportItem> {
    let tol = &config.tolerances;
    let mut items = Vec::new();

    items.push(info(format!("experiment {}", data.experiment)));
    items.push(info(format!(
        "model: S^{} over a base of complex dimension {}, normalization {}",
        2 * config.model.n + 1,
        config.model.n,
        config.model.normalization
    )));
    items.push(info(format!(
        "levels: {} in [{}, {}] (step {}, parity {})",
        config.levels().len(),
        config.k_range.min,
        config.k_range.max,
        config.k_range.step,
        config.k_range.parity
    )));
    if data.cache_hits > 0 {
        items.push(info(format!(
            "cache: {} of {} values reused",
            data.cache_hits,
            data.records.len()
        )));
    }

    let diag = &data.lambda_diag;
    items.push(check(
        format!("legendrian diagnostics ({})", data.lambda_name),
        diag.passes(tol.legendrian),
        format!(
            "max |alpha| = {:.3e}, max |omega| = {:.3e}, sphere deviation = {:.3e}, \
             min density = {:.3e} over {} samples, tolerance {:.1e}",
            diag.max_alpha,
            diag.max_omega,
            diag.max_sphere_deviation,
            diag.min_density,
            diag.samples,
            tol.legendrian
        ),
    ));
    if let Some((name, diag)) = &data.sigma_diag {
        items.push(check(
            format!("legendrian diagnostics ({name})"),
            diag.passes(tol.legendrian),
            format!(
                "max |alpha| = {:.3e}, max |omega| = {:.3e}, sphere deviation = {:.3e}, \
                 min density = {:.3e} over {} samples, tolerance {:.1e}",
                diag.max_alpha,
                diag.max_omega,
                diag.max_sphere_deviation,
                diag.min_density,
                diag.samples,
                tol.legendrian
            ),
        ));
    }
    if let Some(report) = &data.transversality {
        items.push(info(format!(
            "zero level: {} intersection point(s), expected dimension {}, \
             min principal angle {:.4} rad",
            report.points.len(),
            report.expected_dim,
            report.min_angle
        )));
    }

    for sequence in &data.sequences {
        let rows: Vec<&ResultRecord> = data
            .records
            .iter()
            .filter(|r| r.probe == sequence.id && r.isotype == sequence.label)
            .collect();
        let name = format!("sequence {} (isotype {})", sequence.id, sequence.label);

        match &sequence.prediction {
            PredictionState::Ready(p) => items.push(info(format!(
                "{name}: prediction k^{:.2} with {} oscillatory term(s)",
                p.exponent(),
                p.terms().len()
            ))),
            PredictionState::Vanishing => items.push(info(format!(
                "{name}: no return elements, leading term vanishes (rapid-decay regime)"
            ))),
            PredictionState::Failed(message) => {
                items.push(check(format!("{name}: prediction"), false, message.clone()));
            }
        }

        let failed: Vec<&&ResultRecord> =
            rows.iter().filter(|r| r.status == Status::Failed).collect();
        if !failed.is_empty() {
            let first = failed[0]
                .error
                .as_deref()
                .unwrap_or("unknown failure")
                .to_string();
            items.push(check(
                format!("{name}: computations"),
                false,
                format!("{} of {} level(s) failed; first: {first}", failed.len(), rows.len()),
            ));
        }

        let graded: Vec<(&&ResultRecord, C64, C64)> = rows
            .iter()
            .filter_map(|r| match (r.computed, r.predicted) {
                (Some(c), Some(p)) => Some((r, c, p)),
                _ => None,
            })
            .collect();
        let live: Vec<_> = graded
            .iter()
            .filter(|(_, _, p)| p.norm() > tol.live_abs)
            .collect();
        let dead: Vec<_> = graded
            .iter()
            .filter(|(_, _, p)| p.norm() <= tol.live_abs)
            .collect();
        items.push(info(format!(
            "{name}: {} live and {} dead level(s)",
            live.len(),
            dead.len()
        )));

        if !live.is_empty() {
            let max_rel = live
                .iter()
                .map(|(_, c, p)| (c.norm() - p.norm()).abs() / p.norm())
                .fold(0.0f64, f64::max);
            items.push(check(
                format!("{name}: live-level match"),
                max_rel <= tol.match_rel,
                format!(
                    "max relative modulus deviation {:.3e} over {} level(s), tolerance {:.2e}",
                    max_rel,
                    live.len(),
                    tol.match_rel
                ),
            ));
        }
        if !dead.is_empty() {
            let max_abs = dead.iter().map(|(_, c, _)| c.norm()).fold(0.0f64, f64::max);
            items.push(check(
                format!("{name}: dead-level ceiling"),
                max_abs <= tol.dead_abs,
                format!(
                    "max computed modulus {:.3e} over {} level(s), ceiling {:.2e}",
                    max_abs,
                    dead.len(),
                    tol.dead_abs
                ),
            ));
        }

        let entries: Vec<(usize, C64)> = rows
            .iter()
            .filter_map(|r| r.computed.map(|c| (r.k, c)))
            .collect();
        match fit_power_law(&entries, None) {
            Ok(fit) => items.push(info(format!(
                "{name}: fit |value| is about {:.6} * k^{:.4} over {} level(s)",
                fit.coefficient_modulus,
                fit.exponent,
                fit.subsequence.len()
            ))),
            Err(e) => items.push(info(format!("{name}: fit unavailable ({e})"))),
        }
        if let PredictionState::Ready(p) = &sequence.prediction {
            if !live.is_empty() {
                match fit_power_law(&entries, Some(p)) {
                    Ok(fit) => items.push(info(format!(
                        "{name}: interference-corrected fit {:.6} * k^{:.4} \
                         (prediction exponent {:.4})",
                        fit.coefficient_modulus,
                        fit.exponent,
                        p.exponent()
                    ))),
                    Err(e) => {
                        items.push(info(format!("{name}: corrected fit unavailable ({e})")))
                    }
                }
            }
        }

        if let Some(orders) = tol.rapid_decay_orders {
            let item = match szegolab::asymptotics::rapid_decay_test(&entries, orders as usize) {
                Ok(true) => check(
                    format!("{name}: rapid decay"),
                    true,
                    format!("decays faster than k^-N for N up to {orders}"),
                ),
                Ok(false) => check(
                    format!("{name}: rapid decay"),
                    false,
                    format!("fails the k^-N decay test at some N <= {orders}"),
                ),
                Err(e) => check(format!("{name}: rapid decay"), false, e.to_string()),
            };
            items.push(item);
        }
    }

    items
}

/// Renders the report as plain text, one line per item, with a verdict
/// line at the end.
pub fn render(items: &[ReportItem]) -> String {
    let mut lines = Vec::with_capacity(items.len() + 1);
    let mut checks = 0usize;
    let mut failures = 0usize;
    for item in items {
        match item {
            ReportItem::Info { text } => lines.push(text.clone()),
            ReportItem::Check {
                label,
                passed,
                detail,
            } => {
                checks += 1;
                if !passed {
                    failures += 1;
                }
                let grade = if *passed { "PASS" } else { "FAIL" };
                lines.push(format!("{label}: {grade} ({detail})"));
            }
        }
    }
    if failures == 0 {
        lines.push(format!("verdict: PASS ({checks}/{checks} checks)"));
    } else {
        lines.push(format!("verdict: FAIL ({failures} of {checks} checks failed)"));
    }
    lines.join("\n") + "\n"
}

/// Shortest round-trip decimal for a float cell.
fn cell(value: f64) -> String {
    format!("{value}")
}

/// Writes the machine table.  Columns, in order: experiment, probe, k,
/// varpi, computed_re, computed_im, predicted_re, predicted_im, status.
/// Failed cells are empty, timing is deliberately absent, and float cells
/// use the shortest representation that parses back to the same bits, so
/// reruns of one configuration produce byte-identical files.
pub fn write_results_csv(path: &Path, data: &RunData) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating results table {}", path.display()))?;
    writer
        .write_record([
            "experiment",
            "probe",
            "k",
            "varpi",
            "computed_re",
            "computed_im",
            "predicted_re",
            "predicted_im",
            "status",
        ])
        .context("writing the results header")?;
    for record in &data.records {
        let (c_re, c_im) = match record.computed {
            Some(c) => (cell(c.re), cell(c.im)),
            None => (String::new(), String::new()),
        };
        let (p_re, p_im) = match record.predicted {
            Some(p) => (cell(p.re), cell(p.im)),
            None => (String::new(), String::new()),
        };
        writer
            .write_record([
                data.experiment.as_str(),
                record.probe.as_str(),
                &record.k.to_string(),
                record.isotype.as_str(),
                &c_re,
                &c_im,
                &p_re,
                &p_im,
                record.status.as_str(),
            ])
            .with_context(|| format!("writing results row k = {}", record.k))?;
    }
    writer.flush().context("flushing the results table")?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    probe: &'a str,
    k: usize,
    varpi: &'a str,
    computed: Option<[f64; 2]>,
    predicted: Option<[f64; 2]>,
    status: Status,
    millis: f64,
    cached: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct JsonLog<'a> {
    schema_version: u32,
    experiment: &'a str,
    verdict: bool,
    wall_millis: f64,
    config: &'a ExperimentConfig,
    report: &'a [ReportItem],
    records: Vec<JsonRecord<'a>>,
}

/// Writes the structured log: the effective configuration, the report
/// items, and per-task records including timings and cache hits.
pub fn write_json_log(
    path: &Path,
    config: &ExperimentConfig,
    data: &RunData,
    items: &[ReportItem],
) -> Result<()> {
    let records: Vec<JsonRecord> = data
        .records
        .iter()
        .map(|r| JsonRecord {
            probe: &r.probe,
            k: r.k,
            varpi: &r.isotype,
            computed: r.computed.map(|c| [c.re, c.im]),
            predicted: r.predicted.map(|p| [p.re, p.im]),
            status: r.status,
            millis: r.millis,
            cached: r.cached,
            error: r.error.as_deref(),
        })
        .collect();
    let log = JsonLog {
        schema_version: crate::config::SCHEMA_VERSION,
        experiment: &data.experiment,
        verdict: verdict(items),
        wall_millis: data.wall_millis,
        config,
        report: items,
        records,
    };
    let text = serde_json::to_string_pretty(&log).context("serializing the run log")?;
    std::fs::write(path, text).with_context(|| format!("writing run log {}", path.display()))
}
