//! Plot-ready tables derived from a finished results file.
//!
//! Each kind reads the machine table written by a run and emits plain CSV
//! with a `#`-commented preamble documenting every column, one file per
//! (sequence, isotype).  Only rows whose experiment id matches the current
//! configuration are accepted: plot data must never silently mix
//! configurations.
//!
//! Kinds: `growth` and `pairing` tabulate computed against predicted
//! moduli level by level, `profile` tabulates the spatial decay across
//! displaced probes at the deepest level, and `decay` multiplies the
//! computed modulus by k^N to make rapid decay visible on a log axis.

use crate::config::ExperimentConfig;
use crate::experiment::isotype_label;
use anyhow::{bail, Context, Result};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// The table a plot file is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// Computed and predicted moduli per level, one file per sequence.
    Growth,
    /// Spatial profile across the displaced probes at the deepest level.
    Profile,
    /// Computed and predicted pairing moduli per level.
    Pairing,
    /// Computed modulus weighted by k^N for the rapid-decay regime.
    Decay,
}

impl PlotKind {
    fn token(self) -> &'static str {
        match self {
            PlotKind::Growth => "growth",
            PlotKind::Profile => "profile",
            PlotKind::Pairing => "pairing",
            PlotKind::Decay => "decay",
        }
    }
}

/// One row of the results table, as written by a run.
#[derive(Debug, Deserialize)]
struct Row {
    experiment: String,
    probe: String,
    k: usize,
    varpi: String,
    computed_re: Option<f64>,
    computed_im: Option<f64>,
    predicted_re: Option<f64>,
    predicted_im: Option<f64>,
    status: String,
}

impl Row {
    fn computed_modulus(&self) -> Option<f64> {
        match (self.computed_re, self.computed_im) {
            (Some(re), Some(im)) => Some(re.hypot(im)),
            _ => None,
        }
    }

    fn predicted_modulus(&self) -> Option<f64> {
        match (self.predicted_re, self.predicted_im) {
            (Some(re), Some(im)) => Some(re.hypot(im)),
            _ => None,
        }
    }
}

/// Isotype label as a file-name token: the action-free column "-" becomes
/// "free", separators become '_' and minus signs 'm' ("1;-2" is "1_m2").
fn isotype_token(label: &str) -> String {
    if label == "-" {
        return "free".to_string();
    }
    label
        .chars()
        .map(|c| match c {
            ';' => '_',
            '-' => 'm',
            other => other,
        })
        .collect()
}

fn read_rows(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<Row>> {
    let path = out_dir.join(&config.output.results);
    let mut reader = csv::Reader::from_path(&path)
        .with_context(|| format!("reading results table {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.deserialize::<Row>() {
        rows.push(record.with_context(|| format!("parsing {}", path.display()))?);
    }
    let id = config.experiment_id();
    if rows.iter().any(|r| r.experiment != id) {
        bail!(
            "results table {} holds experiment(s) other than {id}; \
             rerun the experiment for this configuration first",
            path.display()
        );
    }
    rows.retain(|r| r.status == "ok");
    if rows.is_empty() {
        bail!(
            "results table {} has no successful rows to plot",
            path.display()
        );
    }
    Ok(rows)
}

/// The isotype labels of the configuration, in sweep order.
fn labels(config: &ExperimentConfig) -> Vec<String> {
    if config.action.is_some() {
        config.varpi.iter().map(|v| isotype_label(v)).collect()
    } else {
        vec!["-".to_string()]
    }
}

fn float(value: f64) -> String {
    format!("{value}")
}

fn write_table(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text).with_context(|| format!("writing plot table {}", path.display()))?;
    Ok(path.to_path_buf())
}

/// Emits the requested plot tables next to the results file and returns the
/// paths written.
pub fn emit(config: &ExperimentConfig, out_dir: &Path, kind: PlotKind) -> Result<Vec<PathBuf>> {
    let rows = read_rows(config, out_dir)?;
    match kind {
        PlotKind::Growth => emit_per_level(config, out_dir, &rows, kind),
        PlotKind::Pairing => emit_per_level(config, out_dir, &rows, kind),
        PlotKind::Profile => emit_profile(config, out_dir, &rows),
        PlotKind::Decay => emit_decay(config, out_dir, &rows),
    }
}

/// Sequence ids a per-level kind tabulates: the probes for `growth`, the
/// pairing sequence for `pairing`.
fn sequence_ids(config: &ExperimentConfig, kind: PlotKind) -> Result<Vec<String>> {
    match kind {
        PlotKind::Pairing => match &config.pairing {
            Some(p) => Ok(vec![p.id.clone()]),
            None => bail!("pairing plots need a [pairing] section in the configuration"),
        },
        _ => Ok(config.probes.iter().map(|p| p.id.clone()).collect()),
    }
}

fn emit_per_level(
    config: &ExperimentConfig,
    out_dir: &Path,
    rows: &[Row],
    kind: PlotKind,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for id in sequence_ids(config, kind)? {
        for label in labels(config) {
            let mut selected: Vec<&Row> = rows
                .iter()
                .filter(|r| r.probe == id && r.varpi == label)
                .collect();
            if selected.is_empty() {
                continue;
            }
            selected.sort_by_key(|r| r.k);
            let mut text = String::new();
            writeln!(text, "# {} table for sequence {id}, isotype {label}", kind.token()).unwrap();
            writeln!(text, "# k: Fourier level").unwrap();
            writeln!(text, "# modulus: computed |value| at level k").unwrap();
            writeln!(text, "# predicted: leading-term modulus at level k").unwrap();
            writeln!(
                text,
                "# ratio: modulus / predicted, nan where the prediction vanishes"
            )
            .unwrap();
            writeln!(text, "k,modulus,predicted,ratio").unwrap();
            for row in selected {
                let modulus = row.computed_modulus().expect("ok rows carry values");
                let predicted = row.predicted_modulus().expect("ok rows carry predictions");
                let ratio = if predicted > 0.0 {
                    modulus / predicted
                } else {
                    f64::NAN
                };
                writeln!(
                    text,
                    "{},{},{},{}",
                    row.k,
                    float(modulus),
                    float(predicted),
                    float(ratio)
                )
                .unwrap();
            }
            let name = format!(
                "plot-{}-{}-{}.csv",
                kind.token(),
                id,
                isotype_token(&label)
            );
            written.push(write_table(&out_dir.join(name), &text)?);
        }
    }
    if written.is_empty() {
        bail!("no successful rows matched the requested plot kind");
    }
    Ok(written)
}

fn emit_profile(
    config: &ExperimentConfig,
    out_dir: &Path,
    rows: &[Row],
) -> Result<Vec<PathBuf>> {
    let reference = config
        .probes
        .iter()
        .find(|p| p.w.is_empty())
        .map(|p| p.id.clone());
    let Some(reference) = reference else {
        bail!("profile plots need one probe without displacement as the reference");
    };
    if config.probes.iter().all(|p| p.w.is_empty()) {
        bail!("profile plots need at least one displaced probe");
    }

    let mut written = Vec::new();
    for label in labels(config) {
        let deepest = rows
            .iter()
            .filter(|r| r.probe == reference && r.varpi == label)
            .map(|r| r.k)
            .max();
        let Some(deepest) = deepest else { continue };
        let at = |id: &str| {
            rows.iter()
                .find(|r| r.probe == id && r.varpi == label && r.k == deepest)
        };
        let anchor = at(&reference).expect("the deepest level came from the reference");
        let anchor_modulus = anchor.computed_modulus().expect("ok rows carry values");
        let anchor_predicted = anchor.predicted_modulus().expect("ok rows carry predictions");
        if anchor_modulus == 0.0 {
            bail!("the reference probe vanishes at k = {deepest}; no profile to normalize");
        }

        let mut table: Vec<(f64, f64, f64)> = Vec::new();
        for probe in &config.probes {
            let Some(row) = at(&probe.id) else { continue };
            // .abs() because the empty sum is -0.0 and sqrt keeps the sign.
            let w_norm = probe.w.iter().map(|x| x * x).sum::<f64>().sqrt().abs();
            let ratio = row.computed_modulus().expect("ok rows carry values") / anchor_modulus;
            let gaussian = if anchor_predicted > 0.0 {
                row.predicted_modulus().expect("ok rows carry predictions") / anchor_predicted
            } else {
                f64::NAN
            };
            table.push((w_norm, ratio, gaussian));
        }
        table.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut text = String::new();
        writeln!(
            text,
            "# spatial profile at level k = {deepest}, isotype {label}, \
             normalized by probe {reference}"
        )
        .unwrap();
        writeln!(text, "# w_norm: euclidean length of the chart displacement w").unwrap();
        writeln!(text, "# ratio: computed |value(w)| / |value(0)|").unwrap();
        writeln!(
            text,
            "# gaussian: predicted |value(w)| / |value(0)|, the expected off-diagonal decay"
        )
        .unwrap();
        writeln!(text, "w_norm,ratio,gaussian").unwrap();
        for (w_norm, ratio, gaussian) in table {
            writeln!(
                text,
                "{},{},{}",
                float(w_norm),
                float(ratio),
                float(gaussian)
            )
            .unwrap();
        }
        let name = format!("plot-profile-{}.csv", isotype_token(&label));
        written.push(write_table(&out_dir.join(name), &text)?);
    }
    if written.is_empty() {
        bail!("no successful rows matched the requested plot kind");
    }
    Ok(written)
}

fn emit_decay(config: &ExperimentConfig, out_dir: &Path, rows: &[Row]) -> Result<Vec<PathBuf>> {
    let Some(orders) = config.tolerances.rapid_decay_orders else {
        bail!("decay plots need tolerances.rapid_decay_orders in the configuration");
    };
    let mut written = Vec::new();
    for id in config.probes.iter().map(|p| p.id.clone()) {
        for label in labels(config) {
            let mut selected: Vec<&Row> = rows
                .iter()
                .filter(|r| r.probe == id && r.varpi == label)
                .collect();
            if selected.is_empty() {
                continue;
            }
            selected.sort_by_key(|r| r.k);
            let mut text = String::new();
            writeln!(text, "# decay table for sequence {id}, isotype {label}").unwrap();
            writeln!(text, "# k: Fourier level").unwrap();
            writeln!(text, "# modulus: computed |value| at level k").unwrap();
            writeln!(
                text,
                "# weighted: modulus * k^{orders}; bounded iff the value is O(k^-{orders})"
            )
            .unwrap();
            writeln!(text, "k,modulus,weighted").unwrap();
            for row in selected {
                let modulus = row.computed_modulus().expect("ok rows carry values");
                let weighted = modulus * (row.k as f64).powi(orders as i32);
                writeln!(text, "{},{},{}", row.k, float(modulus), float(weighted)).unwrap();
            }
            let name = format!("plot-decay-{}-{}.csv", id, isotype_token(&label));
            written.push(write_table(&out_dir.join(name), &text)?);
        }
    }
    if written.is_empty() {
        bail!("no successful rows matched the requested plot kind");
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotype_tokens_are_file_safe() {
        assert_eq!(isotype_token("-"), "free");
        assert_eq!(isotype_token("0"), "0");
        assert_eq!(isotype_token("1;-2"), "1_m2");
        assert!(isotype_token("-3;14").chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
    }

    #[test]
    fn growth_tables_document_columns_and_compute_ratios() {
        let dir = tempfile::tempdir().unwrap();
        let config: ExperimentConfig = toml::from_str(
            r#"
                schema_version = 1
                [model]
                n = 1
                [legendrian]
                family = "knot"
                parameters = [0.0]
                [[probes]]
                id = "peak"
                point = { kind = "legendrian", params = [0.0] }
                [k_range]
                min = 10
                max = 12
                step = 2
                [tolerances]
                legendrian = 1.0e-8
                match_rel = 0.05
                live_abs = 1.0e-6
                dead_abs = 1.0e-8
                [output]
                results = "results.csv"
                log = "run.json"
                report = "report.txt"
            "#,
        )
        .unwrap();
        let id = config.experiment_id();
        let results = format!(
            "experiment,probe,k,varpi,computed_re,computed_im,predicted_re,predicted_im,status\n\
             {id},peak,10,-,2.0,0.0,1.0,0.0,ok\n\
             {id},peak,12,-,0.0,3.0,0.0,1.5,ok\n\
             {id},peak,14,-,,,1.0,0.0,failed\n"
        );
        std::fs::write(dir.path().join("results.csv"), results).unwrap();
        let written = emit(&config, dir.path(), PlotKind::Growth).unwrap();
        assert_eq!(written.len(), 1);
        let text = std::fs::read_to_string(&written[0]).unwrap();
        assert!(text.contains("# k: Fourier level"));
        assert!(text.contains("k,modulus,predicted,ratio"));
        assert!(text.contains("10,2,1,2"));
        assert!(text.contains("12,3,1.5,2"));
        assert!(!text.contains("14"));
    }

    #[test]
    fn foreign_results_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let config: ExperimentConfig = toml::from_str(
            r#"
                schema_version = 1
                [model]
                n = 1
                [legendrian]
                family = "knot"
                parameters = [0.0]
                [[probes]]
                id = "peak"
                point = { kind = "legendrian", params = [0.0] }
                [k_range]
                min = 10
                max = 12
                step = 2
                [tolerances]
                legendrian = 1.0e-8
                match_rel = 0.05
                live_abs = 1.0e-6
                dead_abs = 1.0e-8
                [output]
                results = "results.csv"
                log = "run.json"
                report = "report.txt"
            "#,
        )
        .unwrap();
        let results = "experiment,probe,k,varpi,computed_re,computed_im,predicted_re,predicted_im,status\n\
                       0000000000000000,peak,10,-,1.0,0.0,1.0,0.0,ok\n";
        std::fs::write(dir.path().join("results.csv"), results).unwrap();
        let err = emit(&config, dir.path(), PlotKind::Growth).unwrap_err();
        assert!(err.to_string().contains("different configuration") || err.to_string().contains("other than"));
    }
}
