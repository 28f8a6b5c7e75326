//! Configuration resolution and the experiment runner.
//!
//! A validated configuration is resolved into live objects (the immersion,
//! the torus action, normalized probe points with their canonical charts),
//! the leading-term prediction is assembled once per (sequence, isotype),
//! and the independent (probe, ϖ, k) tasks fan out over a rayon pool.  The
//! probe with displacement w evaluates the state at ρ(w/√k) in the
//! canonical Heisenberg chart at its base point, the convention the
//! predictors read w in.
//!
//! Computed values are memoized on disk per (sequence, ϖ, k), keyed by the
//! experiment id, so pairing experiments and repeated sweeps do not pay for
//! the same quadrature twice.  Every computation is deterministic, which is
//! what makes the memoization safe and the result files bit-identical
//! across reruns.

use crate::config::{ExperimentConfig, FLambdaSpec, PointSpec, SCHEMA_VERSION};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;
use szegolab::asymptotics::{
    predict_action_free, predict_pairing_transverse, predict_theorem_main, AsymptoticsError,
    LeadingTermPrediction,
};
use szegolab::geometry::{heisenberg_chart, BundlePoint, HeisenbergChart, TorusAction};
use szegolab::legendrian::{
    builtin_knot, builtin_torus_product, legendrian_check, transversality_check, LegendrianCheck,
    LegendrianImmersion, TransversalityReport,
};
use szegolab::linalg::real_to_complex;
use szegolab::states::{compute_u_k, compute_u_k_varpi, hermitian_product};
use szegolab::{C64, CVector, RVector};

/// Sample density per parameter circle for the immersion diagnostics grid.
const DIAG_GRID: usize = 64;

/// A probe resolved to geometry: the unit base point, the canonical chart
/// at it, and the optional chart displacement.
pub struct ResolvedProbe {
    pub id: String,
    pub base: BundlePoint,
    pub chart: HeisenbergChart,
    pub w: Option<RVector>,
}

/// One isotype column of the sweep.
pub struct Isotype {
    pub varpi: Vec<i64>,
    pub label: String,
}

/// A configuration resolved into live objects.
pub struct Experiment {
    pub id: String,
    pub lambda: LegendrianImmersion,
    pub sigma: Option<LegendrianImmersion>,
    pub pairing_id: Option<String>,
    pub action: Option<TorusAction>,
    pub probes: Vec<ResolvedProbe>,
    pub levels: Vec<usize>,
    pub isotypes: Vec<Isotype>,
}

/// What became of a sequence's leading-term prediction.
pub enum PredictionState {
    Ready(LeadingTermPrediction),
    /// No return elements: the leading term vanishes identically and the
    /// state decays rapidly at the probe.
    Vanishing,
    Failed(String),
}

/// One (sequence, isotype) column of the result table.
pub struct SequenceData {
    pub id: String,
    pub label: String,
    pub prediction: PredictionState,
}

/// Row status in the machine table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Computed and predicted values both present.
    Ok,
    /// Computed value present, prediction failed for the sequence.
    Partial,
    /// The computation itself failed.
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Partial => "partial",
            Status::Failed => "failed",
        }
    }
}

/// One (probe, ϖ, k) result row.
pub struct ResultRecord {
    pub probe: String,
    pub k: usize,
    pub isotype: String,
    pub computed: Option<C64>,
    pub predicted: Option<C64>,
    pub status: Status,
    pub millis: f64,
    pub cached: bool,
    pub error: Option<String>,
}

/// Everything a run produces before grading: rows, sequence predictions,
/// and the structural diagnostics.
pub struct RunData {
    pub experiment: String,
    pub records: Vec<ResultRecord>,
    pub sequences: Vec<SequenceData>,
    pub lambda_name: String,
    pub lambda_diag: LegendrianCheck,
    pub sigma_diag: Option<(String, LegendrianCheck)>,
    pub transversality: Option<TransversalityReport>,
    pub cache_hits: usize,
    pub wall_millis: f64,
}

/// Builds an immersion from a family section.
fn build_immersion(
    family: &str,
    parameters: &[f64],
    f_lambda: &FLambdaSpec,
) -> Result<LegendrianImmersion> {
    let base = match family {
        "knot" => builtin_knot(parameters[0]),
        "torus-product" => builtin_torus_product(parameters.len(), parameters),
        other => bail!("unknown legendrian family {other:?}"),
    };
    Ok(match *f_lambda {
        FLambdaSpec::Unit => base,
        FLambdaSpec::Cosine {
            amplitude,
            frequency,
        } => {
            let m = f64::from(frequency);
            base.with_amplitude(move |t| C64::new(1.0 + amplitude * (m * t[0]).cos(), 0.0))
        }
    })
}

/// Resolves a validated configuration into live objects.  Probe points are
/// unit-normalized here; a probe that cannot be placed on the sphere is an
/// error, not a silent repair.
pub fn resolve(config: &ExperimentConfig) -> Result<Experiment> {
    let n = config.model.n;
    let lambda = build_immersion(
        &config.legendrian.family,
        &config.legendrian.parameters,
        &config.legendrian.f_lambda,
    )?;
    let (sigma, pairing_id) = match &config.pairing {
        Some(p) => (
            Some(build_immersion(&p.family, &p.parameters, &p.f_lambda)?),
            Some(p.id.clone()),
        ),
        None => (None, None),
    };
    let action = match &config.action {
        Some(a) => {
            let g = a.weights.len();
            let shift = if a.shift.is_empty() {
                RVector::zeros(g)
            } else {
                RVector::from_column_slice(&a.shift)
            };
            Some(
                TorusAction::new(n + 1, a.weights.clone(), shift)
                    .context("building the torus action")?,
            )
        }
        None => None,
    };

    let mut probes = Vec::with_capacity(config.probes.len());
    for section in &config.probes {
        let base = match &section.point {
            PointSpec::Legendrian {
                params,
                circle_shift,
            } => lambda
                .point(params)
                .with_context(|| format!("probe {:?}: placing the point on the legendrian", section.id))?
                .circle_shift(*circle_shift),
            PointSpec::Ambient { re, im } => {
                let coords = CVector::from_fn(n + 1, |i, _| C64::new(re[i], im[i]));
                BundlePoint::normalized(coords)
                    .with_context(|| format!("probe {:?}: normalizing the ambient point", section.id))?
            }
        };
        let chart = heisenberg_chart(&base, &[])
            .with_context(|| format!("probe {:?}: canonical chart at the base point", section.id))?;
        let w = if section.w.is_empty() {
            None
        } else {
            Some(RVector::from_column_slice(&section.w))
        };
        probes.push(ResolvedProbe {
            id: section.id.clone(),
            base,
            chart,
            w,
        });
    }

    let isotypes = if action.is_some() {
        config
            .varpi
            .iter()
            .map(|v| Isotype {
                varpi: v.clone(),
                label: isotype_label(v),
            })
            .collect()
    } else {
        vec![Isotype {
            varpi: Vec::new(),
            label: "-".to_string(),
        }]
    };

    Ok(Experiment {
        id: config.experiment_id(),
        lambda,
        sigma,
        pairing_id,
        action,
        probes,
        levels: config.levels(),
        isotypes,
    })
}

/// Human- and file-stable isotype label: "-" for the action-free column,
/// otherwise the components of ϖ joined by ';'.
pub fn isotype_label(varpi: &[i64]) -> String {
    if varpi.is_empty() {
        "-".to_string()
    } else {
        varpi
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl Experiment {
    /// Chart displacement of a probe's w as the complex vector the
    /// predictors take: (p, q) ↦ p + iq, zero when the probe has no w.
    fn probe_w_complex(&self, probe: &ResolvedProbe) -> CVector {
        match &probe.w {
            Some(w) => real_to_complex(w),
            None => CVector::zeros(probe.base.base_dim()),
        }
    }

    /// Multi-line summary used by the validate subcommand.
    pub fn summary(&self) -> String {
        let n = self
            .probes
            .first()
            .map(|p| p.base.base_dim())
            .or_else(|| self.levels.first().map(|_| self.lambda.ambient() - 1))
            .unwrap_or(self.lambda.ambient() - 1);
        let mut lines = vec![
            format!("experiment {}", self.id),
            format!("model: S^{} over a base of complex dimension {}", 2 * n + 1, n),
            format!("legendrian: {} (dim {})", self.lambda.name(), self.lambda.dim()),
        ];
        if let Some(sigma) = &self.sigma {
            lines.push(format!(
                "pairing partner: {} (sequence id {:?})",
                sigma.name(),
                self.pairing_id.as_deref().unwrap_or("pairing")
            ));
        }
        match &self.action {
            Some(action) => lines.push(format!(
                "action: rank {} torus, weights {:?}",
                action.g(),
                action.weights()
            )),
            None => lines.push("action: none (circle fiber only)".to_string()),
        }
        let labels: Vec<&str> = self.isotypes.iter().map(|i| i.label.as_str()).collect();
        lines.push(format!("isotypes: {}", labels.join(", ")));
        lines.push(format!(
            "probes: {} ({} with displacement)",
            self.probes.len(),
            self.probes.iter().filter(|p| p.w.is_some()).count()
        ));
        lines.push(format!(
            "levels: {} between k = {} and k = {}",
            self.levels.len(),
            self.levels.first().copied().unwrap_or(0),
            self.levels.last().copied().unwrap_or(0)
        ));
        lines.join("\n")
    }
}

/// What a task computes: a probe's state value or the Hermitian pairing.
#[derive(Clone, Copy)]
enum TaskKind {
    Probe(usize),
    Pairing,
}

struct Task {
    kind: TaskKind,
    sequence: usize,
    isotype: usize,
    k: usize,
    key: String,
}

/// On-disk memo of computed values, keyed by the experiment id.  Cached
/// values must round-trip bit-exactly or warm reruns drift by an ulp, so
/// serde_json's float_roundtrip feature is required here.
#[derive(Serialize, Deserialize)]
struct CacheFile {
    schema_version: u32,
    experiment: String,
    values: BTreeMap<String, (f64, f64)>,
}

/// Per-experiment value cache; a stale or foreign file is discarded.
pub struct ValueCache {
    path: PathBuf,
    experiment: String,
    values: BTreeMap<String, (f64, f64)>,
}

impl ValueCache {
    pub fn load(out_dir: &Path, experiment: &str) -> Self {
        let path = out_dir.join(format!("cache-{experiment}.json"));
        let values = std::fs::read_to_string(&path)
            .ok()
            .and_then(|text| serde_json::from_str::<CacheFile>(&text).ok())
            .filter(|file| file.schema_version == SCHEMA_VERSION && file.experiment == experiment)
            .map(|file| file.values)
            .unwrap_or_default();
        ValueCache {
            path,
            experiment: experiment.to_string(),
            values,
        }
    }

    pub fn get(&self, key: &str) -> Option<C64> {
        self.values.get(key).map(|&(re, im)| C64::new(re, im))
    }

    pub fn insert(&mut self, key: String, value: C64) {
        self.values.insert(key, (value.re, value.im));
    }

    pub fn store(&self) -> Result<()> {
        let file = CacheFile {
            schema_version: SCHEMA_VERSION,
            experiment: self.experiment.clone(),
            values: self.values.clone(),
        };
        let text = serde_json::to_string_pretty(&file).expect("cache serializes");
        std::fs::write(&self.path, text)
            .with_context(|| format!("writing value cache {}", self.path.display()))
    }
}

/// Assembles the prediction for one (sequence, isotype) column.  A missing
/// return set is the rapid-decay regime, not a failure; every other module
/// error is recorded and the computed column still runs.
fn build_prediction(exp: &Experiment, kind: TaskKind, isotype: &Isotype) -> PredictionState {
    let result = match kind {
        TaskKind::Probe(p) => {
            let probe = &exp.probes[p];
            let w = exp.probe_w_complex(probe);
            match &exp.action {
                None => predict_action_free(&probe.base, &exp.lambda, &w),
                Some(action) => {
                    predict_theorem_main(&probe.base, &exp.lambda, action, &isotype.varpi, &w)
                }
            }
        }
        TaskKind::Pairing => {
            let sigma = exp.sigma.as_ref().expect("pairing tasks need a partner");
            let equivariance = exp
                .action
                .as_ref()
                .map(|action| (action, isotype.varpi.as_slice()));
            predict_pairing_transverse(&exp.lambda, sigma, equivariance)
        }
    };
    match result {
        Ok(prediction) => PredictionState::Ready(prediction),
        Err(AsymptoticsError::NoReturnElements) => PredictionState::Vanishing,
        Err(e) => PredictionState::Failed(e.to_string()),
    }
}

fn compute_task(exp: &Experiment, task: &Task) -> Result<C64, String> {
    let isotype = &exp.isotypes[task.isotype];
    let context = |what: &str, e: &dyn std::fmt::Display| {
        format!(
            "{what} (sequence {}, isotype {}, k = {}): {e}",
            sequence_id(exp, task.kind),
            isotype.label,
            task.k
        )
    };
    match task.kind {
        TaskKind::Probe(p) => {
            let probe = &exp.probes[p];
            let point = match &probe.w {
                Some(w) => probe
                    .chart
                    .displace(w, task.k)
                    .map_err(|e| context("displacing the probe", &e))?,
                None => probe.base.clone(),
            };
            match &exp.action {
                None => compute_u_k(&exp.lambda, task.k, &point),
                Some(action) => {
                    compute_u_k_varpi(&exp.lambda, action, &isotype.varpi, task.k, &point)
                }
            }
            .map_err(|e| context("state quadrature", &e))
        }
        TaskKind::Pairing => {
            let sigma = exp.sigma.as_ref().expect("pairing tasks need a partner");
            let equivariance = exp
                .action
                .as_ref()
                .map(|action| (action, isotype.varpi.as_slice()));
            hermitian_product(&exp.lambda, sigma, task.k, equivariance)
                .map_err(|e| context("pairing quadrature", &e))
        }
    }
}

fn sequence_id(exp: &Experiment, kind: TaskKind) -> &str {
    match kind {
        TaskKind::Probe(p) => &exp.probes[p].id,
        TaskKind::Pairing => exp.pairing_id.as_deref().unwrap_or("pairing"),
    }
}

/// Runs the whole experiment: diagnostics, predictions, the parallel task
/// sweep, and the cache update.  The caller owns result persistence.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunData> {
    let started = Instant::now();
    let exp = resolve(config)?;

    let lambda_diag = legendrian_check(&exp.lambda, DIAG_GRID);
    let sigma_diag = exp
        .sigma
        .as_ref()
        .map(|sigma| (sigma.name().to_string(), legendrian_check(sigma, DIAG_GRID)));

    let transversality = match &exp.action {
        Some(action) => Some(
            transversality_check(&exp.lambda, action)
                .context("zero-level transversality check")?,
        ),
        None => None,
    };

    // One prediction per (sequence, isotype) column, assembled serially:
    // each carries a root search, and the columns reuse it across levels.
    let mut kinds: Vec<TaskKind> = (0..exp.probes.len()).map(TaskKind::Probe).collect();
    if exp.sigma.is_some() {
        kinds.push(TaskKind::Pairing);
    }
    let mut sequences = Vec::with_capacity(kinds.len() * exp.isotypes.len());
    for &kind in &kinds {
        for isotype in &exp.isotypes {
            sequences.push(SequenceData {
                id: sequence_id(&exp, kind).to_string(),
                label: isotype.label.clone(),
                prediction: build_prediction(&exp, kind, isotype),
            });
        }
    }

    let mut tasks = Vec::with_capacity(sequences.len() * exp.levels.len());
    for (kind_idx, &kind) in kinds.iter().enumerate() {
        for (isotype_idx, isotype) in exp.isotypes.iter().enumerate() {
            let sequence = kind_idx * exp.isotypes.len() + isotype_idx;
            for &k in &exp.levels {
                let key = format!("{}|{}|{}", sequence_id(&exp, kind), isotype.label, k);
                tasks.push(Task {
                    kind,
                    sequence,
                    isotype: isotype_idx,
                    k,
                    key,
                });
            }
        }
    }

    let mut cache = ValueCache::load(out_dir, &exp.id);
    let cached: Vec<Option<C64>> = tasks.iter().map(|t| cache.get(&t.key)).collect();
    let cache_hits = cached.iter().filter(|c| c.is_some()).count();

    // Fan out the misses; collect preserves task order, so the result
    // table is deterministic no matter how the pool schedules.
    let computed: Vec<(usize, Result<C64, String>, f64)> = tasks
        .par_iter()
        .enumerate()
        .filter(|(i, _)| cached[*i].is_none())
        .map(|(i, task)| {
            let start = Instant::now();
            let value = compute_task(&exp, task);
            (i, value, start.elapsed().as_secs_f64() * 1e3)
        })
        .collect();
    let mut outcomes: Vec<Option<(Result<C64, String>, f64)>> =
        cached.iter().map(|_| None).collect();
    for (i, value, millis) in computed {
        outcomes[i] = Some((value, millis));
    }

    let mut records = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let (computed, millis, was_cached) = match (&cached[i], outcomes[i].take()) {
            (Some(value), _) => (Ok(*value), 0.0, true),
            (None, Some((value, millis))) => (value, millis, false),
            (None, None) => unreachable!("every task is cached or computed"),
        };
        let sequence = &sequences[task.sequence];
        let predicted = match &sequence.prediction {
            PredictionState::Ready(p) => Some(p.eval(task.k)),
            PredictionState::Vanishing => Some(C64::new(0.0, 0.0)),
            PredictionState::Failed(_) => None,
        };
        let (computed, status, error) = match computed {
            Ok(value) => {
                let status = if predicted.is_some() {
                    Status::Ok
                } else {
                    Status::Partial
                };
                let error = match (&sequence.prediction, status) {
                    (PredictionState::Failed(msg), Status::Partial) => {
                        Some(format!("prediction failed: {msg}"))
                    }
                    _ => None,
                };
                if !was_cached {
                    cache.insert(task.key.clone(), value);
                }
                (Some(value), status, error)
            }
            Err(message) => (None, Status::Failed, Some(message)),
        };
        records.push(ResultRecord {
            probe: sequence.id.clone(),
            k: task.k,
            isotype: sequence.label.clone(),
            computed,
            predicted,
            status,
            millis,
            cached: was_cached,
            error,
        });
    }

    cache.store()?;
    Ok(RunData {
        experiment: exp.id.clone(),
        records,
        sequences,
        lambda_name: exp.lambda.name().to_string(),
        lambda_diag,
        sigma_diag,
        transversality,
        cache_hits,
        wall_millis: started.elapsed().as_secs_f64() * 1e3,
    })
}
