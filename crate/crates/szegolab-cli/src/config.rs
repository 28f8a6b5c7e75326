//! Experiment configuration: the on-disk schema, its validation, and the
//! identities derived from it (level lists, isotype labels, the config
//! hash that names an experiment).
//!
//! A configuration is a TOML document with a `schema_version` and sections
//! for the model sphere, the Legendrian family, an optional torus action
//! with its isotype labels ϖ, the probe points, the level range, the report
//! tolerances, and the output paths.  Everything the reports check against
//! comes from the `[tolerances]` section; the binary adds no thresholds of
//! its own.  Probe points are unit-normalized when the configuration is
//! resolved, never silently at evaluation time.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Configuration and output schema version understood by this binary.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything that can be wrong with a configuration file, separated from
/// the runtime errors of the experiment itself.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("unsupported schema_version {got}; this binary reads version {SCHEMA_VERSION}")]
    SchemaVersion { got: u32 },
    #[error("model.n must be at least 1, got {got}")]
    BaseDimension { got: usize },
    #[error("unknown kernel normalization {got:?}; the supported tag is \"hardy\"")]
    UnknownNormalization { got: String },
    #[error("unknown legendrian family {got:?}; run `szegolab list-builtins` for the catalogue")]
    UnknownFamily { got: String },
    #[error("family {family:?} takes {expected} parameter(s), got {got}")]
    ParameterCount {
        family: String,
        expected: String,
        got: usize,
    },
    #[error(
        "family {family:?} with these parameters lives over a base of complex \
         dimension {family_n}, but model.n = {model_n}"
    )]
    AmbientMismatch {
        family: String,
        family_n: usize,
        model_n: usize,
    },
    #[error("action.weights must have at least one row")]
    EmptyAction,
    #[error("action.weights row {row} has length {got}, expected n + 1 = {expected}")]
    WeightRowLength {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("action.shift has length {got}, expected the torus rank g = {expected}")]
    ShiftLength { got: usize, expected: usize },
    #[error("varpi is only meaningful together with an [action] section")]
    VarpiWithoutAction,
    #[error("an [action] section needs a nonempty varpi list of isotype labels")]
    MissingVarpi,
    #[error("varpi[{index}] has length {got}, expected the torus rank g = {expected}")]
    VarpiLength {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("varpi[{index}] duplicates an earlier isotype label")]
    DuplicateVarpi { index: usize },
    #[error("probe id {id:?} is invalid: {reason}")]
    BadProbeId { id: String, reason: String },
    #[error("probe {id:?}: {reason}")]
    BadProbe { id: String, reason: String },
    #[error("nothing to compute: add at least one [[probes]] entry or a [pairing] section")]
    NoWork,
    #[error("k range is empty: min = {min}, max = {max}, step = {step}, parity = {parity}")]
    EmptyKRange {
        min: usize,
        max: usize,
        step: usize,
        parity: Parity,
    },
    #[error("k_range.step must be at least 1")]
    ZeroStep,
    #[error("tolerances.{name} must be positive, got {got}")]
    BadTolerance { name: String, got: f64 },
    #[error("tolerances.rapid_decay_orders must be at least 1")]
    ZeroDecayOrder,
    #[error("output.{name} must be a nonempty relative path, got {got:?}")]
    BadOutputPath { name: String, got: String },
    #[error("output paths must be pairwise distinct; {got:?} is used twice")]
    DuplicateOutputPath { got: String },
}

/// Top-level experiment description, exactly the TOML document shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSection,
    pub legendrian: LegendrianSection,
    /// Optional second Legendrian; when present, Hermitian pairings
    /// (u_k, v_k) are computed alongside the probe sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionSection>,
    /// Isotype labels ϖ ∈ ℤ^g to sweep; requires an [action] section.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub varpi: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeSection>,
    pub k_range: KRangeSection,
    pub tolerances: ToleranceSection,
    pub output: OutputSection,
}

/// The model sphere S^{2n+1} and the kernel normalization convention.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Complex dimension n of the projective base; the sphere is S^{2n+1}.
    pub n: usize,
    /// Kernel normalization tag; "hardy" is the level-k Hardy projector
    /// Π_k(x, y) = c_{k,n}·⟨x, y⟩^k with c_{k,n} = (k+n choose n)·n!/πⁿ.
    #[serde(default = "default_normalization")]
    pub normalization: String,
}

fn default_normalization() -> String {
    "hardy".to_string()
}

/// A built-in Legendrian family instance with its half-density weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegendrianSection {
    /// Family name: "knot" or "torus-product".
    pub family: String,
    /// Family parameters; see `szegolab list-builtins`.
    #[serde(default)]
    pub parameters: Vec<f64>,
    #[serde(default)]
    pub f_lambda: FLambdaSpec,
}

/// Second Legendrian for pairing experiments, with the sequence id its
/// result rows carry in place of a probe id.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingSection {
    #[serde(default = "default_pairing_id")]
    pub id: String,
    pub family: String,
    #[serde(default)]
    pub parameters: Vec<f64>,
    #[serde(default)]
    pub f_lambda: FLambdaSpec,
}

fn default_pairing_id() -> String {
    "pairing".to_string()
}

/// Weight f_λ on the Legendrian parameters.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FLambdaSpec {
    /// Constant weight 1.
    #[default]
    Unit,
    /// f_λ(t) = 1 + amplitude·cos(frequency·t₁) on the first parameter.
    Cosine { amplitude: f64, frequency: u32 },
}

/// Diagonal torus action: integer weight rows and a real moment shift.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSection {
    /// g rows of n + 1 integer weights each.
    pub weights: Vec<Vec<i64>>,
    /// Moment-map shift in ℝ^g; empty means zero.
    #[serde(default)]
    pub shift: Vec<f64>,
}

/// One probe: a base point on the sphere and an optional chart
/// displacement.  The state is evaluated at ρ(w/√k) in the canonical
/// Heisenberg chart at the base point, so a probe with w sees the
/// transverse Gaussian profile of the leading term.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub id: String,
    pub point: PointSpec,
    /// Chart displacement (p, q) ∈ ℝ^{2n}; empty means the base point.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<f64>,
}

/// Where a probe's base point comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSpec {
    /// ι(params) on the configured Legendrian, then shifted along the
    /// circle fiber by `circle_shift`.
    Legendrian {
        params: Vec<f64>,
        #[serde(default)]
        circle_shift: f64,
    },
    /// Explicit ambient coordinates, normalized to the sphere on load.
    Ambient { re: Vec<f64>, im: Vec<f64> },
}

/// The swept kernel levels: min ..= max thinned by step and parity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRangeSection {
    pub min: usize,
    pub max: usize,
    #[serde(default = "default_step")]
    pub step: usize,
    #[serde(default)]
    pub parity: Parity,
}

fn default_step() -> usize {
    1
}

/// Parity filter on the levels.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    #[default]
    Any,
    Even,
    Odd,
}

impl Parity {
    fn admits(self, k: usize) -> bool {
        match self {
            Parity::Any => true,
            Parity::Even => k % 2 == 0,
            Parity::Odd => k % 2 == 1,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Any => write!(f, "any"),
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

/// Every threshold the report grades against.  No defaults: a report
/// claim always traces back to a line in the configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    /// Ceiling for the Legendrian diagnostic grid (contact form pullback,
    /// symplectic pullback, sphere deviation).
    pub legendrian: f64,
    /// Relative deviation allowed between |computed| and |predicted| on
    /// live levels.
    pub match_rel: f64,
    /// A level is live when the predicted modulus exceeds this floor;
    /// otherwise it is dead and graded against `dead_abs`.
    pub live_abs: f64,
    /// Ceiling on the computed modulus at dead levels.
    pub dead_abs: f64,
    /// When present, every sequence must pass the rapid-decay test
    /// through k^{−N} for N up to this order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rapid_decay_orders: Option<u32>,
}

/// Output file names, all relative to the run's --out-dir.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Machine table (CSV), bit-identical across reruns.
    pub results: String,
    /// Structured log (JSON) with per-task timings.
    pub log: String,
    /// Human-readable comparison report.
    pub report: String,
}

impl ExperimentConfig {
    /// Reads and parses a configuration file; validation is separate.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })
    }

    /// The levels the sweep visits, in increasing order.
    pub fn levels(&self) -> Vec<usize> {
        if self.k_range.step == 0 {
            return Vec::new();
        }
        (self.k_range.min..=self.k_range.max)
            .step_by(self.k_range.step)
            .filter(|&k| self.k_range.parity.admits(k))
            .collect()
    }

    /// Full semantic validation, in reading order of the document.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion {
                got: self.schema_version,
            });
        }
        let n = self.model.n;
        if n == 0 {
            return Err(ConfigError::BaseDimension { got: n });
        }
        if self.model.normalization != "hardy" {
            return Err(ConfigError::UnknownNormalization {
                got: self.model.normalization.clone(),
            });
        }

        let dim = validate_family(&self.legendrian.family, &self.legendrian.parameters, n)?;
        if let Some(pairing) = &self.pairing {
            validate_family(&pairing.family, &pairing.parameters, n)?;
            validate_id(&pairing.id)?;
        }

        if let Some(action) = &self.action {
            let g = action.weights.len();
            if g == 0 {
                return Err(ConfigError::EmptyAction);
            }
            for (row, weights) in action.weights.iter().enumerate() {
                if weights.len() != n + 1 {
                    return Err(ConfigError::WeightRowLength {
                        row,
                        got: weights.len(),
                        expected: n + 1,
                    });
                }
            }
            if !action.shift.is_empty() && action.shift.len() != g {
                return Err(ConfigError::ShiftLength {
                    got: action.shift.len(),
                    expected: g,
                });
            }
            if self.varpi.is_empty() {
                return Err(ConfigError::MissingVarpi);
            }
            for (index, label) in self.varpi.iter().enumerate() {
                if label.len() != g {
                    return Err(ConfigError::VarpiLength {
                        index,
                        got: label.len(),
                        expected: g,
                    });
                }
                if self.varpi[..index].contains(label) {
                    return Err(ConfigError::DuplicateVarpi { index });
                }
            }
        } else if !self.varpi.is_empty() {
            return Err(ConfigError::VarpiWithoutAction);
        }

        let mut seen_ids: Vec<&str> = Vec::new();
        if let Some(pairing) = &self.pairing {
            seen_ids.push(&pairing.id);
        }
        for probe in &self.probes {
            validate_id(&probe.id)?;
            if seen_ids.contains(&probe.id.as_str()) {
                return Err(ConfigError::BadProbeId {
                    id: probe.id.clone(),
                    reason: "duplicates an earlier sequence id".to_string(),
                });
            }
            seen_ids.push(&probe.id);
            validate_probe(probe, n, dim)?;
        }
        if self.probes.is_empty() && self.pairing.is_none() {
            return Err(ConfigError::NoWork);
        }

        if self.k_range.step == 0 {
            return Err(ConfigError::ZeroStep);
        }
        if self.levels().is_empty() {
            return Err(ConfigError::EmptyKRange {
                min: self.k_range.min,
                max: self.k_range.max,
                step: self.k_range.step,
                parity: self.k_range.parity,
            });
        }

        for (name, value) in [
            ("legendrian", self.tolerances.legendrian),
            ("match_rel", self.tolerances.match_rel),
            ("live_abs", self.tolerances.live_abs),
            ("dead_abs", self.tolerances.dead_abs),
        ] {
            if !(value > 0.0) {
                return Err(ConfigError::BadTolerance {
                    name: name.to_string(),
                    got: value,
                });
            }
        }
        if self.tolerances.rapid_decay_orders == Some(0) {
            return Err(ConfigError::ZeroDecayOrder);
        }

        let outputs = [
            ("results", &self.output.results),
            ("log", &self.output.log),
            ("report", &self.output.report),
        ];
        for (name, path) in outputs {
            if path.is_empty() || Path::new(path).is_absolute() {
                return Err(ConfigError::BadOutputPath {
                    name: name.to_string(),
                    got: path.clone(),
                });
            }
        }
        for (i, (_, a)) in outputs.iter().enumerate() {
            if outputs[..i].iter().any(|(_, b)| a == b) {
                return Err(ConfigError::DuplicateOutputPath {
                    got: (*a).to_string(),
                });
            }
        }
        Ok(())
    }

    /// The experiment id: FNV-1a over the canonical serialization of the
    /// effective configuration, as 16 hex digits.  CLI overrides change
    /// the id because they change the document they hash.
    pub fn experiment_id(&self) -> String {
        let canonical = toml::to_string(self).expect("configuration serializes");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

/// Checks a family name and parameter count; returns the Legendrian
/// parameter dimension.
fn validate_family(family: &str, parameters: &[f64], model_n: usize) -> Result<usize, ConfigError> {
    let (dim, family_n) = match family {
        "knot" => {
            if parameters.len() != 1 {
                return Err(ConfigError::ParameterCount {
                    family: family.to_string(),
                    expected: "exactly 1".to_string(),
                    got: parameters.len(),
                });
            }
            (1, 1)
        }
        "torus-product" => {
            let m = parameters.len();
            if m < 2 {
                return Err(ConfigError::ParameterCount {
                    family: family.to_string(),
                    expected: "at least 2 (one phase per circle factor)".to_string(),
                    got: m,
                });
            }
            (m, 2 * m - 1)
        }
        _ => {
            return Err(ConfigError::UnknownFamily {
                got: family.to_string(),
            })
        }
    };
    if family_n != model_n {
        return Err(ConfigError::AmbientMismatch {
            family: family.to_string(),
            family_n,
            model_n,
        });
    }
    Ok(dim)
}

fn validate_id(id: &str) -> Result<(), ConfigError> {
    if id.is_empty() {
        return Err(ConfigError::BadProbeId {
            id: id.to_string(),
            reason: "must be nonempty".to_string(),
        });
    }
    let forbidden = |c: char| matches!(c, '|' | ',' | '/' | '\\') || c.is_whitespace();
    if id.contains(forbidden) {
        return Err(ConfigError::BadProbeId {
            id: id.to_string(),
            reason: "must not contain '|', ',', '/', '\\' or whitespace".to_string(),
        });
    }
    Ok(())
}

fn validate_probe(probe: &ProbeSection, n: usize, lambda_dim: usize) -> Result<(), ConfigError> {
    match &probe.point {
        PointSpec::Legendrian { params, .. } => {
            if params.len() != lambda_dim {
                return Err(ConfigError::BadProbe {
                    id: probe.id.clone(),
                    reason: format!(
                        "point.params has length {}, the legendrian has {} parameter(s)",
                        params.len(),
                        lambda_dim
                    ),
                });
            }
        }
        PointSpec::Ambient { re, im } => {
            if re.len() != n + 1 || im.len() != n + 1 {
                return Err(ConfigError::BadProbe {
                    id: probe.id.clone(),
                    reason: format!(
                        "ambient point needs re and im of length n + 1 = {}, got {} and {}",
                        n + 1,
                        re.len(),
                        im.len()
                    ),
                });
            }
            let norm_sq: f64 = re.iter().chain(im).map(|x| x * x).sum();
            if norm_sq <= 0.0 {
                return Err(ConfigError::BadProbe {
                    id: probe.id.clone(),
                    reason: "ambient point is zero and cannot be normalized".to_string(),
                });
            }
        }
    }
    if !probe.w.is_empty() && probe.w.len() != 2 * n {
        return Err(ConfigError::BadProbe {
            id: probe.id.clone(),
            reason: format!(
                "displacement w has length {}, expected 2n = {}",
                probe.w.len(),
                2 * n
            ),
        });
    }
    Ok(())
}

/// 64-bit FNV-1a over a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
