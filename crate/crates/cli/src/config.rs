//! TOML experiment configuration, validated against the core preconditions
//! at load time. Errors carry the file and line of the offending key.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use disperse_core::fields::{InitialData, InitialKind};
use disperse_core::potentials::{builtin_potential, sample_potential, PotentialKind, PotentialSpec};
use disperse_core::propagators::StepperConfig;
use disperse_core::{Error as CoreError, Grid64, PotentialSample64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: ", self.path.display(), line)?,
            None => write!(f, "{}: ", self.path.display())?,
        }
        if !self.key.is_empty() {
            write!(f, "{}: ", self.key)?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// `half_width` as a number or a multiple of pi such as `"40pi"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Value(f64),
    Expr(#[serde(with = "pi_multiple")] f64),
}

impl Length {
    pub fn value(self) -> f64 {
        match self {
            Length::Value(v) => v,
            Length::Expr(v) => v * std::f64::consts::PI,
        }
    }
}

mod pi_multiple {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v}pi"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let text = String::deserialize(d)?;
        let body = text.trim().trim_end_matches("pi").trim().trim_end_matches('*').trim();
        if body.len() == text.trim().len() {
            return Err(de::Error::custom(format!("expected a number or a multiple of pi like \"40pi\", got {text:?}")));
        }
        if body.is_empty() {
            return Ok(1.0);
        }
        body.parse().map_err(|_| de::Error::custom(format!("cannot read {text:?} as a multiple of pi")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub num_points: usize,
    pub half_width: Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    #[serde(rename = "V0", default = "one")]
    pub v0: f64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    #[serde(default)]
    pub amplitude: Option<f64>,
    /// Gaussian only: choose the amplitude giving this H1 norm.
    #[serde(default)]
    pub h1: Option<f64>,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub velocity: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: InitialKind::Gaussian,
            amplitude: Some(1.0),
            h1: None,
            width: 1.0,
            center: 0.0,
            velocity: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(rename = "T", default = "default_t")]
    pub t_final: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for StepperSection {
    fn default() -> Self {
        StepperSection {
            dt: default_dt(),
            t_final: default_t(),
            record_every: default_record_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    #[serde(default = "default_norms")]
    pub norms: Vec<f64>,
    #[serde(default = "default_window")]
    pub window: [f64; 2],
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection {
            norms: default_norms(),
            window: default_window(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_windows")]
    pub windows: usize,
}

impl Default for ScatterSection {
    fn default() -> Self {
        ScatterSection {
            threshold: default_threshold(),
            windows: default_windows(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirialSection {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Random fields on which the `|z'|` ceiling is checked.
    #[serde(default = "default_random_fields")]
    pub random_fields: usize,
    #[serde(default = "default_k_cut")]
    pub k_cut: f64,
    #[serde(default = "default_envelope")]
    pub envelope: f64,
}

impl Default for VirialSection {
    fn default() -> Self {
        VirialSection {
            radii: default_radii(),
            random_fields: default_random_fields(),
            k_cut: default_k_cut(),
            envelope: default_envelope(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesSection {
    #[serde(default = "default_offsets")]
    pub offsets: Vec<f64>,
    #[serde(rename = "T", default = "default_profile_t")]
    pub t_final: f64,
    #[serde(default = "default_profile_exponent")]
    pub p: f64,
    #[serde(default = "default_profile_exponent")]
    pub r: f64,
    #[serde(default = "default_profile_dt")]
    pub dt: f64,
    #[serde(default = "default_profile_record_every")]
    pub record_every: usize,
    /// Time samples for the overlap supremum.
    #[serde(default = "default_records")]
    pub records: usize,
}

impl Default for ProfilesSection {
    fn default() -> Self {
        ProfilesSection {
            offsets: default_offsets(),
            t_final: default_profile_t(),
            p: default_profile_exponent(),
            r: default_profile_exponent(),
            dt: default_profile_dt(),
            record_every: default_profile_record_every(),
            records: default_records(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Random fields for the quadratic-form bounds (nonnegative V only).
    #[serde(default = "default_spectrum_fields")]
    pub random_fields: usize,
    #[serde(default = "default_k_cut")]
    pub k_cut: f64,
    #[serde(default = "default_envelope")]
    pub envelope: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            random_fields: default_spectrum_fields(),
            k_cut: default_k_cut(),
            envelope: default_envelope(),
        }
    }
}

/// Parameter grid for `sweep`; every combination is one scatter run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub kind: Vec<PotentialKind>,
    #[serde(rename = "V0", default)]
    pub v0: Vec<f64>,
    #[serde(default)]
    pub amplitude: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub potential: Option<PotentialSection>,
    #[serde(default)]
    pub initial_data: InitialSection,
    #[serde(default)]
    pub stepper: StepperSection,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub decay: DecaySection,
    #[serde(default)]
    pub scatter: ScatterSection,
    #[serde(default)]
    pub virial: VirialSection,
    #[serde(default)]
    pub profiles: ProfilesSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

fn one() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t() -> f64 {
    10.0
}
fn default_record_every() -> usize {
    100
}
fn default_alpha() -> f64 {
    6.0
}
fn default_norms() -> Vec<f64> {
    vec![f64::INFINITY, 4.0]
}
fn default_window() -> [f64; 2] {
    [5.0, 40.0]
}
fn default_threshold() -> f64 {
    1e-3
}
fn default_windows() -> usize {
    4
}
fn default_radii() -> Vec<f64> {
    vec![5.0]
}
fn default_random_fields() -> usize {
    20
}
fn default_spectrum_fields() -> usize {
    100
}
fn default_k_cut() -> f64 {
    3.0
}
fn default_envelope() -> f64 {
    6.0
}
fn default_offsets() -> Vec<f64> {
    vec![0.0, 10.0, 20.0, 30.0]
}
fn default_profile_t() -> f64 {
    2.0
}
fn default_profile_exponent() -> f64 {
    6.0
}
fn default_profile_dt() -> f64 {
    1e-2
}
fn default_profile_record_every() -> usize {
    10
}
fn default_records() -> usize {
    40
}

/// A loaded config together with its source text, for error attribution.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub source: String,
    pub config: ExperimentConfig,
}

/// Objects built from a validated config.
pub struct Prepared {
    pub grid: Arc<Grid64>,
    pub potential: Option<PotentialSpec>,
    pub sample: Option<PotentialSample64>,
    pub initial: InitialData,
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Dotted `section.key` for the assignment containing `offset`, or empty
/// when the offset is not on a `key = value` line.
fn key_at_offset(source: &str, offset: usize) -> String {
    let offset = offset.min(source.len());
    let start = source[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line = source[start..].lines().next().unwrap_or("");
    let Some((lhs, _)) = line.split_once('=') else {
        return String::new();
    };
    let key = lhs.trim();
    let section = source[..start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && !l.starts_with("[["))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim());
    match section {
        Some(s) => format!("{s}.{key}"),
        None => key.to_string(),
    }
}

/// Line of `key` inside `[section]` (root when empty); falls back to the
/// section header.
pub fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(rest) = line.strip_prefix(key) {
            let rest = rest.trim_start();
            if rest.starts_with('=') {
                return Some(i + 1);
            }
            // Quoted keys such as "V0".
        } else if let Some(rest) = line.strip_prefix(&format!("\"{key}\"")) {
            if rest.trim_start().starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    header
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: None,
            key: String::new(),
            message: format!("cannot read config: {e}"),
        })?;
        Self::from_source(path, source)
    }

    pub fn from_source(path: &Path, source: String) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(&source).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: e.span().map(|s| line_of_offset(&source, s.start)),
            key: e.span().map(|s| key_at_offset(&source, s.start)).unwrap_or_default(),
            message: e.message().trim().to_string(),
        })?;
        let loaded = LoadedConfig {
            path: path.to_path_buf(),
            source,
            config,
        };
        loaded.prepare()?;
        loaded.check_blocks()?;
        Ok(loaded)
    }

    pub fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        ConfigError {
            path: self.path.clone(),
            line: locate(&self.source, section, key),
            key: full,
            message: message.into(),
        }
    }

    /// Builds grid, potential sample and initial data, attributing any
    /// core precondition failure to the config line it came from.
    pub fn prepare(&self) -> Result<Prepared, ConfigError> {
        prepare_config(&self.config, |section, key, msg| self.error(section, key, msg))
    }

    fn check_blocks(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        let err = |section: &str, key: &str, msg: &str| Err(self.error(section, key, msg));
        let alpha = c.alpha;
        if !(alpha == 0.0 || alpha > 4.0) || !alpha.is_finite() {
            return err("", "alpha", "alpha must be 0 (linear flow) or greater than 4");
        }
        if let Err(e) = StepperConfig::new(c.stepper.dt, alpha, c.stepper.record_every) {
            let key = match &e {
                CoreError::InvalidParameter { name: "record_every", .. } => "record_every",
                _ => "dt",
            };
            return Err(self.error("stepper", key, e.to_string()));
        }
        if !(c.stepper.t_final >= 0.0) || !c.stepper.t_final.is_finite() {
            return err("stepper", "T", "final time must be finite and nonnegative");
        }
        if c.decay.norms.is_empty() || c.decay.norms.iter().any(|a| !(*a >= 1.0)) {
            return err("decay", "norms", "norms must be a nonempty list of exponents >= 1 (inf allowed)");
        }
        let [t0, t1] = c.decay.window;
        if !(t0 > 0.0 && t1 > t0) {
            return err("decay", "window", "window must satisfy 0 < t0 < t1");
        }
        if !(c.scatter.threshold > 0.0) {
            return err("scatter", "threshold", "threshold must be positive");
        }
        if c.scatter.windows == 0 {
            return err("scatter", "windows", "need at least one window");
        }
        if c.virial.radii.iter().any(|r| !(*r > 0.0)) {
            return err("virial", "radii", "radii must be positive");
        }
        if let Some(r) = c.virial.radii.iter().find(|r| 2.0 * **r >= c.grid.half_width.value()) {
            return err(
                "virial",
                "radii",
                &format!("cutoff support 2R = {} does not fit in the box of half-width {}", 2.0 * r, c.grid.half_width.value()),
            );
        }
        let p = &c.profiles;
        if !(p.t_final >= 0.0) || !(p.p >= 1.0) || !(p.r >= 1.0) {
            return err("profiles", "T", "need T >= 0 and exponents p, r >= 1");
        }
        if let Err(e) = StepperConfig::new(p.dt, 0.0, p.record_every) {
            return Err(self.error("profiles", "dt", e.to_string()));
        }
        if let Some(s) = &c.sweep {
            if s.alpha.iter().any(|a| !(*a > 4.0)) {
                return err("sweep", "alpha", "sweep exponents must exceed 4");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical form of the effective config.
    pub fn hash(&self) -> String {
        config_hash(&self.config)
    }
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    // The output location does not affect results. Debug keeps inf and NaN
    // distinct, which JSON would not.
    let mut config = config.clone();
    config.output_dir = None;
    let canonical = format!("{config:?}");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub(crate) fn prepare_config<E>(
    c: &ExperimentConfig,
    error: impl Fn(&str, &str, String) -> E,
) -> Result<Prepared, E> {
    let grid = Grid64::new(c.grid.num_points, c.grid.half_width.value()).map_err(|e| {
        let key = match e {
            CoreError::InvalidParameter { name: "num_points", .. } => "num_points",
            _ => "half_width",
        };
        error("grid", key, e.to_string())
    })?;

    let (potential, sample) = match &c.potential {
        None => (None, None),
        Some(p) => {
            let spec = builtin_potential(p.kind, p.v0, p.a)
                .map_err(|e| {
                    let key = if p.a > 0.0 { "V0" } else { "a" };
                    error("potential", key, e.to_string())
                })?
                .centered_at(p.center);
            let sample = sample_potential(&spec, &grid).map_err(|e| match e {
                CoreError::DomainTooSmall { .. } => error("grid", "half_width", e.to_string()),
                other => error("grid", "num_points", other.to_string()),
            })?;
            (Some(spec), Some(sample))
        }
    };

    let init = &c.initial_data;
    if !(init.width > 0.0) || !init.width.is_finite() {
        return Err(error("initial_data", "width", "width must be positive".into()));
    }
    if !init.center.is_finite() || !init.velocity.is_finite() {
        return Err(error("initial_data", "center", "center and velocity must be finite".into()));
    }
    let amplitude = match (init.amplitude, init.h1) {
        (Some(_), Some(_)) => {
            return Err(error("initial_data", "h1", "give either amplitude or h1, not both".into()));
        }
        (None, Some(h1)) => {
            if init.kind != InitialKind::Gaussian {
                return Err(error("initial_data", "h1", "h1 is only supported for gaussian data".into()));
            }
            if init.velocity != 0.0 {
                return Err(error("initial_data", "h1", "h1 assumes zero velocity".into()));
            }
            InitialData::gaussian_amplitude_for_h1(h1, init.width)
        }
        (Some(a), None) => a,
        (None, None) => 1.0,
    };
    if !amplitude.is_finite() {
        return Err(error("initial_data", "amplitude", "amplitude must be finite".into()));
    }
    let initial = InitialData {
        kind: init.kind,
        amplitude,
        width: init.width,
        center: init.center,
        velocity: init.velocity,
    };
    Ok(Prepared {
        grid,
        potential,
        sample,
        initial,
    })
}
