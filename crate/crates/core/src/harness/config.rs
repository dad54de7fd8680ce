use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::preset::Preset;
use crate::error::{Error, Result};
use crate::lattice::ModeLattice;
use crate::state::{compute_vmax, IcEntry, IcFile, SpectralState};
use crate::taylor::ConvolutionMethod;

pub const DEFAULT_ALPHA: f64 = 1e-6;
pub const DEFAULT_T: [f64; 1] = [5.0];
pub const DEFAULT_BOUNDS: [usize; 4] = [5, 7, 17, 27];
pub const DEFAULT_P_MAX: usize = 50;

/// A sweep over truncation bound, initial speed and evaluation time.
///
/// Exactly one of `preset`, `ic_path` and `ic` selects the initial
/// condition. For file and inline conditions an absent `v_max` list runs the
/// condition as given; otherwise it is rescaled to each listed `v_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic: Option<Vec<IcEntry>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    #[serde(default)]
    pub v_max: Option<Vec<f64>>,
    #[serde(default = "default_bounds", alias = "N")]
    pub n: Vec<usize>,
    #[serde(default = "default_p_max")]
    pub p_max: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub oracle_dt: Option<f64>,
    #[serde(default)]
    pub fast_convolution: bool,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub phase_seed: Option<u64>,
    #[serde(default = "default_true")]
    pub write_tables: bool,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_t() -> Vec<f64> {
    DEFAULT_T.to_vec()
}
fn default_bounds() -> Vec<usize> {
    DEFAULT_BOUNDS.to_vec()
}
fn default_p_max() -> usize {
    DEFAULT_P_MAX
}
fn default_true() -> bool {
    true
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}

impl ExperimentConfig {
    /// A config for a preset with every other field at its default.
    pub fn for_preset(preset: Preset) -> Self {
        Self {
            preset: Some(preset),
            ic_path: None,
            ic: None,
            alpha: DEFAULT_ALPHA,
            t: default_t(),
            v_max: Some(preset.default_v_max()),
            n: default_bounds(),
            p_max: DEFAULT_P_MAX,
            output_dir: None,
            oracle: false,
            oracle_dt: None,
            fast_convolution: false,
            workers: None,
            phase_seed: None,
            write_tables: true,
        }
    }

    pub fn for_entries(entries: Vec<IcEntry>) -> Self {
        Self { preset: None, ic: Some(entries), v_max: None, ..Self::for_preset(Preset::SingleMode) }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Fills preset defaults and checks every field.
    pub fn validate(mut self) -> Result<Self> {
        let sources = [self.preset.is_some(), self.ic_path.is_some(), self.ic.is_some()];
        match sources.iter().filter(|&&s| s).count() {
            1 => {}
            0 => return Err(invalid("preset", "one of `preset`, `ic_path` or `ic` is required")),
            _ => return Err(invalid("preset", "`preset`, `ic_path` and `ic` are mutually exclusive")),
        }
        if let (Some(preset), None) = (self.preset, &self.v_max) {
            self.v_max = Some(preset.default_v_max());
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(invalid("alpha", format!("{} is not a nonnegative viscosity", self.alpha)));
        }
        if self.t.is_empty() {
            return Err(invalid("t", "list is empty"));
        }
        if let Some(bad) = self.t.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(invalid("t", format!("{bad} is not a nonnegative time")));
        }
        if self.n.is_empty() {
            return Err(invalid("n", "list is empty"));
        }
        if self.n.contains(&0) {
            return Err(invalid("n", "truncation bounds must be positive"));
        }
        if let Some(v) = &self.v_max {
            if v.is_empty() {
                return Err(invalid("v_max", "list is empty"));
            }
            if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(invalid("v_max", format!("{bad} is not positive")));
            }
        }
        if self.p_max == 0 {
            return Err(invalid("p_max", "must be at least 1"));
        }
        if let Some(dt) = self.oracle_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(invalid("oracle_dt", format!("{dt} is not a positive step")));
            }
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be positive"));
        }
        Ok(self)
    }

    pub fn method(&self) -> ConvolutionMethod {
        if self.fast_convolution {
            ConvolutionMethod::Transform
        } else {
            ConvolutionMethod::Direct
        }
    }

    /// The `v_max` axis of the sweep; `None` entries run the condition unscaled.
    pub fn v_max_axis(&self) -> Vec<Option<f64>> {
        match &self.v_max {
            Some(v) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }

    /// Initial condition on `lattice`, rescaled to `v_max` when given.
    pub fn initial_state(&self, lattice: ModeLattice, v_max: Option<f64>) -> Result<SpectralState> {
        if let Some(preset) = self.preset {
            let v = v_max.ok_or_else(|| invalid("v_max", "presets need an explicit v_max"))?;
            return preset.build(lattice, v, self.phase_seed);
        }
        let file = match (&self.ic_path, &self.ic) {
            (Some(path), _) => IcFile::read(path)?,
            (None, Some(entries)) => IcFile { entries: entries.clone() },
            (None, None) => return Err(invalid("ic", "no initial condition configured")),
        };
        let loaded = file.build(lattice)?;
        match v_max {
            None => Ok(loaded.state),
            Some(_) if loaded.v_max == 0.0 => Err(invalid("v_max", "cannot rescale an all-zero initial condition")),
            Some(target) => {
                let scaled = loaded.state.scaled(target / loaded.v_max);
                debug_assert!((compute_vmax(&scaled) - target).abs() <= 1e-12 * target);
                Ok(scaled)
            }
        }
    }
}

/// Reads and validates a JSON config. A relative `ic_path` is resolved
/// against the config file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut config = ExperimentConfig::from_json(&text).map_err(|source| Error::Json { path: path.into(), source })?;
    if let (Some(ic), Some(dir)) = (&config.ic_path, path.parent()) {
        if ic.is_relative() {
            config.ic_path = Some(dir.join(ic));
        }
    }
    config.validate()
}
