//! Run configuration.
//!
//! A config file is TOML with optional top-level keys `dt`, `seed` and
//! `smoothing` and optional sections `[plant]`, `[controller]`, `[tuner]`,
//! `[reference]`, `[identify]` and `[output]`. Missing keys take their
//! defaults and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::ControllerParams;
use crate::error::{Error, Result};
use crate::plant::PlantParams;
use crate::signal::{tick_count, Reference, ReferenceKind, ReferenceSpec};
use crate::tuner::TunerParams;

/// The pressure triangle driven through the inner loop by `identify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifyParams {
    pub base_kpa: f64,
    pub peak_rise_kpa: f64,
    pub duration_s: f64,
    /// Pressure window over which branch slopes are measured, kPa.
    pub slope_window_kpa: f64,
    /// Fraction of the steepest loading slope that ends a dead zone.
    pub slope_fraction: f64,
}

impl Default for IdentifyParams {
    fn default() -> Self {
        IdentifyParams {
            base_kpa: 0.0,
            peak_rise_kpa: 400.0,
            duration_s: 20.0,
            slope_window_kpa: 1.0,
            slope_fraction: 0.5,
        }
    }
}

impl IdentifyParams {
    pub fn reference(&self) -> ReferenceSpec {
        ReferenceSpec::pressure_triangle(self.base_kpa, self.peak_rise_kpa, self.duration_s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputParams {
    pub dir: PathBuf,
}

impl Default for OutputParams {
    fn default() -> Self {
        OutputParams {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// s
    pub dt: f64,
    pub seed: u64,
    /// Smoothing coefficient of the pseudo-differentials, in `(0, 1]`.
    pub smoothing: f64,
    pub plant: PlantParams,
    pub controller: ControllerParams,
    pub tuner: TunerParams,
    pub reference: ReferenceSpec,
    pub identify: IdentifyParams,
    pub output: OutputParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dt: 0.002,
            seed: 0,
            smoothing: 0.15,
            plant: PlantParams::default(),
            controller: ControllerParams::default(),
            tuner: TunerParams::default(),
            reference: ReferenceSpec::rapid_30s(),
            identify: IdentifyParams::default(),
            output: OutputParams::default(),
        }
    }
}

fn check_grid(key: &str, duration: f64, dt: f64) -> Result<()> {
    let ticks = duration / dt;
    if (ticks - ticks.round()).abs() > 1e-9 * ticks.max(1.0) {
        return Err(Error::validation(
            key,
            format!("duration {duration} s is not a whole number of {dt} s ticks"),
        ));
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation("dt", "must be finite and > 0"));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::validation("smoothing", "must lie in (0, 1]"));
        }
        self.plant.validate()?;
        self.controller.validate()?;
        self.tuner.validate()?;

        if self.reference.kind == ReferenceKind::TriangularPressure {
            return Err(Error::validation(
                "reference.kind",
                "must be a bending reference (multi_sine or piecewise_sine)",
            ));
        }
        let reference = Reference::new(&self.reference)?;
        check_grid("reference.duration_s", self.reference.duration_s, self.dt)?;
        let (lo, hi) = reference.range_on_grid(self.dt);
        if lo < 0.0 || hi > self.tuner.theta_max {
            return Err(Error::validation(
                "reference",
                format!("spans [{lo}, {hi}] deg, outside [0, {}] deg", self.tuner.theta_max),
            ));
        }
        let start = reference.sample(0.0)?;
        let (reach_lo, reach_hi) = (
            self.plant.loading_curve(self.plant.p_min_kpa),
            self.plant.saturated_angle(),
        );
        if start < reach_lo || start > reach_hi {
            return Err(Error::validation(
                "reference.offset",
                format!("initial angle {start} deg is outside the plant's reach [{reach_lo}, {reach_hi}] deg"),
            ));
        }

        let id = &self.identify;
        for (key, v) in [
            ("identify.duration_s", id.duration_s),
            ("identify.slope_window_kpa", id.slope_window_kpa),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(key, "must be finite and > 0"));
            }
        }
        if !(id.slope_fraction > 0.0 && id.slope_fraction < 1.0) {
            return Err(Error::validation("identify.slope_fraction", "must lie in (0, 1)"));
        }
        if !(id.peak_rise_kpa.is_finite() && id.peak_rise_kpa >= 0.0) {
            return Err(Error::validation("identify.peak_rise_kpa", "must be finite and >= 0"));
        }
        if !(id.base_kpa >= self.plant.p_min_kpa && id.base_kpa + id.peak_rise_kpa <= self.plant.p_max_kpa) {
            return Err(Error::validation(
                "identify",
                format!(
                    "triangle [{}, {}] kPa leaves the plant range [{}, {}] kPa",
                    id.base_kpa,
                    id.base_kpa + id.peak_rise_kpa,
                    self.plant.p_min_kpa,
                    self.plant.p_max_kpa
                ),
            ));
        }
        check_grid("identify.duration_s", id.duration_s, self.dt)?;
        Ok(())
    }

    /// Tick count `n`; the episode has `n + 1` samples.
    pub fn ticks(&self) -> usize {
        tick_count(self.reference.duration_s, self.dt)
    }

    /// Parses and validates config text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Returns a copy with the dotted `key` (for example `tuner.kappa` or
    /// `plant.operators.2.weight`) set to `value`, re-validated.
    pub fn with_override(&self, key: &str, value: f64) -> Result<Self> {
        let mut root = toml::Value::try_from(self).expect("config serializes");
        let parts: Vec<&str> = key.split('.').collect();
        let unknown = || Error::validation(key, "unknown config key");
        let mut node = &mut root;
        for part in &parts {
            node = match node {
                toml::Value::Table(t) => t.get_mut(*part).ok_or_else(unknown)?,
                toml::Value::Array(a) => {
                    let i: usize = part.parse().map_err(|_| unknown())?;
                    a.get_mut(i).ok_or_else(unknown)?
                }
                _ => return Err(unknown()),
            };
        }
        *node = match node {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) if value.fract() == 0.0 && value >= 0.0 && value <= i64::MAX as f64 => {
                toml::Value::Integer(value as i64)
            }
            toml::Value::Integer(_) => return Err(Error::validation(key, "must be a non-negative integer")),
            _ => return Err(Error::validation(key, "is not numeric")),
        };
        let cfg: RunConfig = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml_str(&text)
}

pub fn dump_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_toml_string()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
