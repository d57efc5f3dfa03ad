//! Experiment configuration.
//!
//! A TOML file of dotted keys (`pump.spectral_fwhm_nm = 6.0`); table headers
//! are accepted too. Every key is optional and unknown keys are rejected.
//! Units are in the key names.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, FiberSpec};
use crate::error::{Error, Result};
use crate::source_model::{FrequencyGrid, PathImbalance, PumpPulse};
use crate::tomography::{MleOptions, DEFAULT_DURATION_S};

pub const SCHEMA_VERSION: u32 = 1;

const FS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub pump: PumpConfig,
    pub fiber: FiberConfig,
    pub imbalance: ImbalanceConfig,
    pub calibration: CalibrationConfig,
    pub grid: GridConfig,
    pub tomography: TomographyConfig,
    pub sweep: SweepConfig,
    pub visibility: VisibilityConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpConfig {
    pub center_wavelength_nm: f64,
    pub spectral_fwhm_nm: f64,
    pub repetition_rate_hz: f64,
    pub average_power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberConfig {
    pub length_m: f64,
    pub birefringence: f64,
    pub dispersion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImbalanceConfig {
    /// Delay of the V path with no compensation, fs.
    pub intrinsic_delay_fs: f64,
    /// Applied compensation for single-point commands, fs.
    pub compensation_fs: f64,
    /// η², the tangle ceiling from non-temporal distinguishability.
    pub eta_squared: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    /// Fit the pump bandwidth so that the tangle at zero applied delay is
    /// `zero_delay_tangle`.
    pub enabled: bool,
    pub zero_delay_tangle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_signal: usize,
    pub n_idler: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographyConfig {
    /// Expected pairs per setting acquisition.
    pub brightness: f64,
    pub duration_s: f64,
    /// Round expected counts instead of drawing Poisson samples.
    pub noiseless: bool,
    pub restarts: usize,
    pub max_iterations: usize,
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Applied compensation delays, fs.
    pub delays_fs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VisibilityConfig {
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Default output path when `--out` is not given.
    pub path: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            pump: PumpConfig::default(),
            fiber: FiberConfig::default(),
            imbalance: ImbalanceConfig::default(),
            calibration: CalibrationConfig::default(),
            grid: GridConfig::default(),
            tomography: TomographyConfig::default(),
            sweep: SweepConfig::default(),
            visibility: VisibilityConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for PumpConfig {
    fn default() -> Self {
        let p = PumpPulse::default();
        Self {
            center_wavelength_nm: p.center_wavelength_nm(),
            spectral_fwhm_nm: p.spectral_fwhm_nm(),
            repetition_rate_hz: p.repetition_rate_hz(),
            average_power_w: p.average_power_w(),
        }
    }
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            length_m: FiberSpec::DEFAULT_LENGTH_M,
            birefringence: FiberSpec::DEFAULT_BIREFRINGENCE,
            dispersion: "fused_silica".into(),
        }
    }
}

impl Default for ImbalanceConfig {
    fn default() -> Self {
        Self {
            intrinsic_delay_fs: 28.0,
            compensation_fs: 28.0,
            eta_squared: 0.8522,
            phase_rad: 0.0,
        }
    }
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            zero_delay_tangle: 0.7543,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_signal: FrequencyGrid::DEFAULT_POINTS,
            n_idler: FrequencyGrid::DEFAULT_POINTS,
        }
    }
}

impl Default for TomographyConfig {
    fn default() -> Self {
        let mle = MleOptions::default();
        Self {
            brightness: 1e5,
            duration_s: DEFAULT_DURATION_S,
            noiseless: false,
            restarts: mle.restarts,
            max_iterations: mle.max_iterations,
            bootstrap_resamples: 100,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            delays_fs: vec![
                -40.0, -27.0, -13.0, 0.0, 13.0, 28.0, 41.0, 54.0, 68.0, 81.0, 96.0,
            ],
        }
    }
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        Self { points: 37 }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl ExperimentConfig {
    /// Parses and validates a config document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks every derived object once so later stages only see valid input.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.pump()?;
        self.fiber()?;
        self.imbalance()?;
        let t = &self.tomography;
        if !(t.brightness > 0.0 && t.brightness.is_finite()) {
            return Err(Error::Config(format!(
                "tomography.brightness must be > 0, got {}",
                t.brightness
            )));
        }
        if !(t.duration_s > 0.0 && t.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "tomography.duration_s must be > 0, got {}",
                t.duration_s
            )));
        }
        if t.bootstrap_resamples == 1 {
            return Err(Error::Config(
                "tomography.bootstrap_resamples must be 0 or >= 2".into(),
            ));
        }
        if t.max_iterations == 0 {
            return Err(Error::Config(
                "tomography.max_iterations must be > 0".into(),
            ));
        }
        for (name, n) in [
            ("grid.n_signal", self.grid.n_signal),
            ("grid.n_idler", self.grid.n_idler),
        ] {
            if n < FrequencyGrid::MIN_POINTS {
                return Err(Error::Config(format!(
                    "{name} must be >= {}, got {n}",
                    FrequencyGrid::MIN_POINTS
                )));
            }
        }
        if self.sweep.delays_fs.is_empty() || self.sweep.delays_fs.iter().any(|d| !d.is_finite()) {
            return Err(Error::Config(
                "sweep.delays_fs must be a non-empty list of finite numbers".into(),
            ));
        }
        if self.visibility.points < 4 {
            return Err(Error::Config("visibility.points must be >= 4".into()));
        }
        let c = &self.calibration;
        if c.enabled {
            if self.imbalance.intrinsic_delay_fs == 0.0 {
                return Err(Error::Config(
                    "calibration.enabled needs a nonzero imbalance.intrinsic_delay_fs".into(),
                ));
            }
            if !(c.zero_delay_tangle > 0.0 && c.zero_delay_tangle < self.imbalance.eta_squared) {
                return Err(Error::Config(format!(
                    "calibration.zero_delay_tangle must be in (0, imbalance.eta_squared), got {}",
                    c.zero_delay_tangle
                )));
            }
        }
        Ok(())
    }

    /// Pump as configured, before any bandwidth calibration.
    pub fn pump(&self) -> Result<PumpPulse> {
        let p = &self.pump;
        PumpPulse::new(
            p.center_wavelength_nm,
            p.spectral_fwhm_nm,
            p.repetition_rate_hz,
            p.average_power_w,
        )
        .map_err(config_err)
    }

    pub fn fiber(&self) -> Result<FiberSpec> {
        let model = DispersionModel::by_name(&self.fiber.dispersion).map_err(config_err)?;
        FiberSpec::new(self.fiber.length_m, self.fiber.birefringence, model).map_err(config_err)
    }

    pub fn imbalance(&self) -> Result<PathImbalance> {
        let i = &self.imbalance;
        if !(i.eta_squared > 0.0 && i.eta_squared <= 1.0) {
            return Err(Error::Config(format!(
                "imbalance.eta_squared must be in (0, 1], got {}",
                i.eta_squared
            )));
        }
        PathImbalance::new(
            i.intrinsic_delay_fs * FS,
            i.compensation_fs * FS,
            i.eta_squared.sqrt(),
            i.phase_rad,
        )
        .map_err(config_err)
    }

    pub fn delays(&self) -> Vec<f64> {
        self.sweep.delays_fs.iter().map(|d| d * FS).collect()
    }

    pub fn grid_points(&self) -> (usize, usize) {
        (self.grid.n_signal, self.grid.n_idler)
    }

    pub fn mle_options(&self, seed: u64) -> MleOptions {
        MleOptions {
            max_iterations: self.tomography.max_iterations,
            restarts: self.tomography.restarts,
            seed,
            ..MleOptions::default()
        }
    }

    /// `|γ(τ₀)|²` implied by the two calibration tangles.
    pub fn calibration_overlap_sq(&self) -> f64 {
        self.calibration.zero_delay_tangle / self.imbalance.eta_squared
    }
}
