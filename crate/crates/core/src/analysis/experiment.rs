//! End-to-end pipelines driven by an [`ExperimentConfig`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use super::visibility::{
    analytic_visibility, default_angles, visibility_curve, VisibilityBasis, VisibilityScan,
};
use crate::dispersion::solve_phase_matching;
use crate::dispersion::{FiberSpec, PhaseMatchReport, PhaseMatchSolution};
use crate::error::{Error, Result};
use crate::quantum_state::{
    bell_phi_plus_ket, fidelity_to_pure, linear_entropy, tangle, DensityMatrixJson, TwoQubitState,
};
use crate::rng::{child_seed, Domain};
use crate::source_model::{
    calibrate_pump_bandwidth, compute_jsa, entangled_state, gaussian_coherence_time,
    tangle_delay_sweep, Calibration, FrequencyGrid, JointSpectralAmplitude, PathImbalance,
    PumpPulse, SweepPoint,
};
use crate::tomography::{
    bootstrap_errors, mle_reconstruct, noiseless_counts, simulate_counts_with, BootstrapReport,
    CountRecord, Metric, TomographyResult,
};

const FS: f64 = 1e-15;

/// Solved phase matching, sampled JSA and path model for one config.
#[derive(Debug, Clone)]
pub struct SourceModel {
    /// Pump after calibration (bandwidth possibly refitted).
    pub pump: PumpPulse,
    pub fiber: FiberSpec,
    pub solution: PhaseMatchSolution,
    pub jsa: JointSpectralAmplitude,
    pub imbalance: PathImbalance,
    pub calibration: Option<Calibration>,
}

impl SourceModel {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let fiber = cfg.fiber()?;
        let imbalance = cfg.imbalance()?;
        let mut pump = cfg.pump()?;
        let calibration = if cfg.calibration.enabled {
            let cal = calibrate_pump_bandwidth(
                &pump,
                &fiber,
                cfg.grid_points(),
                cfg.calibration_overlap_sq(),
                imbalance.intrinsic_delay,
            )?;
            pump = cal.pump;
            Some(cal)
        } else {
            None
        };
        let solution = solve_phase_matching(&fiber, pump.center_wavelength_nm())?;
        let (ns, ni) = cfg.grid_points();
        let grid = FrequencyGrid::around_solution(&pump, &fiber, &solution, ns, ni)?;
        let jsa = compute_jsa(&pump, &fiber, &grid)?;
        Ok(Self {
            pump,
            fiber,
            solution,
            jsa,
            imbalance,
            calibration,
        })
    }

    /// Polarization state at an applied compensation delay (s).
    pub fn state_at(&self, compensation: f64) -> Result<TwoQubitState> {
        entangled_state(&self.jsa, &self.imbalance.with_compensation(compensation))
    }

    pub fn configured_state(&self) -> Result<TwoQubitState> {
        entangled_state(&self.jsa, &self.imbalance)
    }

    pub fn sweep(&self, delays: &[f64]) -> Result<Vec<SweepPoint>> {
        tangle_delay_sweep(&self.jsa, &self.imbalance, delays)
    }
}

/// Row of the model-only sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSweepRow {
    pub delay_fs: f64,
    pub tangle: f64,
    pub overlap_abs: f64,
    pub overlap_phase_rad: f64,
}

impl ModelSweepRow {
    fn new(delay_fs: f64, p: &SweepPoint) -> Self {
        Self {
            delay_fs,
            tangle: p.tangle,
            overlap_abs: p.overlap.norm(),
            overlap_phase_rad: p.overlap.arg(),
        }
    }
}

/// Model tangle at each configured delay; `delay_fs` echoes the config value.
pub fn model_delay_sweep(cfg: &ExperimentConfig) -> Result<Vec<ModelSweepRow>> {
    let model = SourceModel::build(cfg)?;
    let points = model.sweep(&cfg.delays())?;
    Ok(cfg
        .sweep
        .delays_fs
        .iter()
        .zip(&points)
        .map(|(&d, p)| ModelSweepRow::new(d, p))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBar {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Reconstructed state with its figures of merit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub density_matrix: DensityMatrixJson,
    pub tangle: f64,
    pub linear_entropy: f64,
    pub fidelity_phi_plus: f64,
    pub neg_log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub brightness_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub errors: Option<BTreeMap<String, ErrorBar>>,
}

impl ReconstructionReport {
    pub fn new(result: &TomographyResult, bootstrap: Option<&BootstrapReport>) -> Self {
        let errors = bootstrap.map(|b| {
            b.estimates
                .iter()
                .map(|e| {
                    (
                        e.metric.name().to_string(),
                        ErrorBar {
                            mean: e.mean,
                            std: e.std,
                            n: e.n,
                        },
                    )
                })
                .collect()
        });
        Self {
            density_matrix: result.rho.to_json(),
            tangle: tangle(&result.rho),
            linear_entropy: linear_entropy(&result.rho),
            fidelity_phi_plus: fidelity_to_pure(&result.rho, &bell_phi_plus_ket())
                .expect("Φ⁺ ket is normalized"),
            neg_log_likelihood: result.neg_log_likelihood,
            converged: result.converged,
            iterations: result.iterations,
            brightness_estimate: result.brightness_estimate,
            errors,
        }
    }
}

/// Counts for `rho` according to the tomography section of the config.
pub fn acquire_counts(
    cfg: &ExperimentConfig,
    rho: &TwoQubitState,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    let t = &cfg.tomography;
    if t.noiseless {
        noiseless_counts(rho, t.brightness, t.duration_s)
    } else {
        simulate_counts_with(rho, t.brightness, t.duration_s, seed)
    }
}

/// MLE plus, when `tomography.bootstrap_resamples >= 2`, bootstrap errors.
pub fn reconstruct(
    cfg: &ExperimentConfig,
    records: &[CountRecord],
    seed: u64,
) -> Result<(TomographyResult, Option<BootstrapReport>)> {
    let opts = cfg.mle_options(child_seed(seed, Domain::MleRestart, 0));
    let result = mle_reconstruct(records, &opts)?;
    let n = cfg.tomography.bootstrap_resamples;
    let boot = if n >= 2 {
        Some(bootstrap_errors(
            records,
            n,
            child_seed(seed, Domain::Bootstrap, 0),
            &Metric::ALL,
            &opts,
        )?)
    } else {
        None
    };
    Ok((result, boot))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub delay_fs: f64,
    pub true_tangle: f64,
    pub reconstructed_tangle: f64,
    /// Bootstrap σ of the tangle; absent when bootstrapping is disabled.
    pub bootstrap_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub brightness: f64,
    pub noiseless: bool,
    pub points: usize,
    pub pump_fwhm_nm: f64,
    pub calibrated: bool,
    /// σ_t of the Gaussian-pump oracle at the used bandwidth, fs.
    pub gaussian_coherence_time_fs: f64,
    pub peak_delay_fs: f64,
    pub peak_true_tangle: f64,
    pub peak_reconstructed_tangle: f64,
    pub zero_delay_true_tangle: Option<f64>,
    /// Fraction of rows with |reconstructed − true| ≤ 3σ.
    pub fraction_within_3sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySweepExperiment {
    pub rows: Vec<ExperimentRow>,
    pub summary: SweepSummary,
}

fn at_delay(delay_fs: f64) -> impl Fn(Error) -> Error {
    move |e| Error::AtDelay {
        delay_fs,
        source: Box::new(e),
    }
}

/// JSA → overlap per delay → state → simulated tomography → MLE → tangle
/// with bootstrap error bars. Delay `k` draws from `child_seed(seed, k)`.
pub fn run_delay_sweep_experiment(cfg: &ExperimentConfig) -> Result<DelaySweepExperiment> {
    let model = SourceModel::build(cfg)?;
    run_delay_sweep_on(cfg, &model)
}

pub fn run_delay_sweep_on(
    cfg: &ExperimentConfig,
    model: &SourceModel,
) -> Result<DelaySweepExperiment> {
    let delays = cfg.delays();
    let truth = model.sweep(&delays)?;
    let mut rows = Vec::with_capacity(delays.len());
    for (k, point) in truth.iter().enumerate() {
        let delay_fs = cfg.sweep.delays_fs[k];
        let annotate = at_delay(delay_fs);
        let seed = child_seed(cfg.seed, Domain::SweepPoint, k as u64);
        let rho = model.state_at(point.delay).map_err(&annotate)?;
        let records = acquire_counts(cfg, &rho, seed).map_err(&annotate)?;
        let (result, boot) = reconstruct(cfg, &records, seed).map_err(&annotate)?;
        rows.push(ExperimentRow {
            delay_fs,
            true_tangle: point.tangle,
            reconstructed_tangle: tangle(&result.rho),
            bootstrap_std: boot
                .as_ref()
                .and_then(|b| b.get(Metric::Tangle))
                .map(|e| e.std),
        });
    }

    let peak = rows
        .iter()
        .max_by(|a, b| a.true_tangle.total_cmp(&b.true_tangle))
        .expect("at least one delay");
    let within: Vec<bool> = rows
        .iter()
        .filter_map(|r| {
            r.bootstrap_std
                .map(|s| (r.reconstructed_tangle - r.true_tangle).abs() <= 3.0 * s)
        })
        .collect();
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        brightness: cfg.tomography.brightness,
        noiseless: cfg.tomography.noiseless,
        points: rows.len(),
        pump_fwhm_nm: model.pump.spectral_fwhm_nm(),
        calibrated: model.calibration.is_some(),
        gaussian_coherence_time_fs: gaussian_coherence_time(&model.pump) / FS,
        peak_delay_fs: peak.delay_fs,
        peak_true_tangle: peak.true_tangle,
        peak_reconstructed_tangle: peak.reconstructed_tangle,
        zero_delay_true_tangle: rows
            .iter()
            .find(|r| r.delay_fs == 0.0)
            .map(|r| r.true_tangle),
        fraction_within_3sigma: (!within.is_empty())
            .then(|| within.iter().filter(|&&w| w).count() as f64 / within.len() as f64),
    };
    Ok(DelaySweepExperiment { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub basis: VisibilityBasis,
    pub fringe_fit_visibility: f64,
    pub analytic_visibility: f64,
    pub max_fit_residual: f64,
}

/// Fringe scan and closed-form check for one basis.
pub fn visibility_report(
    rho: &TwoQubitState,
    basis: VisibilityBasis,
    points: usize,
    brightness: f64,
) -> Result<(VisibilityScan, VisibilityReport)> {
    let scan = visibility_curve(rho, basis, &default_angles(points)?, brightness)?;
    let report = VisibilityReport {
        basis,
        fringe_fit_visibility: scan.visibility,
        analytic_visibility: analytic_visibility(rho, basis)?,
        max_fit_residual: scan.max_residual,
    };
    Ok((scan, report))
}

/// Everything `full-experiment` writes.
#[derive(Debug, Clone)]
pub struct FullExperiment {
    pub phasematch: PhaseMatchReport,
    pub sweep: DelaySweepExperiment,
    /// Counts at the configured compensation delay.
    pub counts: Vec<CountRecord>,
    pub reconstruction: ReconstructionReport,
    pub visibility: Vec<(VisibilityScan, VisibilityReport)>,
}

pub fn run_full_experiment(cfg: &ExperimentConfig) -> Result<FullExperiment> {
    let model = SourceModel::build(cfg)?;
    let sweep = run_delay_sweep_on(cfg, &model)?;
    let rho = model.configured_state()?;
    // a seed index past the sweep's keeps this acquisition independent
    let seed = child_seed(cfg.seed, Domain::SweepPoint, u64::MAX);
    let counts = acquire_counts(cfg, &rho, seed)?;
    let (result, boot) = reconstruct(cfg, &counts, seed)?;
    let visibility = [VisibilityBasis::HV, VisibilityBasis::DA]
        .into_iter()
        .map(|b| {
            visibility_report(
                &result.rho,
                b,
                cfg.visibility.points,
                cfg.tomography.brightness,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FullExperiment {
        phasematch: model.solution.report(),
        sweep,
        counts,
        reconstruction: ReconstructionReport::new(&result, boot.as_ref()),
        visibility,
    })
}
