//! Joint spectral amplitude of the fiber photon pair and the Sagnac-loop path
//! overlap model.
//!
//! The two counter-propagating paths produce the same spectral amplitude `f`;
//! a net delay `τ` between them multiplies the V-path amplitude by
//! `e^{i(ω_s+ω_i)τ}`. The overlap of the two wavepackets sets the coherence of
//! the polarization state and hence the tangle.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::dispersion::{
    nm_to_angular, phase_mismatch, solve_phase_matching, FiberSpec, PhaseMatchSolution,
    SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::quantum_state::{dephased_pair_state, tangle, OverlapParameters, TwoQubitState, C64};

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3; // 2√(2 ln 2)

/// Transform-limited Gaussian pump pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpPulse {
    center_wavelength_nm: f64,
    spectral_fwhm_nm: f64,
    repetition_rate_hz: f64,
    average_power_w: f64,
}

impl PumpPulse {
    pub fn new(
        center_wavelength_nm: f64,
        spectral_fwhm_nm: f64,
        repetition_rate_hz: f64,
        average_power_w: f64,
    ) -> Result<Self> {
        if !(center_wavelength_nm > 0.0 && center_wavelength_nm.is_finite()) {
            return Err(Error::invalid(
                "pump.center_wavelength_nm",
                format!("must be > 0, got {center_wavelength_nm}"),
            ));
        }
        if !(spectral_fwhm_nm > 0.0 && spectral_fwhm_nm < center_wavelength_nm / 10.0) {
            return Err(Error::invalid(
                "pump.spectral_fwhm_nm",
                format!(
                    "must be in (0, {}), got {spectral_fwhm_nm}",
                    center_wavelength_nm / 10.0
                ),
            ));
        }
        if !(repetition_rate_hz > 0.0) || !(average_power_w >= 0.0) {
            return Err(Error::invalid(
                "pump",
                "repetition rate must be > 0 and power >= 0",
            ));
        }
        Ok(Self {
            center_wavelength_nm,
            spectral_fwhm_nm,
            repetition_rate_hz,
            average_power_w,
        })
    }

    pub fn center_wavelength_nm(&self) -> f64 {
        self.center_wavelength_nm
    }

    pub fn spectral_fwhm_nm(&self) -> f64 {
        self.spectral_fwhm_nm
    }

    pub fn repetition_rate_hz(&self) -> f64 {
        self.repetition_rate_hz
    }

    pub fn average_power_w(&self) -> f64 {
        self.average_power_w
    }

    pub fn with_fwhm_nm(&self, spectral_fwhm_nm: f64) -> Result<Self> {
        Self::new(
            self.center_wavelength_nm,
            spectral_fwhm_nm,
            self.repetition_rate_hz,
            self.average_power_w,
        )
    }

    pub fn center_angular(&self) -> f64 {
        nm_to_angular(self.center_wavelength_nm)
    }

    /// Intensity FWHM in angular frequency, `2πcΔλ/λ²`.
    pub fn fwhm_angular(&self) -> f64 {
        let lam = self.center_wavelength_nm * 1e-9;
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * self.spectral_fwhm_nm * 1e-9 / (lam * lam)
    }

    /// Standard deviation of `|α(ω_sum)|²`, rad/s.
    pub fn sum_sigma(&self) -> f64 {
        self.fwhm_angular() / FWHM_PER_SIGMA
    }
}

impl Default for PumpPulse {
    fn default() -> Self {
        Self {
            center_wavelength_nm: 726.0,
            spectral_fwhm_nm: 6.0,
            repetition_rate_hz: 80e6,
            average_power_w: 5e-3,
        }
    }
}

/// Pump amplitude `α(ω_s + ω_i)`: a real Gaussian peaked at `2ω_p` whose
/// squared magnitude has the pump's intensity FWHM.
pub fn pump_envelope(pump: &PumpPulse, omega_sum: f64) -> C64 {
    let x = omega_sum - 2.0 * pump.center_angular();
    let s = pump.sum_sigma();
    Complex::new((-x * x / (4.0 * s * s)).exp(), 0.0)
}

/// Uniformly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }

    /// Composite trapezoid weight of sample `i`, including the step.
    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }
}

/// Rectangular grid of signal × idler angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub signal: Axis,
    pub idler: Axis,
}

impl FrequencyGrid {
    pub const MIN_POINTS: usize = 64;
    pub const DEFAULT_POINTS: usize = 512;

    pub fn new(signal: Axis, idler: Axis) -> Result<Self> {
        for (name, ax) in [("grid.signal", signal), ("grid.idler", idler)] {
            if ax.len < Self::MIN_POINTS {
                return Err(Error::invalid(
                    name,
                    format!("need >= {} points, got {}", Self::MIN_POINTS, ax.len),
                ));
            }
            if !(ax.step > 0.0 && ax.start > 0.0 && ax.end().is_finite()) {
                return Err(Error::invalid(
                    name,
                    "axis must be positive and strictly increasing",
                ));
            }
        }
        Ok(Self { signal, idler })
    }

    /// Grid of `n_s × n_i` points centered on `(ω_s0, ω_i0)` with the given
    /// half-spans.
    pub fn centered(
        signal_center: f64,
        idler_center: f64,
        signal_half_span: f64,
        idler_half_span: f64,
        n_s: usize,
        n_i: usize,
    ) -> Result<Self> {
        let axis = |center: f64, half: f64, n: usize| Axis {
            start: center - half,
            step: 2.0 * half / (n.max(2) - 1) as f64,
            len: n,
        };
        Self::new(
            axis(signal_center, signal_half_span, n_s),
            axis(idler_center, idler_half_span, n_i),
        )
    }

    /// Default design around the phase-matched point: ±5 pump intensity FWHM
    /// in the sum direction and ±3 phase-matching main lobes in the
    /// difference direction.
    pub fn around_solution(
        pump: &PumpPulse,
        fiber: &FiberSpec,
        solution: &PhaseMatchSolution,
        n_s: usize,
        n_i: usize,
    ) -> Result<Self> {
        let lobe = main_lobe_half_width(fiber, solution)?;
        let half = 2.5 * pump.fwhm_angular() + 3.0 * lobe;
        Self::centered(
            solution.signal_angular_frequency,
            solution.idler_angular_frequency,
            half,
            half,
            n_s,
            n_i,
        )
    }

    /// Extent of `ω_s + ω_i` covered by the grid.
    pub fn sum_span(&self) -> f64 {
        (self.signal.end() + self.idler.end()) - (self.signal.start + self.idler.start)
    }
}

/// Distance from the phase-matched point to the first sinc null along the
/// difference direction `(ω_s + δ, ω_i − δ)`.
pub fn main_lobe_half_width(fiber: &FiberSpec, solution: &PhaseMatchSolution) -> Result<f64> {
    let (ws, wi) = (
        solution.signal_angular_frequency,
        solution.idler_angular_frequency,
    );
    let wp = 0.5 * (ws + wi);
    let h = 1e-4 * (ws - wi);
    let slope = (phase_mismatch(fiber, wp, ws + h, wi - h)?
        - phase_mismatch(fiber, wp, ws - h, wi + h)?)
        / (2.0 * h);
    if slope == 0.0 {
        return Err(Error::invalid(
            "fiber",
            "phase mismatch has zero slope along the difference direction",
        ));
    }
    Ok(2.0 * std::f64::consts::PI / (slope.abs() * fiber.length_m()))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Normalized two-photon spectral amplitude `f(ω_s, ω_i)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    grid: FrequencyGrid,
    /// Row-major: `amplitude[i * n_i + j] = f(ω_s[i], ω_i[j])`.
    amplitude: Vec<C64>,
    /// `2ω_p`; the overlap phase is referenced to it.
    reference_sum: f64,
}

impl JointSpectralAmplitude {
    /// Samples `f` on the grid and normalizes it so that the trapezoidal
    /// `Σ|f|² dω_s dω_i = 1`.
    pub fn from_fn<F>(grid: FrequencyGrid, reference_sum: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<C64> + Sync,
    {
        let (ns, ni) = (grid.signal.len, grid.idler.len);
        let rows = map_indexed(ns, |i| {
            let ws = grid.signal.value(i);
            (0..ni)
                .map(|j| f(ws, grid.idler.value(j)))
                .collect::<Result<Vec<_>>>()
        });
        let mut amplitude = Vec::with_capacity(ns * ni);
        for row in rows {
            amplitude.extend(row?);
        }
        if amplitude
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("jsa", "amplitude is not finite"));
        }
        let mut jsa = Self {
            grid,
            amplitude,
            reference_sum,
        };
        let norm = jsa.norm_sqr();
        if !(norm > 0.0) {
            return Err(Error::invalid("jsa", "amplitude vanishes on the grid"));
        }
        let scale = 1.0 / norm.sqrt();
        jsa.amplitude.iter_mut().for_each(|z| *z *= scale);
        Ok(jsa)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn reference_sum(&self) -> f64 {
        self.reference_sum
    }

    pub fn amplitude(&self, i: usize, j: usize) -> C64 {
        self.amplitude[i * self.grid.idler.len + j]
    }

    /// Trapezoidal `Σ|f|² dω_s dω_i`.
    pub fn norm_sqr(&self) -> f64 {
        self.intensity_rows().iter().sum()
    }

    /// Per-row weighted intensities `w_i w_j |f_ij|²`.
    fn weighted_intensity(&self) -> Vec<f64> {
        let ni = self.grid.idler.len;
        let mut out = Vec::with_capacity(self.amplitude.len());
        for i in 0..self.grid.signal.len {
            let wi = self.grid.signal.weight(i);
            for j in 0..ni {
                out.push(wi * self.grid.idler.weight(j) * self.amplitude[i * ni + j].norm_sqr());
            }
        }
        out
    }

    fn intensity_rows(&self) -> Vec<f64> {
        let ni = self.grid.idler.len;
        let w = self.weighted_intensity();
        w.chunks(ni).map(|r| r.iter().sum()).collect()
    }

    /// Grid indices of the largest `|f|`.
    pub fn argmax(&self) -> (usize, usize) {
        let ni = self.grid.idler.len;
        let (k, _) = self
            .amplitude
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (k, z)| {
                let m = z.norm_sqr();
                if m > best.1 {
                    (k, m)
                } else {
                    best
                }
            });
        (k / ni, k % ni)
    }

    pub fn to_json(&self) -> JsaJson {
        let ni = self.grid.idler.len;
        JsaJson {
            signal_omega_rad_s: self.grid.signal.values(),
            idler_omega_rad_s: self.grid.idler.values(),
            re: self
                .amplitude
                .chunks(ni)
                .map(|r| r.iter().map(|z| z.re).collect())
                .collect(),
            im: self
                .amplitude
                .chunks(ni)
                .map(|r| r.iter().map(|z| z.im).collect())
                .collect(),
        }
    }
}

/// Plot-ready export: grid axes plus row-major real/imaginary parts
/// (rows = signal, columns = idler).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsaJson {
    pub signal_omega_rad_s: Vec<f64>,
    pub idler_omega_rad_s: Vec<f64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// `f ∝ α(ω_s + ω_i)·sinc(Δk·L/2)`.
///
/// The mismatch is evaluated with the pump frequency `(ω_s + ω_i)/2` so that
/// energy conservation holds at every grid point.
pub fn compute_jsa(
    pump: &PumpPulse,
    fiber: &FiberSpec,
    grid: &FrequencyGrid,
) -> Result<JointSpectralAmplitude> {
    let need = 6.0 * pump.sum_sigma();
    if grid.sum_span() < need {
        return Err(Error::invalid(
            "grid",
            format!(
                "sum-frequency span {:e} rad/s covers fewer than 6 pump sigmas ({need:e})",
                grid.sum_span()
            ),
        ));
    }
    let d = fiber.dispersion();
    for w in [
        grid.signal.start,
        grid.signal.end(),
        grid.idler.start,
        grid.idler.end(),
    ] {
        d.wavevector(w)?;
    }
    let half_length = 0.5 * fiber.length_m();
    JointSpectralAmplitude::from_fn(*grid, 2.0 * pump.center_angular(), |ws, wi| {
        let dk = phase_mismatch(fiber, 0.5 * (ws + wi), ws, wi)?;
        Ok(pump_envelope(pump, ws + wi) * sinc(dk * half_length))
    })
}

/// Builds the default grid around the solved phase-matching point and samples
/// the JSA on it.
pub fn default_jsa(
    pump: &PumpPulse,
    fiber: &FiberSpec,
    n_s: usize,
    n_i: usize,
) -> Result<(JointSpectralAmplitude, PhaseMatchSolution)> {
    let solution = solve_phase_matching(fiber, pump.center_wavelength_nm())?;
    let grid = FrequencyGrid::around_solution(pump, fiber, &solution, n_s, n_i)?;
    Ok((compute_jsa(pump, fiber, &grid)?, solution))
}

/// Temporal and residual imperfections of the two Sagnac paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathImbalance {
    /// Delay of the V path relative to the H path from alignment, s.
    pub intrinsic_delay: f64,
    /// Delay applied to the V-polarized pump, s. Positive delays the V pump.
    pub applied_compensation: f64,
    /// Non-temporal distinguishability factor multiplying the overlap.
    pub eta: f64,
    /// Settable relative phase φ, radians. Absorbs the carrier phase
    /// `2ω_p·τ` of the delayed pump.
    pub relative_phase: f64,
}

impl PathImbalance {
    pub fn new(
        intrinsic_delay: f64,
        applied_compensation: f64,
        eta: f64,
        relative_phase: f64,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(
                "imbalance.eta",
                format!("must be in (0, 1], got {eta}"),
            ));
        }
        if !(intrinsic_delay.is_finite()
            && applied_compensation.is_finite()
            && relative_phase.is_finite())
        {
            return Err(Error::invalid(
                "imbalance",
                "delays and phase must be finite",
            ));
        }
        Ok(Self {
            intrinsic_delay,
            applied_compensation,
            eta,
            relative_phase,
        })
    }

    /// Perfectly balanced loop.
    pub fn ideal() -> Self {
        Self {
            intrinsic_delay: 0.0,
            applied_compensation: 0.0,
            eta: 1.0,
            relative_phase: 0.0,
        }
    }

    /// `τ = τ₀ − τ_c`.
    pub fn net_delay(&self) -> f64 {
        self.intrinsic_delay - self.applied_compensation
    }

    pub fn with_compensation(&self, applied_compensation: f64) -> Self {
        Self {
            applied_compensation,
            ..*self
        }
    }
}

/// Wavepacket overlap `γ = η ∬|f|² e^{i(ω_s+ω_i−2ω_p)τ} dω_s dω_i`.
///
/// The exponential factorizes over the axes, so this is a matrix-vector
/// product with precomputed axis phases. Row partial sums are reduced in
/// fixed order, making the result independent of thread count.
pub fn path_overlap(jsa: &JointSpectralAmplitude, imbalance: &PathImbalance) -> C64 {
    let tau = imbalance.net_delay();
    let grid = &jsa.grid;
    let ni = grid.idler.len;
    let half_ref = 0.5 * jsa.reference_sum;
    let idler_phase: Vec<C64> = (0..ni)
        .map(|j| C64::from_polar(1.0, (grid.idler.value(j) - half_ref) * tau))
        .collect();
    let weights = jsa.weighted_intensity();
    let rows = map_indexed(grid.signal.len, |i| {
        let row = &weights[i * ni..(i + 1) * ni];
        let mut acc = C64::new(0.0, 0.0);
        let mut norm = 0.0;
        for (w, p) in row.iter().zip(&idler_phase) {
            acc += p * *w;
            norm += *w;
        }
        (
            acc * C64::from_polar(1.0, (grid.signal.value(i) - half_ref) * tau),
            norm,
        )
    });
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for (a, n) in rows {
        num += a;
        den += n;
    }
    num / den * imbalance.eta
}

/// Dephased pair state for the given path imbalance.
pub fn entangled_state(
    jsa: &JointSpectralAmplitude,
    imbalance: &PathImbalance,
) -> Result<TwoQubitState> {
    let gamma = path_overlap(jsa, imbalance);
    // guard against a rounding overshoot of |γ| above 1
    let gamma = if gamma.norm() > 1.0 {
        gamma / gamma.norm()
    } else {
        gamma
    };
    dephased_pair_state(OverlapParameters::new(gamma, imbalance.relative_phase)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Applied compensation delay τ_c, s.
    pub delay: f64,
    pub tangle: f64,
    pub overlap: C64,
}

/// Tangle versus applied compensation delay.
pub fn tangle_delay_sweep(
    jsa: &JointSpectralAmplitude,
    template: &PathImbalance,
    delays: &[f64],
) -> Result<Vec<SweepPoint>> {
    delays
        .iter()
        .map(|&delay| {
            if !delay.is_finite() {
                return Err(Error::invalid("delays", "delays must be finite"));
            }
            let imb = template.with_compensation(delay);
            let overlap = path_overlap(jsa, &imb);
            let state = entangled_state(jsa, &imb)?;
            Ok(SweepPoint {
                delay,
                tangle: tangle(&state),
                overlap,
            })
        })
        .collect()
}

/// Coherence time `σ_t` of the Gaussian-pump-only model, for which
/// `|γ(τ)| = exp(−τ²/(4σ_t²))`.
pub fn gaussian_coherence_time(pump: &PumpPulse) -> f64 {
    1.0 / (std::f64::consts::SQRT_2 * pump.sum_sigma())
}

/// `σ_t` for which the Gaussian model gives `|γ(τ)|² = overlap_sq`.
pub fn coherence_time_for(overlap_sq: f64, delay: f64) -> Result<f64> {
    if !(overlap_sq > 0.0 && overlap_sq < 1.0) || delay == 0.0 {
        return Err(Error::invalid(
            "calibration",
            format!("need 0 < |gamma|^2 < 1 at a nonzero delay, got {overlap_sq} at {delay}"),
        ));
    }
    Ok(delay.abs() / (-2.0 * overlap_sq.ln()).sqrt())
}

/// Result of fitting the pump bandwidth to a measured overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub pump: PumpPulse,
    /// `σ_t` from the Gaussian oracle (initial guess).
    pub gaussian_coherence_time: f64,
    /// `|γ(delay)|²` of the full Gaussian×sinc model at the fitted bandwidth.
    pub achieved_overlap_sq: f64,
}

/// Finds the pump spectral FWHM for which the full JSA model reproduces
/// `|γ(delay)|² = overlap_sq` (η excluded). The Gaussian-only closed form
/// seeds a bisection on the full model.
pub fn calibrate_pump_bandwidth(
    pump: &PumpPulse,
    fiber: &FiberSpec,
    grid_points: (usize, usize),
    overlap_sq: f64,
    delay: f64,
) -> Result<Calibration> {
    let sigma_t = coherence_time_for(overlap_sq, delay)?;
    let lam = pump.center_wavelength_nm() * 1e-9;
    let sigma_w = 1.0 / (std::f64::consts::SQRT_2 * sigma_t);
    let guess_nm =
        FWHM_PER_SIGMA * sigma_w * lam * lam / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT) * 1e9;

    let solution = solve_phase_matching(fiber, pump.center_wavelength_nm())?;
    let probe = PathImbalance {
        intrinsic_delay: delay,
        ..PathImbalance::ideal()
    };
    let overlap_at = |fwhm_nm: f64| -> Result<f64> {
        let p = pump.with_fwhm_nm(fwhm_nm)?;
        let grid =
            FrequencyGrid::around_solution(&p, fiber, &solution, grid_points.0, grid_points.1)?;
        let jsa = compute_jsa(&p, fiber, &grid)?;
        Ok(path_overlap(&jsa, &probe).norm_sqr())
    };

    let max_fwhm = pump.center_wavelength_nm() / 10.0 * 0.999;
    let (mut lo, mut hi) = (0.5 * guess_nm, (2.0 * guess_nm).min(max_fwhm));
    // |γ|² decreases with bandwidth
    if overlap_at(lo)? < overlap_sq || overlap_at(hi)? > overlap_sq {
        return Err(Error::invalid(
            "calibration",
            "target overlap not bracketed by the pump bandwidth search",
        ));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if overlap_at(mid)? > overlap_sq {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-11 * mid {
            break;
        }
    }
    let fwhm = 0.5 * (lo + hi);
    Ok(Calibration {
        pump: pump.with_fwhm_nm(fwhm)?,
        gaussian_coherence_time: sigma_t,
        achieved_overlap_sq: overlap_at(fwhm)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 1e-15;

    #[test]
    fn envelope_peak_and_half_width() {
        let pump = PumpPulse::default();
        let wp = pump.center_angular();
        assert_eq!(pump_envelope(&pump, 2.0 * wp), C64::new(1.0, 0.0));
        let half = 0.5 * pump.fwhm_angular();
        for x in [-half, half] {
            let a = pump_envelope(&pump, 2.0 * wp + x);
            assert!((a.norm_sqr() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn pump_fwhm_in_thz() {
        // Δν = cΔλ/λ² = 299792458 * 6e-9 / (726e-9)^2
        let expected = 299_792_458.0 * 6e-9 / (726e-9f64 * 726e-9) / 1e12;
        assert!((expected - 3.4127).abs() < 1e-3);
        let got = PumpPulse::default().fwhm_angular() / (2.0 * std::f64::consts::PI) / 1e12;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn pump_validation() {
        assert!(PumpPulse::new(726.0, 0.0, 80e6, 0.0).is_err());
        assert!(PumpPulse::new(726.0, 80.0, 80e6, 0.0).is_err());
        assert!(PumpPulse::new(-1.0, 6.0, 80e6, 0.0).is_err());
    }

    #[test]
    fn grid_validation() {
        let ax = Axis {
            start: 1e15,
            step: 1e11,
            len: 32,
        };
        assert!(FrequencyGrid::new(ax, ax).is_err());
        let ok = Axis { len: 64, ..ax };
        assert!(FrequencyGrid::new(ok, ok).is_ok());
        let neg = Axis { step: -1.0, ..ok };
        assert!(FrequencyGrid::new(neg, ok).is_err());
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let pump = PumpPulse::default();
        let fiber = FiberSpec::default();
        let s = solve_phase_matching(&fiber, 726.0).unwrap();
        let tiny = FrequencyGrid::centered(
            s.signal_angular_frequency,
            s.idler_angular_frequency,
            1e11,
            1e11,
            64,
            64,
        )
        .unwrap();
        assert!(compute_jsa(&pump, &fiber, &tiny).is_err());
    }

    #[test]
    fn overlap_identity_at_zero_delay() {
        let (jsa, _) = default_jsa(&PumpPulse::default(), &FiberSpec::default(), 128, 128).unwrap();
        let g = path_overlap(
            &jsa,
            &PathImbalance::new(28.0 * FS, 28.0 * FS, 1.0, 0.0).unwrap(),
        );
        assert_eq!(g, C64::new(1.0, 0.0));
        let g = path_overlap(&jsa, &PathImbalance::new(0.0, 0.0, 0.8, 0.0).unwrap());
        assert_eq!(g, C64::new(0.8, 0.0));
    }

    #[test]
    fn overlap_modulus_is_even() {
        let (jsa, _) = default_jsa(&PumpPulse::default(), &FiberSpec::default(), 128, 128).unwrap();
        for t in [5.0, 20.0, 60.0] {
            let a = path_overlap(&jsa, &PathImbalance::new(t * FS, 0.0, 1.0, 0.0).unwrap());
            let b = path_overlap(&jsa, &PathImbalance::new(-t * FS, 0.0, 1.0, 0.0).unwrap());
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn imbalance_validation() {
        assert!(PathImbalance::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(PathImbalance::new(0.0, 0.0, 1.2, 0.0).is_err());
        assert!(PathImbalance::new(f64::NAN, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn coherence_time_inverts_gaussian() {
        let st = coherence_time_for(0.8, 30.0 * FS).unwrap();
        let g = (-(30.0 * FS) * (30.0 * FS) / (4.0 * st * st)).exp();
        assert!((g * g - 0.8).abs() < 1e-12);
        assert!(coherence_time_for(1.0, 1.0).is_err());
    }
}
