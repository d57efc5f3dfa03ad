//! Material dispersion of the fiber and the birefringent four-wave-mixing
//! phase-matching solver.
//!
//! Internally every frequency is an angular frequency in rad/s and every
//! length is in meters. Wavelengths only appear at the API edges: micrometers
//! for the Sellmeier evaluation, nanometers for pump/signal/idler reporting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a vacuum wavelength in nm to an angular frequency in rad/s.
pub fn nm_to_angular(wavelength_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

/// Converts an angular frequency in rad/s to a vacuum wavelength in nm.
pub fn angular_to_nm(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega * 1e9
}

/// One `B λ² / (λ² − C²)` term of a Sellmeier expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellmeierTerm {
    /// Dimensionless oscillator strength `B`.
    pub strength: f64,
    /// Resonance wavelength `C` in µm.
    pub resonance_um: f64,
}

/// Three-term Sellmeier model `n² = 1 + Σ Bᵢλ²/(λ² − Cᵢ²)` with an explicit
/// validity window. Evaluation outside the window is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    name: String,
    terms: [SellmeierTerm; 3],
    valid_range_um: (f64, f64),
}

impl DispersionModel {
    /// Fused silica, I. H. Malitson, J. Opt. Soc. Am. 55, 1205 (1965).
    /// Fit range 0.21–3.71 µm at 20 °C.
    pub fn fused_silica() -> Self {
        Self {
            name: "fused_silica".to_owned(),
            terms: [
                SellmeierTerm {
                    strength: 0.696_166_3,
                    resonance_um: 0.068_404_3,
                },
                SellmeierTerm {
                    strength: 0.407_942_6,
                    resonance_um: 0.116_241_4,
                },
                SellmeierTerm {
                    strength: 0.897_479_4,
                    resonance_um: 9.896_161,
                },
            ],
            valid_range_um: (0.21, 3.71),
        }
    }

    /// Looks up a built-in model by identifier.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "fused_silica" | "fused_silica_malitson" => Ok(Self::fused_silica()),
            other => Err(Error::invalid(
                "dispersion",
                format!("unknown dispersion model `{other}` (known: fused_silica)"),
            )),
        }
    }

    /// Builds a custom model. The index must be real and above 1 across the
    /// whole validity window, so no resonance may fall inside it.
    pub fn new(
        name: impl Into<String>,
        terms: [SellmeierTerm; 3],
        valid_range_um: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = valid_range_um;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::invalid(
                "valid_range_um",
                format!("bad interval [{lo}, {hi}]"),
            ));
        }
        for t in &terms {
            if t.resonance_um >= lo && t.resonance_um <= hi {
                return Err(Error::invalid(
                    "sellmeier_coefficients",
                    format!(
                        "resonance at {} um lies inside the validity window",
                        t.resonance_um
                    ),
                ));
            }
        }
        let model = Self {
            name: name.into(),
            terms,
            valid_range_um,
        };
        for i in 0..=256 {
            let lam = lo + (hi - lo) * i as f64 / 256.0;
            let n2 = model.index_squared(lam);
            if !(n2 > 1.0) {
                return Err(Error::invalid(
                    "sellmeier_coefficients",
                    format!("index not real and > 1 at {lam} um"),
                ));
            }
        }
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[SellmeierTerm; 3] {
        &self.terms
    }

    pub fn valid_range_um(&self) -> (f64, f64) {
        self.valid_range_um
    }

    /// Angular-frequency interval `(ω_min, ω_max)` matching the wavelength window.
    pub fn angular_range(&self) -> (f64, f64) {
        let (lo, hi) = self.valid_range_um;
        (nm_to_angular(hi * 1e3), nm_to_angular(lo * 1e3))
    }

    fn index_squared(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        1.0 + self
            .terms
            .iter()
            .map(|t| t.strength * l2 / (l2 - t.resonance_um * t.resonance_um))
            .sum::<f64>()
    }

    pub fn refractive_index(&self, wavelength_um: f64) -> Result<f64> {
        let (lo, hi) = self.valid_range_um;
        if !(wavelength_um >= lo && wavelength_um <= hi) {
            return Err(Error::OutOfRange {
                wavelength_um,
                min_um: lo,
                max_um: hi,
            });
        }
        Ok(self.index_squared(wavelength_um).sqrt())
    }

    /// Propagation constant `k(ω) = n(ω)·ω/c` in 1/m.
    pub fn wavevector(&self, omega: f64) -> Result<f64> {
        if !(omega > 0.0 && omega.is_finite()) {
            let (lo, hi) = self.valid_range_um;
            return Err(Error::OutOfRange {
                wavelength_um: f64::INFINITY,
                min_um: lo,
                max_um: hi,
            });
        }
        let wavelength_um = angular_to_nm(omega) * 1e-3;
        Ok(self.refractive_index(wavelength_um)? * omega / SPEED_OF_LIGHT)
    }
}

/// The polarization-maintaining fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    length_m: f64,
    birefringence: f64,
    dispersion: DispersionModel,
}

impl FiberSpec {
    pub const DEFAULT_LENGTH_M: f64 = 0.20;
    pub const DEFAULT_BIREFRINGENCE: f64 = 3.5e-4;

    pub fn new(length_m: f64, birefringence: f64, dispersion: DispersionModel) -> Result<Self> {
        if !(length_m > 0.0 && length_m.is_finite()) {
            return Err(Error::invalid(
                "fiber.length_m",
                format!("must be > 0, got {length_m}"),
            ));
        }
        if !(birefringence.abs() < 1e-2) {
            return Err(Error::invalid(
                "fiber.birefringence",
                format!("|dn| must be < 1e-2, got {birefringence}"),
            ));
        }
        Ok(Self {
            length_m,
            birefringence,
            dispersion,
        })
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn birefringence(&self) -> f64 {
        self.birefringence
    }

    pub fn dispersion(&self) -> &DispersionModel {
        &self.dispersion
    }

    pub fn with_length(&self, length_m: f64) -> Result<Self> {
        Self::new(length_m, self.birefringence, self.dispersion.clone())
    }

    pub fn with_birefringence(&self, birefringence: f64) -> Result<Self> {
        Self::new(self.length_m, birefringence, self.dispersion.clone())
    }
}

impl Default for FiberSpec {
    fn default() -> Self {
        Self {
            length_m: Self::DEFAULT_LENGTH_M,
            birefringence: Self::DEFAULT_BIREFRINGENCE,
            dispersion: DispersionModel::fused_silica(),
        }
    }
}

/// `Δk = 2k(ω_p) − k(ω_s) − k(ω_i) + 2Δn·ω_p/c`.
///
/// The pump travels on the slow axis and the pair on the fast axis; that
/// geometry enters only through the sign of the birefringent term.
pub fn phase_mismatch(fiber: &FiberSpec, pump: f64, signal: f64, idler: f64) -> Result<f64> {
    let d = &fiber.dispersion;
    let kp = d.wavevector(pump)?;
    let ks = d.wavevector(signal)?;
    let ki = d.wavevector(idler)?;
    Ok(2.0 * kp - ks - ki + 2.0 * fiber.birefringence * pump / SPEED_OF_LIGHT)
}

/// A root of the phase-matching equations with energy conservation imposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchSolution {
    pub pump_angular_frequency: f64,
    pub signal_angular_frequency: f64,
    pub idler_angular_frequency: f64,
    /// `Δk` re-evaluated at the returned frequencies, 1/m.
    pub residual_mismatch: f64,
    /// More than one sign change was found in the search window; the root
    /// closest to the pump was returned.
    pub ambiguous: bool,
}

impl PhaseMatchSolution {
    pub fn pump_wavelength_nm(&self) -> f64 {
        angular_to_nm(self.pump_angular_frequency)
    }

    pub fn signal_wavelength_nm(&self) -> f64 {
        angular_to_nm(self.signal_angular_frequency)
    }

    pub fn idler_wavelength_nm(&self) -> f64 {
        angular_to_nm(self.idler_angular_frequency)
    }

    /// Signal-pump detuning `(ω_s − ω_p)/2π` in THz.
    pub fn detuning_thz(&self) -> f64 {
        (self.signal_angular_frequency - self.pump_angular_frequency) / (2.0 * std::f64::consts::PI)
            * 1e-12
    }

    pub fn report(&self) -> PhaseMatchReport {
        PhaseMatchReport {
            pump_angular_frequency_rad_s: self.pump_angular_frequency,
            signal_angular_frequency_rad_s: self.signal_angular_frequency,
            idler_angular_frequency_rad_s: self.idler_angular_frequency,
            residual_mismatch_per_m: self.residual_mismatch,
            pump_wavelength_nm: self.pump_wavelength_nm(),
            signal_wavelength_nm: self.signal_wavelength_nm(),
            idler_wavelength_nm: self.idler_wavelength_nm(),
            detuning_thz: self.detuning_thz(),
            ambiguous: self.ambiguous,
        }
    }
}

/// Serialized form of [`PhaseMatchSolution`]: SI fields plus nm/THz
/// conveniences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchReport {
    pub pump_angular_frequency_rad_s: f64,
    pub signal_angular_frequency_rad_s: f64,
    pub idler_angular_frequency_rad_s: f64,
    pub residual_mismatch_per_m: f64,
    pub pump_wavelength_nm: f64,
    pub signal_wavelength_nm: f64,
    pub idler_wavelength_nm: f64,
    pub detuning_thz: f64,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMatchOptions {
    /// Largest signal detuning `ω_s − ω_p` searched, rad/s. `None` uses the
    /// edge of the dispersion model's validity window.
    pub max_detuning: Option<f64>,
    /// Number of coarse samples used to bracket sign changes.
    pub scan_points: usize,
    /// Bisection stops once the bracket is below this fraction of `ω_s`.
    pub relative_tolerance: f64,
}

impl Default for PhaseMatchOptions {
    fn default() -> Self {
        Self {
            max_detuning: None,
            scan_points: 4096,
            relative_tolerance: 1e-12,
        }
    }
}

pub fn solve_phase_matching(
    fiber: &FiberSpec,
    pump_wavelength_nm: f64,
) -> Result<PhaseMatchSolution> {
    solve_phase_matching_with(fiber, pump_wavelength_nm, PhaseMatchOptions::default())
}

pub fn solve_phase_matching_with(
    fiber: &FiberSpec,
    pump_wavelength_nm: f64,
    opts: PhaseMatchOptions,
) -> Result<PhaseMatchSolution> {
    if !(pump_wavelength_nm > 0.0 && pump_wavelength_nm.is_finite()) {
        return Err(Error::invalid(
            "pump_wavelength_nm",
            format!("must be > 0, got {pump_wavelength_nm}"),
        ));
    }
    let wp = nm_to_angular(pump_wavelength_nm);
    let (w_min, w_max) = fiber.dispersion.angular_range();
    // probes the pump frequency against the validity window
    fiber.dispersion.wavevector(wp)?;

    let edge = (w_max - wp).min(wp - w_min);
    let max_detuning = match opts.max_detuning {
        Some(m) if m > 0.0 => m.min(edge),
        Some(m) => {
            return Err(Error::invalid(
                "max_detuning",
                format!("must be > 0, got {m}"),
            ))
        }
        None => edge,
    };
    if !(max_detuning > 0.0) {
        return Err(Error::NoPhaseMatch);
    }

    let mismatch = |detuning: f64| phase_mismatch(fiber, wp, wp + detuning, wp - detuning);

    let n = opts.scan_points.max(16);
    let mut brackets = Vec::new();
    let mut prev = (0.0, mismatch(0.0)?);
    for j in 1..=n {
        let d = max_detuning * j as f64 / n as f64;
        let cur = (d, mismatch(d)?);
        if prev.1 == 0.0 && prev.0 > 0.0 {
            brackets.push((prev.0, prev.0));
        } else if prev.1.signum() != cur.1.signum() && cur.1 != 0.0 {
            brackets.push((prev.0, cur.0));
        }
        prev = cur;
    }
    let Some(&(mut lo, mut hi)) = brackets.first() else {
        return Err(Error::NoPhaseMatch);
    };

    let mut f_lo = mismatch(lo)?;
    while hi - lo > opts.relative_tolerance * (wp + hi) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = mismatch(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let detuning = 0.5 * (lo + hi);
    if !(detuning > 0.0) {
        return Err(Error::NoPhaseMatch);
    }
    let ws = wp + detuning;
    let wi = 2.0 * wp - ws;
    let residual = phase_mismatch(fiber, wp, ws, wi)?;
    let scale = 2.0 * fiber.dispersion.wavevector(wp)?;
    if residual.abs() > 1e-6 * scale {
        return Err(Error::NoPhaseMatch);
    }
    Ok(PhaseMatchSolution {
        pump_angular_frequency: wp,
        signal_angular_frequency: ws,
        idler_angular_frequency: wi,
        residual_mismatch: residual,
        ambiguous: brackets.len() > 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silica_index_regression() {
        // Malitson formula evaluated independently (numpy, float64).
        let n = DispersionModel::fused_silica()
            .refractive_index(0.726)
            .unwrap();
        assert!((n - 1.454724).abs() < 5e-7, "n = {n}");
    }

    #[test]
    fn normal_dispersion_in_visible() {
        let m = DispersionModel::fused_silica();
        assert!(m.refractive_index(0.600).unwrap() > m.refractive_index(0.900).unwrap());
    }

    #[test]
    fn out_of_range_is_an_error() {
        let m = DispersionModel::fused_silica();
        let err = m.refractive_index(0.15).unwrap_err();
        assert!(err.to_string().contains("[0.21, 3.71]"), "{err}");
        assert!(m.refractive_index(4.0).is_err());
        assert!(m.wavevector(0.0).is_err());
    }

    #[test]
    fn wavevector_matches_index() {
        let m = DispersionModel::fused_silica();
        let w = nm_to_angular(726.0);
        let k = m.wavevector(w).unwrap();
        let expected = m.refractive_index(0.726).unwrap() * w / SPEED_OF_LIGHT;
        assert!((k - expected).abs() <= 1e-12 * expected);
        // doubling ω more than doubles k in the normal-dispersion region
        let w1 = nm_to_angular(1400.0);
        assert!(m.wavevector(2.0 * w1).unwrap() > 2.0 * m.wavevector(w1).unwrap());
    }

    #[test]
    fn degenerate_mismatch_vanishes() {
        let fiber = FiberSpec::default().with_birefringence(0.0).unwrap();
        let w = nm_to_angular(726.0);
        assert_eq!(phase_mismatch(&fiber, w, w, w).unwrap(), 0.0);
    }

    #[test]
    fn mismatch_smaller_near_expected_signal() {
        let fiber = FiberSpec::default();
        let wp = nm_to_angular(726.0);
        let at = |lam_s: f64| {
            let ws = nm_to_angular(lam_s);
            phase_mismatch(&fiber, wp, ws, 2.0 * wp - ws).unwrap().abs()
        };
        assert!(at(634.0) < at(600.0) / 10.0);
    }

    #[test]
    fn mismatch_changes_sign_across_root() {
        let fiber = FiberSpec::default();
        let wp = nm_to_angular(726.0);
        let dk = |lam_s: f64| {
            let ws = nm_to_angular(lam_s);
            phase_mismatch(&fiber, wp, ws, 2.0 * wp - ws).unwrap()
        };
        assert!(dk(640.0) > 0.0);
        assert!(dk(628.0) < 0.0);
    }

    #[test]
    fn fiber_validation() {
        assert!(FiberSpec::new(0.0, 3.5e-4, DispersionModel::fused_silica()).is_err());
        assert!(FiberSpec::new(0.2, 2e-2, DispersionModel::fused_silica()).is_err());
        assert!(FiberSpec::new(0.2, -3.5e-4, DispersionModel::fused_silica()).is_ok());
    }

    #[test]
    fn negative_birefringence_has_no_solution() {
        let fiber = FiberSpec::default().with_birefringence(-3.5e-4).unwrap();
        assert!(matches!(
            solve_phase_matching(&fiber, 726.0),
            Err(Error::NoPhaseMatch)
        ));
    }

    #[test]
    fn window_too_small_has_no_solution() {
        let opts = PhaseMatchOptions {
            max_detuning: Some(2.0 * std::f64::consts::PI * 10e12),
            ..Default::default()
        };
        let r = solve_phase_matching_with(&FiberSpec::default(), 726.0, opts);
        assert!(matches!(r, Err(Error::NoPhaseMatch)));
    }

    #[test]
    fn custom_model_rejects_resonance_in_window() {
        let mut terms = *DispersionModel::fused_silica().terms();
        terms[2].resonance_um = 1.0;
        assert!(DispersionModel::new("bad", terms, (0.21, 3.71)).is_err());
    }

    #[test]
    fn solution_report_fields() {
        let s = solve_phase_matching(&FiberSpec::default(), 726.0).unwrap();
        let r = s.report();
        assert!((r.signal_wavelength_nm - 633.70).abs() < 0.05, "{r:?}");
        assert!((r.idler_wavelength_nm - 849.76).abs() < 0.05, "{r:?}");
        assert!(!r.ambiguous);
    }
}
