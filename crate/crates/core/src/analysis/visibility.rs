//! Two-photon interference fringes.
//!
//! The idler analyzer is fixed (|H⟩ or |D⟩) and the signal polarization is
//! rotated by θ. Here θ is the rotation of the polarization itself; a
//! half-wave plate rotated by θ/2 produces it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum_state::{kron, Polarization, PolarizationKet, TwoQubitState, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VisibilityBasis {
    #[serde(rename = "HV")]
    HV,
    #[serde(rename = "DA")]
    DA,
}

impl VisibilityBasis {
    pub fn idler_analyzer(self) -> Polarization {
        match self {
            VisibilityBasis::HV => Polarization::H,
            VisibilityBasis::DA => Polarization::D,
        }
    }
}

impl fmt::Display for VisibilityBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VisibilityBasis::HV => "HV",
            VisibilityBasis::DA => "DA",
        })
    }
}

impl FromStr for VisibilityBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('/', "").as_str() {
            "HV" => Ok(VisibilityBasis::HV),
            "DA" => Ok(VisibilityBasis::DA),
            _ => Err(Error::Parse(format!(
                "unknown visibility basis `{s}` (expected HV or DA)"
            ))),
        }
    }
}

/// `a + b·cos(2θ + c)` with `b ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

impl FringeFit {
    pub fn eval(&self, theta: f64) -> f64 {
        self.offset + self.amplitude * (2.0 * theta + self.phase_rad).cos()
    }

    /// `(C_max − C_min)/(C_max + C_min)` of the fitted curve, clamped to 1.
    pub fn visibility(&self) -> f64 {
        (self.amplitude / self.offset).min(1.0)
    }

    fn from_quadratures(a: f64, b: f64, c: f64) -> Result<Self> {
        let amplitude = b.hypot(c);
        let scale = a.abs().max(amplitude);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateFit(
                "fringe has zero offset and amplitude".into(),
            ));
        }
        if !(a > 0.0) {
            return Err(Error::DegenerateFit(format!(
                "fringe offset {a} is not positive"
            )));
        }
        Ok(Self {
            offset: a,
            amplitude,
            phase_rad: (-c).atan2(b),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityScan {
    pub basis: VisibilityBasis,
    /// Signal polarization rotation angles, rad.
    pub angles_rad: Vec<f64>,
    /// Expected coincidences at each angle.
    pub coincidences: Vec<f64>,
    pub fit: FringeFit,
    pub visibility: f64,
    /// Largest |data − fit|.
    pub max_residual: f64,
}

/// Evenly spaced angles over `[0, π]`, both ends included.
pub fn default_angles(points: usize) -> Result<Vec<f64>> {
    if points < 4 {
        return Err(Error::invalid(
            "visibility.points",
            format!("need >= 4, got {points}"),
        ));
    }
    Ok((0..points)
        .map(|k| PI * k as f64 / (points - 1) as f64)
        .collect())
}

fn idler_projector(basis: VisibilityBasis) -> Matrix2<C64> {
    basis.idler_analyzer().ket().projector()
}

/// `C(θ) = N·Tr(ρ(|θ⟩⟨θ| ⊗ Π_i))` on the grid, then a least-squares fringe fit.
pub fn visibility_curve(
    rho: &TwoQubitState,
    basis: VisibilityBasis,
    angles: &[f64],
    brightness: f64,
) -> Result<VisibilityScan> {
    if !(brightness > 0.0 && brightness.is_finite()) {
        return Err(Error::invalid(
            "brightness",
            format!("must be > 0, got {brightness}"),
        ));
    }
    if angles.len() < 3 || angles.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("angles", "need at least 3 finite angles"));
    }
    let (lo, hi) = angles
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &t| {
            (l.min(t), h.max(t))
        });
    if hi - lo < PI - 1e-12 {
        return Err(Error::invalid(
            "angles",
            format!("must span at least pi (one fringe period), got {}", hi - lo),
        ));
    }
    let pi_idler = idler_projector(basis);
    let coincidences: Vec<f64> = angles
        .iter()
        .map(|&t| {
            brightness * rho.expectation(&kron(&PolarizationKet::linear(t).projector(), &pi_idler))
        })
        .collect();

    let design = DMatrix::from_fn(angles.len(), 3, |r, c| match c {
        0 => 1.0,
        1 => (2.0 * angles[r]).cos(),
        _ => (2.0 * angles[r]).sin(),
    });
    let y = DVector::from_column_slice(&coincidences);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() < 1e-10 * smax {
        return Err(Error::DegenerateFit(
            "angle grid does not resolve the fringe".into(),
        ));
    }
    let x = svd
        .solve(&y, 1e-14 * smax)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let fit = FringeFit::from_quadratures(x[0], x[1], x[2])?;
    let max_residual = angles
        .iter()
        .zip(&coincidences)
        .map(|(&t, &c)| (c - fit.eval(t)).abs())
        .fold(0.0, f64::max);
    Ok(VisibilityScan {
        basis,
        angles_rad: angles.to_vec(),
        coincidences,
        visibility: fit.visibility(),
        fit,
        max_residual,
    })
}

/// Closed-form visibility from `|θ⟩⟨θ| = (I + cos2θ·Z + sin2θ·X)/2`.
pub fn analytic_visibility(rho: &TwoQubitState, basis: VisibilityBasis) -> Result<f64> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let pi_idler = idler_projector(basis);
    let a = rho.expectation(&kron(&Matrix2::identity(), &pi_idler));
    let b = rho.expectation(&kron(&Matrix2::new(o, z, z, -o), &pi_idler));
    let c = rho.expectation(&kron(&Matrix2::new(z, o, o, z), &pi_idler));
    Ok(FringeFit::from_quadratures(a, b, c)?.visibility())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_state::{bell_phi_plus, dephased_pair_state, OverlapParameters};

    #[test]
    fn bell_state_full_visibility() {
        let angles = default_angles(37).unwrap();
        for basis in [VisibilityBasis::HV, VisibilityBasis::DA] {
            let scan = visibility_curve(&bell_phi_plus(), basis, &angles, 1000.0).unwrap();
            assert!((scan.visibility - 1.0).abs() < 1e-12);
            assert!(scan.max_residual < 1e-10);
        }
    }

    #[test]
    fn da_visibility_equals_overlap() {
        let rho = dephased_pair_state(OverlapParameters::real(0.92315, 0.0).unwrap()).unwrap();
        let angles = default_angles(37).unwrap();
        let hv = visibility_curve(&rho, VisibilityBasis::HV, &angles, 1.0).unwrap();
        let da = visibility_curve(&rho, VisibilityBasis::DA, &angles, 1.0).unwrap();
        assert!((hv.visibility - 1.0).abs() < 1e-12);
        assert!((da.visibility - 0.92315).abs() < 1e-12);
        assert!((analytic_visibility(&rho, VisibilityBasis::DA).unwrap() - 0.92315).abs() < 1e-12);
    }

    #[test]
    fn short_span_rejected() {
        let angles: Vec<f64> = (0..10).map(|k| 0.3 * k as f64).collect();
        assert!(visibility_curve(&bell_phi_plus(), VisibilityBasis::HV, &angles, 1.0).is_err());
    }

    #[test]
    fn basis_parsing() {
        assert_eq!(
            "h/v".parse::<VisibilityBasis>().unwrap(),
            VisibilityBasis::HV
        );
        assert_eq!(
            "DA".parse::<VisibilityBasis>().unwrap(),
            VisibilityBasis::DA
        );
        assert!("LR".parse::<VisibilityBasis>().is_err());
    }
}
