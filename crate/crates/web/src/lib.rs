//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no generated type glue beyond `wasm-bindgen`'s.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pmf_entangle::analysis::{
    default_angles, visibility_curve, ExperimentConfig, SourceModel, VisibilityBasis,
};
use pmf_entangle::dispersion::{solve_phase_matching, FiberSpec};
use pmf_entangle::quantum_state::{dephased_pair_state, OverlapParameters};

/// Demo JSA grid; coarse enough to stay interactive.
const DEMO_GRID: usize = 128;
const MAX_CURVE_POINTS: usize = 2000;

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn phase_match_json(pump_nm: f64, birefringence: f64, length_m: f64) -> Result<String, String> {
    let fiber = FiberSpec::default()
        .with_birefringence(birefringence)
        .and_then(|f| f.with_length(length_m))
        .map_err(|e| e.to_string())?;
    let sol = solve_phase_matching(&fiber, pump_nm).map_err(|e| e.to_string())?;
    to_json(&sol.report())
}

#[derive(Serialize)]
struct TangleCurve {
    delays_fs: Vec<f64>,
    tangle: Vec<f64>,
    pump_fwhm_nm: f64,
}

/// Model tangle versus applied delay for a loop with intrinsic delay
/// `intrinsic_delay_fs` and tangle ceiling `eta_squared`.
pub fn tangle_curve_json(
    eta_squared: f64,
    intrinsic_delay_fs: f64,
    pump_fwhm_nm: f64,
    delay_min_fs: f64,
    delay_max_fs: f64,
    points: usize,
) -> Result<String, String> {
    if !(2..=MAX_CURVE_POINTS).contains(&points)
        || delay_max_fs.partial_cmp(&delay_min_fs) != Some(std::cmp::Ordering::Greater)
    {
        return Err(format!(
            "need 2..={MAX_CURVE_POINTS} points over a non-empty delay range"
        ));
    }
    let mut cfg = ExperimentConfig::default();
    cfg.calibration.enabled = false;
    cfg.pump.spectral_fwhm_nm = pump_fwhm_nm;
    cfg.imbalance.eta_squared = eta_squared;
    cfg.imbalance.intrinsic_delay_fs = intrinsic_delay_fs;
    cfg.grid.n_signal = DEMO_GRID;
    cfg.grid.n_idler = DEMO_GRID;
    cfg.sweep.delays_fs = (0..points)
        .map(|k| delay_min_fs + (delay_max_fs - delay_min_fs) * k as f64 / (points - 1) as f64)
        .collect();
    let model = SourceModel::build(&cfg).map_err(|e| e.to_string())?;
    let sweep = model.sweep(&cfg.delays()).map_err(|e| e.to_string())?;
    to_json(&TangleCurve {
        tangle: sweep.iter().map(|p| p.tangle).collect(),
        delays_fs: cfg.sweep.delays_fs,
        pump_fwhm_nm,
    })
}

#[derive(Serialize)]
struct Fringe {
    basis: VisibilityBasis,
    angles_rad: Vec<f64>,
    coincidences: Vec<f64>,
    visibility: f64,
}

/// H/V and D/A fringes of the pair state with overlap `g` and phase `phi`.
pub fn visibility_fringes_json(g: f64, phi: f64, points: usize) -> Result<String, String> {
    let rho = dephased_pair_state(OverlapParameters::real(g, phi).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let angles = default_angles(points.min(MAX_CURVE_POINTS)).map_err(|e| e.to_string())?;
    let fringes = [VisibilityBasis::HV, VisibilityBasis::DA]
        .into_iter()
        .map(|b| {
            let scan = visibility_curve(&rho, b, &angles, 1.0).map_err(|e| e.to_string())?;
            Ok(Fringe {
                basis: b,
                angles_rad: scan.angles_rad,
                coincidences: scan.coincidences,
                visibility: scan.visibility,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&fringes)
}

#[wasm_bindgen]
pub fn phase_match(pump_nm: f64, birefringence: f64, length_m: f64) -> Result<String, JsValue> {
    phase_match_json(pump_nm, birefringence, length_m).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn tangle_curve(
    eta_squared: f64,
    intrinsic_delay_fs: f64,
    pump_fwhm_nm: f64,
    delay_min_fs: f64,
    delay_max_fs: f64,
    points: usize,
) -> Result<String, JsValue> {
    tangle_curve_json(
        eta_squared,
        intrinsic_delay_fs,
        pump_fwhm_nm,
        delay_min_fs,
        delay_max_fs,
        points,
    )
    .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn visibility_fringes(g: f64, phi: f64, points: usize) -> Result<String, JsValue> {
    visibility_fringes_json(g, phi, points).map_err(|e| JsValue::from_str(&e))
}
