//! Two-qubit polarization tomography: the 36 analyzer settings, simulated
//! coincidence data, linear inversion, maximum-likelihood reconstruction and
//! Poisson bootstrap error bars.

mod bootstrap;
mod linear;
mod mle;

use std::io::{Read, Write};

use nalgebra::{Matrix4, Vector4};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::quantum_state::{Polarization, TwoQubitState, C64};
use crate::rng::{substream, Domain};

pub use bootstrap::{bootstrap_errors, BootstrapReport, ErrorEstimate, Metric};
pub use linear::{linear_inversion, project_to_physical};
pub use mle::{mle_reconstruct, neg_log_likelihood, MleOptions, TomographyResult};

/// Default acquisition time per setting, s.
pub const DEFAULT_DURATION_S: f64 = 15.0;

/// Product projector |signal⟩⊗|idler⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub signal: Polarization,
    pub idler: Polarization,
}

impl MeasurementSetting {
    pub fn new(signal: Polarization, idler: Polarization) -> Self {
        Self { signal, idler }
    }

    /// Two-letter code, signal first, e.g. `"DL"`.
    pub fn label(&self) -> String {
        format!("{}{}", self.signal.label(), self.idler.label())
    }

    pub fn ket(&self) -> Vector4<C64> {
        self.signal.ket().tensor(&self.idler.ket())
    }

    pub fn projector(&self) -> Matrix4<C64> {
        let k = self.ket();
        k * k.adjoint()
    }
}

/// The 6×6 product of {H, V, D, A, L, R}; signal index varies slowest.
pub fn settings_36() -> Vec<MeasurementSetting> {
    Polarization::ALL
        .iter()
        .flat_map(|&s| {
            Polarization::ALL
                .iter()
                .map(move |&i| MeasurementSetting::new(s, i))
        })
        .collect()
}

/// Expected coincidences `N·Tr(ρΠ)` for `N` pairs per acquisition.
pub fn predict_coincidences(
    rho: &TwoQubitState,
    setting: &MeasurementSetting,
    brightness: f64,
) -> f64 {
    let k = setting.ket();
    let p = (k.adjoint() * rho.matrix() * k)[(0, 0)].re;
    brightness * p.max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub setting: MeasurementSetting,
    pub coincidences: u64,
    /// Acquisition time, s.
    pub duration_s: f64,
}

impl CountRecord {
    pub fn new(setting: MeasurementSetting, coincidences: u64, duration_s: f64) -> Result<Self> {
        if !(duration_s > 0.0 && duration_s.is_finite()) {
            return Err(Error::invalid(
                "duration_s",
                format!("must be > 0, got {duration_s}"),
            ));
        }
        Ok(Self {
            setting,
            coincidences,
            duration_s,
        })
    }
}

fn check_brightness(brightness: f64) -> Result<()> {
    if !(brightness >= 0.0 && brightness.is_finite()) {
        return Err(Error::invalid(
            "brightness",
            format!("must be >= 0, got {brightness}"),
        ));
    }
    Ok(())
}

/// Poisson-distributed counts for the 36 settings; record `k` draws from its
/// own substream of `seed`.
pub fn simulate_counts(
    rho: &TwoQubitState,
    brightness: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    simulate_counts_with(rho, brightness, DEFAULT_DURATION_S, seed)
}

pub fn simulate_counts_with(
    rho: &TwoQubitState,
    brightness: f64,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    check_brightness(brightness)?;
    let settings = settings_36();
    map_indexed(settings.len(), |k| {
        let setting = settings[k];
        let mean = predict_coincidences(rho, &setting, brightness);
        let mut rng = substream(seed, Domain::CountRecord, k as u64);
        CountRecord::new(setting, poisson(mean, &mut rng), duration_s)
    })
    .into_iter()
    .collect()
}

/// Expected counts rounded to the nearest integer.
pub fn noiseless_counts(
    rho: &TwoQubitState,
    brightness: f64,
    duration_s: f64,
) -> Result<Vec<CountRecord>> {
    check_brightness(brightness)?;
    settings_36()
        .into_iter()
        .map(|s| {
            CountRecord::new(
                s,
                predict_coincidences(rho, &s, brightness).round() as u64,
                duration_s,
            )
        })
        .collect()
}

pub(crate) fn poisson<R: rand::Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only rejects non-positive or non-finite means
    let dist = Poisson::new(mean).expect("finite positive mean");
    dist.sample(rng) as u64
}

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    signal: String,
    idler: String,
    coincidences: u64,
    duration_s: String,
}

/// Writes the counts CSV: `signal,idler,coincidences,duration_s`.
pub fn write_counts_csv<W: Write>(records: &[CountRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CountRow {
            signal: r.setting.signal.to_string(),
            idler: r.setting.idler.to_string(),
            coincidences: r.coincidences,
            duration_s: format!("{}", r.duration_s),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counts_csv<R: Read>(input: R) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers
        .iter()
        .ne(["signal", "idler", "coincidences", "duration_s"])
    {
        return Err(Error::Parse(format!(
            "counts CSV header must be `signal,idler,coincidences,duration_s`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.deserialize::<CountRow>().enumerate() {
        let row = row?;
        let duration: f64 = row.duration_s.trim().parse().map_err(|_| {
            Error::Parse(format!(
                "row {}: bad duration `{}`",
                line + 1,
                row.duration_s
            ))
        })?;
        let setting = MeasurementSetting::new(
            Polarization::from_label(&row.signal)?,
            Polarization::from_label(&row.idler)?,
        );
        out.push(
            CountRecord::new(setting, row.coincidences, duration)
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?,
        );
    }
    Ok(out)
}
