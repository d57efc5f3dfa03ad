use std::fmt;

use serde::{Deserialize, Serialize};

use super::{mle_reconstruct, poisson, CountRecord, MleOptions};
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::quantum_state::{
    bell_phi_plus_ket, fidelity_to_pure, linear_entropy, tangle, TwoQubitState,
};
use crate::rng::{child_seed, substream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Tangle,
    LinearEntropy,
    FidelityPhiPlus,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::Tangle,
        Metric::LinearEntropy,
        Metric::FidelityPhiPlus,
    ];

    pub fn evaluate(self, rho: &TwoQubitState) -> f64 {
        match self {
            Metric::Tangle => tangle(rho),
            Metric::LinearEntropy => linear_entropy(rho),
            Metric::FidelityPhiPlus => {
                fidelity_to_pure(rho, &bell_phi_plus_ket()).expect("Φ⁺ ket is normalized")
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Tangle => "tangle",
            Metric::LinearEntropy => "linear_entropy",
            Metric::FidelityPhiPlus => "fidelity_phi_plus",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation over successful resamples.
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub estimates: Vec<ErrorEstimate>,
    /// Resamples whose reconstruction failed.
    pub skipped: usize,
}

impl BootstrapReport {
    pub fn get(&self, metric: Metric) -> Option<&ErrorEstimate> {
        self.estimates.iter().find(|e| e.metric == metric)
    }
}

/// Parametric Poisson bootstrap: every count is redrawn as `Poisson(n_k)`,
/// the state is reconstructed again and each metric's spread is reported.
/// Resample `r` uses its own random stream, so the result does not depend on
/// the number of worker threads.
pub fn bootstrap_errors(
    records: &[CountRecord],
    n_resamples: usize,
    seed: u64,
    metrics: &[Metric],
    opts: &MleOptions,
) -> Result<BootstrapReport> {
    if n_resamples < 2 {
        return Err(Error::invalid(
            "n_resamples",
            format!("need >= 2, got {n_resamples}"),
        ));
    }
    let samples = map_indexed(n_resamples, |r| {
        let mut rng = substream(seed, Domain::Bootstrap, r as u64);
        let resampled: Vec<CountRecord> = records
            .iter()
            .map(|rec| CountRecord {
                coincidences: poisson(rec.coincidences as f64, &mut rng),
                ..rec.clone()
            })
            .collect();
        let run_opts = MleOptions {
            seed: child_seed(seed, Domain::Bootstrap, r as u64),
            ..*opts
        };
        mle_reconstruct(&resampled, &run_opts).ok().map(|res| {
            metrics
                .iter()
                .map(|m| m.evaluate(&res.rho))
                .collect::<Vec<f64>>()
        })
    });

    let ok: Vec<Vec<f64>> = samples.iter().flatten().cloned().collect();
    let skipped = n_resamples - ok.len();
    if ok.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "only {} of {n_resamples} bootstrap resamples reconstructed",
            ok.len()
        )));
    }
    let n = ok.len();
    let estimates = metrics
        .iter()
        .enumerate()
        .map(|(m, &metric)| {
            let mean = ok.iter().map(|v| v[m]).sum::<f64>() / n as f64;
            let var = ok.iter().map(|v| (v[m] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            ErrorEstimate {
                metric,
                mean,
                std: var.sqrt(),
                n,
            }
        })
        .collect();
    Ok(BootstrapReport { estimates, skipped })
}
