use pmf_entangle::analysis::{model_delay_sweep, run_delay_sweep_experiment, ExperimentConfig};
use pmf_entangle::Error;

fn small(doc: &str) -> ExperimentConfig {
    let base = "grid.n_signal = 128\ngrid.n_idler = 128\ntomography.restarts = 1\n";
    ExperimentConfig::from_toml_str(&format!("{base}{doc}")).unwrap()
}

#[test]
fn perfect_source_noiseless_data() {
    let cfg = small(
        "imbalance.intrinsic_delay_fs = 0\nimbalance.eta_squared = 1.0\ncalibration.enabled = false\n\
         tomography.noiseless = true\ntomography.bootstrap_resamples = 0\nsweep.delays_fs = [0]\n",
    );
    let exp = run_delay_sweep_experiment(&cfg).unwrap();
    let row = &exp.rows[0];
    assert!((row.true_tangle - 1.0).abs() < 1e-9);
    assert!((row.reconstructed_tangle - 1.0).abs() < 1e-3, "{row:?}");
    assert_eq!(row.bootstrap_std, None);
    assert_eq!(exp.summary.fraction_within_3sigma, None);
}

#[test]
fn calibrated_sweep_hits_target_tangles() {
    let cfg = ExperimentConfig::default();
    let rows = model_delay_sweep(&cfg).unwrap();
    let at = |d: f64| rows.iter().find(|r| r.delay_fs == d).unwrap().tangle;
    assert!((at(28.0) - 0.8522).abs() < 1e-6);
    assert!((at(0.0) - 0.7543).abs() < 1e-6);
    let peak = rows
        .iter()
        .max_by(|a, b| a.tangle.total_cmp(&b.tangle))
        .unwrap();
    assert_eq!(peak.delay_fs, 28.0);
    assert!((at(-40.0) - at(96.0)).abs() < 1e-8);
}

#[test]
fn doubling_delays_relabels_the_axis() {
    let a = small("calibration.enabled = false\nsweep.delays_fs = [0, 10, 20]\n");
    let b = small("calibration.enabled = false\nsweep.delays_fs = [0, 20, 40]\n");
    let ra = model_delay_sweep(&a).unwrap();
    let rb = model_delay_sweep(&b).unwrap();
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(2.0 * x.delay_fs, y.delay_fs);
    }
    assert!(rb.windows(2).all(|w| w[0].delay_fs < w[1].delay_fs));
}

#[test]
fn reconstruction_tracks_truth_within_three_sigma() {
    let cfg = small("tomography.bootstrap_resamples = 20\nsweep.delays_fs = [-13, 0, 13, 28, 41, 54, 68, 81, 96, 120]\n");
    let exp = run_delay_sweep_experiment(&cfg).unwrap();
    let frac = exp.summary.fraction_within_3sigma.unwrap();
    assert!(frac >= 0.9, "{frac}: {:?}", exp.rows);
    assert_eq!(exp.summary.peak_delay_fs, 28.0);
}

#[test]
fn sweep_is_deterministic() {
    let cfg = small("tomography.bootstrap_resamples = 4\nsweep.delays_fs = [0, 28]\n");
    assert_eq!(
        run_delay_sweep_experiment(&cfg).unwrap(),
        run_delay_sweep_experiment(&cfg).unwrap()
    );
}

#[test]
fn failing_delay_is_named() {
    // expected counts round to zero, so reconstruction has no data
    let cfg = small(
        "calibration.enabled = false\ntomography.noiseless = true\ntomography.brightness = 0.001\n\
         tomography.bootstrap_resamples = 0\nsweep.delays_fs = [5]\n",
    );
    let err = run_delay_sweep_experiment(&cfg).unwrap_err();
    assert!(
        matches!(err, Error::AtDelay { delay_fs, .. } if delay_fs == 5.0),
        "{err}"
    );
    assert!(err.to_string().starts_with("at delay 5 fs"));
    assert!(!err.is_input_error());
}

#[test]
fn shipped_config_lists_the_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    assert_eq!(
        ExperimentConfig::load(std::path::Path::new(path)).unwrap(),
        ExperimentConfig::default()
    );
}
