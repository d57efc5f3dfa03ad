use pmf_entangle::quantum_state::{
    bell_phi_plus, fidelity, random_state, trace_distance, TwoQubitState,
};
use pmf_entangle::tomography::{
    linear_inversion, mle_reconstruct, noiseless_counts, simulate_counts, MleOptions,
};

#[test]
fn poisson_counts_have_the_right_mean() {
    let n = 1000;
    let mean = (0..n)
        .map(|seed| simulate_counts(&bell_phi_plus(), 1e5, seed).unwrap()[0].coincidences as f64)
        .sum::<f64>()
        / n as f64;
    let tol = 3.0 * (5e4f64 / n as f64).sqrt();
    assert!((mean - 5e4).abs() < tol, "mean {mean}");
}

#[test]
fn noiseless_random_states_round_trip() {
    for k in 0..20 {
        let rho = random_state(2024, k);
        let recs = noiseless_counts(&rho, 1e6, 15.0).unwrap();
        let res = mle_reconstruct(&recs, &MleOptions::default()).unwrap();
        let f = fidelity(&rho, &res.rho);
        assert!(f >= 0.9999, "state {k}: fidelity {f}");
    }
}

#[test]
fn linear_inversion_can_be_unphysical_but_mle_is_not() {
    let opts = MleOptions {
        restarts: 1,
        ..Default::default()
    };
    let found = (0..200).find_map(|seed| {
        let recs = simulate_counts(&bell_phi_plus(), 100.0, seed).unwrap();
        let lin = linear_inversion(&recs).ok()?;
        let min = nalgebra::SymmetricEigen::new(lin).eigenvalues.min();
        (min < -1e-6).then_some(recs)
    });
    let recs = found.expect("a sample with a negative linear-inversion eigenvalue");
    let res = mle_reconstruct(&recs, &opts).unwrap();
    let min = nalgebra::SymmetricEigen::new(*res.rho.matrix())
        .eigenvalues
        .min();
    assert!(min > -1e-10, "MLE eigenvalue {min}");
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn error_shrinks_with_brightness() {
    let opts = MleOptions {
        restarts: 1,
        ..Default::default()
    };
    let truth: TwoQubitState = random_state(99, 0);
    let mut last = f64::INFINITY;
    for brightness in [1e3, 1e4, 1e5, 1e6] {
        let d = median(
            (0..25)
                .map(|seed| {
                    let recs = simulate_counts(&truth, brightness, seed).unwrap();
                    trace_distance(&truth, &mle_reconstruct(&recs, &opts).unwrap().rho)
                })
                .collect(),
        );
        assert!(d < last, "brightness {brightness}: {d} >= {last}");
        last = d;
    }
}
