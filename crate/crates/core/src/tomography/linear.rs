use nalgebra::{Complex, DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen};

use super::CountRecord;
use crate::error::{Error, Result};
use crate::quantum_state::{kron, TwoQubitState, C64};

fn paulis() -> [Matrix2<C64>; 4] {
    let z = Complex::new(0.0, 0.0);
    let o = Complex::new(1.0, 0.0);
    let i = Complex::new(0.0, 1.0);
    [
        Matrix2::new(o, z, z, o),
        Matrix2::new(z, o, o, z),
        Matrix2::new(z, -i, i, z),
        Matrix2::new(o, z, z, -o),
    ]
}

/// The 16 Hermitian operators σ_a ⊗ σ_b.
pub(crate) fn pauli_products() -> Vec<Matrix4<C64>> {
    let p = paulis();
    let mut out = Vec::with_capacity(16);
    for a in &p {
        for b in &p {
            out.push(kron(a, b));
        }
    }
    out
}

/// Least-squares inversion of `n_k ≈ N·t_k·Tr(ρΠ_k)` over Hermitian ρ
/// (expanded on σ_a⊗σ_b), normalized to unit trace. Positivity is not
/// enforced; inspect the eigenvalues or pass the result through
/// [`project_to_physical`].
pub fn linear_inversion(records: &[CountRecord]) -> Result<Matrix4<C64>> {
    if records.iter().all(|r| r.coincidences == 0) {
        return Err(Error::DegenerateData(
            "all coincidence counts are zero".into(),
        ));
    }
    let basis = pauli_products();
    let mut design = DMatrix::<f64>::zeros(records.len(), 16);
    let mut counts = DVector::<f64>::zeros(records.len());
    for (k, r) in records.iter().enumerate() {
        let ket = r.setting.ket();
        for (m, op) in basis.iter().enumerate() {
            design[(k, m)] = r.duration_s * (ket.adjoint() * op * ket)[(0, 0)].re;
        }
        counts[k] = r.coincidences as f64;
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    if rank < 16 {
        return Err(Error::RankDeficient { rank });
    }
    let x = svd
        .solve(&counts, 1e-12 * smax)
        .map_err(|e| Error::DegenerateData(e.to_string()))?;
    let mut m = Matrix4::<C64>::zeros();
    for (coef, op) in x.iter().zip(&basis) {
        m += op * Complex::new(*coef, 0.0);
    }
    let trace = m.trace().re;
    if !(trace > 0.0) {
        return Err(Error::DegenerateData(format!(
            "linear estimate has trace {trace}"
        )));
    }
    let m = m / Complex::new(trace, 0.0);
    Ok((m + m.adjoint()) * Complex::new(0.5, 0.0))
}

/// Closest unit-trace positive semidefinite matrix in 2-norm to a
/// unit-trace Hermitian matrix (Smolin, Gambetta & Smith, PRL 108, 070502).
pub fn project_to_physical(m: &Matrix4<C64>) -> Result<TwoQubitState> {
    let herm = (m + m.adjoint()) * Complex::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut mu: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let trace: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|l| *l /= trace);

    let mut acc = 0.0;
    let mut i = 4;
    while i > 0 && mu[i - 1] + acc / (i as f64) < 0.0 {
        acc += mu[i - 1];
        mu[i - 1] = 0.0;
        i -= 1;
    }
    for l in mu.iter_mut().take(i) {
        *l += acc / i as f64;
    }

    let mut out = Matrix4::<C64>::zeros();
    for (pos, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        out += v * v.adjoint() * Complex::new(mu[pos], 0.0);
    }
    TwoQubitState::from_psd_unnormalized(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_state::{bell_phi_plus, dephased_pair_state, OverlapParameters};
    use crate::tomography::noiseless_counts;

    #[test]
    fn exact_data_inverts_exactly() {
        // brightness large enough that rounding to integers is below 1e-8
        let rho = bell_phi_plus();
        let recs = noiseless_counts(&rho, 2e8, 15.0).unwrap();
        let est = linear_inversion(&recs).unwrap();
        assert!((est - rho.matrix()).norm() < 1e-8);

        let rho = dephased_pair_state(OverlapParameters::real(0.5, 0.0).unwrap()).unwrap();
        let recs = noiseless_counts(&rho, 1e8, 15.0).unwrap();
        let est = linear_inversion(&recs).unwrap();
        assert!((est - rho.matrix()).norm() < 1e-8);
    }

    #[test]
    fn rank_deficient_design() {
        let recs: Vec<_> = noiseless_counts(&bell_phi_plus(), 100.0, 15.0)
            .unwrap()
            .into_iter()
            .take(12)
            .collect();
        assert!(matches!(
            linear_inversion(&recs),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn projection_clips_negative_eigenvalues() {
        let mut m = Matrix4::<C64>::zeros();
        m[(0, 0)] = Complex::new(0.6, 0.0);
        m[(1, 1)] = Complex::new(0.5, 0.0);
        m[(2, 2)] = Complex::new(-0.1, 0.0);
        let p = project_to_physical(&m).unwrap();
        let ev = p.eigenvalues();
        assert!(ev.iter().all(|&l| l >= 0.0));
        assert!((p.matrix()[(0, 0)].re - 0.55).abs() < 1e-12);
        assert!((p.matrix()[(1, 1)].re - 0.45).abs() < 1e-12);
    }

    #[test]
    fn projection_keeps_physical_state() {
        let rho = dephased_pair_state(OverlapParameters::real(0.3, 1.0).unwrap()).unwrap();
        let p = project_to_physical(rho.matrix()).unwrap();
        assert!((p.matrix() - rho.matrix()).norm() < 1e-12);
    }
}
