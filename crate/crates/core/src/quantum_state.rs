//! Two-qubit polarization states and the entanglement/quality metrics.
//!
//! Basis order is fixed everywhere as |HH⟩, |HV⟩, |VH⟩, |VV⟩ with the signal
//! qubit first.

use std::fmt;

use nalgebra::{Complex, Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StateViolation};

pub type C64 = Complex<f64>;

pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in `[-EIGEN_FLOOR, 0)` are treated as numerical zeros.
pub const EIGEN_FLOOR: f64 = 1e-10;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The six analyzer polarizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    L,
    R,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::L,
        Polarization::R,
    ];

    pub fn ket(self) -> PolarizationKet {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (h, v) = match self {
            Polarization::H => (c(1.0, 0.0), c(0.0, 0.0)),
            Polarization::V => (c(0.0, 0.0), c(1.0, 0.0)),
            Polarization::D => (c(s, 0.0), c(s, 0.0)),
            Polarization::A => (c(s, 0.0), c(-s, 0.0)),
            Polarization::L => (c(s, 0.0), c(0.0, -s)),
            Polarization::R => (c(s, 0.0), c(0.0, s)),
        };
        PolarizationKet(Vector2::new(h, v))
    }

    pub fn label(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
            Polarization::D => 'D',
            Polarization::A => 'A',
            Polarization::L => 'L',
            Polarization::R => 'R',
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label.trim() {
            "H" => Ok(Polarization::H),
            "V" => Ok(Polarization::V),
            "D" => Ok(Polarization::D),
            "A" => Ok(Polarization::A),
            "L" => Ok(Polarization::L),
            "R" => Ok(Polarization::R),
            other => Err(Error::Parse(format!("unknown polarization `{other}`"))),
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Normalized single-photon polarization ket on |H⟩, |V⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationKet(Vector2<C64>);

impl PolarizationKet {
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let norm = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("ket", format!("norm {norm} != 1")));
        }
        Ok(Self(Vector2::new(h, v)))
    }

    /// Linear polarization rotated by `theta` from horizontal.
    pub fn linear(theta: f64) -> Self {
        Self(Vector2::new(c(theta.cos(), 0.0), c(theta.sin(), 0.0)))
    }

    pub fn amplitudes(&self) -> &Vector2<C64> {
        &self.0
    }

    pub fn projector(&self) -> Matrix2<C64> {
        self.0 * self.0.adjoint()
    }

    /// Signal ⊗ idler product ket in the global basis order.
    pub fn tensor(&self, idler: &PolarizationKet) -> Vector4<C64> {
        let (a, b) = (&self.0, &idler.0);
        Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    }
}

/// Kronecker product of two 2×2 operators, signal first.
pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Overlap of the two path wavepackets and the relative phase between paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapParameters {
    /// `⟨φ_VV|φ_HH⟩`. Conjugating this only flips the sign of the
    /// reconstructed phase.
    pub gamma: C64,
    /// Relative phase φ between the two creation paths, radians.
    pub phi: f64,
}

impl OverlapParameters {
    pub fn new(gamma: C64, phi: f64) -> Result<Self> {
        if !(gamma.norm() <= 1.0 + 1e-12) || !phi.is_finite() {
            return Err(Error::invalid(
                "gamma",
                format!("|gamma| must be <= 1, got {}", gamma.norm()),
            ));
        }
        Ok(Self { gamma, phi })
    }

    pub fn real(g: f64, phi: f64) -> Result<Self> {
        Self::new(c(g, 0.0), phi)
    }
}

/// 4×4 density matrix that is Hermitian, unit trace and positive
/// semidefinite. Construction validates all three.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    matrix: Matrix4<C64>,
}

impl TwoQubitState {
    pub fn new(matrix: Matrix4<C64>) -> Result<Self> {
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(StateViolation::NonFinite.into());
        }
        let deviation = (matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation > HERMITIAN_TOL {
            return Err(StateViolation::NotHermitian { deviation }.into());
        }
        let matrix = (matrix + matrix.adjoint()) * c(0.5, 0.0);
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(StateViolation::TraceNotOne { trace }.into());
        }
        let min_eigenvalue = SymmetricEigen::new(matrix).eigenvalues.min();
        if min_eigenvalue < -EIGEN_FLOOR {
            return Err(StateViolation::NotPositive { min_eigenvalue }.into());
        }
        Ok(Self { matrix })
    }

    /// Hermitizes and trace-normalizes a matrix that is positive
    /// semidefinite by construction (e.g. `T†T`), then validates it.
    pub fn from_psd_unnormalized(matrix: Matrix4<C64>) -> Result<Self> {
        let herm = (matrix + matrix.adjoint()) * c(0.5, 0.0);
        let trace = herm.trace().re;
        if !(trace > 0.0) {
            return Err(StateViolation::TraceNotOne { trace }.into());
        }
        Self::new(herm / c(trace, 0.0))
    }

    pub fn pure(ket: &Vector4<C64>) -> Result<Self> {
        let norm = ket.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("ket", format!("norm {norm} != 1")));
        }
        Self::new(ket * ket.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self {
            matrix: Matrix4::identity() * c(0.25, 0.0),
        }
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order with values inside the numerical floor
    /// clamped to zero.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix)
            .eigenvalues
            .iter()
            .map(|&l| l.max(0.0))
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        [ev[0], ev[1], ev[2], ev[3]]
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(U ⊗ W) ρ (U ⊗ W)†` for single-qubit unitaries.
    pub fn local_transform(&self, signal: &Matrix2<C64>, idler: &Matrix2<C64>) -> Result<Self> {
        let u = kron(signal, idler);
        Self::from_psd_unnormalized(u * self.matrix * u.adjoint())
    }

    /// `Tr(ρ·op)`; real part only, callers pass Hermitian operators.
    pub fn expectation(&self, op: &Matrix4<C64>) -> f64 {
        (self.matrix * op).trace().re
    }

    pub fn to_json(&self) -> DensityMatrixJson {
        DensityMatrixJson::from_matrix(&self.matrix)
    }
}

pub fn bell_phi_plus_ket() -> Vector4<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0))
}

/// Projector onto Φ⁺ = (|HH⟩ + |VV⟩)/√2.
pub fn bell_phi_plus() -> TwoQubitState {
    let mut m = Matrix4::zeros();
    for (r, col) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(r, col)] = c(0.5, 0.0);
    }
    TwoQubitState { matrix: m }
}

/// ρ = ½(|HH⟩⟨HH| + |VV⟩⟨VV| + e^{iφ}γ*|HH⟩⟨VV| + e^{−iφ}γ|VV⟩⟨HH|).
pub fn dephased_pair_state(p: OverlapParameters) -> Result<TwoQubitState> {
    let p = OverlapParameters::new(p.gamma, p.phi)?;
    let coherence = C64::from_polar(1.0, p.phi) * p.gamma.conj() * 0.5;
    let mut m = Matrix4::zeros();
    m[(0, 0)] = c(0.5, 0.0);
    m[(3, 3)] = c(0.5, 0.0);
    m[(0, 3)] = coherence;
    m[(3, 0)] = coherence.conj();
    TwoQubitState::new(m)
}

fn sigma_y_sigma_y() -> Matrix4<C64> {
    let sy = Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0));
    kron(&sy, &sy)
}

/// Wootters concurrence.
///
/// The λᵢ are computed as singular values of the symmetric matrix
/// `Wᵀ (σ_y⊗σ_y) W`, where the columns of `W` are the eigenvectors of ρ scaled
/// by √eigenvalue. That keeps eigenvalues near zero from being amplified by a
/// square root, unlike diagonalizing `ρ ρ̃` directly.
pub fn concurrence(rho: &TwoQubitState) -> f64 {
    let eig = SymmetricEigen::new(rho.matrix);
    let mut w = eig.eigenvectors;
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        w.column_mut(j).scale_mut(s);
    }
    let tau = w.transpose() * sigma_y_sigma_y() * w;
    let mut sv: Vec<f64> = tau.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    (sv[0] - sv[1] - sv[2] - sv[3]).max(0.0)
}

/// Squared concurrence, in [0, 1].
pub fn tangle(rho: &TwoQubitState) -> f64 {
    let c = concurrence(rho);
    (c * c).min(1.0)
}

/// Normalized linear entropy `(4/3)(1 − Tr ρ²)`.
pub fn linear_entropy(rho: &TwoQubitState) -> f64 {
    (4.0 / 3.0 * (1.0 - rho.purity())).clamp(0.0, 1.0)
}

/// `⟨ψ|ρ|ψ⟩` for a normalized two-qubit ket.
pub fn fidelity_to_pure(rho: &TwoQubitState, psi: &Vector4<C64>) -> Result<f64> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("psi", format!("norm {norm} != 1")));
    }
    let f = (psi.adjoint() * rho.matrix * psi)[(0, 0)];
    debug_assert!(f.im.abs() < 1e-10, "imaginary fidelity residue {}", f.im);
    Ok(f.re.clamp(0.0, 1.0))
}

/// Trace distance `½‖ρ − σ‖₁`.
pub fn trace_distance(a: &TwoQubitState, b: &TwoQubitState) -> f64 {
    let diff = a.matrix - b.matrix;
    0.5 * SymmetricEigen::new(diff)
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .sum::<f64>()
}

fn psd_sqrt(m: &Matrix4<C64>) -> Matrix4<C64> {
    let eig = SymmetricEigen::new(*m);
    let mut out = Matrix4::zeros();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(j);
        out += v * v.adjoint() * c(l.max(0.0).sqrt(), 0.0);
    }
    out
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, evaluated as the squared nuclear
/// norm of `√ρ √σ` to avoid square roots of rounding-level eigenvalues.
pub fn fidelity(a: &TwoQubitState, b: &TwoQubitState) -> f64 {
    let product = psd_sqrt(&a.matrix) * psd_sqrt(&b.matrix);
    let root_trace: f64 = product.singular_values().iter().sum();
    (root_trace * root_trace).clamp(0.0, 1.0)
}

/// Hilbert–Schmidt random state `GG†/Tr(GG†)` with `G` complex Ginibre,
/// drawn from stream `index` of `seed`.
pub fn random_state(seed: u64, index: u64) -> TwoQubitState {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = crate::rng::substream(seed, crate::rng::Domain::StateSampling, index);
    let g = Matrix4::<C64>::from_fn(|_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re, im)
    });
    TwoQubitState::from_psd_unnormalized(g * g.adjoint())
        .expect("Ginibre product is positive definite")
}

/// Wire form of a density matrix: row-major real and imaginary parts in the
/// fixed `HH, HV, VH, VV` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub basis: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DensityMatrixJson {
    pub fn from_matrix(m: &Matrix4<C64>) -> Self {
        Self {
            basis: BASIS_LABELS.iter().map(|s| s.to_string()).collect(),
            re: (0..4)
                .map(|r| (0..4).map(|col| m[(r, col)].re).collect())
                .collect(),
            im: (0..4)
                .map(|r| (0..4).map(|col| m[(r, col)].im).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<Matrix4<C64>> {
        if self.basis.iter().map(String::as_str).ne(BASIS_LABELS) {
            return Err(Error::Parse(format!(
                "basis must be {:?}, got {:?}",
                BASIS_LABELS, self.basis
            )));
        }
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == 4 && rows.iter().all(|r| r.len() == 4);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::Parse("re/im must be 4x4 arrays".into()));
        }
        Ok(Matrix4::from_fn(|r, col| {
            c(self.re[r][col], self.im[r][col])
        }))
    }

    /// Parses and validates; the error names the violated invariant.
    pub fn to_state(&self) -> Result<TwoQubitState> {
        TwoQubitState::new(self.to_matrix()?)
    }
}

impl TryFrom<&DensityMatrixJson> for TwoQubitState {
    type Error = Error;

    fn try_from(value: &DensityMatrixJson) -> Result<Self> {
        value.to_state()
    }
}
