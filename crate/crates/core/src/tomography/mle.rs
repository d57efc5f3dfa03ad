//! Maximum-likelihood state reconstruction.
//!
//! ρ = T†T / Tr(T†T) with T lower triangular (real diagonal, 16 real
//! parameters), so every iterate is a physical state. The Poisson
//! log-likelihood `Σ n_k ln μ_k − μ_k` with `μ_k = N t_k Tr(ρΠ_k)` is
//! maximized with the brightness `N` profiled out in closed form,
//! `N* = Σn_k / Σ t_k Tr(ρΠ_k)`, leaving an objective that is invariant under
//! rescaling T. It is minimized by BFGS with Armijo backtracking.

use nalgebra::{Cholesky, Complex, Matrix4, SMatrix, SVector, Vector4};
use rand_distr::{Distribution, StandardNormal};

use super::{linear_inversion, project_to_physical, CountRecord};
use crate::error::{Error, Result};
use crate::quantum_state::{TwoQubitState, C64};
use crate::rng::{substream, Domain};

const N_PARAMS: usize = 16;
type Params = SVector<f64, N_PARAMS>;
type Hessian = SMatrix<f64, N_PARAMS, N_PARAMS>;

/// Strictly-lower entries of T in parameter order.
const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Random perturbations of the starting point tried after the first run.
    pub restarts: usize,
    /// Convergence threshold on `‖θ‖·‖∇F‖ / Σn`.
    pub gradient_tolerance: f64,
    /// Seed for the restart perturbations.
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            restarts: 5,
            gradient_tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub rho: TwoQubitState,
    /// Poisson negative log-likelihood at the optimum, up to the data-only
    /// constant `Σ ln n_k!`.
    pub neg_log_likelihood: f64,
    /// Iterations used by the best run.
    pub iterations: usize,
    pub converged: bool,
    /// Fitted expected pairs per setting acquisition (at the mean
    /// acquisition time when durations differ).
    pub brightness_estimate: f64,
    /// Negative log-likelihood of the physically projected linear-inversion
    /// estimate (may be infinite).
    pub linear_start_nll: f64,
}

struct Datum {
    ket: Vector4<C64>,
    counts: f64,
    duration: f64,
}

struct Objective {
    data: Vec<Datum>,
    total: f64,
}

fn lower_triangular(theta: &Params) -> Matrix4<C64> {
    let mut t = Matrix4::<C64>::zeros();
    for d in 0..4 {
        t[(d, d)] = Complex::new(theta[d], 0.0);
    }
    for (m, &(a, b)) in OFF_DIAGONAL.iter().enumerate() {
        t[(a, b)] = Complex::new(theta[4 + 2 * m], theta[5 + 2 * m]);
    }
    t
}

fn params_of(t: &Matrix4<C64>) -> Params {
    let mut theta = Params::zeros();
    for d in 0..4 {
        theta[d] = t[(d, d)].re;
    }
    for (m, &(a, b)) in OFF_DIAGONAL.iter().enumerate() {
        theta[4 + 2 * m] = t[(a, b)].re;
        theta[5 + 2 * m] = t[(a, b)].im;
    }
    theta
}

/// Lower-triangular T with T†T = ρ, via a Cholesky factor of the
/// index-reversed matrix.
fn factor(rho: &Matrix4<C64>) -> Option<Matrix4<C64>> {
    let rev = Matrix4::from_fn(|r, c| rho[(3 - r, 3 - c)]);
    let l = Cholesky::new(rev)?.l();
    Some(Matrix4::from_fn(|r, c| l[(3 - c, 3 - r)].conj()))
}

impl Objective {
    fn new(records: &[CountRecord]) -> Self {
        let data: Vec<Datum> = records
            .iter()
            .map(|r| Datum {
                ket: r.setting.ket(),
                counts: r.coincidences as f64,
                duration: r.duration_s,
            })
            .collect();
        let total = data.iter().map(|d| d.counts).sum();
        Self { data, total }
    }

    /// Unnormalized `t_k⟨ψ_k|T†T|ψ_k⟩` for every record.
    fn weights(&self, t: &Matrix4<C64>) -> Vec<f64> {
        self.data
            .iter()
            .map(|d| d.duration * (t * d.ket).norm_squared())
            .collect()
    }

    /// Profiled objective written as a scaled KL divergence,
    /// `Σ n_k ln[(n_k/Σn) / (q_k/Σq)]`, which is zero for a perfect fit.
    fn value(&self, theta: &Params) -> f64 {
        let t = lower_triangular(theta);
        let q = self.weights(&t);
        let qsum: f64 = q.iter().sum();
        if !(qsum > 0.0) {
            return f64::INFINITY;
        }
        let mut f = 0.0;
        for (d, &qk) in self.data.iter().zip(&q) {
            if d.counts > 0.0 {
                if qk <= 0.0 {
                    return f64::INFINITY;
                }
                f += d.counts * ((d.counts / self.total).ln() - (qk / qsum).ln());
            }
        }
        f
    }

    fn gradient(&self, theta: &Params) -> Params {
        let t = lower_triangular(theta);
        let q = self.weights(&t);
        let qsum: f64 = q.iter().sum();
        let mut w = Matrix4::<C64>::zeros();
        for (d, &qk) in self.data.iter().zip(&q) {
            let mut coef = self.total / qsum;
            if d.counts > 0.0 {
                coef -= d.counts / qk;
            }
            w += d.ket * d.ket.adjoint() * Complex::new(coef * d.duration, 0.0);
        }
        // d q_k = 2 Re Tr(Π_k T† dT), so ∂F/∂T_ab = 2 (T W)_ab split into re/im
        let g = t * w;
        let mut grad = Params::zeros();
        for d in 0..4 {
            grad[d] = 2.0 * g[(d, d)].re;
        }
        for (m, &(a, b)) in OFF_DIAGONAL.iter().enumerate() {
            grad[4 + 2 * m] = 2.0 * g[(a, b)].re;
            grad[5 + 2 * m] = 2.0 * g[(a, b)].im;
        }
        grad
    }

    fn scaled_gradient_norm(&self, theta: &Params, grad: &Params) -> f64 {
        theta.norm() * grad.norm() / self.total
    }

    fn mean_duration(&self) -> f64 {
        self.data.iter().map(|d| d.duration).sum::<f64>() / self.data.len() as f64
    }

    /// Poisson NLL `Σ μ_k − n_k ln μ_k` at the profiled brightness; the
    /// returned brightness is per unit time.
    fn poisson_nll(&self, rho: &Matrix4<C64>) -> (f64, f64) {
        let p: Vec<f64> = self
            .data
            .iter()
            .map(|d| d.duration * (d.ket.adjoint() * rho * d.ket)[(0, 0)].re.max(0.0))
            .collect();
        let psum: f64 = p.iter().sum();
        let brightness = self.total / psum;
        let mut nll = 0.0;
        for (d, &pk) in self.data.iter().zip(&p) {
            let mu = brightness * pk;
            if d.counts > 0.0 {
                if mu <= 0.0 {
                    return (f64::INFINITY, brightness);
                }
                nll -= d.counts * mu.ln();
            }
            nll += mu;
        }
        (nll, brightness)
    }
}

struct RunOutcome {
    theta: Params,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn bfgs(obj: &Objective, start: Params, opts: &MleOptions) -> RunOutcome {
    let mut x = start;
    let mut f = obj.value(&x);
    let mut g = obj.gradient(&x);
    let initial_scale = 0.1 * x.norm() / g.norm().max(f64::MIN_POSITIVE);
    let mut h = Hessian::identity() * initial_scale;
    let mut fresh = true;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        if obj.scaled_gradient_norm(&x, &g) < opts.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut p = -(h * g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            h = Hessian::identity() * initial_scale;
            fresh = true;
            p = -(h * g);
            slope = g.dot(&p);
        }

        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-16 {
            let xn = x + p * step;
            let fn_ = obj.value(&xn);
            if fn_.is_finite() && fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            if fresh {
                break;
            }
            h = Hessian::identity() * initial_scale;
            fresh = true;
            continue;
        };

        let gn = obj.gradient(&xn);
        let s = xn - x;
        let y = gn - g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h = Hessian::identity() * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = h * y;
            h += (s * s.transpose()) * ((sy + y.dot(&hy)) * rho * rho)
                - (hy * s.transpose() + s * hy.transpose()) * rho;
            fresh = false;
        }
        x = xn;
        f = fn_;
        g = gn;
    }
    if !converged && obj.scaled_gradient_norm(&x, &g) < opts.gradient_tolerance {
        converged = true;
    }
    RunOutcome {
        theta: x,
        value: f,
        iterations,
        converged,
    }
}

/// Negative log-likelihood of a state under Poisson statistics with the
/// brightness profiled out (up to `Σ ln n_k!`).
pub fn neg_log_likelihood(records: &[CountRecord], rho: &TwoQubitState) -> f64 {
    Objective::new(records).poisson_nll(rho.matrix()).0
}

pub fn mle_reconstruct(records: &[CountRecord], opts: &MleOptions) -> Result<TomographyResult> {
    let obj = Objective::new(records);
    if !(obj.total > 0.0) {
        return Err(Error::DegenerateData(
            "all coincidence counts are zero".into(),
        ));
    }
    let linear = linear_inversion(records)?;
    let projected = project_to_physical(&linear)?;
    let (linear_start_nll, _) = obj.poisson_nll(projected.matrix());

    // small admixture of I/4 makes the Cholesky factor exist for
    // rank-deficient projections
    let eps = 1e-6;
    let start_rho = projected.matrix() * Complex::new(1.0 - eps, 0.0)
        + Matrix4::<C64>::identity() * Complex::new(eps / 4.0, 0.0);
    let t0 = factor(&start_rho)
        .ok_or_else(|| Error::DegenerateData("could not factor starting state".into()))?;
    let start = params_of(&t0);

    let mut best = bfgs(&obj, start, opts);
    let mut rng = substream(opts.seed, Domain::MleRestart, 0);
    let spread = 0.3 * start.norm() / (N_PARAMS as f64).sqrt();
    for _ in 0..opts.restarts {
        let mut trial = start;
        for v in trial.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += spread * z;
        }
        let run = bfgs(&obj, trial, opts);
        if run.value < best.value {
            best = run;
        }
    }

    let t = lower_triangular(&best.theta);
    let rho = TwoQubitState::from_psd_unnormalized(t.adjoint() * t)?;
    let (nll, brightness) = obj.poisson_nll(rho.matrix());
    if !(nll <= linear_start_nll) {
        // never report anything less likely than the projected linear estimate
        let (nll, brightness) = obj.poisson_nll(projected.matrix());
        return Ok(TomographyResult {
            rho: projected,
            neg_log_likelihood: nll,
            iterations: best.iterations,
            converged: false,
            brightness_estimate: brightness * obj.mean_duration(),
            linear_start_nll,
        });
    }
    Ok(TomographyResult {
        rho,
        neg_log_likelihood: nll,
        iterations: best.iterations,
        converged: best.converged,
        brightness_estimate: brightness * obj.mean_duration(),
        linear_start_nll,
    })
}
