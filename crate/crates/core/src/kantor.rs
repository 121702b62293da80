//! Newton iteration with a sampled Kantorovich certificate.
//!
//! For `F: X -> Y` near `x0`, with `alpha = |DF(x0)^+ F(x0)|`,
//! `beta = |DF(x0)^+|` and `k` a Lipschitz bound for `DF` on `B_r(x0)`, the
//! conditions `2 k alpha beta < 1` and `2 alpha < r` guarantee a unique zero in
//! the ball. Here `beta` and `k` are estimated from finitely many samples, so a
//! certificate is empirical evidence rather than a proof.
//!
//! Steps are minimum-norm least-squares (Gauss-Newton) steps, which reduce to
//! Newton steps when `DF` is square and invertible.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sprs::CsMat;
use thiserror::Error;

use crate::linalg::{csr_mul, csr_mul_adjoint, lsqr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    #[serde(rename = "failed_2kab")]
    Failed2kab,
    #[serde(rename = "failed_2a_r")]
    Failed2aR,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KantorovichCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    pub r: f64,
    pub verdict: Verdict,
    /// Always true: `beta` and `k` come from sampling, not from exact norms.
    pub empirical: bool,
}

impl KantorovichCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn two_k_alpha_beta(&self) -> f64 {
        2.0 * self.k * self.alpha * self.beta
    }
}

/// The two inequalities, checked in order.
pub fn certify(alpha: f64, beta: f64, k: f64, r: f64) -> KantorovichCertificate {
    let verdict = if !(2.0 * k * alpha * beta < 1.0) {
        Verdict::Failed2kab
    } else if !(2.0 * alpha < r) {
        Verdict::Failed2aR
    } else {
        Verdict::Certified
    };
    KantorovichCertificate {
        alpha,
        beta,
        k,
        r,
        verdict,
        empirical: true,
    }
}

pub enum Jacobian {
    Dense(DMatrix<f64>),
    Sparse(CsMat<f64>),
    /// `J (I - Q Q^T)` for orthonormal columns `Q`: the derivative restricted
    /// to the complement of a gauge subspace.
    Projected(CsMat<f64>, DMatrix<f64>),
}

impl Jacobian {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Jacobian::Dense(m) => m.shape(),
            Jacobian::Sparse(m) | Jacobian::Projected(m, _) => m.shape(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Jacobian::Dense(m) => (m * DVector::from_column_slice(x)).as_slice().to_vec(),
            Jacobian::Sparse(m) => {
                let mut y = vec![0.0; m.rows()];
                csr_mul(m, x, &mut y);
                y
            }
            Jacobian::Projected(m, q) => {
                let px = project_out(q, x);
                let mut y = vec![0.0; m.rows()];
                csr_mul(m, &px, &mut y);
                y
            }
        }
    }

    pub fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Jacobian::Dense(m) => (m.transpose() * DVector::from_column_slice(y)).as_slice().to_vec(),
            Jacobian::Sparse(m) => {
                let mut x = vec![0.0; m.cols()];
                csr_mul_adjoint(m, y, &mut x);
                x
            }
            Jacobian::Projected(m, q) => {
                let mut x = vec![0.0; m.cols()];
                csr_mul_adjoint(m, y, &mut x);
                project_out(q, &x)
            }
        }
    }
}

fn project_out(q: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let xv = DVector::from_column_slice(x);
    let c = q.transpose() * &xv;
    (xv - q * c).as_slice().to_vec()
}

/// A map `F` with derivative. Implementations must be deterministic.
pub trait NonlinearMap: Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> Jacobian;
}

/// Inner product `<x, y> = x^T G y` on the domain.
pub trait Metric: Sync {
    fn gram(&self, x: &[f64]) -> Vec<f64>;
    /// `G^{-1} y`.
    fn solve(&self, y: &[f64]) -> Vec<f64>;
    fn norm(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.gram(x)).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }
}

pub struct Euclidean;

impl Metric for Euclidean {
    fn gram(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
}

/// Diagonal weights, e.g. quadrature weights of an L2 norm.
pub struct Diagonal(pub Vec<f64>);

impl Metric for Diagonal {
    fn gram(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.0).map(|(a, w)| a * w).collect()
    }
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.0).map(|(a, w)| a / w).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusPolicy {
    Fixed(f64),
    /// `r = c * alpha`.
    AlphaMultiple(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualNorm {
    /// The weighted norm of `Y`.
    Metric,
    /// Largest absolute component.
    Max,
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub residual_norm: ResidualNorm,
    pub radius: RadiusPolicy,
    pub seed: u64,
    pub lipschitz_pairs: usize,
    pub power_steps: usize,
    pub lipschitz_inflation: f64,
    pub max_halvings: usize,
    /// Accept rank-deficient derivatives and use their pseudo-inverse.
    pub allow_rank_deficient: bool,
    pub lsqr_tol: f64,
    /// Looser inner tolerance for the power iterations behind `beta`.
    pub estimate_tol: f64,
    pub lsqr_max_iter: usize,
    /// Stop before iterating when the certificate fails.
    pub require_certificate: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 50,
            residual_norm: ResidualNorm::Metric,
            radius: RadiusPolicy::AlphaMultiple(4.0),
            seed: 11,
            lipschitz_pairs: 32,
            power_steps: 20,
            lipschitz_inflation: 1.5,
            max_halvings: 8,
            allow_rank_deficient: false,
            lsqr_tol: 1e-13,
            estimate_tol: 1e-8,
            lsqr_max_iter: 20_000,
            require_certificate: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonTrace {
    /// Residual before each step and after the last one.
    pub residuals: Vec<f64>,
    pub step_norms: Vec<f64>,
    pub halvings: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub trace: NewtonTrace,
    pub certificate: KantorovichCertificate,
    /// `|x - x0|_X`.
    pub distance: f64,
}

impl NewtonOutcome {
    pub fn within_ball(&self) -> bool {
        self.distance < self.certificate.r
    }
}

#[derive(Debug, Error, Clone)]
pub enum NewtonError {
    #[error("derivative is singular at the initial point (condition {condition:.3e})")]
    SingularDerivative { condition: f64 },
    #[error("certificate failed ({:?}, 2k*alpha*beta = {:.3e}, 2*alpha/r = {:.3e})", .0.verdict, .0.two_k_alpha_beta(), 2.0 * .0.alpha / .0.r)]
    CertificateFailed(KantorovichCertificate),
    #[error("Newton iteration did not converge after {} iterations (residual {:.3e})", .0.trace.iterations, .0.trace.residuals.last().copied().unwrap_or(f64::NAN))]
    NoConvergence(Box<NewtonOutcome>),
}

/// Least-squares solver for one fixed derivative, in the `Y` weights.
struct LinearSolve<'a> {
    jac: &'a Jacobian,
    sqrt_w: Vec<f64>,
    pinv: Option<DMatrix<f64>>,
    tol: f64,
    max_iter: usize,
}

impl<'a> LinearSolve<'a> {
    fn new(jac: &'a Jacobian, y_weights: &[f64], opts: &NewtonOptions) -> Result<Self, NewtonError> {
        let sqrt_w: Vec<f64> = y_weights.iter().map(|w| w.sqrt()).collect();
        let pinv = match jac {
            Jacobian::Dense(m) => {
                let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * sqrt_w[i]);
                let svd = scaled.clone().svd(true, true);
                let smax = svd.singular_values.max();
                let smin = svd.singular_values.min();
                let full_rank = svd.singular_values.len() == m.ncols();
                let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
                if smax == 0.0 || (!opts.allow_rank_deficient && (!full_rank || condition > 1e12)) {
                    return Err(NewtonError::SingularDerivative { condition });
                }
                let p = svd
                    .pseudo_inverse(1e-12 * smax)
                    .map_err(|_| NewtonError::SingularDerivative { condition })?;
                Some(p)
            }
            Jacobian::Sparse(_) | Jacobian::Projected(..) => None,
        };
        Ok(LinearSolve {
            jac,
            sqrt_w,
            pinv,
            tol: opts.lsqr_tol,
            max_iter: opts.lsqr_max_iter,
        })
    }

    /// `S y = argmin |J x - y|_Y` with minimal Euclidean norm.
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let b: Vec<f64> = y.iter().zip(&self.sqrt_w).map(|(a, s)| a * s).collect();
        if let Some(p) = &self.pinv {
            return (p * DVector::from_vec(b)).as_slice().to_vec();
        }
        let (nr, nc) = self.jac.shape();
        let sw = &self.sqrt_w;
        let (x, _) = lsqr(
            nr,
            nc,
            |x, out| {
                let r = self.jac.apply(x);
                for i in 0..nr {
                    out[i] = r[i] * sw[i];
                }
            },
            |y, out| {
                let s: Vec<f64> = y.iter().zip(sw).map(|(a, b)| a * b).collect();
                out.copy_from_slice(&self.jac.apply_t(&s));
            },
            &b,
            self.tol,
            self.max_iter,
        );
        x
    }

    /// `S^T x`.
    fn solve_t(&self, x: &[f64]) -> Vec<f64> {
        if let Some(p) = &self.pinv {
            let z = p.transpose() * DVector::from_column_slice(x);
            return z.iter().zip(&self.sqrt_w).map(|(a, s)| a * s).collect();
        }
        let (nr, nc) = self.jac.shape();
        let sw = &self.sqrt_w;
        // S^T = W^{1/2} (J^T W^{1/2})^+.
        let (z, _) = lsqr(
            nc,
            nr,
            |y, out| {
                let s: Vec<f64> = y.iter().zip(sw).map(|(a, b)| a * b).collect();
                out.copy_from_slice(&self.jac.apply_t(&s));
            },
            |x, out| {
                let r = self.jac.apply(x);
                for i in 0..nr {
                    out[i] = r[i] * sw[i];
                }
            },
            x,
            self.tol,
            self.max_iter,
        );
        z.iter().zip(sw).map(|(a, s)| a * s).collect()
    }
}

fn random_unit(n: usize, metric: &dyn Metric, rng: &mut impl Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nx = metric.norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Power estimate of `sup |A z|_out / |z|_in`, given `A` and `A^T`.
pub fn operator_norm(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_t: impl Fn(&[f64]) -> Vec<f64>,
    input: &dyn Metric,
    output: &dyn Metric,
    dim_in: usize,
    steps: usize,
    rng: &mut impl Rng,
) -> f64 {
    let mut z = random_unit(dim_in, input, rng);
    let mut best = 0.0f64;
    for _ in 0..steps.max(1) {
        let az = apply(&z);
        let num = dot(&az, &output.gram(&az)).max(0.0).sqrt();
        let den = input.norm(&z);
        if den == 0.0 {
            break;
        }
        best = best.max(num / den);
        let next = input.solve(&apply_t(&output.gram(&az)));
        let nn = input.norm(&next);
        if !(nn > 0.0) || !nn.is_finite() {
            break;
        }
        z = next.iter().map(|v| v / nn).collect();
    }
    best
}

fn residual_norm(r: &[f64], y_metric: &Diagonal, kind: ResidualNorm) -> f64 {
    match kind {
        ResidualNorm::Metric => y_metric.norm(r),
        ResidualNorm::Max => r.iter().fold(0.0f64, |m, x| m.max(x.abs())),
    }
}

/// Sampled Lipschitz constant of `DF` on `B_r(x0)`, inflated.
pub fn sample_lipschitz(
    f: &dyn NonlinearMap,
    x0: &[f64],
    r: f64,
    x_metric: &dyn Metric,
    y_metric: &Diagonal,
    opts: &NewtonOptions,
    rng: &mut ChaCha8Rng,
) -> f64 {
    use rayon::prelude::*;
    let n = f.dim_in();
    let seeds: Vec<u64> = (0..opts.lipschitz_pairs).map(|_| rng.random()).collect();
    let worst = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut point = || {
                let d = random_unit(n, x_metric, &mut rng);
                let rad = r * rng.random::<f64>().powf(1.0 / n as f64);
                x0.iter().zip(&d).map(|(a, b)| a + rad * b).collect::<Vec<f64>>()
            };
            let x1 = point();
            let x2 = point();
            let diff: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a - b).collect();
            let dist = x_metric.norm(&diff);
            if dist == 0.0 {
                return 0.0;
            }
            let j1 = f.jacobian(&x1);
            let j2 = f.jacobian(&x2);
            let nrm = operator_norm(
                |z| {
                    let a = j1.apply(z);
                    let b = j2.apply(z);
                    a.iter().zip(&b).map(|(p, q)| p - q).collect()
                },
                |y| {
                    let a = j1.apply_t(y);
                    let b = j2.apply_t(y);
                    a.iter().zip(&b).map(|(p, q)| p - q).collect()
                },
                x_metric,
                y_metric,
                n,
                opts.power_steps,
                &mut rng,
            );
            nrm / dist
        })
        .reduce(|| 0.0, f64::max);
    opts.lipschitz_inflation * worst
}

/// Certificate at `x0` followed by damped Gauss-Newton iteration.
pub fn newton_solve(
    f: &dyn NonlinearMap,
    x0: &[f64],
    x_metric: &dyn Metric,
    y_metric: &Diagonal,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, NewtonError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = x0.to_vec();
    let mut fx = f.eval(&x);
    let mut res = residual_norm(&fx, y_metric, opts.residual_norm);
    let mut trace = NewtonTrace {
        residuals: vec![res],
        ..Default::default()
    };

    // Certificate at x0.
    let jac0 = f.jacobian(&x);
    let solver0 = LinearSolve::new(&jac0, &y_metric.0, opts)?;
    let step0: Vec<f64> = solver0.solve(&fx).iter().map(|v| -v).collect();
    let alpha = x_metric.norm(&step0);
    let estimator = LinearSolve {
        tol: opts.estimate_tol,
        ..LinearSolve::new(&jac0, &y_metric.0, opts)?
    };
    let beta = operator_norm(
        |y| estimator.solve(y),
        |x| estimator.solve_t(x),
        y_metric,
        x_metric,
        f.dim_out(),
        opts.power_steps,
        &mut rng,
    );
    if !beta.is_finite() {
        return Err(NewtonError::SingularDerivative { condition: f64::INFINITY });
    }
    let r = match opts.radius {
        RadiusPolicy::Fixed(r) => r,
        RadiusPolicy::AlphaMultiple(c) => (c * alpha).max(f64::MIN_POSITIVE),
    };
    let k = if alpha == 0.0 {
        0.0
    } else {
        sample_lipschitz(f, x0, r, x_metric, y_metric, opts, &mut rng)
    };
    let certificate = certify(alpha, beta, k, r);
    if opts.require_certificate && !certificate.is_certified() {
        return Err(NewtonError::CertificateFailed(certificate));
    }

    let mut step = Some(step0);
    while res > opts.tol {
        if trace.iterations >= opts.max_iter {
            break;
        }
        let dx = match step.take() {
            Some(s) => s,
            None => {
                let jac = f.jacobian(&x);
                let solver = LinearSolve::new(&jac, &y_metric.0, opts)?;
                solver.solve(&fx).iter().map(|v| -v).collect()
            }
        };
        let mut t = 1.0;
        let mut halvings = 0;
        let (mut xn, mut fxn, mut resn);
        loop {
            xn = x.iter().zip(&dx).map(|(a, b)| a + t * b).collect::<Vec<f64>>();
            fxn = f.eval(&xn);
            resn = residual_norm(&fxn, y_metric, opts.residual_norm);
            if resn < res || halvings >= opts.max_halvings {
                break;
            }
            t *= 0.5;
            halvings += 1;
        }
        if !(resn < res) {
            trace.converged = false;
            let distance = x_metric.norm(&diff(&x, x0));
            return Err(NewtonError::NoConvergence(Box::new(NewtonOutcome {
                x,
                trace,
                certificate,
                distance,
            })));
        }
        trace.step_norms.push(t * x_metric.norm(&dx));
        trace.halvings.push(halvings);
        trace.iterations += 1;
        x = xn;
        fx = fxn;
        res = resn;
        trace.residuals.push(res);
    }
    trace.converged = res <= opts.tol;
    let distance = x_metric.norm(&diff(&x, x0));
    let outcome = NewtonOutcome {
        x,
        trace,
        certificate,
        distance,
    };
    if outcome.trace.converged {
        Ok(outcome)
    } else {
        Err(NewtonError::NoConvergence(Box::new(outcome)))
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Order estimate `log(r_{k+1}/r_k) / log(r_k/r_{k-1})` from the last three
/// residuals in `(floor, cap)`.
pub fn convergence_order(residuals: &[f64], floor: f64, cap: f64) -> Option<f64> {
    let r: Vec<f64> = residuals.iter().cloned().filter(|&x| x > floor && x < cap).collect();
    if r.len() < 3 {
        return None;
    }
    let n = r.len();
    let (a, b, c) = (r[n - 3], r[n - 2], r[n - 1]);
    Some((c / b).ln() / (b / a).ln())
}

/// Closure-backed map for small dense problems.
pub struct DenseMap<F, J>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
    J: Fn(&[f64]) -> DMatrix<f64> + Sync,
{
    pub dim_in: usize,
    pub dim_out: usize,
    pub f: F,
    pub df: J,
}

impl<F, J> NonlinearMap for DenseMap<F, J>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
    J: Fn(&[f64]) -> DMatrix<f64> + Sync,
{
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
    fn jacobian(&self, x: &[f64]) -> Jacobian {
        Jacobian::Dense((self.df)(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> impl NonlinearMap {
        DenseMap {
            dim_in: 1,
            dim_out: 1,
            f: |x: &[f64]| vec![x[0] * x[0] - 1.0],
            df: |x: &[f64]| DMatrix::from_element(1, 1, 2.0 * x[0]),
        }
    }

    #[test]
    fn certify_examples() {
        assert_eq!(certify(0.1, 1.0, 1.0, 1.0).verdict, Verdict::Certified);
        assert_eq!(certify(0.5, 1.0, 2.0, 1.0).verdict, Verdict::Failed2kab);
        assert_eq!(certify(0.6, 1.0, 0.1, 1.0).verdict, Verdict::Failed2aR);
        let c = certify(0.44 / 2.4, 1.0 / 2.4, 2.0, 0.5);
        assert_eq!(c.verdict, Verdict::Certified);
        assert!((c.two_k_alpha_beta() - 0.30556).abs() < 1e-4);
    }

    #[test]
    fn scalar_newton() {
        let opts = NewtonOptions {
            radius: RadiusPolicy::Fixed(0.5),
            ..Default::default()
        };
        let out = newton_solve(&scalar(), &[1.2], &Euclidean, &Diagonal(vec![1.0]), &opts).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-12);
        assert!(out.trace.iterations <= 6);
        assert!(out.certificate.is_certified());
        assert!((out.certificate.alpha - 0.44 / 2.4).abs() < 1e-12);
        assert!((out.certificate.beta - 1.0 / 2.4).abs() < 1e-12);
        assert!(out.certificate.k >= 2.0 && out.certificate.k <= 3.0 + 1e-9);
        assert!(out.within_ball());
    }

    #[test]
    fn zero_residual_start() {
        let lin = DenseMap {
            dim_in: 2,
            dim_out: 2,
            f: |x: &[f64]| vec![x[0] + 2.0 * x[1] - 3.0, x[0] - x[1]],
            df: |_: &[f64]| DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, -1.0]),
        };
        let out = newton_solve(&lin, &[1.0, 1.0], &Euclidean, &Diagonal(vec![1.0; 2]), &Default::default()).unwrap();
        assert_eq!(out.trace.iterations, 0);
        assert_eq!(out.x, vec![1.0, 1.0]);
    }

    #[test]
    fn singular_derivative() {
        let f = DenseMap {
            dim_in: 1,
            dim_out: 1,
            f: |x: &[f64]| vec![x[0] * x[0] + 1.0],
            df: |x: &[f64]| DMatrix::from_element(1, 1, 2.0 * x[0]),
        };
        let r = newton_solve(&f, &[0.0], &Euclidean, &Diagonal(vec![1.0]), &Default::default());
        assert!(matches!(r, Err(NewtonError::SingularDerivative { .. })));
    }

    #[test]
    fn no_real_root_fails() {
        let f = DenseMap {
            dim_in: 1,
            dim_out: 1,
            f: |x: &[f64]| vec![x[0] * x[0] + 1.0],
            df: |x: &[f64]| DMatrix::from_element(1, 1, 2.0 * x[0]),
        };
        let r = newton_solve(&f, &[0.5], &Euclidean, &Diagonal(vec![1.0]), &Default::default());
        match r {
            Err(NewtonError::NoConvergence(o)) => assert!(!o.certificate.is_certified()),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn order_estimate() {
        let r = [1e-1, 1e-2, 1e-4, 1e-8];
        assert!((convergence_order(&r, 1e-15, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }
}
