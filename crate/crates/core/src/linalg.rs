//! Iterative solvers shared by the spectral and Newton code: conjugate
//! gradients, LSQR, and shift-invert Lanczos for `A x = lambda W x` with
//! diagonal `W`.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use sprs::CsMat;

/// Scalars the iterative solvers accept (`f64` and `Complex64`).
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {}
impl<T: ComplexField<RealField = f64> + Copy + Send + Sync> Scalar for T {}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.conjugate() * *y)
}

pub fn norm2<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// `y = A x` for a CSR matrix.
pub fn csr_mul<T: Scalar>(a: &CsMat<T>, x: &[T], y: &mut [T]) {
    debug_assert!(a.is_csr());
    for (i, row) in a.outer_iterator().enumerate() {
        let mut s = T::zero();
        for (j, v) in row.iter() {
            s += *v * x[j];
        }
        y[i] = s;
    }
}

/// `y = A^H x` for a CSR matrix.
pub fn csr_mul_adjoint<T: Scalar>(a: &CsMat<T>, x: &[T], y: &mut [T]) {
    y.iter_mut().for_each(|v| *v = T::zero());
    for (i, row) in a.outer_iterator().enumerate() {
        let xi = x[i];
        for (j, v) in row.iter() {
            y[j] += v.conjugate() * xi;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a Hermitian positive definite operator.
pub fn cg<T: Scalar>(
    apply: impl Fn(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    rtol: f64,
    max_iter: usize,
) -> SolveStats {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = T::zero());
        return SolveStats {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut ax = vec![T::zero(); n];
    apply(x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).real();
    let mut ap = vec![T::zero(); n];
    let mut it = 0;
    while it < max_iter {
        if rr.sqrt() <= rtol * bnorm {
            break;
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap).real();
        if !(pap > 0.0) {
            break;
        }
        let alpha = T::from_real(rr / pap);
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r).real();
        let beta = T::from_real(rr_new / rr);
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = *ri + beta * *pi;
        }
        rr = rr_new;
        it += 1;
    }
    let relative_residual = rr.sqrt() / bnorm;
    SolveStats {
        iterations: it,
        relative_residual,
        converged: relative_residual <= rtol,
    }
}

/// LSQR for `min |A x - b|`; started from zero it returns the minimum-norm
/// least-squares solution, also for rank-deficient `A`.
pub fn lsqr(
    nrows: usize,
    ncols: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    apply_t: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveStats) {
    let mut x = vec![0.0; ncols];
    let mut u = b.to_vec();
    let mut beta = norm2(&u);
    if beta == 0.0 {
        return (
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    u.iter_mut().for_each(|v| *v /= beta);
    let mut v = vec![0.0; ncols];
    apply_t(&u, &mut v);
    let mut alpha = norm2(&v);
    if alpha == 0.0 {
        return (
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 1.0,
                converged: true,
            },
        );
    }
    v.iter_mut().for_each(|x| *x /= alpha);
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let bnorm = beta;
    let mut anorm2 = 0.0f64;
    let mut tmp_u = vec![0.0; nrows];
    let mut tmp_v = vec![0.0; ncols];
    let mut it = 0;
    let mut converged = false;
    while it < max_iter {
        it += 1;
        apply(&v, &mut tmp_u);
        for (ui, ti) in u.iter_mut().zip(&tmp_u) {
            *ui = ti - alpha * *ui;
        }
        beta = norm2(&u);
        if beta > 0.0 {
            u.iter_mut().for_each(|x| *x /= beta);
        }
        anorm2 += alpha * alpha + beta * beta;
        apply_t(&u, &mut tmp_v);
        for (vi, ti) in v.iter_mut().zip(&tmp_v) {
            *vi = ti - beta * *vi;
        }
        alpha = norm2(&v);
        if alpha > 0.0 {
            v.iter_mut().for_each(|x| *x /= alpha);
        }
        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;
        let t1 = phi / rho;
        let t2 = -theta / rho;
        for ((xi, wi), vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            *xi += t1 * *wi;
            *wi = vi + t2 * *wi;
        }
        // |A^T r| = phibar * alpha * |c|; stop on either the residual or the normal equations.
        let arnorm = phibar * alpha * c.abs();
        let xnorm = norm2(&x);
        if phibar <= rtol * bnorm
            || arnorm <= rtol * anorm2.sqrt() * (phibar + anorm2.sqrt() * xnorm).max(f64::MIN_POSITIVE)
            || alpha == 0.0
        {
            converged = true;
            break;
        }
    }
    (
        x,
        SolveStats {
            iterations: it,
            relative_residual: phibar / bnorm,
            converged,
        },
    )
}

#[derive(Debug, Clone)]
pub struct EigenResult<T> {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<T>>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Lowest `k` eigenpairs of `A x = lambda W x` with `A` Hermitian positive
/// semidefinite and `W` a positive diagonal, by Lanczos on `(A - sigma W)^{-1} W`
/// in the `W` inner product. `sigma < 0` keeps every inner solve positive definite.
///
/// Each pass converges the lowest Ritz pair and locks it; later passes run in
/// the `W`-orthogonal complement, so repeated eigenvalues are counted with
/// their multiplicity.
pub fn shift_invert_lanczos<T: Scalar>(
    apply_a: impl Fn(&[T], &mut [T]),
    w: &[f64],
    k: usize,
    sigma: f64,
    start: &[T],
    rtol: f64,
    max_krylov: usize,
) -> EigenResult<T> {
    assert!(sigma < 0.0);
    let mut out = EigenResult {
        values: Vec::new(),
        vectors: Vec::new(),
        iterations: 0,
        residual: 0.0,
        converged: true,
    };
    for pass in 0..k {
        // Vary the start vector between passes so a locked direction is never the whole start.
        let st: Vec<T> = start
            .iter()
            .enumerate()
            .map(|(i, x)| *x * T::from_real(1.0 + 0.37 * ((i * (pass + 1)) % 7) as f64))
            .collect();
        let r = lanczos_pass(&apply_a, w, sigma, &st, rtol, max_krylov, &out.vectors);
        out.iterations += r.2;
        out.residual = out.residual.max(r.3);
        out.converged &= r.4;
        out.values.push(r.0);
        out.vectors.push(r.1);
    }
    let mut order: Vec<usize> = (0..out.values.len()).collect();
    order.sort_by(|&a, &b| out.values[a].partial_cmp(&out.values[b]).unwrap());
    out.values = order.iter().map(|&i| out.values[i]).collect();
    out.vectors = order.iter().map(|&i| out.vectors[i].clone()).collect();
    out
}

fn w_dot<T: Scalar>(w: &[f64], a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .zip(w)
        .fold(T::zero(), |acc, ((x, y), wi)| acc + x.conjugate() * *y * T::from_real(*wi))
}

fn deflate<T: Scalar>(w: &[f64], locked: &[Vec<T>], y: &mut [T]) {
    for b in locked {
        let c = w_dot(w, b, y);
        axpy(-c, b, y);
    }
}

/// One Lanczos run for the lowest eigenpair outside `locked` (W-orthonormal).
/// Returns `(lambda, x, iterations, residual estimate, converged)`.
fn lanczos_pass<T: Scalar>(
    apply_a: &impl Fn(&[T], &mut [T]),
    w: &[f64],
    sigma: f64,
    start: &[T],
    rtol: f64,
    max_krylov: usize,
    locked: &[Vec<T>],
) -> (f64, Vec<T>, usize, f64, bool) {
    let n = w.len();
    let shifted = |x: &[T], y: &mut [T]| {
        apply_a(x, y);
        for i in 0..n {
            y[i] -= x[i] * T::from_real(sigma * w[i]);
        }
    };
    let op = |x: &[T], y: &mut [T]| {
        let rhs: Vec<T> = x.iter().zip(w).map(|(xi, wi)| *xi * T::from_real(*wi)).collect();
        y.iter_mut().for_each(|v| *v = T::zero());
        cg(&shifted, &rhs, y, 1e-13, 20 * n + 100);
    };

    let mut q0 = start.to_vec();
    deflate(w, locked, &mut q0);
    deflate(w, locked, &mut q0);
    let nrm = w_dot(w, &q0, &q0).real().sqrt();
    q0.iter_mut().for_each(|x| *x /= T::from_real(nrm));
    let mut basis: Vec<Vec<T>> = vec![q0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut y = vec![T::zero(); n];
    let max_krylov = max_krylov.min(n - locked.len()).max(1);
    let mut m = 0;
    loop {
        m += 1;
        let q = basis[m - 1].clone();
        op(&q, &mut y);
        let a = w_dot(w, &q, &y).real();
        alphas.push(a);
        for _ in 0..2 {
            deflate(w, locked, &mut y);
            for b in &basis {
                let c = w_dot(w, b, &y);
                axpy(-c, b, &mut y);
            }
        }
        let beta = w_dot(w, &y, &y).real().sqrt();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let top = (0..m)
            .max_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap())
            .unwrap();
        let mu = eig.eigenvalues[top];
        let resid = (beta * eig.eigenvectors[(m - 1, top)]).abs() / mu.abs().max(f64::MIN_POSITIVE);
        let breakdown = beta <= 1e-14 * mu.abs();
        if resid <= rtol || breakdown || m >= max_krylov {
            let mut x = vec![T::zero(); n];
            for (j, b) in basis.iter().enumerate() {
                axpy(T::from_real(eig.eigenvectors[(j, top)]), b, &mut x);
            }
            deflate(w, locked, &mut x);
            let nx = w_dot(w, &x, &x).real().sqrt();
            x.iter_mut().for_each(|v| *v /= T::from_real(nx));
            return (sigma + 1.0 / mu, x, m, resid, resid <= rtol || breakdown);
        }
        betas.push(beta);
        basis.push(y.iter().map(|x| *x / T::from_real(beta)).collect());
    }
}
