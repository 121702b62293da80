//! Twisted Dirac operator on the cylinder `[0, eps] x T^2`.
//!
//! A spinor is a pair `(u, v)` of complex grid functions and
//!
//! ```text
//! D(u, v) = (c D1 u + d+ v,  c D1 v + d- u),   d+ = i d2 + d3,  d- = i d2 - d3,
//! ```
//!
//! with `c = h^{-1/2}` for the metric `h dt^2 + g_T2`. `D1` is the
//! summation-by-parts derivative along the cylinder (centered inside,
//! one-sided at the ends, quadrature weights `dt/2, dt, ..., dt/2`); the torus
//! derivatives are centered and pick up the holonomy `exp(2 pi i theta)` when
//! they wrap. Integrals carry the volume factor `sqrt(h)`.
//!
//! Node `(k, i, j)` (cylinder index `k`, torus indices `i` for `x2`, `j` for
//! `x3`) is stored at `k * n * n + i * n + j`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};
use thiserror::Error;

use crate::linalg::{csr_mul, csr_mul_adjoint, shift_invert_lanczos};
use crate::tol;

type C64 = Complex64;
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiracError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field shape {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("boundary condition violated (max boundary value {max:.3e})")]
    BoundaryViolation { max: f64 },
    #[error("warp factor must be positive and finite (min {min:.3e})")]
    WarpNotPositive { min: f64 },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigensolverNoConvergence { iterations: usize, residual: f64 },
}

/// Warp factor `h` of the metric `h dt^2 + g_T2`, constant along the cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warp {
    Const(f64),
    /// Samples on the `n x n` torus grid, index `i * n + j`.
    Sampled(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    pub eps: f64,
    pub m: usize,
    pub n: usize,
    pub twist: [f64; 2],
    pub warp: Warp,
}

impl CylinderGrid {
    pub fn new(eps: f64, m: usize, n: usize, twist: [f64; 2]) -> Result<Self, DiracError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(DiracError::InvalidGrid(format!("eps must be positive, got {eps}")));
        }
        if m < 2 {
            return Err(DiracError::InvalidGrid(format!("m must be >= 2, got {m}")));
        }
        if n < 4 {
            return Err(DiracError::InvalidGrid(format!("n must be >= 4, got {n}")));
        }
        if twist.iter().any(|t| !(0.0..1.0).contains(t)) {
            return Err(DiracError::InvalidGrid(format!("twist must lie in [0,1)^2, got {twist:?}")));
        }
        Ok(CylinderGrid {
            eps,
            m,
            n,
            twist,
            warp: Warp::Const(1.0),
        })
    }

    pub fn with_warp(mut self, warp: Warp) -> Result<Self, DiracError> {
        let min = match &warp {
            Warp::Const(h) => *h,
            Warp::Sampled(h) => {
                if h.len() != self.n * self.n {
                    return Err(DiracError::ShapeMismatch {
                        expected: self.n * self.n,
                        got: h.len(),
                    });
                }
                h.iter().cloned().fold(f64::INFINITY, f64::min)
            }
        };
        let finite = match &warp {
            Warp::Const(h) => h.is_finite(),
            Warp::Sampled(h) => h.iter().all(|x| x.is_finite()),
        };
        if !(min > 0.0) || !finite {
            return Err(DiracError::WarpNotPositive { min });
        }
        self.warp = warp;
        Ok(self)
    }

    /// Samples `h(x2, x3)` on the torus grid.
    pub fn with_warp_fn(self, h: impl Fn(f64, f64) -> f64) -> Result<Self, DiracError> {
        let n = self.n;
        let dx = self.dx();
        let s = (0..n * n).map(|ij| h((ij / n) as f64 * dx, (ij % n) as f64 * dx)).collect();
        self.with_warp(Warp::Sampled(s))
    }

    pub fn dt(&self) -> f64 {
        self.eps / (self.m - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.m * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn torus_len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        k * self.n * self.n + i * self.n + j
    }

    pub fn warp_at(&self, ij: usize) -> f64 {
        match &self.warp {
            Warp::Const(h) => *h,
            Warp::Sampled(h) => h[ij],
        }
    }

    pub fn warp_bounds(&self) -> (f64, f64) {
        match &self.warp {
            Warp::Const(h) => (*h, *h),
            Warp::Sampled(h) => (
                h.iter().cloned().fold(f64::INFINITY, f64::min),
                h.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }

    /// Summation-by-parts quadrature weights along the cylinder.
    pub fn t_weights(&self) -> Vec<f64> {
        let h = self.dt();
        (0..self.m)
            .map(|k| if k == 0 || k == self.m - 1 { 0.5 * h } else { h })
            .collect()
    }

    /// Quadrature weight of every node, including `sqrt(h)`.
    pub fn node_weights(&self) -> Vec<f64> {
        let tw = self.t_weights();
        let a = self.dx() * self.dx();
        let nn = self.torus_len();
        (0..self.len())
            .map(|p| tw[p / nn] * a * self.warp_at(p % nn).sqrt())
            .collect()
    }

    fn phase(&self, axis: usize) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * self.twist[axis])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    /// `v = 0` on both ends.
    Hminus,
    /// `u = 0` on both ends.
    Hplus,
    /// No constraint; used as a control where the boundary terms survive.
    Free,
}

impl BoundaryCondition {
    /// Whether component `comp` (0 = u, 1 = v) is pinned on the end slices.
    fn pins(&self, comp: usize) -> bool {
        matches!((self, comp), (BoundaryCondition::Hminus, 1) | (BoundaryCondition::Hplus, 0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub bc: BoundaryCondition,
}

impl SpinorField {
    /// Checks shapes and that the pinned component vanishes exactly on both ends.
    pub fn new(grid: &CylinderGrid, u: Vec<C64>, v: Vec<C64>, bc: BoundaryCondition) -> Result<Self, DiracError> {
        for f in [&u, &v] {
            if f.len() != grid.len() {
                return Err(DiracError::ShapeMismatch {
                    expected: grid.len(),
                    got: f.len(),
                });
            }
        }
        let field = SpinorField { u, v, bc };
        let max = boundary_max(grid, &field);
        if max != 0.0 {
            return Err(DiracError::BoundaryViolation { max });
        }
        Ok(field)
    }

    pub fn zeros(grid: &CylinderGrid, bc: BoundaryCondition) -> Self {
        SpinorField {
            u: vec![C64::new(0.0, 0.0); grid.len()],
            v: vec![C64::new(0.0, 0.0); grid.len()],
            bc,
        }
    }

    /// Gaussian node values with the boundary contract imposed.
    pub fn random(grid: &CylinderGrid, bc: BoundaryCondition, rng: &mut impl Rng) -> Self {
        let mut gen = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let u: Vec<C64> = (0..grid.len()).map(|_| gen()).collect();
        let v: Vec<C64> = (0..grid.len()).map(|_| gen()).collect();
        let mut f = SpinorField { u, v, bc };
        f.impose_boundary(grid);
        f
    }

    pub fn impose_boundary(&mut self, grid: &CylinderGrid) {
        let nn = grid.torus_len();
        for comp in 0..2 {
            if !self.bc.pins(comp) {
                continue;
            }
            let f = if comp == 0 { &mut self.u } else { &mut self.v };
            for k in [0, grid.m - 1] {
                f[k * nn..(k + 1) * nn].iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            }
        }
    }

    pub fn norm_squared(&self, grid: &CylinderGrid) -> f64 {
        weighted_norm2(grid, &self.u) + weighted_norm2(grid, &self.v)
    }
}

fn boundary_max(grid: &CylinderGrid, f: &SpinorField) -> f64 {
    let nn = grid.torus_len();
    let mut max = 0.0f64;
    for comp in 0..2 {
        if !f.bc.pins(comp) {
            continue;
        }
        let g = if comp == 0 { &f.u } else { &f.v };
        for k in [0, grid.m - 1] {
            for x in &g[k * nn..(k + 1) * nn] {
                max = max.max(x.norm());
            }
        }
    }
    max
}

/// `sum w |f|^2` with the grid's node weights.
pub fn weighted_norm2(grid: &CylinderGrid, f: &[C64]) -> f64 {
    grid.node_weights().iter().zip(f).map(|(w, x)| w * x.norm_sqr()).sum()
}

/// `sum w conj(a) b`.
pub fn weighted_inner(grid: &CylinderGrid, a: &[C64], b: &[C64]) -> C64 {
    grid.node_weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| x.conj() * y * *w)
        .sum()
}

/// SBP derivative along the cylinder.
pub fn d1(grid: &CylinderGrid, f: &[C64]) -> Vec<C64> {
    let (m, nn) = (grid.m, grid.torus_len());
    let h = grid.dt();
    let mut out = vec![C64::new(0.0, 0.0); f.len()];
    for k in 0..m {
        for ij in 0..nn {
            let p = k * nn + ij;
            out[p] = if k == 0 {
                (f[p + nn] - f[p]) / h
            } else if k == m - 1 {
                (f[p] - f[p - nn]) / h
            } else {
                (f[p + nn] - f[p - nn]) / (2.0 * h)
            };
        }
    }
    out
}

/// Centered twisted derivative along torus axis `axis` (0 for `x2`, 1 for `x3`).
pub fn d_torus(grid: &CylinderGrid, f: &[C64], axis: usize) -> Vec<C64> {
    let n = grid.n;
    let dx = grid.dx();
    let ph = grid.phase(axis);
    let mut out = vec![C64::new(0.0, 0.0); f.len()];
    for k in 0..grid.m {
        for i in 0..n {
            for j in 0..n {
                let p = grid.idx(k, i, j);
                let a = if axis == 0 { i } else { j };
                let (ip, phase_p) = if a + 1 == n { (0, ph) } else { (a + 1, C64::new(1.0, 0.0)) };
                let (im, phase_m) = if a == 0 { (n - 1, ph.conj()) } else { (a - 1, C64::new(1.0, 0.0)) };
                let (pp, pm) = if axis == 0 {
                    (grid.idx(k, ip, j), grid.idx(k, im, j))
                } else {
                    (grid.idx(k, i, ip), grid.idx(k, i, im))
                };
                out[p] = (f[pp] * phase_p - f[pm] * phase_m) / (2.0 * dx);
            }
        }
    }
    out
}

/// `d+ = i d2 + d3`.
pub fn dplus(grid: &CylinderGrid, f: &[C64]) -> Vec<C64> {
    let a = d_torus(grid, f, 0);
    let b = d_torus(grid, f, 1);
    a.iter().zip(&b).map(|(x, y)| I * x + y).collect()
}

/// `d- = i d2 - d3`, the adjoint of `d+`.
pub fn dminus(grid: &CylinderGrid, f: &[C64]) -> Vec<C64> {
    let a = d_torus(grid, f, 0);
    let b = d_torus(grid, f, 1);
    a.iter().zip(&b).map(|(x, y)| I * x - y).collect()
}

fn scale_by_warp(grid: &CylinderGrid, f: &mut [C64]) {
    let nn = grid.torus_len();
    for (p, x) in f.iter_mut().enumerate() {
        *x /= grid.warp_at(p % nn).sqrt();
    }
}

fn check_shape(grid: &CylinderGrid, v: &SpinorField) -> Result<(), DiracError> {
    for f in [&v.u, &v.v] {
        if f.len() != grid.len() {
            return Err(DiracError::ShapeMismatch {
                expected: grid.len(),
                got: f.len(),
            });
        }
    }
    Ok(())
}

/// The two rows `(c D1 u + d+ v, c D1 v + d- u)`; the result carries `bc = Free`.
pub fn apply_dirac(v: &SpinorField, grid: &CylinderGrid) -> Result<SpinorField, DiracError> {
    check_shape(grid, v)?;
    let mut du = d1(grid, &v.u);
    let mut dv = d1(grid, &v.v);
    scale_by_warp(grid, &mut du);
    scale_by_warp(grid, &mut dv);
    let pv = dplus(grid, &v.v);
    let mu = dminus(grid, &v.u);
    Ok(SpinorField {
        u: du.iter().zip(&pv).map(|(a, b)| a + b).collect(),
        v: dv.iter().zip(&mu).map(|(a, b)| a + b).collect(),
        bc: BoundaryCondition::Free,
    })
}

/// L2 norms of the two complexified Cauchy-Riemann residuals
/// `c D1 u + d+ v` and `c D1 v + d- u`; their squares sum to `|D V|^2`.
pub fn cr_residual(v: &SpinorField, grid: &CylinderGrid) -> Result<(f64, f64), DiracError> {
    let dv = apply_dirac(v, grid)?;
    Ok((weighted_norm2(grid, &dv.u).sqrt(), weighted_norm2(grid, &dv.v).sqrt()))
}

/// Squared discrete H1 norm: `|V|^2 + |D1 V|^2 + |d2 V|^2 + |d3 V|^2`.
pub fn h1_norm_squared(v: &SpinorField, grid: &CylinderGrid) -> f64 {
    let mut s = v.norm_squared(grid);
    for f in [&v.u, &v.v] {
        s += weighted_norm2(grid, &d1(grid, f));
        s += weighted_norm2(grid, &d_torus(grid, f, 0));
        s += weighted_norm2(grid, &d_torus(grid, f, 1));
    }
    s
}

/// `2 Re( <c D1 u, d+ v> + <c D1 v, d- u> )`, the term dropped when the square
/// of `D V` splits into cylinder and torus parts. Zero for `Hminus` and `Hplus` fields.
pub fn cross_term(v: &SpinorField, grid: &CylinderGrid) -> Result<f64, DiracError> {
    check_shape(grid, v)?;
    let mut du = d1(grid, &v.u);
    let mut dv = d1(grid, &v.v);
    scale_by_warp(grid, &mut du);
    scale_by_warp(grid, &mut dv);
    let pv = dplus(grid, &v.v);
    let mu = dminus(grid, &v.u);
    Ok(2.0 * (weighted_inner(grid, &du, &pv) + weighted_inner(grid, &dv, &mu)).re)
}

/// `|<d+ a, b> - <a, d- b>|` relative to `|d+ a| |b| + |a| |d- b|`.
pub fn torus_adjointness_defect(grid: &CylinderGrid, a: &[C64], b: &[C64]) -> f64 {
    let pa = dplus(grid, a);
    let mb = dminus(grid, b);
    let lhs = weighted_inner(grid, &pa, b);
    let rhs = weighted_inner(grid, a, &mb);
    let scale = weighted_norm2(grid, &pa).sqrt() * weighted_norm2(grid, b).sqrt()
        + weighted_norm2(grid, a).sqrt() * weighted_norm2(grid, &mb).sqrt();
    (lhs - rhs).norm() / scale.max(f64::MIN_POSITIVE)
}

/// The Dirac operator as a sparse matrix acting on `[u; v]` (length `2 L`).
pub fn assemble_dirac(grid: &CylinderGrid) -> CsMat<C64> {
    let l = grid.len();
    let (m, n, nn) = (grid.m, grid.n, grid.torus_len());
    let h = grid.dt();
    let dx = grid.dx();
    let mut t = TriMat::with_capacity((2 * l, 2 * l), 12 * l);
    let one = C64::new(1.0, 0.0);
    for k in 0..m {
        for i in 0..n {
            for j in 0..n {
                let p = grid.idx(k, i, j);
                let c = 1.0 / grid.warp_at(p % nn).sqrt();
                let t_stencil: Vec<(usize, f64)> = if k == 0 {
                    vec![(p, -1.0 / h), (p + nn, 1.0 / h)]
                } else if k == m - 1 {
                    vec![(p - nn, -1.0 / h), (p, 1.0 / h)]
                } else {
                    vec![(p - nn, -0.5 / h), (p + nn, 0.5 / h)]
                };
                for (row_off, col_off) in [(0, 0), (l, l)] {
                    for &(q, w) in &t_stencil {
                        t.add_triplet(row_off + p, col_off + q, one * (c * w));
                    }
                }
                // Torus neighbours with their twist phases.
                let ph2 = grid.phase(0);
                let ph3 = grid.phase(1);
                let (ip, pp2) = if i + 1 == n { (0, ph2) } else { (i + 1, one) };
                let (im, pm2) = if i == 0 { (n - 1, ph2.conj()) } else { (i - 1, one) };
                let (jp, pp3) = if j + 1 == n { (0, ph3) } else { (j + 1, one) };
                let (jm, pm3) = if j == 0 { (n - 1, ph3.conj()) } else { (j - 1, one) };
                let s = 0.5 / dx;
                let d2 = [(grid.idx(k, ip, j), pp2 * s), (grid.idx(k, im, j), -pm2 * s)];
                let d3 = [(grid.idx(k, i, jp), pp3 * s), (grid.idx(k, i, jm), -pm3 * s)];
                // Row u: + i d2 v + d3 v. Row v: + i d2 u - d3 u.
                for &(q, w) in &d2 {
                    t.add_triplet(p, l + q, I * w);
                    t.add_triplet(l + p, q, I * w);
                }
                for &(q, w) in &d3 {
                    t.add_triplet(p, l + q, w);
                    t.add_triplet(l + p, q, -w);
                }
            }
        }
    }
    t.to_csr()
}

/// Indices into `[u; v]` that are free under `bc`.
pub fn free_dofs(grid: &CylinderGrid, bc: BoundaryCondition) -> Vec<usize> {
    let l = grid.len();
    let nn = grid.torus_len();
    (0..2 * l)
        .filter(|&q| {
            let comp = q / l;
            let k = (q % l) / nn;
            !(bc.pins(comp) && (k == 0 || k == grid.m - 1))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralRoute {
    /// Exact block diagonalization over torus modes; constant warp only.
    Fourier,
    /// Shift-invert Lanczos on the assembled quadratic form.
    Lanczos,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub count: usize,
    pub route: Option<SpectralRoute>,
    pub seed: u64,
    pub shift: f64,
    pub rtol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            count: 1,
            route: None,
            seed: 7,
            shift: -0.05,
            rtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eps: f64,
    pub m: usize,
    pub n: usize,
    pub twist: [f64; 2],
    pub bc: BoundaryCondition,
    pub route: SpectralRoute,
    /// Lowest Rayleigh quotient of `|D V|^2 / |V|^2` on the constrained space.
    pub lambda_d: f64,
    /// Continuum ground state of the twisted torus Laplacian.
    pub lambda_dplus: f64,
    /// Ground state of the discrete torus operator `d- d+`.
    pub lambda_dplus_discrete: f64,
    pub bound_lo: f64,
    pub bound_hi: f64,
    /// Lowest eigenvalues in increasing order, `lowest[0] = lambda_d`.
    pub lowest: Vec<f64>,
}

/// `min |n + theta|^2` over `n` in `Z^2` with `|n_i| <= 2`.
pub fn fourier_lambda_dplus(theta: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for a in -2i32..=2 {
        for b in -2i32..=2 {
            let x = a as f64 + theta[0];
            let y = b as f64 + theta[1];
            best = best.min(x * x + y * y);
        }
    }
    best
}

/// `|p|^2` of every torus mode, where `d+` acts on mode `(k2, k3)` by
/// `p = -s2 + i s3`, `s = sin((k + theta) dx) / dx`.
pub fn torus_symbols(grid: &CylinderGrid) -> Vec<(usize, usize, f64)> {
    let n = grid.n;
    let dx = grid.dx();
    let s = |k: usize, th: f64| ((k as f64 + th) * dx).sin() / dx;
    let mut out = Vec::with_capacity(n * n);
    for k2 in 0..n {
        for k3 in 0..n {
            let a = s(k2, grid.twist[0]);
            let b = s(k3, grid.twist[1]);
            out.push((k2, k3, a * a + b * b));
        }
    }
    out
}

pub fn discrete_lambda_dplus(grid: &CylinderGrid) -> f64 {
    torus_symbols(grid).iter().map(|x| x.2).fold(f64::INFINITY, f64::min)
}

/// Spectrum of one torus mode: the real problem `[[c D1, q], [q, c D1]]`
/// on `(u, v)` lines with `q = |p|`. Every eigenvalue is at least `q^2`.
fn mode_spectrum(grid: &CylinderGrid, bc: BoundaryCondition, c: f64, q: f64) -> Vec<f64> {
    let m = grid.m;
    let h = grid.dt();
    let tw = grid.t_weights();
    let mut d = DMatrix::<f64>::zeros(m, m);
    d[(0, 0)] = -1.0 / h;
    d[(0, 1)] = 1.0 / h;
    d[(m - 1, m - 2)] = -1.0 / h;
    d[(m - 1, m - 1)] = 1.0 / h;
    for k in 1..m - 1 {
        d[(k, k - 1)] = -0.5 / h;
        d[(k, k + 1)] = 0.5 / h;
    }
    // Free columns of the full (2m)-vector [u; v].
    let cols: Vec<usize> = (0..2 * m)
        .filter(|&c| {
            let comp = c / m;
            let k = c % m;
            !(bc.pins(comp) && (k == 0 || k == m - 1))
        })
        .collect();
    let mut r = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for a in 0..m {
        for b in 0..m {
            r[(a, b)] = c * d[(a, b)];
            r[(m + a, m + b)] = c * d[(a, b)];
        }
        r[(a, m + a)] = q;
        r[(m + a, a)] = q;
    }
    let nc = cols.len();
    let rs = DMatrix::from_fn(2 * m, nc, |i, j| r[(i, cols[j])] * tw[i % m].sqrt());
    let wmass: Vec<f64> = cols.iter().map(|&c| tw[c % m]).collect();
    // Symmetric form W^{-1/2} R^T W R W^{-1/2}.
    let scaled = DMatrix::from_fn(2 * m, nc, |i, j| rs[(i, j)] / wmass[j].sqrt());
    let a = scaled.transpose() * &scaled;
    let mut vals: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().cloned().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

fn fourier_spectrum(grid: &CylinderGrid, bc: BoundaryCondition, count: usize) -> Vec<f64> {
    let h = match grid.warp {
        Warp::Const(h) => h,
        Warp::Sampled(_) => unreachable!("Fourier route requires a constant warp"),
    };
    assert!(bc != BoundaryCondition::Free, "mode pruning needs a vanishing cross term");
    let c = 1.0 / h.sqrt();
    let mut modes = torus_symbols(grid);
    modes.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    let mut found: Vec<f64> = Vec::new();
    for &(_, _, p2) in &modes {
        if found.len() >= count && p2 >= found[count - 1] {
            break;
        }
        found.extend(mode_spectrum(grid, bc, c, p2.sqrt()));
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        found.truncate(count);
    }
    found
}

fn lanczos_spectrum(
    grid: &CylinderGrid,
    bc: BoundaryCondition,
    opts: &SpectralOptions,
) -> Result<Vec<f64>, DiracError> {
    let b = assemble_dirac(grid);
    let free = free_dofs(grid, bc);
    let l = grid.len();
    let w_nodes = grid.node_weights();
    let w_full: Vec<f64> = (0..2 * l).map(|q| w_nodes[q % l]).collect();
    let w: Vec<f64> = free.iter().map(|&q| w_full[q]).collect();
    let apply_a = |x: &[C64], y: &mut [C64]| {
        let mut full = vec![C64::new(0.0, 0.0); 2 * l];
        for (xi, &q) in x.iter().zip(&free) {
            full[q] = *xi;
        }
        let mut bx = vec![C64::new(0.0, 0.0); 2 * l];
        csr_mul(&b, &full, &mut bx);
        for (z, wi) in bx.iter_mut().zip(&w_full) {
            *z *= *wi;
        }
        csr_mul_adjoint(&b, &bx, &mut full);
        for (yi, &q) in y.iter_mut().zip(&free) {
            *yi = full[q];
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<C64> = (0..free.len())
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let krylov = 120.min(free.len());
    let r = shift_invert_lanczos(apply_a, &w, opts.count, opts.shift, &start, opts.rtol, krylov);
    if !r.converged {
        return Err(DiracError::EigensolverNoConvergence {
            iterations: r.iterations,
            residual: r.residual,
        });
    }
    Ok(r.values)
}

/// Lowest eigenvalues of the discrete quadratic form `|D V|^2` against `|V|^2`
/// under `bc`, with the two-sided comparison against the torus ground state.
pub fn lowest_eigenvalues(
    grid: &CylinderGrid,
    bc: BoundaryCondition,
    opts: &SpectralOptions,
) -> Result<SpectralReport, DiracError> {
    let route = opts.route.unwrap_or(match grid.warp {
        Warp::Const(_) => SpectralRoute::Fourier,
        Warp::Sampled(_) => SpectralRoute::Lanczos,
    });
    if route == SpectralRoute::Fourier && matches!(grid.warp, Warp::Sampled(_)) {
        return Err(DiracError::InvalidGrid("Fourier route requires a constant warp".into()));
    }
    if bc == BoundaryCondition::Free {
        return Err(DiracError::InvalidGrid("spectra are defined for Hminus or Hplus".into()));
    }
    let lowest = match route {
        SpectralRoute::Fourier => fourier_spectrum(grid, bc, opts.count.max(1)),
        SpectralRoute::Lanczos => lanczos_spectrum(grid, bc, opts)?,
    };
    let lambda_dplus = fourier_lambda_dplus(grid.twist);
    Ok(SpectralReport {
        eps: grid.eps,
        m: grid.m,
        n: grid.n,
        twist: grid.twist,
        bc,
        route,
        lambda_d: lowest[0],
        lambda_dplus,
        lambda_dplus_discrete: discrete_lambda_dplus(grid),
        bound_lo: lambda_dplus.min(2.0 / (grid.eps * grid.eps)),
        bound_hi: lambda_dplus,
        lowest,
    })
}

pub fn lowest_eigenvalue(grid: &CylinderGrid, bc: BoundaryCondition) -> Result<SpectralReport, DiracError> {
    lowest_eigenvalues(grid, bc, &SpectralOptions::default())
}

/// `(int v^2, eps^2/2 int v'^2)` for samples of `v` on `[0, eps]` with `v(0) = 0`;
/// trapezoid rule for the first integral, midpoint differences for the second.
pub fn poincare_check(v: &[f64], eps: f64) -> Result<(f64, f64), DiracError> {
    if v.len() < 2 || !(eps > 0.0) {
        return Err(DiracError::InvalidGrid("need at least two samples and eps > 0".into()));
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if v[0].abs() > 1e-14 * scale.max(1.0) {
        return Err(DiracError::BoundaryViolation { max: v[0].abs() });
    }
    let m = v.len();
    let h = eps / (m - 1) as f64;
    let lhs: f64 = (0..m)
        .map(|k| {
            let w = if k == 0 || k == m - 1 { 0.5 * h } else { h };
            w * v[k] * v[k]
        })
        .sum();
    let grad: f64 = v.windows(2).map(|p| (p[1] - p[0]).powi(2) / h).sum();
    Ok((lhs, 0.5 * eps * eps * grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub lambda_warped: f64,
    pub lambda_flat: f64,
    pub c: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Constant of the two-sided comparison between the warped and flat Rayleigh quotients.
pub fn sandwich_constant(h_min: f64, h_max: f64) -> f64 {
    h_max.max(1.0 / h_min).max((h_max / h_min).sqrt())
}

/// Compares `lambda` for the grid's warp against the same grid with `h = 1`.
pub fn warped_sandwich(
    warped: &CylinderGrid,
    bc: BoundaryCondition,
    opts: &SpectralOptions,
) -> Result<SandwichReport, DiracError> {
    let (h_min, h_max) = warped.warp_bounds();
    if !(h_min > 0.0) {
        return Err(DiracError::WarpNotPositive { min: h_min });
    }
    let flat = warped.clone().with_warp(Warp::Const(1.0))?;
    let lw = lowest_eigenvalues(warped, bc, opts)?.lambda_d;
    let lf = lowest_eigenvalues(&flat, bc, &SpectralOptions { route: None, ..*opts })?.lambda_d;
    let c = sandwich_constant(h_min, h_max);
    let slack = 1e-9 * lf.max(1e-12);
    let (lower, upper) = (lf / c, lf * c);
    Ok(SandwichReport {
        lambda_warped: lw,
        lambda_flat: lf,
        c,
        lower,
        upper,
        holds: lw >= lower - slack && lw <= upper + slack,
    })
}

/// `(#torus modes with |p|^2 < tol, #Dirac eigenvalues < tol among the lowest 8)` under `Hminus`.
pub fn kernel_equivalence(grid: &CylinderGrid) -> Result<(usize, usize), DiracError> {
    let kp = torus_symbols(grid)
        .iter()
        .filter(|x| x.2 < tol::KERNEL_EIGENVALUE)
        .count();
    let rep = lowest_eigenvalues(
        grid,
        BoundaryCondition::Hminus,
        &SpectralOptions {
            count: 8,
            ..Default::default()
        },
    )?;
    let kd = rep.lowest.iter().filter(|&&l| l < tol::KERNEL_EIGENVALUE).count();
    Ok((kp, kd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(eps: f64, m: usize, n: usize, th: [f64; 2]) -> CylinderGrid {
        CylinderGrid::new(eps, m, n, th).unwrap()
    }

    #[test]
    fn invalid_grids() {
        assert!(CylinderGrid::new(0.0, 4, 8, [0.0, 0.0]).is_err());
        assert!(CylinderGrid::new(1.0, 1, 8, [0.0, 0.0]).is_err());
        assert!(CylinderGrid::new(1.0, 4, 3, [0.0, 0.0]).is_err());
        assert!(CylinderGrid::new(1.0, 4, 8, [1.0, 0.0]).is_err());
        let g = grid(1.0, 4, 8, [0.0, 0.0]);
        assert!(matches!(g.clone().with_warp(Warp::Const(0.0)), Err(DiracError::WarpNotPositive { .. })));
        assert!(matches!(g.with_warp(Warp::Sampled(vec![1.0; 3])), Err(DiracError::ShapeMismatch { .. })));
    }

    #[test]
    fn constant_is_harmonic() {
        let g = grid(1.0, 5, 8, [0.0, 0.0]);
        let v = SpinorField::new(
            &g,
            vec![C64::new(1.0, 0.0); g.len()],
            vec![C64::new(0.0, 0.0); g.len()],
            BoundaryCondition::Hminus,
        )
        .unwrap();
        let d = apply_dirac(&v, &g).unwrap();
        assert!(d.u.iter().chain(&d.v).all(|x| x.norm() == 0.0));
    }

    #[test]
    fn plane_wave_has_unit_symbol() {
        let g = grid(1.0, 5, 64, [0.0, 0.0]);
        let u: Vec<C64> = (0..g.len())
            .map(|p| C64::from_polar(1.0, ((p / g.n) % g.n) as f64 * g.dx()))
            .collect();
        let v = SpinorField::new(&g, u, vec![C64::new(0.0, 0.0); g.len()], BoundaryCondition::Hminus).unwrap();
        let d = apply_dirac(&v, &g).unwrap();
        let exact = g.dx().sin() / g.dx();
        for x in &d.v {
            assert!((x.norm() - exact).abs() < 1e-12);
            assert!((x.norm() - 1.0).abs() < 2.0 * g.dx() * g.dx());
        }
    }

    #[test]
    fn boundary_contract_is_exact() {
        let g = grid(1.0, 4, 4, [0.0, 0.0]);
        let mut v = vec![C64::new(0.0, 0.0); g.len()];
        v[0] = C64::new(1e-300, 0.0);
        let r = SpinorField::new(&g, vec![C64::new(0.0, 0.0); g.len()], v, BoundaryCondition::Hminus);
        assert!(matches!(r, Err(DiracError::BoundaryViolation { .. })));
    }

    #[test]
    fn assembled_matches_stencil() {
        let g = grid(0.7, 5, 6, [0.3, 0.6]).with_warp_fn(|x, y| 1.0 + 0.3 * x.sin() * y.cos()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = SpinorField::random(&g, BoundaryCondition::Free, &mut rng);
        let d = apply_dirac(&f, &g).unwrap();
        let b = assemble_dirac(&g);
        let x: Vec<C64> = f.u.iter().chain(&f.v).cloned().collect();
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        csr_mul(&b, &x, &mut y);
        let l = g.len();
        for p in 0..l {
            assert!((y[p] - d.u[p]).norm() < 1e-12);
            assert!((y[l + p] - d.v[p]).norm() < 1e-12);
        }
    }

    #[test]
    fn fourier_and_lanczos_agree() {
        for bc in [BoundaryCondition::Hminus, BoundaryCondition::Hplus] {
            let g = grid(1.3, 6, 6, [0.25, 0.5]);
            let opts = SpectralOptions {
                count: 3,
                ..Default::default()
            };
            let f = lowest_eigenvalues(&g, bc, &opts).unwrap();
            let l = lowest_eigenvalues(
                &g,
                bc,
                &SpectralOptions {
                    route: Some(SpectralRoute::Lanczos),
                    ..opts
                },
            )
            .unwrap();
            for (a, b) in f.lowest.iter().zip(&l.lowest) {
                assert!((a - b).abs() < 1e-8 * (1.0 + a), "{bc:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lattice_minimum() {
        assert_eq!(fourier_lambda_dplus([0.0, 0.0]), 0.0);
        assert_eq!(fourier_lambda_dplus([0.5, 0.0]), 0.25);
        assert_eq!(fourier_lambda_dplus([0.25, 0.25]), 0.125);
        assert_eq!(fourier_lambda_dplus([0.5, 0.5]), 0.5);
    }

    #[test]
    fn poincare_examples() {
        let m = 201;
        let xs: Vec<f64> = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
        let (l, r) = poincare_check(&xs, 1.0).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-4 && (r - 0.5).abs() < 1e-12);
        let s: Vec<f64> = xs.iter().map(|x| (PI * x / 2.0).sin()).collect();
        let (l, r) = poincare_check(&s, 1.0).unwrap();
        assert!((l - 0.5).abs() < 1e-4 && (r - PI * PI / 16.0).abs() < 1e-4);
        assert_eq!(poincare_check(&[0.0; 5], 1.0).unwrap(), (0.0, 0.0));
        assert!(poincare_check(&[0.1, 0.2], 1.0).is_err());
    }

    #[test]
    fn constant_warp_is_a_longer_cylinder() {
        let g4 = grid(0.8, 9, 8, [0.5, 0.0]).with_warp(Warp::Const(4.0)).unwrap();
        let g1 = grid(1.6, 9, 8, [0.5, 0.0]);
        let opts = SpectralOptions {
            count: 4,
            ..Default::default()
        };
        let a = lowest_eigenvalues(&g4, BoundaryCondition::Hminus, &opts).unwrap();
        let b = lowest_eigenvalues(&g1, BoundaryCondition::Hminus, &opts).unwrap();
        for (x, y) in a.lowest.iter().zip(&b.lowest) {
            assert!((x - y).abs() < 1e-12 * (1.0 + y));
        }
    }
}
