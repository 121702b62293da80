//! Ruled patches over curves in a coassociative torus, their associativity
//! defect, and Newton correction to discrete instantons.
//!
//! The ambient space is the flat torus `R^7 / 2 pi Z^7` with the coassociative
//! torus `C0 = span{e4..e7}` and the translated family `C_t = C0 + gamma(t)`,
//! `gamma(t) = t v + t^2/2 w` with `v, w` in `span{e1, e2, e3}`. A curve is a
//! graph over the complex line spanned by `b1 = e4`, `b2 = J b1`, with fiber
//! coordinates along `b3` and `b4 = J b3`, where `J = v/|v| x` on `C0`.
//!
//! Grid index `i` runs along `b1`, `j` along `b2`, `k` along `t`, with the
//! node layout `k*n*n + i*n + j` of [`crate::dirac`]. Normal fields have four
//! components in a per-node basis `n_a`; in the flat model the components map to
//! spinors by `u = V1 + i V2`, `v = V3 + i V4`, and the linearized equation is
//! the twisted Dirac operator with warp `|v|^2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, SMatrix};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};
use thiserror::Error;

use crate::calib::{classify_3plane, gram_condition, omega3, tau, FourFrame, PlaneClass, ThreeFrame};
use crate::cayley::{cross, Vec7};
use crate::coassoc::{almost_complex_from_form, normal_to_selfdual, AlmostComplexStructure, SelfDualTwoForm};
use crate::dirac::{apply_dirac, BoundaryCondition, CylinderGrid, SpinorField, Warp};
use crate::kantor::{
    newton_solve, Diagonal, Jacobian, KantorovichCertificate, Metric, NewtonError, NewtonOptions, NewtonTrace,
    NonlinearMap, RadiusPolicy, ResidualNorm,
};
use crate::linalg::{csr_mul, csr_mul_adjoint};
use crate::tol;

#[derive(Debug, Error, Clone)]
pub enum InstantonError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("patch is not immersed at node {node} (frame condition {condition:.3e})")]
    ImmersionFailure { node: usize, condition: f64 },
    #[error("normal field violates the boundary contract (max {max:.3e})")]
    BoundaryViolation { max: f64 },
    #[error("derivative is singular")]
    SingularDerivative,
    #[error("certificate failed: 2k*alpha*beta = {:.3e}, 2*alpha = {:.3e}, r = {:.3e}", .0.two_k_alpha_beta(), 2.0 * .0.alpha, .0.r)]
    CertificateFailed(KantorovichCertificate),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        trace: NewtonTrace,
    },
    #[error("patch is not an instanton (sup tau residual {tau_sup:.3e})")]
    NotAnInstanton { tau_sup: f64 },
}

type Result<T> = std::result::Result<T, InstantonError>;

fn in_e123(x: &Vec7) -> bool {
    (3..7).all(|i| x[i] == 0.0)
}

/// Flat `G2` torus with the coassociative family `C_t = C0 + gamma(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatModel {
    v: Vec7,
    bend: Vec7,
    eps: f64,
    basis: [Vec7; 4],
    normals: [Vec7; 4],
}

impl FlatModel {
    /// `v` must be a nonzero combination of `e1, e2, e3`.
    pub fn new(v: Vec7, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(InstantonError::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if !in_e123(&v) {
            return Err(InstantonError::InvalidInput("v must lie in span{e1,e2,e3}".into()));
        }
        let eta = normal_to_selfdual(&v, &FourFrame::c0())
            .map_err(|e| InstantonError::InvalidInput(e.to_string()))?;
        if !(eta.norm() > tol::DEGENERATE_FORM) {
            return Err(InstantonError::InvalidInput("v must be nonzero".into()));
        }
        let vh = v.normalized();
        let b1 = Vec7::e(4);
        let b2 = cross(&vh, &b1);
        let mut b3 = Vec7::e(5).reject_from(&[b1, b2]);
        if b3.norm() < 0.5 {
            b3 = Vec7::e(6).reject_from(&[b1, b2]);
        }
        let b3 = b3.normalized();
        let b4 = cross(&vh, &b3);
        let basis = [b1, b2, b3, b4];
        let normals = reference_normals(&b1, &b2, &vh, &b3);
        Ok(FlatModel {
            v,
            bend: Vec7::ZERO,
            eps,
            basis,
            normals,
        })
    }

    /// Second-order term `w` of `gamma`; must lie in `span{e1,e2,e3}`.
    pub fn with_bend(mut self, w: Vec7) -> Result<Self> {
        if !in_e123(&w) {
            return Err(InstantonError::InvalidInput("bend must lie in span{e1,e2,e3}".into()));
        }
        self.bend = w;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(InstantonError::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn v(&self) -> Vec7 {
        self.v
    }

    pub fn bend(&self) -> Vec7 {
        self.bend
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `[b1, b2, b3, b4]`, an orthonormal basis of `C0` with `b2 = J b1`, `b4 = J b3`.
    pub fn basis(&self) -> [Vec7; 4] {
        self.basis
    }

    /// Normal basis of the flat patch; `n3, n4` lie in `span{e1,e2,e3}`.
    pub fn reference_normals(&self) -> [Vec7; 4] {
        self.normals
    }

    /// Warp `h = |v|^2`.
    pub fn warp(&self) -> f64 {
        self.v.norm_squared()
    }

    pub fn gamma(&self, t: f64) -> Vec7 {
        self.v * t + self.bend * (0.5 * t * t)
    }

    pub fn eta0(&self) -> SelfDualTwoForm {
        normal_to_selfdual(&self.v, &FourFrame::c0()).expect("validated in new")
    }

    pub fn complex_structure(&self) -> AlmostComplexStructure {
        almost_complex_from_form(&self.eta0(), &FourFrame::c0()).expect("validated in new")
    }
}

type M7 = SMatrix<f64, 7, 7>;

fn matrix_of(f: impl Fn(&Vec7) -> Vec7) -> M7 {
    let mut m = M7::zeros();
    for j in 0..7 {
        let col = f(&Vec7::e(j + 1));
        for i in 0..7 {
            m[(i, j)] = col[i];
        }
    }
    m
}

fn to_vec7(x: &nalgebra::SVector<f64, 7>) -> Vec7 {
    Vec7(std::array::from_fn(|i| x[i]))
}

fn from_vec7(x: &Vec7) -> nalgebra::SVector<f64, 7> {
    nalgebra::SVector::<f64, 7>::from_column_slice(x.as_slice())
}

/// `n1 = b3`, `n2 = -K4 K5 n1`, `n3 = -K4 n2`, `n4 = K4 n1` with
/// `K_d = L_t^T L_d` built from `tau` on the flat frame `(b1, b2, vh)`.
fn reference_normals(b1: &Vec7, b2: &Vec7, vh: &Vec7, b3: &Vec7) -> [Vec7; 4] {
    let l4 = matrix_of(|x| tau(x, b2, vh));
    let l5 = matrix_of(|x| tau(b1, x, vh));
    let lt = matrix_of(|x| tau(b1, b2, x));
    let k4 = lt.transpose() * l4;
    let k5 = lt.transpose() * l5;
    let n1 = from_vec7(b3);
    let n2 = -(k4 * k5 * n1);
    let n4 = k4 * n1;
    let n3 = -(k4 * n2);
    [to_vec7(&n1), to_vec7(&n2), to_vec7(&n3), to_vec7(&n4)]
}

/// Periodic graph `w = f(z)` sampled on an `n x n` grid, index `i*n + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveGraph {
    n: usize,
    f: Vec<C64>,
}

impl CurveGraph {
    pub fn new(n: usize, f: Vec<C64>) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(InstantonError::InvalidInput(format!("n must be even and >= 4, got {n}")));
        }
        if f.len() != n * n {
            return Err(InstantonError::InvalidInput(format!("expected {} samples, got {}", n * n, f.len())));
        }
        Ok(CurveGraph { n, f })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let dx = 2.0 * PI / n as f64;
        let vals = (0..n * n).map(|p| f((p / n) as f64 * dx, (p % n) as f64 * dx)).collect();
        CurveGraph::new(n, vals)
    }

    pub fn constant(n: usize, b: C64) -> Result<Self> {
        CurveGraph::from_fn(n, |_, _| b)
    }

    /// `amp * exp(i (k1 s1 + k2 s2))`, holomorphic only for `k = 0`.
    pub fn mode(n: usize, amp: f64, k1: i32, k2: i32) -> Result<Self> {
        CurveGraph::from_fn(n, |s1, s2| C64::from_polar(amp, k1 as f64 * s1 + k2 as f64 * s2))
    }

    /// `b + delta g` with `g` a random combination of the modes `0 < |k|_inf <= 2`,
    /// scaled to `sup |g| = 1`.
    pub fn perturbed(n: usize, b: C64, delta: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for k1 in -2i32..=2 {
            for k2 in -2i32..=2 {
                if (k1, k2) != (0, 0) {
                    let c = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                    modes.push((k1 as f64, k2 as f64, c));
                }
            }
        }
        let g = CurveGraph::from_fn(n, |s1, s2| {
            modes
                .iter()
                .map(|(k1, k2, c)| c * C64::from_polar(1.0, k1 * s1 + k2 * s2))
                .sum()
        })?;
        let sup = g.f.iter().map(|z| z.norm()).fold(0.0, f64::max);
        CurveGraph::new(n, g.f.iter().map(|z| b + z * (delta / sup)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[C64] {
        &self.f
    }

    /// `1/2 (D1 + i D2) f` with centered periodic differences.
    pub fn dbar(&self) -> Vec<C64> {
        let n = self.n;
        let h = 2.0 * (2.0 * PI / n as f64);
        (0..n * n)
            .map(|p| {
                let (i, j) = (p / n, p % n);
                let d1 = (self.f[((i + 1) % n) * n + j] - self.f[((i + n - 1) % n) * n + j]) / h;
                let d2 = (self.f[i * n + (j + 1) % n] - self.f[i * n + (j + n - 1) % n]) / h;
                0.5 * (d1 + C64::i() * d2)
            })
            .collect()
    }

    pub fn dbar_sup(&self) -> f64 {
        self.dbar().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Four components per node in the patch's normal basis, with `V3 = V4 = 0`
/// on the end slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalField {
    n: usize,
    m: usize,
    comps: Vec<[f64; 4]>,
}

fn is_end(k: usize, m: usize) -> bool {
    k == 0 || k == m - 1
}

/// Unconstrained slots `4*node + a`, in increasing order.
fn free_slots(n: usize, m: usize) -> Vec<usize> {
    let nn = n * n;
    (0..4 * nn * m)
        .filter(|s| {
            let (p, a) = (s / 4, s % 4);
            a < 2 || !is_end(p / nn, m)
        })
        .collect()
}

impl NormalField {
    pub fn new(n: usize, m: usize, comps: Vec<[f64; 4]>) -> Result<Self> {
        if comps.len() != n * n * m {
            return Err(InstantonError::InvalidInput(format!(
                "expected {} nodes, got {}",
                n * n * m,
                comps.len()
            )));
        }
        let nn = n * n;
        let max = comps
            .iter()
            .enumerate()
            .filter(|(p, _)| is_end(p / nn, m))
            .map(|(_, c)| c[2].abs().max(c[3].abs()))
            .fold(0.0, f64::max);
        if max > 0.0 {
            return Err(InstantonError::BoundaryViolation { max });
        }
        Ok(NormalField { n, m, comps })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        NormalField {
            n,
            m,
            comps: vec![[0.0; 4]; n * n * m],
        }
    }

    pub fn random(n: usize, m: usize, rng: &mut impl Rng) -> Self {
        let mut f = NormalField::zeros(n, m);
        let nn = n * n;
        for (p, c) in f.comps.iter_mut().enumerate() {
            for (a, x) in c.iter_mut().enumerate() {
                if a < 2 || !is_end(p / nn, m) {
                    *x = rng.sample(StandardNormal);
                }
            }
        }
        f
    }

    fn from_free(n: usize, m: usize, slots: &[usize], y: &[f64]) -> Self {
        let mut f = NormalField::zeros(n, m);
        for (s, v) in slots.iter().zip(y) {
            f.comps[s / 4][s % 4] = *v;
        }
        f
    }

    fn to_free(&self, slots: &[usize]) -> Vec<f64> {
        slots.iter().map(|s| self.comps[s / 4][s % 4]).collect()
    }

    pub fn components(&self) -> &[[f64; 4]] {
        &self.comps
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Ambient vectors `sum_a V_a n_a` at every node.
    pub fn ambient(&self, patch: &RuledPatch) -> Vec<Vec7> {
        self.comps
            .iter()
            .zip(&patch.normals)
            .map(|(c, nb)| (0..4).fold(Vec7::ZERO, |acc, a| acc + nb[a] * c[a]))
            .collect()
    }

    /// `u = V1 + i V2`, `v = V3 + i V4`.
    pub fn to_spinor(&self, grid: &CylinderGrid) -> SpinorField {
        let u = self.comps.iter().map(|c| C64::new(c[0], c[1])).collect();
        let v = self.comps.iter().map(|c| C64::new(c[2], c[3])).collect();
        SpinorField::new(grid, u, v, BoundaryCondition::Hminus).expect("contract checked on construction")
    }
}

/// Discrete ruled 3-fold `X(s, t) = s1 b1 + s2 b2 + disp(s, t)` with frames.
#[derive(Debug, Clone)]
pub struct RuledPatch {
    model: FlatModel,
    n: usize,
    m: usize,
    disp: Vec<Vec7>,
    tangents: Vec<[Vec7; 3]>,
    frames: Vec<ThreeFrame>,
    normals: Vec<[Vec7; 4]>,
    outputs: Vec<[Vec7; 4]>,
}

fn spacing(n: usize, m: usize, eps: f64) -> (f64, f64) {
    (2.0 * PI / n as f64, eps / (m - 1) as f64)
}

/// Finite-difference tangents `(D_s1 X, D_s2 X, D_t X)`; summation-by-parts in `t`.
fn tangents_of(model: &FlatModel, n: usize, m: usize, disp: &[Vec7]) -> Vec<[Vec7; 3]> {
    let nn = n * n;
    let (dx, dt) = spacing(n, m, model.eps);
    let [b1, b2, ..] = model.basis;
    (0..nn * m)
        .into_par_iter()
        .map(|p| {
            let (k, i, j) = (p / nn, (p % nn) / n, p % n);
            let at = |k: usize, i: usize, j: usize| disp[k * nn + i * n + j];
            let t4 = b1 + (at(k, (i + 1) % n, j) - at(k, (i + n - 1) % n, j)) * (0.5 / dx);
            let t5 = b2 + (at(k, i, (j + 1) % n) - at(k, i, (j + n - 1) % n)) * (0.5 / dx);
            let tt = if k == 0 {
                (at(1, i, j) - at(0, i, j)) * (1.0 / dt)
            } else if k == m - 1 {
                (at(k, i, j) - at(k - 1, i, j)) * (1.0 / dt)
            } else {
                (at(k + 1, i, j) - at(k - 1, i, j)) * (0.5 / dt)
            };
            [t4, t5, tt]
        })
        .collect()
}

fn gram3(t: &[Vec7; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|a, b| t[a].dot(&t[b]))
}

/// `<tau(T4,T5,Tt), o_a> / vol` at one node.
fn node_residual(t: &[Vec7; 3], o: &[Vec7; 4]) -> [f64; 4] {
    let tv = tau(&t[0], &t[1], &t[2]);
    let vol = gram3(t).determinant().max(0.0).sqrt();
    std::array::from_fn(|a| tv.dot(&o[a]) / vol)
}

/// `d F_a / d T_d` as ambient vectors.
fn node_derivative(t: &[Vec7; 3], o: &[Vec7; 4]) -> [[Vec7; 3]; 4] {
    let g = gram3(t);
    let vol = g.determinant().max(0.0).sqrt();
    let ginv = g.try_inverse().unwrap_or_else(Matrix3::zeros);
    let dvol: [Vec7; 3] =
        std::array::from_fn(|d| (0..3).fold(Vec7::ZERO, |acc, e| acc + t[e] * (vol * ginv[(d, e)])));
    let tv = tau(&t[0], &t[1], &t[2]);
    std::array::from_fn(|a| {
        let fa = tv.dot(&o[a]) / vol;
        let g4 = -tau(&t[1], &t[2], &o[a]);
        let g5 = tau(&t[0], &t[2], &o[a]);
        let gt = -tau(&t[0], &t[1], &o[a]);
        [
            (g4 - dvol[0] * fa) * (1.0 / vol),
            (g5 - dvol[1] * fa) * (1.0 / vol),
            (gt - dvol[2] * fa) * (1.0 / vol),
        ]
    })
}

impl RuledPatch {
    fn from_displacement(model: FlatModel, n: usize, m: usize, disp: Vec<Vec7>) -> Result<Self> {
        let tangents = tangents_of(&model, n, m, &disp);
        let checked: Vec<Result<(ThreeFrame, [Vec7; 4], [Vec7; 4])>> = tangents
            .par_iter()
            .enumerate()
            .map(|(p, t)| {
                let condition = gram_condition(t);
                if !(condition <= tol::IMMERSION_CONDITION) {
                    return Err(InstantonError::ImmersionFailure { node: p, condition });
                }
                let fr = ThreeFrame::new(t[0], t[1], t[2])
                    .map_err(|_| InstantonError::ImmersionFailure { node: p, condition })?;
                let [f1, f2, _] = *fr.vectors();
                let nb: [Vec7; 4] = std::array::from_fn(|a| fr.project_normal(&model.normals[a]));
                let ob: [Vec7; 4] = std::array::from_fn(|a| tau(&f1, &f2, &nb[a]));
                Ok((fr, nb, ob))
            })
            .collect();
        let mut frames = Vec::with_capacity(checked.len());
        let mut normals = Vec::with_capacity(checked.len());
        let mut outputs = Vec::with_capacity(checked.len());
        for c in checked {
            let (fr, nb, ob) = c?;
            frames.push(fr);
            normals.push(nb);
            outputs.push(ob);
        }
        Ok(RuledPatch {
            model,
            n,
            m,
            disp,
            tangents,
            frames,
            normals,
            outputs,
        })
    }

    pub fn model(&self) -> &FlatModel {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.disp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disp.is_empty()
    }

    pub fn position(&self, node: usize) -> Vec7 {
        let nn = self.n * self.n;
        let dx = 2.0 * PI / self.n as f64;
        let (i, j) = ((node % nn) / self.n, node % self.n);
        let [b1, b2, ..] = self.model.basis;
        b1 * (i as f64 * dx) + b2 * (j as f64 * dx) + self.disp[node]
    }

    pub fn tangents(&self) -> &[[Vec7; 3]] {
        &self.tangents
    }

    pub fn frames(&self) -> &[ThreeFrame] {
        &self.frames
    }

    pub fn normals(&self) -> &[[Vec7; 4]] {
        &self.normals
    }

    /// Cylinder grid with the same shape and warp `|v|^2`.
    pub fn dirac_grid(&self) -> CylinderGrid {
        CylinderGrid::new(self.model.eps, self.m, self.n, [0.0, 0.0])
            .and_then(|g| g.with_warp(Warp::Const(self.model.warp())))
            .expect("patch shape is a valid grid")
    }

    /// Node-wise translation by `sum_a V_a n_a`.
    pub fn deformed(&self, v: &NormalField) -> Result<RuledPatch> {
        self.check_field(v)?;
        let amb = v.ambient(self);
        let disp = self.disp.iter().zip(&amb).map(|(a, b)| *a + *b).collect();
        RuledPatch::from_displacement(self.model, self.n, self.m, disp)
    }

    fn check_field(&self, v: &NormalField) -> Result<()> {
        if v.n != self.n || v.m != self.m {
            return Err(InstantonError::InvalidInput(format!(
                "field shape ({}, {}) does not match patch ({}, {})",
                v.n, v.m, self.n, self.m
            )));
        }
        Ok(())
    }

    /// Largest distance of an end-slice node from `C0` or `C_eps`, measured in
    /// the `e1, e2, e3` coordinates.
    pub fn boundary_defect(&self) -> f64 {
        let nn = self.n * self.n;
        let ends = [(0, self.model.gamma(0.0)), (self.m - 1, self.model.gamma(self.model.eps))];
        ends.iter()
            .flat_map(|(k, g)| (0..nn).map(move |ij| (k * nn + ij, *g)))
            .map(|(p, g)| {
                let x = self.disp[p];
                (0..3).map(|c| (x[c] - g[c]).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Sup of `|dbar|` of the slice `k`, read as a graph over the `b1, b2` line.
    pub fn dbar_residual(&self, k: usize) -> f64 {
        let n = self.n;
        let nn = n * n;
        let dx = 2.0 * PI / n as f64;
        let b = self.model.basis;
        let coord = |i: usize, j: usize, c: usize| self.disp[k * nn + (i % n) * n + (j % n)].dot(&b[c]);
        let mut sup = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                // d/ds of (p1, p2, q1, q2); the linear part of p contributes the identity.
                let d: [[f64; 2]; 4] = std::array::from_fn(|c| {
                    [
                        (coord(i + 1, j, c) - coord(i + n - 1, j, c)) / (2.0 * dx),
                        (coord(i, j + 1, c) - coord(i, j + n - 1, c)) / (2.0 * dx),
                    ]
                });
                let dp = nalgebra::Matrix2::new(1.0 + d[0][0], d[0][1], d[1][0], 1.0 + d[1][1]);
                let dq = nalgebra::Matrix2::new(d[2][0], d[2][1], d[3][0], d[3][1]);
                let a = match dp.try_inverse() {
                    Some(inv) => dq * inv,
                    None => return f64::INFINITY,
                };
                let re = a[(0, 0)] - a[(1, 1)];
                let im = a[(0, 1)] + a[(1, 0)];
                sup = sup.max(0.5 * (re * re + im * im).sqrt());
            }
        }
        sup
    }
}

pub fn build_ruled_patch(model: &FlatModel, curve: &CurveGraph, m: usize) -> Result<RuledPatch> {
    if m < 2 {
        return Err(InstantonError::InvalidInput(format!("m must be >= 2, got {m}")));
    }
    let n = curve.n;
    let nn = n * n;
    let dt = model.eps / (m - 1) as f64;
    let [_, _, b3, b4] = model.basis;
    let disp = (0..nn * m)
        .map(|p| {
            let f = curve.f[p % nn];
            b3 * f.re + b4 * f.im + model.gamma((p / nn) as f64 * dt)
        })
        .collect();
    RuledPatch::from_displacement(*model, n, m, disp)
}

/// `F(0)`: the components `<tau, o_a>` per node and `sup |tau|` over nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauResidual {
    pub components: Vec<[f64; 4]>,
    pub sup_norm: f64,
}

pub fn tau_residual(patch: &RuledPatch) -> TauResidual {
    let components = patch
        .tangents
        .par_iter()
        .zip(&patch.outputs)
        .map(|(t, o)| node_residual(t, o))
        .collect();
    let sup_norm = patch
        .frames
        .par_iter()
        .map(|fr| {
            let [f1, f2, f3] = *fr.vectors();
            fr.project_normal(&tau(&f1, &f2, &f3)).norm()
        })
        .reduce(|| 0.0, f64::max);
    TauResidual { components, sup_norm }
}

/// Sup over nodes of the Frobenius distance between the pulled-back metric
/// and `g_Sigma + |v|^2 dt^2`, with `g_Sigma` read off the `t = 0` slice.
pub fn warped_metric_defect(patch: &RuledPatch) -> f64 {
    let nn = patch.n * patch.n;
    let h = patch.model.warp();
    (0..patch.len())
        .into_par_iter()
        .map(|p| {
            let g = gram3(&patch.tangents[p]);
            let s = &patch.tangents[p % nn];
            let mut target = Matrix3::zeros();
            for a in 0..2 {
                for b in 0..2 {
                    target[(a, b)] = s[a].dot(&s[b]);
                }
            }
            target[(2, 2)] = h;
            (g - target).norm()
        })
        .reduce(|| 0.0, f64::max)
}

/// Centered/SBP difference matrices and quadrature weights of the patch grid.
struct GridOps {
    d: [CsMat<f64>; 3],
    w: Vec<f64>,
}

impl GridOps {
    fn new(patch: &RuledPatch) -> Self {
        let (n, m) = (patch.n, patch.m);
        let nn = n * n;
        let len = nn * m;
        let (dx, dt) = spacing(n, m, patch.model.eps);
        let mut mats: [TriMat<f64>; 3] = std::array::from_fn(|_| TriMat::new((len, len)));
        for p in 0..len {
            for (q, c) in stencil(p, n, m, dx, dt) {
                mats[c.0].add_triplet(p, q, c.1);
            }
        }
        GridOps {
            d: mats.map(|t| t.to_csr()),
            w: patch.dirac_grid().node_weights(),
        }
    }
}

/// Neighbours of node `p` with `(direction, coefficient)` in the tangent differences.
fn stencil(p: usize, n: usize, m: usize, dx: f64, dt: f64) -> Vec<(usize, (usize, f64))> {
    let nn = n * n;
    let (k, i, j) = (p / nn, (p % nn) / n, p % n);
    let node = |k: usize, i: usize, j: usize| k * nn + (i % n) * n + (j % n);
    let hx = 0.5 / dx;
    let mut out = vec![
        (node(k, i + 1, j), (0, hx)),
        (node(k, i + n - 1, j), (0, -hx)),
        (node(k, i, j + 1), (1, hx)),
        (node(k, i, j + n - 1), (1, -hx)),
    ];
    if k == 0 {
        out.push((node(1, i, j), (2, 1.0 / dt)));
        out.push((node(0, i, j), (2, -1.0 / dt)));
    } else if k == m - 1 {
        out.push((node(k, i, j), (2, 1.0 / dt)));
        out.push((node(k - 1, i, j), (2, -1.0 / dt)));
    } else {
        out.push((node(k + 1, i, j), (2, 0.5 / dt)));
        out.push((node(k - 1, i, j), (2, -0.5 / dt)));
    }
    out
}

/// Discrete `H^1` inner product on the unconstrained components.
pub struct H1Metric {
    ops: GridOps,
    slots: Vec<usize>,
    nodes: usize,
    modes: ModeSolver,
}

impl H1Metric {
    fn new(patch: &RuledPatch, slots: Vec<usize>) -> Self {
        H1Metric {
            ops: GridOps::new(patch),
            slots,
            nodes: patch.len(),
            modes: ModeSolver::new(patch),
        }
    }

    fn scalar_gram(&self, f: &[f64]) -> Vec<f64> {
        let w = &self.ops.w;
        let mut out: Vec<f64> = f.iter().zip(w).map(|(a, b)| a * b).collect();
        let mut df = vec![0.0; f.len()];
        let mut back = vec![0.0; f.len()];
        for d in &self.ops.d {
            csr_mul(d, f, &mut df);
            df.iter_mut().zip(w).for_each(|(a, b)| *a *= b);
            csr_mul_adjoint(d, &df, &mut back);
            out.iter_mut().zip(&back).for_each(|(a, b)| *a += b);
        }
        out
    }

    fn split(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let mut comps = vec![vec![0.0; self.nodes]; 4];
        for (s, v) in self.slots.iter().zip(y) {
            comps[s % 4][s / 4] = *v;
        }
        comps
    }
}

impl Metric for H1Metric {
    fn gram(&self, y: &[f64]) -> Vec<f64> {
        let g: Vec<Vec<f64>> = self.split(y).par_iter().map(|c| self.scalar_gram(c)).collect();
        self.slots.iter().map(|s| g[s % 4][s / 4]).collect()
    }

    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let x: Vec<Vec<f64>> = self
            .split(y)
            .par_iter()
            .enumerate()
            .map(|(a, c)| self.modes.solve(c, a >= 2))
            .collect();
        self.slots.iter().map(|s| x[s % 4][s / 4]).collect()
    }
}

/// Exact inverse of the scalar `H^1` Gram: a DFT over the torus diagonalizes the
/// centered differences, leaving one `m x m` system in `t` per mode.
struct ModeSolver {
    n: usize,
    m: usize,
    twiddle: Vec<C64>,
    /// Cholesky factors per mode, for all `t` levels and for interior levels only.
    factors: Vec<[nalgebra::Cholesky<f64, nalgebra::Dyn>; 2]>,
}

impl ModeSolver {
    fn new(patch: &RuledPatch) -> Self {
        let (n, m) = (patch.n, patch.m);
        let (dx, dt) = spacing(n, m, patch.model.eps);
        let grid = patch.dirac_grid();
        let area = dx * dx * patch.model.warp().sqrt();
        let tw = grid.t_weights();
        let mut d1 = DMatrix::<f64>::zeros(m, m);
        d1[(0, 0)] = -1.0 / dt;
        d1[(0, 1)] = 1.0 / dt;
        d1[(m - 1, m - 2)] = -1.0 / dt;
        d1[(m - 1, m - 1)] = 1.0 / dt;
        for k in 1..m - 1 {
            d1[(k, k - 1)] = -0.5 / dt;
            d1[(k, k + 1)] = 0.5 / dt;
        }
        let wt = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(tw.clone()));
        let base = d1.transpose() * &wt * &d1;
        let factors = (0..n * n)
            .map(|q| {
                let (k1, k2) = ((q / n) as f64, (q % n) as f64);
                let sigma = ((k1 * dx).sin().powi(2) + (k2 * dx).sin().powi(2)) / (dx * dx);
                let g = (&wt * (1.0 + sigma) + &base) * area;
                let inner = g.view((1, 1), (m - 2, m - 2)).into_owned();
                [
                    g.cholesky().expect("H1 Gram is positive definite"),
                    inner.cholesky().expect("H1 Gram is positive definite"),
                ]
            })
            .collect();
        let twiddle = (0..n).map(|k| C64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64)).collect();
        ModeSolver { n, m, twiddle, factors }
    }

    /// 2D DFT of one slice; `sign = -1` forward, `+1` inverse (unscaled).
    fn dft(&self, x: &[C64], inverse: bool) -> Vec<C64> {
        let n = self.n;
        let tw = |p: usize| {
            let w = self.twiddle[p % n];
            if inverse {
                w.conj()
            } else {
                w
            }
        };
        let mut rows = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k2 in 0..n {
                rows[i * n + k2] = (0..n).map(|j| x[i * n + j] * tw(j * k2)).sum();
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for k1 in 0..n {
            for k2 in 0..n {
                out[k1 * n + k2] = (0..n).map(|i| rows[i * n + k2] * tw(i * k1)).sum();
            }
        }
        out
    }

    fn solve(&self, b: &[f64], interior: bool) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let nn = n * n;
        let levels: Vec<usize> = if interior { (1..m - 1).collect() } else { (0..m).collect() };
        let spectra: Vec<Vec<C64>> = levels
            .iter()
            .map(|k| {
                let slice: Vec<C64> = b[k * nn..(k + 1) * nn].iter().map(|x| C64::new(*x, 0.0)).collect();
                self.dft(&slice, false)
            })
            .collect();
        let mut solved = vec![vec![C64::new(0.0, 0.0); nn]; levels.len()];
        for q in 0..nn {
            let chol = &self.factors[q][interior as usize];
            let re = nalgebra::DVector::from_iterator(levels.len(), spectra.iter().map(|s| s[q].re));
            let im = nalgebra::DVector::from_iterator(levels.len(), spectra.iter().map(|s| s[q].im));
            let (xr, xi) = (chol.solve(&re), chol.solve(&im));
            for l in 0..levels.len() {
                solved[l][q] = C64::new(xr[l], xi[l]);
            }
        }
        let mut x = vec![0.0; b.len()];
        for (l, k) in levels.iter().enumerate() {
            let back = self.dft(&solved[l], true);
            for ij in 0..nn {
                x[k * nn + ij] = back[ij].re / nn as f64;
            }
        }
        x
    }
}

/// `F(V)`: `tau` components of the patch translated by `V`, on the free slots.
pub struct InstantonMap<'a> {
    patch: &'a RuledPatch,
    slots: Vec<usize>,
    gauge: Option<DMatrix<f64>>,
}

impl<'a> InstantonMap<'a> {
    pub fn new(patch: &'a RuledPatch) -> Self {
        InstantonMap {
            patch,
            slots: free_slots(patch.n, patch.m),
            gauge: None,
        }
    }

    /// Restricts steps to the complement of the flat kernel: constant and
    /// checkerboard translations along `n1, n2`.
    pub fn with_gauge(mut self) -> Self {
        let (n, nn) = (self.patch.n, self.patch.n * self.patch.n);
        let len = self.patch.len();
        let mut q = DMatrix::zeros(self.slots.len(), 8);
        let scale = 1.0 / (len as f64).sqrt();
        for (r, s) in self.slots.iter().enumerate() {
            let (p, a) = (s / 4, s % 4);
            if a > 1 {
                continue;
            }
            let (i, j) = ((p % nn) / n, p % n);
            let si = if i % 2 == 0 { 1.0 } else { -1.0 };
            let sj = if j % 2 == 0 { 1.0 } else { -1.0 };
            for (c, pat) in [1.0, si, sj, si * sj].iter().enumerate() {
                q[(r, 2 * c + a)] = pat * scale;
            }
        }
        self.gauge = Some(q);
        self
    }

    pub fn field(&self, y: &[f64]) -> NormalField {
        NormalField::from_free(self.patch.n, self.patch.m, &self.slots, y)
    }

    pub fn coordinates(&self, v: &NormalField) -> Vec<f64> {
        v.to_free(&self.slots)
    }

    pub fn metric(&self) -> H1Metric {
        H1Metric::new(self.patch, self.slots.clone())
    }

    /// Quadrature weights on the residual components.
    pub fn residual_weights(&self) -> Diagonal {
        let w = self.patch.dirac_grid().node_weights();
        Diagonal(w.iter().flat_map(|x| [*x; 4]).collect())
    }

    fn tangents_at(&self, y: &[f64]) -> Vec<[Vec7; 3]> {
        let v = self.field(y);
        let amb = v.ambient(self.patch);
        let disp: Vec<Vec7> = self.patch.disp.iter().zip(&amb).map(|(a, b)| *a + *b).collect();
        tangents_of(&self.patch.model, self.patch.n, self.patch.m, &disp)
    }
}

impl NonlinearMap for InstantonMap<'_> {
    fn dim_in(&self) -> usize {
        self.slots.len()
    }

    fn dim_out(&self) -> usize {
        4 * self.patch.len()
    }

    fn eval(&self, y: &[f64]) -> Vec<f64> {
        let t = self.tangents_at(y);
        t.par_iter()
            .zip(&self.patch.outputs)
            .flat_map_iter(|(t, o)| node_residual(t, o))
            .collect()
    }

    fn jacobian(&self, y: &[f64]) -> Jacobian {
        let patch = self.patch;
        let (n, m) = (patch.n, patch.m);
        let (dx, dt) = spacing(n, m, patch.model.eps);
        let t = self.tangents_at(y);
        let mut col_of = vec![usize::MAX; 4 * patch.len()];
        for (c, s) in self.slots.iter().enumerate() {
            col_of[*s] = c;
        }
        let rows: Vec<Vec<(usize, usize, f64)>> = (0..patch.len())
            .into_par_iter()
            .map(|p| {
                let der = node_derivative(&t[p], &patch.outputs[p]);
                let mut out = Vec::with_capacity(4 * 6 * 4);
                for (q, (d, coef)) in stencil(p, n, m, dx, dt) {
                    for b in 0..4 {
                        let col = col_of[4 * q + b];
                        if col == usize::MAX {
                            continue;
                        }
                        for a in 0..4 {
                            out.push((4 * p + a, col, coef * der[a][d].dot(&patch.normals[q][b])));
                        }
                    }
                }
                out
            })
            .collect();
        let mut tri = TriMat::new((self.dim_out(), self.dim_in()));
        for (r, c, v) in rows.into_iter().flatten() {
            tri.add_triplet(r, c, v);
        }
        let mat = tri.to_csr();
        match &self.gauge {
            Some(q) => Jacobian::Projected(mat, q.clone()),
            None => Jacobian::Sparse(mat),
        }
    }
}

/// Random fields for the operator gap.
pub const GAP_SAMPLES: usize = 64;
/// Central-difference step for `F'(0)`.
pub const GAP_STEP: f64 = 1e-5;

fn check_grid(patch: &RuledPatch, grid: &CylinderGrid) -> Result<()> {
    let same = grid.m == patch.m
        && grid.n == patch.n
        && (grid.eps - patch.model.eps).abs() <= 1e-14 * patch.model.eps
        && grid.twist == [0.0, 0.0]
        && matches!(grid.warp, Warp::Const(h) if (h - patch.model.warp()).abs() <= 1e-12);
    if same {
        Ok(())
    } else {
        Err(InstantonError::InvalidInput(
            "grid must match the patch shape, have no twist and warp |v|^2".into(),
        ))
    }
}

/// `|F'(0) W - D W|_Y / |W|_{H^1}` for one field, with `F'(0)` by central differences.
pub fn linearization_gap(patch: &RuledPatch, grid: &CylinderGrid, w: &NormalField) -> Result<f64> {
    check_grid(patch, grid)?;
    patch.check_field(w)?;
    let map = InstantonMap::new(patch);
    let metric = map.metric();
    let y = map.coordinates(w);
    let norm = metric.norm(&y);
    if !(norm > 0.0) {
        return Err(InstantonError::InvalidInput("direction must be nonzero".into()));
    }
    let h = GAP_STEP / norm;
    let plus: Vec<f64> = y.iter().map(|v| v * h).collect();
    let minus: Vec<f64> = y.iter().map(|v| -v * h).collect();
    let fp = map.eval(&plus);
    let fm = map.eval(&minus);
    let dw = apply_dirac(&w.to_spinor(grid), grid).expect("shapes match");
    let diff: Vec<f64> = (0..patch.len())
        .flat_map(|p| {
            let d = [dw.u[p].re, dw.u[p].im, dw.v[p].re, dw.v[p].im];
            let fp = &fp;
            let fm = &fm;
            (0..4).map(move |a| (fp[4 * p + a] - fm[4 * p + a]) / (2.0 * h) - d[a])
        })
        .collect();
    Ok(map.residual_weights().norm(&diff) / norm)
}

/// Max of [`linearization_gap`] over [`GAP_SAMPLES`] random fields.
pub fn linearization_defect(patch: &RuledPatch, grid: &CylinderGrid, seed: u64) -> Result<f64> {
    check_grid(patch, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..GAP_SAMPLES).map(|_| rng.random()).collect();
    let gaps: Result<Vec<f64>> = seeds
        .par_iter()
        .map(|s| {
            let w = NormalField::random(patch.n, patch.m, &mut ChaCha8Rng::seed_from_u64(*s));
            linearization_gap(patch, grid, &w)
        })
        .collect();
    Ok(gaps?.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    /// Largest angle between `u x u'` and `v/|v|`.
    pub max_angle: f64,
    /// Largest `|g(u x u', w)|` over the `C0` directions `w`.
    pub max_orthogonality: f64,
}

/// At every `t = 0` node, `n = f1 x f2` from the orthonormal surface frame.
pub fn limit_direction(patch: &RuledPatch) -> LimitReport {
    let nn = patch.n * patch.n;
    let vh = patch.model.v.normalized();
    let mut rep = LimitReport {
        max_angle: 0.0,
        max_orthogonality: 0.0,
    };
    for fr in &patch.frames[..nn] {
        let [f1, f2, _] = *fr.vectors();
        let nv = cross(&f1, &f2);
        let cosang = (nv.dot(&vh) / nv.norm()).clamp(-1.0, 1.0);
        let sinang = (nv - vh * nv.dot(&vh)).norm() / nv.norm();
        rep.max_angle = rep.max_angle.max(sinang.atan2(cosang));
        for c in 4..=7 {
            rep.max_orthogonality = rep.max_orthogonality.max(nv.dot(&Vec7::e(c)).abs());
        }
    }
    rep
}

/// [`limit_direction`] on a patch that is an instanton to `tol`; returns the
/// largest angular deviation.
pub fn limit_direction_check(patch: &RuledPatch, tol: f64) -> Result<f64> {
    let tau_sup = tau_residual(patch).sup_norm;
    if !(tau_sup <= tol) {
        return Err(InstantonError::NotAnInstanton { tau_sup });
    }
    Ok(limit_direction(patch).max_angle)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    pub m: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Refuse to iterate when the sampled certificate fails.
    pub require_certificate: bool,
    pub lipschitz_pairs: usize,
    pub power_steps: usize,
    /// `r = radius_factor * alpha`.
    pub radius_factor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            m: 8,
            tol: 1e-10,
            max_iter: 20,
            seed: 7,
            require_certificate: true,
            lipschitz_pairs: 32,
            power_steps: 20,
            radius_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub tau_sup_before: f64,
    pub tau_sup_after: f64,
    pub dbar_before: f64,
    pub dbar_after: f64,
    pub boundary_defect: f64,
    pub associative_nodes: usize,
    pub nodes: usize,
    pub min_calibration: f64,
    pub max_calibration: f64,
    pub iterations: usize,
    /// `|V*|_{H^1}`.
    pub correction_norm: f64,
}

#[derive(Debug, Clone)]
pub struct InstantonSolution {
    pub field: NormalField,
    pub patch: RuledPatch,
    pub trace: NewtonTrace,
    pub certificate: KantorovichCertificate,
    pub report: FinalReport,
}

/// Per-node associativity at `tol` and the range of `Omega` on the frames.
pub fn calibration_summary(patch: &RuledPatch, tol: f64) -> (usize, f64, f64) {
    patch
        .frames
        .iter()
        .map(|fr| {
            let r = classify_3plane(fr, tol);
            let [f1, f2, f3] = *fr.vectors();
            let om = omega3(&f1, &f2, &f3);
            ((r.classification == PlaneClass::Associative) as usize, om, om)
        })
        .fold((0, f64::INFINITY, f64::NEG_INFINITY), |a, b| {
            (a.0 + b.0, a.1.min(b.1), a.2.max(b.2))
        })
}

/// Newton correction of the ruled patch over `curve` to a discrete instanton.
pub fn solve_instanton(model: &FlatModel, curve: &CurveGraph, opts: &SolveOptions) -> Result<InstantonSolution> {
    let patch = build_ruled_patch(model, curve, opts.m)?;
    let map = InstantonMap::new(&patch).with_gauge();
    let metric = map.metric();
    let weights = map.residual_weights();
    let nopts = NewtonOptions {
        tol: 0.25 * opts.tol,
        max_iter: opts.max_iter,
        residual_norm: ResidualNorm::Max,
        radius: RadiusPolicy::AlphaMultiple(opts.radius_factor),
        seed: opts.seed,
        lipschitz_pairs: opts.lipschitz_pairs,
        power_steps: opts.power_steps,
        allow_rank_deficient: true,
        require_certificate: opts.require_certificate,
        ..Default::default()
    };
    let x0 = vec![0.0; map.dim_in()];
    let out = newton_solve(&map, &x0, &metric, &weights, &nopts).map_err(|e| match e {
        NewtonError::SingularDerivative { .. } => InstantonError::SingularDerivative,
        NewtonError::CertificateFailed(c) => InstantonError::CertificateFailed(c),
        NewtonError::NoConvergence(o) => InstantonError::NoConvergence {
            iterations: o.trace.iterations,
            residual: o.trace.residuals.last().copied().unwrap_or(f64::NAN),
            trace: o.trace,
        },
    })?;
    let field = map.field(&out.x);
    let solved = patch.deformed(&field)?;
    let after = tau_residual(&solved);
    let (associative_nodes, min_calibration, max_calibration) = calibration_summary(&solved, 1e-8);
    let report = FinalReport {
        tau_sup_before: tau_residual(&patch).sup_norm,
        tau_sup_after: after.sup_norm,
        dbar_before: patch.dbar_residual(0),
        dbar_after: solved.dbar_residual(0),
        boundary_defect: solved.boundary_defect(),
        associative_nodes,
        nodes: solved.len(),
        min_calibration,
        max_calibration,
        iterations: out.trace.iterations,
        correction_norm: metric.norm(&out.x),
    };
    Ok(InstantonSolution {
        field,
        patch: solved,
        trace: out.trace,
        certificate: out.certificate,
        report,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOptions {
    pub eps_list: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub v: Vec7,
    pub bend: Vec7,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            eps_list: vec![0.1, 0.2, 0.4],
            n: 16,
            m: 8,
            v: Vec7::e(1),
            bend: Vec7::e(1) * 0.5 + Vec7::e(2),
            seed: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub tau_sup: f64,
    pub metric_defect: f64,
    pub operator_gap: f64,
}

impl SweepRow {
    pub fn ratios(&self) -> [f64; 3] {
        [
            self.tau_sup / self.eps,
            self.metric_defect / self.eps,
            self.operator_gap / self.eps,
        ]
    }
}

/// Estimates (i)-(iii) on the flat graph over the bent family, one row per `eps`.
pub fn sweep(opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    let base = FlatModel::new(opts.v, 1.0)?.with_bend(opts.bend)?;
    let curve = CurveGraph::constant(opts.n, C64::new(0.0, 0.0))?;
    opts.eps_list
        .par_iter()
        .map(|&eps| {
            let model = base.with_eps(eps)?;
            let patch = build_ruled_patch(&model, &curve, opts.m)?;
            Ok(SweepRow {
                eps,
                tau_sup: tau_residual(&patch).sup_norm,
                metric_defect: warped_metric_defect(&patch),
                operator_gap: linearization_defect(&patch, &patch.dirac_grid(), opts.seed)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(eps: f64, n: usize, m: usize) -> RuledPatch {
        let model = FlatModel::new(Vec7::e(1), eps).unwrap();
        let curve = CurveGraph::constant(n, C64::new(0.3, -0.2)).unwrap();
        build_ruled_patch(&model, &curve, m).unwrap()
    }

    #[test]
    fn reference_normals_are_orthonormal_and_split() {
        for v in [Vec7::e(1), Vec7([0.6, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0]) * 2.0] {
            let model = FlatModel::new(v, 0.2).unwrap();
            let nb = model.reference_normals();
            for a in 0..4 {
                for b in 0..4 {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((nb[a].dot(&nb[b]) - want).abs() < 1e-14);
                }
            }
            assert!(in_e123(&nb[2]) && in_e123(&nb[3]));
            let [b1, b2, b3, b4] = model.basis();
            assert!((model.complex_structure().apply(&b1) - b2).max_abs() < 1e-14);
            assert!((model.complex_structure().apply(&b3) - b4).max_abs() < 1e-14);
        }
    }

    #[test]
    fn flat_patch_is_associative() {
        let patch = flat(0.2, 8, 4);
        assert_eq!(tau_residual(&patch).sup_norm, 0.0);
        assert!(warped_metric_defect(&patch) < 1e-10);
        let (assoc, lo, hi) = calibration_summary(&patch, 1e-10);
        assert_eq!(assoc, patch.len());
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FlatModel::new(Vec7::e(1), 0.0).is_err());
        assert!(FlatModel::new(Vec7::e(4), 0.2).is_err());
        assert!(FlatModel::new(Vec7::ZERO, 0.2).is_err());
        assert!(CurveGraph::constant(5, C64::new(0.0, 0.0)).is_err());
        let mut c = vec![[0.0; 4]; 4 * 4 * 3];
        c[0][2] = 1e-3;
        assert!(matches!(NormalField::new(4, 3, c), Err(InstantonError::BoundaryViolation { .. })));
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let model = FlatModel::new(Vec7([0.3, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 0.3)
            .unwrap()
            .with_bend(Vec7::e(2) * 0.7)
            .unwrap();
        let curve = CurveGraph::perturbed(6, C64::new(0.1, 0.0), 0.05, 1).unwrap();
        let patch = build_ruled_patch(&model, &curve, 4).unwrap();
        let map = InstantonMap::new(&patch);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..map.dim_in()).map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal)).collect();
        let d: Vec<f64> = (0..map.dim_in()).map(|_| rng.sample(StandardNormal)).collect();
        let jd = map.jacobian(&y).apply(&d);
        let h = 1e-6;
        let yp: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + h * b).collect();
        let ym: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a - h * b).collect();
        let (fp, fm) = (map.eval(&yp), map.eval(&ym));
        let err = jd
            .iter()
            .enumerate()
            .map(|(r, v)| (v - (fp[r] - fm[r]) / (2.0 * h)).abs())
            .fold(0.0, f64::max);
        let scale = jd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-6 * scale, "err {err:.3e} scale {scale:.3e}");
    }

    #[test]
    fn h1_solve_inverts_gram() {
        let model = FlatModel::new(Vec7::e(1) * 1.3, 0.3).unwrap();
        let patch = build_ruled_patch(&model, &CurveGraph::constant(6, C64::new(0.0, 0.0)).unwrap(), 5).unwrap();
        let map = InstantonMap::new(&patch);
        let metric = map.metric();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y: Vec<f64> = (0..map.dim_in()).map(|_| rng.sample(StandardNormal)).collect();
        let back = metric.solve(&metric.gram(&y));
        let err = y.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err:.3e}");
    }

    #[test]
    fn flat_linearization_is_dirac() {
        let patch = flat(0.1, 8, 5);
        let gap = linearization_defect(&patch, &patch.dirac_grid(), 1).unwrap();
        assert!(gap < 1e-6, "gap {gap:.3e}");
    }

    #[test]
    fn holomorphic_input_needs_no_steps() {
        let model = FlatModel::new(Vec7::e(1), 0.2).unwrap();
        let curve = CurveGraph::constant(6, C64::new(0.1, 0.2)).unwrap();
        let opts = SolveOptions { m: 4, ..Default::default() };
        let sol = solve_instanton(&model, &curve, &opts).unwrap();
        assert_eq!(sol.trace.iterations, 0);
        assert_eq!(sol.field.sup_norm(), 0.0);
    }

    #[test]
    fn small_solve_converges() {
        let model = FlatModel::new(Vec7::e(1), 0.2).unwrap();
        let curve = CurveGraph::perturbed(8, C64::new(0.1, 0.2), 1e-2, 2).unwrap();
        let opts = SolveOptions { m: 4, ..Default::default() };
        let sol = solve_instanton(&model, &curve, &opts).unwrap();
        assert!(sol.report.tau_sup_after <= 1e-10, "{:?}", sol.report);
        assert!(sol.report.boundary_defect <= 1e-12);
        assert!(sol.report.dbar_after < 1e-4 * sol.report.dbar_before, "{:?}", sol.report);
    }
}
