//! The calibration 3-form, its dual 4-form, the obstruction tensor `tau`, and
//! classification of linear 3- and 4-planes in R^7.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cayley::{associator, cross, Octonion, Vec7};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("frame is degenerate (Gram condition number {condition:.3e})")]
    FrameDegenerate { condition: f64 },
}

/// `Omega(u, v, w) = g(u x v, w)`.
pub fn omega3(u: &Vec7, v: &Vec7, w: &Vec7) -> f64 {
    cross(u, v).dot(w)
}

/// `tau(u, v, w) = 1/2 Im[u(vw) - (uv)w]`, so that `g(tau(u,v,w), z) = *Omega(u,v,w,z)`.
pub fn tau(u: &Vec7, v: &Vec7, w: &Vec7) -> Vec7 {
    let a = associator(
        &Octonion::imaginary(*u),
        &Octonion::imaginary(*v),
        &Octonion::imaginary(*w),
    );
    a.im * -0.5
}

/// The coassociative 4-form. With the crate table `*Omega(e4,e5,e6,e7) = +1`.
pub fn star_omega(u: &Vec7, v: &Vec7, w: &Vec7, z: &Vec7) -> f64 {
    tau(u, v, w).dot(z)
}

/// Gram condition number of a set of vectors (infinite if rank deficient).
pub fn gram_condition(vs: &[Vec7]) -> f64 {
    let n = vs.len();
    let g = DMatrix::from_fn(n, n, |i, j| vs[i].dot(&vs[j]));
    let eig = SymmetricEigen::new(g).eigenvalues;
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Modified Gram-Schmidt in input order; callers check conditioning first.
pub(crate) fn orthonormalize<const K: usize>(vs: [Vec7; K]) -> [Vec7; K] {
    let mut out = vs;
    for i in 0..K {
        let mut w = out[i];
        for j in 0..i {
            let p = w.dot(&out[j]);
            w -= out[j] * p;
        }
        out[i] = w.normalized();
    }
    out
}

fn checked<const K: usize>(vs: [Vec7; K]) -> Result<[Vec7; K], CalibError> {
    let condition = gram_condition(&vs);
    if !(condition <= tol::FRAME_CONDITION) {
        return Err(CalibError::FrameDegenerate { condition });
    }
    Ok(orthonormalize(vs))
}

/// Oriented orthonormal basis of a 3-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeFrame {
    f: [Vec7; 3],
}

impl ThreeFrame {
    /// Orthonormalizes the spanning vectors, keeping their order and orientation.
    pub fn new(f1: Vec7, f2: Vec7, f3: Vec7) -> Result<Self, CalibError> {
        Ok(ThreeFrame {
            f: checked([f1, f2, f3])?,
        })
    }

    /// `span{e1, e2, e3 + t4 e4 + t5 e5 + t6 e6 + t7 e7}`.
    pub fn perturbed(t: [f64; 4]) -> Self {
        let mut f3 = Vec7::e(3);
        for (k, ti) in t.iter().enumerate() {
            f3[3 + k] = *ti;
        }
        ThreeFrame::new(Vec7::e(1), Vec7::e(2), f3).expect("perturbed frame is well conditioned")
    }

    pub fn vectors(&self) -> &[Vec7; 3] {
        &self.f
    }

    /// Orthogonal projection onto the 4-dimensional complement.
    pub fn project_normal(&self, x: &Vec7) -> Vec7 {
        x.reject_from(&self.f)
    }
}

/// Orthonormal basis of a 4-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourFrame {
    f: [Vec7; 4],
}

impl FourFrame {
    pub fn new(f1: Vec7, f2: Vec7, f3: Vec7, f4: Vec7) -> Result<Self, CalibError> {
        Ok(FourFrame {
            f: checked([f1, f2, f3, f4])?,
        })
    }

    /// The flat model's `C0 = span{e4, e5, e6, e7}`.
    pub fn c0() -> Self {
        FourFrame {
            f: [Vec7::e(4), Vec7::e(5), Vec7::e(6), Vec7::e(7)],
        }
    }

    pub fn vectors(&self) -> &[Vec7; 4] {
        &self.f
    }

    pub fn contains(&self, x: &Vec7, tol: f64) -> bool {
        x.reject_from(&self.f).norm() <= tol * (1.0 + x.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneClass {
    Associative,
    Coassociative,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneReport {
    pub tau_norm: f64,
    pub calibration_value: f64,
    pub classification: PlaneClass,
}

/// `tau_norm = |tau(f1,f2,f3)|`, `calibration_value = Omega(f1,f2,f3)`.
///
/// Associativity ignores orientation: a reversed associative frame reports
/// `calibration_value = -1`.
pub fn classify_3plane(a: &ThreeFrame, tol: f64) -> PlaneReport {
    let [f1, f2, f3] = a.f;
    let tau_norm = tau(&f1, &f2, &f3).norm();
    let calibration_value = omega3(&f1, &f2, &f3);
    PlaneReport {
        tau_norm,
        calibration_value,
        classification: if tau_norm <= tol {
            PlaneClass::Associative
        } else {
            PlaneClass::Generic
        },
    }
}

/// For a 4-plane `tau_norm` is the largest `|Omega|` over its coordinate
/// triples and `calibration_value` is `*Omega(f1,f2,f3,f4)`.
pub fn classify_4plane(c: &FourFrame, tol: f64) -> PlaneReport {
    let f = &c.f;
    let triples = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let tau_norm = triples
        .iter()
        .map(|[i, j, k]| omega3(&f[*i], &f[*j], &f[*k]).abs())
        .fold(0.0, f64::max);
    PlaneReport {
        tau_norm,
        calibration_value: star_omega(&f[0], &f[1], &f[2], &f[3]),
        classification: if tau_norm <= tol {
            PlaneClass::Coassociative
        } else {
            PlaneClass::Generic
        },
    }
}

/// Normal component of `*(tau|_A)` for `A = span{e1, e2, e3 + sum t_i e_i}`.
pub fn tau_normal_component(t: [f64; 4]) -> Vec7 {
    let a = ThreeFrame::perturbed(t);
    let [f1, f2, f3] = a.f;
    a.project_normal(&tau(&f1, &f2, &f3))
}

/// Projections of `e4..e7` onto the normal space of the perturbed plane.
pub fn projected_normals(t: [f64; 4]) -> [Vec7; 4] {
    let a = ThreeFrame::perturbed(t);
    std::array::from_fn(|k| a.project_normal(&Vec7::e(4 + k)))
}

/// Sign relating [`tau_normal_component`] to [`first_order_normal`]; `+1` for the crate table.
pub const ALMOST_INSTANTON_SIGN: f64 = 1.0;

/// First-order prediction `-t5 e4 + t4 e5 + t7 e6 - t6 e7`, each projected to the normal space.
pub fn first_order_normal(t: [f64; 4]) -> Vec7 {
    let [t4, t5, t6, t7] = t;
    let [n4, n5, n6, n7] = projected_normals(t);
    (n4 * -t5 + n5 * t4 + n6 * t7 + n7 * -t6) * ALMOST_INSTANTON_SIGN
}

/// Gram determinant of the projected normals.
pub fn projected_normals_gram_det(t: [f64; 4]) -> f64 {
    let n = projected_normals(t);
    DMatrix::from_fn(4, 4, |i, j| n[i].dot(&n[j])).determinant()
}
