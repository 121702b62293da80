//! Normal vectors of a coassociative 4-plane as self-dual 2-forms, and the
//! almost complex structure they induce.
//!
//! The 4-plane is oriented so that `*Omega(g1,g2,g3,g4) = -1`; with that
//! orientation `iota_v Omega` is self-dual. The self-dual basis is
//! `w1 = g14 + g23`, `w2 = g13 - g24`, `w3 = g12 + g34`, each with `wi ^ wi = 2 vol`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::{classify_4plane, omega3, star_omega, FourFrame, PlaneClass};
use crate::cayley::Vec7;
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoassocError {
    #[error("4-plane is not coassociative (max |Omega| = {max_omega:.3e})")]
    NotCoassociative { max_omega: f64 },
    #[error("vector is not normal to the 4-plane (tangential part {tangential:.3e})")]
    NotNormal { tangential: f64 },
    #[error("self-dual form is degenerate (|eta| = {norm:.3e})")]
    DegenerateForm { norm: f64 },
}

/// Orthonormal frame of `C` reordered in orientation so that `*Omega = -1`.
pub fn oriented_frame(c: &FourFrame) -> [Vec7; 4] {
    let [f1, f2, f3, f4] = *c.vectors();
    if star_omega(&f1, &f2, &f3, &f4) > 0.0 {
        [f1, f2, f3, -f4]
    } else {
        [f1, f2, f3, f4]
    }
}

/// Self-dual 2-form in the basis `{w1, w2, w3}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SelfDualTwoForm {
    pub a: [f64; 3],
}

impl SelfDualTwoForm {
    pub fn new(a1: f64, a2: f64, a3: f64) -> Self {
        SelfDualTwoForm { a: [a1, a2, a3] }
    }

    /// Pointwise norm with `|w|^2 = sum_{i<j} w_ij^2`, so `|wi| = sqrt 2`.
    pub fn norm(&self) -> f64 {
        (2.0 * self.a.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SelfDualTwoForm {
            a: self.a.map(|x| x * s),
        }
    }

    /// Antisymmetric component matrix `E[i][j] = eta(g_i, g_j)`.
    pub fn components(&self) -> [[f64; 4]; 4] {
        let [a1, a2, a3] = self.a;
        let mut e = [[0.0; 4]; 4];
        let mut set = |i: usize, j: usize, x: f64| {
            e[i][j] = x;
            e[j][i] = -x;
        };
        set(0, 3, a1);
        set(1, 2, a1);
        set(0, 2, a2);
        set(1, 3, -a2);
        set(0, 1, a3);
        set(2, 3, a3);
        e
    }

    /// Projection of an antisymmetric matrix onto the self-dual part.
    pub fn from_components(e: &[[f64; 4]; 4]) -> Self {
        SelfDualTwoForm::new(
            0.5 * (e[0][3] + e[1][2]),
            0.5 * (e[0][2] - e[1][3]),
            0.5 * (e[0][1] + e[2][3]),
        )
    }
}

/// `v -> iota_v Omega` restricted to `C`.
pub fn normal_to_selfdual(v: &Vec7, c: &FourFrame) -> Result<SelfDualTwoForm, CoassocError> {
    let report = classify_4plane(c, tol::PLANE);
    if report.classification != PlaneClass::Coassociative {
        return Err(CoassocError::NotCoassociative {
            max_omega: report.tau_norm,
        });
    }
    let tangential = (*v - v.reject_from(c.vectors())).norm();
    if tangential > tol::NORMAL * (1.0 + v.norm()) {
        return Err(CoassocError::NotNormal { tangential });
    }
    let g = oriented_frame(c);
    let e: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| omega3(v, &g[i], &g[j])));
    Ok(SelfDualTwoForm::from_components(&e))
}

/// `(lhs, rhs)` with `eta ^ eta = lhs vol` and `rhs = |eta|^2`, both from the component matrix.
pub fn selfdual_square_identity(eta: &SelfDualTwoForm) -> (f64, f64) {
    let e = eta.components();
    let lhs = 2.0 * (e[0][1] * e[2][3] - e[0][2] * e[1][3] + e[0][3] * e[1][2]);
    let mut rhs = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            rhs += e[i][j] * e[i][j];
        }
    }
    (lhs, rhs)
}

/// `J` on a 4-plane, as a matrix acting on coordinates in the oriented frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlmostComplexStructure {
    pub matrix: [[f64; 4]; 4],
    pub frame: [Vec7; 4],
}

impl AlmostComplexStructure {
    pub fn apply_coords(&self, x: &[f64; 4]) -> [f64; 4] {
        std::array::from_fn(|i| (0..4).map(|j| self.matrix[i][j] * x[j]).sum())
    }

    /// Applies `J` to a vector of the plane given in ambient coordinates.
    pub fn apply(&self, u: &Vec7) -> Vec7 {
        let x: [f64; 4] = std::array::from_fn(|i| u.dot(&self.frame[i]));
        let y = self.apply_coords(&x);
        (0..4).fold(Vec7::ZERO, |acc, i| acc + self.frame[i] * y[i])
    }
}

/// `J` with `eta(u, w) = g(Ju, w)` for `eta` rescaled to `|eta| = sqrt 2`, so `J^2 = -1`.
pub fn almost_complex_from_form(
    eta: &SelfDualTwoForm,
    c: &FourFrame,
) -> Result<AlmostComplexStructure, CoassocError> {
    let norm = eta.norm();
    if !(norm > tol::DEGENERATE_FORM) {
        return Err(CoassocError::DegenerateForm { norm });
    }
    let s = std::f64::consts::SQRT_2 / norm;
    let e = eta.components();
    Ok(AlmostComplexStructure {
        matrix: std::array::from_fn(|i| std::array::from_fn(|j| -s * e[i][j])),
        frame: oriented_frame(c),
    })
}
