//! Quaternions, octonions and the 2-fold vector cross product on R^7.
//!
//! Every sign convention in the crate descends from [`FANO_TRIPLES`]: for each
//! listed triple `(a, b, c)` the imaginary units multiply cyclically,
//! `e_a e_b = e_c`, `e_b e_c = e_a`, `e_c e_a = e_b`, and anticommute.
//! The table is a genuine octonion multiplication (norm multiplicative),
//! satisfies `e1 x e2 = e3`, and gives the almost-instanton normal formula
//! `-t5 e4 + t4 e5 + t7 e6 - t6 e7` with sign `+1`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Oriented Fano lines, 1-based indices of the imaginary units.
pub const FANO_TRIPLES: [[usize; 3]; 7] = [
    [1, 2, 3],
    [1, 4, 7],
    [1, 6, 5],
    [2, 4, 6],
    [2, 5, 7],
    [3, 5, 4],
    [3, 6, 7],
];

/// `UNIT_PRODUCT[i][j] = (sign, k)` with `e_i e_j = sign * e_k`; index 0 is the real unit.
pub const UNIT_PRODUCT: [[(i8, u8); 8]; 8] = build_unit_product();

const fn build_unit_product() -> [[(i8, u8); 8]; 8] {
    let mut t = [[(0i8, 0u8); 8]; 8];
    let mut i = 0;
    while i < 8 {
        t[0][i] = (1, i as u8);
        t[i][0] = (1, i as u8);
        if i > 0 {
            t[i][i] = (-1, 0);
        }
        i += 1;
    }
    let mut l = 0;
    while l < 7 {
        let [a, b, c] = FANO_TRIPLES[l];
        let cyc = [(a, b, c), (b, c, a), (c, a, b)];
        let mut s = 0;
        while s < 3 {
            let (x, y, z) = cyc[s];
            t[x][y] = (1, z as u8);
            t[y][x] = (-1, z as u8);
            s += 1;
        }
        l += 1;
    }
    t
}

/// A vector in R^7 = Im O. Component `k` (0-based) is the coefficient of `e_{k+1}`.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec7(pub [f64; 7]);

impl Vec7 {
    pub const ZERO: Vec7 = Vec7([0.0; 7]);

    /// Basis vector `e_i`, 1-based.
    pub fn e(i: usize) -> Vec7 {
        assert!((1..=7).contains(&i), "basis index {i} out of range 1..=7");
        let mut c = [0.0; 7];
        c[i - 1] = 1.0;
        Vec7(c)
    }

    pub fn dot(&self, other: &Vec7) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(&self) -> Vec7 {
        *self * (1.0 / self.norm())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Component of `self` orthogonal to the orthonormal set `basis`.
    pub fn reject_from(&self, basis: &[Vec7]) -> Vec7 {
        let mut r = *self;
        for b in basis {
            r -= *b * r.dot(b);
        }
        r
    }
}

impl fmt::Debug for Vec7 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vec7({:?})", self.0)
    }
}

impl Index<usize> for Vec7 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec7 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec7 {
    type Output = Vec7;
    fn add(mut self, rhs: Vec7) -> Vec7 {
        self += rhs;
        self
    }
}

impl AddAssign for Vec7 {
    fn add_assign(&mut self, rhs: Vec7) {
        for k in 0..7 {
            self.0[k] += rhs.0[k];
        }
    }
}

impl Sub for Vec7 {
    type Output = Vec7;
    fn sub(mut self, rhs: Vec7) -> Vec7 {
        self -= rhs;
        self
    }
}

impl SubAssign for Vec7 {
    fn sub_assign(&mut self, rhs: Vec7) {
        for k in 0..7 {
            self.0[k] -= rhs.0[k];
        }
    }
}

impl Mul<f64> for Vec7 {
    type Output = Vec7;
    fn mul(self, s: f64) -> Vec7 {
        Vec7(self.0.map(|x| x * s))
    }
}

impl Neg for Vec7 {
    type Output = Vec7;
    fn neg(self) -> Vec7 {
        self * -1.0
    }
}

/// The 2-fold vector cross product, `u x v = Im(u v)` for pure imaginary `u, v`.
pub fn cross(u: &Vec7, v: &Vec7) -> Vec7 {
    let mut out = Vec7::ZERO;
    for [a, b, c] in FANO_TRIPLES {
        let (a, b, c) = (a - 1, b - 1, c - 1);
        out.0[c] += u.0[a] * v.0[b] - u.0[b] * v.0[a];
        out.0[a] += u.0[b] * v.0[c] - u.0[c] * v.0[b];
        out.0[b] += u.0[c] * v.0[a] - u.0[a] * v.0[c];
    }
    out
}

/// Quaternion `w + x i + y j + z k` with `i^2 = j^2 = k^2 = ijk = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn conj(&self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        let p = self;
        Quaternion::new(
            p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
        )
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, q: Quaternion) -> Quaternion {
        Quaternion::new(self.w + q.w, self.x + q.x, self.y + q.y, self.z + q.z)
    }
}

/// Octonion `re + sum im_k e_{k+1}` under [`UNIT_PRODUCT`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Octonion {
    pub re: f64,
    pub im: Vec7,
}

impl Octonion {
    pub const ONE: Octonion = Octonion {
        re: 1.0,
        im: Vec7::ZERO,
    };

    pub fn new(re: f64, im: Vec7) -> Self {
        Octonion { re, im }
    }

    pub fn imaginary(im: Vec7) -> Self {
        Octonion { re: 0.0, im }
    }

    pub fn from_components(c: [f64; 8]) -> Self {
        let mut im = [0.0; 7];
        im.copy_from_slice(&c[1..]);
        Octonion { re: c[0], im: Vec7(im) }
    }

    pub fn components(&self) -> [f64; 8] {
        let mut c = [0.0; 8];
        c[0] = self.re;
        c[1..].copy_from_slice(&self.im.0);
        c
    }

    pub fn conj(&self) -> Self {
        Octonion::new(self.re, -self.im)
    }

    pub fn norm(&self) -> f64 {
        (self.re * self.re + self.im.norm_squared()).sqrt()
    }
}

impl Add for Octonion {
    type Output = Octonion;
    fn add(self, q: Octonion) -> Octonion {
        Octonion::new(self.re + q.re, self.im + q.im)
    }
}

impl Sub for Octonion {
    type Output = Octonion;
    fn sub(self, q: Octonion) -> Octonion {
        Octonion::new(self.re - q.re, self.im - q.im)
    }
}

impl Mul for Octonion {
    type Output = Octonion;
    fn mul(self, q: Octonion) -> Octonion {
        oct_mul(&self, &q)
    }
}

/// Octonion product under the fixed table.
pub fn oct_mul(p: &Octonion, q: &Octonion) -> Octonion {
    let a = p.components();
    let b = q.components();
    let mut out = [0.0; 8];
    for i in 0..8 {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..8 {
            let (s, k) = UNIT_PRODUCT[i][j];
            out[k as usize] += f64::from(s) * a[i] * b[j];
        }
    }
    Octonion::from_components(out)
}

/// Associator `(pq)r - p(qr)`.
pub fn associator(p: &Octonion, q: &Octonion, r: &Octonion) -> Octonion {
    oct_mul(&oct_mul(p, q), r) - oct_mul(p, &oct_mul(q, r))
}

/// Serializable form of the structure constants.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StructureTable {
    pub convention: String,
    pub triples: Vec<[usize; 3]>,
    /// `products[i][j] = [sign, k]` for units `e_0 = 1, e_1..e_7`.
    pub products: Vec<Vec<[i32; 2]>>,
}

pub fn structure_table() -> StructureTable {
    StructureTable {
        convention: "e_a e_b = e_c cyclically on each triple; e_i e_i = -1; cross(u,v) = Im(uv)"
            .to_string(),
        triples: FANO_TRIPLES.to_vec(),
        products: UNIT_PRODUCT
            .iter()
            .map(|row| row.iter().map(|&(s, k)| [i32::from(s), i32::from(k)]).collect())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec7(rng: &mut impl Rng) -> Vec7 {
        Vec7(std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn e1_times_e2_is_e3() {
        let p = Octonion::imaginary(Vec7::e(1));
        let q = Octonion::imaginary(Vec7::e(2));
        let r = oct_mul(&p, &q);
        assert_eq!(r.re, 0.0);
        assert_eq!(r.im, Vec7::e(3));
        assert_eq!(cross(&Vec7::e(1), &Vec7::e(2)), Vec7::e(3));
    }

    #[test]
    fn one_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = Octonion::new(0.3, random_vec7(&mut rng));
        assert_eq!(oct_mul(&Octonion::ONE, &q), q);
        assert_eq!(oct_mul(&q, &Octonion::ONE), q);
    }

    #[test]
    fn norm_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let p = Octonion::new(rng.random_range(-1.0..1.0), random_vec7(&mut rng));
            let q = Octonion::new(rng.random_range(-1.0..1.0), random_vec7(&mut rng));
            let lhs = oct_mul(&p, &q).norm();
            assert!((lhs - p.norm() * q.norm()).abs() <= 1e-12 * (1.0 + lhs));
        }
    }

    #[test]
    fn conjugation_recovers_real_part() {
        let p = Octonion::new(0.7, Vec7([1.0, -2.0, 0.5, 0.0, 3.0, 0.1, -0.4]));
        let s = p + p.conj();
        assert_eq!(s.re, 1.4);
        assert_eq!(s.im, Vec7::ZERO);
    }

    #[test]
    fn cross_matches_imaginary_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = random_vec7(&mut rng);
            let v = random_vec7(&mut rng);
            let prod = oct_mul(&Octonion::imaginary(u), &Octonion::imaginary(v));
            assert!((prod.im - cross(&u, &v)).max_abs() < 1e-14);
            assert!((prod.re + u.dot(&v)).abs() < 1e-14);
        }
    }

    #[test]
    fn cross_is_skew_and_orthogonal_on_basis() {
        let u = Vec7::e(1);
        assert_eq!(cross(&u, &u), Vec7::ZERO);
        let w = cross(&Vec7::e(1), &Vec7::e(5));
        assert!((w.norm() - 1.0).abs() < 1e-15);
        assert_eq!(w.dot(&Vec7::e(1)), 0.0);
        assert_eq!(w.dot(&Vec7::e(5)), 0.0);
    }

    #[test]
    fn quaternion_units() {
        let m1 = Quaternion::new(-1.0, 0.0, 0.0, 0.0);
        assert_eq!(Quaternion::I * Quaternion::I, m1);
        assert_eq!(Quaternion::J * Quaternion::J, m1);
        assert_eq!(Quaternion::K * Quaternion::K, m1);
        assert_eq!(Quaternion::I * Quaternion::J * Quaternion::K, m1);
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
    }

    #[test]
    fn quaternion_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let p = Quaternion::new(rng.random(), rng.random(), rng.random(), rng.random());
            let q = Quaternion::new(rng.random(), rng.random(), rng.random(), rng.random());
            let r = Quaternion::new(rng.random(), rng.random(), rng.random(), rng.random());
            assert!(((p * q).norm() - p.norm() * q.norm()).abs() < 1e-12);
            let a = (p * q) * r;
            let b = p * (q * r);
            assert!((a + Quaternion::new(-b.w, -b.x, -b.y, -b.z)).norm() < 1e-12);
        }
    }

    #[test]
    fn table_is_alternative() {
        // Alternativity on basis units: (x x) y = x (x y).
        for i in 0..8 {
            for j in 0..8 {
                let mut x = [0.0; 8];
                x[i] = 1.0;
                let mut y = [0.0; 8];
                y[j] = 1.0;
                let x = Octonion::from_components(x);
                let y = Octonion::from_components(y);
                let a = associator(&x, &x, &y);
                assert_eq!(a.norm(), 0.0, "units {i},{j}");
            }
        }
    }
}
