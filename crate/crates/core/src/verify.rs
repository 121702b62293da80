//! The property suite behind `g2lab verify-all`.
//!
//! Each check returns a pass flag and the measured quantities. `quick` shrinks
//! sample counts and grids so the whole suite runs in seconds.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use crate::calib::{
    classify_3plane, first_order_normal, projected_normals_gram_det, tau_normal_component, PlaneClass,
    ThreeFrame,
};
use crate::cayley::{cross, Vec7};
use crate::coassoc::{almost_complex_from_form, normal_to_selfdual, selfdual_square_identity};
use crate::calib::FourFrame;
use crate::dirac::{
    cross_term, kernel_equivalence, lowest_eigenvalues, poincare_check, torus_adjointness_defect, BoundaryCondition,
    CylinderGrid, SpectralOptions, SpinorField,
};
use crate::instanton::{self, CurveGraph, FlatModel, SolveOptions, SweepOptions};
use crate::kantor::{
    convergence_order, newton_solve, DenseMap, Diagonal, Euclidean, NewtonError, NewtonOptions,
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(skip)]
    pub seconds: f64,
    pub detail: Value,
}

fn random_vec7(rng: &mut impl Rng) -> Vec7 {
    Vec7(std::array::from_fn(|_| rng.sample(StandardNormal)))
}

fn timed(name: &str, f: impl FnOnce() -> (bool, Value)) -> CheckResult {
    let start = std::time::Instant::now();
    let (passed, detail) = f();
    CheckResult {
        name: name.to_string(),
        passed,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    }
}

pub fn algebra(samples: usize, seed: u64) -> (bool, Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut orth = 0.0f64;
    let mut norm = 0.0f64;
    for _ in 0..samples {
        let (u, v) = (random_vec7(&mut rng), random_vec7(&mut rng));
        let w = cross(&u, &v);
        orth = orth.max(w.dot(&u).abs()).max(w.dot(&v).abs());
        let lag = u.norm_squared() * v.norm_squared() - u.dot(&v).powi(2);
        norm = norm.max((w.norm_squared() - lag).abs() / (1.0 + lag));
    }
    let basis = cross(&Vec7::e(1), &Vec7::e(2)) == Vec7::e(3);
    (
        orth <= 1e-12 && norm <= 1e-12 && basis,
        json!({"max_orthogonality": orth, "max_norm_defect": norm, "e1xe2_is_e3": basis}),
    )
}

pub fn calibration_equivalence(samples: usize, seed: u64) -> (bool, Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_omega = 0.0f64;
    let mut mismatches = 0usize;
    let mut hl = 0.0f64;
    let mut check = |fr: &ThreeFrame| {
        let r = classify_3plane(fr, 1e-10);
        let [f1, f2, f3] = *fr.vectors();
        let tau_norm = crate::calib::tau(&f1, &f2, &f3).norm();
        hl = hl.max((r.calibration_value.powi(2) + tau_norm.powi(2) - 1.0).abs());
        max_omega = max_omega.max(r.calibration_value.abs());
        let calibrated = (r.calibration_value.abs() - 1.0).abs() <= 1e-10;
        if (r.classification == PlaneClass::Associative) != calibrated {
            mismatches += 1;
        }
    };
    for _ in 0..samples {
        if let Ok(fr) = ThreeFrame::new(random_vec7(&mut rng), random_vec7(&mut rng), random_vec7(&mut rng)) {
            check(&fr);
        }
        let (u, v) = (random_vec7(&mut rng), random_vec7(&mut rng));
        if let Ok(fr) = ThreeFrame::new(u, v, cross(&u, &v)) {
            check(&fr);
        }
    }
    (
        mismatches == 0 && max_omega <= 1.0 + 1e-10,
        json!({"mismatches": mismatches, "max_abs_omega": max_omega, "max_identity_defect": hl}),
    )
}

pub fn almost_instanton(samples: usize, seed: u64) -> (bool, Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first_order = 0.0f64;
    for k in 0..4 {
        for s in [1.0, -1.0] {
            let mut t = [0.0; 4];
            t[k] = 1e-3 * s;
            first_order = first_order.max((tau_normal_component(t) - first_order_normal(t)).norm());
        }
    }
    let mut min_det = f64::INFINITY;
    for _ in 0..samples {
        let t: [f64; 4] = std::array::from_fn(|_| rng.random_range(-0.1..0.1));
        min_det = min_det.min(projected_normals_gram_det(t));
    }
    (
        first_order <= 1e-5 && min_det >= 0.5,
        json!({"first_order_error": first_order, "min_gram_det": min_det}),
    )
}

pub fn normal_bundle(samples: usize, seed: u64) -> (bool, Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = FourFrame::c0();
    let images: Vec<[f64; 3]> = (1..=3)
        .map(|i| normal_to_selfdual(&Vec7::e(i), &c0).expect("C0 is coassociative").a)
        .collect();
    let gram = DMatrix::from_fn(3, 3, |i, j| (0..3).map(|k| images[i][k] * images[j][k]).sum::<f64>());
    let det = gram.determinant();
    let (mut wedge, mut jsq, mut herm) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let v = Vec7([rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal), 0.0, 0.0, 0.0, 0.0]);
        let eta = normal_to_selfdual(&v, &c0).expect("normal vector");
        let (lhs, rhs) = selfdual_square_identity(&eta);
        wedge = wedge.max((lhs - rhs).abs() / rhs.max(1e-300));
        let j = almost_complex_from_form(&eta, &c0).expect("nondegenerate");
        for a in 0..4 {
            let mut x = [0.0; 4];
            x[a] = 1.0;
            let jj = j.apply_coords(&j.apply_coords(&x));
            jsq = jsq.max((0..4).map(|b| (jj[b] + x[b]).abs()).fold(0.0, f64::max));
            for b in 0..4 {
                let mut y = [0.0; 4];
                y[b] = 1.0;
                let (jx, jy) = (j.apply_coords(&x), j.apply_coords(&y));
                let g = (0..4).map(|c| jx[c] * jy[c]).sum::<f64>();
                herm = herm.max((g - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    (
        det >= 0.5 && wedge <= 1e-12 && jsq <= 1e-12 && herm <= 1e-12,
        json!({"gram_det": det, "wedge_defect": wedge, "j_squared_defect": jsq, "hermitian_defect": herm}),
    )
}

/// Twist and length matrix for the eigenvalue bounds.
pub const THETAS: [[f64; 2]; 3] = [[0.5, 0.0], [0.5, 0.5], [0.25, 0.25]];
pub const EPSILONS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

pub fn eigenvalue_bounds(n: usize, m_base: usize) -> (bool, Value) {
    let mut rows = Vec::new();
    let mut ok = true;
    for th in THETAS {
        for eps in EPSILONS {
            let m = (m_base as f64 * eps.max(1.0)).round() as usize;
            let grid = CylinderGrid::new(eps, m, n, th).expect("valid grid");
            let rep = match lowest_eigenvalue_report(&grid) {
                Some(r) => r,
                None => {
                    ok = false;
                    continue;
                }
            };
            let lo = rep.lambda_dplus.min(2.0 / (eps * eps)) * 0.95;
            let hi = rep.lambda_dplus * 1.05;
            let mut pass = rep.lambda_d >= lo && rep.lambda_d <= hi;
            if 2.0 / (eps * eps) >= 2.0 * rep.lambda_dplus {
                pass &= (rep.lambda_d - rep.lambda_dplus).abs() <= 0.05 * rep.lambda_dplus;
            }
            ok &= pass;
            rows.push(json!({"theta": th, "eps": eps, "m": m, "lambda_d": rep.lambda_d, "lambda_dplus": rep.lambda_dplus, "pass": pass}));
        }
    }
    (ok, json!({"n": n, "cases": rows}))
}

fn lowest_eigenvalue_report(grid: &CylinderGrid) -> Option<crate::dirac::SpectralReport> {
    lowest_eigenvalues(grid, BoundaryCondition::Hminus, &SpectralOptions::default()).ok()
}

pub fn discrete_identities(samples: usize, seed: u64) -> (bool, Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = CylinderGrid::new(1.0, 8, 8, [0.25, 0.5]).expect("valid grid");
    let mut adj = 0.0f64;
    let mut cross_rel = 0.0f64;
    for _ in 0..samples {
        let f = SpinorField::random(&grid, BoundaryCondition::Hminus, &mut rng);
        adj = adj.max(torus_adjointness_defect(&grid, &f.u, &f.v));
        let ct = cross_term(&f, &grid).expect("shapes match");
        let scale = crate::dirac::h1_norm_squared(&f, &grid);
        cross_rel = cross_rel.max(ct.abs() / scale);
    }
    let mut poincare_ok = true;
    let mut profiles = Vec::new();
    for m in [16usize, 64] {
        let eps = 1.0;
        let xs: Vec<f64> = (0..m).map(|k| eps * k as f64 / (m - 1) as f64).collect();
        for (name, f) in [
            ("linear", Box::new(|x: f64| x) as Box<dyn Fn(f64) -> f64>),
            ("sine", Box::new(|x: f64| (std::f64::consts::FRAC_PI_2 * x).sin())),
            ("quadratic", Box::new(|x: f64| x * (2.0 - x))),
        ] {
            let v: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
            let (lhs, rhs) = poincare_check(&v, eps).expect("v(0) = 0");
            let allowed = rhs * (1.0 + 4.0 / (m * m) as f64);
            poincare_ok &= lhs <= allowed;
            profiles.push(json!({"profile": name, "m": m, "lhs": lhs, "rhs": rhs}));
        }
    }
    (
        adj <= 1e-12 && cross_rel <= 1e-10 && poincare_ok,
        json!({"max_adjointness_defect": adj, "max_cross_term_relative": cross_rel, "poincare": profiles}),
    )
}

pub fn kernel_counts(n: usize) -> (bool, Value) {
    let mut rows = Vec::new();
    let mut ok = true;
    for th in [[0.0, 0.0], THETAS[0], THETAS[1], THETAS[2]] {
        let grid = CylinderGrid::new(1.0, 8, n, th).expect("valid grid");
        let (kp, kd) = kernel_equivalence(&grid).unwrap_or((usize::MAX, usize::MAX));
        let pass = if th == [0.0, 0.0] { kp >= 1 && kd >= 1 } else { kp == 0 && kd == 0 };
        ok &= pass;
        rows.push(json!({"theta": th, "torus_kernel": kp, "dirac_kernel": kd}));
    }
    (ok, json!({"cases": rows}))
}

/// `F(x) = A (x - z) + [ (x-z)^T B_i (x-z) ]_i` with known root `z`.
pub struct QuadraticFamily {
    pub a: DMatrix<f64>,
    pub b: Vec<DMatrix<f64>>,
    pub z: Vec<f64>,
}

impl QuadraticFamily {
    pub fn random(dim: usize, rng: &mut impl Rng) -> Self {
        let a = DMatrix::from_fn(dim, dim, |i, j| {
            rng.sample::<f64, _>(StandardNormal) * 0.3 + if i == j { 1.0 } else { 0.0 }
        });
        let b = (0..dim)
            .map(|_| {
                let r = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                (&r + r.transpose()) * 0.5
            })
            .collect();
        let z = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        QuadraticFamily { a, b, z }
    }

    pub fn map(&self) -> impl crate::kantor::NonlinearMap + '_ {
        let dim = self.z.len();
        let d = move |x: &[f64]| nalgebra::DVector::from_iterator(dim, x.iter().zip(&self.z).map(|(a, b)| a - b));
        DenseMap {
            dim_in: dim,
            dim_out: dim,
            f: move |x: &[f64]| {
                let dx = d(x);
                let lin = &self.a * &dx;
                (0..dim).map(|i| lin[i] + dx.dot(&(&self.b[i] * &dx))).collect()
            },
            df: move |x: &[f64]| {
                let dx = d(x);
                let mut j = self.a.clone();
                for i in 0..dim {
                    let row = (&self.b[i] * &dx) * 2.0;
                    for c in 0..dim {
                        j[(i, c)] += row[c];
                    }
                }
                j
            },
        }
    }
}

pub fn newton_kantorovich(trials: usize, seed: u64) -> (bool, Value) {
    let scalar = DenseMap {
        dim_in: 1,
        dim_out: 1,
        f: |x: &[f64]| vec![x[0] * x[0] - 1.0],
        df: |x: &[f64]| DMatrix::from_element(1, 1, 2.0 * x[0]),
    };
    let two = DenseMap {
        dim_in: 2,
        dim_out: 2,
        f: |x: &[f64]| vec![x[0] * x[0] - x[1], x[1] * x[1] - x[0]],
        df: |x: &[f64]| DMatrix::from_row_slice(2, 2, &[2.0 * x[0], -1.0, -1.0, 2.0 * x[1]]),
    };
    let opts = NewtonOptions {
        tol: 1e-14,
        ..Default::default()
    };
    let s = newton_solve(&scalar, &[1.2], &Euclidean, &Diagonal(vec![1.0]), &opts);
    let t = newton_solve(&two, &[1.1, 0.9], &Euclidean, &Diagonal(vec![1.0; 2]), &opts);
    let order = |r: &Result<crate::kantor::NewtonOutcome, NewtonError>| {
        r.as_ref()
            .ok()
            .and_then(|o| convergence_order(&o.trace.residuals, 1e-14, 1.0))
            .unwrap_or(0.0)
    };
    let (os, ot) = (order(&s), order(&t));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut certified, mut violations) = (0usize, 0usize);
    for trial in 0..trials {
        let dim = 1 + trial % 3;
        let fam = QuadraticFamily::random(dim, &mut rng);
        let rho: f64 = rng.random_range(0.01..1.0);
        let x0: Vec<f64> = fam.z.iter().map(|z| z + rho * rng.sample::<f64, _>(StandardNormal)).collect();
        let map = fam.map();
        let opts = NewtonOptions {
            tol: 1e-11,
            seed: trial as u64,
            allow_rank_deficient: false,
            ..Default::default()
        };
        match newton_solve(&map, &x0, &Euclidean, &Diagonal(vec![1.0; dim]), &opts) {
            Ok(o) if o.certificate.is_certified() => {
                certified += 1;
                if !o.within_ball() {
                    violations += 1;
                }
            }
            Err(NewtonError::NoConvergence(o)) if o.certificate.is_certified() => {
                certified += 1;
                violations += 1;
            }
            _ => {}
        }
    }
    (
        os >= 1.9 && ot >= 1.9 && violations == 0,
        json!({"scalar_order": os, "planar_order": ot, "trials": trials, "certified": certified, "violations": violations}),
    )
}

pub fn instanton_correction(n: usize, m: usize, delta: f64, seed: u64) -> (bool, Value) {
    let model = FlatModel::new(Vec7::e(1), 0.2).expect("valid model");
    let curve = match CurveGraph::perturbed(n, C64::new(0.3, -0.1), delta, seed) {
        Ok(c) => c,
        Err(e) => return (false, json!({"error": e.to_string()})),
    };
    match instanton::solve_instanton(&model, &curve, &SolveOptions { m, ..Default::default() }) {
        Ok(sol) => {
            let r = &sol.report;
            let pass = r.tau_sup_after <= 1e-10
                && r.associative_nodes == r.nodes
                && (r.min_calibration - 1.0).abs() <= 1e-8
                && (r.max_calibration - 1.0).abs() <= 1e-8
                && r.boundary_defect <= 1e-12
                && r.dbar_after <= 1e-4 * r.dbar_before;
            (pass, json!({"report": r, "certificate": sol.certificate}))
        }
        Err(e) => (false, json!({"error": e.to_string()})),
    }
}

pub fn eps_scaling(n: usize, m: usize) -> (bool, Value) {
    let opts = SweepOptions {
        n,
        m,
        ..Default::default()
    };
    match instanton::sweep(&opts) {
        Ok(rows) => {
            let mut ok = true;
            for q in 0..3 {
                let r: Vec<f64> = rows.iter().map(|row| row.ratios()[q]).collect();
                let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
                ok &= lo > 0.0 && hi <= 2.0 * lo;
            }
            (ok, json!({"rows": rows}))
        }
        Err(e) => (false, json!({"error": e.to_string()})),
    }
}

pub fn run_all(quick: bool, seed: u64) -> Vec<CheckResult> {
    let (samples, trials) = if quick { (1000, 100) } else { (10_000, 1000) };
    let (n_eig, m_eig) = if quick { (16, 8) } else { (32, 16) };
    let (n_inst, m_inst) = if quick { (8, 4) } else { (24, 8) };
    let n_sweep = if quick { 8 } else { 16 };
    vec![
        timed("algebra", || algebra(samples, seed)),
        timed("calibration_equivalence", || calibration_equivalence(samples, seed)),
        timed("almost_instanton", || almost_instanton(samples, seed)),
        timed("normal_bundle", || normal_bundle(samples / 10, seed)),
        timed("eigenvalue_bounds", || eigenvalue_bounds(n_eig, m_eig)),
        timed("discrete_identities", || discrete_identities(samples / 10, seed)),
        timed("kernel_counts", || kernel_counts(if quick { 8 } else { 16 })),
        timed("newton_kantorovich", || newton_kantorovich(trials, seed)),
        timed("instanton_correction", || instanton_correction(n_inst, m_inst, 1e-2, seed)),
        timed("eps_scaling", || eps_scaling(n_sweep, 8)),
    ]
}
