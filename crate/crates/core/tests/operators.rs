mod common;

use common::*;
use nalgebra::{DMatrix, SymmetricEigen};
use waveadr::direct::{direct_solve, BandedLu};
use waveadr::helmholtz::HelmholtzOp;
use waveadr::hierarchy::{build_damping_mask, DepthPolicy, Hierarchy, Level};
use waveadr::linear::FnOperator;
use waveadr::smoothers::{chebyshev_semi_sweep, estimate_lambda_max, gmres_m, jacobi_sweep, ChebyParams};
use waveadr::spectral::{chebyshev_error_polynomial, model_eigenpairs, model_eigenvalue};
use waveadr::{Complex64, ComplexField, RealField, SlownessModel};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn level(n: usize, omega: f64, s2: impl Fn(usize, usize) -> f64, sponge: bool) -> Level {
    let grid = unit_square(n);
    Level {
        grid,
        s2: RealField::from_fn(grid, s2),
        gamma: if sponge {
            build_damping_mask(&grid, omega)
        } else {
            RealField::constant(grid, 0.0)
        },
    }
}

#[test]
fn model_eigenvalues_against_dense_eigensolver() {
    let h = 0.25;
    let lap = DMatrix::from_fn(3, 3, |i, j| match i.abs_diff(j) {
        0 => 2.0 / (h * h),
        1 => -1.0 / (h * h),
        _ => 0.0,
    });
    let mut dense: Vec<f64> = SymmetricEigen::new(lap).eigenvalues.iter().copied().collect();
    dense.sort_by(f64::total_cmp);
    assert!((dense[0] - 9.372583).abs() < 1e-6);
    assert!((model_eigenvalue(3, 1, 0.0) - dense[0]).abs() < 1e-10);

    let k = 8.0 * std::f64::consts::PI;
    let n = 47;
    let h = 1.0 / 48.0;
    let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 / (h * h) - k * k,
        1 => -1.0 / (h * h),
        _ => 0.0,
    });
    let dense_neg = SymmetricEigen::new(a).eigenvalues.iter().filter(|v| **v < 0.0).count();
    let closed_neg = model_eigenpairs(n, k).iter().filter(|p| p.lambda < 0.0).count();
    assert_eq!(dense_neg, closed_neg);
    assert!(closed_neg > 0);
}

#[test]
fn shifted_operator_has_imaginary_rayleigh_floor() {
    let omega = 30.0;
    let ratio = 0.01;
    let lev = level(15, omega, |i, j| 0.2 + 0.05 * ((i + j) % 5) as f64, false);
    let op = HelmholtzOp::new(&lev, omega, ratio);
    let floor = ratio * omega * omega * lev.s2.min();
    let mut r = rng(5);
    for _ in 0..10 {
        let u = random_field(lev.grid, &mut r);
        let q2 = u.inner(&op.apply(&u).unwrap()).unwrap();
        assert!(q2.im >= floor * u.norm2().powi(2) * (1.0 - 1e-12));
    }
}

#[test]
fn adjoint_apply_is_the_conjugate_transpose() {
    let omega = 40.0;
    let lev = level(15, omega, |i, _| 0.1 + 0.05 * (i % 4) as f64, true);
    let op = HelmholtzOp::new(&lev, omega, 0.01);
    let mut r = rng(9);
    for _ in 0..5 {
        let x = random_field(lev.grid, &mut r);
        let y = random_field(lev.grid, &mut r);
        let lhs = op.apply(&x).unwrap().inner(&y).unwrap();
        let rhs = x.inner(&op.apply_adjoint(&y).unwrap()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }
}

#[test]
fn jacobi_with_zero_weight_and_chebyshev_with_zero_steps_are_no_ops() {
    let omega = 20.0;
    let lev = level(7, omega, |_, _| 1.0, true);
    let op = HelmholtzOp::new(&lev, omega, 0.0);
    let mut r = rng(1);
    let g = random_field(lev.grid, &mut r);
    let u = random_field(lev.grid, &mut r);
    assert_eq!(jacobi_sweep(&op, &g, &u, 0.0, 3).unwrap(), u);
    let p = ChebyParams::new(3.0, 1e6, 0).unwrap();
    assert_eq!(chebyshev_semi_sweep(&op, &g, &u, &p).unwrap(), u);
}

#[test]
fn jacobi_error_follows_dense_propagation_matrix() {
    let omega = 18.0;
    let lev = level(15, omega, |i, j| 0.3 + 0.6 * (((i * j) % 9) as f64 / 9.0), true);
    let op = HelmholtzOp::new(&lev, omega, 0.0);
    let a = dense_helmholtz(&lev, omega, 0.0);
    let mut r = rng(21);
    let u_exact = random_field(lev.grid, &mut r);
    let g = ComplexField::from_values(lev.grid, (&a * to_dvector(u_exact.values())).as_slice().to_vec()).unwrap();
    let u0 = random_field(lev.grid, &mut r);
    let w = 0.55;
    let u1 = jacobi_sweep(&op, &g, &u0, w, 1).unwrap();
    let e0 = to_dvector(u0.sub(&u_exact).unwrap().values());
    let e1 = u1.sub(&u_exact).unwrap();
    let d = a.diagonal();
    let s = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        let id = if i == j { c(1.0) } else { c(0.0) };
        id - a[(i, j)] * c(w) / d[i]
    });
    let want = &s * e0;
    assert!(rel_diff(e1.values(), want.as_slice()) < 1e-10);
}

#[test]
fn lambda_max_estimate_brackets_the_dense_value() {
    // k close to 0: sponge-free Laplacian-dominated operator
    let omega = 1e-3;
    let lev = level(15, omega, |_, _| 1.0, false);
    let op = HelmholtzOp::new(&lev, omega, 0.0);
    let a = dense_helmholtz(&lev, omega, 0.0);
    let top = (a.adjoint() * &a).symmetric_eigenvalues().max();
    let est = estimate_lambda_max(&op);
    assert!(est >= top, "{est} < {top}");
    assert!(est <= 1.05 * 1.02 * top, "{est} > bound for {top}");
    assert_eq!(est.to_bits(), estimate_lambda_max(&op).to_bits());
}

#[test]
fn chebyshev_damps_an_eigenvector_by_the_polynomial_value() {
    let omega = 15.0;
    let lev = level(7, omega, |i, _| 0.5 + 0.05 * i as f64, true);
    let op = HelmholtzOp::new(&lev, omega, 0.0);
    let a = dense_helmholtz(&lev, omega, 0.0);
    let eig = (a.adjoint() * &a).symmetric_eigen();
    let lmax = eig.eigenvalues.max() * 1.01;
    let alpha = 4.0;
    let params = ChebyParams::new(alpha, lmax, 5).unwrap();
    let window_max = (0..=2000)
        .map(|t| lmax / alpha + (lmax - lmax / alpha) * t as f64 / 2000.0)
        .map(|x| chebyshev_error_polynomial(lmax, alpha, 5, x).abs())
        .fold(0.0, f64::max);
    let (idx, lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .find(|(_, v)| (lmax / alpha..=lmax).contains(*v))
        .map(|(i, v)| (i, *v))
        .unwrap();
    let v = eig.eigenvectors.column(idx).clone_owned();
    let e0 = ComplexField::from_values(lev.grid, v.as_slice().to_vec()).unwrap();
    let zero = ComplexField::zeros(lev.grid);
    let e1 = chebyshev_semi_sweep(&op, &zero, &e0, &params).unwrap();
    let ratio = e1.norm2() / e0.norm2();
    let p = chebyshev_error_polynomial(lmax, alpha, 5, lam).abs();
    assert!((ratio - p).abs() < 1e-8, "{ratio} vs {p}");
    assert!(ratio <= window_max + 1e-12);
}

#[test]
fn chebyshev_window_damps_upper_spectrum_of_1d_model() {
    // k = 8π, N = 47, α = 4.6: the normal-equation spectrum is λ_j²
    let (n, k, alpha) = (47, 8.0 * std::f64::consts::PI, 4.6);
    let sq: Vec<f64> = model_eigenpairs(n, k).iter().map(|p| p.lambda * p.lambda).collect();
    let lmax = sq.iter().copied().fold(0.0, f64::max);
    let worst = sq
        .iter()
        .filter(|&&x| x >= lmax / alpha)
        .map(|&x| chebyshev_error_polynomial(lmax, alpha, 5, x).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1.0, "{worst}");
}

#[test]
fn gmres_small_systems_are_exact() {
    // a scalar multiple of the identity is solved in one step
    let grid = unit_square(3);
    let z = Complex64::new(2.0, -1.0);
    let op = FnOperator::new(grid, move |x: &[Complex64], y: &mut [Complex64]| {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = z * xi;
        }
    });
    let mut r = rng(3);
    let g = random_field(grid, &mut r);
    let run = gmres_m(&op, &g, &ComplexField::zeros(grid), 1).unwrap();
    for (u, b) in run.solution.values().iter().zip(g.values()) {
        assert!((u - b / z).norm() < 1e-14);
    }

    let omega = 9.0;
    let lev = level(3, omega, |i, j| 0.3 + 0.1 * (i + j) as f64, true);
    let op = HelmholtzOp::new(&lev, omega, 0.0);
    let mut r = rng(2);
    let g = random_field(lev.grid, &mut r);
    let run = gmres_m(&op, &g, &ComplexField::zeros(lev.grid), 9).unwrap();
    let res = op.residual(&g, &run.solution).unwrap().norm2() / g.norm2();
    assert!(res <= 1e-12, "{res}");
}

#[test]
fn gmres_residuals_never_increase() {
    let omega = 60.0;
    let grid = unit_square(31);
    let s = SlownessModel::constant(grid, 1.0).unwrap();
    let h = Hierarchy::build(&s, omega, DepthPolicy::default()).unwrap();
    let op = HelmholtzOp::new(h.level(0), omega, 0.0);
    let mut r = rng(4);
    let g = random_field(grid, &mut r);
    let u0 = random_field(grid, &mut r);
    let run = gmres_m(&op, &g, &u0, 12).unwrap();
    assert!(run.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    let true_res = op.residual(&g, &run.solution).unwrap().norm2();
    assert!((true_res - run.residuals.last().unwrap()).abs() <= 1e-8 * true_res);
}

#[test]
fn restricted_slowness_is_the_nine_point_average() {
    let grid = unit_square(31);
    let s = SlownessModel::from_fn(grid, |i, j| 0.3 + 0.7 * (((i * 5 + j * 3) % 13) as f64 / 13.0)).unwrap();
    let h = Hierarchy::build(&s, 20.0, DepthPolicy::default()).unwrap();
    let fine = &h.level(0).s2;
    let coarse = &h.level(1).s2;
    let w = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
    let cg = coarse.grid();
    for cj in 0..cg.ny() {
        for ci in 0..cg.nx() {
            let (fi, fj) = (2 * ci + 1, 2 * cj + 1);
            let mut acc = 0.0;
            for (dj, row) in w.iter().enumerate() {
                for (di, wt) in row.iter().enumerate() {
                    acc += wt * fine.get(fi + di - 1, fj + dj - 1);
                }
            }
            let want = (acc / 16.0).clamp(0.0625, 1.0);
            assert!((coarse.get(ci, cj) - want).abs() < 1e-14);
        }
    }
}

#[test]
fn constant_slowness_survives_every_level() {
    let grid = unit_square(127);
    let s = SlownessModel::constant(grid, 0.8).unwrap();
    let h = Hierarchy::build(&s, 60.0, DepthPolicy::default()).unwrap();
    let sizes: Vec<usize> = h.levels().iter().map(|l| l.grid.nx()).collect();
    assert_eq!(sizes, vec![127, 63, 31, 15, 7, 3]);
    for l in h.levels() {
        assert!(l.s2.values().iter().all(|v| (v - 0.64).abs() <= 1e-14));
    }
}

#[test]
fn damping_mask_bounds_and_interior() {
    for (n, omega) in [(63, 20.0), (127, 62.8)] {
        let grid = unit_square(n);
        let g = build_damping_mask(&grid, omega);
        let width = 2.0 * std::f64::consts::PI / omega;
        for j in 0..n {
            for i in 0..n {
                let v = g.get(i, j);
                assert!((0.0..=omega).contains(&v));
                if grid.boundary_distance(i, j) >= width {
                    assert_eq!(v, 0.0);
                }
            }
        }
        let (ci, cj) = grid.center();
        assert_eq!(g.get(ci, cj), 0.0);
        assert!(g.get(0, cj) > 0.8 * omega);
    }
}

#[test]
fn banded_lu_matches_dense_lu() {
    let omega = 25.0;
    let lev = level(7, omega, |i, j| 0.25 + 0.1 * ((i + 2 * j) % 7) as f64, true);
    let op = HelmholtzOp::new(&lev, omega, 0.0);
    let a = dense_helmholtz(&lev, omega, 0.0);
    let mut r = rng(8);
    let g = random_field(lev.grid, &mut r);
    let want = a.lu().solve(&to_dvector(g.values())).unwrap();
    let got = direct_solve(&op, &g).unwrap();
    assert!(rel_diff(got.values(), want.as_slice()) < 1e-12);
    let lu = BandedLu::from_helmholtz(&op).unwrap();
    assert_eq!(lu.solve(&g).unwrap(), got);
}
