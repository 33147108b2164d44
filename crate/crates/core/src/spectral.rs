//! Closed-form spectral data of the 1D model problem
//! `A = (1/h²) tridiag(-1, 2, -1) - k² I`, `h = 1/(N+1)`.

use std::f64::consts::PI;

/// Eigenpair `(λ_j, v_j)` of the 1D model operator.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub j: usize,
    pub lambda: f64,
    pub vector: Vec<f64>,
}

/// `λ_j = (4/h²) sin²(jπh/2) - k²`, `v_j = {sin(i j π h)}_{i=1..N}`, for `j = 1..N`.
pub fn model_eigenpairs(n: usize, k: f64) -> Vec<Eigenpair> {
    let h = 1.0 / (n as f64 + 1.0);
    (1..=n)
        .map(|j| Eigenpair {
            j,
            lambda: model_eigenvalue(n, j, k),
            vector: (1..=n).map(|i| (i as f64 * j as f64 * PI * h).sin()).collect(),
        })
        .collect()
}

pub fn model_eigenvalue(n: usize, j: usize, k: f64) -> f64 {
    let h = 1.0 / (n as f64 + 1.0);
    let s = (j as f64 * PI * h / 2.0).sin();
    4.0 / (h * h) * s * s - k * k
}

const UNDEFINED: f64 = 1e-12;

/// Damped-Jacobi weight that annihilates the most oscillatory mode:
/// `ω₀ = (2 - k²h²)/(3 - k²h²)`. `None` when the denominator vanishes.
pub fn jacobi_omega0(k: f64, h: f64) -> Option<f64> {
    let kh2 = k * k * h * h;
    let den = 3.0 - kh2;
    (den.abs() >= UNDEFINED).then(|| (2.0 - kh2) / den)
}

/// Upper end of the convergent weight range once the coarse operator is
/// negative definite: `ω₁ = (2 - k²h²)/(2 sin²(πh/2) - k²h²/2)`.
pub fn jacobi_omega1(k: f64, h: f64) -> Option<f64> {
    let kh2 = k * k * h * h;
    let s = (PI * h / 2.0).sin();
    let den = 2.0 * s * s - kh2 / 2.0;
    (den.abs() >= UNDEFINED && (2.0 - kh2).abs() >= UNDEFINED).then(|| (2.0 - kh2) / den)
}

/// Damped-Jacobi amplification of mode `j`: `μ_j = 1 - ω(1 - 2cos(jπh)/(2 - k²h²))`.
pub fn jacobi_mu(n: usize, j: usize, k: f64, omega: f64) -> f64 {
    let h = 1.0 / (n as f64 + 1.0);
    1.0 - omega * (1.0 - 2.0 * (j as f64 * PI * h).cos() / (2.0 - k * k * h * h))
}

/// Reciprocal step lengths `1/β_q`: the `q_steps` Chebyshev roots on
/// `[λ_max/α, λ_max]`, in natural order `q = 0..q_steps`.
pub fn chebyshev_inverse_steps(lambda_max: f64, alpha: f64, q_steps: usize) -> Vec<f64> {
    let centre = 0.5 * lambda_max * (1.0 + 1.0 / alpha);
    let half = 0.5 * lambda_max * (1.0 - 1.0 / alpha);
    (0..q_steps)
        .map(|q| centre + half * (PI * (2 * q + 1) as f64 / (2 * q_steps) as f64).cos())
        .collect()
}

/// Error polynomial `p(x) = Π_q (1 - β_q x)` of the Chebyshev semi-iteration.
pub fn chebyshev_error_polynomial(lambda_max: f64, alpha: f64, q_steps: usize, x: f64) -> f64 {
    chebyshev_inverse_steps(lambda_max, alpha, q_steps)
        .iter()
        .map(|inv| 1.0 - x / inv)
        .product()
}
