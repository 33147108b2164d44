//! Relaxation schemes: damped Jacobi, Chebyshev semi-iteration on the normal
//! equations, and a fixed-length GMRES.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{axpy, dot, norm2, ComplexField};
use crate::helmholtz::HelmholtzOp;
use crate::linear::LinearOperator;
use crate::spectral::chebyshev_inverse_steps;

/// Window `[λ_max/α, λ_max]` and step count of a Chebyshev semi-iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyParams {
    pub alpha: f64,
    pub lambda_max: f64,
    pub q_steps: usize,
}

impl ChebyParams {
    pub fn new(alpha: f64, lambda_max: f64, q_steps: usize) -> Result<Self> {
        let p = Self {
            alpha,
            lambda_max,
            q_steps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if !(self.lambda_max.is_finite() && self.lambda_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive, got {}",
                self.lambda_max
            )));
        }
        Ok(())
    }
}

/// Per-level relaxation choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoother {
    Jacobi { weight: f64, steps: usize },
    Chebyshev(ChebyParams),
    None,
}

/// `u ← u + ω D⁻¹(g - A u)`, `steps` times.
pub fn jacobi_sweep(
    op: &HelmholtzOp,
    g: &ComplexField,
    u: &ComplexField,
    omega: f64,
    steps: usize,
) -> Result<ComplexField> {
    op.grid().check_same(g.grid())?;
    op.grid().check_same(u.grid())?;
    op.check_diagonal()?;
    let mut out = u.clone();
    let mut scratch = vec![Complex64::default(); u.values().len()];
    jacobi_in_place(op, g.values(), out.values_mut(), omega, steps, &mut scratch);
    Ok(out)
}

pub(crate) fn jacobi_in_place(
    op: &HelmholtzOp,
    g: &[Complex64],
    u: &mut [Complex64],
    omega: f64,
    steps: usize,
    scratch: &mut [Complex64],
) {
    if omega == 0.0 {
        return;
    }
    let diag = op.diagonal();
    for _ in 0..steps {
        op.apply_slice(u, scratch, false);
        for k in 0..u.len() {
            u[k] += omega * (g[k] - scratch[k]) / diag[k];
        }
    }
}

/// Power-iteration estimate of the largest eigenvalue of `A^*A`, inflated by 5%.
///
/// Thirty iterations from a fixed-seed random start; deterministic.
pub fn estimate_lambda_max(op: &HelmholtzOp) -> f64 {
    power_lambda_max(
        op.grid().len(),
        |x, y| {
            let mut t = vec![Complex64::default(); x.len()];
            op.apply_slice(x, &mut t, false);
            op.apply_slice(&t, y, true);
        },
        LAMBDA_SEED,
    )
}

const LAMBDA_SEED: u64 = 0x5eed_1a4b;
const POWER_ITERS: usize = 30;
const LAMBDA_MARGIN: f64 = 1.05;

pub(crate) fn power_lambda_max(
    n: usize,
    normal_op: impl Fn(&[Complex64], &mut [Complex64]),
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut y = vec![Complex64::default(); n];
    let mut rq = 0.0;
    for _ in 0..POWER_ITERS {
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        normal_op(&x, &mut y);
        rq = dot(&x, &y).re;
        std::mem::swap(&mut x, &mut y);
    }
    rq * LAMBDA_MARGIN
}

/// `q_steps` iterations of `u ← u + β_q (A^*g - A^*A u)` with `1/β_q` the
/// Chebyshev roots on `[λ_max/α, λ_max]`. The error becomes `p(A^*A) e₀`.
pub fn chebyshev_semi_sweep(
    op: &HelmholtzOp,
    g: &ComplexField,
    u: &ComplexField,
    params: &ChebyParams,
) -> Result<ComplexField> {
    params.validate()?;
    op.grid().check_same(g.grid())?;
    op.grid().check_same(u.grid())?;
    let mut out = u.clone();
    let n = u.values().len();
    let mut s1 = vec![Complex64::default(); n];
    let mut s2 = vec![Complex64::default(); n];
    let mut s3 = vec![Complex64::default(); n];
    chebyshev_in_place(op, g.values(), out.values_mut(), params, &mut s1, &mut s2, &mut s3);
    Ok(out)
}

pub(crate) fn chebyshev_in_place(
    op: &HelmholtzOp,
    g: &[Complex64],
    u: &mut [Complex64],
    params: &ChebyParams,
    adj_g: &mut [Complex64],
    t1: &mut [Complex64],
    t2: &mut [Complex64],
) {
    if params.q_steps == 0 {
        return;
    }
    op.apply_slice(g, adj_g, true);
    for inv in chebyshev_inverse_steps(params.lambda_max, params.alpha, params.q_steps) {
        let beta = 1.0 / inv;
        op.apply_slice(u, t1, false);
        op.apply_slice(t1, t2, true);
        for k in 0..u.len() {
            u[k] += beta * (adj_g[k] - t2[k]);
        }
    }
}

/// Outcome of a fixed-length GMRES run.
#[derive(Debug, Clone)]
pub struct GmresRun {
    pub solution: ComplexField,
    /// Least-squares residual norm after each inner step, starting with `‖g - A u₀‖`.
    pub residuals: Vec<f64>,
}

/// `m` Arnoldi steps of GMRES from `u0` (no restart), complex arithmetic.
/// Stops early on a happy breakdown with the exact Krylov solution.
pub fn gmres_m(
    op: &dyn LinearOperator,
    g: &ComplexField,
    u0: &ComplexField,
    m: usize,
) -> Result<GmresRun> {
    if m == 0 {
        return Err(Error::InvalidParameter("GMRES needs m >= 1".into()));
    }
    op.grid().check_same(g.grid())?;
    op.grid().check_same(u0.grid())?;
    let mut u = u0.values().to_vec();
    let residuals = gmres_in_place(
        |x, y| op.apply_into(x, y),
        g.values(),
        &mut u,
        m,
    );
    Ok(GmresRun {
        solution: ComplexField::from_raw(*u0.grid(), u),
        residuals,
    })
}

/// Core GMRES(m) cycle on slices; returns the residual-norm history.
pub(crate) fn gmres_in_place(
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    g: &[Complex64],
    u: &mut [Complex64],
    m: usize,
) -> Vec<f64> {
    let n = u.len();
    let mut r = vec![Complex64::default(); n];
    apply(u, &mut r);
    for (rk, gk) in r.iter_mut().zip(g) {
        *rk = gk - *rk;
    }
    let beta = norm2(&r);
    let mut history = vec![beta];
    if beta == 0.0 {
        return history;
    }
    r.iter_mut().for_each(|v| *v /= beta);
    let mut basis = vec![r];
    // Hessenberg columns after rotation, stored as upper-triangular R.
    let mut rmat: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(m);
    let mut rhs = vec![Complex64::new(beta, 0.0)];
    let breakdown_tol = 1e-14 * beta;
    for j in 0..m {
        let mut w = vec![Complex64::default(); n];
        apply(&basis[j], &mut w);
        let mut hcol = vec![Complex64::default(); j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(v, &w);
            hcol[i] = hij;
            axpy(&mut w, -hij, v);
        }
        let hnext = norm2(&w);
        hcol[j + 1] = Complex64::new(hnext, 0.0);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, b) = (hcol[i], hcol[i + 1]);
            hcol[i] = c * a + s * b;
            hcol[i + 1] = -s.conj() * a + c * b;
        }
        let (c, s) = givens(hcol[j], hcol[j + 1]);
        hcol[j] = c * hcol[j] + s * hcol[j + 1];
        hcol[j + 1] = Complex64::default();
        rot.push((c, s));
        let top = rhs[j];
        rhs[j] = c * top;
        rhs.push(-s.conj() * top);
        hcol.truncate(j + 1);
        rmat.push(hcol);
        history.push(rhs[j + 1].norm());
        if hnext <= breakdown_tol {
            break;
        }
        if j + 1 < m {
            w.iter_mut().for_each(|v| *v /= hnext);
            basis.push(w);
        }
    }
    let y = back_substitute(&rmat, &rhs);
    for (yi, v) in y.iter().zip(&basis) {
        axpy(u, *yi, v);
    }
    history
}

/// Complex Givens rotation `(c, s)` with real `c` zeroing `b` in `[a; b]`.
pub(crate) fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, Complex64::default());
    }
    if na == 0.0 {
        return (0.0, (b.conj() / nb));
    }
    let r = na.hypot(nb);
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

/// Solve `R y = rhs[..k]` with `R` stored column-wise (column `j` has `j+1` entries).
pub(crate) fn back_substitute(rcols: &[Vec<Complex64>], rhs: &[Complex64]) -> Vec<Complex64> {
    let k = rcols.len();
    let mut y = vec![Complex64::default(); k];
    for i in (0..k).rev() {
        let mut acc = rhs[i];
        for j in i + 1..k {
            acc -= rcols[j][i] * y[j];
        }
        y[i] = acc / rcols[i][i];
    }
    y
}
