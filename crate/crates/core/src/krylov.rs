//! Restarted, right-preconditioned flexible GMRES.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{axpy, dot, norm2, ComplexField};
use crate::linear::LinearOperator;
use crate::smoothers::{back_substitute, givens};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgmresConfig {
    pub restart: usize,
    /// Relative residual target `‖g - Au‖ / ‖g‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FgmresConfig {
    fn default() -> Self {
        Self {
            restart: 20,
            tol: 1e-6,
            max_iter: 2000,
        }
    }
}

impl FgmresConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 {
            return Err(Error::InvalidParameter("FGMRES restart must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Result of an outer solve.
#[derive(Debug, Clone)]
pub struct FgmresOutcome {
    pub solution: ComplexField,
    /// Relative residual before the first and after every iteration. Inside a restart
    /// cycle the entries are the least-squares estimates; the last entry of each cycle
    /// is the true residual.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// True relative residual of `solution`.
    pub final_residual: f64,
}

/// Solve `A u = g` from a zero initial guess with right preconditioner `M⁻¹`.
///
/// Hitting `max_iter` is not an error; the outcome carries `converged = false`.
pub fn fgmres(
    a: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    g: &ComplexField,
    cfg: &FgmresConfig,
) -> Result<FgmresOutcome> {
    cfg.validate()?;
    a.grid().check_same(g.grid())?;
    precond.grid().check_same(g.grid())?;
    if !g.is_finite() {
        return Err(Error::NonFinite("right-hand side".into()));
    }
    let n = g.values().len();
    let gnorm = g.norm2();
    let mut u = vec![Complex64::default(); n];
    let mut history = vec![1.0];
    if gnorm == 0.0 {
        return Ok(FgmresOutcome {
            solution: ComplexField::zeros(*g.grid()),
            history,
            iterations: 0,
            converged: true,
            final_residual: 0.0,
        });
    }
    let gv = g.values();
    let residual = |u: &[Complex64], r: &mut [Complex64]| {
        a.apply_into(u, r);
        for (rk, gk) in r.iter_mut().zip(gv) {
            *rk = gk - *rk;
        }
    };
    let mut r = vec![Complex64::default(); n];
    residual(&u, &mut r);
    let mut rel = norm2(&r) / gnorm;
    let mut iterations = 0;
    while rel >= cfg.tol && iterations < cfg.max_iter {
        let beta = norm2(&r);
        let mut v0 = r.clone();
        v0.iter_mut().for_each(|x| *x /= beta);
        let mut basis = vec![v0];
        let mut zs: Vec<Vec<Complex64>> = Vec::with_capacity(cfg.restart);
        let mut rcols: Vec<Vec<Complex64>> = Vec::with_capacity(cfg.restart);
        let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(cfg.restart);
        let mut rhs = vec![Complex64::new(beta, 0.0)];
        for j in 0..cfg.restart {
            if iterations >= cfg.max_iter {
                break;
            }
            let mut z = vec![Complex64::default(); n];
            precond.apply_into(&basis[j], &mut z);
            let mut w = vec![Complex64::default(); n];
            a.apply_into(&z, &mut w);
            zs.push(z);
            let mut hcol = vec![Complex64::default(); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                hcol[i] = hij;
                axpy(&mut w, -hij, v);
            }
            let hnext = norm2(&w);
            hcol[j + 1] = Complex64::new(hnext, 0.0);
            for (i, &(c, s)) in rot.iter().enumerate() {
                let (x, y) = (hcol[i], hcol[i + 1]);
                hcol[i] = c * x + s * y;
                hcol[i + 1] = -s.conj() * x + c * y;
            }
            let (c, s) = givens(hcol[j], hcol[j + 1]);
            hcol[j] = c * hcol[j] + s * hcol[j + 1];
            hcol.truncate(j + 1);
            rot.push((c, s));
            let top = rhs[j];
            rhs[j] = c * top;
            rhs.push(-s.conj() * top);
            rcols.push(hcol);
            iterations += 1;
            let est = rhs[j + 1].norm() / gnorm;
            history.push(est);
            if !est.is_finite() {
                return Err(Error::NonFinite("FGMRES iterate".into()));
            }
            if est < cfg.tol || hnext <= 1e-14 * beta {
                break;
            }
            w.iter_mut().for_each(|x| *x /= hnext);
            basis.push(w);
        }
        let y = back_substitute(&rcols, &rhs);
        for (yi, z) in y.iter().zip(&zs) {
            axpy(&mut u, *yi, z);
        }
        residual(&u, &mut r);
        rel = norm2(&r) / gnorm;
        if let Some(last) = history.last_mut() {
            *last = rel;
        }
        if !rel.is_finite() {
            return Err(Error::NonFinite("FGMRES iterate".into()));
        }
        if rcols.is_empty() {
            break;
        }
    }
    Ok(FgmresOutcome {
        solution: ComplexField::from_raw(*g.grid(), u),
        history,
        iterations,
        converged: rel < cfg.tol,
        final_residual: rel,
    })
}
