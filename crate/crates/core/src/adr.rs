//! Advection-diffusion-reaction correction for the characteristic error.
//!
//! Writing the error as `a · e^{-iωτ}` and substituting into the damped
//! Helmholtz equation gives
//!
//! ```text
//! -Δa + 2iω ∇τ·∇a + iω(Δτ) a + ω²(|∇τ|² - s²) a + iωγs² a = r e^{iωτ}
//! ```
//!
//! The advection term is discretized with first-order upwind differences so the
//! coarse ADR grids keep their h-ellipticity. The system is solved
//! approximately by one V-cycle with GMRES(3) smoothing.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::eikonal::{restrict_phase, PhaseField};
use crate::direct::BandedLu;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid2D;
use crate::hierarchy::Level;
use crate::linear::LinearOperator;
use crate::smoothers::gmres_in_place;
use crate::transfer::{prolong_add_slice, restrict_slice};

/// Discretization of the first-order term `∇τ·∇a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionScheme {
    #[default]
    Upwind,
    /// Central differences; kept for the discretization ablation only.
    Central,
}

/// Per-node advection stencil `(west, east, south, north, centre)` for `∇τ·∇a`.
pub fn advection_stencil(tx: f64, ty: f64, h: f64, scheme: AdvectionScheme) -> [f64; 5] {
    match scheme {
        AdvectionScheme::Upwind => {
            let inv = 1.0 / (2.0 * h);
            [
                (-tx - tx.abs()) * inv,
                (tx - tx.abs()) * inv,
                (-ty - ty.abs()) * inv,
                (ty - ty.abs()) * inv,
                2.0 * (tx.abs() + ty.abs()) * inv,
            ]
        }
        AdvectionScheme::Central => {
            let inv = 1.0 / (2.0 * h);
            [-tx * inv, tx * inv, -ty * inv, ty * inv, 0.0]
        }
    }
}

/// Five-point operator with variable coefficients, applied as
/// `Σ_j c^j ⊙ shift_j(a)` with zero padding outside the frame.
#[derive(Debug, Clone)]
pub struct AdrLevelOp {
    grid: Grid2D,
    omega: f64,
    west: Vec<Complex64>,
    east: Vec<Complex64>,
    south: Vec<Complex64>,
    north: Vec<Complex64>,
    center: Vec<Complex64>,
    max_abs_grad: f64,
}

/// Extra diagonal shifts carried over from the Helmholtz operator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReactionShift {
    /// `γ₀ = ratio · ω²s²`.
    pub shift_ratio: f64,
    /// Constant `iβ`.
    pub beta: f64,
}

impl AdrLevelOp {
    /// Upwind (or central) ADR operator for `phase` on `level`'s grid.
    pub fn build(
        level: &Level,
        omega: f64,
        phase: &PhaseField,
        scheme: AdvectionScheme,
        shift: ReactionShift,
    ) -> Result<Self> {
        let grid = level.grid;
        grid.check_same(&phase.grid)?;
        let h = grid.h();
        let inv_h2 = 1.0 / (h * h);
        let n = grid.len();
        let mut op = Self::empty(grid, omega);
        let w2 = omega * omega;
        let two_i_omega = Complex64::new(0.0, 2.0 * omega);
        for k in 0..n {
            let (tx, ty) = (phase.tau_x.values()[k], phase.tau_y.values()[k]);
            let lap = phase.lap_tau.values()[k];
            let s2 = level.s2.values()[k];
            let g = level.gamma.values()[k];
            let [cw, ce, cs, cn, cc] = advection_stencil(tx, ty, h, scheme);
            op.west[k] = Complex64::new(-inv_h2, 0.0) + two_i_omega * cw;
            op.east[k] = Complex64::new(-inv_h2, 0.0) + two_i_omega * ce;
            op.south[k] = Complex64::new(-inv_h2, 0.0) + two_i_omega * cs;
            op.north[k] = Complex64::new(-inv_h2, 0.0) + two_i_omega * cn;
            op.center[k] = Complex64::new(4.0 * inv_h2 + w2 * (tx * tx + ty * ty - s2), 0.0)
                + two_i_omega * cc
                + Complex64::new(
                    0.0,
                    omega * lap + omega * g * s2 + shift.shift_ratio * w2 * s2 + shift.beta,
                );
            op.max_abs_grad = op.max_abs_grad.max(tx.abs()).max(ty.abs());
        }
        Ok(op)
    }

    /// Ray equation `Δa + 2iω k·∇a + iωγs²a` with constant direction `k`,
    /// upwind in the sign of `k`.
    pub fn ray_as_printed(level: &Level, omega: f64, k: (f64, f64)) -> Self {
        let grid = level.grid;
        let h = grid.h();
        let inv_h2 = 1.0 / (h * h);
        let mut op = Self::empty(grid, omega);
        let [cw, ce, cs, cn, cc] = advection_stencil(k.0, k.1, h, AdvectionScheme::Upwind);
        let two_i_omega = Complex64::new(0.0, 2.0 * omega);
        for kk in 0..grid.len() {
            let s2 = level.s2.values()[kk];
            let g = level.gamma.values()[kk];
            op.west[kk] = Complex64::new(inv_h2, 0.0) + two_i_omega * cw;
            op.east[kk] = Complex64::new(inv_h2, 0.0) + two_i_omega * ce;
            op.south[kk] = Complex64::new(inv_h2, 0.0) + two_i_omega * cs;
            op.north[kk] = Complex64::new(inv_h2, 0.0) + two_i_omega * cn;
            op.center[kk] = Complex64::new(-4.0 * inv_h2, omega * g * s2) + two_i_omega * cc;
        }
        op.max_abs_grad = k.0.abs().max(k.1.abs());
        op
    }

    fn empty(grid: Grid2D, omega: f64) -> Self {
        let z = vec![Complex64::default(); grid.len()];
        Self {
            grid,
            omega,
            west: z.clone(),
            east: z.clone(),
            south: z.clone(),
            north: z.clone(),
            center: z,
            max_abs_grad: 0.0,
        }
    }

    /// Operator from explicit coefficient fields `(north, west, centre, east, south)`.
    pub fn from_coefficients(grid: Grid2D, omega: f64, coeffs: [Vec<Complex64>; 5]) -> Result<Self> {
        if coeffs.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidGrid("coefficient field size mismatch".into()));
        }
        let [north, west, center, east, south] = coeffs;
        Ok(Self {
            grid,
            omega,
            west,
            east,
            south,
            north,
            center,
            max_abs_grad: 0.0,
        })
    }

    /// Coefficient fields `(north, west, centre, east, south)`.
    pub fn coefficients(&self) -> [&[Complex64]; 5] {
        [&self.north, &self.west, &self.center, &self.east, &self.south]
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn apply(&self, a: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(a.grid())?;
        Ok(self.apply_field(a))
    }

    pub(crate) fn apply_slice(&self, a: &[Complex64], out: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx {
                let k = row + i;
                let mut acc = self.center[k] * a[k];
                if i > 0 {
                    acc += self.west[k] * a[k - 1];
                }
                if i + 1 < nx {
                    acc += self.east[k] * a[k + 1];
                }
                if j > 0 {
                    acc += self.south[k] * a[k - nx];
                }
                if j + 1 < ny {
                    acc += self.north[k] * a[k + nx];
                }
                out[k] = acc;
            }
        }
    }

    /// Cell Péclet number `2ωh · max(|τ_x|, |τ_y|)`.
    pub fn peclet(&self) -> f64 {
        2.0 * self.omega * self.grid.h() * self.max_abs_grad
    }
}

impl LinearOperator for AdrLevelOp {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.apply_slice(x, y);
    }
}

/// Péclet diagnostic of a built operator.
pub fn check_peclet(op: &AdrLevelOp) -> f64 {
    op.peclet()
}

/// Settings of the ADR V-cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdrCycleConfig {
    /// GMRES steps for pre- and post-smoothing.
    pub smoother_steps: usize,
    /// GMRES steps on the coarsest ADR grid.
    pub coarse_steps: usize,
    /// Maximum V-cycles per solve; extra cycles stop once `target` is met.
    pub cycles: usize,
    /// Relative residual the approximate solve aims for.
    pub target: f64,
    /// Solve the top ADR system exactly by banded elimination instead of V-cycles.
    pub direct: bool,
}

impl Default for AdrCycleConfig {
    fn default() -> Self {
        Self {
            smoother_steps: 3,
            coarse_steps: 10,
            cycles: 1,
            target: 0.1,
            direct: false,
        }
    }
}

impl AdrCycleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cycles == 0 || self.smoother_steps == 0 || self.coarse_steps == 0 {
            return Err(Error::InvalidParameter("ADR cycle counts must be >= 1".into()));
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ADR target must lie in (0, 1), got {}",
                self.target
            )));
        }
        Ok(())
    }
}

/// V-cycle solver on a stack of rediscretized ADR operators (finest first).
#[derive(Debug, Clone)]
pub struct AdrSolver {
    levels: Vec<AdrLevelOp>,
    cfg: AdrCycleConfig,
    lu: Option<Arc<BandedLu>>,
}

impl AdrSolver {
    pub fn new(levels: Vec<AdrLevelOp>, cfg: AdrCycleConfig) -> Result<Self> {
        cfg.validate()?;
        if levels.is_empty() {
            return Err(Error::InvalidParameter("ADR solver needs at least one level".into()));
        }
        for w in levels.windows(2) {
            if !w[0].grid.is_coarsening_of(&w[1].grid) {
                return Err(Error::GridMismatch {
                    expected: format!("coarsening of {}", w[0].grid.describe()),
                    found: w[1].grid.describe(),
                });
            }
        }
        let lu = if cfg.direct {
            Some(Arc::new(BandedLu::from_adr(&levels[0])?))
        } else {
            None
        };
        Ok(Self { levels, cfg, lu })
    }

    /// Rediscretize on `levels` with the phase injected onto each grid.
    pub fn from_phase(
        levels: &[Level],
        omega: f64,
        phase: &PhaseField,
        scheme: AdvectionScheme,
        shift: ReactionShift,
        cfg: AdrCycleConfig,
    ) -> Result<Self> {
        let ops = levels
            .iter()
            .map(|lev| {
                let p = if lev.grid.same_as(&phase.grid) {
                    phase.clone()
                } else {
                    restrict_phase(phase, &lev.grid)?
                };
                AdrLevelOp::build(lev, omega, &p, scheme, shift)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops, cfg)
    }

    pub fn levels(&self) -> &[AdrLevelOp] {
        &self.levels
    }

    pub fn config(&self) -> &AdrCycleConfig {
        &self.cfg
    }

    /// Approximate solve from a zero initial guess.
    pub fn solve(&self, rhs: &ComplexField) -> Result<ComplexField> {
        self.levels[0].grid.check_same(rhs.grid())?;
        let mut a = vec![Complex64::default(); rhs.values().len()];
        self.solve_slice(rhs.values(), &mut a);
        Ok(ComplexField::from_raw(*rhs.grid(), a))
    }

    pub(crate) fn solve_slice(&self, rhs: &[Complex64], a: &mut [Complex64]) {
        if let Some(lu) = &self.lu {
            a.copy_from_slice(rhs);
            lu.solve_slice(a);
            return;
        }
        let rnorm = crate::field::norm2(rhs);
        for c in 0..self.cfg.cycles {
            self.vcycle(0, rhs, a);
            if c + 1 < self.cfg.cycles {
                let op = &self.levels[0];
                let mut r = vec![Complex64::default(); a.len()];
                op.apply_slice(a, &mut r);
                let res = r
                    .iter()
                    .zip(rhs)
                    .map(|(ar, b)| (b - ar).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if res <= self.cfg.target * rnorm {
                    break;
                }
            }
        }
    }

    fn vcycle(&self, l: usize, rhs: &[Complex64], a: &mut [Complex64]) {
        let op = &self.levels[l];
        let apply = |x: &[Complex64], y: &mut [Complex64]| op.apply_slice(x, y);
        if l + 1 == self.levels.len() {
            gmres_in_place(apply, rhs, a, self.cfg.coarse_steps);
            return;
        }
        gmres_in_place(apply, rhs, a, self.cfg.smoother_steps);
        let mut r = vec![Complex64::default(); a.len()];
        op.apply_slice(a, &mut r);
        for (rk, bk) in r.iter_mut().zip(rhs) {
            *rk = bk - *rk;
        }
        let coarse = &self.levels[l + 1];
        let mut rc = vec![Complex64::default(); coarse.grid.len()];
        restrict_slice(&op.grid, &coarse.grid, &r, &mut rc);
        let mut ec = vec![Complex64::default(); coarse.grid.len()];
        self.vcycle(l + 1, &rc, &mut ec);
        prolong_add_slice(&coarse.grid, &op.grid, &ec, a);
        gmres_in_place(apply, rhs, a, self.cfg.smoother_steps);
    }

    /// `‖rhs - A a‖ / ‖rhs‖` on the top ADR grid.
    pub fn relative_residual(&self, rhs: &ComplexField, a: &ComplexField) -> Result<f64> {
        let ar = self.levels[0].apply(a)?;
        let r = rhs.sub(&ar)?;
        Ok(r.norm2() / rhs.norm2())
    }
}

/// Correction `e = a ⊙ remod` with `a` the approximate ADR solution for `r ⊙ demod`.
#[derive(Debug, Clone)]
pub struct ModulatedCorrector {
    solver: AdrSolver,
    demod: Vec<Complex64>,
    remod: Vec<Complex64>,
}

impl ModulatedCorrector {
    /// Phase correction: `r̂ = r e^{iωτ}`, `e = a e^{-iωτ}`.
    pub fn from_phase(solver: AdrSolver, phase: &PhaseField, omega: f64) -> Result<Self> {
        let top = solver.levels[0].grid;
        let p = if top.same_as(&phase.grid) {
            phase.clone()
        } else {
            restrict_phase(phase, &top)?
        };
        let demod: Vec<Complex64> = p
            .tau
            .values()
            .iter()
            .map(|&t| Complex64::from_polar(1.0, omega * t))
            .collect();
        let remod = demod.iter().map(|z| z.conj()).collect();
        Ok(Self {
            solver,
            demod,
            remod,
        })
    }

    /// Explicit modulation factors (`demod` applied to the residual, `remod` to the amplitude).
    pub fn with_factors(solver: AdrSolver, demod: Vec<Complex64>, remod: Vec<Complex64>) -> Result<Self> {
        let n = solver.levels[0].grid.len();
        if demod.len() != n || remod.len() != n {
            return Err(Error::InvalidGrid("modulation size mismatch".into()));
        }
        Ok(Self {
            solver,
            demod,
            remod,
        })
    }

    pub fn solver(&self) -> &AdrSolver {
        &self.solver
    }

    pub fn grid(&self) -> &Grid2D {
        &self.solver.levels[0].grid
    }

    pub fn demodulate(&self, r: &ComplexField) -> Result<ComplexField> {
        self.grid().check_same(r.grid())?;
        Ok(r.hadamard(&self.demod))
    }

    pub fn remodulate(&self, a: &ComplexField) -> Result<ComplexField> {
        self.grid().check_same(a.grid())?;
        Ok(a.hadamard(&self.remod))
    }

    pub fn correction(&self, r: &ComplexField) -> Result<ComplexField> {
        self.grid().check_same(r.grid())?;
        let mut e = vec![Complex64::default(); r.values().len()];
        self.correction_slice(r.values(), &mut e);
        Ok(ComplexField::from_raw(*r.grid(), e))
    }

    /// `‖r̂ - L a‖ / ‖r̂‖` for the amplitude behind correction `e` of residual `r`.
    pub(crate) fn solve_accuracy(&self, r: &[Complex64], e: &[Complex64]) -> f64 {
        let rhat: Vec<Complex64> = r.iter().zip(&self.demod).map(|(a, b)| a * b).collect();
        let a: Vec<Complex64> = e.iter().zip(&self.demod).map(|(a, b)| a * b).collect();
        let mut la = vec![Complex64::default(); a.len()];
        self.solver.levels[0].apply_slice(&a, &mut la);
        let num: f64 = la.iter().zip(&rhat).map(|(x, y)| (y - x).norm_sqr()).sum::<f64>().sqrt();
        num / crate::field::norm2(&rhat)
    }

    pub(crate) fn correction_slice(&self, r: &[Complex64], e: &mut [Complex64]) {
        let rhat: Vec<Complex64> = r.iter().zip(&self.demod).map(|(a, b)| a * b).collect();
        e.iter_mut().for_each(|v| *v = Complex64::default());
        self.solver.solve_slice(&rhat, e);
        for (v, m) in e.iter_mut().zip(&self.remod) {
            *v *= m;
        }
    }
}

/// Phase-modulated ADR correction of a level residual: `r̂ = r e^{iωτ}`,
/// solve the ADR system, return `a e^{-iωτ}`.
pub fn adr_correction(r: &ComplexField, corrector: &ModulatedCorrector) -> Result<ComplexField> {
    corrector.correction(r)
}

/// Sum of independent corrections from one residual, accumulated in index order.
pub(crate) fn summed_corrections(cs: &[ModulatedCorrector], r: &[Complex64], out: &mut [Complex64]) {
    let parts: Vec<Vec<Complex64>> = cs
        .par_iter()
        .map(|c| {
            let mut e = vec![Complex64::default(); r.len()];
            c.correction_slice(r, &mut e);
            e
        })
        .collect();
    out.iter_mut().for_each(|v| *v = Complex64::default());
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
}
