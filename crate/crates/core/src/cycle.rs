//! The Wave-ADR V-cycle.
//!
//! Smoothing schedule, finest first:
//! - finest level: damped Jacobi with `ω₀`, one step before and after;
//! - coarsest level: Chebyshev (10 steps), then return;
//! - the level below the correction level (`kh ≈ 2`): no pre-smoothing;
//! - every other level: Chebyshev (5 steps) before and after.
//!
//! After post-smoothing on the correction level (`kh ≈ 1`) the characteristic
//! correction runs `M` times, each from a fresh residual.
//!
//! The finest-level Jacobi weight and the Chebyshev windows are fixed at setup,
//! so one cycle from a zero guess is a fixed linear map of the right-hand side.

use num_complex::Complex64;

use crate::adr::{
    summed_corrections, AdrCycleConfig, AdrLevelOp, AdrSolver, AdvectionScheme, ModulatedCorrector,
    ReactionShift,
};
use crate::eikonal::PhaseField;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid2D;
use crate::helmholtz::HelmholtzOp;
use crate::hierarchy::Hierarchy;
use crate::linear::LinearOperator;
use crate::smoothers::{chebyshev_in_place, estimate_lambda_max, jacobi_in_place, ChebyParams};
use crate::spectral::jacobi_omega0;
use crate::transfer::{prolong_add_slice, restrict_slice};

/// Default Chebyshev window divisor before tuning.
pub const DEFAULT_ALPHA: f64 = 3.0;

/// Which level carries the characteristic correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdrLevel {
    /// The level whose `ω h` (with the largest slowness) is closest to 1 within `[0.5, 1.5]`.
    #[default]
    Auto,
    /// 1-based level index (1 = finest).
    Fixed(usize),
}

/// Cycle settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveAdrConfig {
    pub adr_level: AdrLevel,
    /// Number of sequential correction steps `M` (0 gives the plain wave cycle).
    pub correction_steps: usize,
    /// Chebyshev post-smoothing on the level without pre-smoothing.
    pub level3_post_smoothing: bool,
    pub jacobi_steps: usize,
    pub cheby_steps: usize,
    pub coarsest_cheby_steps: usize,
    pub adr: AdrCycleConfig,
    pub scheme: AdvectionScheme,
    /// Drop negative `Δτ` from the ADR reaction term (see
    /// [`PhaseField::with_nonnegative_laplacian`]).
    pub clamp_focusing: bool,
}

impl Default for WaveAdrConfig {
    fn default() -> Self {
        Self {
            adr_level: AdrLevel::Auto,
            correction_steps: 8,
            level3_post_smoothing: true,
            jacobi_steps: 1,
            cheby_steps: 5,
            coarsest_cheby_steps: 10,
            adr: AdrCycleConfig::default(),
            scheme: AdvectionScheme::Upwind,
            clamp_focusing: true,
        }
    }
}

/// Form of the Wave-Ray ray equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RayEquation {
    /// `-Δa - 2iω k·∇a + ω²(1 - s²)a + iωγs²a = r e^{-iωk·x}`, obtained by substituting
    /// `a e^{iωk·x}` into the damped operator (the ADR operator with a linear phase).
    #[default]
    Consistent,
    /// `Δa + 2iω k·∇a + iωγs²a = r e^{-iωk·x}`.
    AsPrinted,
}

/// Ray directions `θ_m = (m - 1) 2π / M`, `m = 1..M`.
pub fn ray_directions(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let th = i as f64 * 2.0 * std::f64::consts::PI / m as f64;
            (th.cos(), th.sin())
        })
        .collect()
}

/// Optional recorders for [`WaveAdrSolver::cycle_traced`].
#[derive(Default)]
pub struct CycleTrace<'a> {
    /// Called after the pre-smoothing stage of every level with
    /// `(level, iterate before, iterate after)`; levels are 1-based.
    pub presmoothing: Option<&'a mut dyn FnMut(usize, &[Complex64], &[Complex64])>,
    /// Relative residual of every ADR solve, `‖r̂ - L a‖ / ‖r̂‖`.
    pub adr_accuracy: Option<Vec<f64>>,
    /// Correction-level residual norm after the correction steps.
    pub correction_residuals: Option<Vec<f64>>,
    /// Level residual `r` handed to every phase correction.
    pub correction_inputs: Option<Vec<ComplexField>>,
}

#[derive(Debug, Clone)]
enum Correction {
    None,
    Phase(ModulatedCorrector),
    Rays(Vec<ModulatedCorrector>),
}

/// Set-up data of the wave cycle plus its characteristic correction.
#[derive(Debug, Clone)]
pub struct WaveAdrSolver {
    hierarchy: Hierarchy,
    ops: Vec<HelmholtzOp>,
    lambda_max: Vec<f64>,
    jacobi_weight: f64,
    alphas: Vec<f64>,
    adr_level: usize,
    skip_level: usize,
    correction: Correction,
    cfg: WaveAdrConfig,
}

impl WaveAdrSolver {
    /// Wave cycle with the phase-based ADR correction.
    pub fn new(hierarchy: Hierarchy, phase: &PhaseField, cfg: WaveAdrConfig) -> Result<Self> {
        let mut s = Self::wave_only(hierarchy, cfg)?;
        let l = s.adr_level;
        let clamped;
        let phase = if cfg.clamp_focusing {
            clamped = phase.with_nonnegative_laplacian();
            &clamped
        } else {
            phase
        };
        let shift = ReactionShift {
            shift_ratio: s.hierarchy.shift_ratio(),
            beta: 0.0,
        };
        let solver = AdrSolver::from_phase(
            &s.hierarchy.levels()[l..],
            s.hierarchy.omega(),
            phase,
            cfg.scheme,
            shift,
            cfg.adr,
        )?;
        s.correction = Correction::Phase(ModulatedCorrector::from_phase(
            solver,
            phase,
            s.hierarchy.omega(),
        )?);
        Ok(s)
    }

    /// Wave cycle plus `rays` plane-wave ray corrections accumulated from one residual.
    pub fn wave_ray(
        hierarchy: Hierarchy,
        rays: usize,
        form: RayEquation,
        cfg: WaveAdrConfig,
    ) -> Result<Self> {
        if rays == 0 {
            return Err(Error::InvalidParameter("Wave-Ray needs M >= 1".into()));
        }
        let mut s = Self::wave_only(hierarchy, cfg)?;
        let l = s.adr_level;
        let omega = s.hierarchy.omega();
        let levels = &s.hierarchy.levels()[l..];
        let top = levels[0].grid;
        let mut cs = Vec::with_capacity(rays);
        for k in ray_directions(rays) {
            let corrector = match form {
                RayEquation::Consistent => {
                    // a e^{iωk·x} = a e^{-iωτ} with τ = -k·x
                    let d = (-k.0, -k.1);
                    let ops = levels
                        .iter()
                        .map(|lev| {
                            AdrLevelOp::build(
                                lev,
                                omega,
                                &PhaseField::linear(lev.grid, d),
                                AdvectionScheme::Upwind,
                                ReactionShift {
                                    shift_ratio: s.hierarchy.shift_ratio(),
                                    beta: 0.0,
                                },
                            )
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let solver = AdrSolver::new(ops, cfg.adr)?;
                    ModulatedCorrector::from_phase(solver, &PhaseField::linear(top, d), omega)?
                }
                RayEquation::AsPrinted => {
                    let ops = levels
                        .iter()
                        .map(|lev| AdrLevelOp::ray_as_printed(lev, omega, k))
                        .collect();
                    let solver = AdrSolver::new(ops, cfg.adr)?;
                    let demod: Vec<Complex64> = (0..top.ny())
                        .flat_map(|j| {
                            (0..top.nx()).map(move |i| {
                                Complex64::from_polar(1.0, -omega * (k.0 * top.x(i) + k.1 * top.y(j)))
                            })
                        })
                        .collect();
                    let remod = demod.iter().map(|z| z.conj()).collect();
                    ModulatedCorrector::with_factors(solver, demod, remod)?
                }
            };
            cs.push(corrector);
        }
        s.correction = Correction::Rays(cs);
        Ok(s)
    }

    /// Plain wave cycle without any characteristic correction.
    pub fn wave_only(hierarchy: Hierarchy, cfg: WaveAdrConfig) -> Result<Self> {
        if hierarchy.depth() < 2 {
            return Err(Error::InvalidParameter(
                "the wave cycle needs at least two levels".into(),
            ));
        }
        if cfg.cheby_steps == 0 || cfg.coarsest_cheby_steps == 0 {
            return Err(Error::InvalidParameter("Chebyshev step counts must be >= 1".into()));
        }
        cfg.adr.validate()?;
        let adr_level = select_adr_level(&hierarchy, cfg.adr_level)?;
        let ops = HelmholtzOp::for_hierarchy(&hierarchy);
        ops[0].check_diagonal()?;
        let finest = hierarchy.level(0);
        let kmax = hierarchy.omega() * finest.s2.max().sqrt();
        let jacobi_weight = jacobi_omega0(kmax, finest.grid.h()).ok_or_else(|| {
            Error::InvalidParameter("damped-Jacobi weight undefined on the finest level".into())
        })?;
        let lambda_max = ops
            .iter()
            .enumerate()
            .map(|(l, op)| if l == 0 { f64::NAN } else { estimate_lambda_max(op) })
            .collect();
        let depth = hierarchy.depth();
        let mut alphas = vec![DEFAULT_ALPHA; depth];
        alphas[0] = f64::NAN;
        Ok(Self {
            hierarchy,
            ops,
            lambda_max,
            jacobi_weight,
            alphas,
            adr_level,
            skip_level: adr_level + 1,
            correction: Correction::None,
            cfg,
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn operators(&self) -> &[HelmholtzOp] {
        &self.ops
    }

    /// Finest-level operator `A`.
    pub fn operator(&self) -> &HelmholtzOp {
        &self.ops[0]
    }

    pub fn config(&self) -> &WaveAdrConfig {
        &self.cfg
    }

    /// 1-based index of the correction level.
    pub fn adr_level(&self) -> usize {
        self.adr_level + 1
    }

    /// 1-based index of the level without pre-smoothing.
    pub fn no_presmoothing_level(&self) -> usize {
        self.skip_level + 1
    }

    pub fn jacobi_weight(&self) -> f64 {
        self.jacobi_weight
    }

    /// Estimated `λ_max(A^*A)` per level (NaN on the finest, which uses Jacobi).
    pub fn lambda_max(&self) -> &[f64] {
        &self.lambda_max
    }

    /// 1-based indices of the levels that run Chebyshev smoothing.
    pub fn chebyshev_levels(&self) -> Vec<usize> {
        (2..=self.hierarchy.depth()).collect()
    }

    /// Per-level α (index 0 is the finest level and unused).
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn set_alphas(&mut self, alphas: &[f64]) -> Result<()> {
        self.check_alphas(alphas)?;
        self.alphas = alphas.to_vec();
        Ok(())
    }

    pub fn correction_kind(&self) -> &'static str {
        match self.correction {
            Correction::None => "none",
            Correction::Phase(_) => "adr",
            Correction::Rays(_) => "rays",
        }
    }

    /// ADR solver of the phase correction, if any.
    pub fn adr_solver(&self) -> Option<&AdrSolver> {
        match &self.correction {
            Correction::Phase(c) => Some(c.solver()),
            _ => None,
        }
    }

    pub fn phase_corrector(&self) -> Option<&ModulatedCorrector> {
        match &self.correction {
            Correction::Phase(c) => Some(c),
            _ => None,
        }
    }

    fn check_alphas(&self, alphas: &[f64]) -> Result<()> {
        if alphas.len() != self.hierarchy.depth() {
            return Err(Error::InvalidParameter(format!(
                "expected {} per-level alphas, got {}",
                self.hierarchy.depth(),
                alphas.len()
            )));
        }
        for (l, a) in alphas.iter().enumerate().skip(1) {
            if !(a.is_finite() && *a > 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "alpha on level {} must exceed 1, got {a}",
                    l + 1
                )));
            }
        }
        Ok(())
    }

    /// One cycle on the finest level from iterate `u`.
    pub fn cycle(&self, g: &ComplexField, u: &ComplexField) -> Result<ComplexField> {
        self.cycle_with(&self.alphas, g, u)
    }

    /// One cycle with an explicit α assignment (setup data is not modified).
    pub fn cycle_with(&self, alphas: &[f64], g: &ComplexField, u: &ComplexField) -> Result<ComplexField> {
        self.check_alphas(alphas)?;
        self.run_cycle(alphas, g, u, &mut CycleTrace::default())
    }

    /// One cycle that also records what happens inside it.
    pub fn cycle_traced(&self, g: &ComplexField, u: &ComplexField, trace: &mut CycleTrace<'_>) -> Result<ComplexField> {
        self.run_cycle(&self.alphas, g, u, trace)
    }

    fn run_cycle(
        &self,
        alphas: &[f64],
        g: &ComplexField,
        u: &ComplexField,
        trace: &mut CycleTrace<'_>,
    ) -> Result<ComplexField> {
        let grid = self.ops[0].grid();
        grid.check_same(g.grid())?;
        grid.check_same(u.grid())?;
        let mut out = u.values().to_vec();
        self.cycle_level(0, alphas, g.values(), &mut out, trace);
        Ok(ComplexField::from_raw(*grid, out))
    }

    fn cheby(&self, l: usize, alphas: &[f64], steps: usize, g: &[Complex64], u: &mut [Complex64]) {
        let p = ChebyParams {
            alpha: alphas[l],
            lambda_max: self.lambda_max[l],
            q_steps: steps,
        };
        let n = u.len();
        let mut s1 = vec![Complex64::default(); n];
        let mut s2 = vec![Complex64::default(); n];
        let mut s3 = vec![Complex64::default(); n];
        chebyshev_in_place(&self.ops[l], g, u, &p, &mut s1, &mut s2, &mut s3);
    }

    fn jacobi(&self, g: &[Complex64], u: &mut [Complex64]) {
        let mut scratch = vec![Complex64::default(); u.len()];
        jacobi_in_place(&self.ops[0], g, u, self.jacobi_weight, self.cfg.jacobi_steps, &mut scratch);
    }

    fn cycle_level(&self, l: usize, alphas: &[f64], g: &[Complex64], u: &mut [Complex64], trace: &mut CycleTrace<'_>) {
        let last = self.ops.len() - 1;
        let before = trace.presmoothing.as_ref().map(|_| u.to_vec());
        if l == 0 {
            self.jacobi(g, u);
        } else if l == last {
            self.cheby(l, alphas, self.cfg.coarsest_cheby_steps, g, u);
        } else if l != self.skip_level {
            self.cheby(l, alphas, self.cfg.cheby_steps, g, u);
        }
        if let (Some(obs), Some(b)) = (trace.presmoothing.as_mut(), before.as_ref()) {
            obs(l + 1, b, u);
        }
        if l == last {
            return;
        }

        let op = &self.ops[l];
        let coarse = &self.ops[l + 1];
        let mut r = vec![Complex64::default(); u.len()];
        op.apply_slice(u, &mut r, false);
        for (rk, gk) in r.iter_mut().zip(g) {
            *rk = gk - *rk;
        }
        let mut rc = vec![Complex64::default(); coarse.grid().len()];
        restrict_slice(op.grid(), coarse.grid(), &r, &mut rc);
        let mut ec = vec![Complex64::default(); rc.len()];
        self.cycle_level(l + 1, alphas, &rc, &mut ec, trace);
        prolong_add_slice(coarse.grid(), op.grid(), &ec, u);

        if l == 0 {
            self.jacobi(g, u);
        } else if l != self.skip_level || self.cfg.level3_post_smoothing {
            self.cheby(l, alphas, self.cfg.cheby_steps, g, u);
        }
        if l == self.adr_level {
            self.correct(g, u, trace);
        }
    }

    fn correct(&self, g: &[Complex64], u: &mut [Complex64], trace: &mut CycleTrace<'_>) {
        let op = &self.ops[self.adr_level];
        let n = u.len();
        let mut r = vec![Complex64::default(); n];
        let mut e = vec![Complex64::default(); n];
        let residual = |u: &[Complex64], r: &mut [Complex64]| {
            op.apply_slice(u, r, false);
            for (rk, gk) in r.iter_mut().zip(g) {
                *rk = gk - *rk;
            }
        };
        match &self.correction {
            Correction::None => {}
            Correction::Phase(c) => {
                for _ in 0..self.cfg.correction_steps {
                    residual(u, &mut r);
                    if let Some(rs) = trace.correction_inputs.as_mut() {
                        rs.push(ComplexField::from_raw(*op.grid(), r.clone()));
                    }
                    c.correction_slice(&r, &mut e);
                    if let Some(acc) = trace.adr_accuracy.as_mut() {
                        acc.push(c.solve_accuracy(&r, &e));
                    }
                    for (uk, ek) in u.iter_mut().zip(&e) {
                        *uk += ek;
                    }
                }
                if let Some(rs) = trace.correction_residuals.as_mut() {
                    residual(u, &mut r);
                    rs.push(crate::field::norm2(&r));
                }
            }
            Correction::Rays(cs) => {
                residual(u, &mut r);
                summed_corrections(cs, &r, &mut e);
                for (uk, ek) in u.iter_mut().zip(&e) {
                    *uk += ek;
                }
            }
        }
    }

    /// `‖g - A u‖ / ‖g‖` on the finest level.
    pub fn relative_residual(&self, g: &ComplexField, u: &ComplexField) -> Result<f64> {
        Ok(self.ops[0].residual(g, u)?.norm2() / g.norm2())
    }

    /// Relative residual after `k` cycles from zero with the given α; this is the tuning loss
    /// `‖g - A u⁽ᴷ⁾‖² / ‖g‖²`. Non-finite iterates give `+∞`.
    pub fn loss(&self, alphas: &[f64], g: &ComplexField, k: usize) -> Result<f64> {
        let mut u = ComplexField::zeros(*g.grid());
        for _ in 0..k {
            u = self.cycle_with(alphas, g, &u)?;
            if !u.is_finite() {
                return Ok(f64::INFINITY);
            }
        }
        let rr = self.relative_residual(g, &u)?;
        Ok(if rr.is_finite() { rr * rr } else { f64::INFINITY })
    }

    /// Stand-alone iteration `u ← cycle(g, u)` from zero. Returns the iterate and the
    /// relative residual after every cycle (starting with 1).
    pub fn iterate(&self, g: &ComplexField, max_cycles: usize, tol: f64) -> Result<(ComplexField, Vec<f64>)> {
        let mut u = ComplexField::zeros(*g.grid());
        let mut hist = vec![1.0];
        for _ in 0..max_cycles {
            u = self.cycle(g, &u)?;
            let rr = self.relative_residual(g, &u)?;
            hist.push(rr);
            if !rr.is_finite() || rr < tol {
                break;
            }
        }
        Ok((u, hist))
    }
}

/// One cycle from a zero guess: `r ↦ M⁻¹ r`.
impl LinearOperator for WaveAdrSolver {
    fn grid(&self) -> &Grid2D {
        self.ops[0].grid()
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = Complex64::default());
        self.cycle_level(0, &self.alphas, x, y, &mut CycleTrace::default());
    }
}

/// Convenience: the preconditioner map of a set-up solver.
pub fn as_preconditioner(solver: &WaveAdrSolver) -> &dyn LinearOperator {
    solver
}

fn select_adr_level(h: &Hierarchy, choice: AdrLevel) -> Result<usize> {
    let smax = h.level(0).s2.max().sqrt();
    let kh: Vec<f64> = h.omega_h().iter().map(|v| v * smax).collect();
    match choice {
        AdrLevel::Fixed(l) => {
            if l == 0 || l > h.depth() {
                return Err(Error::InvalidParameter(format!(
                    "ADR level {l} outside 1..={}",
                    h.depth()
                )));
            }
            Ok(l - 1)
        }
        AdrLevel::Auto => kh
            .iter()
            .enumerate()
            .filter(|(_, v)| (0.5..=1.5).contains(*v))
            .min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
            .map(|(l, _)| l)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no level has kh in [0.5, 1.5] (kh per level: {kh:?})"
                ))
            }),
    }
}
