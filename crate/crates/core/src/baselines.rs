//! Reference preconditioners: the complex shifted Laplacian and Wave-Ray.

use num_complex::Complex64;

use crate::cycle::{RayEquation, WaveAdrConfig, WaveAdrSolver};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::helmholtz::HelmholtzOp;
use crate::hierarchy::Hierarchy;
use crate::linear::LinearOperator;
use crate::smoothers::{gmres_in_place, jacobi_in_place};
use crate::transfer::{prolong_add_slice, restrict_slice};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslConfig {
    /// Shift `β`; `None` means `0.5 ω²`.
    pub beta: Option<f64>,
    pub jacobi_weight: f64,
    pub pre_steps: usize,
    pub post_steps: usize,
    pub coarse_gmres_steps: usize,
}

impl Default for CslConfig {
    fn default() -> Self {
        Self {
            beta: None,
            jacobi_weight: 2.0 / 3.0,
            pre_steps: 1,
            post_steps: 1,
            coarse_gmres_steps: 10,
        }
    }
}

/// One V-cycle on `A + iβ` from a zero guess.
#[derive(Debug, Clone)]
pub struct CslPreconditioner {
    ops: Vec<HelmholtzOp>,
    beta: f64,
    cfg: CslConfig,
}

impl CslPreconditioner {
    pub fn new(hierarchy: &Hierarchy, cfg: CslConfig) -> Result<Self> {
        let omega = hierarchy.omega();
        let beta = cfg.beta.unwrap_or(0.5 * omega * omega);
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("CSL shift must be positive, got {beta}")));
        }
        if cfg.coarse_gmres_steps == 0 {
            return Err(Error::InvalidParameter("coarse GMRES steps must be >= 1".into()));
        }
        let ops: Vec<HelmholtzOp> = HelmholtzOp::for_hierarchy(hierarchy)
            .into_iter()
            .map(|op| op.shifted(beta))
            .collect();
        for op in &ops {
            op.check_diagonal()?;
        }
        Ok(Self { ops, beta, cfg })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The shifted operators, finest first.
    pub fn operators(&self) -> &[HelmholtzOp] {
        &self.ops
    }

    fn vcycle(&self, l: usize, g: &[Complex64], u: &mut [Complex64]) {
        let op = &self.ops[l];
        if l + 1 == self.ops.len() {
            gmres_in_place(|x, y| op.apply_slice(x, y, false), g, u, self.cfg.coarse_gmres_steps);
            return;
        }
        let mut scratch = vec![Complex64::default(); u.len()];
        jacobi_in_place(op, g, u, self.cfg.jacobi_weight, self.cfg.pre_steps, &mut scratch);
        let mut r = scratch;
        op.apply_slice(u, &mut r, false);
        for (rk, gk) in r.iter_mut().zip(g) {
            *rk = gk - *rk;
        }
        let coarse = &self.ops[l + 1];
        let mut rc = vec![Complex64::default(); coarse.grid().len()];
        restrict_slice(op.grid(), coarse.grid(), &r, &mut rc);
        let mut ec = vec![Complex64::default(); rc.len()];
        self.vcycle(l + 1, &rc, &mut ec);
        prolong_add_slice(coarse.grid(), op.grid(), &ec, u);
        jacobi_in_place(op, g, u, self.cfg.jacobi_weight, self.cfg.post_steps, &mut r);
    }
}

impl LinearOperator for CslPreconditioner {
    fn grid(&self) -> &Grid2D {
        self.ops[0].grid()
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = Complex64::default());
        self.vcycle(0, x, y);
    }
}

pub fn csl_preconditioner(hierarchy: &Hierarchy, cfg: CslConfig) -> Result<CslPreconditioner> {
    CslPreconditioner::new(hierarchy, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveRayConfig {
    /// Number of ray directions `M`.
    pub rays: usize,
    pub form: RayEquation,
    pub cycle: WaveAdrConfig,
}

impl Default for WaveRayConfig {
    fn default() -> Self {
        Self {
            rays: 8,
            form: RayEquation::default(),
            cycle: WaveAdrConfig::default(),
        }
    }
}

/// Wave cycle with `M` plane-wave ray corrections at the correction level.
pub fn wave_ray_preconditioner(hierarchy: Hierarchy, cfg: WaveRayConfig) -> Result<WaveAdrSolver> {
    WaveAdrSolver::wave_ray(hierarchy, cfg.rays, cfg.form, cfg.cycle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ComplexField;
    use crate::hierarchy::DepthPolicy;
    use crate::medium::SlownessModel;

    #[test]
    fn csl_cycle_contracts_on_shifted_system() {
        let grid = Grid2D::square(63).unwrap();
        let s = SlownessModel::constant(grid, 1.0).unwrap();
        let h = Hierarchy::build(&s, 10.0 * std::f64::consts::PI, DepthPolicy::default()).unwrap();
        let csl = csl_preconditioner(&h, CslConfig::default()).unwrap();
        let g = crate::helmholtz::point_source(&grid, grid.center()).unwrap();
        let u = csl.apply_field(&g);
        let r = csl.operators()[0].residual(&g, &u).unwrap();
        assert!(r.norm2() < g.norm2());
        let z = csl.apply_field(&ComplexField::zeros(grid));
        assert_eq!(z.norm2(), 0.0);
    }
}
