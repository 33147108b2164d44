//! Multilevel bundle of grids and rediscretized coefficients.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Grid2D;
use crate::medium::SlownessModel;
use crate::transfer::restrict_real;

/// Clamp applied to coarsened squared slowness (the square of `[0.25, 1]`).
pub const S2_CLAMP: (f64, f64) = (0.0625, 1.0);

/// Sponge profile: zero beyond one wavelength `2 pi / omega` from the boundary,
/// rising quadratically to `omega` at the boundary.
pub fn build_damping_mask(grid: &Grid2D, omega: f64) -> RealField {
    let width = 2.0 * PI / omega;
    RealField::from_fn(*grid, |i, j| {
        let d = grid.boundary_distance(i, j);
        if d >= width {
            0.0
        } else {
            let t = (width - d) / width;
            omega * t * t
        }
    })
}

/// How deep to coarsen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthPolicy {
    /// Cap on the number of levels (finest included); `None` coarsens as far as possible.
    pub max_levels: Option<usize>,
}

impl Default for DepthPolicy {
    fn default() -> Self {
        Self { max_levels: None }
    }
}

/// Coefficients of one level.
#[derive(Debug, Clone)]
pub struct Level {
    pub grid: Grid2D,
    pub s2: RealField,
    pub gamma: RealField,
}

/// Finest-first list of levels sharing `omega` and the shift policy.
///
/// `shift_ratio` scales the pointwise imaginary shift `gamma0 = shift_ratio * (omega s)^2`;
/// zero gives the unshifted problem.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    omega: f64,
    shift_ratio: f64,
}

impl Hierarchy {
    pub fn build(s: &SlownessModel, omega: f64, depth: DepthPolicy) -> Result<Self> {
        Self::build_shifted(s, omega, 0.0, depth)
    }

    pub fn build_shifted(
        s: &SlownessModel,
        omega: f64,
        shift_ratio: f64,
        depth: DepthPolicy,
    ) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        if !(shift_ratio.is_finite() && shift_ratio >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "shift ratio must be nonnegative, got {shift_ratio}"
            )));
        }
        let grid = *s.grid();
        let max_levels = depth.max_levels.unwrap_or(usize::MAX);
        if max_levels == 0 {
            return Err(Error::InvalidParameter("depth must be at least one level".into()));
        }
        if max_levels > 1 && max_levels != usize::MAX && available_depth(&grid) < max_levels {
            return Err(Error::IncompatibleSize {
                n: grid.nx(),
                valid: valid_sizes_near(grid.nx(), max_levels),
            });
        }
        let mut levels = vec![Level {
            grid,
            s2: s.squared(),
            gamma: build_damping_mask(&grid, omega),
        }];
        while levels.len() < max_levels {
            let last = levels.last().unwrap();
            if !last.grid.can_coarsen() {
                break;
            }
            let s2 = restrict_real(&last.s2)?.map(|v| v.clamp(S2_CLAMP.0, S2_CLAMP.1));
            let grid = *s2.grid();
            levels.push(Level {
                grid,
                s2,
                gamma: build_damping_mask(&grid, omega),
            });
        }
        Ok(Self {
            levels,
            omega,
            shift_ratio,
        })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Level by 0-based index (0 = finest).
    pub fn level(&self, l: usize) -> &Level {
        &self.levels[l]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn shift_ratio(&self) -> f64 {
        self.shift_ratio
    }

    pub fn finest(&self) -> &Grid2D {
        &self.levels[0].grid
    }

    /// `omega * h` on each level, finest first.
    pub fn omega_h(&self) -> Vec<f64> {
        self.levels.iter().map(|l| self.omega * l.grid.h()).collect()
    }
}

/// Number of levels reachable from `grid` by repeated coarsening.
pub fn available_depth(grid: &Grid2D) -> usize {
    let mut g = *grid;
    let mut d = 1;
    while g.can_coarsen() {
        g = g.coarsen().unwrap();
        d += 1;
    }
    d
}

/// Sizes `2^(levels-1) * (m + 1) - 1` with coarsest `m >= 3` odd, nearest to `n`.
pub fn valid_sizes_near(n: usize, levels: usize) -> Vec<usize> {
    let step = 1usize << (levels.saturating_sub(1)).min(30);
    let mut out = Vec::new();
    let mut m = 3;
    while out.len() < 64 {
        out.push(step * (m + 1) - 1);
        m += 2;
    }
    out.sort_by_key(|&v| (v as i64 - n as i64).unsigned_abs());
    out.truncate(4);
    out.sort_unstable();
    out
}
