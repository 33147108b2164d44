use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Grid2D;

/// Lower end of the normalized slowness range.
pub const SLOWNESS_MIN: f64 = 0.25;
/// Upper end of the normalized slowness range.
pub const SLOWNESS_MAX: f64 = 1.0;

/// Slowness `s = 1/c` sampled on the interior nodes. The local wavenumber is
/// `k = omega * s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlownessModel {
    s: RealField,
}

impl SlownessModel {
    pub fn new(s: RealField) -> Result<Self> {
        if s.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("slowness".into()));
        }
        if s.values().iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter("slowness must be positive".into()));
        }
        Ok(Self { s })
    }

    pub fn constant(grid: Grid2D, s: f64) -> Result<Self> {
        Self::new(RealField::constant(grid, s))
    }

    pub fn from_fn(grid: Grid2D, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(RealField::from_fn(grid, f))
    }

    pub fn grid(&self) -> &Grid2D {
        self.s.grid()
    }

    pub fn field(&self) -> &RealField {
        &self.s
    }

    pub fn values(&self) -> &[f64] {
        self.s.values()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s.get(i, j)
    }

    pub fn min(&self) -> f64 {
        self.s.min()
    }

    pub fn max(&self) -> f64 {
        self.s.max()
    }

    /// Whether every node lies in `[0.25, 1]`.
    pub fn in_normalized_range(&self) -> bool {
        self.s
            .values()
            .iter()
            .all(|&v| (SLOWNESS_MIN..=SLOWNESS_MAX).contains(&v))
    }

    pub fn squared(&self) -> RealField {
        self.s.map(|v| v * v)
    }
}
