//! Uniform interior-node grids on a rectangle with a Dirichlet frame.

use crate::error::{Error, Result};

/// Uniform grid of interior nodes. Node `(i, j)` sits at
/// `(x0 + (i + 1) h, y0 + (j + 1) h)`; the frame nodes at index `-1` and `n`
/// are not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    h: f64,
    origin: (f64, f64),
}

impl Grid2D {
    /// `n x n` interior nodes on the unit square, `h = 1/(n+1)`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0 / (n as f64 + 1.0), (0.0, 0.0))
    }

    pub fn new(nx: usize, ny: usize, h: f64, origin: (f64, f64)) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 interior nodes per side, got {nx}x{ny}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("mesh width must be positive, got {h}")));
        }
        Ok(Self { nx, ny, h, origin })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Interior count per side for square grids (`nx`).
    pub fn n(&self) -> usize {
        self.nx
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_square(&self) -> bool {
        self.nx == self.ny
    }

    /// Physical rectangle `[x0, x1] x [y0, y1]` including the Dirichlet frame.
    pub fn extent(&self) -> [f64; 4] {
        let (x0, y0) = self.origin;
        [
            x0,
            x0 + (self.nx as f64 + 1.0) * self.h,
            y0,
            y0 + (self.ny as f64 + 1.0) * self.h,
        ]
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + (i as f64 + 1.0) * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + (j as f64 + 1.0) * self.h
    }

    /// Node closest to the centre of the extent.
    pub fn center(&self) -> (usize, usize) {
        ((self.nx - 1) / 2, (self.ny - 1) / 2)
    }

    /// Distance from node `(i, j)` to the nearest side of the extent.
    pub fn boundary_distance(&self, i: usize, j: usize) -> f64 {
        let [x0, x1, y0, y1] = self.extent();
        let (x, y) = (self.x(i), self.y(j));
        (x - x0).min(x1 - x).min(y - y0).min(y1 - y)
    }

    /// Whether `(nx - 1)/2` and `(ny - 1)/2` give a nested coarse grid.
    pub fn can_coarsen(&self) -> bool {
        self.nx % 2 == 1 && self.ny % 2 == 1 && (self.nx - 1) / 2 >= 3 && (self.ny - 1) / 2 >= 3
    }

    /// The nested coarse grid: every second node, mesh width doubled.
    pub fn coarsen(&self) -> Result<Self> {
        if !self.can_coarsen() {
            return Err(Error::InvalidGrid(format!(
                "{}x{} grid cannot be coarsened to odd interior counts >= 3",
                self.nx, self.ny
            )));
        }
        Self::new((self.nx - 1) / 2, (self.ny - 1) / 2, 2.0 * self.h, self.origin)
    }

    /// True when `coarse` is the grid produced by `coarsen` (compared to rounding).
    pub fn is_coarsening_of(&self, coarse: &Grid2D) -> bool {
        self.nx % 2 == 1
            && self.ny % 2 == 1
            && coarse.nx == (self.nx - 1) / 2
            && coarse.ny == (self.ny - 1) / 2
            && (coarse.h - 2.0 * self.h).abs() <= 1e-12 * coarse.h
            && (coarse.origin.0 - self.origin.0).abs() <= 1e-12
            && (coarse.origin.1 - self.origin.1).abs() <= 1e-12
    }

    /// Same node layout, compared with a rounding tolerance on `h`.
    pub fn same_as(&self, other: &Grid2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (self.origin.0 - other.origin.0).abs() <= 1e-12
            && (self.origin.1 - other.origin.1).abs() <= 1e-12
    }

    pub(crate) fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.describe(),
                found: other.describe(),
            })
        }
    }

    pub fn describe(&self) -> String {
        format!("{}x{} (h={:.6e})", self.nx, self.ny, self.h)
    }
}
