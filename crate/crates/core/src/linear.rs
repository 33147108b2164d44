use num_complex::Complex64;

use crate::field::ComplexField;
use crate::grid::Grid2D;
use crate::helmholtz::HelmholtzOp;

/// A linear map acting on fields of one grid.
pub trait LinearOperator: Sync {
    fn grid(&self) -> &Grid2D;

    /// `y = Op x`; `y` is fully overwritten.
    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]);

    fn apply_field(&self, x: &ComplexField) -> ComplexField {
        let mut y = vec![Complex64::default(); x.values().len()];
        self.apply_into(x.values(), &mut y);
        ComplexField::from_raw(*x.grid(), y)
    }
}

impl LinearOperator for HelmholtzOp {
    fn grid(&self) -> &Grid2D {
        HelmholtzOp::grid(self)
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.apply_slice(x, y, false);
    }
}

/// The identity map.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub Grid2D);

impl LinearOperator for Identity {
    fn grid(&self) -> &Grid2D {
        &self.0
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.copy_from_slice(x);
    }
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    grid: Grid2D,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&[Complex64], &mut [Complex64]) + Sync,
{
    pub fn new(grid: Grid2D, f: F) -> Self {
        Self { grid, f }
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&[Complex64], &mut [Complex64]) + Sync,
{
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        (self.f)(x, y)
    }
}
