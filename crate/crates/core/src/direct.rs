//! Banded LU with partial pivoting for five-point operators in natural ordering.
//!
//! The half bandwidth equals `nx`, so factoring costs `O(n · nx²)`. Used for
//! reference solutions and for exact ADR solves.

use num_complex::Complex64;

use crate::adr::AdrLevelOp;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid2D;
use crate::helmholtz::HelmholtzOp;

/// Factored band matrix. Row `i` stores columns `i - kl ..= i + kl + ku`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    grid: Grid2D,
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Factor the operator with coefficient fields `(north, west, centre, east, south)`.
    pub fn from_five_point(grid: Grid2D, coeffs: [&[Complex64]; 5]) -> Result<Self> {
        let n = grid.len();
        if coeffs.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidGrid("coefficient field size mismatch".into()));
        }
        let nx = grid.nx();
        let (kl, ku) = (nx, nx);
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            grid,
            n,
            kl,
            ku,
            width,
            ab: vec![Complex64::default(); n * width],
            piv: vec![0; n],
        };
        let [north, west, center, east, south] = coeffs;
        for k in 0..n {
            let (i, j) = (k % nx, k / nx);
            *lu.at(k, k) = center[k];
            if i > 0 {
                *lu.at(k, k - 1) = west[k];
            }
            if i + 1 < nx {
                *lu.at(k, k + 1) = east[k];
            }
            if j > 0 {
                *lu.at(k, k - nx) = south[k];
            }
            if j + 1 < grid.ny() {
                *lu.at(k, k + nx) = north[k];
            }
        }
        lu.factor()?;
        Ok(lu)
    }

    /// Factor a Helmholtz level operator.
    pub fn from_helmholtz(op: &HelmholtzOp) -> Result<Self> {
        let grid = *op.grid();
        let off = vec![Complex64::new(-1.0 / (grid.h() * grid.h()), 0.0); grid.len()];
        Self::from_five_point(grid, [&off, &off, op.diagonal(), &off, &off])
    }

    /// Factor an ADR level operator.
    pub fn from_adr(op: &AdrLevelOp) -> Result<Self> {
        Self::from_five_point(*op.grid(), op.coefficients())
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.ab[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.ab[i * self.width + (j + self.kl - i)]
    }

    fn factor(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..=last_row {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Stage {
                    stage: "direct",
                    message: format!("singular matrix at row {k}"),
                });
            }
            self.piv[k] = p;
            if p != k {
                for c in k..=last_col {
                    let a = self.get(k, c);
                    let b = self.get(p, c);
                    *self.at(k, c) = b;
                    *self.at(p, c) = a;
                }
            }
            let inv = 1.0 / self.get(k, k);
            for i in k + 1..=last_row {
                let l = self.get(i, k) * inv;
                if l == Complex64::default() {
                    continue;
                }
                *self.at(i, k) = l;
                let (ri, rk) = (i * self.width + kl - i, k * self.width + kl - k);
                for c in k + 1..=last_col {
                    let u = self.ab[rk + c];
                    self.ab[ri + c] -= l * u;
                }
            }
        }
        Ok(())
    }

    /// Solve `A x = b` in place.
    pub fn solve_slice(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.get(i, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.get(k, c) * b[c];
            }
            b[k] = s / self.get(k, k);
        }
    }

    pub fn solve(&self, b: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(b.grid())?;
        let mut x = b.values().to_vec();
        self.solve_slice(&mut x);
        Ok(ComplexField::from_raw(self.grid, x))
    }
}

/// Reference solution of `A u = g` by banded elimination.
pub fn direct_solve(op: &HelmholtzOp, g: &ComplexField) -> Result<ComplexField> {
    BandedLu::from_helmholtz(op)?.solve(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{DepthPolicy, Hierarchy};
    use crate::medium::SlownessModel;

    #[test]
    fn recovers_manufactured_solution() {
        let grid = Grid2D::square(15).unwrap();
        let s = SlownessModel::from_fn(grid, |i, j| 0.5 + 0.03 * (i + j) as f64).unwrap();
        let h = Hierarchy::build(&s, 12.0, DepthPolicy::default()).unwrap();
        let op = HelmholtzOp::new(h.level(0), 12.0, 0.0);
        let u = ComplexField::from_fn(grid, |i, j| Complex64::new(i as f64 - 3.0, (j * j) as f64 * 0.1));
        let g = op.apply(&u).unwrap();
        let x = direct_solve(&op, &g).unwrap();
        assert!(x.sub(&u).unwrap().norm2() / u.norm2() < 1e-12);
    }

    #[test]
    fn pivots_through_zero_leading_entry() {
        let grid = Grid2D::square(3).unwrap();
        let one = vec![Complex64::new(1.0, 0.0); 9];
        let mut center = vec![Complex64::new(5.0, 0.0); 9];
        center[0] = Complex64::default();
        let lu = BandedLu::from_five_point(grid, [&one, &one, &center, &one, &one]).unwrap();
        let b = ComplexField::from_fn(grid, |i, j| Complex64::new((i + 2 * j) as f64, 1.0));
        let x = lu.solve(&b).unwrap();
        let op = AdrLevelOp::from_coefficients(grid, 1.0, [one.clone(), one.clone(), center, one.clone(), one])
            .unwrap();
        let r = op.apply(&x).unwrap().sub(&b).unwrap();
        assert!(r.norm2() < 1e-12 * b.norm2());
    }
}
