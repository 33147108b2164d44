//! Factored fast marching for `|∇τ| = s`, `τ(x₀) = 0`.
//!
//! The travel time is split as `τ = τ₀ τ₁` with `τ₀ = ‖x - x₀‖` exact for unit
//! slowness, so the marched unknown `τ₁` stays smooth at the point source.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Grid2D;
use crate::medium::SlownessModel;

/// Travel time with its derivatives on one grid.
#[derive(Debug, Clone)]
pub struct PhaseField {
    pub grid: Grid2D,
    pub tau: RealField,
    pub tau_x: RealField,
    pub tau_y: RealField,
    pub lap_tau: RealField,
    pub source: (usize, usize),
}

impl PhaseField {
    /// Phase that vanishes identically (no modulation).
    pub fn zero(grid: Grid2D, source: (usize, usize)) -> Self {
        let z = RealField::constant(grid, 0.0);
        Self {
            grid,
            tau: z.clone(),
            tau_x: z.clone(),
            tau_y: z.clone(),
            lap_tau: z,
            source,
        }
    }

    /// Linear phase `τ = d · (x - x_c)` with constant gradient `d`.
    pub fn linear(grid: Grid2D, direction: (f64, f64)) -> Self {
        let tau = RealField::from_fn(grid, |i, j| direction.0 * grid.x(i) + direction.1 * grid.y(j));
        Self {
            grid,
            tau,
            tau_x: RealField::constant(grid, direction.0),
            tau_y: RealField::constant(grid, direction.1),
            lap_tau: RealField::constant(grid, 0.0),
            source: grid.center(),
        }
    }

    /// Copy with `Δτ` replaced by `max(Δτ, 0)`. Negative values come from converging
    /// rays and from kinks of the first-arrival time, where they act as anti-damping.
    pub fn with_nonnegative_laplacian(&self) -> Self {
        let mut out = self.clone();
        out.lap_tau.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        out
    }

    /// `|∇τ|² - s²` at every node.
    pub fn eikonal_residual(&self, s: &SlownessModel) -> Result<RealField> {
        self.grid.check_same(s.grid())?;
        let v = self
            .tau_x
            .values()
            .iter()
            .zip(self.tau_y.values())
            .zip(s.values())
            .map(|((tx, ty), sv)| tx * tx + ty * ty - sv * sv)
            .collect();
        RealField::from_values(self.grid, v)
    }

    /// Raw little-endian dump: three `u64` (rows, cols, 1) then `f64` values of τ.
    pub fn export_tau(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for d in [self.grid.ny() as u64, self.grid.nx() as u64, 1u64] {
            f.write_all(&d.to_le_bytes())?;
        }
        for v in self.tau.values() {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Diagnostics collected while marching.
#[derive(Debug, Clone, Copy, Default)]
pub struct MarchStats {
    pub frozen: usize,
    /// Largest drop of τ between consecutively frozen nodes (0 for a causal march).
    pub max_order_violation: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum State {
    Far,
    Trial,
    Known,
}

#[derive(PartialEq)]
struct Entry {
    tau: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .tau
            .total_cmp(&self.tau)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Marcher<'a> {
    grid: Grid2D,
    s: &'a [f64],
    src: (f64, f64),
    tau1: Vec<f64>,
    state: Vec<State>,
}

impl Marcher<'_> {
    fn tau0_and_dir(&self, i: usize, j: usize) -> (f64, f64, f64) {
        let dx = self.grid.x(i) - self.src.0;
        let dy = self.grid.y(j) - self.src.1;
        let r = dx.hypot(dy);
        if r == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            (r, dx / r, dy / r)
        }
    }

    fn tau(&self, k: usize) -> f64 {
        let (i, j) = (k % self.grid.nx(), k / self.grid.nx());
        self.tau0_and_dir(i, j).0 * self.tau1[k]
    }

    /// Upwind known neighbour along one axis: `(τ₁ value, σ, τ)` with σ = +1 for the
    /// backward neighbour.
    fn axis_neighbor(&self, i: usize, j: usize, axis: usize) -> Option<(f64, f64, f64)> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut best: Option<(f64, f64, f64)> = None;
        let cands: [(bool, usize, usize, f64); 2] = if axis == 0 {
            [
                (i > 0, i.wrapping_sub(1), j, 1.0),
                (i + 1 < nx, i + 1, j, -1.0),
            ]
        } else {
            [
                (j > 0, i, j.wrapping_sub(1), 1.0),
                (j + 1 < ny, i, j + 1, -1.0),
            ]
        };
        for (ok, ci, cj, sigma) in cands {
            if !ok {
                continue;
            }
            let k = self.grid.idx(ci, cj);
            if self.state[k] != State::Known {
                continue;
            }
            let t = self.tau(k);
            if best.is_none_or(|b| t < b.2) {
                best = Some((self.tau1[k], sigma, t));
            }
        }
        best
    }

    /// Solve the factored local quadratic using the given axes; returns τ₁ if the
    /// upwind and causality conditions hold.
    fn solve_local(
        &self,
        tau0: f64,
        dir: [f64; 2],
        s: f64,
        used: [Option<(f64, f64, f64)>; 2],
    ) -> Option<f64> {
        let h = self.grid.h();
        let (mut a2, mut ab, mut b2) = (0.0, 0.0, 0.0);
        let mut coef = [(0.0, 0.0); 2];
        for d in 0..2 {
            let (a, b) = match used[d] {
                Some((t1, sigma, _)) => (tau0 * sigma / h + dir[d], -tau0 * sigma * t1 / h),
                // no known neighbour on this axis: it carries no upwind information,
                // so the full derivative of τ (not just of τ₁) is taken as zero
                None => (0.0, 0.0),
            };
            coef[d] = (a, b);
            a2 += a * a;
            ab += a * b;
            b2 += b * b;
        }
        if a2 <= 0.0 {
            return None;
        }
        let disc = ab * ab - a2 * (b2 - s * s);
        if disc < 0.0 {
            return None;
        }
        let t = (-ab + disc.sqrt()) / a2;
        if !(t.is_finite() && t > 0.0) {
            return None;
        }
        let tau = tau0 * t;
        for d in 0..2 {
            if let Some((_, sigma, tnb)) = used[d] {
                let grad = coef[d].0 * t + coef[d].1;
                let scale = 1e-12 * (1.0 + grad.abs());
                if sigma * grad < -scale || tau < tnb - 1e-12 * (1.0 + tnb) {
                    return None;
                }
            }
        }
        Some(t)
    }

    fn update(&self, i: usize, j: usize) -> f64 {
        let k = self.grid.idx(i, j);
        let (tau0, dx, dy) = self.tau0_and_dir(i, j);
        let s = self.s[k];
        let nbx = self.axis_neighbor(i, j, 0);
        let nby = self.axis_neighbor(i, j, 1);
        let dir = [dx, dy];
        let mut best = f64::INFINITY;
        if nbx.is_some() && nby.is_some() {
            if let Some(t) = self.solve_local(tau0, dir, s, [nbx, nby]) {
                best = t;
            }
        }
        if best.is_infinite() {
            for used in [[nbx, None], [None, nby]] {
                if used.iter().all(|u| u.is_none()) {
                    continue;
                }
                if let Some(t) = self.solve_local(tau0, dir, s, used) {
                    best = best.min(t);
                }
            }
        }
        if best.is_infinite() {
            // Dijkstra-style fallback along the cheapest known neighbour.
            let h = self.grid.h();
            let t = [nbx, nby]
                .iter()
                .flatten()
                .map(|&(_, _, tnb)| tnb + h * s)
                .fold(f64::INFINITY, f64::min);
            best = t / tau0;
        }
        best
    }
}

/// Factored fast marching from `source`; returns τ with ∇τ and Δτ.
pub fn solve_factored_eikonal(s: &SlownessModel, source: (usize, usize)) -> Result<PhaseField> {
    solve_factored_eikonal_with_stats(s, source).map(|(p, _)| p)
}

pub fn solve_factored_eikonal_with_stats(
    s: &SlownessModel,
    source: (usize, usize),
) -> Result<(PhaseField, MarchStats)> {
    let grid = *s.grid();
    let (si, sj) = source;
    if si >= grid.nx() || sj >= grid.ny() {
        return Err(Error::SourceOutsideGrid {
            i: si,
            j: sj,
            nx: grid.nx(),
            ny: grid.ny(),
        });
    }
    if s.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("slowness".into()));
    }
    let n = grid.len();
    let mut m = Marcher {
        grid,
        s: s.values(),
        src: (grid.x(si), grid.y(sj)),
        tau1: vec![f64::INFINITY; n],
        state: vec![State::Far; n],
    };
    let ks = grid.idx(si, sj);
    m.tau1[ks] = s.values()[ks];
    let mut heap = BinaryHeap::new();
    heap.push(Entry { tau: 0.0, idx: ks });
    m.state[ks] = State::Trial;
    let mut stats = MarchStats::default();
    let mut last = 0.0f64;
    let (nx, ny) = (grid.nx(), grid.ny());
    while let Some(Entry { tau, idx }) = heap.pop() {
        if m.state[idx] == State::Known {
            continue;
        }
        if tau.to_bits() != m.tau(idx).to_bits() {
            continue; // stale entry
        }
        m.state[idx] = State::Known;
        stats.frozen += 1;
        stats.max_order_violation = stats.max_order_violation.max(last - tau);
        last = last.max(tau);
        let (i, j) = (idx % nx, idx / nx);
        let nbrs = [
            (i > 0).then(|| (i - 1, j)),
            (i + 1 < nx).then(|| (i + 1, j)),
            (j > 0).then(|| (i, j - 1)),
            (j + 1 < ny).then(|| (i, j + 1)),
        ];
        for (ni, nj) in nbrs.into_iter().flatten() {
            let k = grid.idx(ni, nj);
            if m.state[k] == State::Known {
                continue;
            }
            // recomputed from the current known set, so the value may also rise
            let t1 = m.update(ni, nj);
            if t1 != m.tau1[k] {
                m.tau1[k] = t1;
                m.state[k] = State::Trial;
                heap.push(Entry { tau: m.tau(k), idx: k });
            }
        }
    }
    let phase = assemble_phase(&grid, &m.tau1, source)?;
    Ok((phase, stats))
}

/// Compose τ, ∇τ and Δτ from the factored unknown τ₁.
fn assemble_phase(grid: &Grid2D, tau1: &[f64], source: (usize, usize)) -> Result<PhaseField> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.h();
    let (x0, y0) = (grid.x(source.0), grid.y(source.1));
    let at = |i: usize, j: usize| tau1[j * nx + i];

    let d1 = |n: usize, k: usize, f: &dyn Fn(usize) -> f64| -> f64 {
        if k == 0 {
            (f(1) - f(0)) / h
        } else if k == n - 1 {
            (f(n - 1) - f(n - 2)) / h
        } else {
            (f(k + 1) - f(k - 1)) / (2.0 * h)
        }
    };
    let d2 = |n: usize, k: usize, f: &dyn Fn(usize) -> f64| -> f64 {
        let c = k.clamp(1, n - 2);
        (f(c - 1) - 2.0 * f(c) + f(c + 1)) / (h * h)
    };

    // analytic τ₀ pieces with the singular source value replaced by neighbour averages
    let tau0_parts = |i: usize, j: usize| -> (f64, f64, f64, f64) {
        let dx = grid.x(i) - x0;
        let dy = grid.y(j) - y0;
        let r = dx.hypot(dy);
        (r, dx / r, dy / r, 1.0 / r)
    };
    let mut tau = vec![0.0; grid.len()];
    let mut gx = vec![0.0; grid.len()];
    let mut gy = vec![0.0; grid.len()];
    let mut lap = vec![0.0; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let (t0, t0x, t0y, l0) = if (i, j) == source {
                let nbrs = [
                    (i > 0).then(|| (i - 1, j)),
                    (i + 1 < nx).then(|| (i + 1, j)),
                    (j > 0).then(|| (i, j - 1)),
                    (j + 1 < ny).then(|| (i, j + 1)),
                ];
                let mut acc = (0.0, 0.0, 0.0);
                let mut cnt = 0.0;
                for (ni, nj) in nbrs.into_iter().flatten() {
                    let (_, a, b, c) = tau0_parts(ni, nj);
                    acc = (acc.0 + a, acc.1 + b, acc.2 + c);
                    cnt += 1.0;
                }
                (0.0, acc.0 / cnt, acc.1 / cnt, acc.2 / cnt)
            } else {
                tau0_parts(i, j)
            };
            let t1 = tau1[k];
            let t1x = d1(nx, i, &|ii| at(ii, j));
            let t1y = d1(ny, j, &|jj| at(i, jj));
            let l1 = d2(nx, i, &|ii| at(ii, j)) + d2(ny, j, &|jj| at(i, jj));
            tau[k] = t0 * t1;
            gx[k] = t0 * t1x + t1 * t0x;
            gy[k] = t0 * t1y + t1 * t0y;
            lap[k] = t1 * l0 + 2.0 * (t0x * t1x + t0y * t1y) + t0 * l1;
        }
    }
    Ok(PhaseField {
        grid: *grid,
        tau: RealField::from_values(*grid, tau)?,
        tau_x: RealField::from_values(*grid, gx)?,
        tau_y: RealField::from_values(*grid, gy)?,
        lap_tau: RealField::from_values(*grid, lap)?,
        source,
    })
}

/// Sample a phase field at the nodes of a nested coarser grid (injection).
pub fn restrict_phase(p: &PhaseField, target: &Grid2D) -> Result<PhaseField> {
    let fine = p.grid;
    let ratio = target.h() / fine.h();
    let factor = ratio.round() as usize;
    let nested = factor >= 1
        && factor.is_power_of_two()
        && (ratio - factor as f64).abs() < 1e-9
        && (fine.nx() + 1) == factor * (target.nx() + 1)
        && (fine.ny() + 1) == factor * (target.ny() + 1)
        && (fine.extent()[0] - target.extent()[0]).abs() < 1e-12
        && (fine.extent()[2] - target.extent()[2]).abs() < 1e-12;
    if !nested {
        return Err(Error::GridMismatch {
            expected: format!("grid nested in {}", fine.describe()),
            found: target.describe(),
        });
    }
    let sample = |f: &RealField| {
        RealField::from_fn(*target, |ci, cj| {
            f.get((ci + 1) * factor - 1, (cj + 1) * factor - 1)
        })
    };
    let (si, sj) = p.source;
    Ok(PhaseField {
        grid: *target,
        tau: sample(&p.tau),
        tau_x: sample(&p.tau_x),
        tau_y: sample(&p.tau_y),
        lap_tau: sample(&p.lap_tau),
        source: (
            ((si + 1) / factor).saturating_sub(1).min(target.nx() - 1),
            ((sj + 1) / factor).saturating_sub(1).min(target.ny() - 1),
        ),
    })
}
