//! Per-level Chebyshev α selection by derivative-free minimization of the
//! `K`-cycle relative residual.
//!
//! Levels are visited coarse to fine. Each level scans a candidate grid with the
//! other levels fixed, then refines with golden-section passes on the interval
//! bracketing the best candidate. A change is kept only if it lowers the loss.

use rayon::prelude::*;

use crate::cycle::WaveAdrSolver;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::helmholtz::point_source;

/// Uniform α values tried as the starting point.
pub const UNIFORM_DEFAULTS: [f64; 3] = [3.0, 10.0, 30.0];

#[derive(Debug, Clone, PartialEq)]
pub struct TunerConfig {
    /// Cycles per loss evaluation.
    pub k: usize,
    /// Strictly increasing candidates, all `> 1`.
    pub candidates: Vec<f64>,
    pub golden_passes: usize,
    /// Coordinate-descent sweeps over all levels.
    pub sweeps: usize,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            k: 3,
            candidates: vec![1.2, 2.0, 3.0, 4.6, 7.1, 10.0, 30.0],
            golden_passes: 2,
            sweeps: 1,
        }
    }
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("tuner K must be >= 1".into()));
        }
        if self.candidates.is_empty() {
            return Err(Error::InvalidParameter("tuner candidate grid is empty".into()));
        }
        if self.candidates.iter().any(|c| !(c.is_finite() && *c > 1.0)) {
            return Err(Error::InvalidParameter("tuner candidates must be finite and > 1".into()));
        }
        if self.candidates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("tuner candidates must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Tuned assignment and its loss history.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedAlphas {
    /// Per-level α, index 0 = finest (unused, NaN).
    pub alphas: Vec<f64>,
    pub loss: f64,
    /// Best uniform default and its loss.
    pub start: (f64, f64),
    /// Loss after each sweep.
    pub sweep_losses: Vec<f64>,
    pub evaluations: usize,
}

impl TunedAlphas {
    /// `alpha.<level> = <value>` lines for the Chebyshev levels (1-based).
    pub fn to_config_lines(&self) -> String {
        self.alphas
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, a)| format!("alpha.{} = {a}\n", l + 1))
            .collect()
    }
}

/// The tuning objective `‖g - A u⁽ᴷ⁾‖² / ‖g‖²` for the point source at `source`.
pub fn loss(solver: &WaveAdrSolver, alphas: &[f64], g: &ComplexField, k: usize) -> Result<f64> {
    solver.loss(alphas, g, k)
}

/// Tune α on the centred point source of the solver's finest grid.
pub fn tune_alphas(solver: &WaveAdrSolver, cfg: &TunerConfig) -> Result<TunedAlphas> {
    let grid = *solver.operator().grid();
    let g = point_source(&grid, grid.center())?;
    tune_alphas_for(solver, &g, cfg)
}

/// Tune α for an explicit right-hand side.
pub fn tune_alphas_for(solver: &WaveAdrSolver, g: &ComplexField, cfg: &TunerConfig) -> Result<TunedAlphas> {
    cfg.validate()?;
    let depth = solver.hierarchy().depth();
    let uniform = |a: f64| {
        let mut v = vec![a; depth];
        v[0] = f64::NAN;
        v
    };
    let eval = |alphas: &[f64]| -> f64 { solver.loss(alphas, g, cfg.k).unwrap_or(f64::INFINITY) };
    let mut evaluations = 0;

    let starts: Vec<f64> = UNIFORM_DEFAULTS.par_iter().map(|&a| eval(&uniform(a))).collect();
    evaluations += starts.len();
    let (bi, best_start) = argmin(&starts).ok_or(Error::Tuning { level: 1 })?;
    let start_alpha = UNIFORM_DEFAULTS[bi];
    let mut alphas = uniform(start_alpha);
    let mut best = best_start;
    let mut sweep_losses = Vec::with_capacity(cfg.sweeps);

    for _ in 0..cfg.sweeps {
        for l in (1..depth).rev() {
            let base = alphas.clone();
            let trial = |a: f64| {
                let mut v = base.clone();
                v[l] = a;
                eval(&v)
            };
            let scores: Vec<f64> = cfg.candidates.par_iter().map(|&a| trial(a)).collect();
            evaluations += scores.len();
            let Some((ci, cbest)) = argmin(&scores) else {
                if best.is_finite() {
                    continue;
                }
                return Err(Error::Tuning { level: l + 1 });
            };
            if cbest < best {
                best = cbest;
                alphas[l] = cfg.candidates[ci];
            }
            // bracket around the best candidate, in log α
            let c = &cfg.candidates;
            let lo = if ci > 0 { c[ci - 1] } else { 1.0 + (c[0] - 1.0) * 0.5 };
            let hi = if ci + 1 < c.len() { c[ci + 1] } else { c[ci] * 2.0 };
            let (mut a, mut b) = (lo.ln(), hi.ln());
            // each pass is a full golden-section search in log α; later passes re-search
            // a bracket of half the previous width centred on the best point so far
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..cfg.golden_passes {
                let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
                let (mut f1, mut f2) = rayon::join(|| trial(x1.exp()), || trial(x2.exp()));
                evaluations += 2;
                loop {
                    for (x, f) in [(x1, f1), (x2, f2)] {
                        if f < best {
                            best = f;
                            alphas[l] = x.exp();
                        }
                    }
                    if b - a <= GOLDEN_TOL {
                        break;
                    }
                    if f1 <= f2 {
                        b = x2;
                        (x2, f2) = (x1, f1);
                        x1 = b - phi * (b - a);
                        f1 = trial(x1.exp());
                    } else {
                        a = x1;
                        (x1, f1) = (x2, f2);
                        x2 = a + phi * (b - a);
                        f2 = trial(x2.exp());
                    }
                    evaluations += 1;
                }
                let half = 0.25 * (hi.ln() - lo.ln());
                let centre = alphas[l].ln();
                a = (centre - half).max(lo.ln());
                b = centre + half;
            }
        }
        sweep_losses.push(best);
    }
    Ok(TunedAlphas {
        alphas,
        loss: best,
        start: (start_alpha, best_start),
        sweep_losses,
        evaluations,
    })
}

/// Width in log α at which a golden-section search stops.
const GOLDEN_TOL: f64 = 0.01;

/// Lowest finite value, ties to the lowest index.
fn argmin(v: &[f64]) -> Option<(usize, f64)> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.is_finite())
        .fold(None, |acc, (i, &x)| match acc {
            Some((_, b)) if b <= x => acc,
            _ => Some((i, x)),
        })
}
