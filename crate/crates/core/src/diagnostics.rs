//! Spectral diagnostics of error fields.

use rustfft::FftPlanner;

use crate::field::ComplexField;
use num_complex::Complex64;

/// Power spectrum of a field: `(|ξ|, |ê(ξ)|²)` for every 2D DFT mode, with angular
/// wavenumbers `ξ = 2π m / (n h)` and signed indices `m`.
pub fn power_spectrum(e: &ComplexField) -> Vec<(f64, f64)> {
    let grid = e.grid();
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let mut data: Vec<Complex64> = e.values().to_vec();
    let mut planner = FftPlanner::<f64>::new();
    let fx = planner.plan_fft_forward(nx);
    for row in data.chunks_exact_mut(nx) {
        fx.process(row);
    }
    let fy = planner.plan_fft_forward(ny);
    let mut col = vec![Complex64::default(); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = data[j * nx + i];
        }
        fy.process(&mut col);
        for j in 0..ny {
            data[j * nx + i] = col[j];
        }
    }
    let signed = |m: usize, n: usize| if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    let mut out = Vec::with_capacity(data.len());
    for j in 0..ny {
        let ky = 2.0 * std::f64::consts::PI * signed(j, ny) / (ny as f64 * h);
        for i in 0..nx {
            let kx = 2.0 * std::f64::consts::PI * signed(i, nx) / (nx as f64 * h);
            out.push((kx.hypot(ky), data[j * nx + i].norm_sqr()));
        }
    }
    out
}

/// Fraction of the error energy with `|ξ| ∈ [lo·f, hi·f]`.
pub fn annulus_energy_fraction(e: &ComplexField, f: f64, lo: f64, hi: f64) -> f64 {
    let spec = power_spectrum(e);
    let total: f64 = spec.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return 0.0;
    }
    let inside: f64 = spec
        .iter()
        .filter(|(k, _)| *k >= lo * f && *k <= hi * f)
        .map(|p| p.1)
        .sum();
    inside / total
}
