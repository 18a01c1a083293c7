//! Strang splitting `S_{tau/2} A_tau S_{tau/2}`: Crank-Nicolson for
//! `u_t + u_xxx = 0` (exact per-mode rational symbol) and the implicit
//! midpoint rule for `u_t + (u^p / p)_x = 0`.

use num_complex::Complex64;

use super::{FixedPoint, StepStats};
use crate::error::{Error, Result};
use crate::spectral::{FieldVector, SpectralGrid};

/// Crank-Nicolson flow of the linear dispersive part.
pub fn dispersive_cn(u: &FieldVector, grid: &SpectralGrid, tau: f64) -> FieldVector {
    let half = 0.5 * tau;
    let k3 = grid.d3_symbol();
    grid.filter(u, |m| (1.0 - k3[m] * half) / (1.0 + k3[m] * half))
}

/// Midpoint-rule flow of the conservation law over `dt`, with `k1` the
/// first-derivative symbol to use.
pub fn conservation_midpoint(
    u0: &FieldVector,
    p: u32,
    grid: &SpectralGrid,
    k1: &[Complex64],
    dt: f64,
    fp: FixedPoint,
) -> Result<(FieldVector, StepStats)> {
    let scale = dt / p as f64;
    let u0h = grid.fft(u0);
    let mut u1 = u0.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < fp.max_iter {
        iterations += 1;
        let mid: Vec<f64> = u1
            .iter()
            .zip(u0.iter())
            .map(|(a, b)| (0.5 * (a + b)).powi(p as i32))
            .collect();
        let mh = grid.fft(&mid);
        let spec: Vec<Complex64> = (0..grid.len()).map(|m| u0h[m] - k1[m] * mh[m] * scale).collect();
        let next = grid.ifft_real(spec);
        residual = next.max_abs_diff(&u1);
        u1 = next;
        if !residual.is_finite() || residual < fp.tol {
            break;
        }
    }
    if !(residual < fp.tol) {
        return Err(Error::NonConvergence { iterations, residual });
    }
    Ok((u1, StepStats { iterations, residual }))
}

pub fn step_strang(
    u: &FieldVector,
    p: u32,
    grid: &SpectralGrid,
    tau: f64,
    fp: FixedPoint,
    dealias: bool,
) -> Result<(FieldVector, StepStats)> {
    grid.check_len(u)?;
    let k1 = if dealias {
        grid.dealiased_d1_symbol()
    } else {
        grid.d1_symbol().to_vec()
    };
    let (a, s1) = conservation_midpoint(u, p, grid, &k1, 0.5 * tau, fp)?;
    let b = dispersive_cn(&a, grid, tau);
    let (c, s2) = conservation_midpoint(&b, p, grid, &k1, 0.5 * tau, fp)?;
    Ok((
        c,
        StepStats {
            iterations: s1.iterations + s2.iterations,
            residual: s1.residual.max(s2.residual),
        },
    ))
}
