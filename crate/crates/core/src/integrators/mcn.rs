//! Modified Crank-Nicolson step.
//!
//! ```text
//! (u1 - u0)/tau + D1 ( D2 (u1 + u0)/2 + R(u1, u0) ) = 0
//! R(a, b) = (a^(p+1) - b^(p+1)) / ((a^2 - b^2) p (p+1)) * (a + b)
//! ```
//!
//! `R` is evaluated as the divided-difference polynomial
//! `sum_{k=0..p} a^k b^(p-k) / (p(p+1))`, which equals the ratio wherever the
//! ratio is defined and extends it continuously to `a = +-b`.

use num_complex::Complex64;

use super::{FixedPoint, StepStats};
use crate::error::{Error, Result};
use crate::spectral::{FieldVector, SpectralGrid};

/// Discrete gradient `sum_{k=0..p} a^k b^(p-k) / (p(p+1))`.
pub fn discrete_gradient(a: f64, b: f64, p: u32) -> f64 {
    let mut acc = 0.0;
    let mut ak = 1.0;
    for k in 0..=p {
        acc += ak * b.powi((p - k) as i32);
        ak *= a;
    }
    let pf = p as f64;
    acc / (pf * (pf + 1.0))
}

pub fn step_mcn(
    u0: &FieldVector,
    p: u32,
    grid: &SpectralGrid,
    tau: f64,
    fp: FixedPoint,
) -> Result<(FieldVector, StepStats)> {
    grid.check_len(u0)?;
    let k1 = grid.d1_symbol();
    let k3 = grid.d3_symbol();
    let half = 0.5 * tau;
    let lin: Vec<Complex64> = grid
        .fft(u0)
        .into_iter()
        .zip(k3)
        .map(|(c, k)| c * (1.0 - k * half))
        .collect();
    let denom: Vec<Complex64> = k3.iter().map(|k| 1.0 + k * half).collect();

    let mut u1 = u0.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < fp.max_iter {
        iterations += 1;
        let r: Vec<f64> = u1
            .iter()
            .zip(u0.iter())
            .map(|(&a, &b)| discrete_gradient(a, b, p))
            .collect();
        let rh = grid.fft(&r);
        let spec = (0..grid.len())
            .map(|m| (lin[m] - k1[m] * rh[m] * tau) / denom[m])
            .collect();
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
