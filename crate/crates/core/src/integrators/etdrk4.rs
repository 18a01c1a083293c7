//! Fourth-order exponential time differencing (Cox-Matthews ETDRK4) for
//! `u_t = L u + N(u)` with `L = -D3` and `N(u) = -D1 (u^p) / p`.
//!
//! The phi-function coefficients are evaluated as means over a circle of
//! radius one around each `z = tau * L_m`, which avoids the cancellation of
//! the closed forms near `z = 0`.

use num_complex::Complex64;

use crate::spectral::{FieldVector, SpectralGrid};

/// Number of contour points.
pub const CONTOUR_POINTS: usize = 32;

/// Per-mode coefficients for one step size.
#[derive(Clone, Debug)]
pub struct EtdCoefficients {
    pub tau: f64,
    /// `e^{z}`
    pub e: Vec<Complex64>,
    /// `e^{z/2}`
    pub e_half: Vec<Complex64>,
    /// `L^{-1} (e^{z/2} - 1)`
    pub q: Vec<Complex64>,
    pub g1: Vec<Complex64>,
    pub g2: Vec<Complex64>,
    pub g3: Vec<Complex64>,
}

/// `L^{-1}(e^{z/2} - 1)` and the three update weights, each divided by `tau`,
/// as closed forms in `z`.
pub fn direct_weights(z: Complex64) -> [Complex64; 4] {
    weights_with_exp(z, z.exp(), (z * 0.5).exp())
}

fn weights_with_exp(z: Complex64, ez: Complex64, ez_half: Complex64) -> [Complex64; 4] {
    let z3 = z * z * z;
    let q = (ez_half - 1.0) / z;
    let g1 = (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
    let g2 = (2.0 + z + ez * (-2.0 + z)) * 2.0 / z3;
    let g3 = (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    [q, g1, g2, g3]
}

/// Contour mean of [`direct_weights`] over `z + e^{i theta_j}`.
pub fn contour_weights(z: Complex64) -> [Complex64; 4] {
    // e^{z + r} = e^z e^r keeps the large phase of z out of the sum
    let ez = z.exp();
    let ez_half = (z * 0.5).exp();
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    for j in 0..CONTOUR_POINTS {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
        let r = Complex64::from_polar(1.0, theta);
        let w = weights_with_exp(z + r, ez * r.exp(), ez_half * (r * 0.5).exp());
        for (a, d) in acc.iter_mut().zip(w) {
            *a += d;
        }
    }
    let inv = 1.0 / CONTOUR_POINTS as f64;
    acc.map(|a| a * inv)
}

impl EtdCoefficients {
    pub fn new(grid: &SpectralGrid, tau: f64) -> Self {
        let n = grid.len();
        let mut c = EtdCoefficients {
            tau,
            e: Vec::with_capacity(n),
            e_half: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            g1: Vec::with_capacity(n),
            g2: Vec::with_capacity(n),
            g3: Vec::with_capacity(n),
        };
        for k in grid.d3_symbol() {
            let z = -k * tau;
            let [q, g1, g2, g3] = contour_weights(z);
            c.e.push(z.exp());
            c.e_half.push((z * 0.5).exp());
            c.q.push(q * tau);
            c.g1.push(g1 * tau);
            c.g2.push(g2 * tau);
            c.g3.push(g3 * tau);
        }
        c
    }

    /// One step with an arbitrary spectral nonlinearity `N_hat(u)`.
    pub fn step_with<F>(&self, grid: &SpectralGrid, u: &FieldVector, nonlinear: F) -> FieldVector
    where
        F: Fn(&FieldVector) -> Vec<Complex64>,
    {
        let n = grid.len();
        let v = grid.fft(u);
        let nu = nonlinear(u);
        let a: Vec<Complex64> = (0..n).map(|m| self.e_half[m] * v[m] + self.q[m] * nu[m]).collect();
        let na = nonlinear(&grid.ifft_real(a.clone()));
        let b: Vec<Complex64> = (0..n).map(|m| self.e_half[m] * v[m] + self.q[m] * na[m]).collect();
        let nb = nonlinear(&grid.ifft_real(b));
        let c: Vec<Complex64> = (0..n)
            .map(|m| self.e_half[m] * a[m] + self.q[m] * (2.0 * nb[m] - nu[m]))
            .collect();
        let nc = nonlinear(&grid.ifft_real(c));
        let out = (0..n)
            .map(|m| self.e[m] * v[m] + self.g1[m] * nu[m] + self.g2[m] * (na[m] + nb[m]) + self.g3[m] * nc[m])
            .collect();
        grid.ifft_real(out)
    }

    pub fn step(&self, grid: &SpectralGrid, u: &FieldVector, p: u32) -> FieldVector {
        self.step_with(grid, u, |w| gkdv_nonlinearity(grid, w, p))
    }
}

/// Spectrum of `-D1 (u^p) / p`.
pub fn gkdv_nonlinearity(grid: &SpectralGrid, u: &[f64], p: u32) -> Vec<Complex64> {
    let up: Vec<f64> = u.iter().map(|x| x.powi(p as i32)).collect();
    let scale = -1.0 / p as f64;
    grid.fft(&up)
        .into_iter()
        .zip(grid.d1_symbol())
        .map(|(c, k)| c * k * scale)
        .collect()
}

/// Explicit-step stability indicator `tau * max|xi| * max|u|^(p-1)`.
pub fn advective_cfl(grid: &SpectralGrid, u: &[f64], p: u32, tau: f64) -> f64 {
    let xi = grid.wavenumbers().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let amp = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    tau.abs() * xi * amp.powi(p as i32 - 1)
}

pub fn step_metdrk4(u: &FieldVector, p: u32, grid: &SpectralGrid, tau: f64) -> FieldVector {
    EtdCoefficients::new(grid, tau).step(grid, u, p)
}
