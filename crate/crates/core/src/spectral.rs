//! Periodic Fourier grid on `[-L, L)` and the pseudo-spectral operators built on it.
//!
//! Transforms are unitary (a `1/sqrt(N)` factor each way), so the forward/inverse
//! pair is the identity and Parseval reads `(u, u)_h = h * sum |u_hat|^2`.
//! The grid spacing `h` enters only through [`SpectralGrid::inner_h`].
//!
//! Derivative symbols use the wavenumbers `xi_m = pi * m / L` for the signed
//! modes `m = -N/2 .. N/2 - 1`. The unpaired Nyquist mode `m = -N/2` is dropped
//! from the odd-derivative symbols (first and third), which makes `D1` exactly
//! antisymmetric on real data; the second-derivative symbol keeps it.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real samples of a field at the grid nodes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldVector(Vec<f64>);

impl FieldVector {
    pub fn new(values: Vec<f64>) -> Self {
        FieldVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        FieldVector(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        FieldVector(vec![value; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise integer power `u^p`.
    pub fn powi(&self, p: u32) -> FieldVector {
        FieldVector(self.0.iter().map(|v| v.powi(p as i32)).collect())
    }

    pub fn scaled(&self, factor: f64) -> FieldVector {
        FieldVector(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &[f64]) {
        debug_assert_eq!(self.0.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += alpha * b;
        }
    }

    /// Largest pointwise difference in absolute value.
    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl From<Vec<f64>> for FieldVector {
    fn from(values: Vec<f64>) -> Self {
        FieldVector(values)
    }
}

impl Deref for FieldVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for FieldVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Uniform periodic grid with precomputed FFT plans and derivative symbols.
///
/// Immutable after construction; clones share the FFT plans.
#[derive(Clone)]
pub struct SpectralGrid {
    half_length: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    modes: Vec<i64>,
    wavenumbers: Vec<f64>,
    k1: Vec<Complex64>,
    k2: Vec<f64>,
    k3: Vec<Complex64>,
    dealias: bool,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .field("h", &self.h)
            .field("dealias", &self.dealias)
            .finish()
    }
}

impl SpectralGrid {
    /// Builds the grid `x_j = -L + j h`, `h = 2L/N`.
    ///
    /// `N` must be a power of two no smaller than 8 and `L` must be positive.
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-length must be positive, got {half_length}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "node count must be a power of two >= 8, got {n}"
            )));
        }
        let h = 2.0 * half_length / n as f64;
        let nodes = (0..n).map(|j| -half_length + j as f64 * h).collect();
        let modes: Vec<i64> = (0..n)
            .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let base = std::f64::consts::PI / half_length;
        let wavenumbers: Vec<f64> = modes.iter().map(|&m| base * m as f64).collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let backward = planner.plan_fft_inverse(n);

        let mut grid = SpectralGrid {
            half_length,
            n,
            h,
            nodes,
            modes,
            wavenumbers,
            k1: Vec::new(),
            k2: Vec::new(),
            k3: Vec::new(),
            dealias: false,
            forward,
            backward,
        };
        grid.build_symbols();
        Ok(grid)
    }

    /// Enables or disables the 2/3-rule filter on the first-derivative symbol.
    ///
    /// Every nonlinear term enters the equation through `D1`, so masking `k1`
    /// (and hence `k3 = k1 k2`) removes aliased quadratic products while
    /// keeping the operator antisymmetric. Off by default.
    pub fn with_dealiasing(mut self, enabled: bool) -> Self {
        self.dealias = enabled;
        self.build_symbols();
        self
    }

    fn build_symbols(&mut self) {
        let nyquist = -(self.n as i64) / 2;
        let cutoff = self.n as i64 / 3;
        self.k1 = self
            .modes
            .iter()
            .zip(&self.wavenumbers)
            .map(|(&m, &xi)| {
                let filtered = self.dealias && m.abs() > cutoff;
                if m == nyquist || filtered {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, xi)
                }
            })
            .collect();
        self.k2 = self.wavenumbers.iter().map(|xi| -xi * xi).collect();
        self.k3 = self.k1.iter().zip(&self.k2).map(|(a, b)| a * b).collect();
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Signed mode numbers in FFT storage order.
    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn d1_symbol(&self) -> &[Complex64] {
        &self.k1
    }

    /// `k1` with the 2/3-rule mask applied regardless of the grid setting.
    pub fn dealiased_d1_symbol(&self) -> Vec<Complex64> {
        let cutoff = self.n as i64 / 3;
        self.k1
            .iter()
            .zip(&self.modes)
            .map(|(&k, &m)| if m.abs() > cutoff { Complex64::new(0.0, 0.0) } else { k })
            .collect()
    }

    pub fn d2_symbol(&self) -> &[f64] {
        &self.k2
    }

    pub fn d3_symbol(&self) -> &[Complex64] {
        &self.k3
    }

    pub fn dealiasing(&self) -> bool {
        self.dealias
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> FieldVector {
        FieldVector(self.nodes.iter().map(|&x| f(x)).collect())
    }

    pub(crate) fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Unscaled forward DFT of real data.
    pub(crate) fn fft(&self, u: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(u.len(), self.n);
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/N` factor; keeps the real part.
    pub(crate) fn ifft_real(&self, mut spec: Vec<Complex64>) -> FieldVector {
        debug_assert_eq!(spec.len(), self.n);
        self.backward.process(&mut spec);
        let scale = 1.0 / self.n as f64;
        FieldVector(spec.iter().map(|c| c.re * scale).collect())
    }

    /// Unitary forward transform.
    pub fn forward(&self, u: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(u)?;
        let scale = 1.0 / (self.n as f64).sqrt();
        Ok(self.fft(u).into_iter().map(|c| c * scale).collect())
    }

    /// Unitary inverse transform, real part.
    pub fn inverse(&self, spec: &[Complex64]) -> Result<FieldVector> {
        if spec.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: spec.len(),
            });
        }
        let scale = (self.n as f64).sqrt();
        Ok(self.ifft_real(spec.iter().map(|c| c * scale).collect()))
    }

    /// Multiplies the spectrum of `u` by `symbol` and transforms back.
    pub(crate) fn filter(&self, u: &[f64], symbol: impl Fn(usize) -> Complex64) -> FieldVector {
        let mut spec = self.fft(u);
        for (i, c) in spec.iter_mut().enumerate() {
            *c *= symbol(i);
        }
        self.ifft_real(spec)
    }

    pub(crate) fn d1(&self, u: &[f64]) -> FieldVector {
        self.filter(u, |i| self.k1[i])
    }

    pub(crate) fn d2(&self, u: &[f64]) -> FieldVector {
        self.filter(u, |i| Complex64::new(self.k2[i], 0.0))
    }

    pub(crate) fn d3(&self, u: &[f64]) -> FieldVector {
        self.filter(u, |i| self.k3[i])
    }

    /// First derivative `D1 u`.
    pub fn apply_d1(&self, u: &[f64]) -> Result<FieldVector> {
        self.check_len(u)?;
        Ok(self.d1(u))
    }

    /// Second derivative `D2 u`.
    pub fn apply_d2(&self, u: &[f64]) -> Result<FieldVector> {
        self.check_len(u)?;
        Ok(self.d2(u))
    }

    /// Third derivative `D3 u = D1 D2 u`, in a single transform pair.
    pub fn apply_d3(&self, u: &[f64]) -> Result<FieldVector> {
        self.check_len(u)?;
        Ok(self.d3(u))
    }

    pub(crate) fn dot_h(&self, u: &[f64], w: &[f64]) -> f64 {
        self.h * u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Discrete inner product `(u, w)_h = h * sum u_j w_j`.
    pub fn inner_h(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(w)?;
        Ok(self.dot_h(u, w))
    }

    pub fn norm_h(&self, u: &[f64]) -> Result<f64> {
        self.inner_h(u, u).map(f64::sqrt)
    }

    /// `(u, 1)_h`.
    pub fn integral_h(&self, u: &[f64]) -> f64 {
        self.h * u.iter().sum::<f64>()
    }
}

/// Per-mode inverse of the stage matrix `I + tau * A * D3`.
///
/// Every block of the stage matrix is a polynomial in `D3`, so in Fourier space
/// the `sN x sN` system splits into `N` independent `s x s` complex systems.
#[derive(Clone, Debug)]
pub struct StageSolver {
    stages: usize,
    tau: f64,
    // inverse matrices, row-major, one s*s block per mode
    inverse: Vec<Complex64>,
}

impl StageSolver {
    /// Singular modes are those with `|det| < 1e-14 * max |det|`.
    pub fn new(grid: &SpectralGrid, tau: f64, a: &[Vec<f64>]) -> Result<Self> {
        let s = a.len();
        if !(1..=3).contains(&s) || a.iter().any(|row| row.len() != s) {
            return Err(Error::UnsupportedStages(s));
        }
        let n = grid.len();
        let mut inverse = vec![Complex64::new(0.0, 0.0); n * s * s];
        let mut dets = Vec::with_capacity(n);
        for (mode, lambda) in grid.d3_symbol().iter().enumerate() {
            let m: Vec<Complex64> = (0..s * s)
                .map(|idx| {
                    let (i, j) = (idx / s, idx % s);
                    let delta = if i == j { 1.0 } else { 0.0 };
                    Complex64::new(delta, 0.0) + lambda * (tau * a[i][j])
                })
                .collect();
            let (det, adj) = adjugate(&m, s);
            dets.push(det.norm());
            let block = &mut inverse[mode * s * s..(mode + 1) * s * s];
            for (dst, src) in block.iter_mut().zip(adj) {
                *dst = src / det;
            }
        }
        let scale = dets.iter().cloned().fold(0.0, f64::max);
        if let Some((mode, det)) = dets
            .iter()
            .enumerate()
            .find(|(_, &d)| !(d >= 1e-14 * scale) || d == 0.0)
        {
            return Err(Error::SingularMode {
                mode: grid.modes()[mode],
                tau,
                det: *det,
            });
        }
        Ok(StageSolver {
            stages: s,
            tau,
            inverse,
        })
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Solves in place: `rhs[i]` holds the spectrum of stage `i` on entry and
    /// the spectrum of the solution on exit.
    pub fn solve_spectral(&self, rhs: &mut [Vec<Complex64>]) {
        let s = self.stages;
        debug_assert_eq!(rhs.len(), s);
        let n = rhs[0].len();
        let mut tmp = [Complex64::new(0.0, 0.0); 3];
        for mode in 0..n {
            let block = &self.inverse[mode * s * s..(mode + 1) * s * s];
            for (i, t) in tmp.iter_mut().enumerate().take(s) {
                *t = (0..s).map(|j| block[i * s + j] * rhs[j][mode]).sum();
            }
            for (i, r) in rhs.iter_mut().enumerate() {
                r[mode] = tmp[i];
            }
        }
    }

    /// Physical-space solve of the stage system.
    pub fn solve(&self, grid: &SpectralGrid, rhs: &[&[f64]]) -> Result<Vec<FieldVector>> {
        if rhs.len() != self.stages {
            return Err(Error::LengthMismatch {
                expected: self.stages,
                got: rhs.len(),
            });
        }
        for r in rhs {
            grid.check_len(r)?;
        }
        let mut spec: Vec<Vec<Complex64>> = rhs.iter().map(|r| grid.fft(r)).collect();
        self.solve_spectral(&mut spec);
        Ok(spec.into_iter().map(|s| grid.ifft_real(s)).collect())
    }
}

/// Determinant and adjugate of a small row-major complex matrix.
fn adjugate(m: &[Complex64], s: usize) -> (Complex64, Vec<Complex64>) {
    match s {
        1 => (m[0], vec![Complex64::new(1.0, 0.0)]),
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            (det, vec![m[3], -m[1], -m[2], m[0]])
        }
        3 => {
            let c = |i: usize, j: usize| m[i * 3 + j];
            let cof = |i: usize, j: usize| {
                let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
                let q: Vec<usize> = (0..3).filter(|&k| k != j).collect();
                let minor = c(r[0], q[0]) * c(r[1], q[1]) - c(r[0], q[1]) * c(r[1], q[0]);
                if (i + j) % 2 == 0 {
                    minor
                } else {
                    -minor
                }
            };
            let det = c(0, 0) * cof(0, 0) + c(0, 1) * cof(0, 1) + c(0, 2) * cof(0, 2);
            // adj = transpose of the cofactor matrix
            let adj = (0..9).map(|idx| cof(idx % 3, idx / 3)).collect();
            (det, adj)
        }
        _ => unreachable!("stage count checked by caller"),
    }
}

/// Solves the two-stage block system
///
/// ```text
/// (I + tau a11 D3) f1 + tau a12 D3 f2 = r1
/// tau a21 D3 f1 + (I + tau a22 D3) f2 = r2
/// ```
///
/// mode by mode through `J = (1 + tau a11 l)(1 + tau a22 l) - tau^2 a12 a21 l^2`.
pub fn solve_block2(
    grid: &SpectralGrid,
    tau: f64,
    a: [[f64; 2]; 2],
    r1: &[f64],
    r2: &[f64],
) -> Result<(FieldVector, FieldVector)> {
    let rows = vec![a[0].to_vec(), a[1].to_vec()];
    let solver = StageSolver::new(grid, tau, &rows)?;
    let mut out = solver.solve(grid, &[r1, r2])?.into_iter();
    let f1 = out.next().expect("two stages");
    let f2 = out.next().expect("two stages");
    Ok((f1, f2))
}
