//! Scalar-auxiliary-variable form of gKdV.
//!
//! With `v = sqrt((u^p, u)_h + C0)` the semi-discrete system reads
//!
//! ```text
//! u_t = -D1 (D2 u + u^p v / (p sqrt((u^p, u)_h + C0)))  =: f(u, v)
//! v_t = (p + 1) / (2 sqrt((u^p, u)_h + C0)) (u^p, u_t)_h =: g(u, v)
//! ```
//!
//! and the energy becomes the quadratic form
//! `-1/2 (D2 u, u)_h - (v^2 - C0) / (p (p + 1))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{FieldVector, SpectralGrid};

/// Threshold below which the radicand triggers a `C0` shift.
pub const DEFAULT_C0_TOL: f64 = 5.0;
/// Radicand value restored by a shift (`v ~ sqrt(10)` afterwards).
pub const C0_TARGET: f64 = 10.0;

/// How `C0` is chosen at initialization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum C0Policy {
    /// `C0 = max(10, 10 - s, tol - s)` with `s = (u0^p, u0)_h`, so the
    /// initial radicand is at least `max(10, tol)`.
    Auto { tol: f64 },
    /// Use the given constant as is.
    Fixed(f64),
}

impl Default for C0Policy {
    fn default() -> Self {
        C0Policy::Auto { tol: DEFAULT_C0_TOL }
    }
}

/// Augmented unknown `(u, v)` together with the shift `C0` and exponent `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct SavState {
    pub u: FieldVector,
    pub v: f64,
    pub c0: f64,
    pub p: u32,
}

/// `(u^p, u)_h`, the discrete integral of `u^(p+1)`.
pub fn potential(grid: &SpectralGrid, u: &[f64], p: u32) -> f64 {
    grid.spacing() * u.iter().map(|x| x.powi(p as i32 + 1)).sum::<f64>()
}

pub fn init_sav(grid: &SpectralGrid, u0: FieldVector, p: u32, policy: C0Policy) -> Result<SavState> {
    grid.check_len(&u0)?;
    if p < 2 {
        return Err(Error::InvalidConfig(format!(
            "nonlinearity exponent must be >= 2, got {p}"
        )));
    }
    let s = potential(grid, &u0, p);
    let c0 = match policy {
        C0Policy::Auto { tol } => C0_TARGET.max(C0_TARGET - s).max(tol - s),
        C0Policy::Fixed(c0) => c0,
    };
    let radicand = s + c0;
    if !(radicand > 0.0) {
        return Err(Error::AdjustmentRequired { radicand });
    }
    Ok(SavState {
        u: u0,
        v: radicand.sqrt(),
        c0,
        p,
    })
}

impl SavState {
    pub fn radicand(&self, grid: &SpectralGrid) -> f64 {
        potential(grid, &self.u, self.p) + self.c0
    }

    /// Returns `sqrt((u^p,u)_h + C0)` or signals that `C0` must be adjusted.
    pub fn root(&self, grid: &SpectralGrid) -> Result<f64> {
        checked_root(self.radicand(grid))
    }

    /// Modified energy `-1/2 (D2 u, u)_h - (v^2 - C0)/(p(p+1))`.
    pub fn modified_energy(&self, grid: &SpectralGrid) -> f64 {
        let p = self.p as f64;
        kinetic(grid, &self.u) - (self.v * self.v - self.c0) / (p * (p + 1.0))
    }
}

pub(crate) fn checked_root(radicand: f64) -> Result<f64> {
    if radicand > 0.0 && radicand.is_finite() {
        Ok(radicand.sqrt())
    } else {
        Err(Error::AdjustmentRequired { radicand })
    }
}

/// `-1/2 (D2 u, u)_h`.
pub fn kinetic(grid: &SpectralGrid, u: &[f64]) -> f64 {
    -0.5 * grid.dot_h(&grid.d2(u), u)
}

/// Physical energy `-1/2 (D2 u, u)_h - (u^p, u)_h / (p(p+1))`.
pub fn physical_energy(grid: &SpectralGrid, u: &[f64], p: u32) -> f64 {
    let pf = p as f64;
    kinetic(grid, u) - potential(grid, u, p) / (pf * (pf + 1.0))
}

/// `f(u, v) = -D1 (D2 u + u^p v / (p sqrt(radicand)))`.
pub fn rhs_f(state: &SavState, grid: &SpectralGrid) -> Result<FieldVector> {
    grid.check_len(&state.u)?;
    let root = state.root(grid)?;
    let coef = state.v / (state.p as f64 * root);
    Ok(sav_flux(grid, &state.u, state.p, coef))
}

/// `-D1 (D2 u + coef * u^p)` in one transform pair.
pub(crate) fn sav_flux(grid: &SpectralGrid, u: &[f64], p: u32, coef: f64) -> FieldVector {
    let up: Vec<f64> = u.iter().map(|x| coef * x.powi(p as i32)).collect();
    let uh = grid.fft(u);
    let nh = grid.fft(&up);
    let k1 = grid.d1_symbol();
    let k3 = grid.d3_symbol();
    let spec = (0..grid.len()).map(|i| -(k3[i] * uh[i] + k1[i] * nh[i])).collect();
    grid.ifft_real(spec)
}

/// `g = (p+1) / (2 sqrt(radicand)) (u^p, udot)_h`.
pub fn rhs_g(state: &SavState, grid: &SpectralGrid, udot: &[f64]) -> Result<f64> {
    grid.check_len(&state.u)?;
    grid.check_len(udot)?;
    let root = state.root(grid)?;
    let p = state.p;
    let up = state.u.powi(p);
    Ok((p as f64 + 1.0) / (2.0 * root) * grid.dot_h(&up, udot))
}

/// Replaces `(C0, v)` by `(10 - (u^p,u)_h, sqrt(v^2 + C0_new - C0))`.
///
/// The modified energy depends on `C0` and `v` only through `v^2 - C0`, which
/// this leaves unchanged.
pub fn adjust_c0(state: &SavState, grid: &SpectralGrid) -> Result<SavState> {
    let s = potential(grid, &state.u, state.p);
    let c0 = C0_TARGET - s;
    let v2 = state.v * state.v + c0 - state.c0;
    if !(v2 >= 0.0) {
        return Err(Error::InconsistentAdjustment { value: v2 });
    }
    Ok(SavState {
        u: state.u.clone(),
        v: v2.sqrt(),
        c0,
        p: state.p,
    })
}

/// Applies [`adjust_c0`] when the radicand has dropped below `tol`.
pub fn maybe_adjust_c0(state: SavState, grid: &SpectralGrid, tol: f64) -> Result<(SavState, bool)> {
    if state.radicand(grid) < tol {
        let adjusted = adjust_c0(&state, grid)?;
        log::debug!("C0 adjusted from {} to {}", state.c0, adjusted.c0);
        Ok((adjusted, true))
    } else {
        Ok((state, false))
    }
}

/// Invariants sampled at one output time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantRecord {
    pub t: f64,
    /// momentum `(u, 1)_h`
    pub momentum: f64,
    /// mass `(u, u)_h`
    pub mass: f64,
    /// physical energy
    pub energy: f64,
    /// modified (SAV) energy; equals `energy` for schemes without `v`
    pub modified_energy: f64,
    pub beta_num: Option<f64>,
    pub gamma_num: Option<f64>,
}

impl InvariantRecord {
    pub const CSV_HEADER: &'static str = "t,I,M,E,Etilde";
    pub const CSV_HEADER_BREATHER: &'static str = "t,I,M,E,Etilde,beta_num,gamma_num";

    /// One CSV row, 17 significant digits per float. Breather columns are
    /// emitted only when `breather` is set (empty when unavailable).
    pub fn csv_row(&self, breather: bool) -> String {
        let mut row = format!(
            "{},{},{},{},{}",
            fmt17(self.t),
            fmt17(self.momentum),
            fmt17(self.mass),
            fmt17(self.energy),
            fmt17(self.modified_energy)
        );
        if breather {
            for value in [self.beta_num, self.gamma_num] {
                row.push(',');
                if let Some(v) = value {
                    row.push_str(&fmt17(v));
                }
            }
        }
        row
    }

    pub fn parse_csv_row(line: &str) -> Option<InvariantRecord> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 5 && fields.len() != 7 {
            return None;
        }
        let num = |s: &str| s.parse::<f64>().ok();
        let opt = |i: usize| fields.get(i).and_then(|s| num(s));
        Some(InvariantRecord {
            t: num(fields[0])?,
            momentum: num(fields[1])?,
            mass: num(fields[2])?,
            energy: num(fields[3])?,
            modified_energy: num(fields[4])?,
            beta_num: opt(5),
            gamma_num: opt(6),
        })
    }
}

/// Formats a float with 17 significant digits so it parses back exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Invariants of an SAV state.
pub fn invariants(state: &SavState, grid: &SpectralGrid, t: f64) -> InvariantRecord {
    let mut rec = field_invariants(&state.u, grid, state.p, t);
    rec.modified_energy = state.modified_energy(grid);
    rec
}

/// Invariants of a bare field; the modified energy is set to the physical one.
pub fn field_invariants(u: &[f64], grid: &SpectralGrid, p: u32, t: f64) -> InvariantRecord {
    let energy = physical_energy(grid, u, p);
    InvariantRecord {
        t,
        momentum: grid.integral_h(u),
        mass: grid.dot_h(u, u),
        energy,
        modified_energy: energy,
        beta_num: None,
        gamma_num: None,
    }
}

/// `|u^T D1 u^p|` for one stage value.
pub fn mass_flux(grid: &SpectralGrid, u: &[f64], p: u32) -> f64 {
    let up: Vec<f64> = u.iter().map(|x| x.powi(p as i32)).collect();
    let d = grid.d1(&up);
    u.iter().zip(d.iter()).map(|(a, b)| a * b).sum::<f64>().abs()
}

/// A-posteriori bound `t (4h/p) max |U^T D1 U^p|` on `|M_h(t) - M_h(0)|`.
pub fn mass_drift_bound(grid: &SpectralGrid, p: u32, t: f64, stages: &[FieldVector]) -> f64 {
    if stages.is_empty() {
        return 0.0;
    }
    let max = stages.iter().map(|u| mass_flux(grid, u, p)).fold(0.0, f64::max);
    t * 4.0 * grid.spacing() / p as f64 * max
}

/// Running form of [`mass_drift_bound`] for use inside a time loop.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MassDriftTracker {
    max_flux: f64,
}

impl MassDriftTracker {
    pub fn record(&mut self, grid: &SpectralGrid, p: u32, stage: &[f64]) {
        self.max_flux = self.max_flux.max(mass_flux(grid, stage, p));
    }

    pub fn max_flux(&self) -> f64 {
        self.max_flux
    }

    pub fn bound(&self, grid: &SpectralGrid, p: u32, t: f64) -> f64 {
        t * 4.0 * grid.spacing() / p as f64 * self.max_flux
    }
}
