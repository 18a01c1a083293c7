//! Semi-implicit SAV leap-frog scheme.
//!
//! With `w = (u^{m+1} + u^{m-1})/2`, `z = (v^{m+1} + v^{m-1})/2` and
//! `q = (u^m)^p / sqrt(((u^m)^p, u^m)_h + C0)`:
//!
//! ```text
//! (w - u^{m-1})/tau + D3 w + z D1 q / p = 0
//! v^{m+1} - v^{m-1} = (p+1)/2 (q, u^{m+1} - u^{m-1})_h
//! ```
//!
//! Writing `w = w1 + z w2` decouples this into two solves with `I + tau D3`
//! and one scalar equation for `z`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sav::checked_root;
use crate::spectral::{FieldVector, SpectralGrid};

/// Two consecutive time levels of the leap-frog recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct LeapFrogLevels {
    pub u_prev: FieldVector,
    pub u_cur: FieldVector,
    pub v_prev: f64,
    pub v_cur: f64,
    pub c0: f64,
    pub p: u32,
}

/// Advances `(m-1, m)` to `(m, m+1)`.
pub fn step_sav_lf(levels: &LeapFrogLevels, grid: &SpectralGrid, tau: f64) -> Result<LeapFrogLevels> {
    grid.check_len(&levels.u_prev)?;
    grid.check_len(&levels.u_cur)?;
    let p = levels.p;
    let pf = p as f64;
    let up = levels.u_cur.powi(p);
    let root = checked_root(grid.dot_h(&up, &levels.u_cur) + levels.c0)?;
    let q = up.scaled(1.0 / root);

    let k1 = grid.d1_symbol();
    let k3 = grid.d3_symbol();
    let denom: Vec<Complex64> = k3.iter().map(|k| 1.0 + k * tau).collect();
    let w1 = grid.filter(&levels.u_prev, |m| 1.0 / denom[m]);
    let w2 = grid.filter(&q, |m| -k1[m] * (tau / pf) / denom[m]);

    let half = (pf + 1.0) / 2.0;
    let d = 1.0 - half * grid.dot_h(&q, &w2);
    if d.abs() < 1e-12 {
        return Err(Error::SingularStep { denominator: d });
    }
    let mut diff = w1.clone();
    diff.axpy(-1.0, &levels.u_prev);
    let z = (levels.v_prev + half * grid.dot_h(&q, &diff)) / d;

    let mut u_next = w1;
    u_next.axpy(z, &w2);
    for (un, uo) in u_next.iter_mut().zip(levels.u_prev.iter()) {
        *un = 2.0 * *un - uo;
    }
    Ok(LeapFrogLevels {
        u_prev: levels.u_cur.clone(),
        u_cur: u_next,
        v_prev: levels.v_cur,
        v_cur: 2.0 * z - levels.v_prev,
        c0: levels.c0,
        p,
    })
}
