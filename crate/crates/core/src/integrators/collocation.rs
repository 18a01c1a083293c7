//! Gauss-Legendre collocation steps for the SAV system and for the plain
//! equation, both solved by the stage fixed-point iteration
//!
//! ```text
//! (I + tau a_ii D3) f_i + sum_{j != i} tau a_ij D3 f_j = -D3 u^m - D1 N_i^l
//! ```
//!
//! where the nonlinear flux `N_i^l` is lagged one iteration. The linear part
//! is inverted exactly per Fourier mode by [`StageSolver`].

use num_complex::Complex64;

use super::tableau::ButcherTableau;
use super::{FixedPoint, StepStats};
use crate::error::{Error, Result};
use crate::sav::{checked_root, rhs_f, SavState};
use crate::spectral::{FieldVector, SpectralGrid, StageSolver};

/// Reusable collocation stepper; caches the per-mode stage inverse for the
/// most recent step size.
#[derive(Clone, Debug)]
pub struct CollocationStepper {
    tableau: ButcherTableau,
    solver: Option<StageSolver>,
    warm: Option<(f64, Vec<FieldVector>)>,
    warm_start: bool,
}

/// Converged stage data of one step.
#[derive(Clone, Debug)]
pub struct StageOutcome {
    pub stats: StepStats,
    /// stage values `U_i`
    pub stages: Vec<FieldVector>,
}

impl CollocationStepper {
    pub fn new(tableau: ButcherTableau) -> Result<Self> {
        if !tableau.is_symplectic() {
            return Err(Error::InvalidConfig(format!(
                "tableau {} is not symplectic (residual {:e})",
                tableau.name,
                tableau.symplectic_residual()
            )));
        }
        Ok(CollocationStepper {
            tableau,
            solver: None,
            warm: None,
            warm_start: false,
        })
    }

    /// Start each iteration from the previous step's stage derivatives
    /// instead of `f(u^m, v^m)`.
    pub fn with_warm_start(mut self, enabled: bool) -> Self {
        self.warm_start = enabled;
        self
    }

    pub fn tableau(&self) -> &ButcherTableau {
        &self.tableau
    }

    fn solver(&mut self, grid: &SpectralGrid, tau: f64) -> Result<StageSolver> {
        match &self.solver {
            Some(s) if s.tau() == tau && s.stages() == self.tableau.stages() => Ok(s.clone()),
            _ => {
                let s = StageSolver::new(grid, tau, &self.tableau.a)?;
                self.solver = Some(s.clone());
                Ok(s)
            }
        }
    }

    fn initial_guess(&self, f0: FieldVector, tau: f64) -> Vec<FieldVector> {
        let s = self.tableau.stages();
        let c = &self.tableau.c;
        match &self.warm {
            Some((t, prev)) if self.warm_start && *t == tau && prev.len() == s => {
                // extrapolate the previous stage polynomial to nodes 1 + c_i
                (0..s)
                    .map(|i| {
                        let x = 1.0 + c[i];
                        let mut acc = FieldVector::zeros(f0.len());
                        for j in 0..s {
                            let w: f64 = (0..s).filter(|&k| k != j).map(|k| (x - c[k]) / (c[j] - c[k])).product();
                            acc.axpy(w, &prev[j]);
                        }
                        acc
                    })
                    .collect()
            }
            _ => vec![f0; s],
        }
    }

    /// One SAV collocation step of size `tau` (negative steps run backwards).
    pub fn step_sav(
        &mut self,
        state: &SavState,
        grid: &SpectralGrid,
        tau: f64,
        fp: FixedPoint,
    ) -> Result<(SavState, StageOutcome)> {
        grid.check_len(&state.u)?;
        let solver = self.solver(grid, tau)?;
        let tab = self.tableau.clone();
        let s = tab.stages();
        let p = state.p;
        let pf = p as f64;
        let c0 = state.c0;

        let lin = neg_d3_spectrum(grid, &state.u);
        let mut f = self.initial_guess(rhs_f(state, grid)?, tau);

        // Builds U_i, Phi_i, g_i, V_i from the current stage derivatives.
        let stage_data = |f: &[FieldVector]| -> Result<(Vec<FieldVector>, Vec<FieldVector>, Vec<f64>, Vec<f64>)> {
            let u_st = stage_values(&state.u, f, &tab, tau);
            let mut phi = Vec::with_capacity(s);
            let mut g = Vec::with_capacity(s);
            for (ui, fi) in u_st.iter().zip(f) {
                let up = ui.powi(p);
                let root = checked_root(grid.dot_h(&up, ui) + c0)?;
                let phi_i = up.scaled(1.0 / root);
                g.push((pf + 1.0) / 2.0 * grid.dot_h(&phi_i, fi));
                phi.push(phi_i);
            }
            let v_st: Vec<f64> = (0..s)
                .map(|i| state.v + tau * (0..s).map(|j| tab.a[i][j] * g[j]).sum::<f64>())
                .collect();
            Ok((u_st, phi, g, v_st))
        };

        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        while iterations < fp.max_iter {
            iterations += 1;
            let (_, phi, _, v_st) = stage_data(&f)?;
            let flux: Vec<FieldVector> = phi.iter().zip(&v_st).map(|(phi_i, vi)| phi_i.scaled(vi / pf)).collect();
            let next = solve_stages(grid, &solver, &lin, &flux);
            residual = max_stage_diff(&next, &f);
            f = next;
            if !residual.is_finite() {
                break;
            }
            if residual < fp.tol {
                break;
            }
        }
        if !(residual < fp.tol) {
            return Err(Error::NonConvergence { iterations, residual });
        }

        let (u_st, _, g, _) = stage_data(&f)?;
        let mut u = state.u.clone();
        let mut v = state.v;
        for i in 0..s {
            u.axpy(tau * tab.b[i], &f[i]);
            v += tau * tab.b[i] * g[i];
        }
        self.warm = Some((tau, f));
        Ok((
            SavState { u, v, c0, p },
            StageOutcome {
                stats: StepStats { iterations, residual },
                stages: u_st,
            },
        ))
    }

    /// One collocation step applied to `u_t = -D1 (D2 u + u^p / p)` directly.
    pub fn step_direct(
        &mut self,
        u: &FieldVector,
        p: u32,
        grid: &SpectralGrid,
        tau: f64,
        fp: FixedPoint,
    ) -> Result<(FieldVector, StageOutcome)> {
        grid.check_len(u)?;
        let solver = self.solver(grid, tau)?;
        let tab = self.tableau.clone();
        let s = tab.stages();
        let pf = p as f64;

        let lin = neg_d3_spectrum(grid, u);
        let f0 = crate::sav::sav_flux(grid, u, p, 1.0 / pf);
        let mut f = self.initial_guess(f0, tau);

        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        while iterations < fp.max_iter {
            iterations += 1;
            let u_st = stage_values(u, &f, &tab, tau);
            let flux: Vec<FieldVector> = u_st.iter().map(|ui| ui.powi(p).scaled(1.0 / pf)).collect();
            let next = solve_stages(grid, &solver, &lin, &flux);
            residual = max_stage_diff(&next, &f);
            f = next;
            if !residual.is_finite() || residual < fp.tol {
                break;
            }
        }
        if !(residual < fp.tol) {
            return Err(Error::NonConvergence { iterations, residual });
        }
        let u_st = stage_values(u, &f, &tab, tau);
        let mut out = u.clone();
        for i in 0..s {
            out.axpy(tau * tab.b[i], &f[i]);
        }
        self.warm = Some((tau, f));
        Ok((
            out,
            StageOutcome {
                stats: StepStats { iterations, residual },
                stages: u_st,
            },
        ))
    }
}

/// Spectrum of `-D3 u`.
fn neg_d3_spectrum(grid: &SpectralGrid, u: &[f64]) -> Vec<Complex64> {
    let k3 = grid.d3_symbol();
    grid.fft(u).into_iter().zip(k3).map(|(c, k)| -(c * k)).collect()
}

fn stage_values(u: &FieldVector, f: &[FieldVector], tab: &ButcherTableau, tau: f64) -> Vec<FieldVector> {
    let s = tab.stages();
    (0..s)
        .map(|i| {
            let mut ui = u.clone();
            for j in 0..s {
                ui.axpy(tau * tab.a[i][j], &f[j]);
            }
            ui
        })
        .collect()
}

/// Solves `M f = -D3 u^m - D1 flux_i` for all stages.
fn solve_stages(
    grid: &SpectralGrid,
    solver: &StageSolver,
    lin: &[Complex64],
    flux: &[FieldVector],
) -> Vec<FieldVector> {
    let k1 = grid.d1_symbol();
    let mut rhs: Vec<Vec<Complex64>> = flux
        .iter()
        .map(|q| {
            grid.fft(q)
                .into_iter()
                .enumerate()
                .map(|(m, c)| lin[m] - k1[m] * c)
                .collect()
        })
        .collect();
    solver.solve_spectral(&mut rhs);
    rhs.into_iter().map(|r| grid.ifft_real(r)).collect()
}

fn max_stage_diff(a: &[FieldVector], b: &[FieldVector]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
}

/// One SAV-IRK step with a freshly assembled stage solver.
pub fn step_sav_irk(
    state: &SavState,
    grid: &SpectralGrid,
    tableau: &ButcherTableau,
    tau: f64,
    fp: FixedPoint,
) -> Result<(SavState, StepStats)> {
    let mut stepper = CollocationStepper::new(tableau.clone())?;
    stepper.step_sav(state, grid, tau, fp).map(|(st, out)| (st, out.stats))
}

/// One direct IRK step on the unreformulated equation.
pub fn step_irk_direct(
    u: &FieldVector,
    p: u32,
    grid: &SpectralGrid,
    tableau: &ButcherTableau,
    tau: f64,
    fp: FixedPoint,
) -> Result<(FieldVector, StepStats)> {
    let mut stepper = CollocationStepper::new(tableau.clone())?;
    stepper.step_direct(u, p, grid, tau, fp).map(|(u, out)| (u, out.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::tableau::gauss_legendre_tableau;
    use crate::sav::{init_sav, C0Policy};
    use std::f64::consts::PI;

    fn setup() -> (SpectralGrid, SavState) {
        let g = SpectralGrid::new(PI * 4.0, 64).unwrap();
        let u = g.sample(|x| 0.5 / (x / 1.5).cosh().powi(2));
        let st = init_sav(&g, u, 2, C0Policy::default()).unwrap();
        (g, st)
    }

    const FP: FixedPoint = FixedPoint {
        tol: 1e-12,
        max_iter: 200,
    };

    #[test]
    fn zero_is_fixed() {
        let g = SpectralGrid::new(PI, 32).unwrap();
        let st = init_sav(&g, FieldVector::zeros(32), 3, C0Policy::default()).unwrap();
        for s in 1..=3 {
            let tab = gauss_legendre_tableau(s).unwrap();
            let (next, stats) = step_sav_irk(&st, &g, &tab, 0.1, FP).unwrap();
            assert_eq!(next.u.max_abs(), 0.0);
            assert_eq!(next.v, st.v);
            assert_eq!(stats.iterations, 1);
            let (u, _) = step_irk_direct(&st.u, 3, &g, &tab, 0.1, FP).unwrap();
            assert_eq!(u.max_abs(), 0.0);
        }
    }

    #[test]
    fn conserves_momentum_and_modified_energy() {
        let (g, st) = setup();
        for s in 1..=3 {
            let tab = gauss_legendre_tableau(s).unwrap();
            let mut stepper = CollocationStepper::new(tab).unwrap();
            let i0 = g.integral_h(&st.u);
            let e0 = st.modified_energy(&g);
            let mut cur = st.clone();
            for _ in 0..10 {
                cur = stepper.step_sav(&cur, &g, 0.05, FP).unwrap().0;
            }
            assert!((g.integral_h(&cur.u) - i0).abs() < 1e-12);
            assert!((cur.modified_energy(&g) - e0).abs() < 1e-11);
        }
    }

    #[test]
    fn time_reversal_round_trip() {
        let (g, st) = setup();
        for s in 1..=3 {
            let tab = gauss_legendre_tableau(s).unwrap();
            let (fwd, _) = step_sav_irk(&st, &g, &tab, 0.1, FP).unwrap();
            let (back, _) = step_sav_irk(&fwd, &g, &tab, -0.1, FP).unwrap();
            assert!(back.u.max_abs_diff(&st.u) <= 10.0 * FP.tol, "s={s}");
            assert!((back.v - st.v).abs() <= 10.0 * FP.tol);
        }
    }

    #[test]
    fn non_convergence_reported() {
        let (g, st) = setup();
        let tab = gauss_legendre_tableau(2).unwrap();
        let err = step_sav_irk(
            &st,
            &g,
            &tab,
            0.1,
            FixedPoint {
                tol: 1e-12,
                max_iter: 1,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 1, .. }));
    }

    #[test]
    fn warm_start_agrees() {
        let (g, st) = setup();
        let tab = gauss_legendre_tableau(2).unwrap();
        let mut cold = CollocationStepper::new(tab.clone()).unwrap();
        let mut warm = CollocationStepper::new(tab).unwrap().with_warm_start(true);
        let (mut a, mut b) = (st.clone(), st);
        let mut cold_iters = 0;
        let mut warm_iters = 0;
        for _ in 0..5 {
            let (na, oa) = cold.step_sav(&a, &g, 0.05, FP).unwrap();
            let (nb, ob) = warm.step_sav(&b, &g, 0.05, FP).unwrap();
            cold_iters += oa.stats.iterations;
            warm_iters += ob.stats.iterations;
            a = na;
            b = nb;
        }
        assert!(a.u.max_abs_diff(&b.u) < 1e-11);
        assert!(warm_iters <= cold_iters);
    }
}
