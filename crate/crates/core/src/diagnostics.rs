//! Error metrics, invariant drift, convergence tables and the two-method
//! reference solution.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{evolve, RunLog, RunOptions, Scheme, StepperConfig};
use crate::sav::fmt17;
use crate::scenarios::{Preset, Scenario};
use crate::spectral::{FieldVector, SpectralGrid};

/// Gap allowed between the two reference computations.
pub const REFERENCE_GAP_TOL: f64 = 1e-10;

pub fn linf_error(u: &[f64], exact: &[f64]) -> Result<f64> {
    if u.len() != exact.len() {
        return Err(Error::LengthMismatch {
            expected: exact.len(),
            got: u.len(),
        });
    }
    Ok(u.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Running maxima of the invariant deviations from the first record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftSeries {
    pub t: Vec<f64>,
    pub momentum: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
}

impl DriftSeries {
    pub fn max_momentum(&self) -> f64 {
        self.momentum.last().copied().unwrap_or(0.0)
    }
    pub fn max_mass(&self) -> f64 {
        self.mass.last().copied().unwrap_or(0.0)
    }
    pub fn max_energy(&self) -> f64 {
        self.energy.last().copied().unwrap_or(0.0)
    }
}

/// Uses the modified energy for SAV runs and the physical one otherwise.
pub fn drift_series(log: &RunLog) -> Result<DriftSeries> {
    let first = log.records.first().ok_or(Error::EmptyLog)?;
    let energy = |r: &crate::sav::InvariantRecord| {
        if log.modified_energy {
            r.modified_energy
        } else {
            r.energy
        }
    };
    let (i0, m0, e0) = (first.momentum, first.mass, energy(first));
    let mut out = DriftSeries::default();
    let (mut di, mut dm, mut de) = (0.0f64, 0.0f64, 0.0f64);
    for r in &log.records {
        di = di.max((r.momentum - i0).abs());
        dm = dm.max((r.mass - m0).abs());
        de = de.max((energy(r) - e0).abs());
        out.t.push(r.t);
        out.momentum.push(di);
        out.mass.push(dm);
        out.energy.push(de);
    }
    Ok(out)
}

/// Largest `|beta - beta_num|` and `|gamma - gamma_num|` over a breather log.
pub fn breather_deviation(log: &RunLog, beta: f64, gamma: f64) -> (f64, f64) {
    log.records.iter().fold((0.0f64, 0.0f64), |(b, g), r| {
        (
            r.beta_num.map_or(b, |x| b.max((x - beta).abs())),
            r.gamma_num.map_or(g, |x| g.max((x - gamma).abs())),
        )
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub tau: f64,
    /// `None` when the run failed or blew up
    pub error: Option<f64>,
    /// `error_{k-1} / error_k`, undefined on the first row, after a failed
    /// row, or when either error is zero
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Rows sorted by decreasing `tau`, rates filled in.
    pub fn from_errors(label: impl Into<String>, mut entries: Vec<(f64, Option<f64>)>) -> Self {
        entries.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(entries.len());
        for (tau, error) in entries {
            let rate = match (rows.last().and_then(|r| r.error), error) {
                (Some(prev), Some(e)) if prev > 0.0 && e > 0.0 => Some(prev / e),
                _ => None,
            };
            rows.push(ConvergenceRow { tau, error, rate });
        }
        ConvergenceTable {
            label: label.into(),
            rows,
        }
    }

    pub fn errors(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn rates(&self) -> Vec<Option<f64>> {
        self.rows.iter().skip(1).map(|r| r.rate).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,error,rate\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt17(r.tau),
                r.error.map(fmt17).unwrap_or_else(|| "NA".into()),
                r.rate.map(fmt17).unwrap_or_else(|| "NA".into())
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if !self.label.is_empty() {
            let _ = writeln!(s, "{}", self.label);
        }
        let _ = writeln!(s, "{:>14}  {:>12}  {:>8}", "tau", "error", "rate");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>14.6e}  {:>12}  {:>8}",
                r.tau,
                r.error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "failed".into()),
                r.rate.map(|x| format!("{x:.3}")).unwrap_or_else(|| "NA".into())
            );
        }
        s
    }
}

/// Runs `run(tau)` for every step size concurrently. A run returning an
/// error or `None` after blow-up yields a row without error or rate.
pub fn convergence_table<F>(label: &str, taus: &[f64], run: F) -> ConvergenceTable
where
    F: Fn(f64) -> Result<Option<f64>> + Sync,
{
    let entries: Vec<(f64, Option<f64>)> = taus
        .par_iter()
        .map(|&tau| {
            let err = match run(tau) {
                Ok(e) => e,
                Err(e) => {
                    log::warn!("{label}: tau = {tau} failed: {e}");
                    None
                }
            };
            (tau, err)
        })
        .collect();
    ConvergenceTable::from_errors(label, entries)
}

/// Everything a convergence run needs besides the step size.
#[derive(Clone, Debug)]
pub struct StudySetup {
    pub scenario: Scenario,
    pub grid: SpectralGrid,
    pub p: u32,
    pub t_final: f64,
    /// settings shared by every run; `scheme` and `tau` are overridden
    pub template: StepperConfig,
}

impl StudySetup {
    pub fn from_preset(preset: &Preset) -> Result<Self> {
        Ok(StudySetup {
            scenario: preset.scenario,
            grid: preset.grid()?,
            p: preset.p,
            t_final: preset.t_final,
            template: preset.config(Scheme::SavIrk4, preset.tau),
        })
    }

    pub fn config(&self, scheme: Scheme, tau: f64) -> StepperConfig {
        StepperConfig {
            scheme,
            tau,
            ..self.template.clone()
        }
    }

    /// Final field of one run, `None` on blow-up.
    pub fn final_field(&self, scheme: Scheme, tau: f64) -> Result<Option<FieldVector>> {
        let u0 = self.scenario.initial(&self.grid);
        let opts = RunOptions {
            sample_every: usize::MAX,
            track_mass_bound: false,
        };
        let (log, u) = evolve(&self.grid, u0, self.p, &self.config(scheme, tau), self.t_final, opts)?;
        Ok(if log.blowup_time.is_some() { None } else { Some(u) })
    }
}

/// Convergence of `scheme` against `target` (the exact solution at `T` or a
/// reference).
pub fn convergence_study(setup: &StudySetup, scheme: Scheme, taus: &[f64], target: &FieldVector) -> ConvergenceTable {
    convergence_table(scheme.name(), taus, |tau| {
        setup
            .final_field(scheme, tau)?
            .map(|u| linf_error(&u, target))
            .transpose()
    })
}

/// Exact solution at `T` for scenarios that have one.
pub fn exact_target(setup: &StudySetup) -> Option<FieldVector> {
    setup.scenario.exact(&setup.grid, setup.t_final)
}

#[derive(Clone, Debug)]
pub struct Reference {
    pub u: FieldVector,
    /// L-infinity distance between the mETDRK4 and SAV-IRK4 results
    pub gap: f64,
}

/// Reference solution at `T`: computed with mETDRK4 and SAV-IRK4 at
/// `tau_ref` (concurrently); the SAV-IRK4 field is returned when the two
/// agree to [`REFERENCE_GAP_TOL`].
pub fn make_reference(setup: &StudySetup, tau_ref: f64) -> Result<Reference> {
    make_reference_with_tol(setup, tau_ref, REFERENCE_GAP_TOL)
}

pub fn make_reference_with_tol(setup: &StudySetup, tau_ref: f64, tol: f64) -> Result<Reference> {
    let (etd, irk) = rayon::join(
        || setup.final_field(Scheme::Metdrk4, tau_ref),
        || setup.final_field(Scheme::SavIrk4, tau_ref),
    );
    let blown = |_| Error::InvalidConfig("reference run blew up".into());
    let etd = etd?.ok_or(()).map_err(blown)?;
    let irk = irk?.ok_or(()).map_err(blown)?;
    let gap = linf_error(&etd, &irk)?;
    log::info!("reference gap between mETDRK4 and SAV-IRK4: {gap:.3e}");
    if !(gap <= tol) {
        return Err(Error::ReferenceRejected { gap, tolerance: tol });
    }
    Ok(Reference { u: irk, gap })
}
