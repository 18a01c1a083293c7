//! Time integrators and the evolution driver.

pub mod collocation;
pub mod etdrk4;
pub mod mcn;
pub mod sav_lf;
pub mod strang;
pub mod tableau;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sav::{self, C0Policy, InvariantRecord, MassDriftTracker, SavState};
use crate::spectral::{FieldVector, SpectralGrid};

pub use collocation::{step_irk_direct, step_sav_irk, CollocationStepper};
pub use etdrk4::{step_metdrk4, EtdCoefficients};
pub use mcn::step_mcn;
pub use sav_lf::{step_sav_lf, LeapFrogLevels};
pub use strang::step_strang;
pub use tableau::{gauss_legendre_tableau, ButcherTableau};

/// Solutions whose sup-norm exceeds this are treated as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "SAV-IRK2")]
    SavIrk2,
    #[serde(rename = "SAV-IRK4")]
    SavIrk4,
    #[serde(rename = "SAV-IRK6")]
    SavIrk6,
    #[serde(rename = "IRK2")]
    Irk2,
    #[serde(rename = "IRK4")]
    Irk4,
    #[serde(rename = "IRK6")]
    Irk6,
    #[serde(rename = "MCN")]
    Mcn,
    #[serde(rename = "SAV-LF")]
    SavLf,
    #[serde(rename = "SS")]
    Ss,
    #[serde(rename = "mETDRK4")]
    Metdrk4,
}

impl Scheme {
    pub const ALL: [Scheme; 10] = [
        Scheme::SavIrk2,
        Scheme::SavIrk4,
        Scheme::SavIrk6,
        Scheme::Irk2,
        Scheme::Irk4,
        Scheme::Irk6,
        Scheme::Mcn,
        Scheme::SavLf,
        Scheme::Ss,
        Scheme::Metdrk4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::SavIrk2 => "SAV-IRK2",
            Scheme::SavIrk4 => "SAV-IRK4",
            Scheme::SavIrk6 => "SAV-IRK6",
            Scheme::Irk2 => "IRK2",
            Scheme::Irk4 => "IRK4",
            Scheme::Irk6 => "IRK6",
            Scheme::Mcn => "MCN",
            Scheme::SavLf => "SAV-LF",
            Scheme::Ss => "SS",
            Scheme::Metdrk4 => "mETDRK4",
        }
    }

    /// Formal order of accuracy in time.
    pub fn order(self) -> u32 {
        match self {
            Scheme::SavIrk2 | Scheme::Irk2 | Scheme::Mcn | Scheme::SavLf | Scheme::Ss => 2,
            Scheme::SavIrk4 | Scheme::Irk4 | Scheme::Metdrk4 => 4,
            Scheme::SavIrk6 | Scheme::Irk6 => 6,
        }
    }

    /// Whether the scheme carries the auxiliary variable (and so conserves
    /// the modified rather than the physical energy).
    pub fn is_sav(self) -> bool {
        matches!(
            self,
            Scheme::SavIrk2 | Scheme::SavIrk4 | Scheme::SavIrk6 | Scheme::SavLf
        )
    }

    fn stages(self) -> Option<usize> {
        match self {
            Scheme::SavIrk2 | Scheme::Irk2 => Some(1),
            Scheme::SavIrk4 | Scheme::Irk4 => Some(2),
            Scheme::SavIrk6 | Scheme::Irk6 => Some(3),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name().to_ascii_uppercase() == key)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

/// Stopping rule of a fixed-point iteration: `max |x^{l+1} - x^l| < tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub tau: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// reuse the previous step's stage derivatives as the initial iterate
    pub warm_start: bool,
    /// radicand threshold for the `C0` shift
    pub c0_tol: f64,
    pub c0_policy: C0Policy,
    /// 2/3 rule on the conservation-law substep of SS
    pub ss_dealias: bool,
}

impl StepperConfig {
    pub fn new(scheme: Scheme, tau: f64) -> Self {
        StepperConfig {
            scheme,
            tau,
            fp_tol: 1e-12,
            fp_max_iter: 200,
            warm_start: false,
            c0_tol: sav::DEFAULT_C0_TOL,
            c0_policy: C0Policy::default(),
            ss_dealias: true,
        }
    }

    pub fn with_fp_tol(mut self, tol: f64) -> Self {
        self.fp_tol = tol;
        self
    }

    pub fn fixed_point(&self) -> FixedPoint {
        FixedPoint {
            tol: self.fp_tol,
            max_iter: self.fp_max_iter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.fp_tol.is_finite() && self.fp_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "fp_tol must be positive, got {}",
                self.fp_tol
            )));
        }
        if self.fp_max_iter < 1 {
            return Err(Error::InvalidConfig("fp_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// What a single step reports back to the driver.
#[derive(Clone, Debug, Default)]
pub struct StepReport {
    pub stats: StepStats,
    /// intermediate values entering the mass-drift bound; empty means "use u"
    pub stages: Vec<FieldVector>,
    pub c0_adjusted: bool,
}

/// A scheme together with its evolving state.
pub trait TimeStepper: Send {
    fn scheme(&self) -> Scheme;
    fn field(&self) -> &FieldVector;
    fn step(&mut self, grid: &SpectralGrid, tau: f64) -> Result<StepReport>;
    fn record(&self, grid: &SpectralGrid, t: f64) -> InvariantRecord;
    /// Current `(v, C0)` for SAV schemes.
    fn auxiliary(&self) -> Option<(f64, f64)> {
        None
    }
}

struct SavIrkStepper {
    scheme: Scheme,
    inner: CollocationStepper,
    state: SavState,
    fp: FixedPoint,
    c0_tol: f64,
}

impl TimeStepper for SavIrkStepper {
    fn scheme(&self) -> Scheme {
        self.scheme
    }
    fn field(&self) -> &FieldVector {
        &self.state.u
    }
    fn step(&mut self, grid: &SpectralGrid, tau: f64) -> Result<StepReport> {
        let (next, outcome) = match self.inner.step_sav(&self.state, grid, tau, self.fp) {
            Err(Error::AdjustmentRequired { .. }) => {
                // a stage radicand went non-positive: shift C0 now and retry
                self.state = sav::adjust_c0(&self.state, grid)?;
                self.inner.step_sav(&self.state, grid, tau, self.fp)?
            }
            other => other?,
        };
        let (next, adjusted) = sav::maybe_adjust_c0(next, grid, self.c0_tol)?;
        self.state = next;
        Ok(StepReport {
            stats: outcome.stats,
            stages: outcome.stages,
            c0_adjusted: adjusted,
        })
    }
    fn record(&self, grid: &SpectralGrid, t: f64) -> InvariantRecord {
        sav::invariants(&self.state, grid, t)
    }
    fn auxiliary(&self) -> Option<(f64, f64)> {
        Some((self.state.v, self.state.c0))
    }
}

struct IrkStepper {
    scheme: Scheme,
    inner: CollocationStepper,
    u: FieldVector,
    p: u32,
    fp: FixedPoint,
}

impl TimeStepper for IrkStepper {
    fn scheme(&self) -> Scheme {
        self.scheme
    }
    fn field(&self) -> &FieldVector {
        &self.u
    }
    fn step(&mut self, grid: &SpectralGrid, tau: f64) -> Result<StepReport> {
        let (u, outcome) = self.inner.step_direct(&self.u, self.p, grid, tau, self.fp)?;
        self.u = u;
        Ok(StepReport {
            stats: outcome.stats,
            stages: outcome.stages,
            c0_adjusted: false,
        })
    }
    fn record(&self, grid: &SpectralGrid, t: f64) -> InvariantRecord {
        sav::field_invariants(&self.u, grid, self.p, t)
    }
}

/// MCN, Strang splitting and mETDRK4: one-step schemes on `u` alone.
struct FieldStepper {
    scheme: Scheme,
    u: FieldVector,
    p: u32,
    fp: FixedPoint,
    ss_dealias: bool,
    etd: Option<EtdCoefficients>,
    cfl_warned: bool,
}

impl TimeStepper for FieldStepper {
    fn scheme(&self) -> Scheme {
        self.scheme
    }
    fn field(&self) -> &FieldVector {
        &self.u
    }
    fn step(&mut self, grid: &SpectralGrid, tau: f64) -> Result<StepReport> {
        let stats = match self.scheme {
            Scheme::Mcn => {
                let (u, st) = step_mcn(&self.u, self.p, grid, tau, self.fp)?;
                self.u = u;
                st
            }
            Scheme::Ss => {
                let (u, st) = step_strang(&self.u, self.p, grid, tau, self.fp, self.ss_dealias)?;
                self.u = u;
                st
            }
            Scheme::Metdrk4 => {
                if self.etd.as_ref().map(|c| c.tau) != Some(tau) {
                    self.etd = Some(EtdCoefficients::new(grid, tau));
                }
                let cfl = etdrk4::advective_cfl(grid, &self.u, self.p, tau);
                // RK4 stability interval on the imaginary axis
                if cfl > 2.8 && !self.cfl_warned {
                    log::warn!("mETDRK4 step {tau} exceeds the advective CFL limit (indicator {cfl:.2})");
                    self.cfl_warned = true;
                }
                let coeffs = self.etd.as_ref().expect("coefficients set above");
                self.u = coeffs.step(grid, &self.u, self.p);
                StepStats::default()
            }
            _ => unreachable!("constructed only for field schemes"),
        };
        Ok(StepReport {
            stats,
            stages: Vec::new(),
            c0_adjusted: false,
        })
    }
    fn record(&self, grid: &SpectralGrid, t: f64) -> InvariantRecord {
        sav::field_invariants(&self.u, grid, self.p, t)
    }
}

struct LeapFrogStepper {
    levels: Option<LeapFrogLevels>,
    // level 0 before the bootstrap step
    u0: FieldVector,
    v0: f64,
    c0: f64,
    p: u32,
    fp: FixedPoint,
    c0_tol: f64,
    last_tau: Option<f64>,
}

impl LeapFrogStepper {
    fn bootstrap(&self, u: &FieldVector, grid: &SpectralGrid, tau: f64) -> Result<(FieldVector, f64, StepStats)> {
        let (u1, stats) = step_mcn(u, self.p, grid, tau, self.fp)?;
        let v1 = sav::checked_root(sav::potential(grid, &u1, self.p) + self.c0)?;
        Ok((u1, v1, stats))
    }
}

impl TimeStepper for LeapFrogStepper {
    fn scheme(&self) -> Scheme {
        Scheme::SavLf
    }
    fn field(&self) -> &FieldVector {
        match &self.levels {
            Some(l) => &l.u_cur,
            None => &self.u0,
        }
    }
    fn step(&mut self, grid: &SpectralGrid, tau: f64) -> Result<StepReport> {
        let same_tau = self.last_tau == Some(tau);
        self.last_tau = Some(tau);
        let mut stats = StepStats::default();
        match self.levels.take() {
            None => {
                let (u1, v1, st) = self.bootstrap(&self.u0, grid, tau)?;
                stats = st;
                self.levels = Some(LeapFrogLevels {
                    u_prev: self.u0.clone(),
                    u_cur: u1,
                    v_prev: self.v0,
                    v_cur: v1,
                    c0: self.c0,
                    p: self.p,
                });
            }
            Some(l) if !same_tau => {
                // a changed step size (final partial step) restarts the recursion
                let (u1, v1, st) = self.bootstrap(&l.u_cur, grid, tau)?;
                stats = st;
                self.levels = Some(LeapFrogLevels {
                    u_prev: l.u_cur,
                    u_cur: u1,
                    v_prev: l.v_cur,
                    v_cur: v1,
                    c0: l.c0,
                    p: l.p,
                });
            }
            Some(l) => self.levels = Some(step_sav_lf(&l, grid, tau)?),
        }
        let mut adjusted = false;
        if let Some(l) = self.levels.as_mut() {
            let radicand = sav::potential(grid, &l.u_cur, l.p) + l.c0;
            if radicand < self.c0_tol {
                let c0 = sav::C0_TARGET - sav::potential(grid, &l.u_cur, l.p);
                let shift = |v: f64| -> Result<f64> {
                    let v2 = v * v + c0 - l.c0;
                    if v2 >= 0.0 {
                        Ok(v2.sqrt())
                    } else {
                        Err(Error::InconsistentAdjustment { value: v2 })
                    }
                };
                l.v_cur = shift(l.v_cur)?;
                l.v_prev = shift(l.v_prev)?;
                l.c0 = c0;
                adjusted = true;
            }
        }
        Ok(StepReport {
            stats,
            stages: Vec::new(),
            c0_adjusted: adjusted,
        })
    }
    fn record(&self, grid: &SpectralGrid, t: f64) -> InvariantRecord {
        let (u, v, c0) = match &self.levels {
            Some(l) => (&l.u_cur, l.v_cur, l.c0),
            None => (&self.u0, self.v0, self.c0),
        };
        let mut rec = sav::field_invariants(u, grid, self.p, t);
        let pf = self.p as f64;
        rec.modified_energy = sav::kinetic(grid, u) - (v * v - c0) / (pf * (pf + 1.0));
        rec
    }
    fn auxiliary(&self) -> Option<(f64, f64)> {
        Some(match &self.levels {
            Some(l) => (l.v_cur, l.c0),
            None => (self.v0, self.c0),
        })
    }
}

/// Builds the stepper for `cfg.scheme` starting from `u0`.
pub fn make_stepper(grid: &SpectralGrid, u0: FieldVector, p: u32, cfg: &StepperConfig) -> Result<Box<dyn TimeStepper>> {
    cfg.validate()?;
    grid.check_len(&u0)?;
    if p < 2 {
        return Err(Error::InvalidConfig(format!(
            "nonlinearity exponent must be >= 2, got {p}"
        )));
    }
    let fp = cfg.fixed_point();
    let scheme = cfg.scheme;
    Ok(match scheme {
        Scheme::SavIrk2 | Scheme::SavIrk4 | Scheme::SavIrk6 => {
            let tab = gauss_legendre_tableau(scheme.stages().expect("collocation"))?;
            Box::new(SavIrkStepper {
                scheme,
                inner: CollocationStepper::new(tab)?.with_warm_start(cfg.warm_start),
                state: sav::init_sav(grid, u0, p, cfg.c0_policy)?,
                fp,
                c0_tol: cfg.c0_tol,
            })
        }
        Scheme::Irk2 | Scheme::Irk4 | Scheme::Irk6 => {
            let tab = gauss_legendre_tableau(scheme.stages().expect("collocation"))?;
            Box::new(IrkStepper {
                scheme,
                inner: CollocationStepper::new(tab)?.with_warm_start(cfg.warm_start),
                u: u0,
                p,
                fp,
            })
        }
        Scheme::Mcn | Scheme::Ss | Scheme::Metdrk4 => Box::new(FieldStepper {
            scheme,
            u: u0,
            p,
            fp,
            ss_dealias: cfg.ss_dealias,
            etd: None,
            cfl_warned: false,
        }),
        Scheme::SavLf => {
            let st = sav::init_sav(grid, u0, p, cfg.c0_policy)?;
            Box::new(LeapFrogStepper {
                levels: None,
                u0: st.u,
                v0: st.v,
                c0: st.c0,
                p,
                fp,
                c0_tol: cfg.c0_tol,
                last_tau: None,
            })
        }
    })
}

/// Output of a run.
#[derive(Clone, Debug, Default)]
pub struct RunLog {
    pub records: Vec<InvariantRecord>,
    /// `mass_bounds[k]` bounds `|M(records[k].t) - M(0)|` when tracking is on
    pub mass_bounds: Vec<f64>,
    pub steps: usize,
    pub final_time: f64,
    pub fp_iterations_total: usize,
    pub max_fp_residual: f64,
    pub c0_adjustments: usize,
    pub blowup_time: Option<f64>,
    /// drift of the modified (SAV) energy is the meaningful one
    pub modified_energy: bool,
}

/// Knobs of [`Evolution::run_to`] beyond the stepper configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub sample_every: usize,
    pub track_mass_bound: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            sample_every: 1,
            track_mass_bound: false,
        }
    }
}

/// Incremental driver around a [`TimeStepper`]. Keeps the partial log when a
/// step fails.
pub struct Evolution {
    grid: SpectralGrid,
    stepper: Box<dyn TimeStepper>,
    cfg: StepperConfig,
    p: u32,
    options: RunOptions,
    t: f64,
    // completed steps of the nominal size
    full_steps: usize,
    tracker: MassDriftTracker,
    log: RunLog,
    halted: bool,
}

impl Evolution {
    pub fn new(grid: SpectralGrid, u0: FieldVector, p: u32, cfg: StepperConfig, options: RunOptions) -> Result<Self> {
        if options.sample_every == 0 {
            return Err(Error::InvalidConfig("sample_every must be at least 1".into()));
        }
        let stepper = make_stepper(&grid, u0, p, &cfg)?;
        let mut evo = Evolution {
            log: RunLog {
                modified_energy: cfg.scheme.is_sav(),
                ..RunLog::default()
            },
            grid,
            stepper,
            cfg,
            p,
            options,
            t: 0.0,
            full_steps: 0,
            tracker: MassDriftTracker::default(),
            halted: false,
        };
        evo.push_record();
        Ok(evo)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn field(&self) -> &FieldVector {
        self.stepper.field()
    }

    pub fn auxiliary(&self) -> Option<(f64, f64)> {
        self.stepper.auxiliary()
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    fn push_record(&mut self) {
        let rec = self.stepper.record(&self.grid, self.t);
        if self.log.records.last().map(|r| r.t) == Some(rec.t) && !self.log.records.is_empty() {
            return;
        }
        self.log.records.push(rec);
        if self.options.track_mass_bound {
            self.log
                .mass_bounds
                .push(self.tracker.bound(&self.grid, self.p, self.t));
        }
    }

    /// Advances to `t_final`: whole steps of `tau`, then one partial step for
    /// any remainder. Records every `sample_every` steps and at the end.
    /// Stops early (without error) on blow-up.
    pub fn run_to(&mut self, t_final: f64, mut observer: impl FnMut(usize, f64, &FieldVector)) -> Result<()> {
        let tau = self.cfg.tau;
        let target_steps = ((t_final / tau) * (1.0 + 1e-12)).floor() as usize;
        while !self.halted && self.full_steps < target_steps {
            let t_next = (self.full_steps + 1) as f64 * tau;
            self.advance(tau, t_next)?;
            self.full_steps += 1;
            if self.log.steps % self.options.sample_every == 0 {
                self.push_record();
            }
            observer(self.log.steps, self.t, self.stepper.field());
        }
        let remainder = t_final - self.t;
        if !self.halted && remainder > 1e-12 * t_final.abs().max(1.0) {
            self.advance(remainder, t_final)?;
            observer(self.log.steps, self.t, self.stepper.field());
        }
        self.push_record();
        Ok(())
    }

    fn advance(&mut self, dt: f64, t_next: f64) -> Result<()> {
        let index = self.log.steps;
        let t = self.t;
        let report = self.stepper.step(&self.grid, dt).map_err(|e| Error::Step {
            index,
            t,
            source: Box::new(e),
        })?;
        self.t = t_next;
        self.log.steps += 1;
        self.log.final_time = t_next;
        self.log.fp_iterations_total += report.stats.iterations;
        self.log.max_fp_residual = self.log.max_fp_residual.max(report.stats.residual);
        if report.c0_adjusted {
            self.log.c0_adjustments += 1;
        }
        if self.options.track_mass_bound {
            if report.stages.is_empty() {
                let u = self.stepper.field().clone();
                self.tracker.record(&self.grid, self.p, &u);
            } else {
                for s in &report.stages {
                    self.tracker.record(&self.grid, self.p, s);
                }
            }
        }
        let u = self.stepper.field();
        if !u.is_finite() || u.max_abs() > BLOWUP_THRESHOLD {
            self.log.blowup_time = Some(self.t);
            self.halted = true;
            self.push_record_unchecked();
        }
        Ok(())
    }

    fn push_record_unchecked(&mut self) {
        let rec = self.stepper.record(&self.grid, self.t);
        self.log.records.push(rec);
        if self.options.track_mass_bound {
            self.log
                .mass_bounds
                .push(self.tracker.bound(&self.grid, self.p, self.t));
        }
    }
}

/// Runs `cfg.scheme` from `u0` to `t_final`.
pub fn evolve(
    grid: &SpectralGrid,
    u0: FieldVector,
    p: u32,
    cfg: &StepperConfig,
    t_final: f64,
    options: RunOptions,
) -> Result<(RunLog, FieldVector)> {
    let mut evo = Evolution::new(grid.clone(), u0, p, cfg.clone(), options)?;
    evo.run_to(t_final, |_, _, _| {})?;
    let u = evo.field().clone();
    Ok((evo.into_log(), u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(4.0 * PI, 64).unwrap()
    }

    fn bump(g: &SpectralGrid) -> FieldVector {
        g.sample(|x| 0.5 / (x / 1.5).cosh().powi(2))
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("sav_irk4".parse::<Scheme>().unwrap(), Scheme::SavIrk4);
        assert_eq!("metdrk4".parse::<Scheme>().unwrap(), Scheme::Metdrk4);
        assert!("RK45".parse::<Scheme>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::new(Scheme::Mcn, 0.0).validate().is_err());
        let mut c = StepperConfig::new(Scheme::Mcn, 0.1);
        c.fp_max_iter = 0;
        assert!(c.validate().is_err());
        c.fp_max_iter = 1;
        c.fp_tol = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_final_time_gives_single_record() {
        let g = grid();
        for s in Scheme::ALL {
            let (log, _) = evolve(&g, bump(&g), 2, &StepperConfig::new(s, 0.1), 0.0, RunOptions::default()).unwrap();
            assert_eq!(log.records.len(), 1, "{s}");
            assert_eq!(log.steps, 0);
        }
    }

    #[test]
    fn partial_final_step() {
        let g = grid();
        let cfg = StepperConfig::new(Scheme::SavIrk4, 0.3);
        let (log, _) = evolve(&g, bump(&g), 2, &cfg, 1.0, RunOptions::default()).unwrap();
        assert_eq!(log.steps, 4);
        assert!((log.final_time - 1.0).abs() < 1e-15);
        assert!((log.records.last().unwrap().t - 1.0).abs() < 1e-15);
        let times: Vec<f64> = log.records.iter().map(|r| r.t).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sampling_cadence() {
        let g = grid();
        let cfg = StepperConfig::new(Scheme::Metdrk4, 0.01);
        let opts = RunOptions {
            sample_every: 10,
            track_mass_bound: true,
        };
        let (log, _) = evolve(&g, bump(&g), 2, &cfg, 1.0, opts).unwrap();
        assert_eq!(log.records.len(), 11);
        assert_eq!(log.mass_bounds.len(), 11);
    }

    #[test]
    fn every_scheme_runs_and_conserves_momentum() {
        let g = grid();
        for s in Scheme::ALL {
            let cfg = StepperConfig::new(s, 0.02);
            let (log, u) = evolve(&g, bump(&g), 2, &cfg, 0.5, RunOptions::default()).unwrap();
            assert!(u.is_finite());
            let i0 = log.records[0].momentum;
            for r in &log.records {
                assert!((r.momentum - i0).abs() < 1e-12, "{s}: {}", (r.momentum - i0).abs());
            }
        }
    }

    #[test]
    fn blowup_is_detected() {
        let g = grid();
        let u0 = g.sample(|x| 1e9 * (x / 4.0).sin());
        let cfg = StepperConfig::new(Scheme::Metdrk4, 1e-3);
        let (log, _) = evolve(&g, u0, 2, &cfg, 1.0, RunOptions::default()).unwrap();
        assert!(log.blowup_time.is_some());
    }

    #[test]
    fn step_errors_carry_index() {
        let g = grid();
        let mut cfg = StepperConfig::new(Scheme::SavIrk4, 0.1);
        cfg.fp_max_iter = 1;
        let err = evolve(&g, bump(&g), 2, &cfg, 1.0, RunOptions::default()).unwrap_err();
        match err {
            Error::Step { index, source, .. } => {
                assert_eq!(index, 0);
                assert!(matches!(*source, Error::NonConvergence { .. }));
            }
            other => panic!("{other:?}"),
        }
    }
}
