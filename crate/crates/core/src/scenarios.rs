//! Initial data, exact solutions and breather diagnostics for the three
//! standard experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{RunLog, Scheme, StepperConfig};
use crate::sav::C0Policy;
use crate::spectral::{FieldVector, SpectralGrid};

/// Largest `|u0|` allowed at the ends of the interval before a warning.
pub const BOUNDARY_TOL: f64 = 1e-12;

// translates summed on each side when wrapping a decaying solution
const WRAPS: i32 = 2;

fn sech(x: f64) -> f64 {
    // cosh overflows past ~710; sech underflows gracefully
    if x.abs() > 700.0 {
        0.0
    } else {
        1.0 / x.cosh()
    }
}

/// mKdV breather parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreatherParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BreatherParams {
    fn default() -> Self {
        BreatherParams { alpha: 3.0, beta: 1.0 }
    }
}

impl BreatherParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidConfig(format!("breather needs alpha != 0, got {alpha}")));
        }
        Ok(BreatherParams { alpha, beta })
    }

    /// Group velocity (to the left).
    pub fn gamma(&self) -> f64 {
        3.0 * self.alpha * self.alpha - self.beta * self.beta
    }

    /// Phase velocity.
    pub fn delta(&self) -> f64 {
        self.alpha * self.alpha - 3.0 * self.beta * self.beta
    }
}

/// `B(x, t)` on the whole line.
pub fn breather(params: &BreatherParams, x: f64, t: f64) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    let y1 = a * (x + params.delta() * t);
    let y2 = b * (x + params.gamma() * t);
    let s = sech(y2);
    let r = b / a;
    let num = y1.cos() - r * y1.sin() * y2.tanh();
    let den = 1.0 + r * r * y1.sin().powi(2) * s * s;
    2.0 * 6f64.sqrt() * b * s * num / den
}

/// KdV two-soliton parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSolitonParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub x1: f64,
    pub x2: f64,
}

impl Default for TwoSolitonParams {
    fn default() -> Self {
        TwoSolitonParams {
            gamma1: 0.4,
            gamma2: 0.6,
            x1: 10.0,
            x2: 25.0,
        }
    }
}

impl TwoSolitonParams {
    pub fn new(gamma1: f64, gamma2: f64, x1: f64, x2: f64) -> Result<Self> {
        if gamma1 + gamma2 == 0.0 {
            return Err(Error::InvalidConfig("two-soliton speeds must not cancel".into()));
        }
        Ok(TwoSolitonParams { gamma1, gamma2, x1, x2 })
    }

    /// Interaction coefficient `a^2 = ((g1 - g2)/(g1 + g2))^2`.
    pub fn a2(&self) -> f64 {
        ((self.gamma1 - self.gamma2) / (self.gamma1 + self.gamma2)).powi(2)
    }
}

/// Exact two-soliton solution on the whole line.
pub fn two_soliton(params: &TwoSolitonParams, x: f64, t: f64) -> f64 {
    let (g1, g2) = (params.gamma1, params.gamma2);
    let th1 = g1 * x - g1.powi(3) * t + params.x1;
    let th2 = g2 * x - g2.powi(3) * t + params.x2;
    let a2 = params.a2();
    // scale numerator by e^{-2m} and denominator by e^{-m}, m the largest exponent
    let m = 0f64.max(th1).max(th2).max(th1 + th2);
    let ex = |e: f64| (e - 2.0 * m).exp();
    let num = g1 * g1 * ex(th1)
        + g2 * g2 * ex(th2)
        + 2.0 * (g2 - g1).powi(2) * ex(th1 + th2)
        + a2 * (g2 * g2 * ex(2.0 * th1 + th2) + g1 * g1 * ex(th1 + 2.0 * th2));
    let den = (-m).exp() + (th1 - m).exp() + (th2 - m).exp() + a2 * (th1 + th2 - m).exp();
    12.0 * num / (den * den)
}

/// Example-3 initial profile `-sech^2 x`.
pub fn scatter_ic(x: f64) -> f64 {
    -sech(x).powi(2)
}

/// `M[Q]` and `|E[Q]|` for `Q = sqrt(6) sech x`.
pub fn q_soliton_constants() -> (f64, f64) {
    (12.0, 2.0)
}

/// `(beta_num, gamma_num)` from the mass and the physical energy.
pub fn breather_diagnostics(mass: f64, energy: f64) -> Result<(f64, f64)> {
    let (mq, eq) = q_soliton_constants();
    let beta = mass / (2.0 * mq);
    if !(beta > 0.0) {
        return Err(Error::NonPositiveBeta(beta));
    }
    Ok((beta, energy / (2.0 * beta * eq)))
}

/// Fills `beta_num` and `gamma_num` on every record.
pub fn attach_breather_diagnostics(log: &mut RunLog) -> Result<()> {
    for rec in &mut log.records {
        if !(rec.mass.is_finite() && rec.energy.is_finite()) {
            continue;
        }
        let (b, g) = breather_diagnostics(rec.mass, rec.energy)?;
        rec.beta_num = Some(b);
        rec.gamma_num = Some(g);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Breather(BreatherParams),
    TwoSoliton(TwoSolitonParams),
    Scatter,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Breather(_) => "breather",
            Scenario::TwoSoliton(_) => "two_soliton",
            Scenario::Scatter => "scatter",
        }
    }

    /// Nonlinearity exponent the scenario is posed for.
    pub fn exponent(&self) -> u32 {
        match self {
            Scenario::Breather(_) => 3,
            _ => 2,
        }
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        match self {
            Scenario::Breather(b) => breather(b, x, t),
            Scenario::TwoSoliton(s) => two_soliton(s, x, t),
            Scenario::Scatter => scatter_ic(x),
        }
    }

    pub fn has_exact(&self) -> bool {
        !matches!(self, Scenario::Scatter)
    }

    pub fn is_breather(&self) -> bool {
        matches!(self, Scenario::Breather(_))
    }

    pub fn initial(&self, grid: &SpectralGrid) -> FieldVector {
        let u = grid.sample(|x| self.value(x, 0.0));
        let l = grid.half_length();
        let edge = self.value(-l, 0.0).abs().max(self.value(l, 0.0).abs());
        if edge > BOUNDARY_TOL {
            log::warn!(
                "{} initial data is {edge:.2e} at the ends of [-{l}, {l}]; periodic truncation is not negligible",
                self.name()
            );
        }
        u
    }

    /// Exact solution at `t`, wrapped periodically onto the grid.
    pub fn exact(&self, grid: &SpectralGrid, t: f64) -> Option<FieldVector> {
        if !self.has_exact() {
            return None;
        }
        let period = 2.0 * grid.half_length();
        Some(grid.sample(|x| (-WRAPS..=WRAPS).map(|k| self.value(x + k as f64 * period, t)).sum()))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "breather" => Ok(Scenario::Breather(BreatherParams::default())),
            "two_soliton" | "twosoliton" => Ok(Scenario::TwoSoliton(TwoSolitonParams::default())),
            "scatter" => Ok(Scenario::Scatter),
            _ => Err(Error::UnknownScenario(s.to_string())),
        }
    }
}

/// A scenario with its grid and the default run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub scenario: Scenario,
    pub half_length: f64,
    pub n: usize,
    pub p: u32,
    pub tau: f64,
    pub t_final: f64,
    pub fp_tol: f64,
    #[serde(default)]
    pub c0_policy: C0Policy,
}

impl Preset {
    pub fn example1() -> Self {
        Preset {
            name: "example1".into(),
            scenario: Scenario::Breather(BreatherParams::default()),
            half_length: 10.0 * std::f64::consts::PI,
            n: 1024,
            p: 3,
            tau: 0.02,
            t_final: 1000.0,
            fp_tol: 1e-11,
            c0_policy: C0Policy::default(),
        }
    }

    pub fn example2() -> Self {
        Preset {
            name: "example2".into(),
            scenario: Scenario::TwoSoliton(TwoSolitonParams::default()),
            half_length: 30.0 * std::f64::consts::PI,
            n: 2048,
            p: 2,
            tau: 0.1,
            t_final: 200.0,
            fp_tol: 1e-12,
            // the error constants of the SAV schemes depend on C0
            c0_policy: C0Policy::Fixed(100.0),
        }
    }

    pub fn example3() -> Self {
        Preset {
            name: "example3".into(),
            scenario: Scenario::Scatter,
            half_length: 30.0 * std::f64::consts::PI,
            n: 2048,
            p: 2,
            tau: 0.01,
            t_final: 1.0,
            fp_tol: 1e-12,
            c0_policy: C0Policy::default(),
        }
    }

    /// Long breather run (`T = 2000`); not part of any quick check.
    pub fn breather_long() -> Self {
        Preset {
            name: "breather_long".into(),
            t_final: 2000.0,
            ..Preset::example1()
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "example1" => Ok(Preset::example1()),
            "example2" => Ok(Preset::example2()),
            "example3" => Ok(Preset::example3()),
            "breather_long" | "long" => Ok(Preset::breather_long()),
            _ => Err(Error::InvalidConfig(format!("unknown preset '{name}'"))),
        }
    }

    /// The default preset for a scenario.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let mut p = match scenario {
            Scenario::Breather(_) => Preset::example1(),
            Scenario::TwoSoliton(_) => Preset::example2(),
            Scenario::Scatter => Preset::example3(),
        };
        p.scenario = scenario;
        p
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.half_length, self.n)
    }

    /// Stepper configuration with this preset's tolerances.
    pub fn config(&self, scheme: Scheme, tau: f64) -> StepperConfig {
        StepperConfig {
            c0_policy: self.c0_policy,
            ..StepperConfig::new(scheme, tau).with_fp_tol(self.fp_tol)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn breather_origin_and_speeds() {
        let b = BreatherParams::default();
        assert!((breather(&b, 0.0, 0.0) - 2.0 * 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.gamma(), 26.0);
        assert_eq!(b.delta(), 6.0);
        assert!(BreatherParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn two_soliton_parameters_and_decay() {
        let s = TwoSolitonParams::default();
        assert!((s.a2() - 1.0 / 25.0).abs() < 1e-16);
        assert!(two_soliton(&s, -400.0, 0.0).abs() < 1e-30);
        assert!(two_soliton(&s, 400.0, 0.0).abs() < 1e-30);
        assert!(two_soliton(&s, 1e6, 0.0).is_finite());
        assert!(TwoSolitonParams::new(0.5, -0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn two_soliton_matches_unscaled_formula() {
        let s = TwoSolitonParams::default();
        let direct = |x: f64, t: f64| {
            let (g1, g2) = (s.gamma1, s.gamma2);
            let e1 = (g1 * x - g1.powi(3) * t + s.x1).exp();
            let e2 = (g2 * x - g2.powi(3) * t + s.x2).exp();
            let a2 = s.a2();
            let num = g1 * g1 * e1
                + g2 * g2 * e2
                + 2.0 * (g2 - g1).powi(2) * e1 * e2
                + a2 * (g2 * g2 * e1 + g1 * g1 * e2) * e1 * e2;
            let den = 1.0 + e1 + e2 + a2 * e1 * e2;
            12.0 * num / (den * den)
        };
        for &x in &[-60.0, -41.7, -30.0, -25.0, -10.0, 0.0, 5.0] {
            for &t in &[0.0, 50.0, 120.0] {
                let (a, b) = (two_soliton(&s, x, t), direct(x, t));
                assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-3), "x={x} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn single_soliton_limit() {
        let s = TwoSolitonParams {
            x2: -400.0,
            ..TwoSolitonParams::default()
        };
        let g1 = s.gamma1;
        for i in 0..50 {
            let x = -60.0 + 2.4 * i as f64;
            let e = (g1 * x + s.x1).exp();
            let single = 12.0 * g1 * g1 * e / (1.0 + e).powi(2);
            assert!((two_soliton(&s, x, 0.0) - single).abs() < 1e-10);
        }
    }

    #[test]
    fn scatter_profile() {
        assert_eq!(scatter_ic(0.0), -1.0);
        assert!(scatter_ic(30.0 * PI).abs() < 1e-80);
        let g = Preset::example3().grid().unwrap();
        let u = Scenario::Scatter.initial(&g);
        let cubic = g.dot_h(&u.powi(2), &u);
        // -int sech^6 = -16/15
        assert!((cubic + 16.0 / 15.0).abs() < 1e-10, "{cubic}");
    }

    #[test]
    fn soliton_constants_by_quadrature() {
        let g = SpectralGrid::new(40.0, 1024).unwrap();
        let q = g.sample(|x| 6f64.sqrt() * sech(x));
        let (mq, eq) = q_soliton_constants();
        assert!((g.dot_h(&q, &q) - mq).abs() < 1e-10);
        let e = crate::sav::physical_energy(&g, &q, 3);
        assert!((e.abs() - eq).abs() < 1e-10, "{e}");
        // -Q'' + Q - Q^3/3 = 0
        let qxx = g.apply_d2(&q).unwrap();
        let res = q
            .iter()
            .zip(qxx.iter())
            .map(|(a, b)| (-b + a - a.powi(3) / 3.0).abs())
            .fold(0.0, f64::max);
        assert!(res < 1e-10, "{res}");
    }

    #[test]
    fn breather_diagnostics_on_exact_data() {
        let pre = Preset::example1();
        let g = pre.grid().unwrap();
        let u = pre.scenario.initial(&g);
        let rec = crate::sav::field_invariants(&u, &g, 3, 0.0);
        let (b, gm) = breather_diagnostics(rec.mass, rec.energy).unwrap();
        assert!((b - 1.0).abs() < 1e-6, "{b}");
        assert!((gm - 26.0).abs() < 1e-4, "{gm}");

        let sc = Scenario::Breather(BreatherParams::new(3.0, 2.0).unwrap());
        let u2 = sc.initial(&g);
        let (b2, _) = breather_diagnostics(g.dot_h(&u2, &u2), 0.0).unwrap();
        assert!((b2 - 2.0).abs() < 1e-6, "{b2}");
        assert!(breather_diagnostics(0.0, 1.0).is_err());
    }

    fn residual(g: &SpectralGrid, u: &FieldVector, ut: &FieldVector, p: u32) -> f64 {
        let pf = p as f64;
        let inner: Vec<f64> = g
            .apply_d2(u)
            .unwrap()
            .iter()
            .zip(u.iter())
            .map(|(a, b)| a + b.powi(p as i32) / pf)
            .collect();
        let flux = g.apply_d1(&inner).unwrap();
        ut.iter()
            .zip(flux.iter())
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn breather_solves_mkdv() {
        let pre = Preset::example1();
        let g = pre.grid().unwrap();
        let sc = pre.scenario;
        let u = sc.exact(&g, 0.0).unwrap();
        let dt = 1e-6;
        let ut = FieldVector::new(
            sc.exact(&g, dt)
                .unwrap()
                .iter()
                .zip(sc.exact(&g, -dt).unwrap().iter())
                .map(|(a, b)| (a - b) / (2.0 * dt))
                .collect(),
        );
        let r = residual(&g, &u, &ut, 3);
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn two_soliton_solves_kdv() {
        let pre = Preset::example2();
        let g = pre.grid().unwrap();
        let sc = pre.scenario;
        let dt = 1e-6;
        let u = sc.exact(&g, 0.0).unwrap();
        let ut = FieldVector::new(
            sc.exact(&g, dt)
                .unwrap()
                .iter()
                .zip(sc.exact(&g, -dt).unwrap().iter())
                .map(|(a, b)| (a - b) / (2.0 * dt))
                .collect(),
        );
        let r = residual(&g, &u, &ut, 2);
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn names_and_presets() {
        for n in ["breather", "two_soliton", "scatter"] {
            assert_eq!(n.parse::<Scenario>().unwrap().name(), n);
        }
        assert!("vortex".parse::<Scenario>().is_err());
        assert_eq!(Preset::by_name("example2").unwrap().n, 2048);
        assert_eq!(Preset::breather_long().t_final, 2000.0);
        assert!(Preset::by_name("example9").is_err());
    }
}
