//! Resolution of run settings from a preset, an optional TOML file and
//! command-line flags.
//!
//! ```toml
//! preset = "example2"
//!
//! [scenario]            # or: scenario = "two_soliton"
//! kind = "two_soliton"
//! gamma1 = 0.4
//! gamma2 = 0.6
//! x1 = 10.0
//! x2 = 25.0
//!
//! [grid]
//! half_length = "30pi"
//! n = 2048
//!
//! [run]
//! schemes = ["SAV-IRK4", "mETDRK4"]
//! p = 2
//! tau = 0.1
//! t_final = 20.0
//!
//! [converge]
//! taus = ["1/5", "1/10", "1/20"]
//! rate_band = [13.0, 17.0]
//!
//! [output]
//! dir = "out"
//! snapshots = 100
//! ```

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use gkdv_core::diagnostics::{StudySetup, REFERENCE_GAP_TOL};
use gkdv_core::sav::C0Policy;
use gkdv_core::scenarios::{BreatherParams, TwoSolitonParams};
use gkdv_core::{Preset, Scenario, Scheme, SpectralGrid, StepperConfig};
use serde::Deserialize;

use crate::args::Common;
use crate::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub scenario: Option<ScenarioSpec>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub converge: ConvergeSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Name(String),
    Full(Scenario),
}

/// A number, or text such as `30pi` or `1/100`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_length: Option<Number>,
    pub n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub scheme: Option<String>,
    pub schemes: Option<Vec<String>>,
    pub p: Option<u32>,
    pub tau: Option<Number>,
    pub t_final: Option<f64>,
    pub fp_tol: Option<f64>,
    pub fp_max_iter: Option<usize>,
    pub c0_tol: Option<f64>,
    pub c0: Option<f64>,
    pub warm_start: Option<bool>,
    pub ss_dealias: Option<bool>,
    pub sample_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    pub taus: Option<Vec<Number>>,
    pub tau_ref: Option<Number>,
    pub ref_tol: Option<f64>,
    pub rate_band: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub snapshots: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text =
            fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }
}

/// Everything a subcommand needs, fully resolved.
#[derive(Clone, Debug)]
pub struct Settings {
    pub preset: String,
    pub scenario: Scenario,
    pub half_length: f64,
    pub n: usize,
    pub p: u32,
    pub t_final: f64,
    /// per-run stepper settings; `scheme` holds the default scheme
    pub template: StepperConfig,
    /// schemes named in the config file, in order
    pub schemes: Vec<Scheme>,
    pub sample_every: usize,
    pub out_dir: PathBuf,
    pub snapshots: Option<usize>,
    pub taus: Vec<f64>,
    pub tau_ref: Option<f64>,
    pub ref_tol: f64,
    pub rate_band: Option<(f64, f64)>,
}

impl Settings {
    pub fn resolve(common: &Common) -> Result<Self, Failure> {
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::from_parts(common, file)
    }

    pub fn from_parts(common: &Common, file: FileConfig) -> Result<Self, Failure> {
        let scenario = match (&common.scenario, &file.scenario) {
            (Some(name), _) => Some(name.parse::<Scenario>()?),
            (None, Some(ScenarioSpec::Name(name))) => Some(name.parse::<Scenario>()?),
            (None, Some(ScenarioSpec::Full(s))) => Some(checked(*s)?),
            (None, None) => None,
        };
        let preset_name = common.preset.clone().or(file.preset.clone());
        let mut preset = match (&preset_name, scenario) {
            (Some(name), _) => Preset::by_name(name)?,
            (None, Some(s)) => Preset::for_scenario(s),
            (None, None) => {
                return Err(Failure::Config(
                    "no scenario given; pass --preset or --scenario (or set them in the config file)".into(),
                ))
            }
        };
        if let Some(s) = scenario {
            preset.scenario = s;
        }

        let run = &file.run;
        let half_length = match (common.half_length, &file.grid.half_length) {
            (Some(l), _) => l,
            (None, Some(n)) => n.length()?,
            (None, None) => preset.half_length,
        };
        let n = common.n.or(file.grid.n).unwrap_or(preset.n);
        let p = common.p.or(run.p).unwrap_or(preset.p);
        let tau = match (common.tau, &run.tau) {
            (Some(t), _) => t,
            (None, Some(t)) => t.step()?,
            (None, None) => preset.tau,
        };
        let t_final = common.t_final.or(run.t_final).unwrap_or(preset.t_final);

        let schemes = match (&run.schemes, &run.scheme) {
            (Some(list), _) => parse_schemes(list)?,
            (None, Some(one)) => vec![one.parse()?],
            (None, None) => Vec::new(),
        };
        let mut template = preset.config(schemes.first().copied().unwrap_or(Scheme::SavIrk4), tau);
        if let Some(tol) = common.fp_tol.or(run.fp_tol) {
            template.fp_tol = tol;
        }
        if let Some(max) = common.fp_max_iter.or(run.fp_max_iter) {
            template.fp_max_iter = max;
        }
        if let Some(tol) = common.c0_tol.or(run.c0_tol) {
            template.c0_tol = tol;
            if let C0Policy::Auto { .. } = template.c0_policy {
                template.c0_policy = C0Policy::Auto { tol };
            }
        }
        if let Some(c0) = common.c0.or(run.c0) {
            template.c0_policy = C0Policy::Fixed(c0);
        }
        template.warm_start = common.warm_start || run.warm_start.unwrap_or(false);
        template.ss_dealias = !common.no_ss_dealias && run.ss_dealias.unwrap_or(true);
        template.validate()?;

        let sample_every = common.sample_every.or(run.sample_every).unwrap_or(1);
        if sample_every == 0 {
            return Err(Failure::Config("sample_every must be at least 1".into()));
        }
        if p < 2 {
            return Err(Failure::Config(format!("p must be at least 2, got {p}")));
        }
        if !(t_final.is_finite() && t_final >= 0.0) {
            return Err(Failure::Config(format!("T must be non-negative, got {t_final}")));
        }
        let taus = file
            .converge
            .taus
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(Number::step)
            .collect::<Result<Vec<_>, _>>()?;
        let tau_ref = file.converge.tau_ref.as_ref().map(Number::step).transpose()?;

        let settings = Settings {
            preset: preset.name.clone(),
            scenario: preset.scenario,
            half_length,
            n,
            p,
            t_final,
            template,
            schemes,
            sample_every,
            out_dir: common
                .out_dir
                .clone()
                .or(file.output.dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            snapshots: file.output.snapshots,
            taus,
            tau_ref,
            ref_tol: file.converge.ref_tol.unwrap_or(REFERENCE_GAP_TOL),
            rate_band: file.converge.rate_band.map(|[lo, hi]| (lo, hi)),
        };
        settings.grid()?;
        Ok(settings)
    }

    pub fn grid(&self) -> Result<SpectralGrid, Failure> {
        Ok(SpectralGrid::new(self.half_length, self.n)?)
    }

    pub fn config(&self, scheme: Scheme) -> StepperConfig {
        StepperConfig {
            scheme,
            ..self.template.clone()
        }
    }

    pub fn study(&self) -> Result<StudySetup, Failure> {
        Ok(StudySetup {
            scenario: self.scenario,
            grid: self.grid()?,
            p: self.p,
            t_final: self.t_final,
            template: self.template.clone(),
        })
    }
}

fn checked(s: Scenario) -> Result<Scenario, Failure> {
    Ok(match s {
        Scenario::Breather(b) => Scenario::Breather(BreatherParams::new(b.alpha, b.beta)?),
        Scenario::TwoSoliton(t) => Scenario::TwoSoliton(TwoSolitonParams::new(t.gamma1, t.gamma2, t.x1, t.x2)?),
        Scenario::Scatter => Scenario::Scatter,
    })
}

pub fn parse_schemes(names: &[String]) -> Result<Vec<Scheme>, Failure> {
    names
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Scheme>().map_err(Failure::from))
        .collect()
}

impl Number {
    fn length(&self) -> Result<f64, Failure> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Text(s) => parse_length(s).map_err(Failure::Config),
        }
    }

    fn step(&self) -> Result<f64, Failure> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Text(s) => parse_step(s).map_err(Failure::Config),
        }
    }
}

/// `30`, `30pi`, `30*pi` or `pi`.
pub fn parse_length(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let t = t.strip_suffix("π").map(str::to_string).unwrap_or(t);
    let (coef, scale) = match t.strip_suffix("pi") {
        Some(rest) => (rest.trim_end_matches('*').trim(), PI),
        None => (t.as_str(), 1.0),
    };
    let coef = if coef.is_empty() {
        1.0
    } else {
        coef.parse::<f64>().map_err(|_| format!("invalid length '{s}'"))?
    };
    Ok(coef * scale)
}

/// A decimal or a fraction `a/b`.
pub fn parse_step(s: &str) -> Result<f64, String> {
    let err = || format!("invalid step '{s}'");
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| err())?;
            let b: f64 = b.trim().parse().map_err(|_| err())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| err()),
    }
}

/// `LO,HI` with `LO <= HI`.
pub fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("invalid bound '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("invalid bound '{hi}'"))?;
    if lo > hi {
        return Err(format!("empty band [{lo}, {hi}]"));
    }
    Ok((lo, hi))
}
