use std::fs;
use std::path::{Path, PathBuf};

use gkdv_core::diagnostics::{
    breather_deviation, convergence_study, exact_target, linf_error, make_reference_with_tol, ConvergenceTable,
};
use gkdv_core::scenarios::attach_breather_diagnostics;
use gkdv_core::snapshot::Snapshot;
use gkdv_core::{Evolution, FieldVector, RunLog, RunOptions, Scenario, Scheme};
use rayon::prelude::*;

use crate::args::{CompareArgs, ConvergeArgs, RunArgs};
use crate::output::{self, BreatherDeviation, Summary};
use crate::settings::{parse_schemes, Settings};
use crate::Failure;

/// Relative half-width of the default rate band.
const RATE_SLACK: f64 = 0.25;

struct Outcome {
    log: RunLog,
    summary: Summary,
}

impl Outcome {
    fn ok(&self) -> bool {
        self.summary.status == "ok"
    }
}

/// One evolution. Numerical trouble ends up in the summary; only
/// configuration and I/O problems are returned as errors.
fn execute(s: &Settings, scheme: Scheme, snapshots: Option<(&Path, usize)>) -> Result<Outcome, Failure> {
    let grid = s.grid()?;
    let cfg = s.config(scheme);
    let opts = RunOptions {
        sample_every: s.sample_every,
        track_mass_bound: false,
    };
    let mut summary = Summary {
        scheme: scheme.name().to_string(),
        preset: s.preset.clone(),
        scenario: s.scenario.name().to_string(),
        tau: cfg.tau,
        t_final: s.t_final,
        status: "ok",
        message: None,
        final_time: 0.0,
        steps: 0,
        final_error: None,
        max_drifts: None,
        fp_iterations_total: 0,
        max_fp_residual: 0.0,
        c0_adjustments: 0,
        blowup_time: None,
        breather_deviation: None,
    };
    let mut evo = match Evolution::new(grid.clone(), s.scenario.initial(&grid), s.p, cfg, opts) {
        Ok(evo) => evo,
        Err(e) => {
            return match Failure::from(e) {
                Failure::Numerical(m) => {
                    summary.status = "failed";
                    summary.message = Some(m);
                    Ok(Outcome {
                        log: RunLog::default(),
                        summary,
                    })
                }
                other => Err(other),
            }
        }
    };

    let snap_path = |dir: &Path, step: usize| dir.join(format!("step_{step:08}.bin"));
    let snapshot = |t: f64, u: &FieldVector| Snapshot {
        half_length: s.half_length,
        p: s.p,
        t,
        u: u.clone(),
    };
    let mut io_error = None;
    let mut last_snapshot = None;
    if let Some((dir, _)) = snapshots {
        output::write_snapshot(&snap_path(dir, 0), &snapshot(0.0, evo.field()))?;
        last_snapshot = Some(0);
    }
    let result = evo.run_to(s.t_final, |step, t, u| {
        if let Some((dir, every)) = snapshots {
            if step % every == 0 && io_error.is_none() {
                match output::write_snapshot(&snap_path(dir, step), &snapshot(t, u)) {
                    Ok(()) => last_snapshot = Some(step),
                    Err(e) => io_error = Some(e),
                }
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let t_end = evo.time();
    let u_end = evo.field().clone();
    let mut log = evo.into_log();
    if let Some((dir, _)) = snapshots {
        if last_snapshot != Some(log.steps) {
            output::write_snapshot(&snap_path(dir, log.steps), &snapshot(t_end, &u_end))?;
        }
    }

    if let Scenario::Breather(b) = s.scenario {
        match attach_breather_diagnostics(&mut log) {
            Ok(()) => {
                let (beta, gamma) = breather_deviation(&log, b.beta, b.gamma());
                summary.breather_deviation = Some(BreatherDeviation { beta, gamma });
            }
            Err(e) => log::warn!("{scheme}: breather diagnostics unavailable: {e}"),
        }
    }
    match &result {
        Err(e) => {
            summary.status = "failed";
            summary.message = Some(e.to_string());
        }
        Ok(()) if log.blowup_time.is_some() => {
            summary.status = "blowup";
            summary.message = Some(format!("solution blew up at t = {}", t_end));
        }
        Ok(()) => {
            summary.final_error = s
                .scenario
                .exact(&grid, t_end)
                .map(|ex| linf_error(&u_end, &ex))
                .transpose()?;
        }
    }
    summary.final_time = t_end;
    summary.steps = log.steps;
    summary.max_drifts = output::drifts(&log);
    summary.fp_iterations_total = log.fp_iterations_total;
    summary.max_fp_residual = log.max_fp_residual;
    summary.c0_adjustments = log.c0_adjustments;
    summary.blowup_time = log.blowup_time;
    Ok(Outcome { log, summary })
}

fn outcome_status(summary: &Summary) -> Result<(), Failure> {
    match summary.status {
        "ok" => Ok(()),
        _ => Err(Failure::Numerical(format!(
            "{}: {}",
            summary.scheme,
            summary.message.as_deref().unwrap_or(summary.status)
        ))),
    }
}

fn describe(summary: &Summary) -> String {
    let mut line = format!(
        "{:<9} tau={:<10} status={:<7} t={:<10} steps={}",
        summary.scheme, summary.tau, summary.status, summary.final_time, summary.steps
    );
    if let Some(d) = &summary.max_drifts {
        line.push_str(&format!(
            "  dI={:.3e} dM={:.3e} dE={:.3e}",
            d.momentum, d.mass, d.energy
        ));
    }
    if let Some(e) = summary.final_error {
        line.push_str(&format!("  err={e:.3e}"));
    }
    if let Some(b) = &summary.breather_deviation {
        line.push_str(&format!("  dbeta={:.3e} dgamma={:.3e}", b.beta, b.gamma));
    }
    line
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

pub fn run(a: &RunArgs) -> Result<(), Failure> {
    let s = Settings::resolve(&a.common)?;
    let scheme = match &a.scheme {
        Some(name) => name.parse()?,
        None => s.schemes.first().copied().unwrap_or(s.template.scheme),
    };
    let every = a.snapshots.or(s.snapshots);
    if every == Some(0) {
        return Err(Failure::Config("snapshot cadence must be at least 1".into()));
    }
    create_dir(&s.out_dir)?;
    let snap_dir: Option<PathBuf> = every.map(|_| s.out_dir.join("snapshots"));
    if let Some(dir) = &snap_dir {
        create_dir(dir)?;
    }
    let out = execute(&s, scheme, snap_dir.as_deref().zip(every))?;
    output::write_text(
        &s.out_dir.join("invariants.csv"),
        &output::invariants_csv(&out.log, s.scenario.is_breather()),
    )?;
    output::write_json(&s.out_dir.join("summary.json"), &out.summary)?;
    println!("{}", describe(&out.summary));
    outcome_status(&out.summary)
}

pub fn compare(a: &CompareArgs) -> Result<(), Failure> {
    let s = Settings::resolve(&a.common)?;
    let schemes = match &a.schemes {
        Some(names) => parse_schemes(names)?,
        None => s.schemes.clone(),
    };
    if schemes.is_empty() {
        return Err(Failure::Config("empty scheme list".into()));
    }
    create_dir(&s.out_dir)?;
    let outcomes = schemes
        .par_iter()
        .map(|&scheme| execute(&s, scheme, None))
        .collect::<Result<Vec<_>, _>>()?;
    let breather = s.scenario.is_breather();
    for o in &outcomes {
        let name = &o.summary.scheme;
        output::write_text(
            &s.out_dir.join(format!("invariants_{name}.csv")),
            &output::invariants_csv(&o.log, breather),
        )?;
        output::write_json(&s.out_dir.join(format!("summary_{name}.json")), &o.summary)?;
        println!("{}", describe(&o.summary));
    }
    output::write_text(
        &s.out_dir.join("comparison.csv"),
        &output::comparison_csv(outcomes.iter().map(|o| (o.summary.scheme.as_str(), &o.log)), breather),
    )?;
    if outcomes.iter().any(Outcome::ok) {
        Ok(())
    } else {
        Err(Failure::Numerical("no scheme completed the run".into()))
    }
}

/// Indices and values of rates outside the accepted band.
fn out_of_band(table: &ConvergenceTable, order: u32, band: Option<(f64, f64)>) -> Vec<String> {
    let mut bad = Vec::new();
    for k in 1..table.rows.len() {
        let prev = &table.rows[k - 1];
        let row = &table.rows[k];
        let (lo, hi) = band.unwrap_or_else(|| {
            let nominal = (prev.tau / row.tau).powi(order as i32);
            (nominal * (1.0 - RATE_SLACK), nominal * (1.0 + RATE_SLACK))
        });
        match row.rate {
            Some(r) if (lo..=hi).contains(&r) => {}
            Some(r) => bad.push(format!(
                "{} tau={}: rate {r:.3} outside [{lo:.3}, {hi:.3}]",
                table.label, row.tau
            )),
            None => bad.push(format!("{} tau={}: no rate", table.label, row.tau)),
        }
    }
    bad
}

pub fn converge(a: &ConvergeArgs) -> Result<(), Failure> {
    let s = Settings::resolve(&a.common)?;
    let schemes = match &a.schemes {
        Some(names) => parse_schemes(names)?,
        None if !s.schemes.is_empty() => s.schemes.clone(),
        None => vec![s.template.scheme],
    };
    if schemes.is_empty() {
        return Err(Failure::Config("empty scheme list".into()));
    }
    let taus = a.taus.clone().unwrap_or_else(|| s.taus.clone());
    if taus.is_empty() {
        return Err(Failure::Config(
            "no step sizes given (--taus or [converge] taus)".into(),
        ));
    }
    if let Some(bad) = taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Failure::Config(format!("step sizes must be positive, got {bad}")));
    }
    let band = a.rate_band.or(s.rate_band);
    let setup = s.study()?;
    create_dir(&s.out_dir)?;

    let target = match exact_target(&setup) {
        Some(u) => u,
        None => {
            let smallest = taus.iter().copied().fold(f64::INFINITY, f64::min);
            let tau_ref = a.tau_ref.or(s.tau_ref).unwrap_or(smallest / 8.0);
            let tol = a.ref_tol.unwrap_or(s.ref_tol);
            let r = make_reference_with_tol(&setup, tau_ref, tol)?;
            println!("reference: tau_ref={tau_ref} gap={:.3e}", r.gap);
            r.u
        }
    };
    let tables: Vec<ConvergenceTable> = schemes
        .par_iter()
        .map(|&scheme| convergence_study(&setup, scheme, &taus, &target))
        .collect();
    output::write_text(&s.out_dir.join("rates.csv"), &output::rates_csv(&tables))?;

    let mut problems = Vec::new();
    for (table, scheme) in tables.iter().zip(&schemes) {
        print!("{}", table.to_text());
        for row in &table.rows {
            if row.error.is_none() {
                problems.push(format!("{} tau={}: run failed or blew up", table.label, row.tau));
            }
        }
        problems.extend(out_of_band(table, scheme.order(), band));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(problems.join("; ")))
    }
}
