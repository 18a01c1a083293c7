use gkdv_core::integrators::{evolve, RunOptions, Scheme, StepperConfig};
use gkdv_core::sav::InvariantRecord;
use gkdv_core::scenarios::breather_diagnostics;
use gkdv_core::snapshot::Snapshot;
use gkdv_core::spectral::{FieldVector, SpectralGrid};
use proptest::prelude::*;

const N: usize = 64;
const L: f64 = 4.0;

/// Real trigonometric polynomial with the given (cos, sin) coefficients.
fn trig(grid: &SpectralGrid, c0: f64, coeffs: &[(f64, f64)]) -> FieldVector {
    let l = grid.half_length();
    grid.sample(|x| {
        c0 + coeffs
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let w = std::f64::consts::PI * (k + 1) as f64 * x / l;
                a * w.cos() + b * w.sin()
            })
            .sum::<f64>()
    })
}

fn coeffs(max_modes: usize, amp: f64) -> impl Strategy<Value = (f64, Vec<(f64, f64)>)> {
    (-amp..amp, prop::collection::vec((-amp..amp, -amp..amp), 1..=max_modes))
}

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_round_trip(values in prop::collection::vec(-1e3..1e3f64, N)) {
        let g = SpectralGrid::new(L, N).unwrap();
        let back = g.inverse(&g.forward(&values).unwrap()).unwrap();
        let scale = values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        prop_assert!(back.max_abs_diff(&values) <= 1e-12 * scale);
    }

    #[test]
    fn derivative_symmetries((c0, cs) in coeffs(20, 1.0), (d0, ds) in coeffs(20, 1.0)) {
        let g = SpectralGrid::new(L, N).unwrap();
        let u = trig(&g, c0, &cs);
        let w = trig(&g, d0, &ds);
        let norm = g.norm_h(&u).unwrap() * g.norm_h(&w).unwrap();
        let xi = g.wavenumbers().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let d1 = (g.inner_h(&g.apply_d1(&u).unwrap(), &w).unwrap() + g.inner_h(&u, &g.apply_d1(&w).unwrap()).unwrap()).abs();
        let d2 = (g.inner_h(&g.apply_d2(&u).unwrap(), &w).unwrap() - g.inner_h(&u, &g.apply_d2(&w).unwrap()).unwrap()).abs();
        let d3 = g.inner_h(&g.apply_d3(&u).unwrap(), &u).unwrap().abs();
        // rounding scales with the largest symbol entry
        prop_assert!(d1 <= 1e-13 * xi * norm, "D1 {d1}");
        prop_assert!(d2 <= 1e-13 * xi * xi * norm, "D2 {d2}");
        prop_assert!(d3 <= 1e-13 * xi.powi(3) * g.norm_h(&u).unwrap().powi(2), "D3 {d3}");
    }

    #[test]
    fn derivatives_kill_constants(c in -10.0..10.0f64) {
        let g = SpectralGrid::new(L, N).unwrap();
        let u = FieldVector::constant(N, c);
        prop_assert!(g.apply_d1(&u).unwrap().max_abs() <= 1e-13 * (1.0 + c.abs()));
        prop_assert!(g.apply_d3(&u).unwrap().max_abs() <= 1e-13 * (1.0 + c.abs()));
    }

    #[test]
    fn sav_steps_keep_momentum_and_modified_energy((c0, cs) in coeffs(6, 0.3), s in 1usize..=3) {
        let g = SpectralGrid::new(L, N).unwrap();
        let u = trig(&g, c0, &cs);
        let scheme = [Scheme::SavIrk2, Scheme::SavIrk4, Scheme::SavIrk6][s - 1];
        let cfg = StepperConfig::new(scheme, 1e-3);
        let (log, _) = evolve(&g, u, 2, &cfg, 5e-3, RunOptions::default()).unwrap();
        let first = &log.records[0];
        for r in &log.records {
            prop_assert!((r.momentum - first.momentum).abs() <= 1e-12 * (1.0 + first.momentum.abs()));
            prop_assert!((r.modified_energy - first.modified_energy).abs() <= 1e-10 * (1.0 + first.modified_energy.abs()));
        }
    }

    #[test]
    fn mcn_keeps_physical_energy((c0, cs) in coeffs(6, 0.3)) {
        let g = SpectralGrid::new(L, N).unwrap();
        let u = trig(&g, c0, &cs);
        let (log, _) = evolve(&g, u, 3, &StepperConfig::new(Scheme::Mcn, 1e-3), 5e-3, RunOptions::default()).unwrap();
        let e0 = log.records[0].energy;
        for r in &log.records {
            prop_assert!((r.energy - e0).abs() <= 1e-10 * (1.0 + e0.abs()));
        }
    }

    #[test]
    fn csv_rows_round_trip(t in finite(), a in finite(), b in finite(), c in finite(), d in finite(), beta in proptest::option::of(finite()), gamma in proptest::option::of(finite())) {
        let rec = InvariantRecord { t, momentum: a, mass: b, energy: c, modified_energy: d, beta_num: beta, gamma_num: gamma };
        prop_assert_eq!(InvariantRecord::parse_csv_row(&rec.csv_row(true)), Some(rec.clone()));
        let plain = InvariantRecord { beta_num: None, gamma_num: None, ..rec };
        prop_assert_eq!(InvariantRecord::parse_csv_row(&plain.csv_row(false)), Some(plain));
    }

    #[test]
    fn snapshots_round_trip(values in prop::collection::vec(finite(), 0..200), l in 0.1..100.0f64, p in 2u32..8, t in 0.0..1e4f64) {
        let snap = Snapshot { half_length: l, p, t, u: FieldVector::new(values) };
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        prop_assert_eq!(buf.len(), 32 + 8 * snap.u.len());
        prop_assert_eq!(Snapshot::read_from(buf.as_slice()).unwrap(), snap);
    }

    #[test]
    fn beta_estimate_is_linear_in_mass(m in 1e-3..1e3f64, e in -1e3..1e3f64, k in 0.1..10.0f64) {
        let (b1, g1) = breather_diagnostics(m, e).unwrap();
        let (b2, _) = breather_diagnostics(k * m, e).unwrap();
        prop_assert!((b2 - k * b1).abs() <= 1e-12 * b2.abs());
        prop_assert!((g1 * 2.0 * b1 * 2.0 - e).abs() <= 1e-9 * (1.0 + e.abs()));
        prop_assert!(breather_diagnostics(-m, e).is_err());
    }

    #[test]
    fn scheme_names_parse_in_any_case(idx in 0usize..10, upper in any::<bool>()) {
        let s = Scheme::ALL[idx];
        let name = if upper { s.name().to_ascii_uppercase() } else { s.name().to_ascii_lowercase().replace('-', "_") };
        prop_assert_eq!(name.parse::<Scheme>().unwrap(), s);
    }
}
