use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gkdv_core::sav::InvariantRecord;
use gkdv_core::snapshot::Snapshot;
use serde_json::Value;
use tempfile::TempDir;

fn gkdv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkdv"))
        .args(args)
        .env_remove("GKDV_THREADS")
        .output()
        .expect("spawn gkdv")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn out_dir(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn summary(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn records(path: &Path) -> Vec<InvariantRecord> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| InvariantRecord::parse_csv_row(l).unwrap())
        .collect()
}

#[test]
fn zero_final_time_writes_one_row() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "run");
    let o = gkdv(&[
        "run",
        "--preset",
        "example2",
        "--N",
        "256",
        "--T",
        "0",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(Path::new(&out).join("invariants.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next(), Some("t,I,M,E,Etilde"));
    let s = summary(&Path::new(&out).join("summary.json"));
    assert_eq!(s["status"], "ok");
    assert_eq!(s["scheme"], "SAV-IRK4");
    assert_eq!(s["steps"], 0);
    assert_eq!(s["T"], 0.0);
    assert!(s["blowup_time"].is_null());
}

#[test]
fn two_soliton_run_conserves_modified_energy() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "run");
    let o = gkdv(&[
        "run",
        "--scenario",
        "two_soliton",
        "--scheme",
        "SAV-IRK4",
        "--N",
        "512",
        "--tau",
        "0.1",
        "--T",
        "2",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&Path::new(&out).join("summary.json"));
    assert!(s["max_drifts"]["energy"].as_f64().unwrap() <= 1e-10);
    assert!(s["max_drifts"]["momentum"].as_f64().unwrap() <= 1e-10);
    assert!(s["final_error"].as_f64().unwrap() < 1e-4);
    assert_eq!(s["steps"], 20);
    let recs = records(&Path::new(&out).join("invariants.csv"));
    assert_eq!(recs.len(), 21);
    assert_eq!(recs.last().unwrap().t, 2.0);
}

#[test]
fn outputs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = out_dir(&dir, name);
        let o = gkdv(&[
            "run",
            "--preset",
            "example1",
            "--N",
            "256",
            "--scheme",
            "MCN",
            "--tau",
            "0.01",
            "--T",
            "0.1",
            "--out-dir",
            &out,
        ]);
        assert_eq!(code(&o), 0);
        (
            fs::read(Path::new(&out).join("invariants.csv")).unwrap(),
            fs::read(Path::new(&out).join("summary.json")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn breather_run_reports_diagnostics_and_snapshots() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "run");
    let o = gkdv(&[
        "run",
        "--preset",
        "example1",
        "--N",
        "512",
        "--scheme",
        "SAV-IRK4",
        "--tau",
        "0.01",
        "--T",
        "0.105",
        "--snapshots",
        "5",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(Path::new(&out).join("invariants.csv")).unwrap();
    assert!(text.starts_with("t,I,M,E,Etilde,beta_num,gamma_num\n"));
    let recs = records(&Path::new(&out).join("invariants.csv"));
    assert!(recs.iter().all(|r| (r.beta_num.unwrap() - 1.0).abs() < 1e-6));
    assert!(recs.iter().all(|r| (r.gamma_num.unwrap() - 26.0).abs() < 1e-2));
    let s = summary(&Path::new(&out).join("summary.json"));
    assert!(s["breather_deviation"]["beta"].as_f64().unwrap() < 1e-6);

    // 10 whole steps plus the remainder: snapshots at 0, 5, 10 and 11
    let snaps = Path::new(&out).join("snapshots");
    let mut names: Vec<_> = fs::read_dir(&snaps)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "step_00000000.bin",
            "step_00000005.bin",
            "step_00000010.bin",
            "step_00000011.bin"
        ]
    );
    let last = Snapshot::read_from(fs::File::open(snaps.join("step_00000011.bin")).unwrap()).unwrap();
    assert_eq!(last.u.len(), 512);
    assert_eq!(last.p, 3);
    assert!((last.t - 0.105).abs() < 1e-12);
    assert!((last.half_length - 10.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn leap_frog_breather_blows_up_with_exit_3() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "run");
    let o = gkdv(&[
        "run",
        "--preset",
        "example1",
        "--scheme",
        "SAV-LF",
        "--tau",
        "1e-4",
        "--T",
        "1",
        "--sample-every",
        "100",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 3);
    let s = summary(&Path::new(&out).join("summary.json"));
    assert_eq!(s["status"], "blowup");
    let t = s["blowup_time"].as_f64().unwrap();
    assert!(t > 0.4 && t < 0.8, "blow-up at {t}");
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "x");
    assert_eq!(
        code(&gkdv(&[
            "run",
            "--preset",
            "example2",
            "--scheme",
            "RK45",
            "--out-dir",
            &out
        ])),
        2
    );
    assert_eq!(code(&gkdv(&["run", "--out-dir", &out])), 2);
    assert_eq!(
        code(&gkdv(&[
            "run",
            "--preset",
            "example2",
            "--N",
            "1000",
            "--out-dir",
            &out
        ])),
        2
    );
    assert_eq!(
        code(&gkdv(&["run", "--preset", "example2", "--tau", "0", "--out-dir", &out])),
        2
    );
    assert_eq!(code(&gkdv(&["run", "--no-such-flag"])), 2);
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "preset = \"example2\"\n[run]\nbogus = 1\n").unwrap();
    assert_eq!(
        code(&gkdv(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", &out])),
        2
    );
    let threads = Command::new(env!("CARGO_BIN_EXE_gkdv"))
        .args(["run", "--preset", "example2", "--T", "0", "--out-dir", &out])
        .env("GKDV_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&threads), 2);
}

#[test]
fn config_file_drives_a_run() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "cfg");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "scenario = \"scatter\"\n[grid]\nhalf_length = \"10pi\"\nn = 256\n[run]\nscheme = \"mETDRK4\"\ntau = \"1/100\"\nt_final = 0.05\n[output]\ndir = {out:?}\n"
        ),
    )
    .unwrap();
    let o = gkdv(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&Path::new(&out).join("summary.json"));
    assert_eq!(s["scheme"], "mETDRK4");
    assert_eq!(s["scenario"], "scatter");
    assert_eq!(s["steps"], 5);
    assert!(s["final_error"].is_null());
}

#[test]
fn compare_writes_per_scheme_and_merged_files() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "cmp");
    let o = gkdv(&[
        "compare",
        "--preset",
        "example1",
        "--N",
        "256",
        "--schemes",
        "MCN,SS,SAV-IRK4,mETDRK4",
        "--tau",
        "2e-3",
        "--T",
        "0.02",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["MCN", "SS", "SAV-IRK4", "mETDRK4"] {
        assert!(Path::new(&out).join(format!("invariants_{name}.csv")).exists());
        let s = summary(&Path::new(&out).join(format!("summary_{name}.json")));
        assert_eq!(s["status"], "ok");
    }
    let merged = fs::read_to_string(Path::new(&out).join("comparison.csv")).unwrap();
    let mut lines = merged.lines();
    assert_eq!(lines.next(), Some("scheme,t,I,M,E,Etilde,beta_num,gamma_num"));
    assert_eq!(lines.count(), 4 * 11);
}

#[test]
fn compare_with_a_failing_scheme_still_succeeds() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "cmp");
    let o = gkdv(&[
        "compare",
        "--preset",
        "example1",
        "--N",
        "256",
        "--schemes",
        "MCN,SAV-IRK4",
        "--tau",
        "0.01",
        "--T",
        "0.02",
        "--fp-max-iter",
        "2",
        "--out-dir",
        &out,
    ]);
    // two fixed-point sweeps are too few for either scheme
    assert_eq!(code(&o), 3);
    let s = summary(&Path::new(&out).join("summary_MCN.json"));
    assert_eq!(s["status"], "failed");
    assert!(s["message"].as_str().unwrap().contains("converge"));

    let o = gkdv(&[
        "compare",
        "--preset",
        "example1",
        "--N",
        "256",
        "--schemes",
        "MCN,mETDRK4",
        "--tau",
        "0.01",
        "--T",
        "0.02",
        "--fp-max-iter",
        "2",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn compare_rejects_empty_scheme_list() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "cmp");
    assert_eq!(
        code(&gkdv(&[
            "compare",
            "--preset",
            "example1",
            "--schemes",
            "",
            "--out-dir",
            &out
        ])),
        2
    );
    assert_eq!(code(&gkdv(&["compare", "--preset", "example1", "--out-dir", &out])), 2);
}

#[test]
fn converge_single_step_gives_errors_only() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "conv");
    let o = gkdv(&[
        "converge",
        "--scenario",
        "two_soliton",
        "--N",
        "512",
        "--T",
        "1",
        "--schemes",
        "SAV-IRK2",
        "--taus",
        "0.1",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(Path::new(&out).join("rates.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "tau,SAV-IRK2_error,SAV-IRK2_rate");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(",NA"));
}

#[test]
fn converge_two_soliton_rates() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "conv");
    let o = gkdv(&[
        "converge",
        "--scenario",
        "two_soliton",
        "--N",
        "512",
        "--T",
        "4",
        "--schemes",
        "SAV-IRK2,SAV-IRK4",
        "--taus",
        "1/5,1/10,1/20",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(Path::new(&out).join("rates.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let rate2: f64 = rows[2][2].parse().unwrap();
    let rate4: f64 = rows[2][4].parse().unwrap();
    assert!((rate2 - 4.0).abs() < 0.8, "{rate2}");
    assert!((rate4 - 16.0).abs() < 4.0, "{rate4}");

    // an impossible band turns the same study into a failure
    let o = gkdv(&[
        "converge",
        "--scenario",
        "two_soliton",
        "--N",
        "512",
        "--T",
        "4",
        "--schemes",
        "SAV-IRK2",
        "--taus",
        "1/5,1/10",
        "--rate-band",
        "100,200",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn converge_without_exact_solution_uses_reference() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "conv");
    let o = gkdv(&[
        "converge",
        "--preset",
        "example3",
        "--N",
        "256",
        "--L",
        "10pi",
        "--T",
        "0.1",
        "--schemes",
        "mETDRK4",
        "--taus",
        "1/100,1/200",
        "--tau-ref",
        "1/3200",
        "--ref-tol",
        "1e-6",
        "--rate-band",
        "0,1e9",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("reference: tau_ref="));
    let o = gkdv(&[
        "converge",
        "--preset",
        "example3",
        "--N",
        "256",
        "--L",
        "10pi",
        "--T",
        "0.1",
        "--schemes",
        "mETDRK4",
        "--taus",
        "1/100",
        "--tau-ref",
        "1/200",
        "--ref-tol",
        "1e-300",
        "--out-dir",
        &out,
    ]);
    assert_eq!(code(&o), 3);
}
