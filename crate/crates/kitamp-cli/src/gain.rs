//! `kitamp gain` — dispersion curve, gain profile, and summary.

use serde::Serialize;

use kitamp::twpa::{
    bloch_dispersion, gain_profile, linear_dispersion, reflection_feedback, DispersionCurve,
    GainProfile, LineSpec, LoadingCell, LossModel,
};

use crate::runctx::{to_json_file, Failure, RunContext};

/// Built-in device parameters: a fitted set reproducing the measured
/// forward-gain profile (see README), not a first-principles prediction.
struct Defaults;

impl Defaults {
    const LK0: f64 = 3.6e-6; // H/m (Z0 = 180 Ω at v = 5e7 m/s)
    const CAP0: f64 = 1.1111111111111111e-10; // F/m
    const I_STAR: f64 = 0.015; // A
    const I_DC: f64 = 0.0015; // A
    const A_P: f64 = 0.0004; // A
    const LENGTH: f64 = 2.0; // m
    const PERIOD: f64 = 1.4663286715563926e-3; // m → first stopband at 17 GHz
    const LOADED_FRACTION: f64 = 0.012;
    const Z_UNLOADED: f64 = 180.0; // Ω
    const Z_LOADED: f64 = 90.0; // Ω
    const LOSS: &'static str = "2e9:0.25,5e9:1.2,8e9:1.5"; // Hz:dB/m knots
    const F_PUMP: f64 = 16.2e9; // Hz, below the stopband edge
    const BAND_LO: f64 = 4e9;
    const BAND_HI: f64 = 12e9;
    const N_POINTS: usize = 801;
    const DISP_LO: f64 = 2e8;
    const DISP_HI: f64 = 1.9e10;
    const DISP_POINTS: usize = 4000;
}

#[derive(Serialize)]
struct GainSummary {
    peak_gain_db: f64,
    peak_freq_hz: f64,
    bandwidth_3db_hz: f64,
    band_lo_hz: f64,
    band_hi_hz: f64,
    f_pump_hz: f64,
    delta_theta_rad_per_m: f64,
    n_points: usize,
    skipped_points: usize,
    /// Stopband intervals visible in the dispersion grid.
    stopbands_hz: Vec<[f64; 2]>,
}

fn parse_loss(ctx: &RunContext) -> Result<LossModel, Failure> {
    let raw = ctx
        .config
        .get_str("loss_db_per_m")
        .unwrap_or_else(|| Defaults::LOSS.to_string());
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<f64>() {
        return if v == 0.0 {
            Ok(LossModel::Lossless)
        } else {
            Ok(LossModel::Uniform(v))
        };
    }
    let mut knots = Vec::new();
    for item in raw.split(',') {
        let (f, d) = item
            .split_once(':')
            .ok_or_else(|| Failure::input(format!("loss_db_per_m: bad entry `{item}`")))?;
        let f: f64 = f
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("loss_db_per_m: bad frequency `{f}`")))?;
        let d: f64 = d
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("loss_db_per_m: bad value `{d}`")))?;
        knots.push((f, d));
    }
    Ok(LossModel::Table(knots))
}

pub(crate) fn line_spec_from_config(ctx: &RunContext) -> Result<LineSpec, Failure> {
    let cfg = &ctx.config;
    let get = |key: &str, default: f64| -> Result<f64, Failure> {
        Ok(cfg.get_f64(key).map_err(Failure::input)?.unwrap_or(default))
    };
    let loading_on = cfg
        .get_bool("loading")
        .map_err(Failure::input)?
        .unwrap_or(true);
    let loading = if loading_on {
        Some(
            LoadingCell::new(
                get("loading.period", Defaults::PERIOD)?,
                get("loading.loaded_fraction", Defaults::LOADED_FRACTION)?,
                get("loading.z_unloaded", Defaults::Z_UNLOADED)?,
                get("loading.z_loaded", Defaults::Z_LOADED)?,
            )
            .map_err(Failure::input)?,
        )
    } else {
        // Consume the loading keys so they are not reported as unknown.
        for key in [
            "loading.period",
            "loading.loaded_fraction",
            "loading.z_unloaded",
            "loading.z_loaded",
        ] {
            let _ = cfg.get_f64(key);
        }
        None
    };
    LineSpec::new(
        get("lk0", Defaults::LK0)?,
        get("cap0", Defaults::CAP0)?,
        get("i_star", Defaults::I_STAR)?,
        get("i_dc", Defaults::I_DC)?,
        get("a_p", Defaults::A_P)?,
        get("length", Defaults::LENGTH)?,
        loading,
        parse_loss(ctx)?,
    )
    .map_err(Failure::input)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn stopbands(curve: &DispersionCurve) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..curve.freqs.len() {
        match (curve.in_gap[i], start) {
            (true, None) => start = Some(curve.freqs[i]),
            (false, Some(s)) => {
                out.push([s, curve.freqs[i - 1]]);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push([s, *curve.freqs.last().unwrap()]);
    }
    out
}

/// Contiguous 3 dB band around the profile peak, edges interpolated,
/// clipped to the simulated band.
fn peak_and_bandwidth(profile: &GainProfile) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = profile
        .freqs
        .iter()
        .zip(&profile.gain_db)
        .filter_map(|(&f, g)| g.map(|g| (f, g)))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let (peak_idx, &(f_peak, peak)) = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    let level = peak - 3.0;
    let mut lo = pts[0].0;
    for w in (0..peak_idx).rev() {
        if pts[w].1 < level {
            let (f0, g0) = pts[w];
            let (f1, g1) = pts[w + 1];
            lo = f0 + (level - g0) / (g1 - g0) * (f1 - f0);
            break;
        }
    }
    let mut hi = pts[pts.len() - 1].0;
    for w in peak_idx..pts.len() - 1 {
        if pts[w + 1].1 < level {
            let (f0, g0) = pts[w];
            let (f1, g1) = pts[w + 1];
            hi = f0 + (level - g0) / (g1 - g0) * (f1 - f0);
            break;
        }
    }
    Some((peak, f_peak, hi - lo))
}

pub fn run(ctx: &RunContext) -> Result<(), Failure> {
    let spec = line_spec_from_config(ctx)?;
    let cfg = &ctx.config;
    let getf = |key: &str, default: f64| -> Result<f64, Failure> {
        Ok(cfg.get_f64(key).map_err(Failure::input)?.unwrap_or(default))
    };
    let f_pump = getf("f_pump", Defaults::F_PUMP)?;
    let band_lo = getf("band_lo", Defaults::BAND_LO)?;
    let band_hi = getf("band_hi", Defaults::BAND_HI)?;
    let n_points = cfg
        .get_usize("n_points")
        .map_err(Failure::input)?
        .unwrap_or(Defaults::N_POINTS);
    let disp_lo = getf("dispersion_f_lo", Defaults::DISP_LO)?;
    let disp_hi = getf("dispersion_f_hi", Defaults::DISP_HI)?;
    let disp_points = cfg
        .get_usize("dispersion_points")
        .map_err(Failure::input)?
        .unwrap_or(Defaults::DISP_POINTS);
    let delta_theta_raw = cfg.get_str("delta_theta");
    let gamma1 = getf("reflection_gamma1", 0.0)?;
    let gamma2 = getf("reflection_gamma2", 0.0)?;
    let theta = getf("reflection_theta", 0.0)?;
    cfg.finish().map_err(Failure::input)?;

    if disp_points < 2 || !(disp_lo > 0.0 && disp_lo < disp_hi) {
        return Err(Failure::input("invalid dispersion grid configuration"));
    }
    let grid = linspace(disp_lo, disp_hi, disp_points);
    let curve = if spec.loading.is_some() {
        bloch_dispersion(&spec, &grid).map_err(Failure::input)?
    } else {
        linear_dispersion(&spec, &grid).map_err(Failure::input)?
    };

    let delta_theta = match delta_theta_raw.as_deref() {
        None | Some("auto") => {
            let k_p = curve.wavenumber_at(f_pump).map_err(Failure::compute)?;
            spec.default_delta_theta(k_p)
        }
        Some(text) => text
            .parse::<f64>()
            .map_err(|_| Failure::input(format!("delta_theta: expected number or auto, got `{text}`")))?,
    };

    let mut profile = gain_profile(&spec, &curve, f_pump, (band_lo, band_hi), n_points, delta_theta)
        .map_err(Failure::input)?;
    if gamma1 * gamma2 != 0.0 {
        profile = reflection_feedback(&profile, gamma1, gamma2, theta).map_err(Failure::compute)?;
    }

    let skipped = profile.gain_db.iter().filter(|g| g.is_none()).count();
    let Some((peak, f_peak, bandwidth)) = peak_and_bandwidth(&profile) else {
        return Err(Failure::compute(
            "no evaluable points in the requested band (tones in a stopband or off the grid)",
        ));
    };

    let summary = GainSummary {
        peak_gain_db: peak,
        peak_freq_hz: f_peak,
        bandwidth_3db_hz: bandwidth,
        band_lo_hz: band_lo,
        band_hi_hz: band_hi,
        f_pump_hz: f_pump,
        delta_theta_rad_per_m: delta_theta,
        n_points,
        skipped_points: skipped,
        stopbands_hz: stopbands(&curve),
    };
    ctx.write_out("dispersion.csv", &curve.to_csv())?;
    ctx.write_out("gain_profile.csv", &profile.to_csv())?;
    ctx.write_out("gain_summary.json", &to_json_file(&summary))?;
    println!(
        "gain: peak {:.2} dB at {:.4} GHz, 3 dB bandwidth {:.2} GHz ({} of {} points evaluated)",
        peak,
        f_peak / 1e9,
        bandwidth / 1e9,
        n_points - skipped,
        n_points
    );
    Ok(())
}
