//! System noise temperature from variable-temperature-load sweeps.
//!
//! The output spectral density of a chain with gain G watching a thermal
//! load at temperature T follows the Planck law
//!
//! ```text
//! S(ω, T) = G·k_B·( (ħω/k_B)/(e^{ħω/k_BT} − 1) + T_sys(ω) )
//! ```
//!
//! which is linear in the bracketed source term, so sweeping the load
//! temperature turns (G, T_sys) into a per-frequency straight-line fit. The
//! fit follows this law exactly (no vacuum ½-photon in the source term), and
//! photon conversion uses the Rayleigh–Jeans ratio k_B·T/ħω — the convention
//! consistent with quoting kelvin-scale system noise in photon units.

use serde::Serialize;
use thiserror::Error;

use crate::constants::{BOLTZMANN, HBAR};
use crate::par;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("rank-deficient fit at {0:.6e} Hz: load temperatures do not separate the Planck term")]
    RankDeficient(f64),
    #[error("invalid distributed amplifier spec: {0}")]
    InvalidSpec(String),
}

/// Planck source term of the noise law, in kelvin:
/// (ħω/k_B)/(e^{ħω/(k_B·t)} − 1).
pub fn planck_psd(f: f64, t: f64) -> Result<f64, NoiseError> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(NoiseError::Domain(format!("frequency {f} must be > 0")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(NoiseError::Domain(format!("temperature {t} must be > 0")));
    }
    let quantum_k = HBAR * 2.0 * std::f64::consts::PI * f / BOLTZMANN;
    Ok(quantum_k / (quantum_k / t).exp_m1())
}

/// k_B·T/(ħω): kelvin → photon number at frequency `f`.
pub fn photons_from_tsys(t_sys: f64, f: f64) -> Result<f64, NoiseError> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(NoiseError::Domain(format!("frequency {f} must be > 0")));
    }
    if !(t_sys > 0.0 && t_sys.is_finite()) {
        return Err(NoiseError::Domain(format!("temperature {t_sys} must be > 0")));
    }
    Ok(BOLTZMANN * t_sys / (HBAR * 2.0 * std::f64::consts::PI * f))
}

/// Measured output noise spectral density on a (frequency × load-temperature)
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweep {
    /// Frequency grid (Hz), strictly increasing.
    pub freqs: Vec<f64>,
    /// Load temperatures (K), at least three, strictly positive.
    pub temps: Vec<f64>,
    /// psd[i][j] = spectral density (W/Hz) at freqs[i], temps[j].
    pub psd: Vec<Vec<f64>>,
}

impl NoiseSweep {
    pub fn new(freqs: Vec<f64>, temps: Vec<f64>, psd: Vec<Vec<f64>>) -> Result<Self, NoiseError> {
        if freqs.is_empty() || freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NoiseError::InvalidSweep(
                "frequency grid must be non-empty and strictly increasing".to_string(),
            ));
        }
        if temps.len() < 3 {
            return Err(NoiseError::InvalidSweep(
                "need at least 3 load temperatures".to_string(),
            ));
        }
        if temps.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(NoiseError::InvalidSweep(
                "load temperatures must be strictly positive".to_string(),
            ));
        }
        let spread = temps.iter().cloned().fold(f64::NAN, f64::max)
            - temps.iter().cloned().fold(f64::NAN, f64::min);
        if !(spread > 0.0) {
            return Err(NoiseError::InvalidSweep(
                "load temperatures must not all be equal".to_string(),
            ));
        }
        if psd.len() != freqs.len() || psd.iter().any(|row| row.len() != temps.len()) {
            return Err(NoiseError::InvalidSweep(
                "psd must be a freqs × temps grid".to_string(),
            ));
        }
        if psd.iter().flatten().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(NoiseError::InvalidSweep("psd values must be > 0".to_string()));
        }
        Ok(Self { freqs, temps, psd })
    }

    /// Long-format CSV: `freq_hz,temp_k,psd_w_per_hz`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,temp_k,psd_w_per_hz\n");
        for (i, &f) in self.freqs.iter().enumerate() {
            for (j, &t) in self.temps.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", f, t, self.psd[i][j]));
            }
        }
        out
    }

    /// Parse the long-format CSV written by [`NoiseSweep::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, NoiseError> {
        let (freqs, temps, psd) = parse_sweep_csv(text)?;
        Self::new(freqs, temps, psd)
    }
}

/// Raw grid from the long-format CSV, before any validation — callers that
/// need unit conversion (e.g. dBm/Hz input) transform the values first and
/// then build the [`NoiseSweep`].
pub fn parse_sweep_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>), NoiseError> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| NoiseError::InvalidSweep("empty file".to_string()))?;
    if header.1.trim() != "freq_hz,temp_k,psd_w_per_hz" {
        return Err(NoiseError::InvalidSweep(format!(
            "line 1: expected header freq_hz,temp_k,psd_w_per_hz, got `{}`",
            header.1.trim()
        )));
    }
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut parse = |what: &str| -> Result<f64, NoiseError> {
            fields
                .next()
                .ok_or_else(|| {
                    NoiseError::InvalidSweep(format!("line {}: missing {what}", idx + 1))
                })?
                .trim()
                .parse()
                .map_err(|_| NoiseError::InvalidSweep(format!("line {}: bad {what}", idx + 1)))
        };
        let f = parse("freq_hz")?;
        let t = parse("temp_k")?;
        let p = parse("psd_w_per_hz")?;
        rows.push((f, t, p));
    }
    if rows.is_empty() {
        return Err(NoiseError::InvalidSweep("no data rows".to_string()));
    }
    let mut freqs: Vec<f64> = Vec::new();
    for &(f, _, _) in &rows {
        if !freqs.contains(&f) {
            freqs.push(f);
        }
    }
    freqs.sort_by(f64::total_cmp);
    let mut temps: Vec<f64> = Vec::new();
    for &(_, t, _) in rows.iter().filter(|r| r.0 == freqs[0]) {
        temps.push(t);
    }
    let mut psd = vec![vec![f64::NAN; temps.len()]; freqs.len()];
    for &(f, t, p) in &rows {
        let i = freqs
            .iter()
            .position(|&x| x == f)
            .expect("frequency collected above");
        let j = temps.iter().position(|&x| x == t).ok_or_else(|| {
            NoiseError::InvalidSweep(format!(
                "temperature {t} K at {f} Hz missing from the first frequency block"
            ))
        })?;
        psd[i][j] = p;
    }
    if psd.iter().flatten().any(|p| p.is_nan()) {
        return Err(NoiseError::InvalidSweep(
            "grid is not rectangular: missing (freq, temp) samples".to_string(),
        ));
    }
    Ok((freqs, temps, psd))
}

/// Quality flags attached to individual frequency rows of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FitFlagKind {
    /// The fitted intercept came out negative (reported as-is, not clipped).
    NegativeIntercept,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitFlag {
    pub index: usize,
    pub freq_hz: f64,
    pub kind: FitFlagKind,
}

/// Per-frequency gain and system noise recovered from a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFitResult {
    pub freqs: Vec<f64>,
    /// Linear power gain (dimensionless, k_B factored out).
    pub gain: Vec<f64>,
    /// System noise temperature (K).
    pub t_sys: Vec<f64>,
    /// Standard error of t_sys (K) from the residual covariance.
    pub t_sys_stderr: Vec<f64>,
    /// k_B·T_sys/ħω.
    pub photons: Vec<f64>,
    pub flags: Vec<FitFlag>,
}

impl NoiseFitResult {
    /// CSV: `freq_hz,gain_db,t_sys_k,t_sys_stderr_k,photons`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,gain_db,t_sys_k,t_sys_stderr_k,photons\n");
        for i in 0..self.freqs.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.freqs[i],
                10.0 * self.gain[i].log10(),
                self.t_sys[i],
                self.t_sys_stderr[i],
                self.photons[i]
            ));
        }
        out
    }
}

/// Fit of one frequency row: psd_j = a·planck(f, T_j) + b.
pub fn fit_noise_point(f: f64, temps: &[f64], psd: &[f64]) -> Result<(f64, f64, f64), NoiseError> {
    let n = temps.len() as f64;
    let x: Vec<f64> = temps
        .iter()
        .map(|&t| planck_psd(f, t))
        .collect::<Result<_, _>>()?;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = psd.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mean_x) * (v - mean_x)).sum();
    // Degenerate when the Planck values barely move across the temp sweep
    // (e.g. all loads frozen out at high frequency). The natural yardstick
    // is the load-temperature spread itself.
    let t_spread = temps.iter().cloned().fold(f64::MIN, f64::max)
        - temps.iter().cloned().fold(f64::MAX, f64::min);
    if sxx == 0.0 || (sxx / n).sqrt() < 1e-9 * t_spread {
        return Err(NoiseError::RankDeficient(f));
    }
    let sxy: f64 = x
        .iter()
        .zip(psd)
        .map(|(&xv, &yv)| (xv - mean_x) * (yv - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    // Residual variance → standard errors of slope/intercept, propagated to
    // T_sys = b/a with their covariance (cov(a,b) = −x̄·var(a)).
    let dof = (temps.len() as isize - 2).max(1) as f64;
    let ssr: f64 = x
        .iter()
        .zip(psd)
        .map(|(&xv, &yv)| {
            let r = yv - (slope * xv + intercept);
            r * r
        })
        .sum();
    let sigma2 = ssr / dof;
    let var_a = sigma2 / sxx;
    let var_b = sigma2 * (1.0 / n + mean_x * mean_x / sxx);
    let cov_ab = -mean_x * var_a;
    let d_a = -intercept / (slope * slope);
    let d_b = 1.0 / slope;
    let var_t = (d_a * d_a * var_a + d_b * d_b * var_b + 2.0 * d_a * d_b * cov_ab).max(0.0);
    Ok((slope, intercept, var_t.sqrt()))
}

/// Per-frequency linear least squares over the whole sweep.
pub fn fit_noise(sweep: &NoiseSweep) -> Result<NoiseFitResult, NoiseError> {
    let rows = par::map_range(sweep.freqs.len(), |i| {
        fit_noise_point(sweep.freqs[i], &sweep.temps, &sweep.psd[i])
    });
    let mut gain = Vec::with_capacity(rows.len());
    let mut t_sys = Vec::with_capacity(rows.len());
    let mut stderr = Vec::with_capacity(rows.len());
    let mut photons = Vec::with_capacity(rows.len());
    let mut flags = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        let (slope, intercept, sigma_t) = row?;
        let f = sweep.freqs[i];
        if intercept < 0.0 {
            flags.push(FitFlag {
                index: i,
                freq_hz: f,
                kind: FitFlagKind::NegativeIntercept,
            });
        }
        let t = intercept / slope;
        gain.push(slope / BOLTZMANN);
        t_sys.push(t);
        stderr.push(sigma_t);
        photons.push(BOLTZMANN * t / (HBAR * 2.0 * std::f64::consts::PI * f));
    }
    Ok(NoiseFitResult {
        freqs: sweep.freqs.clone(),
        gain,
        t_sys,
        t_sys_stderr: stderr,
        photons,
        flags,
    })
}

/// Evaluate the forward model psd = G·k_B·(planck + T_sys); the exact
/// inverse of [`fit_noise`] on noiseless data.
pub fn forward_noise_model(
    freqs: &[f64],
    temps: &[f64],
    gain: f64,
    t_sys: f64,
) -> Result<NoiseSweep, NoiseError> {
    let psd = freqs
        .iter()
        .map(|&f| {
            temps
                .iter()
                .map(|&t| Ok(gain * BOLTZMANN * (planck_psd(f, t)? + t_sys)))
                .collect::<Result<Vec<f64>, NoiseError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    NoiseSweep::new(freqs.to_vec(), temps.to_vec(), psd)
}

/// Distributed internal gain/loss model of the amplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributedAmpSpec {
    pub n_segments: usize,
    /// Power gain per segment (dB), ≥ 0.
    pub gain_per_segment_db: f64,
    /// Attenuation per segment (dB), ≥ 0.
    pub loss_per_segment_db: f64,
    /// Physical temperature of the lossy medium (K), ≥ 0.
    pub segment_temp_k: f64,
}

impl DistributedAmpSpec {
    /// Representative spec of the measured device at frequency `f`: 20
    /// segments, 3 dB of distributed loss at an elevated 2 K internal
    /// temperature, and a parametric gain rising from 5 dB at 6 GHz to
    /// 12 dB at 10 GHz. A fitted set — the internal loss and temperature
    /// profiles are not directly measurable.
    pub fn device_default(f: f64) -> Self {
        let f_ghz = (f / 1e9).clamp(6.0, 10.0);
        let total_gain_db = 5.0 + (12.0 - 5.0) * (f_ghz - 6.0) / 4.0;
        let n = 20;
        Self {
            n_segments: n,
            gain_per_segment_db: total_gain_db / n as f64,
            loss_per_segment_db: 3.0 / n as f64,
            segment_temp_k: 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if self.n_segments < 1 {
            return Err(NoiseError::InvalidSpec("n_segments must be >= 1".to_string()));
        }
        if !(self.gain_per_segment_db.is_finite()
            && self.loss_per_segment_db.is_finite()
            && self.gain_per_segment_db >= 0.0
            && self.loss_per_segment_db >= 0.0)
        {
            return Err(NoiseError::InvalidSpec(
                "per-segment gain/loss must be finite and >= 0 dB".to_string(),
            ));
        }
        if !(self.segment_temp_k >= 0.0 && self.segment_temp_k.is_finite()) {
            return Err(NoiseError::InvalidSpec(
                "segment temperature must be >= 0".to_string(),
            ));
        }
        let total = self.n_segments as f64 * self.gain_per_segment_db;
        if !total.is_finite() {
            return Err(NoiseError::InvalidSpec("total gain overflows".to_string()));
        }
        Ok(())
    }
}

/// Thermal occupancy 1/(e^{ħω/k_BT} − 1); zero at T = 0.
fn thermal_occupancy(f: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = HBAR * 2.0 * std::f64::consts::PI * f / (BOLTZMANN * t);
    1.0 / x.exp_m1()
}

/// Input-referred added photons (above the input vacuum) of a chain of
/// identical gain+loss segments.
///
/// Each segment applies half its attenuation, then the gain, then the other
/// half (symmetric splitting, second-order in segment size). The
/// phase-insensitive gain stage contributes the parametric vacuum term
/// (g − 1)·½; each lossy element admixes (1 − l)·(n_th + ½) of
/// thermal-plus-vacuum occupancy. The output is referred to the input by the
/// cumulative net gain.
pub fn distributed_added_noise(spec: &DistributedAmpSpec, f: f64) -> Result<f64, NoiseError> {
    spec.validate()?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(NoiseError::Domain(format!("frequency {f} must be > 0")));
    }
    let g = 10f64.powf(spec.gain_per_segment_db / 10.0);
    let l = 10f64.powf(-spec.loss_per_segment_db / 10.0);
    let l_half = l.sqrt();
    let n_th = thermal_occupancy(f, spec.segment_temp_k);

    let mut occupancy = 0.5; // input vacuum
    let mut net_gain = 1.0;
    for _ in 0..spec.n_segments {
        occupancy = l_half * occupancy + (1.0 - l_half) * (n_th + 0.5);
        occupancy = g * occupancy + (g - 1.0) * 0.5;
        occupancy = l_half * occupancy + (1.0 - l_half) * (n_th + 0.5);
        net_gain *= g * l;
    }
    Ok(occupancy / net_gain - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn planck_rayleigh_jeans_limit() {
        // ħω/k_B ≪ T: source term → T.
        let t = 3.0;
        let p = planck_psd(1e6, t).unwrap();
        assert!((p - t).abs() / t < 1e-4, "p = {p}");
    }

    #[test]
    fn planck_freezes_out() {
        let p = planck_psd(9e9, 0.01).unwrap();
        assert!(p < 1e-9, "p = {p:e}");
    }

    #[test]
    fn planck_at_quantum_temperature() {
        // T = ħω/k_B gives exactly T/(e − 1).
        let f = 9e9;
        let t = HBAR * 2.0 * std::f64::consts::PI * f / BOLTZMANN;
        assert_relative_eq!(t, 0.4319, max_relative = 1e-3);
        let p = planck_psd(f, t).unwrap();
        assert_relative_eq!(p, t / (std::f64::consts::E - 1.0), max_relative = 1e-12);
        assert_relative_eq!(p, 0.2513, max_relative = 2e-3);
    }

    #[test]
    fn planck_domain_errors() {
        assert!(planck_psd(0.0, 1.0).is_err());
        assert!(planck_psd(1e9, 0.0).is_err());
        assert!(planck_psd(-1e9, 1.0).is_err());
    }

    #[test]
    fn planck_monotone() {
        let f = 6e9;
        let mut prev = planck_psd(f, 0.05).unwrap();
        for i in 1..60 {
            let t = 0.05 + i as f64 * 0.05;
            let cur = planck_psd(f, t).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
        let t = 1.0;
        let mut prev = planck_psd(1e9, t).unwrap();
        for i in 1..40 {
            let cur = planck_psd(1e9 + i as f64 * 0.5e9, t).unwrap();
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn photons_anchor_value() {
        // 1.5 K at 9 GHz ≈ 3.47 photons.
        let n = photons_from_tsys(1.5, 9e9).unwrap();
        assert!((n - 3.47).abs() < 0.05, "n = {n}");
        // T = ħω/k_B is exactly one photon.
        let t1 = HBAR * 2.0 * std::f64::consts::PI * 9e9 / BOLTZMANN;
        assert_relative_eq!(photons_from_tsys(t1, 9e9).unwrap(), 1.0, epsilon = 1e-14);
        // Inverse proportionality in frequency.
        let a = photons_from_tsys(1.5, 4e9).unwrap();
        let b = photons_from_tsys(1.5, 8e9).unwrap();
        assert_relative_eq!(a, 2.0 * b, max_relative = 1e-13);
    }

    #[test]
    fn fit_recovers_forward_model_exactly() {
        let freqs: Vec<f64> = (0..17).map(|i| 4e9 + i as f64 * 0.5e9).collect();
        let temps: Vec<f64> = (0..25).map(|j| 0.1 + j as f64 * (2.9 / 24.0)).collect();
        let sweep = forward_noise_model(&freqs, &temps, 1e6, 1.5).unwrap();
        let fit = fit_noise(&sweep).unwrap();
        for i in 0..freqs.len() {
            assert_relative_eq!(fit.gain[i], 1e6, max_relative = 1e-10);
            assert_relative_eq!(fit.t_sys[i], 1.5, max_relative = 1e-10);
        }
        assert!(fit.flags.is_empty());
        // photons field consistent with the standalone converter.
        for i in 0..freqs.len() {
            let direct = photons_from_tsys(fit.t_sys[i], freqs[i]).unwrap();
            assert_relative_eq!(fit.photons[i], direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn rank_deficiency_detected() {
        // 60 GHz with loads at 10–30 mK: Planck term is frozen out flat.
        let temps = vec![0.010, 0.02, 0.03];
        let psd = vec![vec![1e-18, 1e-18, 1e-18]];
        let sweep = NoiseSweep::new(vec![6e10], temps, psd).unwrap();
        assert!(matches!(
            fit_noise(&sweep),
            Err(NoiseError::RankDeficient(_))
        ));
    }

    #[test]
    fn negative_intercept_flagged_not_clipped() {
        let freqs = vec![9e9];
        let temps: Vec<f64> = vec![0.5, 1.0, 2.0, 3.0];
        let x: Vec<f64> = temps.iter().map(|&t| planck_psd(9e9, t).unwrap()).collect();
        // slope 1e6·k_B, intercept −0.2·1e6·k_B (unphysical but fit must
        // report it faithfully).
        let psd = vec![x.iter().map(|&v| 1e6 * BOLTZMANN * (v - 0.2)).collect()];
        let sweep = NoiseSweep::new(freqs, temps, psd).unwrap();
        let fit = fit_noise(&sweep).unwrap();
        assert_eq!(fit.flags.len(), 1);
        assert!(matches!(fit.flags[0].kind, FitFlagKind::NegativeIntercept));
        assert_relative_eq!(fit.t_sys[0], -0.2, max_relative = 1e-8);
    }

    #[test]
    fn sweep_validation() {
        assert!(NoiseSweep::new(vec![], vec![1.0, 2.0, 3.0], vec![]).is_err());
        assert!(NoiseSweep::new(vec![1e9], vec![1.0, 2.0], vec![vec![1.0, 1.0]]).is_err());
        assert!(NoiseSweep::new(vec![1e9], vec![1.0, 1.0, 1.0], vec![vec![1.0; 3]]).is_err());
        assert!(NoiseSweep::new(vec![1e9], vec![1.0, 2.0, 3.0], vec![vec![0.0; 3]]).is_err());
    }

    #[test]
    fn sweep_csv_round_trip_is_textually_stable() {
        let sweep = forward_noise_model(
            &[4e9, 6.5e9, 9e9],
            &[0.1, 0.7, 1.9, 3.0],
            3.1e5,
            1.37,
        )
        .unwrap();
        let text = sweep.to_csv();
        let back = NoiseSweep::from_csv(&text).unwrap();
        assert_eq!(back, sweep);
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn distributed_lossless_high_gain_approaches_half_photon() {
        let spec = DistributedAmpSpec {
            n_segments: 30,
            gain_per_segment_db: 1.0, // 30 dB total
            loss_per_segment_db: 0.0,
            segment_temp_k: 0.01,
        };
        let n = distributed_added_noise(&spec, 8e9).unwrap();
        assert!((n - 0.5).abs() < 0.005, "n = {n}");
    }

    #[test]
    fn distributed_single_segment_closed_form() {
        // 0 dB gain, 3 dB loss, T = 0: beam-splitter vacuum noise
        // (1/l − 1)/2.
        let spec = DistributedAmpSpec {
            n_segments: 1,
            gain_per_segment_db: 0.0,
            loss_per_segment_db: 3.0,
            segment_temp_k: 0.0,
        };
        let n = distributed_added_noise(&spec, 8e9).unwrap();
        let l = 10f64.powf(-0.3);
        assert_relative_eq!(n, (1.0 / l - 1.0) / 2.0, epsilon = 1e-12);
        assert_relative_eq!(n, 0.4976, max_relative = 1e-3);

        // General single segment against the explicit closed form
        // (half-loss, gain, half-loss).
        let spec = DistributedAmpSpec {
            n_segments: 1,
            gain_per_segment_db: 7.0,
            loss_per_segment_db: 1.3,
            segment_temp_k: 0.4,
        };
        let f = 7e9;
        let g = 10f64.powf(0.7);
        let l = 10f64.powf(-0.13);
        let lh = l.sqrt();
        let n_th = thermal_occupancy(f, 0.4);
        let inject = n_th + 0.5;
        let occ1 = lh * 0.5 + (1.0 - lh) * inject;
        let occ2 = g * occ1 + (g - 1.0) * 0.5;
        let occ3 = lh * occ2 + (1.0 - lh) * inject;
        let closed = occ3 / (g * l) - 0.5;
        assert_relative_eq!(
            distributed_added_noise(&spec, f).unwrap(),
            closed,
            epsilon = 1e-12
        );
    }

    #[test]
    fn distributed_segment_splitting_converges() {
        // Halving segment granularity at ≤ 0.1 dB/segment moves the result
        // by far less than 0.1%.
        let coarse = DistributedAmpSpec {
            n_segments: 120,
            gain_per_segment_db: 0.1,
            loss_per_segment_db: 0.025,
            segment_temp_k: 0.5,
        };
        let fine = DistributedAmpSpec {
            n_segments: 240,
            gain_per_segment_db: 0.05,
            loss_per_segment_db: 0.0125,
            segment_temp_k: 0.5,
        };
        let a = distributed_added_noise(&coarse, 8e9).unwrap();
        let b = distributed_added_noise(&fine, 8e9).unwrap();
        assert!((a - b).abs() / b < 1e-3, "a = {a}, b = {b}");
    }

    #[test]
    fn distributed_spec_validation() {
        let bad = DistributedAmpSpec {
            n_segments: 0,
            gain_per_segment_db: 1.0,
            loss_per_segment_db: 0.0,
            segment_temp_k: 0.0,
        };
        assert!(distributed_added_noise(&bad, 1e9).is_err());
    }
}
