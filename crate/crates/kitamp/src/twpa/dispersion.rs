//! Dispersion of uniform and periodically loaded lines.
//!
//! The loaded line is a repetition of two lossless sections sharing the
//! unloaded phase velocity. With θ = ω·d/v the trace of the unit-cell ABCD
//! matrix reduces to
//!
//! ```text
//! cos(k·d) = cos(θ) − ε·sin((1−η)·θ)·sin(η·θ),   ε = (Z₁−Z₂)²/(2·Z₁·Z₂)
//! ```
//!
//! which exceeds ±1 in a stopband around every θ = m·π. Gaps are located by
//! bisection around those centers, and the Bloch wavenumber is unwrapped from
//! DC by counting complete bands below each frequency (each band spans π in
//! k·d). Inside a gap the reported k is pinned to the band-edge value; a
//! frequency exactly on a gap edge is assigned to the band below.

use super::{DispersionCurve, LineSpec, TwpaError};
use crate::par;

/// cos(k·d) for the two-section cell at reduced frequency θ = ω·d/v.
fn cell_trace(theta: f64, eta: f64, eps: f64) -> f64 {
    theta.cos() - eps * ((1.0 - eta) * theta).sin() * (eta * theta).sin()
}

fn validate_grid(freqs: &[f64], allow_zero: bool) -> Result<(), TwpaError> {
    if freqs.is_empty() {
        return Err(TwpaError::BadGrid);
    }
    let floor_ok = if allow_zero {
        freqs[0] >= 0.0
    } else {
        freqs[0] > 0.0
    };
    if !floor_ok || freqs.iter().any(|f| !f.is_finite()) {
        return Err(TwpaError::BadGrid);
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TwpaError::BadGrid);
    }
    Ok(())
}

/// k = ω·√(L'C') for the unloaded line; no stopbands.
pub fn linear_dispersion(spec: &LineSpec, freqs: &[f64]) -> Result<DispersionCurve, TwpaError> {
    validate_grid(freqs, true)?;
    let slowness = (spec.lk0 * spec.cap0).sqrt();
    let k = freqs
        .iter()
        .map(|f| 2.0 * std::f64::consts::PI * f * slowness)
        .collect();
    Ok(DispersionCurve {
        freqs: freqs.to_vec(),
        k,
        in_gap: vec![false; freqs.len()],
    })
}

/// Stopband intervals in θ up to `theta_max`, one per multiple of π.
///
/// Zero-width entries mark band crossings where the gap closes (the trace
/// touches ±1 exactly); they still separate adjacent bands for unwrapping.
fn locate_gaps(theta_max: f64, eta: f64, eps: f64) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    let mut gaps = Vec::new();
    let m_max = (theta_max / PI).floor() as usize + 1;
    let probe = PI / 4096.0;
    for m in 1..=m_max {
        let center = m as f64 * PI;
        if cell_trace(center, eta, eps).abs() <= 1.0 {
            gaps.push((center, center));
            continue;
        }
        let edge = |dir: f64| -> f64 {
            // Walk out of the gap, then bisect |trace| = 1.
            let mut inside = center;
            let mut outside = None;
            for step in 1..4096 {
                let t = center + dir * step as f64 * probe;
                if t <= 0.0 {
                    break;
                }
                if cell_trace(t, eta, eps).abs() <= 1.0 {
                    outside = Some(t);
                    break;
                }
                inside = t;
            }
            let Some(mut outside) = outside else {
                // Contrast so extreme the band closed up; give up half a band.
                return center + dir * PI / 2.0;
            };
            for _ in 0..80 {
                let mid = 0.5 * (inside + outside);
                if cell_trace(mid, eta, eps).abs() > 1.0 {
                    inside = mid;
                } else {
                    outside = mid;
                }
                if (outside - inside).abs() < 1e-14 * center.max(1.0) {
                    break;
                }
            }
            0.5 * (inside + outside)
        };
        let lo = edge(-1.0);
        if lo > theta_max {
            break;
        }
        gaps.push((lo, edge(1.0)));
    }
    gaps
}

/// Bloch dispersion of the periodically loaded line.
pub fn bloch_dispersion(spec: &LineSpec, freqs: &[f64]) -> Result<DispersionCurve, TwpaError> {
    use std::f64::consts::PI;
    let cell = spec.loading.ok_or(TwpaError::NoLoading)?;
    validate_grid(freqs, false)?;

    // Degenerate loading is a uniform line; keep the reduction exact.
    if cell.z_loaded == cell.z_unloaded {
        let mut curve = linear_dispersion(spec, freqs)?;
        curve.freqs = freqs.to_vec();
        return Ok(curve);
    }

    let v = spec.phase_velocity();
    let d = cell.period;
    let eta = cell.loaded_fraction;
    let (z1, z2) = (cell.z_unloaded, cell.z_loaded);
    let eps = (z1 - z2) * (z1 - z2) / (2.0 * z1 * z2);

    let theta_of = |f: f64| 2.0 * PI * f * d / v;
    let gaps = locate_gaps(theta_of(*freqs.last().unwrap()), eta, eps);

    let points = par::map_range(freqs.len(), |i| {
        let theta = theta_of(freqs[i]);
        let c = cell_trace(theta, eta, eps);
        let in_gap = c.abs() > 1.0;
        // Completed bands below this frequency; a point exactly on a gap edge
        // keeps the band below.
        let n = gaps.partition_point(|&(_, hi)| hi <= theta);
        let kd = if in_gap {
            (n + 1) as f64 * PI
        } else {
            let principal = c.clamp(-1.0, 1.0).acos();
            if n % 2 == 0 {
                n as f64 * PI + principal
            } else {
                (n + 1) as f64 * PI - principal
            }
        };
        (kd / d, in_gap)
    });

    Ok(DispersionCurve {
        freqs: freqs.to_vec(),
        k: points.iter().map(|p| p.0).collect(),
        in_gap: points.iter().map(|p| p.1).collect(),
    })
}

impl DispersionCurve {
    /// Linear interpolation of k at `f`; refuses stopbands and off-grid tones.
    pub fn wavenumber_at(&self, f: f64) -> Result<f64, TwpaError> {
        let n = self.freqs.len();
        if n == 0 || f < self.freqs[0] || f > self.freqs[n - 1] {
            return Err(TwpaError::OutsideGrid(f));
        }
        let hi = self.freqs.partition_point(|&x| x < f);
        if hi < n && self.freqs[hi] == f {
            if self.in_gap[hi] {
                return Err(TwpaError::InStopband(f));
            }
            return Ok(self.k[hi]);
        }
        let (lo, hi) = (hi - 1, hi);
        if self.in_gap[lo] || self.in_gap[hi] {
            return Err(TwpaError::InStopband(f));
        }
        let t = (f - self.freqs[lo]) / (self.freqs[hi] - self.freqs[lo]);
        Ok(self.k[lo] + t * (self.k[hi] - self.k[lo]))
    }
}

/// Wavenumbers of the pump/signal/idler triplet on `curve`.
pub(crate) fn tone_wavenumbers(
    curve: &DispersionCurve,
    f_pump: f64,
    f_signal: f64,
) -> Result<(f64, f64, f64), TwpaError> {
    if !(f_signal > 0.0 && f_signal < f_pump) {
        return Err(TwpaError::BadTonePair);
    }
    let f_idler = f_pump - f_signal;
    let k_p = curve.wavenumber_at(f_pump)?;
    let k_s = curve.wavenumber_at(f_signal)?;
    let k_i = curve.wavenumber_at(f_idler)?;
    Ok((k_p, k_s, k_i))
}

/// Δk = k_p − k_s − k_i − Δθ with all wavenumbers interpolated on `curve`.
pub fn phase_mismatch(
    curve: &DispersionCurve,
    f_pump: f64,
    f_signal: f64,
    delta_theta: f64,
) -> Result<f64, TwpaError> {
    let (k_p, k_s, k_i) = tone_wavenumbers(curve, f_pump, f_signal)?;
    Ok(k_p - k_s - k_i - delta_theta)
}
