//! Parametric gain: closed form, coupled-mode integrator, band profiles.

use num_complex::Complex64;

use super::dispersion::tone_wavenumbers;
use super::{small_signal_gain_coefficient, DispersionCurve, GainProfile, LineSpec, TwpaError};
use crate::par;

/// sinh(√z·L)/√z continued through z ≤ 0 (sin for imaginary argument).
fn stretched_length(z: f64, length: f64) -> f64 {
    let arg = z * length * length;
    if arg > 1e-4 {
        let h = z.sqrt();
        (h * length).sinh() / h
    } else if arg < -1e-4 {
        let h = (-z).sqrt();
        (h * length).sin() / h
    } else {
        // sinh(x)/x = 1 + x²/6 + x⁴/120 + x⁶/5040 with x² = arg.
        length * (1.0 + arg / 6.0 + arg * arg / 120.0 + arg * arg * arg / 5040.0)
    }
}

fn gain_and_mismatch(
    spec: &LineSpec,
    curve: &DispersionCurve,
    f_pump: f64,
    f_signal: f64,
    delta_theta: f64,
) -> Result<(f64, f64), TwpaError> {
    let (k_p, k_s, k_i) = tone_wavenumbers(curve, f_pump, f_signal)?;
    let delta_k = k_p - k_s - k_i - delta_theta;
    let g = small_signal_gain_coefficient(spec, k_s, k_i)?;
    // G = 1 + (g/ĝ)²·sinh²(ĝL), ĝ² = g² − (Δk/2)²; reduces to 1 + sinh²(gL)
    // at Δk = 0 and continues to sin for imaginary ĝ.
    let z = g * g - 0.25 * delta_k * delta_k;
    let s = stretched_length(z, spec.length);
    Ok((1.0 + g * g * s * s, delta_k))
}

/// Closed-form undepleted-pump power gain (linear, lossless).
pub fn analytic_gain(
    spec: &LineSpec,
    curve: &DispersionCurve,
    f_pump: f64,
    f_signal: f64,
    delta_theta: f64,
) -> Result<f64, TwpaError> {
    gain_and_mismatch(spec, curve, f_pump, f_signal, delta_theta).map(|(g, _)| g)
}

/// Options for the coupled-mode integrator.
#[derive(Debug, Clone, Copy)]
pub struct CmeOptions {
    /// Fixed RK4 steps over the line length (>= 1000 recommended).
    pub steps: usize,
    /// Apply the line attenuation as an exp(−αx) envelope on the result.
    pub apply_loss: bool,
}

impl Default for CmeOptions {
    fn default() -> Self {
        Self {
            steps: 4000,
            apply_loss: false,
        }
    }
}

/// Signal and idler amplitudes after integrating the three-wave-mixing
/// coupled-mode equations
///
/// ```text
/// da_s/dx = i·g·a_i*·e^{iΔk·x}     da_i/dx = i·g·a_s*·e^{iΔk·x}
/// ```
///
/// from a_s(0) = 1, a_i(0) = 0 with a fixed-step 4th-order scheme. The pump
/// is held undepleted.
pub fn coupled_mode_amplitudes(
    spec: &LineSpec,
    curve: &DispersionCurve,
    f_pump: f64,
    f_signal: f64,
    delta_theta: f64,
    steps: usize,
) -> Result<(Complex64, Complex64), TwpaError> {
    if steps < 1 {
        return Err(TwpaError::BadStepCount);
    }
    let (k_p, k_s, k_i) = tone_wavenumbers(curve, f_pump, f_signal)?;
    let delta_k = k_p - k_s - k_i - delta_theta;
    let g = small_signal_gain_coefficient(spec, k_s, k_i)?;

    let h = spec.length / steps as f64;
    let deriv = |x: f64, a_s: Complex64, a_i: Complex64| -> (Complex64, Complex64) {
        let phase = Complex64::new(0.0, delta_k * x).exp() * Complex64::new(0.0, g);
        (phase * a_i.conj(), phase * a_s.conj())
    };

    let mut a_s = Complex64::new(1.0, 0.0);
    let mut a_i = Complex64::new(0.0, 0.0);
    let mut x = 0.0;
    for _ in 0..steps {
        let (k1s, k1i) = deriv(x, a_s, a_i);
        let (k2s, k2i) = deriv(x + 0.5 * h, a_s + 0.5 * h * k1s, a_i + 0.5 * h * k1i);
        let (k3s, k3i) = deriv(x + 0.5 * h, a_s + 0.5 * h * k2s, a_i + 0.5 * h * k2i);
        let (k4s, k4i) = deriv(x + h, a_s + h * k3s, a_i + h * k3i);
        a_s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
        a_i += h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        x += h;
    }
    Ok((a_s, a_i))
}

/// Numerical power gain |a_s(L)|² from the coupled-mode equations.
pub fn coupled_mode_gain(
    spec: &LineSpec,
    curve: &DispersionCurve,
    f_pump: f64,
    f_signal: f64,
    delta_theta: f64,
    opts: CmeOptions,
) -> Result<f64, TwpaError> {
    let (a_s, _) =
        coupled_mode_amplitudes(spec, curve, f_pump, f_signal, delta_theta, opts.steps)?;
    let mut gain = a_s.norm_sqr();
    if opts.apply_loss {
        gain *= spec.loss.power_factor(f_signal, spec.length);
    }
    Ok(gain)
}

/// Net gain profile over a signal band: closed-form parametric gain times the
/// line attenuation envelope. Points that cannot be evaluated (stopband or
/// off-grid tones) are recorded as gaps, not errors.
pub fn gain_profile(
    spec: &LineSpec,
    curve: &DispersionCurve,
    f_pump: f64,
    band: (f64, f64),
    n_points: usize,
    delta_theta: f64,
) -> Result<GainProfile, TwpaError> {
    let (f_lo, f_hi) = band;
    if !(f_lo.is_finite() && f_hi.is_finite() && f_lo < f_hi) || n_points < 2 {
        return Err(TwpaError::BadGrid);
    }
    let freqs: Vec<f64> = (0..n_points)
        .map(|i| f_lo + (f_hi - f_lo) * i as f64 / (n_points - 1) as f64)
        .collect();
    let pts = par::map_range(n_points, |i| {
        match gain_and_mismatch(spec, curve, f_pump, freqs[i], delta_theta) {
            Ok((g, dk)) => {
                let net = g * spec.loss.power_factor(freqs[i], spec.length);
                (Some(10.0 * net.log10()), Some(dk))
            }
            Err(_) => (None, None),
        }
    });
    Ok(GainProfile {
        freqs,
        gain_db: pts.iter().map(|p| p.0).collect(),
        mismatch: pts.iter().map(|p| p.1).collect(),
    })
}

/// Multiply a profile by the standing-wave feedback factor
/// |1/(1 − Γ₁·Γ₂·G·e^{iθ})|² modeling amplified reflections between the two
/// line terminations. Qualitative: Γ and θ are user-supplied scalars.
pub fn reflection_feedback(
    profile: &GainProfile,
    gamma1: f64,
    gamma2: f64,
    theta: f64,
) -> Result<GainProfile, TwpaError> {
    let mut out = profile.clone();
    for i in 0..out.freqs.len() {
        if let Some(db) = out.gain_db[i] {
            let g_lin = 10f64.powf(db / 10.0);
            let loop_gain = (gamma1 * gamma2).abs() * g_lin;
            if loop_gain >= 1.0 {
                return Err(TwpaError::FeedbackDiverges(out.freqs[i]));
            }
            let denom = Complex64::new(1.0, 0.0)
                - gamma1 * gamma2 * g_lin * Complex64::new(0.0, theta).exp();
            out.gain_db[i] = Some(10.0 * (g_lin / denom.norm_sqr()).log10());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twpa::{linear_dispersion, LossModel};
    use approx::assert_relative_eq;

    fn spec(i_dc: f64, a_p: f64) -> LineSpec {
        LineSpec::new(3.6e-6, 1.111e-10, 5e-3, i_dc, a_p, 2.0, None, LossModel::Lossless).unwrap()
    }

    fn light_line(s: &LineSpec) -> DispersionCurve {
        let freqs: Vec<f64> = (0..2001).map(|i| i as f64 * 1e7).collect();
        linear_dispersion(s, &freqs).unwrap()
    }

    #[test]
    fn no_pump_means_unity_gain() {
        let s = spec(5e-4, 0.0);
        let curve = light_line(&s);
        let g = analytic_gain(&s, &curve, 16e9, 5e9, 0.0).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn twelve_db_point_from_gl() {
        // Invert G = 1 + sinh²(gL) for G = 12 dB and check the closed form
        // returns exactly that gain at Δk = 0.
        let target = 10f64.powf(1.2);
        let gl = (target - 1.0).sqrt().asinh();
        let mut s = spec(5e-4, 5e-4);
        let curve = light_line(&s);
        // Rescale the pump so g·L matches at 8 GHz.
        let k8 = curve.wavenumber_at(8e9).unwrap();
        let g_unit = small_signal_gain_coefficient(&s, k8, k8).unwrap();
        s.a_p *= gl / (g_unit * s.length);
        let g = analytic_gain(&s, &curve, 16e9, 8e9, 0.0).unwrap();
        assert_relative_eq!(10.0 * g.log10(), 12.0, epsilon = 1e-9);
    }

    #[test]
    fn closed_form_equals_sinh_identity_at_zero_mismatch() {
        let s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        for f_s in [3e9, 6e9, 8e9] {
            let k_s = curve.wavenumber_at(f_s).unwrap();
            let k_i = curve.wavenumber_at(16e9 - f_s).unwrap();
            let g = small_signal_gain_coefficient(&s, k_s, k_i).unwrap();
            let expect = 1.0 + (g * s.length).sinh().powi(2);
            let got = analytic_gain(&s, &curve, 16e9, f_s, 0.0).unwrap();
            assert_relative_eq!(got, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn cme_matches_closed_form_at_unit_gl() {
        // Δk = 0, gL = 1 → G = 1 + sinh²(1) ≈ 2.3811.
        let mut s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        let k8 = curve.wavenumber_at(8e9).unwrap();
        let g_now = small_signal_gain_coefficient(&s, k8, k8).unwrap();
        s.a_p /= g_now * s.length;
        let gain = coupled_mode_gain(&s, &curve, 16e9, 8e9, 0.0, CmeOptions::default()).unwrap();
        let expect = 1.0 + 1f64.sinh().powi(2);
        assert_relative_eq!(gain, expect, max_relative = 1e-6);
        assert_relative_eq!(expect, 2.3810978455418157, max_relative = 1e-12);
    }

    #[test]
    fn cme_zero_coupling_is_exact_unity() {
        let s = spec(0.0, 3e-4);
        let curve = light_line(&s);
        let gain = coupled_mode_gain(&s, &curve, 16e9, 5e9, 0.0, CmeOptions::default()).unwrap();
        assert_eq!(gain, 1.0);
    }

    #[test]
    fn cme_step_halving_converges() {
        // gL = 2: fourth-order scheme should move < 1e-8 when halving h.
        let mut s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        let k8 = curve.wavenumber_at(8e9).unwrap();
        let g_now = small_signal_gain_coefficient(&s, k8, k8).unwrap();
        s.a_p *= 2.0 / (g_now * s.length);
        let coarse = coupled_mode_gain(
            &s,
            &curve,
            16e9,
            8e9,
            0.8,
            CmeOptions {
                steps: 2000,
                apply_loss: false,
            },
        )
        .unwrap();
        let fine = coupled_mode_gain(
            &s,
            &curve,
            16e9,
            8e9,
            0.8,
            CmeOptions {
                steps: 4000,
                apply_loss: false,
            },
        )
        .unwrap();
        assert!((coarse - fine).abs() < 1e-8, "delta {:e}", coarse - fine);
    }

    #[test]
    fn cme_rejects_zero_steps() {
        let s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        assert!(matches!(
            coupled_mode_amplitudes(&s, &curve, 16e9, 5e9, 0.0, 0),
            Err(TwpaError::BadStepCount)
        ));
    }

    #[test]
    fn oscillatory_regime_bounded_and_matches_cme() {
        // Δk/2 = 2g: bounded oscillation, closed form vs integrator within 1%.
        let s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        let k8 = curve.wavenumber_at(8e9).unwrap();
        let g = small_signal_gain_coefficient(&s, k8, k8).unwrap();
        let delta_theta = -(-4.0 * g); // light line gives Δk = −δθ
        let dk = phase_mismatch(&curve, 16e9, 8e9, delta_theta).unwrap();
        assert_relative_eq!(dk, -4.0 * g, max_relative = 1e-6);
        let analytic = analytic_gain(&s, &curve, 16e9, 8e9, delta_theta).unwrap();
        let bound = 1.0 + 1.0 / 3.0; // 1 + (g/ĝ)² with ĝ² = 3g²
        assert!(analytic <= bound + 1e-9);
        let numeric =
            coupled_mode_gain(&s, &curve, 16e9, 8e9, delta_theta, CmeOptions::default()).unwrap();
        assert_relative_eq!(analytic, numeric, max_relative = 1e-2);
    }

    use crate::twpa::phase_mismatch;

    #[test]
    fn manley_rowe_photon_flux() {
        let s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        let (a_s, a_i) = coupled_mode_amplitudes(&s, &curve, 16e9, 6e9, 0.0, 4000).unwrap();
        assert_relative_eq!(
            a_i.norm_sqr(),
            a_s.norm_sqr() - 1.0,
            epsilon = 1e-6,
        );
    }

    #[test]
    fn profile_flat_zero_db_without_pump() {
        let s = spec(4e-4, 0.0);
        let curve = light_line(&s);
        let prof = gain_profile(&s, &curve, 16e9, (4e9, 12e9), 101, 0.0).unwrap();
        for g in prof.gain_db.iter() {
            assert_eq!(g.unwrap(), 0.0);
        }
    }

    #[test]
    fn profile_symmetric_about_half_pump() {
        let s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        let prof = gain_profile(&s, &curve, 16e9, (4e9, 12e9), 81, 0.0).unwrap();
        let n = prof.freqs.len();
        for i in 0..n / 2 {
            let a = prof.gain_db[i].unwrap();
            let b = prof.gain_db[n - 1 - i].unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn profile_records_gaps_not_errors() {
        let s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        // Band extends past the curve: idler/pump leave the grid at the edges.
        let prof = gain_profile(&s, &curve, 16e9, (1e8, 1.99e10), 50, 0.0).unwrap();
        assert!(prof.gain_db.iter().any(|g| g.is_none()));
        assert!(prof.gain_db.iter().any(|g| g.is_some()));
    }

    #[test]
    fn feedback_identity_at_zero_reflection() {
        let s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        let prof = gain_profile(&s, &curve, 16e9, (4e9, 12e9), 21, 0.0).unwrap();
        let fed = reflection_feedback(&prof, 0.0, 0.5, 1.0).unwrap();
        assert_eq!(prof, fed);
    }

    #[test]
    fn feedback_diverges_at_unit_loop_gain() {
        let s = spec(4e-4, 3e-4);
        let curve = light_line(&s);
        let prof = gain_profile(&s, &curve, 16e9, (4e9, 12e9), 21, 0.0).unwrap();
        assert!(reflection_feedback(&prof, 1.0, 1.0, 0.0).is_err());
    }
}
