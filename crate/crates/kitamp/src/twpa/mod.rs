//! Three-wave-mixing parametric gain in a dispersion-engineered
//! kinetic-inductance transmission line.
//!
//! The line inductance depends quadratically on current,
//! L(I) = L0·(1 + (I/I*)²), so a DC bias plus a strong RF pump modulate the
//! inductance and couple a signal at f_s to an idler at f_p − f_s. Gain grows
//! with line length when the tones are phase matched; a periodic impedance
//! loading opens a stopband near the pump whose dispersion supplies the
//! wavenumber surplus that cancels the pump's nonlinear phase shift.
//!
//! [`analytic_gain`] evaluates the closed-form undepleted-pump solution and
//! [`coupled_mode_gain`] integrates the same coupled-mode equations
//! numerically; the two are interchangeable oracles for each other.

mod dispersion;
mod gain;

pub use dispersion::{bloch_dispersion, linear_dispersion, phase_mismatch};
pub use gain::{
    analytic_gain, coupled_mode_amplitudes, coupled_mode_gain, gain_profile, reflection_feedback,
    CmeOptions,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TwpaError {
    #[error("invalid line spec: {0}")]
    InvalidSpec(String),
    #[error("current |{current:.3e} A| exceeds the scaling current {i_star:.3e} A")]
    CurrentOutOfRange { current: f64, i_star: f64 },
    #[error("wavenumbers must be positive (k_s = {k_s:.3e}, k_i = {k_i:.3e})")]
    NonPositiveWavenumber { k_s: f64, k_i: f64 },
    #[error("frequency grid must be non-empty, finite, non-negative and strictly increasing")]
    BadGrid,
    #[error("line has no loading cell; use linear_dispersion for a uniform line")]
    NoLoading,
    #[error("frequency {0:.6e} Hz lies outside the dispersion grid")]
    OutsideGrid(f64),
    #[error("tone at {0:.6e} Hz falls inside a stopband")]
    InStopband(f64),
    #[error("signal frequency must satisfy 0 < f_signal < f_pump")]
    BadTonePair,
    #[error("integration steps must be >= 1")]
    BadStepCount,
    #[error("reflection feedback diverges: |G1*G2*G| >= 1 at {0:.6e} Hz")]
    FeedbackDiverges(f64),
}

/// Periodic impedance loading of the line (one unit cell).
///
/// Each cell of length `period` is a plain section at `z_unloaded` followed
/// by a widened section at `z_loaded` occupying `loaded_fraction` of the
/// cell. Both sections share the phase velocity of the unloaded line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadingCell {
    /// Cell length d (m).
    pub period: f64,
    /// Fraction of the cell with modified impedance, in (0, 1).
    pub loaded_fraction: f64,
    /// Characteristic impedance of the plain section (Ω).
    pub z_unloaded: f64,
    /// Characteristic impedance of the widened section (Ω).
    pub z_loaded: f64,
}

impl LoadingCell {
    pub fn new(
        period: f64,
        loaded_fraction: f64,
        z_unloaded: f64,
        z_loaded: f64,
    ) -> Result<Self, TwpaError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(TwpaError::InvalidSpec("loading period must be > 0".into()));
        }
        if !(loaded_fraction > 0.0 && loaded_fraction < 1.0) {
            return Err(TwpaError::InvalidSpec(
                "loaded_fraction must lie strictly in (0, 1)".into(),
            ));
        }
        if !(z_unloaded > 0.0 && z_loaded > 0.0) {
            return Err(TwpaError::InvalidSpec("impedances must be > 0".into()));
        }
        Ok(Self {
            period,
            loaded_fraction,
            z_unloaded,
            z_loaded,
        })
    }
}

/// Signal-band attenuation of the line.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LossModel {
    #[default]
    Lossless,
    /// Frequency-independent attenuation (dB/m).
    Uniform(f64),
    /// (frequency Hz, dB/m) knots, interpolated linearly in dB and
    /// extrapolated linearly beyond the ends (floored at 0 dB/m).
    Table(Vec<(f64, f64)>),
}

impl LossModel {
    /// Attenuation in dB/m at frequency `f`.
    pub fn db_per_m(&self, f: f64) -> f64 {
        match self {
            LossModel::Lossless => 0.0,
            LossModel::Uniform(db) => db.max(0.0),
            LossModel::Table(knots) => {
                if knots.is_empty() {
                    return 0.0;
                }
                if knots.len() == 1 {
                    return knots[0].1.max(0.0);
                }
                // Linear in dB vs frequency, extrapolating from the end segments.
                let seg = if f <= knots[0].0 {
                    (knots[0], knots[1])
                } else if f >= knots[knots.len() - 1].0 {
                    (knots[knots.len() - 2], knots[knots.len() - 1])
                } else {
                    let hi = knots.partition_point(|&(fk, _)| fk < f).max(1);
                    (knots[hi - 1], knots[hi])
                };
                let ((f0, d0), (f1, d1)) = seg;
                let t = (f - f0) / (f1 - f0);
                (d0 + t * (d1 - d0)).max(0.0)
            }
        }
    }

    /// Linear power transmission through `length` meters at frequency `f`.
    pub fn power_factor(&self, f: f64, length: f64) -> f64 {
        10f64.powf(-self.db_per_m(f) * length / 10.0)
    }

    fn validate(&self) -> Result<(), TwpaError> {
        if let LossModel::Table(knots) = self {
            if knots.is_empty() {
                return Err(TwpaError::InvalidSpec("empty loss table".into()));
            }
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(TwpaError::InvalidSpec(
                    "loss table frequencies must be strictly increasing".into(),
                ));
            }
            if knots.iter().any(|&(f, d)| !f.is_finite() || !d.is_finite()) {
                return Err(TwpaError::InvalidSpec("non-finite loss table entry".into()));
            }
        }
        Ok(())
    }
}

/// Geometry and electrical parameters of the nonlinear line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    /// Zero-current inductance per unit length (H/m).
    pub lk0: f64,
    /// Capacitance per unit length (F/m).
    pub cap0: f64,
    /// Nonlinearity scaling current I* (A).
    pub i_star: f64,
    /// DC bias current (A).
    pub i_dc: f64,
    /// Pump current amplitude (A).
    pub a_p: f64,
    /// Physical line length (m).
    pub length: f64,
    /// Periodic loading; `None` for a uniform line.
    pub loading: Option<LoadingCell>,
    /// Signal-band attenuation.
    pub loss: LossModel,
}

impl LineSpec {
    pub fn new(
        lk0: f64,
        cap0: f64,
        i_star: f64,
        i_dc: f64,
        a_p: f64,
        length: f64,
        loading: Option<LoadingCell>,
        loss: LossModel,
    ) -> Result<Self, TwpaError> {
        let spec = Self {
            lk0,
            cap0,
            i_star,
            i_dc,
            a_p,
            length,
            loading,
            loss,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), TwpaError> {
        for (name, v) in [
            ("lk0", self.lk0),
            ("cap0", self.cap0),
            ("i_star", self.i_star),
            ("length", self.length),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TwpaError::InvalidSpec(format!("{name} must be > 0")));
            }
        }
        if !self.i_dc.is_finite() || !self.a_p.is_finite() {
            return Err(TwpaError::InvalidSpec("currents must be finite".into()));
        }
        // Weak-nonlinearity validity region.
        if self.i_dc.abs() + self.a_p.abs() >= self.i_star {
            return Err(TwpaError::InvalidSpec(format!(
                "|i_dc| + |a_p| = {:.3e} A must stay below i_star = {:.3e} A",
                self.i_dc.abs() + self.a_p.abs(),
                self.i_star
            )));
        }
        self.loss.validate()
    }

    /// Phase velocity of the unloaded line (m/s).
    pub fn phase_velocity(&self) -> f64 {
        1.0 / (self.lk0 * self.cap0).sqrt()
    }

    /// Default pump nonlinear phase shift Δθ = k_p·(a_p/(2·I*))²/2 (rad/m).
    ///
    /// The self/cross-phase weights are not pinned by the gain model, so this
    /// is a documented default; callers may override it.
    pub fn default_delta_theta(&self, k_pump: f64) -> f64 {
        let x = self.a_p / (2.0 * self.i_star);
        0.5 * k_pump * x * x
    }
}

/// Current-dependent inductance per unit length, L(I) = L0·(1 + (I/I*)²).
pub fn kinetic_inductance(spec: &LineSpec, current: f64) -> Result<f64, TwpaError> {
    if current.abs() >= spec.i_star {
        return Err(TwpaError::CurrentOutOfRange {
            current,
            i_star: spec.i_star,
        });
    }
    let x = current / spec.i_star;
    Ok(spec.lk0 * (1.0 + x * x))
}

/// Small-signal gain coefficient g = √(k_s·k_i)·I_dc·a_p/(2·I*²) (1/m).
pub fn small_signal_gain_coefficient(
    spec: &LineSpec,
    k_s: f64,
    k_i: f64,
) -> Result<f64, TwpaError> {
    if !(k_s > 0.0 && k_i > 0.0) {
        return Err(TwpaError::NonPositiveWavenumber { k_s, k_i });
    }
    Ok((k_s * k_i).sqrt() * spec.i_dc * spec.a_p / (2.0 * spec.i_star * spec.i_star))
}

/// Bloch wavenumber per frequency for a (possibly loaded) line.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    /// Frequency grid (Hz), strictly increasing.
    pub freqs: Vec<f64>,
    /// Bloch wavenumber (rad/m); pinned to the band-edge value inside gaps.
    pub k: Vec<f64>,
    /// True where the frequency falls inside a stopband.
    pub in_gap: Vec<bool>,
}

impl DispersionCurve {
    /// Write `freq_hz,k_rad_per_m,in_gap` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,k_rad_per_m,in_gap\n");
        for i in 0..self.freqs.len() {
            let _ = std::fmt::Write::write_fmt(
                &mut out,
                format_args!("{},{},{}\n", self.freqs[i], self.k[i], self.in_gap[i]),
            );
        }
        out
    }
}

/// Forward gain and phase mismatch over a signal band.
#[derive(Debug, Clone, PartialEq)]
pub struct GainProfile {
    /// Signal frequency grid (Hz).
    pub freqs: Vec<f64>,
    /// Net forward power gain (dB); `None` marks points that could not be
    /// evaluated (e.g. the signal or idler fell in a stopband).
    pub gain_db: Vec<Option<f64>>,
    /// Phase mismatch Δk (rad/m), gap-aligned with `gain_db`.
    pub mismatch: Vec<Option<f64>>,
}

impl GainProfile {
    /// Write `freq_hz,gain_db,mismatch_rad_per_m` rows; unevaluated points
    /// produce empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,gain_db,mismatch_rad_per_m\n");
        for i in 0..self.freqs.len() {
            let g = self.gain_db[i].map(|v| v.to_string()).unwrap_or_default();
            let m = self.mismatch[i].map(|v| v.to_string()).unwrap_or_default();
            let _ = std::fmt::Write::write_fmt(
                &mut out,
                format_args!("{},{},{}\n", self.freqs[i], g, m),
            );
        }
        out
    }
}
