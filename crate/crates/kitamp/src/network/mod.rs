//! Two-port S-parameter networks, cascading, and TRL calibration.
//!
//! The wave-cascading (T) convention used throughout: with port-1 waves
//! (a₁ incident, b₁ reflected) and port-2 waves (a₂ incident, b₂ emerging),
//!
//! ```text
//! [a₁]       [b₂]            1   [ 1   −S₂₂]
//! [b₁] = T · [a₂],    T = ─────· [S₁₁  −ΔS ],   ΔS = S₁₁S₂₂ − S₁₂S₂₁
//!                          S₂₁
//! ```
//!
//! so `cascade(a, b)` — signal traversing `a` then `b` — is the plain matrix
//! product `T_a·T_b`, and de-embedding an error model (A, B) bracketing a
//! device is `T_dut = A⁻¹·T_meas·B⁻¹`.

mod touchstone;
mod trl;

pub use touchstone::{read_touchstone, write_touchstone, TouchstoneError};
pub use trl::{trl_solve, CalStandards, TrlOptions, TrlSolution, TrlWarning};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("frequency grid must be non-empty, finite and strictly increasing")]
    BadGrid,
    #[error("S-parameter entries must be finite")]
    NonFinite,
    #[error("frequency grids differ ({0})")]
    GridMismatch(String),
    #[error("singular S→T conversion: |S21| = {0:.3e} at {1:.6e} Hz")]
    SingularConversion(f64, f64),
    #[error("singular error box at {0:.6e} Hz (|det| = {1:.3e})")]
    SingularErrorBox(f64, f64),
    #[error("network is not passive: max singular value {0:.6} at {1:.6e} Hz")]
    NotPassive(f64, f64),
    #[error("TRL: {0}")]
    Trl(String),
}

/// 2×2 complex matrix with just enough algebra for cascading work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[Complex64; 2]; 2],
}

impl Mat2 {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::new([[one, zero], [zero, one]])
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &rhs.m;
        Mat2::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn inv(&self) -> Option<Mat2> {
        let det = self.det();
        if det.norm() < 1e-300 {
            return None;
        }
        Some(Mat2::new([
            [self.m[1][1] / det, -self.m[0][1] / det],
            [-self.m[1][0] / det, self.m[0][0] / det],
        ]))
    }

    pub fn scale(&self, c: Complex64) -> Mat2 {
        Mat2::new([
            [self.m[0][0] * c, self.m[0][1] * c],
            [self.m[1][0] * c, self.m[1][1] * c],
        ])
    }

    /// Largest singular value (2-norm), from the eigenvalues of MᴴM.
    pub fn max_singular_value(&self) -> f64 {
        let a = self.m[0][0];
        let b = self.m[0][1];
        let c = self.m[1][0];
        let d = self.m[1][1];
        // Hermitian MᴴM = [[p, q], [q*, r]]
        let p = a.norm_sqr() + c.norm_sqr();
        let r = b.norm_sqr() + d.norm_sqr();
        let q = a.conj() * b + c.conj() * d;
        let tr = p + r;
        let disc = ((p - r) * (p - r) + 4.0 * q.norm_sqr()).max(0.0).sqrt();
        (0.5 * (tr + disc)).max(0.0).sqrt()
    }
}

/// Per-frequency 2×2 scattering matrix, entries indexed s[row][col].
pub type SMatrix = [[Complex64; 2]; 2];

/// Complex 2×2 scattering data on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortNetwork {
    /// Frequency grid (Hz), strictly increasing.
    pub freqs: Vec<f64>,
    /// Scattering matrices, one per frequency.
    pub s: Vec<SMatrix>,
    /// Reference impedance (Ω).
    pub ref_impedance: f64,
}

impl TwoPortNetwork {
    pub fn new(freqs: Vec<f64>, s: Vec<SMatrix>, ref_impedance: f64) -> Result<Self, NetworkError> {
        if freqs.is_empty()
            || freqs.len() != s.len()
            || freqs.iter().any(|f| !f.is_finite())
            || freqs.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(NetworkError::BadGrid);
        }
        if s.iter().flatten().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(NetworkError::NonFinite);
        }
        Ok(Self {
            freqs,
            s,
            ref_impedance,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Enforce passivity: largest singular value ≤ 1 + 1e-6 everywhere.
    /// Only called when the caller claims the network is passive.
    pub fn verify_passive(&self) -> Result<(), NetworkError> {
        for (i, s) in self.s.iter().enumerate() {
            let sv = Mat2::new(*s).max_singular_value();
            if sv > 1.0 + 1e-6 {
                return Err(NetworkError::NotPassive(sv, self.freqs[i]));
            }
        }
        Ok(())
    }

    fn check_same_grid(&self, other: &TwoPortNetwork, what: &str) -> Result<(), NetworkError> {
        if self.freqs != other.freqs {
            return Err(NetworkError::GridMismatch(what.to_string()));
        }
        Ok(())
    }
}

/// S → T per frequency. Fails where |S21| < 1e-15.
pub fn s_to_t(net: &TwoPortNetwork) -> Result<Vec<Mat2>, NetworkError> {
    net.freqs
        .iter()
        .zip(&net.s)
        .map(|(&f, s)| s_matrix_to_t(s).ok_or(NetworkError::SingularConversion(s[1][0].norm(), f)))
        .collect()
}

pub(crate) fn s_matrix_to_t(s: &SMatrix) -> Option<Mat2> {
    let s21 = s[1][0];
    if s21.norm() < 1e-15 {
        return None;
    }
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    Some(Mat2::new([
        [Complex64::new(1.0, 0.0) / s21, -s[1][1] / s21],
        [s[0][0] / s21, -det / s21],
    ]))
}

pub(crate) fn t_matrix_to_s(t: &Mat2) -> SMatrix {
    let t11 = t.m[0][0];
    let det = t.det();
    [
        [t.m[1][0] / t11, det / t11],
        [Complex64::new(1.0, 0.0) / t11, -t.m[0][1] / t11],
    ]
}

/// T → S on an explicit grid.
pub fn t_to_s(freqs: &[f64], t: &[Mat2], ref_impedance: f64) -> Result<TwoPortNetwork, NetworkError> {
    let s = t.iter().map(t_matrix_to_s).collect();
    TwoPortNetwork::new(freqs.to_vec(), s, ref_impedance)
}

/// Cascade two networks (signal traverses `a`, then `b`).
pub fn cascade(a: &TwoPortNetwork, b: &TwoPortNetwork) -> Result<TwoPortNetwork, NetworkError> {
    a.check_same_grid(b, "cascade operands")?;
    let ta = s_to_t(a)?;
    let tb = s_to_t(b)?;
    let s = ta
        .iter()
        .zip(&tb)
        .map(|(x, y)| t_matrix_to_s(&x.mul(y)))
        .collect();
    TwoPortNetwork::new(a.freqs.clone(), s, a.ref_impedance)
}

/// The 8-term error model: input box A and output box B as T-matrices
/// bracketing the device under test, up to the standard unresolvable
/// normalization (fixed here by A·T₂₂ = 1 at solve time).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub freqs: Vec<f64>,
    pub a: Vec<Mat2>,
    pub b: Vec<Mat2>,
}

impl ErrorModel {
    pub fn new(freqs: Vec<f64>, a: Vec<Mat2>, b: Vec<Mat2>) -> Result<Self, NetworkError> {
        if freqs.is_empty() || freqs.len() != a.len() || freqs.len() != b.len() {
            return Err(NetworkError::BadGrid);
        }
        for i in 0..freqs.len() {
            for m in [&a[i], &b[i]] {
                let det = m.det().norm();
                if det <= 1e-12 {
                    return Err(NetworkError::SingularErrorBox(freqs[i], det));
                }
            }
        }
        Ok(Self { freqs, a, b })
    }

    /// CSV with header `freq_hz,a11_re,a11_im,...,b22_re,b22_im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "freq_hz,a11_re,a11_im,a12_re,a12_im,a21_re,a21_im,a22_re,a22_im,\
             b11_re,b11_im,b12_re,b12_im,b21_re,b21_im,b22_re,b22_im\n",
        );
        for i in 0..self.freqs.len() {
            out.push_str(&self.freqs[i].to_string());
            for m in [&self.a[i], &self.b[i]] {
                for row in 0..2 {
                    for col in 0..2 {
                        let c = m.m[row][col];
                        out.push(',');
                        out.push_str(&c.re.to_string());
                        out.push(',');
                        out.push_str(&c.im.to_string());
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Strip the error boxes from a measurement: T_dut = A⁻¹·T_meas·B⁻¹.
pub fn deembed(model: &ErrorModel, measured: &TwoPortNetwork) -> Result<TwoPortNetwork, NetworkError> {
    if model.freqs != measured.freqs {
        return Err(NetworkError::GridMismatch(
            "error model vs measurement".to_string(),
        ));
    }
    let t_meas = s_to_t(measured)?;
    let mut s = Vec::with_capacity(measured.len());
    for i in 0..measured.len() {
        let a_inv = model.a[i]
            .inv()
            .ok_or(NetworkError::SingularErrorBox(model.freqs[i], 0.0))?;
        let b_inv = model.b[i]
            .inv()
            .ok_or(NetworkError::SingularErrorBox(model.freqs[i], 0.0))?;
        let t_dut = a_inv.mul(&t_meas[i]).mul(&b_inv);
        s.push(t_matrix_to_s(&t_dut));
    }
    TwoPortNetwork::new(measured.freqs.clone(), s, measured.ref_impedance)
}

/// Embed a DUT between the error boxes (the forward model of `deembed`).
pub fn embed(model: &ErrorModel, dut: &TwoPortNetwork) -> Result<TwoPortNetwork, NetworkError> {
    if model.freqs != dut.freqs {
        return Err(NetworkError::GridMismatch("error model vs DUT".to_string()));
    }
    let t_dut = s_to_t(dut)?;
    let s = (0..dut.len())
        .map(|i| t_matrix_to_s(&model.a[i].mul(&t_dut[i]).mul(&model.b[i])))
        .collect();
    TwoPortNetwork::new(dut.freqs.clone(), s, dut.ref_impedance)
}
