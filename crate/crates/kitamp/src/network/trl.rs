//! Thru-reflect-line calibration of the 8-term error model.
//!
//! With measured T-matrices M_t = A·B (thru) and M_l = A·L·B (line,
//! L = diag(e^{γl}, e^{−γl})), the pencil P = M_l·M_t⁻¹ = A·L·A⁻¹ hands the
//! columns of A to a 2×2 eigenvalue problem, and Q = M_t⁻¹·M_l = B⁻¹·L·B
//! does the same for the rows of B. The reflect standard (one unknown Γ seen
//! from both reference planes) fixes the remaining column/row scales up to
//! the usual single normalization, pinned here by A·T₂₂ = 1.
//!
//! `line_delay_estimate` assigns the eigenvalue branch (which root is
//! e^{+γl}) and `reflect_sign_estimate` disambiguates the sign of Γ, so the
//! solver never picks a wrong root silently. An optional bounded
//! Levenberg-style refinement polishes all terms against the raw standard
//! measurements; if it fails the closed-form model is returned with a
//! warning attached.

use num_complex::Complex64;
use serde::Serialize;

use super::{s_to_t, ErrorModel, Mat2, NetworkError, TwoPortNetwork};
use crate::par;

/// Measured thru/reflect/line standards on one frequency grid.
#[derive(Debug, Clone)]
pub struct CalStandards {
    pub thru: TwoPortNetwork,
    /// Reflection of the one-port standard seen from the input plane.
    pub reflect_port1: Vec<Complex64>,
    /// ... and from the output plane.
    pub reflect_port2: Vec<Complex64>,
    pub line: TwoPortNetwork,
    /// Approximate line delay (s) relative to the thru, for branch selection.
    pub line_delay_estimate: f64,
    /// +1 for an open-like reflect, −1 for a short-like reflect.
    pub reflect_sign_estimate: f64,
}

impl CalStandards {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.thru.freqs != self.line.freqs {
            return Err(NetworkError::GridMismatch("thru vs line".to_string()));
        }
        if self.reflect_port1.len() != self.thru.len()
            || self.reflect_port2.len() != self.thru.len()
        {
            return Err(NetworkError::GridMismatch(
                "reflect vs thru/line".to_string(),
            ));
        }
        if self.reflect_sign_estimate == 0.0 || !self.line_delay_estimate.is_finite() {
            return Err(NetworkError::Trl(
                "reflect_sign_estimate must be ±1 and line_delay_estimate finite".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrlOptions {
    /// Run the bounded least-squares refinement after the closed form.
    pub refine: bool,
    /// Hard validity limit: line phase within this margin of 0/π (rad) is an
    /// error.
    pub phase_margin_error: f64,
    /// Soft limit: a warning is attached below this margin.
    pub phase_margin_warn: f64,
    /// Bound on every refined term: |Re|, |Im| ≤ bound.
    pub bound: f64,
    pub max_iterations: usize,
}

impl Default for TrlOptions {
    fn default() -> Self {
        Self {
            refine: true,
            phase_margin_error: 0.01,
            phase_margin_warn: 0.35, // ≈ 20°, the classic TRL guideline
            bound: 10.0,
            max_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrlWarning {
    pub freq_hz: f64,
    pub message: String,
}

/// Solved error model plus per-frequency diagnostics.
#[derive(Debug, Clone)]
pub struct TrlSolution {
    pub model: ErrorModel,
    /// Propagation factor γ·l of the line standard per frequency.
    pub gamma_l: Vec<Complex64>,
    /// Recovered reflect coefficient per frequency.
    pub reflect: Vec<Complex64>,
    /// RMS residual of the modeled vs measured standards per frequency.
    pub residual: Vec<f64>,
    pub warnings: Vec<TrlWarning>,
}

type EigPair = (Complex64, (Complex64, Complex64));

/// Eigenvalue/eigenvector pairs of a 2×2, (tr ± √(tr² − 4·det))/2 order.
fn eig2(p: &Mat2) -> (EigPair, EigPair) {
    let tr = p.m[0][0] + p.m[1][1];
    let disc = (tr * tr - 4.0 * p.det()).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    ((l1, eigvec(p, l1)), (l2, eigvec(p, l2)))
}

fn eigvec(p: &Mat2, lambda: Complex64) -> (Complex64, Complex64) {
    // (P − λI)v = 0: v ∝ (p12, λ − p11) or (λ − p22, p21); take the better
    // conditioned form.
    let c1 = (p.m[0][1], lambda - p.m[0][0]);
    let c2 = (lambda - p.m[1][1], p.m[1][0]);
    let n1 = c1.0.norm_sqr() + c1.1.norm_sqr();
    let n2 = c2.0.norm_sqr() + c2.1.norm_sqr();
    let v = if n1 >= n2 { c1 } else { c2 };
    let norm = (v.0.norm_sqr() + v.1.norm_sqr()).sqrt();
    (v.0 / norm, v.1 / norm)
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

struct FreqProblem {
    m_thru: Mat2,
    m_line: Mat2,
    r1: Complex64,
    r2: Complex64,
}

struct FreqSolution {
    a: Mat2,
    b: Mat2,
    gamma_l: Complex64,
    reflect: Complex64,
    residual: f64,
    warnings: Vec<String>,
}

/// Residuals of modeled vs measured standards: thru (8), line (8),
/// reflect seen from each side (4).
fn standards_residual(
    a: &Mat2,
    b: &Mat2,
    gamma_l: Complex64,
    reflect: Complex64,
    prob: &FreqProblem,
    out: &mut [f64; 20],
) {
    let zero = Complex64::new(0.0, 0.0);
    let line_t = Mat2::new([[gamma_l.exp(), zero], [zero, (-gamma_l).exp()]]);
    let t_hat = a.mul(b);
    let l_hat = a.mul(&line_t).mul(b);
    let mut idx = 0;
    for (hat, meas) in [(&t_hat, &prob.m_thru), (&l_hat, &prob.m_line)] {
        for r in 0..2 {
            for c in 0..2 {
                let d = hat.m[r][c] - meas.m[r][c];
                out[idx] = d.re;
                out[idx + 1] = d.im;
                idx += 2;
            }
        }
    }
    let r1_hat = (a.m[1][0] + a.m[1][1] * reflect) / (a.m[0][0] + a.m[0][1] * reflect);
    let r2_hat = (reflect * b.m[1][1] - b.m[0][1]) / (b.m[0][0] - reflect * b.m[1][0]);
    let d1 = r1_hat - prob.r1;
    let d2 = r2_hat - prob.r2;
    out[16] = d1.re;
    out[17] = d1.im;
    out[18] = d2.re;
    out[19] = d2.im;
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn solve_one(
    f: f64,
    prob: &FreqProblem,
    opts: &TrlOptions,
    tau_est: f64,
    sign_est: f64,
) -> Result<FreqSolution, NetworkError> {
    let mut warnings = Vec::new();
    let m_thru_inv = prob
        .m_thru
        .inv()
        .ok_or_else(|| NetworkError::Trl(format!("singular thru measurement at {f:.6e} Hz")))?;
    let pencil_a = prob.m_line.mul(&m_thru_inv);
    let pencil_b = m_thru_inv.mul(&prob.m_line);

    // Branch assignment: e^{+γl} should sit near phase +ω·τ_est.
    let expected = 2.0 * std::f64::consts::PI * f * tau_est;
    let (pair_plus, pair_minus) = eig2(&pencil_a);
    let ((l1, v1), (l2, v2)) =
        if circ_dist(pair_plus.0.arg(), expected) <= circ_dist(pair_minus.0.arg(), expected) {
            (pair_plus, pair_minus)
        } else {
            (pair_minus, pair_plus)
        };

    // Classical validity: line phase strictly inside (0, π) mod π.
    let phase = l1.arg().rem_euclid(std::f64::consts::PI);
    let margin = phase.min(std::f64::consts::PI - phase);
    if margin < opts.phase_margin_error {
        return Err(NetworkError::Trl(format!(
            "line phase {:.4} rad at {f:.6e} Hz is within {margin:.4} rad of 0/π; \
             TRL is singular there",
            l1.arg()
        )));
    }
    if margin < opts.phase_margin_warn {
        warnings.push(format!(
            "line phase margin {margin:.3} rad to 0/π is below the {:.2} rad guideline",
            opts.phase_margin_warn
        ));
    }

    // γl on the Riemann branch nearest the delay estimate.
    let k = ((expected - l1.arg()) / (2.0 * std::f64::consts::PI)).round();
    let gamma_l = Complex64::new(
        l1.norm().ln(),
        l1.arg() + 2.0 * std::f64::consts::PI * k,
    );

    // Rows of B from the transposed pencil, aligned to the same eigenvalues.
    let pencil_bt = Mat2::new([
        [pencil_b.m[0][0], pencil_b.m[1][0]],
        [pencil_b.m[0][1], pencil_b.m[1][1]],
    ]);
    let (bp, bm) = eig2(&pencil_bt);
    let ((_, w1), (_, w2)) = if (bp.0 - l1).norm() <= (bp.0 - l2).norm() {
        (bp, bm)
    } else {
        (bm, bp)
    };

    let a_hat = Mat2::new([[v1.0, v2.0], [v1.1, v2.1]]);
    let w_hat = Mat2::new([[w1.0, w1.1], [w2.0, w2.1]]);
    let a_hat_inv = a_hat
        .inv()
        .ok_or_else(|| NetworkError::Trl(format!("degenerate eigenvectors at {f:.6e} Hz")))?;
    let w_hat_inv = w_hat
        .inv()
        .ok_or_else(|| NetworkError::Trl(format!("degenerate eigenvectors at {f:.6e} Hz")))?;
    let d = a_hat_inv.mul(&prob.m_thru).mul(&w_hat_inv);
    let (u, w) = (d.m[0][0], d.m[1][1]);
    let off = (d.m[0][1].norm() + d.m[1][0].norm()) / (u.norm() + w.norm()).max(1e-300);
    if off > 1e-3 {
        warnings.push(format!(
            "thru does not diagonalize cleanly (off-diagonal ratio {off:.2e})"
        ));
    }

    // Reflect: x = ρΓ from port 1, y = σΓ from port 2, Γ² = x·y·u/w.
    let x = (v1.1 - prob.r1 * v1.0) / (prob.r1 * v2.0 - v2.1);
    let y = (w1.1 + prob.r2 * w1.0) / (w2.1 + prob.r2 * w2.0);
    let gamma_sq = x * y * u / w;
    let mut reflect = gamma_sq.sqrt();
    if (reflect - Complex64::new(sign_est, 0.0)).norm()
        > (-reflect - Complex64::new(sign_est, 0.0)).norm()
    {
        reflect = -reflect;
    }
    let rho = x / reflect;

    // Gauge A·T₂₂ = β·v2.y = 1; fall back to α = 1 if that is singular.
    let natural_gauge = v2.1.norm() > 1e-12;
    let (alpha, beta) = if natural_gauge {
        let beta = Complex64::new(1.0, 0.0) / v2.1;
        (beta / rho, beta)
    } else {
        warnings.push("gauge A·T22 = 1 is singular here; pinned A·T11 instead".to_string());
        let alpha = Complex64::new(1.0, 0.0) / v1.0;
        (alpha, alpha * rho)
    };
    let gamma_scale = u / alpha;
    let delta_scale = w / beta;

    let a = Mat2::new([[alpha * v1.0, beta * v2.0], [alpha * v1.1, beta * v2.1]]);
    let b = Mat2::new([
        [gamma_scale * w1.0, gamma_scale * w1.1],
        [delta_scale * w2.0, delta_scale * w2.1],
    ]);

    let mut res = [0.0; 20];
    standards_residual(&a, &b, gamma_l, reflect, prob, &mut res);
    let mut best = FreqSolution {
        a,
        b,
        gamma_l,
        reflect,
        residual: rms(&res),
        warnings,
    };

    // The refiner works in the A·T22 = 1 gauge, so skip it on the fallback.
    if opts.refine && natural_gauge {
        match refine(&best, prob, opts) {
            Some(refined) if refined.residual <= best.residual => {
                best.a = refined.a;
                best.b = refined.b;
                best.gamma_l = refined.gamma_l;
                best.reflect = refined.reflect;
                best.residual = refined.residual;
            }
            Some(_) => {}
            None => best
                .warnings
                .push("refinement did not converge; closed-form solution returned".to_string()),
        }
    }
    Ok(best)
}

struct Refined {
    a: Mat2,
    b: Mat2,
    gamma_l: Complex64,
    reflect: Complex64,
    residual: f64,
}

/// Free parameters: A (a11, a12, a21; a22 ≡ 1), B (4 terms), Γ, γl.
fn pack(a: &Mat2, b: &Mat2, reflect: Complex64, gamma_l: Complex64) -> [f64; 18] {
    let cs = [
        a.m[0][0], a.m[0][1], a.m[1][0], b.m[0][0], b.m[0][1], b.m[1][0], b.m[1][1], reflect,
        gamma_l,
    ];
    let mut out = [0.0; 18];
    for (i, c) in cs.iter().enumerate() {
        out[2 * i] = c.re;
        out[2 * i + 1] = c.im;
    }
    out
}

fn unpack(p: &[f64; 18]) -> (Mat2, Mat2, Complex64, Complex64) {
    let c = |i: usize| Complex64::new(p[2 * i], p[2 * i + 1]);
    let a = Mat2::new([[c(0), c(1)], [c(2), Complex64::new(1.0, 0.0)]]);
    let b = Mat2::new([[c(3), c(4)], [c(5), c(6)]]);
    (a, b, c(7), c(8))
}

/// Gaussian elimination with partial pivoting.
fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let (pivot, max) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if max < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

/// Projected Levenberg-style polish of all terms under |term| ≤ bound.
/// Returns `None` only when iterations run out while the cost is still
/// falling quickly, or the numerics break down.
fn refine(start: &FreqSolution, prob: &FreqProblem, opts: &TrlOptions) -> Option<Refined> {
    let eval = |p: &[f64; 18]| -> [f64; 20] {
        let (a, b, reflect, gamma_l) = unpack(p);
        let mut r = [0.0; 20];
        standards_residual(&a, &b, gamma_l, reflect, prob, &mut r);
        r
    };
    let clamp = |p: &mut [f64; 18]| {
        for v in p.iter_mut() {
            *v = v.clamp(-opts.bound, opts.bound);
        }
    };

    let mut p = pack(&start.a, &start.b, start.reflect, start.gamma_l);
    clamp(&mut p);
    let mut residual = eval(&p);
    if residual.iter().any(|r| !r.is_finite()) {
        return None;
    }
    let mut cost: f64 = residual.iter().map(|r| r * r).sum();
    let mut lambda = 1e-6;
    let mut converged = false;

    for _ in 0..opts.max_iterations {
        if cost < 1e-28 {
            converged = true;
            break;
        }
        let mut jac = [[0.0; 18]; 20];
        for j in 0..18 {
            let h = 1e-7 * p[j].abs().max(1e-4);
            let mut pj = p;
            pj[j] += h;
            let rj = eval(&pj);
            for i in 0..20 {
                jac[i][j] = (rj[i] - residual[i]) / h;
            }
        }
        let mut stepped = false;
        for _ in 0..12 {
            let mut m = vec![vec![0.0; 18]; 18];
            let mut rhs = vec![0.0; 18];
            for a in 0..18 {
                for b in 0..18 {
                    m[a][b] = (0..20).map(|i| jac[i][a] * jac[i][b]).sum();
                }
                m[a][a] *= 1.0 + lambda;
                rhs[a] = -(0..20).map(|i| jac[i][a] * residual[i]).sum::<f64>();
            }
            let Some(step) = solve_linear(m, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p;
            for j in 0..18 {
                trial[j] += step[j];
            }
            clamp(&mut trial);
            let trial_res = eval(&trial);
            if trial_res.iter().any(|r| !r.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let trial_cost: f64 = trial_res.iter().map(|r| r * r).sum();
            if trial_cost < cost {
                let gain = cost - trial_cost;
                p = trial;
                residual = trial_res;
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                stepped = true;
                if gain <= 1e-12 * (cost + 1e-30) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // No descent direction improves the cost: at the (possibly
            // bound-constrained) minimum.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return None;
    }
    let (a, b, reflect, gamma_l) = unpack(&p);
    Some(Refined {
        a,
        b,
        gamma_l,
        reflect,
        residual: rms(&residual),
    })
}

/// Solve the 8-term error model from TRL standards.
pub fn trl_solve(standards: &CalStandards, opts: &TrlOptions) -> Result<TrlSolution, NetworkError> {
    standards.validate()?;
    let freqs = standards.thru.freqs.clone();
    let t_thru = s_to_t(&standards.thru)?;
    let t_line = s_to_t(&standards.line)?;

    let problems: Vec<FreqProblem> = (0..freqs.len())
        .map(|i| FreqProblem {
            m_thru: t_thru[i],
            m_line: t_line[i],
            r1: standards.reflect_port1[i],
            r2: standards.reflect_port2[i],
        })
        .collect();

    let tau = standards.line_delay_estimate;
    let sign = standards.reflect_sign_estimate.signum();
    let solved: Vec<Result<FreqSolution, NetworkError>> =
        par::map_range(freqs.len(), |i| solve_one(freqs[i], &problems[i], opts, tau, sign));

    let mut a = Vec::with_capacity(freqs.len());
    let mut b = Vec::with_capacity(freqs.len());
    let mut gamma_l = Vec::with_capacity(freqs.len());
    let mut reflect = Vec::with_capacity(freqs.len());
    let mut residual = Vec::with_capacity(freqs.len());
    let mut warnings = Vec::new();
    for (i, res) in solved.into_iter().enumerate() {
        let sol = res?;
        a.push(sol.a);
        b.push(sol.b);
        gamma_l.push(sol.gamma_l);
        reflect.push(sol.reflect);
        residual.push(sol.residual);
        for message in sol.warnings {
            warnings.push(TrlWarning {
                freq_hz: freqs[i],
                message,
            });
        }
    }
    Ok(TrlSolution {
        model: ErrorModel::new(freqs, a, b)?,
        gamma_l,
        reflect,
        residual,
        warnings,
    })
}
