//! Matched-filter construction and projection.

use num_complex::Complex64;

use super::{ReadoutError, ShotSet};
use crate::par;

/// Integration weights plus the rotation/offset that place the decision
/// boundary near zero on the real axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilter {
    /// Unit-norm complex weights, one per time sample.
    pub weights: Vec<Complex64>,
    /// Phase applied to the raw conj(Δmean)/var template (rad).
    pub rotation: f64,
    /// Midpoint of the projected class means.
    pub offset: f64,
}

fn mean_trace(set: &ShotSet) -> Vec<Complex64> {
    let m = set.record_len();
    let n = set.n_shots() as f64;
    let mut mean = vec![Complex64::new(0.0, 0.0); m];
    for rec in &set.records {
        for (t, &x) in rec.iter().enumerate() {
            mean[t] += x;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    mean
}

/// Weights ∝ conj(mean₁ − mean₀)/var with the pooled per-sample variance
/// floored at 1e-12 of its maximum, rotated so the projected class means
/// split along the real axis with mean₁ > mean₀.
pub fn build_matched_filter(
    set0: &ShotSet,
    set1: &ShotSet,
) -> Result<MatchedFilter, ReadoutError> {
    let m = set0.record_len();
    if set1.record_len() != m {
        return Err(ReadoutError::LengthMismatch {
            record: set1.record_len(),
            filter: m,
        });
    }
    let mean0 = mean_trace(set0);
    let mean1 = mean_trace(set1);

    // Pooled per-sample variance.
    let mut var = vec![0.0f64; m];
    for (set, mean) in [(set0, &mean0), (set1, &mean1)] {
        for rec in &set.records {
            for (t, &x) in rec.iter().enumerate() {
                var[t] += (x - mean[t]).norm_sqr();
            }
        }
    }
    let dof = (set0.n_shots() + set1.n_shots()).saturating_sub(2).max(1) as f64;
    var.iter_mut().for_each(|v| *v /= dof);
    let var_max = var.iter().cloned().fold(0.0f64, f64::max);
    let floor = if var_max > 0.0 { 1e-12 * var_max } else { 1.0 };
    let var_floored: Vec<f64> = var.iter().map(|&v| v.max(floor)).collect();

    let diff: Vec<Complex64> = (0..m).map(|t| mean1[t] - mean0[t]).collect();
    // Fisher-style separation; zero means the traces are indistinguishable.
    let separation: f64 = (0..m).map(|t| diff[t].norm_sqr() / var_floored[t]).sum();
    if separation <= 1e-18 * m as f64 {
        return Err(ReadoutError::DegenerateFilter);
    }

    let raw: Vec<Complex64> = (0..m).map(|t| diff[t].conj() / var_floored[t]).collect();
    // Projected mean difference for weights w = e^{iρ}·raw is
    // e^{−iρ}·Σ conj(raw)·diff; pick ρ so it is real and positive.
    let s: Complex64 = (0..m).map(|t| raw[t].conj() * diff[t]).sum();
    let rotation = s.arg();
    let phase = Complex64::from_polar(1.0, rotation);
    let norm = raw.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    let weights: Vec<Complex64> = raw.iter().map(|&w| w * phase / norm).collect();

    let project_mean = |mean: &[Complex64]| -> f64 {
        (0..m)
            .map(|t| (weights[t].conj() * mean[t]).re)
            .sum::<f64>()
    };
    let mu0 = project_mean(&mean0);
    let mu1 = project_mean(&mean1);
    Ok(MatchedFilter {
        weights,
        rotation,
        offset: 0.5 * (mu0 + mu1),
    })
}

/// outcome_n = Re[Σ_t weights(t)*·record_n(t)] − offset.
pub fn project(filter: &MatchedFilter, set: &ShotSet) -> Result<Vec<f64>, ReadoutError> {
    if set.record_len() != filter.weights.len() {
        return Err(ReadoutError::LengthMismatch {
            record: set.record_len(),
            filter: filter.weights.len(),
        });
    }
    let weights = &filter.weights;
    let offset = filter.offset;
    Ok(par::map_range(set.n_shots(), |n| {
        let rec = &set.records[n];
        let acc: f64 = rec
            .iter()
            .zip(weights)
            .map(|(&x, &w)| (w.conj() * x).re)
            .sum();
        acc - offset
    }))
}
