//! Threshold selection and assignment fidelity from projected outcomes.

use serde::Serialize;

use super::ReadoutError;

/// Histogram bins shared by both preparations (reporting only; the fidelity
/// is computed from exact empirical CDFs, never from bins).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// n_bins + 1 edges spanning the pooled outcome range.
    pub edges: Vec<f64>,
    pub counts0: Vec<u64>,
    pub counts1: Vec<u64>,
}

impl Histogram {
    /// CSV: `bin_left,bin_right,count0,count1`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count0,count1\n");
        for i in 0..self.counts0.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.edges[i],
                self.edges[i + 1],
                self.counts0[i],
                self.counts1[i]
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    /// F = 1 − (p10 + p01)/2, exactly.
    pub fidelity: f64,
    /// P(assign 1 | prepared 0): fraction of out0 above threshold.
    pub p10: f64,
    /// P(assign 0 | prepared 1): fraction of out1 at or below threshold.
    pub p01: f64,
    pub threshold: f64,
    pub n_shots0: usize,
    pub n_shots1: usize,
    pub histogram: Histogram,
}

pub const DEFAULT_BINS: usize = 200;

/// Score two outcome sets: the threshold is the leftmost maximizer of
/// |F₀(x) − F₁(x)| over the pooled sample points (the Kolmogorov–Smirnov
/// point), outcomes strictly above it are assigned |1⟩.
pub fn fidelity_from_outcomes(
    out0: &[f64],
    out1: &[f64],
    n_bins: usize,
) -> Result<FidelityReport, ReadoutError> {
    if out0.is_empty() || out1.is_empty() {
        return Err(ReadoutError::InvalidParams(
            "both outcome sets must be non-empty".to_string(),
        ));
    }
    if n_bins < 2 {
        return Err(ReadoutError::InvalidParams(
            "n_bins must be at least 2".to_string(),
        ));
    }
    if out0.iter().chain(out1).any(|x| !x.is_finite()) {
        return Err(ReadoutError::InvalidParams(
            "outcomes must be finite".to_string(),
        ));
    }

    let mut sorted0 = out0.to_vec();
    let mut sorted1 = out1.to_vec();
    sorted0.sort_by(f64::total_cmp);
    sorted1.sort_by(f64::total_cmp);
    let n0 = sorted0.len() as f64;
    let n1 = sorted1.len() as f64;

    // Merge-scan the pooled sample points, tracking the CDF gap after each
    // distinct value. Strict inequality keeps the leftmost tie.
    let mut i = 0usize;
    let mut j = 0usize;
    let mut best_gap = -1.0f64;
    let mut threshold = sorted0[0].min(sorted1[0]);
    while i < sorted0.len() || j < sorted1.len() {
        let x = match (sorted0.get(i), sorted1.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < sorted0.len() && sorted0[i] <= x {
            i += 1;
        }
        while j < sorted1.len() && sorted1[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / n0 - j as f64 / n1).abs();
        if gap > best_gap {
            best_gap = gap;
            threshold = x;
        }
    }

    let above0 = sorted0.partition_point(|&v| v <= threshold);
    let above1 = sorted1.partition_point(|&v| v <= threshold);
    let p10 = (sorted0.len() - above0) as f64 / n0;
    let p01 = above1 as f64 / n1;
    let fidelity = 1.0 - 0.5 * (p10 + p01);

    Ok(FidelityReport {
        fidelity,
        p10,
        p01,
        threshold,
        n_shots0: sorted0.len(),
        n_shots1: sorted1.len(),
        histogram: build_histogram(&sorted0, &sorted1, n_bins),
    })
}

fn build_histogram(sorted0: &[f64], sorted1: &[f64], n_bins: usize) -> Histogram {
    let lo = sorted0[0].min(sorted1[0]);
    let hi = sorted0[sorted0.len() - 1].max(sorted1[sorted1.len() - 1]);
    // Degenerate pooled range still gets finite-width cosmetic bins.
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|b| lo + b as f64 * width).collect();
    let fill = |sorted: &[f64]| {
        let mut counts = vec![0u64; n_bins];
        for &x in sorted {
            let b = (((x - lo) / width) as usize).min(n_bins - 1);
            counts[b] += 1;
        }
        counts
    };
    Histogram {
        edges,
        counts0: fill(sorted0),
        counts1: fill(sorted1),
    }
}
