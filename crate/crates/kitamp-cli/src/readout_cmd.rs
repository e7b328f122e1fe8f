//! `kitamp readout` — score shot sets into fidelity reports, one qubit at a
//! time; per-qubit failures are isolated.

use serde::Serialize;

use kitamp::readout::{
    build_matched_filter, fidelity_from_outcomes, project, FidelityReport, ShotSet, DEFAULT_BINS,
};

use crate::runctx::{to_json_file, Failure, RunContext};

#[derive(Serialize)]
struct QubitOutcome {
    qubit: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct ReadoutSummary {
    qubits: Vec<QubitOutcome>,
}

#[derive(Serialize)]
struct NamedReport {
    qubit: String,
    #[serde(flatten)]
    report: FidelityReport,
}

struct QubitJob {
    id: String,
    shots0: std::path::PathBuf,
    shots1: std::path::PathBuf,
}

fn collect_jobs(ctx: &RunContext) -> Result<Vec<QubitJob>, Failure> {
    let mut jobs = Vec::new();
    // Single-qubit form: shots0 = ..., shots1 = ...
    let flat0 = ctx.config.get_str("shots0");
    let flat1 = ctx.config.get_str("shots1");
    match (flat0, flat1) {
        (Some(a), Some(b)) => jobs.push(QubitJob {
            id: "q".to_string(),
            shots0: ctx.resolve(&a),
            shots1: ctx.resolve(&b),
        }),
        (None, None) => {}
        _ => {
            return Err(Failure::input(
                "shots0 and shots1 must be given together",
            ))
        }
    }
    // Multi-qubit form: qubit.<id>.shots0 / qubit.<id>.shots1
    let mut ids: Vec<String> = ctx
        .config
        .keys_with_prefix("qubit.")
        .iter()
        .filter_map(|k| k.strip_prefix("qubit."))
        .filter_map(|k| k.strip_suffix(".shots0").or_else(|| k.strip_suffix(".shots1")))
        .map(str::to_string)
        .collect();
    ids.sort();
    ids.dedup();
    for id in ids {
        let k0 = format!("qubit.{id}.shots0");
        let k1 = format!("qubit.{id}.shots1");
        let (Some(a), Some(b)) = (ctx.config.get_str(&k0), ctx.config.get_str(&k1)) else {
            return Err(Failure::input(format!(
                "qubit `{id}` needs both {k0} and {k1}"
            )));
        };
        jobs.push(QubitJob {
            id,
            shots0: ctx.resolve(&a),
            shots1: ctx.resolve(&b),
        });
    }
    if jobs.is_empty() {
        return Err(Failure::input(
            "no shot sets configured: provide shots0/shots1 or qubit.<id>.shots0/.shots1",
        ));
    }
    Ok(jobs)
}

fn score_one(job: &QubitJob, n_bins: usize) -> Result<FidelityReport, String> {
    let set0 = ShotSet::read(&job.shots0).map_err(|e| e.to_string())?;
    let set1 = ShotSet::read(&job.shots1).map_err(|e| e.to_string())?;
    if set0.label != 0 || set1.label != 1 {
        return Err(format!(
            "label mismatch: {} carries label {}, {} carries label {}",
            job.shots0.display(),
            set0.label,
            job.shots1.display(),
            set1.label
        ));
    }
    let filter = build_matched_filter(&set0, &set1).map_err(|e| e.to_string())?;
    let out0 = project(&filter, &set0).map_err(|e| e.to_string())?;
    let out1 = project(&filter, &set1).map_err(|e| e.to_string())?;
    fidelity_from_outcomes(&out0, &out1, n_bins).map_err(|e| e.to_string())
}

pub fn run(ctx: &RunContext) -> Result<(), Failure> {
    let n_bins = ctx
        .config
        .get_usize("n_bins")
        .map_err(Failure::input)?
        .unwrap_or(DEFAULT_BINS);
    let jobs = collect_jobs(ctx)?;
    ctx.config.finish().map_err(Failure::input)?;

    let mut outcomes = Vec::new();
    let mut any_failed = false;
    for job in &jobs {
        match score_one(job, n_bins) {
            Ok(report) => {
                let named = NamedReport {
                    qubit: job.id.clone(),
                    report,
                };
                ctx.write_out(&format!("fidelity_{}.json", job.id), &to_json_file(&named))?;
                ctx.write_out(
                    &format!("histogram_{}.csv", job.id),
                    &named.report.histogram.to_csv(),
                )?;
                println!(
                    "readout {}: F = {:.4} (p10 = {:.4}, p01 = {:.4}, threshold {:.4})",
                    job.id,
                    named.report.fidelity,
                    named.report.p10,
                    named.report.p01,
                    named.report.threshold
                );
                outcomes.push(QubitOutcome {
                    qubit: job.id.clone(),
                    status: "ok",
                    fidelity: Some(named.report.fidelity),
                    error: None,
                });
            }
            Err(message) => {
                eprintln!("readout {}: failed: {message}", job.id);
                any_failed = true;
                outcomes.push(QubitOutcome {
                    qubit: job.id.clone(),
                    status: "failed",
                    fidelity: None,
                    error: Some(message),
                });
            }
        }
    }
    ctx.write_out(
        "readout_summary.json",
        &to_json_file(&ReadoutSummary { qubits: outcomes }),
    )?;
    if any_failed {
        return Err(Failure::compute("one or more qubits failed to score"));
    }
    Ok(())
}
