//! `kitamp noise` — fit gain and system noise temperature from a sweep.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use kitamp::noise::{fit_noise, FitFlagKind, NoiseSweep};

use crate::runctx::{to_json_file, Failure, RunContext};
use crate::NoiseArgs;

#[derive(Serialize)]
struct FlaggedRow {
    freq_hz: f64,
    kind: &'static str,
}

/// (freq Hz, attenuation dB) rows applied as a pre-divider to the PSD.
fn read_loss_table(path: &Path) -> Result<Vec<(f64, f64)>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line == "freq_hz,loss_db") {
            continue;
        }
        let (f, d) = line.split_once(',').ok_or_else(|| {
            Failure::input(format!("{}:{}: expected freq_hz,loss_db", path.display(), idx + 1))
        })?;
        let parse = |v: &str| -> Result<f64, Failure> {
            v.trim().parse().map_err(|_| {
                Failure::input(format!("{}:{}: bad number `{v}`", path.display(), idx + 1))
            })
        };
        rows.push((parse(f)?, parse(d)?));
    }
    if rows.is_empty() {
        return Err(Failure::input(format!(
            "{}: empty loss table",
            path.display()
        )));
    }
    if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Failure::input(format!(
            "{}: loss table frequencies must increase",
            path.display()
        )));
    }
    Ok(rows)
}

fn loss_db_at(table: &[(f64, f64)], f: f64) -> f64 {
    if table.len() == 1 {
        return table[0].1;
    }
    let seg = if f <= table[0].0 {
        (table[0], table[1])
    } else if f >= table[table.len() - 1].0 {
        (table[table.len() - 2], table[table.len() - 1])
    } else {
        let hi = table.partition_point(|&(fk, _)| fk < f).max(1);
        (table[hi - 1], table[hi])
    };
    let ((f0, d0), (f1, d1)) = seg;
    d0 + (f - f0) / (f1 - f0) * (d1 - d0)
}

pub fn run(ctx: &RunContext, args: &NoiseArgs) -> Result<(), Failure> {
    let sweep_raw = ctx
        .config
        .require_str("sweep")
        .map_err(|_| Failure::input("missing required key `sweep` (noise sweep CSV path)"))?;
    let psd_unit = ctx
        .config
        .get_str("psd_unit")
        .unwrap_or_else(|| "w_per_hz".to_string());
    let loss_table_cfg = ctx.config.get_str("loss_table");
    ctx.config.finish().map_err(Failure::input)?;

    let sweep_path = ctx.resolve(&sweep_raw);
    let text = std::fs::read_to_string(&sweep_path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", sweep_path.display())))?;
    let (freqs, temps, mut psd) = kitamp::noise::parse_sweep_csv(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", sweep_path.display())))?;

    // Optional dBm/Hz input: S[W/Hz] = 10^((dBm − 30)/10), converted before
    // the positivity checks of the sweep constructor.
    match psd_unit.as_str() {
        "w_per_hz" => {}
        "dbm_per_hz" => {
            for row in &mut psd {
                for v in row.iter_mut() {
                    *v = 10f64.powf((*v - 30.0) / 10.0);
                }
            }
        }
        other => {
            return Err(Failure::input(format!(
                "psd_unit must be w_per_hz or dbm_per_hz, got `{other}`"
            )))
        }
    }
    let mut sweep = NoiseSweep::new(freqs, temps, psd)
        .map_err(|e| Failure::input(format!("{}: {e}", sweep_path.display())))?;

    // Pre-divider: refer the measured PSD past known attenuation (flag wins
    // over the config key).
    let loss_path = args
        .loss_table
        .clone()
        .or_else(|| loss_table_cfg.map(|raw| ctx.resolve(&raw)));
    if let Some(path) = loss_path {
        let table = read_loss_table(&path)?;
        let psd = sweep
            .freqs
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let transmission = 10f64.powf(-loss_db_at(&table, f) / 10.0);
                sweep.psd[i].iter().map(|&v| v / transmission).collect()
            })
            .collect();
        sweep = NoiseSweep::new(sweep.freqs, sweep.temps, psd)
            .map_err(|e| Failure::input(format!("after loss correction: {e}")))?;
    }

    let fit = fit_noise(&sweep).map_err(Failure::compute)?;

    let mut results = Map::new();
    for i in 0..fit.freqs.len() {
        let mut row = Map::new();
        row.insert("gain_db".into(), json_f64(10.0 * fit.gain[i].log10()));
        row.insert("t_sys_k".into(), json_f64(fit.t_sys[i]));
        row.insert("t_sys_stderr_k".into(), json_f64(fit.t_sys_stderr[i]));
        row.insert("photons".into(), json_f64(fit.photons[i]));
        results.insert(fit.freqs[i].to_string(), Value::Object(row));
    }
    let flagged: Vec<FlaggedRow> = fit
        .flags
        .iter()
        .map(|f| FlaggedRow {
            freq_hz: f.freq_hz,
            kind: match f.kind {
                FitFlagKind::NegativeIntercept => "negative_intercept",
            },
        })
        .collect();
    let doc = serde_json::json!({
        "freqs_hz": fit.freqs,
        "results": results,
        "flagged": flagged,
    });

    let emit_csv = args.format.as_deref() != Some("json");
    let emit_json = args.format.as_deref() != Some("csv");
    if emit_csv {
        ctx.write_out("noise_fit.csv", &fit.to_csv())?;
    }
    if emit_json {
        ctx.write_out("noise_fit.json", &to_json_file(&doc))?;
    }
    println!(
        "noise: fitted {} frequencies ({} flagged)",
        fit.freqs.len(),
        fit.flags.len()
    );
    Ok(())
}

fn json_f64(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}
