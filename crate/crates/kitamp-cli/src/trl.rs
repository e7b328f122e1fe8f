//! `kitamp trl` — solve the error model from standards and de-embed a DUT.

use serde::Serialize;

use kitamp::network::{
    deembed, read_touchstone, trl_solve, write_touchstone, CalStandards, TrlOptions, TrlWarning,
    TwoPortNetwork,
};

use crate::runctx::{to_json_file, Failure, RunContext};

#[derive(Serialize)]
struct TrlSummary {
    n_freqs: usize,
    residual_rms: f64,
    residual_max: f64,
    refined: bool,
    n_warnings: usize,
    warnings: Vec<TrlWarning>,
}

fn load_net(ctx: &RunContext, key: &str) -> Result<(TwoPortNetwork, String), Failure> {
    let raw = ctx
        .config
        .get_str(key)
        .ok_or_else(|| Failure::input(format!("missing required key `{key}` (a .s2p path)")))?;
    let path = ctx.resolve(&raw);
    let net = read_touchstone(&path).map_err(Failure::input)?;
    Ok((net, path.display().to_string()))
}

pub fn run(ctx: &RunContext) -> Result<(), Failure> {
    let (thru, thru_name) = load_net(ctx, "thru")?;
    let (reflect, reflect_name) = load_net(ctx, "reflect")?;
    let (line, line_name) = load_net(ctx, "line")?;
    let (dut, dut_name) = load_net(ctx, "dut")?;
    let line_delay = ctx
        .config
        .get_f64("line_delay_estimate")
        .map_err(Failure::input)?
        .ok_or_else(|| Failure::input("missing required key `line_delay_estimate` (seconds)"))?;
    let reflect_sign = ctx
        .config
        .get_f64("reflect_sign")
        .map_err(Failure::input)?
        .unwrap_or(1.0);
    let refine = ctx
        .config
        .get_bool("refine")
        .map_err(Failure::input)?
        .unwrap_or(true);
    ctx.config.finish().map_err(Failure::input)?;

    // Exact grid agreement across all four files is required; name the
    // offending pair.
    for (name, net) in [
        (&reflect_name, &reflect),
        (&line_name, &line),
        (&dut_name, &dut),
    ] {
        if net.freqs != thru.freqs {
            return Err(Failure::input(format!(
                "frequency grids differ between {thru_name} and {name}"
            )));
        }
    }

    // The reflect standard rides in an .s2p: S11 = seen from port 1,
    // S22 = seen from port 2.
    let standards = CalStandards {
        reflect_port1: reflect.s.iter().map(|s| s[0][0]).collect(),
        reflect_port2: reflect.s.iter().map(|s| s[1][1]).collect(),
        thru,
        line,
        line_delay_estimate: line_delay,
        reflect_sign_estimate: reflect_sign,
    };
    let opts = TrlOptions {
        refine,
        ..TrlOptions::default()
    };
    let solution = trl_solve(&standards, &opts).map_err(Failure::compute)?;
    let dut_clean = deembed(&solution.model, &dut).map_err(Failure::compute)?;

    let n = solution.residual.len();
    let rms = (solution.residual.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    let max = solution.residual.iter().cloned().fold(0.0f64, f64::max);
    let summary = TrlSummary {
        n_freqs: n,
        residual_rms: rms,
        residual_max: max,
        refined: refine,
        n_warnings: solution.warnings.len(),
        warnings: solution.warnings.clone(),
    };

    let dut_path = ctx.out_path("dut_deembedded.s2p");
    write_touchstone(&dut_clean, &dut_path).map_err(Failure::input)?;
    ctx.write_out("error_model.csv", &solution.model.to_csv())?;
    ctx.write_out("trl_summary.json", &to_json_file(&summary))?;
    println!(
        "trl: {} frequencies de-embedded from {dut_name}, residual rms {rms:.3e} ({} warnings)",
        n,
        solution.warnings.len()
    );
    Ok(())
}
