//! Maps a validated `RunConfig` onto the core drivers and serializes their
//! results. All file writes happen on the calling thread; worker threads
//! only produce in-memory results.

use std::path::Path;
use std::time::Instant;

use serde_json::json;

use ionsim_core::couplings::{compute_couplings, detuning_for_range, fit_power_law};
use ionsim_core::experiments::{
    dtc_phase_scan, realization_seed, run_dtc, run_mbl_quench, run_prethermal, run_spectroscopy,
    DisorderEnsemble, DtcParams, SpectroscopyParams,
};
use ionsim_core::ionchain::{solve_equilibrium, transverse_modes};
use ionsim_core::CouplingMatrix;

use crate::config::{
    CouplingsConfig, DtcConfig, DtcScanConfig, MblConfig, ModesConfig, PrethermConfig, RunConfig,
    SpectroscopyConfig,
};
use crate::output::{sha256_hex, OutputDir, RunManifest};
use crate::CliError;

pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut out = OutputDir::create(out_dir)?;
    let per_realization_seeds = match config {
        RunConfig::Modes(c) => run_modes(c, &mut out)?,
        RunConfig::Couplings(c) => run_couplings(c, &mut out)?,
        RunConfig::Mbl(c) => run_mbl(c, &mut out)?,
        RunConfig::Pretherm(c) => run_pretherm(c, &mut out)?,
        RunConfig::Dtc(c) => run_dtc_cmd(c, &mut out)?,
        RunConfig::DtcScan(c) => run_dtc_scan(c, &mut out)?,
        RunConfig::Spectroscopy(c) => run_spectroscopy_cmd(c, &mut out)?,
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.kind().to_string(),
        config_sha256: sha256_hex(config.to_toml_string()?.as_bytes()),
        seed: config.seed(),
        per_realization_seeds,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: out.files().to_vec(),
    };
    out.write_manifest(&manifest)?;
    Ok(manifest)
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

fn run_modes(c: &ModesConfig, out: &mut OutputDir) -> Result<Vec<u64>, CliError> {
    let trap = c.trap.to_core();
    let eq = solve_equilibrium(&trap).map_err(numeric)?;
    let modes = transverse_modes(&trap, &eq).map_err(numeric)?;
    let n = modes.n();

    out.write_csv(
        "positions.csv",
        &["ion", "position"],
        eq.positions
            .iter()
            .enumerate()
            .map(|(i, u)| (vec![i.to_string()], std::slice::from_ref(u))),
    )?;
    let vec_headers: Vec<String> = (0..n).map(|i| format!("b{i}")).collect();
    let mut header: Vec<&str> = vec!["mode", "frequency"];
    header.extend(vec_headers.iter().map(String::as_str));
    let rows: Vec<(Vec<String>, Vec<f64>)> = (0..n)
        .map(|m| {
            let mut floats = vec![modes.frequencies[m]];
            floats.extend((0..n).map(|i| modes.eigenvectors[(i, m)]));
            (vec![m.to_string()], floats)
        })
        .collect();
    out.write_csv("modes.csv", &header, rows.iter().map(|(h, f)| (h.clone(), f.as_slice())))?;
    out.write_json(
        "summary.json",
        &json!({
            "n_ions": n,
            "length_scale_m": trap.length_scale(),
            "frequencies": modes.frequencies.to_vec(),
        }),
    )?;
    Ok(Vec::new())
}

fn run_couplings(c: &CouplingsConfig, out: &mut OutputDir) -> Result<Vec<u64>, CliError> {
    let trap = c.trap.to_core();
    let eq = solve_equilibrium(&trap).map_err(numeric)?;
    let modes = transverse_modes(&trap, &eq).map_err(numeric)?;
    let raman = match (c.target_alpha, c.raman.beatnote) {
        (Some(alpha), _) => {
            let template = c.raman.to_core(trap.transverse_freq, trap.mass);
            let bracket = (1.0005 * trap.transverse_freq, 10.0 * trap.transverse_freq);
            let (r, _) = detuning_for_range(&trap, &template, alpha, bracket).map_err(numeric)?;
            r
        }
        (None, Some(beatnote)) => c.raman.to_core(beatnote, trap.mass),
        (None, None) => {
            return Err(CliError::Config(
                "missing required: either raman.beatnote or target_alpha".into(),
            ))
        }
    };
    let j = compute_couplings(&raman, &modes).map_err(numeric)?;
    let fit = fit_power_law(&j).map_err(numeric)?;

    let n = j.n();
    let col_headers: Vec<String> = (0..n).map(|k| format!("j{k}")).collect();
    let mut header = vec!["site"];
    header.extend(col_headers.iter().map(String::as_str));
    let rows: Vec<(Vec<String>, Vec<f64>)> = (0..n)
        .map(|i| (vec![i.to_string()], (0..n).map(|k| j.get(i, k)).collect()))
        .collect();
    out.write_csv(
        "couplings.csv",
        &header,
        rows.iter().map(|(h, f)| (h.clone(), f.as_slice())),
    )?;
    out.write_json(
        "summary.json",
        &json!({
            "beatnote": raman.beatnote,
            "fit": fit,
            "warnings": raman.regime_warnings(&modes, trap.mass),
        }),
    )?;
    Ok(Vec::new())
}

fn timeseries_header(n: usize, extra: &[&str]) -> Vec<String> {
    let mut h = vec!["time".to_string()];
    h.extend((0..n).map(|i| format!("m{i}")));
    h.extend(extra.iter().map(|s| s.to_string()));
    h
}

fn run_mbl(c: &MblConfig, out: &mut OutputDir) -> Result<Vec<u64>, CliError> {
    let j = CouplingMatrix::power_law(c.n, c.j0, c.alpha);
    let ensemble = DisorderEnsemble {
        width: c.w_over_j0 * c.j0,
        n_realizations: c.n_realizations,
        seed: c.seed,
    };
    let result = run_mbl_quench(
        &j,
        c.b_over_j0 * c.j0,
        &ensemble,
        c.t_max_j0 / c.j0,
        c.n_times,
    )
    .map_err(numeric)?;

    let header = timeseries_header(c.n, &["hamming"]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let write_quench = |out: &mut OutputDir,
                            name: &str,
                            q: &ionsim_core::experiments::QuenchResult|
     -> Result<(), CliError> {
        let rows: Vec<(Vec<String>, Vec<f64>)> = q
            .times
            .iter()
            .enumerate()
            .map(|(t, time)| {
                let mut floats = vec![*time];
                floats.extend(q.magnetizations[t].iter().copied());
                floats.push(q.hamming[t]);
                (Vec::new(), floats)
            })
            .collect();
        out.write_csv(name, &header_refs, rows.iter().map(|(h, f)| (h.clone(), f.as_slice())))
    };
    for (k, q) in result.per_realization.iter().enumerate() {
        write_quench(out, &format!("realization_{k:03}.csv"), q)?;
    }
    write_quench(out, "mean.csv", &result.mean)?;
    out.write_json(
        "summary.json",
        &json!({
            "steady_state_hd_mean": result.mean.steady_state_hd,
            "steady_state_sem": result.steady_state_sem,
            "per_realization_steady_state": result
                .per_realization
                .iter()
                .map(|q| q.steady_state_hd)
                .collect::<Vec<_>>(),
        }),
    )?;
    Ok((0..c.n_realizations as u64).map(|k| realization_seed(c.seed, k)).collect())
}

fn run_pretherm(c: &PrethermConfig, out: &mut OutputDir) -> Result<Vec<u64>, CliError> {
    let j = CouplingMatrix::power_law(c.n, c.j0, c.alpha);
    let result = run_prethermal(
        &j,
        c.b_over_j0 * c.j0,
        &c.initial,
        c.t_max_j0 / c.j0,
        c.n_times,
    )
    .map_err(numeric)?;

    let header = timeseries_header(c.n, &["c", "c_avg"]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<(Vec<String>, Vec<f64>)> = result
        .times
        .iter()
        .enumerate()
        .map(|(t, time)| {
            let mut floats = vec![*time];
            floats.extend(result.magnetizations[t].iter().copied());
            floats.push(result.c_of_t[t]);
            floats.push(result.c_avg[t]);
            (Vec::new(), floats)
        })
        .collect();
    out.write_csv(
        "timeseries.csv",
        &header_refs,
        rows.iter().map(|(h, f)| (h.clone(), f.as_slice())),
    )?;
    out.write_json(
        "summary.json",
        &json!({
            "c_initial": result.c_of_t.first(),
            "c_avg_final": result.c_avg.last(),
            "warnings": result.warnings,
        }),
    )?;
    Ok(Vec::new())
}

fn dtc_params(g: Option<f64>, epsilon: f64, t1: f64, t2: f64, t3: f64, n_periods: usize) -> DtcParams {
    DtcParams {
        g: g.unwrap_or(std::f64::consts::FRAC_PI_2 / t1),
        epsilon,
        t1,
        t2,
        t3,
        n_periods,
    }
}

fn run_dtc_cmd(c: &DtcConfig, out: &mut OutputDir) -> Result<Vec<u64>, CliError> {
    let params = dtc_params(c.g, c.epsilon, c.t1, c.t2, c.t3, c.n_periods);
    let shape = CouplingMatrix::power_law(c.n, 1.0, c.alpha);
    let j = shape.scaled(c.j0t2 / c.t2);
    let ensemble = DisorderEnsemble {
        width: std::f64::consts::PI / c.t3,
        n_realizations: c.n_realizations,
        seed: c.seed,
    };
    let result = run_dtc(&params, &j, &ensemble).map_err(numeric)?;

    let mag_headers: Vec<String> = (0..c.n).map(|i| format!("m{i}")).collect();
    let mut header = vec!["period".to_string()];
    header.extend(mag_headers.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    for (k, r) in result.per_realization.iter().enumerate() {
        let rows: Vec<(Vec<String>, &[f64])> = r
            .strobe_mags
            .iter()
            .enumerate()
            .map(|(p, mags)| (vec![(p + 1).to_string()], mags.as_slice()))
            .collect();
        out.write_csv(&format!("strobe_{k:03}.csv"), &header_refs, rows.into_iter())?;
    }
    let spec_rows: Vec<(Vec<String>, Vec<f64>)> = result
        .freqs
        .iter()
        .zip(&result.mean_spectrum)
        .map(|(f, m)| (Vec::new(), vec![*f, *m]))
        .collect();
    out.write_csv(
        "spectrum.csv",
        &["frequency", "magnitude"],
        spec_rows.iter().map(|(h, f)| (h.clone(), f.as_slice())),
    )?;
    out.write_json(
        "summary.json",
        &json!({
            "peak_height_mean": result.peak_height_mean,
            "peak_variance": result.peak_variance,
            "per_realization_peaks": result
                .per_realization
                .iter()
                .map(|r| r.peak_height)
                .collect::<Vec<_>>(),
        }),
    )?;
    Ok((0..c.n_realizations as u64).map(|k| realization_seed(c.seed, k)).collect())
}

fn run_dtc_scan(c: &DtcScanConfig, out: &mut OutputDir) -> Result<Vec<u64>, CliError> {
    let base = dtc_params(c.g, 0.0, c.t1, c.t2, c.t3, c.n_periods);
    let shape = CouplingMatrix::power_law(c.n, 1.0, c.alpha);
    let scan = dtc_phase_scan(
        &base,
        &shape,
        &c.epsilons,
        &c.j0t2_values,
        c.n_realizations,
        c.seed,
    )
    .map_err(numeric)?;

    let rows: Vec<(Vec<String>, Vec<f64>)> = scan
        .columns
        .iter()
        .flat_map(|col| {
            col.epsilons.iter().enumerate().map(move |(i, eps)| {
                (
                    Vec::new(),
                    vec![col.j0t2, *eps, col.peak_heights[i], col.variances[i]],
                )
            })
        })
        .collect();
    out.write_csv(
        "scan.csv",
        &["j0t2", "epsilon", "peak_height", "variance"],
        rows.iter().map(|(h, f)| (h.clone(), f.as_slice())),
    )?;
    out.write_json(
        "summary.json",
        &json!({
            "columns": scan
                .columns
                .iter()
                .map(|c| json!({"j0t2": c.j0t2, "eps_star": c.eps_star, "flat": c.flat}))
                .collect::<Vec<_>>(),
            "slope": scan.slope,
            "intercept": scan.intercept,
        }),
    )?;
    Ok((0..c.n_realizations as u64).map(|k| realization_seed(c.seed, k)).collect())
}

fn run_spectroscopy_cmd(c: &SpectroscopyConfig, out: &mut OutputDir) -> Result<Vec<u64>, CliError> {
    let j = c.coupling_matrix()?;
    if c.probe_points < 3 || c.probe_stop <= c.probe_start {
        return Err(CliError::Config(
            "probe grid needs probe_stop > probe_start and probe_points >= 3".into(),
        ));
    }
    let probe_freqs: Vec<f64> = (0..c.probe_points)
        .map(|k| {
            c.probe_start
                + (c.probe_stop - c.probe_start) * k as f64 / (c.probe_points - 1) as f64
        })
        .collect();
    let params = SpectroscopyParams {
        b0: c.b0,
        bp: c.bp,
        probe_freqs,
        duration: c.duration,
        measure_conditional: c.measure_conditional,
    };
    let scan = run_spectroscopy(&j, &params).map_err(numeric)?;

    let trace_names: Vec<String> = scan
        .traces
        .iter()
        .map(|t| match t.given {
            None => "bare".to_string(),
            Some(g) => format!("given{g}"),
        })
        .collect();
    let mut header = vec!["frequency".to_string()];
    header.extend(trace_names.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<(Vec<String>, Vec<f64>)> = scan
        .probe_freqs
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let mut floats = vec![*f];
            floats.extend(scan.traces.iter().map(|t| t.response[k]));
            (Vec::new(), floats)
        })
        .collect();
    out.write_csv(
        "response.csv",
        &header_refs,
        rows.iter().map(|(h, f)| (h.clone(), f.as_slice())),
    )?;
    out.write_json(
        "summary.json",
        &json!({
            "peaks": scan
                .traces
                .iter()
                .zip(&trace_names)
                .map(|(t, name)| json!({"trace": name, "peaks": t.peaks}))
                .collect::<Vec<_>>(),
            "extracted_splittings": scan.extracted_splittings,
            "unresolved": scan.unresolved,
            "reconstructed": scan.reconstructed.as_ref().map(|m| {
                let n = m.n();
                (0..n)
                    .map(|i| (0..n).map(|k| m.get(i, k)).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            }),
        }),
    )?;
    Ok(Vec::new())
}
