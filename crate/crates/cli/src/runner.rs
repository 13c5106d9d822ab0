//! Scenario execution: stream diagnostics to CSV, snapshot profiles, and
//! summarize pass/fail of the monitored contracts.

use crate::config::RunConfig;
use anyhow::Context;
use ch_core::conserved::drift_from_series;
use ch_core::evolution::{CheckpointDiagnostics, EvolveOptions};
use ch_core::io::{fmt_f64, write_energy_measure, write_grid_function};
use ch_core::lagrangian::ReconstructOptions;
use ch_core::scenarios::suggest_alpha_grid;
use ch_core::stability::{lemma_chain_bound, StabilityMonitor};
use ch_core::{alpha_transform, evolve_with, Error};
use std::fs::File;
use std::io::{BufWriter, Write};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONTRACT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

fn timeseries_row(w: &mut impl Write, d: &CheckpointDiagnostics) -> std::io::Result<()> {
    let (xi, m, dist2, total, lemma_bound, eps2) = match &d.monitor {
        Some(mn) => (mn.xi, mn.m, mn.dist2, mn.total, mn.lemma_bound, mn.eps2),
        None => (
            d.crest_xi,
            d.crest_m,
            f64::NAN,
            f64::NAN,
            f64::NAN,
            f64::NAN,
        ),
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{}",
        fmt_f64(d.t),
        fmt_f64(d.e_tilde),
        fmt_f64(d.f_tilde),
        fmt_f64(d.e_ac),
        fmt_f64(d.mu_s),
        fmt_f64(xi),
        fmt_f64(m),
        fmt_f64(dist2),
        fmt_f64(total),
        fmt_f64(lemma_bound),
        fmt_f64(eps2)
    )
}

/// Execute one configured run; returns the process exit code.
pub fn run(cfg: &RunConfig) -> anyhow::Result<i32> {
    let out_dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;

    let (data, anchor_x) = cfg.build_data()?;
    let grid = suggest_alpha_grid(&data, cfg.n_alpha, cfg.domain_pad, anchor_x)?;
    let state0 = alpha_transform(&data, &grid)?;
    let stab = cfg.stability_defaults();
    let opts = EvolveOptions {
        checkpoint_every: cfg.checkpoint_every,
        reconstruct: ReconstructOptions {
            thickness_tol: cfg.thickness_tol,
            ..Default::default()
        },
        monitor: Some(StabilityMonitor {
            c: stab.c,
            eps: stab.eps,
            center: stab.center,
        }),
    };

    let ts_path = out_dir.join("timeseries.csv");
    let mut ts = BufWriter::new(File::create(&ts_path)?);
    writeln!(
        ts,
        "t,E_tilde,F_tilde,E_ac,mu_s,xi,M,dist2,total,lemma_bound,eps2"
    )?;

    let mut series: Vec<CheckpointDiagnostics> = Vec::new();
    let mut snapshot_idx = 0usize;
    let result = evolve_with(&state0, cfg.t_end, cfg.dt, &opts, |state, diag| {
        timeseries_row(&mut ts, diag).map_err(Error::Io)?;
        if cfg.write_snapshots {
            let rec = ch_core::reconstruct_natural(state, &opts.reconstruct)?;
            let mut su = BufWriter::new(
                File::create(out_dir.join(format!("snapshot_{snapshot_idx:06}.csv")))
                    .map_err(Error::Io)?,
            );
            write_grid_function(&mut su, &rec.u)?;
            let mut sd = BufWriter::new(
                File::create(out_dir.join(format!("density_{snapshot_idx:06}.csv")))
                    .map_err(Error::Io)?,
            );
            let mut sa = BufWriter::new(
                File::create(out_dir.join(format!("atoms_{snapshot_idx:06}.csv")))
                    .map_err(Error::Io)?,
            );
            write_energy_measure(&mut sd, &mut sa, &rec.mu)?;
            snapshot_idx += 1;
        }
        series.push(diag.clone());
        Ok(())
    });
    ts.flush()?;

    let blew_up = match &result {
        Ok(_) => None,
        Err(Error::BlowUp { t, detail }) => Some(format!("blow-up at t = {t}: {detail}")),
        Err(Error::CorruptedState(msg)) => Some(format!("corrupted state: {msg}")),
        Err(e) => return Err(anyhow::Error::from(clone_err(e))),
    };

    let report = drift_from_series(&series)?;
    let min_e_ac = report.e_ac.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mu_s = report.mu_s.iter().copied().fold(0.0_f64, f64::max);
    let monitored: Vec<_> = series.iter().filter_map(|d| d.monitor.as_ref()).collect();
    let max_total = monitored.iter().map(|m| m.total).fold(0.0_f64, f64::max);
    let hypothesis_met = monitored.first().map(|m| m.hypothesis_met).unwrap_or(false);
    let delta0_bound = monitored.first().map(|m| m.lemma_bound);

    let pass_e = report.rel_drift_e <= cfg.tol_drift_e;
    let pass_f = report.rel_drift_f <= cfg.tol_drift_f;
    let pass_stability = if hypothesis_met {
        delta0_bound.map(|b| max_total <= b)
    } else {
        None // hypothesis not met: reported, not judged
    };
    let all_pass =
        blew_up.is_none() && pass_e && pass_f && pass_stability.unwrap_or(true);

    let summary = serde_json::json!({
        "status": if let Some(msg) = &blew_up { msg.as_str() } else { "completed" },
        "config": cfg,
        "grid": {
            "n_alpha": grid.len(),
            "dalpha": grid.step(),
            "alpha_start": grid.start(),
            "alpha_end": grid.end(),
            "truncation_radius": cfg.truncation_radius,
        },
        "seed": cfg.seed,
        "rel_drift_E": report.rel_drift_e,
        "rel_drift_F": report.rel_drift_f,
        "min_E_ac": min_e_ac,
        "max_mu_s": max_mu_s,
        "max_total": max_total,
        "stability": {
            "c": stab.c,
            "eps": stab.eps,
            "hypothesis_met": hypothesis_met,
            "lemma_bound": delta0_bound,
            "chain_bound_check": lemma_chain_bound(stab.c.abs(),
                ch_core::stability::theorem_delta(stab.c.abs(), stab.eps))
                <= stab.eps * stab.eps,
        },
        "flags": {
            "conservation_E": pass_e,
            "conservation_F": pass_f,
            "stability_bound": pass_stability,
        },
    });
    let mut sf = File::create(out_dir.join("summary.json"))?;
    writeln!(sf, "{}", serde_json::to_string_pretty(&summary)?)?;

    if blew_up.is_some() {
        return Ok(EXIT_BLOWUP);
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_CONTRACT_FAIL })
}

// Error is not Clone; rebuild a displayable error for the anyhow path.
fn clone_err(e: &Error) -> anyhow::Error {
    anyhow::anyhow!("{e}")
}
