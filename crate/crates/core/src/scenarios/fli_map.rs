use std::path::Path;

use serde_json::json;

use crate::bodies::{SystemModel, SECONDS_PER_DAY};
use crate::error::{Error, Result};
use crate::fli::{scan, tisserand_band, tisserand_curve, write_polyline_csv, GridSpec};

use super::{ensure_dir, plain, FliMapConfig, Metadata, Report, ScenarioConfig, TisserandLine};

const DAYS_PER_YEAR: f64 = 365.25;

pub fn grid_spec(model: &SystemModel, cfg: &FliMapConfig) -> GridSpec {
    GridSpec {
        a_min: cfg.a_min,
        a_max: cfg.a_max,
        n_a: cfg.n_a,
        e_min: cfg.e_min,
        e_max: cfg.e_max,
        n_e: cfg.n_e,
        horizon: cfg.horizon_years * DAYS_PER_YEAR * SECONDS_PER_DAY / model.time_unit(),
        phase_offset: cfg.phase_offset_deg.to_radians(),
        periapsis_longitude: cfg.periapsis_longitude_deg.to_radians(),
        epoch: 0.0,
        checkpoints: cfg.checkpoints,
    }
}

fn tisserand_lines(model: &SystemModel, cfg: &FliMapConfig) -> Vec<TisserandLine> {
    match &cfg.tisserand {
        Some(lines) => lines.clone(),
        None => ["Jupiter", "Saturn"]
            .iter()
            .filter(|b| model.index_of(b).is_ok())
            .map(|b| TisserandLine {
                body: b.to_string(),
                value: 3.0,
            })
            .collect(),
    }
}

/// FLI grid over (a, e) with Tisserand polylines and band statistics.
pub fn run_fli_map(cfg: &ScenarioConfig, out: &Path) -> Result<Report> {
    let block = cfg.block(&cfg.fli_map, "fli_map")?;
    let model = cfg.load_system()?.model;
    let spec = grid_spec(&model, block);
    spec.validate()?;
    let lines = tisserand_lines(&model, block);
    let mut radii = Vec::new();
    for l in &lines {
        let j = model.index_of(&l.body)?;
        if j == 0 {
            return Err(Error::InvalidInput("a Tisserand curve needs a body other than M1".into()));
        }
        radii.push(model.orbit_radius()[j]);
    }
    let settings = plain(&cfg.integrator);
    ensure_dir(out)?;

    let grid = scan(&model, &spec, &settings)?;
    let meta = Metadata::new("fli-map", &cfg.source, &model, &settings)
        .with("grid", &spec)
        .with("horizon_years", block.horizon_years)
        .with("log", "natural");
    let mut report = Report::default();

    let f = out.join("fli.csv");
    grid.write_csv(&f)?;
    report.add(f, &meta)?;
    let f = out.join("fli_status.csv");
    grid.write_status_csv(&f)?;
    report.add(f, &meta)?;
    let f = out.join("fli_history.csv");
    grid.write_history_csv(&f)?;
    report.add(f, &meta)?;

    let median = grid.median();
    let monotone = grid.monotone_in_horizon();
    let mut bands = Vec::new();
    for (l, &a_p) in lines.iter().zip(&radii) {
        let poly = tisserand_curve(a_p, l.value, (spec.e_min, spec.e_max), block.tisserand_points);
        let f = out.join(format!("tisserand_{}_{}.csv", l.body.to_lowercase(), l.value));
        write_polyline_csv(&f, &poly)?;
        report.add(f, &meta.clone().with("body", &l.body).with("tisserand", l.value).with("a_p", a_p))?;
        let b = tisserand_band(&grid, a_p, l.value, block.band_half_width);
        report.note(format!(
            "{} T = {}: band mean {:.3} over {} cells, median {:.3}, margin {:.3}",
            l.body,
            l.value,
            b.band_mean,
            b.band_cells,
            b.median,
            b.band_mean - b.median
        ));
        bands.push(json!({
            "body": l.body,
            "value": l.value,
            "a_p": a_p,
            "band_half_width": block.band_half_width,
            "band_mean": b.band_mean,
            "band_cells": b.band_cells,
            "median": b.median,
        }));
    }
    let bad = grid.status.iter().filter(|s| s.code() != 0).count();
    report.note(format!(
        "{}x{} cells, median FLI {median:.3}, monotone in horizon: {monotone}, cut short: {bad}",
        spec.n_e, spec.n_a
    ));
    let summary = json!({
        "median": median,
        "monotone_in_horizon": monotone,
        "cells_cut_short": bad,
        "bands": bands,
    });
    let f = out.join("fli_summary.json");
    std::fs::write(&f, serde_json::to_string_pretty(&summary)? + "\n")?;
    report.add(f, &meta)?;
    Ok(report)
}
