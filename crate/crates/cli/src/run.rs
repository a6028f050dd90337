//! Experiment orchestration: builds the worker pool, runs the requested
//! experiment, and emits CSV/JSON artifacts plus the hashed manifest.
//!
//! Determinism contract: every artifact byte depends only on the config text
//! and the effective seed — never on the worker count. Trials are keyed by
//! their index through the counter-based generator and all reductions happen
//! in index order.

use std::path::Path;

use serde::Serialize;
use sheetlab_core::density::{gaussian_reference, kde, sample_endpoint, BandwidthRule};
use sheetlab_core::field::{bracket_sets, hormander_report, NeighborhoodSpec};
use sheetlab_core::malliavin::{
    det_inverse_moments, malliavin_matrix, nondegeneracy_probe, DetMomentReport, ProbeReport,
};
use sheetlab_core::norris::{
    decay_exponent_fit, norris_event_probability, norris_event_probability_spde, DecayFitReport,
    NorrisConfig, NorrisRegime, NorrisReport, SemimartingaleSpec,
};
use sheetlab_core::sheet::{sample_sheet_trial, SheetSample};
use sheetlab_core::solver::{refine_convergence, solve_path, ConvergenceTable};
use sheetlab_core::stats::SlopeFit;

use crate::config::{config_warnings, ExperimentKind, NorrisSource, RunConfig};
use crate::report::{sha256_hex, ArtifactEntry, ArtifactSink, Csv, CsvCell, ManifestHeader};

pub const TOOL: &str = "sheetlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum RunError {
    Core(sheetlab_core::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<sheetlab_core::Error> for RunError {
    fn from(e: sheetlab_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Common provenance block embedded in every JSON summary.
#[derive(Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    kind: String,
    field_preset: String,
    seed: u64,
    warnings: Vec<String>,
    config_text: String,
}

fn provenance(cfg: &RunConfig, extra_warnings: &[String]) -> Provenance {
    let mut warnings = config_warnings(cfg);
    warnings.extend_from_slice(extra_warnings);
    Provenance {
        tool: TOOL,
        version: VERSION,
        kind: cfg.kind.as_str().to_string(),
        field_preset: cfg.field_label.clone(),
        seed: cfg.seed,
        warnings,
        config_text: cfg.raw_text.clone(),
    }
}

/// Snaps the requested z to a grid node, reporting the move on stderr.
fn snap_z(cfg: &RunConfig) -> (usize, usize, Vec<String>) {
    let (i, j, s, t) = cfg.grid.snap(cfg.z.0, cfg.z.1);
    let mut warnings = Vec::new();
    if (s - cfg.z.0).abs() > 1e-12 || (t - cfg.z.1).abs() > 1e-12 {
        let msg = format!(
            "requested z = ({}, {}) snapped to node ({i}, {j}) = ({s}, {t})",
            cfg.z.0, cfg.z.1
        );
        eprintln!("sheetlab: {msg}");
        warnings.push(msg);
    }
    (i, j, warnings)
}

/// Runs the configured experiment inside a dedicated worker pool and writes
/// all artifacts under `cfg.out_dir`.
pub fn run(cfg: &RunConfig) -> Result<Vec<ArtifactEntry>, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| {
            RunError::Core(sheetlab_core::Error::Config(format!("worker pool: {e}")))
        })?;
    eprintln!(
        "sheetlab: running '{}' with {} worker(s), seed {}",
        cfg.kind.as_str(),
        if cfg.workers == 0 { pool.current_num_threads() } else { cfg.workers },
        cfg.seed
    );
    let sink = ArtifactSink::new(Path::new(&cfg.out_dir))?;
    let sink = pool.install(|| dispatch(cfg, sink))?;
    let entries = sink.finish(ManifestHeader {
        tool: TOOL,
        version: VERSION,
        kind: cfg.kind.as_str().to_string(),
        seed: cfg.seed,
        config_sha256: sha256_hex(cfg.raw_text.as_bytes()),
    })?;
    for e in &entries {
        eprintln!("sheetlab: wrote {} ({} bytes, sha256 {})", e.file, e.bytes, e.sha256);
    }
    Ok(entries)
}

fn dispatch(cfg: &RunConfig, sink: ArtifactSink) -> Result<ArtifactSink, RunError> {
    match cfg.kind {
        ExperimentKind::Simulate => run_simulate(cfg, sink),
        ExperimentKind::Hormander => run_hormander(cfg, sink),
        ExperimentKind::Malliavin => run_malliavin(cfg, sink),
        ExperimentKind::Probe => run_probe(cfg, sink),
        ExperimentKind::Norris => run_norris(cfg, sink),
        ExperimentKind::Density => run_density(cfg, sink),
        ExperimentKind::Converge => run_converge(cfg, sink),
    }
}

fn run_simulate(cfg: &RunConfig, mut sink: ArtifactSink) -> Result<ArtifactSink, RunError> {
    let sheet: SheetSample<f64> =
        sample_sheet_trial(&cfg.grid, cfg.fields.d(), cfg.seed, 0)?;
    let path = solve_path(&cfg.fields, &cfg.grid, &sheet, &cfg.x0)?;
    let mut csv_bytes = Vec::new();
    path.write_csv(&mut csv_bytes)?;
    sink.write("path.csv", &csv_bytes)?;
    if cfg.dump_sheet {
        let mut bin = Vec::new();
        sheet.write_binary(&mut bin)?;
        sink.write("sheet.bin", &bin)?;
    }

    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        provenance: Provenance,
        grid: sheetlab_core::GridSpec,
        x0: Vec<f64>,
        corner_value: Vec<f64>,
    }
    let corner: Vec<f64> = path.value(cfg.grid.n_s(), cfg.grid.n_t()).to_vec();
    sink.write_json(
        "summary.json",
        &Summary {
            provenance: provenance(cfg, &[]),
            grid: cfg.grid,
            x0: cfg.x0.clone(),
            corner_value: corner,
        },
    )?;
    Ok(sink)
}

fn run_hormander(cfg: &RunConfig, mut sink: ArtifactSink) -> Result<ArtifactSink, RunError> {
    let neighborhood = cfg
        .neighborhood
        .map(|(s0, radius, samples)| NeighborhoodSpec { s0, radius, samples });
    let report = hormander_report(&cfg.fields, cfg.hormander_t, &cfg.x0, cfg.depth, neighborhood)?;
    let mut csv = Csv::new(&["level", "fields", "cumulative_rank", "min_gram_eigenvalue"]);
    for l in &report.levels {
        csv.row(&[
            CsvCell::Int(l.level as i64),
            CsvCell::Int(l.fields as i64),
            CsvCell::Int(l.cumulative_rank as i64),
            CsvCell::Float(l.min_gram_eigenvalue),
        ]);
    }
    sink.write("levels.csv", &csv.into_bytes())?;

    let brackets = bracket_sets(&cfg.fields, cfg.depth)?;
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        provenance: Provenance,
        report: sheetlab_core::field::HormanderReport,
        raw_level_sizes: Vec<usize>,
    }
    sink.write_json(
        "hormander.json",
        &Summary {
            provenance: provenance(cfg, &[]),
            report,
            raw_level_sizes: brackets.raw_counts().to_vec(),
        },
    )?;
    Ok(sink)
}

fn run_malliavin(cfg: &RunConfig, mut sink: ArtifactSink) -> Result<ArtifactSink, RunError> {
    use rayon::prelude::*;
    let (iz, jz, warnings) = snap_z(cfg);
    if iz == 0 || jz == 0 {
        return Err(sheetlab_core::Error::DegenerateRectangle.into());
    }
    let samples: Vec<sheetlab_core::MalliavinMatrix64> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> sheetlab_core::Result<sheetlab_core::MalliavinMatrix64> {
            let sheet = sample_sheet_trial::<f64>(&cfg.grid, cfg.fields.d(), cfg.seed, trial)?;
            let path = solve_path(&cfg.fields, &cfg.grid, &sheet, &cfg.x0)?;
            malliavin_matrix(&cfg.fields, &cfg.grid, &sheet, &path, (iz, jz), cfg.strategy)
        })
        .collect::<sheetlab_core::Result<Vec<_>>>()?;

    let mut csv = Csv::new(&["trial", "det", "min_eigenvalue"]);
    for (t, c) in samples.iter().enumerate() {
        csv.row(&[
            CsvCell::Int(t as i64),
            CsvCell::Float(c.det()),
            CsvCell::Float(c.min_eigenvalue()),
        ]);
    }
    sink.write("dets.csv", &csv.into_bytes())?;

    let moments = det_inverse_moments(&samples, cfg.moment_p)?;
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        provenance: Provenance,
        z_node: (usize, usize),
        z_time: (f64, f64),
        trials: u64,
        exact_strategy: bool,
        moments: DetMomentReport,
    }
    sink.write_json(
        "moments.json",
        &Summary {
            provenance: provenance(cfg, &warnings),
            z_node: (iz, jz),
            z_time: cfg.grid.node(iz, jz),
            trials: cfg.trials,
            exact_strategy: samples.first().map(|c| c.exact()).unwrap_or(true),
            moments,
        },
    )?;
    Ok(sink)
}

fn run_probe(cfg: &RunConfig, mut sink: ArtifactSink) -> Result<ArtifactSink, RunError> {
    let (iz, jz, warnings) = snap_z(cfg);
    let report = nondegeneracy_probe(
        &cfg.fields,
        &cfg.grid,
        &cfg.x0,
        (iz, jz),
        cfg.directions,
        &cfg.pinned,
        &cfg.eps,
        cfg.trials,
        cfg.seed,
        cfg.strategy,
    )?;

    let m = cfg.fields.m();
    let mut header: Vec<String> = vec!["direction".into()];
    header.extend((1..=m).map(|c| format!("v_{c}")));
    header.extend(
        ["eps", "count", "trials", "p_hat", "ci_lo", "ci_hi"]
            .iter()
            .map(|s| s.to_string()),
    );
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);
    for (di, dir) in report.directions.iter().enumerate() {
        for (ei, &e) in report.eps.iter().enumerate() {
            let mut row = vec![CsvCell::Int(di as i64)];
            row.extend(dir.iter().map(|&x| CsvCell::Float(x)));
            row.push(CsvCell::Float(e));
            row.push(CsvCell::Int(report.counts[di][ei] as i64));
            row.push(CsvCell::Int(report.trials as i64));
            row.push(CsvCell::Float(report.p_hat[di][ei]));
            row.push(CsvCell::Float(report.ci[di][ei].0));
            row.push(CsvCell::Float(report.ci[di][ei].1));
            csv.row(&row);
        }
    }
    sink.write("probe.csv", &csv.into_bytes())?;

    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        provenance: Provenance,
        report: ProbeReport,
    }
    sink.write_json(
        "probe.json",
        &Summary { provenance: provenance(cfg, &warnings), report },
    )?;
    Ok(sink)
}

fn run_norris(cfg: &RunConfig, mut sink: ArtifactSink) -> Result<ArtifactSink, RunError> {
    let ncfg = NorrisConfig {
        alpha1: cfg.alpha1,
        alpha2: cfg.alpha2,
        rho: cfg.rho,
        nu: cfg.nu,
        eps: cfg.eps.clone(),
        trials: cfg.trials,
        steps: cfg.steps,
        horizon: cfg.horizon,
        seed: cfg.seed,
    };
    let report: NorrisReport = match cfg.norris_source {
        NorrisSource::Brownian => {
            let spec: SemimartingaleSpec<f64> =
                SemimartingaleSpec::brownian_with(cfg.beta, cfg.beta_prime)?;
            norris_event_probability(&spec, &ncfg)?
        }
        NorrisSource::Spde => {
            let brackets = bracket_sets(&cfg.fields, cfg.bracket_level)?;
            let level = brackets.level(cfg.bracket_level);
            let field = level.get(cfg.bracket_index).ok_or_else(|| {
                sheetlab_core::Error::Config(format!(
                    "bracket index {} out of range (level {} has {} fields)",
                    cfg.bracket_index,
                    cfg.bracket_level,
                    level.len()
                ))
            })?;
            let v = cfg.direction.clone().unwrap_or_else(|| {
                let mut v = vec![0.0; cfg.fields.m()];
                v[cfg.fields.m() - 1] = 1.0;
                v
            });
            let regime = if cfg.beta > 0.5 {
                NorrisRegime::Regular
            } else {
                NorrisRegime::Irregular
            };
            norris_event_probability_spde(
                &cfg.fields,
                &cfg.grid,
                &cfg.x0,
                &v,
                field,
                cfg.grid.n_t(),
                &ncfg,
                regime,
                cfg.beta,
                cfg.beta_prime,
            )?
        }
    };

    let mut csv = Csv::new(&["eps", "count", "trials", "p_hat", "ci_lo", "ci_hi", "local_slope"]);
    for (k, &e) in report.eps.iter().enumerate() {
        // local slope of the segment starting at this ε (none for the last)
        let slope = report.fit.local_slopes.get(k).copied().unwrap_or(f64::NAN);
        csv.row(&[
            CsvCell::Float(e),
            CsvCell::Int(report.counts[k] as i64),
            CsvCell::Int(report.trials as i64),
            CsvCell::Float(report.p_hat[k]),
            CsvCell::Float(report.ci[k].0),
            CsvCell::Float(report.ci[k].1),
            CsvCell::Float(slope),
        ]);
    }
    sink.write("norris.csv", &csv.into_bytes())?;

    let fit: DecayFitReport = decay_exponent_fit(&report, 2.0);
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        provenance: Provenance,
        source: NorrisSource,
        beta: f64,
        beta_prime: Option<f64>,
        bound_warnings: Vec<String>,
        report: NorrisReport,
        fit: SlopeFit,
        requested_p: f64,
        verdict: sheetlab_core::norris::DecayVerdict,
    }
    sink.write_json(
        "norris.json",
        &Summary {
            provenance: provenance(cfg, &[]),
            source: cfg.norris_source,
            beta: cfg.beta,
            beta_prime: cfg.beta_prime,
            bound_warnings: report.warnings.clone(),
            fit: fit.fit.clone(),
            requested_p: fit.requested_p,
            verdict: fit.verdict,
            report,
        },
    )?;
    Ok(sink)
}

fn run_density(cfg: &RunConfig, mut sink: ArtifactSink) -> Result<ArtifactSink, RunError> {
    let (iz, jz, warnings) = snap_z(cfg);
    let samples = sample_endpoint::<f64>(&cfg.fields, &cfg.grid, &cfg.x0, (iz, jz), cfg.trials, cfg.seed)?;
    let rule = match &cfg.bandwidth {
        Some(h) => BandwidthRule::Fixed(h.clone()),
        None => BandwidthRule::Scott,
    };
    let box_override = match (&cfg.box_lo, &cfg.box_hi) {
        (Some(lo), Some(hi)) => Some((lo.clone(), hi.clone())),
        _ => None,
    };
    let estimate = kde(&samples, rule, box_override, cfg.resolution)?;

    let m = cfg.fields.m();
    let mut header: Vec<String> = (1..=m).map(|c| format!("x_{c}")).collect();
    header.push("density".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);
    for idx in 0..estimate.len() {
        let point = estimate.point(idx);
        let mut row: Vec<CsvCell> = point.into_iter().map(CsvCell::Float).collect();
        row.push(CsvCell::Float(estimate.values[idx]));
        csv.row(&row);
    }
    sink.write("density.csv", &csv.into_bytes())?;

    if cfg.dump_endpoints {
        let mut header: Vec<String> = vec!["trial".into()];
        header.extend((1..=m).map(|c| format!("x_{c}")));
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut csv = Csv::new(&header_refs);
        for t in 0..samples.trials() as usize {
            let mut row = vec![CsvCell::Int(t as i64)];
            row.extend(samples.row(t).iter().map(|&x| CsvCell::Float(x)));
            csv.row(&row);
        }
        sink.write("endpoints.csv", &csv.into_bytes())?;
    }

    // closed-form comparison when the coefficient family admits one
    let reference = gaussian_reference(&cfg.fields, &cfg.x0, cfg.grid.node(iz, jz)).ok();
    let sup_error = reference.as_ref().and_then(|r| {
        if r.singular {
            return None;
        }
        let mut worst = 0.0f64;
        for idx in 0..estimate.len() {
            let point = estimate.point(idx);
            let exact = r.density(&point)?;
            worst = worst.max((estimate.values[idx] - exact).abs());
        }
        Some(worst)
    });

    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        provenance: Provenance,
        z_node: (usize, usize),
        z_time: (f64, f64),
        trials: u64,
        mean: Vec<f64>,
        estimate: sheetlab_core::density::DensityEstimate,
        mass: f64,
        gaussian_reference_sup_error: Option<f64>,
    }
    let mass = estimate.mass();
    let mean = samples.mean();
    sink.write_json(
        "density.json",
        &Summary {
            provenance: provenance(cfg, &warnings),
            z_node: (iz, jz),
            z_time: cfg.grid.node(iz, jz),
            trials: cfg.trials,
            mean,
            mass,
            gaussian_reference_sup_error: sup_error,
            estimate,
        },
    )?;
    Ok(sink)
}

fn run_converge(cfg: &RunConfig, mut sink: ArtifactSink) -> Result<ArtifactSink, RunError> {
    let table: ConvergenceTable = refine_convergence(
        &cfg.fields,
        &cfg.x0,
        cfg.z,
        cfg.seed,
        cfg.base,
        cfg.levels,
        cfg.trials,
    )?;
    let mut csv = Csv::new(&["level", "cells_per_axis", "l2_diff_to_next", "ratio_to_next"]);
    for k in 0..table.levels {
        csv.row(&[
            CsvCell::Int(k as i64),
            CsvCell::Int(table.grid_sizes[k] as i64),
            CsvCell::Float(table.l2_diffs.get(k).copied().unwrap_or(f64::NAN)),
            CsvCell::Float(table.ratios.get(k).copied().unwrap_or(f64::NAN)),
        ]);
    }
    sink.write("converge.csv", &csv.into_bytes())?;

    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        provenance: Provenance,
        table: ConvergenceTable,
    }
    sink.write_json(
        "converge.json",
        &Summary { provenance: provenance(cfg, &[]), table },
    )?;
    Ok(sink)
}
