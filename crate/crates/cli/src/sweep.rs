//! Monte-Carlo SNR sweeps: cell execution, result rows, CSV serialization,
//! and the plot-data aggregation.
//!
//! Seed discipline: trial `t` synthesizes from `mix_seed(base_seed, t)`, and
//! the noise drawn for SNR grid index `s` uses
//! `mix_seed(mix_seed(base_seed, t), 9000 + s)`. Every cell of a sweep is a
//! pure function of the config, so reruns reproduce every angle bit for bit
//! regardless of thread count.

use crate::config::{ExperimentConfig, Method, Whitening};
use anyhow::{anyhow, bail, Context, Result};
use gcca_core::baselines::{cca_two_view, maxvar};
use gcca_core::linalg::{range_basis, subspace_angle, RankPolicy, SubspaceBasis};
use gcca_core::model::{add_noise, synthesize, ViewMatrix};
use gcca_core::racing::{racing, RacingConfig};
use gcca_core::mix_seed;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// Offset added to the SNR grid index when deriving per-level noise seeds;
/// keeps the stream ids clear of the ones synthesis uses internally.
const NOISE_STREAM_BASE: u64 = 9000;

/// One sweep cell: a (method, view count, SNR, trial) measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub n_views: usize,
    pub snr_db: f64,
    pub trial: usize,
    /// Recovery angle in [0, 1]; empty when the cell failed (see warnings).
    pub angle: Option<f64>,
    pub runtime_ms: f64,
    /// Spectral-gap diagnostic; present for racing cells only.
    pub gap_ratio: Option<f64>,
    /// Semicolon-joined warning list; empty when the cell was clean.
    pub warnings: String,
}

/// Everything a solver invocation produces beyond the estimate itself.
pub struct SolveOutput {
    pub estimate: SubspaceBasis,
    pub q: Vec<Array2<f64>>,
    pub gap_ratio: Option<f64>,
    pub warnings: Vec<String>,
    pub extras: SolveExtras,
}

/// Method-specific diagnostics for machine-readable summaries.
pub enum SolveExtras {
    Racing {
        theta_spectrum: Option<Vec<f64>>,
        merged_spectrum: Option<Vec<f64>>,
    },
    Maxvar {
        eigenvalues: Vec<f64>,
    },
    Cca {
        correlations: Vec<f64>,
    },
}

/// Runs a single method on the given views. `individual_dims` must have one
/// entry per view; for the baselines, `whitening` selects between
/// signal-rank (`R + L_n`) and full-rank whitening.
pub fn solve(
    views: &[ViewMatrix],
    method: Method,
    r: usize,
    individual_dims: &[usize],
    whitening: Whitening,
    want_spectra: bool,
) -> Result<SolveOutput> {
    if views.len() != individual_dims.len() {
        bail!(
            "{} views but {} individual ranks",
            views.len(),
            individual_dims.len()
        );
    }
    match method {
        Method::Racing => {
            let mut config = RacingConfig::new(r, individual_dims.to_vec());
            config.report_spectra = want_spectra;
            let result = racing(views, &config)?;
            let (theta, merged) = match result.spectra {
                Some(s) => (Some(s.theta.to_vec()), Some(s.merged.to_vec())),
                None => (None, None),
            };
            Ok(SolveOutput {
                estimate: result.m_hat,
                q: result.q,
                gap_ratio: Some(result.gap_ratio),
                warnings: result.warnings,
                extras: SolveExtras::Racing {
                    theta_spectrum: theta,
                    merged_spectrum: merged,
                },
            })
        }
        Method::Maxvar => {
            let signal_ranks: Vec<usize> = views
                .iter()
                .zip(individual_dims)
                .map(|(v, &l)| match whitening {
                    Whitening::Signal => r + l,
                    Whitening::Full => v.nrows().min(v.ncols()),
                })
                .collect();
            let result = maxvar(views, r, &signal_ranks)?;
            Ok(SolveOutput {
                estimate: result.m_hat,
                q: result.q,
                gap_ratio: None,
                warnings: Vec::new(),
                extras: SolveExtras::Maxvar {
                    eigenvalues: result.eigenvalues.to_vec(),
                },
            })
        }
        Method::Cca2 => {
            if views.len() != 2 {
                bail!("cca2 requires exactly 2 views, got {}", views.len());
            }
            let x1 = views[0].to_dense();
            let x2 = views[1].to_dense();
            let signal_ranks = match whitening {
                Whitening::Signal => Some((r + individual_dims[0], r + individual_dims[1])),
                Whitening::Full => None,
            };
            let result = cca_two_view(x1.view(), x2.view(), r, signal_ranks)?;
            let projected = x1.dot(&result.q1);
            let estimate = range_basis(projected.view(), RankPolicy::Relative)?;
            Ok(SolveOutput {
                estimate,
                q: vec![result.q1, result.q2],
                gap_ratio: None,
                warnings: Vec::new(),
                extras: SolveExtras::Cca {
                    correlations: result.correlations.to_vec(),
                },
            })
        }
    }
}

/// Executes every cell of the sweep. Rows come back in the canonical order
/// (method, n_views, snr_db, trial) independent of parallelism.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let (dims, mode) = config.resolve_dims()?;

    let jobs: Vec<(usize, usize)> = (0..config.trials)
        .flat_map(|trial| (0..config.snr_grid_db.len()).map(move |s| (trial, s)))
        .collect();

    let mut rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|&(trial, snr_idx)| run_job(config, &dims, mode, trial, snr_idx))
        .collect::<Result<Vec<Vec<ResultRow>>>>()?
        .into_iter()
        .flatten()
        .collect();

    rows.sort_by(|a, b| {
        (&a.method, a.n_views)
            .cmp(&(&b.method, b.n_views))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(rows)
}

/// All cells sharing one (trial, SNR level) pair: one synthesis, one noise
/// draw, then every (method, subset) combination on the same data.
fn run_job(
    config: &ExperimentConfig,
    dims: &gcca_core::ModelDims,
    mode: gcca_core::SynthesisMode,
    trial: usize,
    snr_idx: usize,
) -> Result<Vec<ResultRow>> {
    let snr_db = config.snr_grid_db[snr_idx];
    let trial_seed = mix_seed(config.base_seed, trial as u64);
    let (model, clean) = synthesize(dims, trial_seed, mode)
        .with_context(|| format!("synthesizing trial {trial}"))?;
    let noise_seed = mix_seed(trial_seed, NOISE_STREAM_BASE + snr_idx as u64);
    let (views, _) = add_noise(&clean, snr_db, noise_seed)
        .with_context(|| format!("adding noise at {snr_db} dB"))?;
    let truth = model
        .common_basis()
        .with_context(|| format!("orthonormalizing ground truth, trial {trial}"))?;

    let r = dims.common_dim;
    let mut rows = Vec::new();
    for &subset in &config.view_subsets {
        let sub_views = &views.x[0..subset];
        let sub_dims = &dims.individual_dims[0..subset];
        for &method in &config.methods {
            if method == Method::Cca2 && subset != 2 {
                continue;
            }
            let started = Instant::now();
            let outcome = solve(
                sub_views,
                method,
                r,
                sub_dims,
                config.maxvar_whitening,
                false,
            )
            .and_then(|out| {
                let angle = subspace_angle(&truth, &out.estimate)
                    .map_err(|e| anyhow!("comparing against ground truth: {e}"))?;
                Ok((angle, out))
            });
            let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
            let row = match outcome {
                Ok((angle, out)) => ResultRow {
                    method: method.name().to_string(),
                    n_views: subset,
                    snr_db,
                    trial,
                    angle: Some(angle),
                    runtime_ms,
                    gap_ratio: out.gap_ratio,
                    warnings: out.warnings.join("; "),
                },
                Err(e) => ResultRow {
                    method: method.name().to_string(),
                    n_views: subset,
                    snr_db,
                    trial,
                    angle: None,
                    runtime_ms,
                    gap_ratio: None,
                    warnings: format!("cell failed: {e:#}"),
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with the fixed header
/// `method,n_views,snr_db,trial,angle,runtime_ms,gap_ratio,warnings`.
pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        writer.write_record([
            "method", "n_views", "snr_db", "trial", "angle", "runtime_ms", "gap_ratio",
            "warnings",
        ])?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().with_context(|| format!("writing {}", path.display()))
}

/// Reads rows back, reporting the CSV line number on malformed input.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: ResultRow = record.with_context(|| format!("parsing {}", path.display()))?;
        rows.push(row);
    }
    Ok(rows)
}

/// One aggregated plot point: statistics of the recovery angle over all
/// successful trials of a (method, n_views, snr_db) cell group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlotRow {
    pub method: String,
    pub n_views: usize,
    pub snr_db: f64,
    pub count: usize,
    pub mean_angle: f64,
    pub median_angle: f64,
    pub stddev_angle: f64,
}

/// Groups rows by (method, n_views, snr_db) and computes mean, median, and
/// sample standard deviation of the angle. Cells that failed (no angle) are
/// excluded; `count` is the number of angles aggregated.
pub fn aggregate(rows: &[ResultRow]) -> Vec<PlotRow> {
    let mut groups: Vec<((String, usize, f64), Vec<f64>)> = Vec::new();
    for row in rows {
        let Some(angle) = row.angle else { continue };
        let key = (row.method.clone(), row.n_views, row.snr_db);
        match groups.iter_mut().find(|(k, _)| {
            k.0 == key.0 && k.1 == key.1 && k.2.total_cmp(&key.2).is_eq()
        }) {
            Some((_, angles)) => angles.push(angle),
            None => groups.push((key, vec![angle])),
        }
    }
    groups.sort_by(|(a, _), (b, _)| {
        (&a.0, a.1)
            .cmp(&(&b.0, b.1))
            .then(a.2.total_cmp(&b.2))
    });
    groups
        .into_iter()
        .map(|((method, n_views, snr_db), angles)| {
            let count = angles.len();
            PlotRow {
                method,
                n_views,
                snr_db,
                count,
                mean_angle: mean(&angles),
                median_angle: median(angles.clone()),
                stddev_angle: stddev(&angles),
            }
        })
        .collect()
}

/// Writes aggregated plot data as CSV.
pub fn write_plot_rows(path: &Path, rows: &[PlotRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        writer.write_record([
            "method", "n_views", "snr_db", "count", "mean_angle", "median_angle",
            "stddev_angle",
        ])?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().with_context(|| format!("writing {}", path.display()))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median with the even-count convention of averaging the two middle values.
pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "median of an empty set");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}
