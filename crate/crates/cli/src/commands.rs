//! Implementations of the five subcommands. Each takes plain arguments so
//! the integration tests can call them in-process.

use crate::config::{ExperimentConfig, Method, Whitening};
use crate::manifest::{Manifest, ManifestDims};
use crate::mm;
use crate::sweep::{self, solve, SolveExtras};
use anyhow::{bail, Context, Result};
use gcca_core::identifiability::{
    check_necessary, check_theorem1, check_theorem2, intersection_dim, NecessaryCheck,
    RankMargin, Theorem1Check, Theorem2Check,
};
use gcca_core::mix_seed;
use gcca_core::model::{add_noise, synthesize, ViewMatrix};
use gcca_core::ModelDims;
use ndarray::Array2;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Noise stream id used by `synth --snr`; matches the first grid level of a
/// sweep so the two stay consistent.
const SYNTH_NOISE_STREAM: u64 = 9000;

/// Synthesizes a dataset from a config file and writes factors, views, and a
/// manifest into `out_dir`.
pub fn cmd_synth(
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
    snr_db: Option<f64>,
) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let (dims, mode) = config.resolve_dims()?;
    let base_seed = seed_override.unwrap_or(config.base_seed);

    let (model, clean) = synthesize(&dims, base_seed, mode).context("synthesizing model")?;
    let views = match snr_db {
        Some(snr) => {
            let seed = mix_seed(base_seed, SYNTH_NOISE_STREAM);
            add_noise(&clean, snr, seed).context("adding noise")?.0
        }
        None => clean,
    };

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let n = dims.n_views();
    let mut manifest = Manifest {
        dims: ManifestDims {
            n_entities: dims.n_entities,
            common_dim: dims.common_dim,
            individual_dims: dims.individual_dims.clone(),
            feature_dims: dims.feature_dims.clone(),
        },
        mode: config.mode,
        base_seed,
        snr_db,
        views: Vec::new(),
        common_factor: "m.mtx".to_string(),
        individual_factors: Vec::new(),
        mixing_factors: Vec::new(),
    };

    mm::write_dense(&out_dir.join("m.mtx"), model.m.view())?;
    for view in 0..n {
        let c_name = format!("c_{}.mtx", view + 1);
        let s_name = format!("s_{}.mtx", view + 1);
        let x_name = format!("view_{}.mtx", view + 1);
        mm::write_dense(&out_dir.join(&c_name), model.c[view].view())?;
        mm::write_dense(&out_dir.join(&s_name), model.s[view].view())?;
        mm::write_view(&out_dir.join(&x_name), &views.x[view])?;
        manifest.individual_factors.push(c_name);
        manifest.mixing_factors.push(s_name);
        manifest.views.push(x_name);
    }
    manifest.save(&out_dir.join("manifest.json"))?;
    println!(
        "wrote {n} views ({} x {:?}) and factors to {}",
        dims.n_entities,
        dims.feature_dims,
        out_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    method: String,
    n_views: usize,
    rank: usize,
    extra_ranks: Vec<usize>,
    runtime_ms: f64,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_spectrum: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    merged_spectrum: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    correlations: Option<Vec<f64>>,
}

/// Loads views, runs one method, and writes the estimate, the per-view maps,
/// and a machine-readable summary into `out_dir`.
pub fn cmd_run(
    view_paths: &[PathBuf],
    method: Method,
    rank: usize,
    extra_ranks: &[usize],
    whitening: Whitening,
    out_dir: &Path,
) -> Result<()> {
    if view_paths.is_empty() {
        bail!("no view files given");
    }
    if view_paths.len() != extra_ranks.len() {
        bail!(
            "{} view files but --extra-ranks lists {} entries",
            view_paths.len(),
            extra_ranks.len()
        );
    }
    if method == Method::Cca2 && view_paths.len() != 2 {
        bail!("cca2 requires exactly 2 views, got {}", view_paths.len());
    }
    let views = load_views(view_paths)?;

    let started = Instant::now();
    let output = solve(&views, method, rank, extra_ranks, whitening, true)?;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    mm::write_dense(&out_dir.join("m_hat.mtx"), output.estimate.basis().view())?;
    for (n, q) in output.q.iter().enumerate() {
        mm::write_dense(&out_dir.join(format!("q_{}.mtx", n + 1)), q.view())?;
    }

    let mut summary = RunSummary {
        method: method.name().to_string(),
        n_views: views.len(),
        rank,
        extra_ranks: extra_ranks.to_vec(),
        runtime_ms,
        warnings: output.warnings.clone(),
        gap_ratio: output.gap_ratio,
        theta_spectrum: None,
        merged_spectrum: None,
        eigenvalues: None,
        correlations: None,
    };
    match output.extras {
        SolveExtras::Racing {
            theta_spectrum,
            merged_spectrum,
        } => {
            summary.theta_spectrum = theta_spectrum;
            summary.merged_spectrum = merged_spectrum;
        }
        SolveExtras::Maxvar { eigenvalues } => summary.eigenvalues = Some(eigenvalues),
        SolveExtras::Cca { correlations } => summary.correlations = Some(correlations),
    }
    let text = serde_json::to_string_pretty(&summary).context("serializing summary")?;
    std::fs::write(out_dir.join("summary.json"), text + "\n")
        .with_context(|| format!("writing {}", out_dir.join("summary.json").display()))?;

    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "{}: wrote m_hat.mtx and {} projection maps to {}",
        method.name(),
        output.q.len(),
        out_dir.display()
    );
    Ok(())
}

/// Runs the full Monte-Carlo sweep described by a config file and writes the
/// result rows as CSV.
pub fn cmd_sweep(config_path: &Path, out_csv: &Path, threads: usize) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;
    let rows = pool.install(|| sweep::run_sweep(&config))?;
    sweep::write_rows(out_csv, &rows)?;
    let failures = rows.iter().filter(|r| r.angle.is_none()).count();
    println!("wrote {} rows to {}", rows.len(), out_csv.display());
    if failures > 0 {
        eprintln!("warning: {failures} cells failed; see the warnings column");
    }
    Ok(())
}

/// Aggregates a sweep CSV into per-cell plot data.
pub fn cmd_plotdata(in_csv: &Path, out_path: &Path) -> Result<()> {
    let rows = sweep::read_rows(in_csv)?;
    let plot = sweep::aggregate(&rows);
    sweep::write_plot_rows(out_path, &plot)?;
    println!(
        "aggregated {} rows into {} groups at {}",
        rows.len(),
        plot.len(),
        out_path.display()
    );
    Ok(())
}

/// Inputs to the identifiability report: explicit dimensions, view files,
/// factor files (`m c_1 … c_N`), and optional mixing files (`s_1 … s_N`).
pub struct CheckInputs {
    pub rank: usize,
    pub extra_ranks: Vec<usize>,
    pub entities: Option<usize>,
    pub features: Option<Vec<usize>>,
    pub views: Vec<PathBuf>,
    pub factors: Vec<PathBuf>,
    pub mixers: Vec<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct JsonMargin {
    rank: usize,
    smallest_retained: f64,
    threshold: f64,
}

impl From<&RankMargin> for JsonMargin {
    fn from(m: &RankMargin) -> Self {
        JsonMargin {
            rank: m.rank,
            smallest_retained: m.smallest_retained,
            threshold: m.threshold,
        }
    }
}

#[derive(Serialize)]
struct JsonNecessary {
    row_bound_ok: bool,
    col_bounds_ok: Vec<bool>,
    holds: bool,
}

#[derive(Serialize)]
struct JsonTheorem1 {
    z_dim: usize,
    holds: bool,
}

#[derive(Serialize)]
struct JsonTheorem2 {
    gamma_rank: usize,
    gamma_full_rank: bool,
    s_ranks: Vec<usize>,
    holds: bool,
    gamma_margin: JsonMargin,
    s_margins: Vec<JsonMargin>,
}

#[derive(Serialize)]
struct JsonReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    necessary: Option<JsonNecessary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theorem1: Option<JsonTheorem1>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theorem2: Option<JsonTheorem2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intersection_dim: Option<usize>,
}

/// Runs every identifiability check the inputs allow and prints a report;
/// `--out` additionally writes it as JSON.
pub fn cmd_check(inputs: &CheckInputs) -> Result<()> {
    let r = inputs.rank;
    let l = &inputs.extra_ranks;
    let n = l.len();
    if n < 2 {
        bail!("--extra-ranks needs at least 2 entries (one per view)");
    }

    let mut theorem1: Option<Theorem1Check> = None;
    let mut theorem2: Option<Theorem2Check> = None;
    let mut inter: Option<usize> = None;

    // factor route: m.mtx c_1.mtx … c_N.mtx (+ optional s_1.mtx … s_N.mtx)
    let mut factor_entities = None;
    let mut factor_features = None;
    if !inputs.factors.is_empty() {
        if inputs.factors.len() != n + 1 {
            bail!(
                "--factors expects {} files (m plus one per view), got {}",
                n + 1,
                inputs.factors.len()
            );
        }
        let m = mm::read_dense(&inputs.factors[0])?;
        if m.ncols() != r {
            bail!(
                "{}: common factor has {} columns, --rank says {r}",
                inputs.factors[0].display(),
                m.ncols()
            );
        }
        let mut c = Vec::with_capacity(n);
        for (idx, path) in inputs.factors[1..].iter().enumerate() {
            let ci = mm::read_dense(path)?;
            if ci.nrows() != m.nrows() {
                bail!(
                    "{}: {} rows, common factor has {}",
                    path.display(),
                    ci.nrows(),
                    m.nrows()
                );
            }
            if ci.ncols() != l[idx] {
                bail!(
                    "{}: {} columns, --extra-ranks says {}",
                    path.display(),
                    ci.ncols(),
                    l[idx]
                );
            }
            c.push(ci);
        }
        let s = load_mixers(inputs, r)?;
        theorem1 = Some(check_theorem1(&m, &c, &s, r)?);
        theorem2 = Some(check_theorem2(&m, &c, &s)?);
        factor_entities = Some(m.nrows());
        factor_features = Some(s.iter().map(Array2::nrows).collect::<Vec<_>>());
    }

    // view route: intersection of the actual ranges
    let mut view_entities = None;
    let mut view_features = None;
    if !inputs.views.is_empty() {
        if inputs.views.len() != n {
            bail!(
                "{} view files but --extra-ranks lists {} entries",
                inputs.views.len(),
                n
            );
        }
        let views = load_views(&inputs.views)?;
        let dense: Vec<Array2<f64>> = views.iter().map(ViewMatrix::to_dense).collect();
        inter = Some(intersection_dim(&dense)?);
        view_entities = Some(dense[0].nrows());
        view_features = Some(dense.iter().map(Array2::ncols).collect::<Vec<_>>());
    }

    // necessary bounds run on the best dimension information available
    let entities = inputs.entities.or(view_entities).or(factor_entities);
    let features = inputs
        .features
        .clone()
        .or(view_features)
        .or(factor_features)
        .or_else(|| entities.map(|_| l.iter().map(|&ln| r + ln).collect()));
    let necessary = match entities {
        Some(i) => {
            let dims = ModelDims::new(i, r, l.clone(), features.unwrap())
                .context("assembling dims for the necessary bounds")?;
            Some(check_necessary(&dims))
        }
        None => bail!("nothing to check: give --entities, --views, or --factors"),
    };

    print_report(r, necessary.as_ref(), theorem1.as_ref(), theorem2.as_ref(), inter);

    if let Some(out) = &inputs.out {
        let report = JsonReport {
            necessary: necessary.as_ref().map(|c| JsonNecessary {
                row_bound_ok: c.row_bound_ok,
                col_bounds_ok: c.col_bounds_ok.clone(),
                holds: c.holds(),
            }),
            theorem1: theorem1.as_ref().map(|c| JsonTheorem1 {
                z_dim: c.z_dim,
                holds: c.holds,
            }),
            theorem2: theorem2.as_ref().map(|c| JsonTheorem2 {
                gamma_rank: c.gamma_rank,
                gamma_full_rank: c.gamma_full_rank,
                s_ranks: c.s_ranks.clone(),
                holds: c.holds,
                gamma_margin: JsonMargin::from(&c.gamma_margin),
                s_margins: c.s_margins.iter().map(JsonMargin::from).collect(),
            }),
            intersection_dim: inter,
        };
        let text = serde_json::to_string_pretty(&report).context("serializing report")?;
        std::fs::write(out, text + "\n")
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn load_mixers(inputs: &CheckInputs, r: usize) -> Result<Vec<Array2<f64>>> {
    let n = inputs.extra_ranks.len();
    if inputs.mixers.is_empty() {
        // identity mixing: views equal the factor blocks themselves
        return Ok(inputs
            .extra_ranks
            .iter()
            .map(|&ln| Array2::eye(r + ln))
            .collect());
    }
    if inputs.mixers.len() != n {
        bail!(
            "--mixers expects {} files (one per view), got {}",
            n,
            inputs.mixers.len()
        );
    }
    let mut s = Vec::with_capacity(n);
    for (idx, path) in inputs.mixers.iter().enumerate() {
        let si = mm::read_dense(path)?;
        let expected = r + inputs.extra_ranks[idx];
        if si.ncols() != expected {
            bail!(
                "{}: {} columns, expected R + L_{} = {expected}",
                path.display(),
                si.ncols(),
                idx + 1
            );
        }
        s.push(si);
    }
    Ok(s)
}

fn print_report(
    r: usize,
    necessary: Option<&NecessaryCheck>,
    theorem1: Option<&Theorem1Check>,
    theorem2: Option<&Theorem2Check>,
    inter: Option<usize>,
) {
    fn verdict(ok: bool) -> &'static str {
        if ok {
            "pass"
        } else {
            "FAIL"
        }
    }
    if let Some(c) = necessary {
        println!("necessary bounds: {}", verdict(c.holds()));
        println!("  row bound (entity count vs total rank): {}", verdict(c.row_bound_ok));
        for (idx, ok) in c.col_bounds_ok.iter().enumerate() {
            println!("  view {}: feature count vs signal rank: {}", idx + 1, verdict(*ok));
        }
    }
    if let Some(c) = theorem1 {
        println!(
            "sufficient condition, kernel form (theorem 1): {} (kernel dimension {} vs R = {r})",
            verdict(c.holds),
            c.z_dim
        );
    }
    if let Some(c) = theorem2 {
        println!(
            "sufficient condition, staircase form (theorem 2): {} (staircase rank {}, full column rank: {}, retained margin {:.3e})",
            verdict(c.holds),
            c.gamma_rank,
            if c.gamma_full_rank { "yes" } else { "no" },
            c.gamma_margin.smallest_retained
        );
        for (idx, (rank, margin)) in c.s_ranks.iter().zip(&c.s_margins).enumerate() {
            println!(
                "  mixing matrix {}: rank {} (retained margin {:.3e})",
                idx + 1,
                rank,
                margin.smallest_retained
            );
        }
    }
    if let Some(d) = inter {
        println!("intersection dimension of the view ranges: {d} (R = {r})");
    }
}

/// Reads view files and validates that they share a row count.
fn load_views(paths: &[PathBuf]) -> Result<Vec<ViewMatrix>> {
    let mut views = Vec::with_capacity(paths.len());
    for (idx, path) in paths.iter().enumerate() {
        let v = mm::read_matrix(path)?;
        if let Some(first) = views.first() {
            let first: &ViewMatrix = first;
            if v.nrows() != first.nrows() {
                bail!(
                    "view {} ({}): {} rows, view 1 has {}",
                    idx + 1,
                    path.display(),
                    v.nrows(),
                    first.nrows()
                );
            }
        }
        views.push(v);
    }
    Ok(views)
}
