//! Sweep execution and report files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::adiabatic::{sd_sampling_report, AdiabaticError, ADIABATIC_HEADER};
use crate::analysis::{
    convergence_check, summarize, AnalysisError, OscillationSummary, Window, SUMMARY_HEADER,
};
use crate::bath::{BathError, SpectralDensity};
use crate::dynamics::{format_decimal, run_point, DynamicsError, Trajectory};
use crate::model::ModelError;
use crate::scenario::{ParseError, Scenario};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("g = {g}: {source}")]
    Point { g: f64, source: DynamicsError },
    #[error("g = {g}: {source}")]
    Analysis { g: f64, source: AnalysisError },
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Adiabatic(#[from] AdiabaticError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl RunError {
    /// Process exit status: 2 for configuration errors, 3 for convergence
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse(_) | RunError::Adiabatic(AdiabaticError::EmptyGrid) => 2,
            RunError::Point { source, .. } if is_convergence(source) => 3,
            RunError::Analysis { source, .. } => match source {
                AnalysisError::NotConverged(_) => 3,
                AnalysisError::Dynamics(d) if is_convergence(d) => 3,
                AnalysisError::Model(ModelError::NotConverged { .. }) => 3,
                _ => 1,
            },
            _ => 1,
        }
    }
}

fn is_convergence(e: &DynamicsError) -> bool {
    matches!(
        e,
        DynamicsError::Model(ModelError::NotConverged { .. }) | DynamicsError::TruncationTail { .. }
    )
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Bath spectral density, or `None` when `λ = 0`.
pub fn spectral_density(s: &Scenario) -> Result<Option<SpectralDensity>, BathError> {
    if s.bath.reorganisation == 0.0 {
        Ok(None)
    } else {
        SpectralDensity::from_bath(s.sd_kind, &s.bath).map(Some)
    }
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub g: f64,
    pub trajectory: Trajectory,
    pub summary: OscillationSummary,
    /// Max |Δp_site1| against the enlarged truncation, when checked.
    pub truncation_delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Rerun every point at `n_max + delta` and require agreement.
    pub convergence_delta: Option<usize>,
}

/// Run one coupling value of the scenario.
pub fn run_single(s: &Scenario, g: f64, convergence_delta: Option<usize>) -> Result<PointResult, RunError> {
    let p = s.model.with_coupling(g);
    let sd = spectral_density(s)?;
    let (trajectory, truncation_delta) = match convergence_delta {
        Some(delta) => {
            let report = convergence_check(&p, sd.as_ref(), &s.initial, s.schedule, s.evolve_options(), delta)
                .map_err(|source| RunError::Analysis { g, source })?;
            (report.base, Some(report.max_difference))
        }
        None => (
            run_point(&p, sd.as_ref(), &s.initial, s.schedule, s.evolve_options())
                .map_err(|source| RunError::Point { g, source })?,
            None,
        ),
    };
    let window = s.window.unwrap_or_else(|| Window::full(&trajectory));
    let summary = summarize(&trajectory, window).map_err(|source| RunError::Analysis { g, source })?;
    Ok(PointResult {
        g,
        trajectory,
        summary,
        truncation_delta,
    })
}

/// Run every sweep point on a worker pool; results keep sweep order.
pub fn run_sweep(s: &Scenario, opts: RunOptions) -> Result<Vec<PointResult>, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    pool.install(|| {
        s.couplings()
            .par_iter()
            .map(|&g| run_single(s, g, opts.convergence_delta))
            .collect()
    })
}

pub fn trajectory_file_name(g: f64) -> String {
    format!("traj_g{g}.csv")
}

fn summary_row(r: &PointResult) -> String {
    let s = &r.summary;
    format!(
        "{},{},{},{},{},{}",
        r.g,
        format_decimal(s.dominant_frequency),
        s.secondary_frequency.map(format_decimal).unwrap_or_default(),
        format_decimal(s.window_amplitude),
        format_decimal(s.steady_value),
        s.settled
    )
}

/// Run the scenario and write trajectories, `summary.csv` and `manifest`
/// into `out`.
pub fn run(s: &Scenario, out: &Path, opts: RunOptions) -> Result<Vec<PointResult>, RunError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let results = run_sweep(s, opts)?;
    for r in &results {
        let path = out.join(trajectory_file_name(r.g));
        let file = File::create(&path).map_err(io_err(&path))?;
        r.trajectory.write_csv(BufWriter::new(file)).map_err(io_err(&path))?;
    }

    let path = out.join("summary.csv");
    let mut text = format!("{SUMMARY_HEADER}\n");
    for r in &results {
        text.push_str(&summary_row(r));
        text.push('\n');
    }
    fs::write(&path, text).map_err(io_err(&path))?;

    let mut extra = vec![(
        "spectrum".to_string(),
        "converged (levels below n_max/2 stable to 1e-8 Omega at n_max+10)".to_string(),
    )];
    for r in &results {
        if let Some(d) = r.truncation_delta {
            extra.push((format!("truncation_delta_g{}", r.g), format!("{d:e}")));
        }
    }
    let path = out.join("manifest");
    fs::write(&path, s.manifest(&extra)).map_err(io_err(&path))?;
    Ok(results)
}

/// Write `adiabatic.csv` for the doublet levels `0..levels` over `g_grid`.
pub fn report_adiabatic(
    s: &Scenario,
    g_grid: &[f64],
    levels: usize,
    out: &Path,
) -> Result<PathBuf, RunError> {
    let sd = match spectral_density(s)? {
        Some(sd) => sd,
        None => SpectralDensity::new(s.sd_kind, 1.0, s.bath.peak_freq)?,
    };
    let n_list: Vec<usize> = (0..levels).collect();
    let rows = sd_sampling_report(&s.model, &sd, s.bath.temperature, &n_list, g_grid)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join("adiabatic.csv");
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "{ADIABATIC_HEADER}")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.g,
                r.n,
                format_decimal(r.frequency),
                format_decimal(r.weight),
                format_decimal(r.chi)
            )?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(&path))?;
    Ok(path)
}
