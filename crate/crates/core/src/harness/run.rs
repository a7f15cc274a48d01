//! Experiment execution.
//!
//! One entry point, [`run_experiment`], dispatches on the configured mode:
//!
//! * `analyze` prints the closed-form story of the configured signal: its
//!   maxima, the structural hypotheses, admissible spike heights, and the
//!   leading-order rate of every branch at every site.
//! * `eig` builds the configured initial field and prints the leading
//!   spectrum of the linearization about it.
//! * `simulate` integrates one species, writing snapshots, per-step
//!   diagnostics, and a prediction-versus-measurement comparison.
//! * `compete` integrates two species sharing one resource.
//! * `sweep` fans `simulate` out over a parameter grid on a bounded worker
//!   pool; each job owns its subdirectory, and the coordinator alone writes
//!   the cross-job summary, so reruns are byte-identical regardless of the
//!   worker count.
//!
//! File-writing modes leave a `MANIFEST.txt` naming every artifact; when a
//! run dies halfway the manifest's `status:` line says so, and everything
//! written before the failure is already on disk (files are written whole,
//! never appended).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::asymptotics::{build_pattern_scaled, half_pow, spike_heights, theta_max};
use crate::potential::{find_maxima, verify_hypotheses, CriticalPoint};
use crate::solver::{
    linearized_leading_eigen, measure_spikes, run_transient, run_two_species, Grid, SolverError,
    Termination, Trajectory,
};
use crate::stability::h_eval;

use super::config::{
    fmt_value, serialize_config, ConfigIssue, ExperimentConfig, FieldTerm, Mode, SweepParameter,
};
use super::csvio::{diagnostics_csv, fmt_sig, snapshot_files, snapshot_files_pair};
use super::report::{branch_name, comparison_report};

/// Default seed density per axis for the critical-point search.
pub const DEFAULT_SEED_GRID: usize = 32;
/// Modes printed by the `eig` table.
const EIG_TABLE_COUNT: usize = 4;
/// Sample density for the structural-hypothesis check in analyze mode.
const HYPOTHESIS_SAMPLES: usize = 128;

/// Anything that can go wrong after a configuration is accepted, plus the
/// configuration problems themselves (so one error type reaches the caller).
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration invalid ({} problem{})", .0.len(), if .0.len() == 1 { "" } else { "s" })]
    Config(Vec<ConfigIssue>),
    #[error("i/o on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 2 for runtime ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

fn io_error(path: &Path, error: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), message: error.to_string() }
}

/// Command-line knobs that accompany a configuration.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Output root; overrides the configuration's `[output] dir`.
    pub out_dir: Option<PathBuf>,
    /// Worker pool size for sweep mode; 0 picks the machine's parallelism.
    pub jobs: usize,
    /// Seeds per axis for the critical-point search.
    pub seed_grid: usize,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions { out_dir: None, jobs: 0, seed_grid: DEFAULT_SEED_GRID }
    }
}

/// Execute the experiment. Human-readable progress goes to `log`; artifacts
/// go to the resolved output directory (file-writing modes only).
pub fn run_experiment(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    log: &mut String,
) -> Result<(), HarnessError> {
    assert!(opts.seed_grid >= 8, "seed grid must be at least 8");
    match cfg.mode {
        Mode::Analyze => analyze(cfg, opts, log),
        Mode::Eig => eig(cfg, opts, log),
        Mode::Simulate => simulate_into(cfg, opts, &output_root(cfg, opts), log).map(|_| ()),
        Mode::Compete => compete_into(cfg, opts, &output_root(cfg, opts), log),
        Mode::Sweep => sweep(cfg, opts, &output_root(cfg, opts), log),
    }
}

fn output_root(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

// ---------------------------------------------------------------------------
// Field assembly.
// ---------------------------------------------------------------------------

/// Detected signal maxima, descending by value. Owned copies, in the order
/// every consumer (patterns, comparisons, measurements) indexes them.
fn detect_maxima(cfg: &ExperimentConfig, seed_grid: usize) -> Vec<CriticalPoint> {
    find_maxima(&cfg.potential, &cfg.domain.domain(), seed_grid)
        .maxima()
        .into_iter()
        .cloned()
        .collect()
}

fn site_plateau(cfg: &ExperimentConfig, location: &[f64]) -> f64 {
    cfg.physics
        .resource
        .as_ref()
        .map(|r| r.value(&cfg.potential, location))
        .unwrap_or(1.0)
}

/// Evaluate a template sum at every cell center.
fn build_field(
    cfg: &ExperimentConfig,
    grid: &Grid,
    terms: &[FieldTerm],
    seed_grid: usize,
) -> Result<Vec<f64>, HarnessError> {
    let mut field = vec![0.0; grid.cells()];
    for term in terms {
        match term {
            FieldTerm::Constant { value } => {
                for cell in field.iter_mut() {
                    *cell += value;
                }
            }
            FieldTerm::Cosine { amplitude, wavenumber, phase } => {
                for idx in 0..grid.cells() {
                    let x = grid.cell_center(idx);
                    let mut value = amplitude * (wavenumber * x[0] + phase).cos();
                    if x.len() == 2 {
                        value *= (wavenumber * x[1] + phase).cos();
                    }
                    field[idx] += value;
                }
            }
            FieldTerm::GaussianBump { height, rate, center } => {
                for idx in 0..grid.cells() {
                    let x = grid.cell_center(idx);
                    let r2: f64 =
                        x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                    field[idx] += height * (-rate * r2).exp();
                }
            }
            FieldTerm::Chirp { amplitude, rate } => {
                for idx in 0..grid.cells() {
                    let x = grid.cell_center(idx);
                    let r2: f64 = x.iter().map(|a| a * a).sum();
                    field[idx] += amplitude * (rate * r2).cos();
                }
            }
            FieldTerm::Pattern { branches } => {
                let maxima = detect_maxima(cfg, seed_grid);
                if maxima.len() != branches.len() {
                    return Err(HarnessError::Runtime(format!(
                        "pattern template lists {} branch(es) but the signal has {} maxima",
                        branches.len(),
                        maxima.len()
                    )));
                }
                let plateaus: Vec<f64> =
                    maxima.iter().map(|m| site_plateau(cfg, &m.location)).collect();
                let pattern = build_pattern_scaled(
                    &maxima,
                    &plateaus,
                    branches,
                    cfg.physics.chi,
                    cfg.physics.theta,
                    grid.dim(),
                )
                .map_err(|e| HarnessError::Runtime(format!("pattern template: {e}")))?;
                for idx in 0..grid.cells() {
                    let x = grid.cell_center(idx);
                    field[idx] += crate::asymptotics::evaluate_pattern(&pattern, &x);
                }
            }
        }
    }
    Ok(field)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn analyze(cfg: &ExperimentConfig, opts: &RunOptions, log: &mut String) -> Result<(), HarnessError> {
    let domain = cfg.domain.domain();
    let n = cfg.domain.dim();
    let theta = cfg.physics.theta;
    let alpha0 = 1.0 / half_pow(std::f64::consts::PI, n);

    let search = find_maxima(&cfg.potential, &domain, opts.seed_grid);
    let maxima = search.maxima();

    let _ = writeln!(log, "signal analysis ({n}-dimensional, seed grid {})", opts.seed_grid);
    let _ = writeln!(
        log,
        "critical points: {} total, {} non-degenerate maxima, {} unconverged seeds",
        search.points.len(),
        maxima.len(),
        search.unconverged.len()
    );
    for (i, point) in maxima.iter().enumerate() {
        let _ = writeln!(
            log,
            "  site {i}: x = {}, A = {}, curvatures = {}",
            point_text(&point.location),
            fmt_sig(point.value),
            point_text(&point.curvatures),
        );
    }

    let hypotheses = verify_hypotheses(&cfg.potential, &domain, HYPOTHESIS_SAMPLES);
    let _ = writeln!(log, "hypotheses (sampled at {HYPOTHESIS_SAMPLES} per axis):");
    let _ = writeln!(
        log,
        "  H1 (critical points are non-degenerate maxima or have positive Laplacian): {}",
        if hypotheses.h1_ok { "satisfied" } else { "violated" }
    );
    let _ = writeln!(
        log,
        "  H2 (signal drifts inward across the whole boundary): {}",
        if hypotheses.h2_ok { "satisfied" } else { "violated" }
    );
    let _ = writeln!(log, "  Laplacian bound M = {}", fmt_sig(hypotheses.a2_bound));
    for (location, what) in &hypotheses.violations {
        let _ = writeln!(log, "  violation at x = {}: {what}", point_text(location));
    }

    let _ = writeln!(log, "spike branches (theta = {}):", fmt_value(theta));
    for (i, point) in maxima.iter().enumerate() {
        let plateau = site_plateau(cfg, &point.location);
        let bound = theta_max(n, plateau);
        let _ = writeln!(
            log,
            "  site {i}: plateau = {}, theta_max = {}, admissible = {}",
            fmt_sig(plateau),
            fmt_sig(bound),
            theta < bound
        );
        if !(plateau > 0.0) || theta >= bound {
            continue;
        }
        let pair = spike_heights(n, theta, plateau);
        for (name, height) in [("tall", pair.c01), ("short", pair.c02), ("off", 0.0)] {
            let (_, h_prime) = h_eval(n, theta, plateau, height);
            let lambda = alpha0 * h_prime;
            let verdict = if lambda > 0.0 { "unstable" } else { "stable" };
            let _ = writeln!(
                log,
                "    {name:>5}: height = {}, lambda = {}, {verdict}",
                fmt_sig(height),
                fmt_sig(lambda),
            );
        }
    }
    Ok(())
}

fn point_text(point: &[f64]) -> String {
    if point.len() == 1 {
        fmt_sig(point[0])
    } else {
        let coords: Vec<String> = point.iter().map(|c| fmt_sig(*c)).collect();
        format!("({})", coords.join(", "))
    }
}

// ---------------------------------------------------------------------------
// eig
// ---------------------------------------------------------------------------

fn eig(cfg: &ExperimentConfig, opts: &RunOptions, log: &mut String) -> Result<(), HarnessError> {
    let grid = cfg.domain.grid();
    let initial = cfg.initial.as_ref().expect("validated: eig has [initial]");
    let field = build_field(cfg, &grid, &initial.u, opts.seed_grid)?;
    let reaction = cfg.physics.reaction_spec();
    let pairs = linearized_leading_eigen(
        &grid,
        &cfg.potential,
        cfg.physics.chi,
        cfg.physics.diffusion,
        &reaction,
        &field,
        EIG_TABLE_COUNT,
    )?;

    let _ = writeln!(log, "leading spectrum about the configured field ({} modes):", pairs.len());
    let _ = writeln!(log, "  #  lambda                    peak at");
    for (i, pair) in pairs.iter().enumerate() {
        let peak = pair
            .vector
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(idx, _)| idx)
            .unwrap_or(0);
        let _ = writeln!(
            log,
            "  {i}  {:<24}  {}",
            fmt_sig(pair.value),
            point_text(&grid.cell_center(peak)),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// What one transient run contributes to a sweep summary.
struct SimSummary {
    termination: Termination,
    /// Height and half-width of the tallest measured spike, if any site is on.
    tallest: Option<(f64, f64)>,
    leading_lambda: Option<f64>,
}

fn termination_text(t: Termination) -> &'static str {
    match t {
        Termination::Steady => "steady",
        Termination::TimeLimit => "time-limit",
        Termination::BlowUp => "blow-up",
    }
}

/// Manifest under construction: artifact names with notes, then a status.
struct Manifest {
    root: PathBuf,
    lines: Vec<String>,
}

impl Manifest {
    fn new(root: &Path) -> Manifest {
        Manifest { root: root.to_path_buf(), lines: Vec::new() }
    }

    fn record(&mut self, name: &str, note: &str) {
        self.lines.push(format!("{name}: {note}"));
    }

    /// Write the manifest with its final status line.
    fn finish(mut self, status: &str) -> Result<(), HarnessError> {
        self.lines.push(format!("status: {status}"));
        let path = self.root.join("MANIFEST.txt");
        fs::write(&path, self.lines.join("\n") + "\n").map_err(|e| io_error(&path, e))
    }
}

/// Write one artifact whole and record it.
fn write_artifact(
    manifest: &mut Manifest,
    name: &str,
    contents: &str,
    note: &str,
) -> Result<(), HarnessError> {
    let path = manifest.root.join(name);
    fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
    manifest.record(name, note);
    Ok(())
}

/// Run simulate mode into `root`, returning the summary a sweep would want.
fn simulate_into(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    root: &Path,
    log: &mut String,
) -> Result<SimSummary, HarnessError> {
    fs::create_dir_all(root).map_err(|e| io_error(root, e))?;
    let mut manifest = Manifest::new(root);
    let result = simulate_body(cfg, opts, &mut manifest, log);
    match &result {
        Ok(_) => manifest.finish("complete")?,
        Err(error) => {
            let status = format!("failed: {error}");
            manifest.finish(&status)?;
        }
    }
    result
}

fn simulate_body(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    manifest: &mut Manifest,
    log: &mut String,
) -> Result<SimSummary, HarnessError> {
    write_artifact(manifest, "config.cfg", &serialize_config(cfg), "resolved configuration")?;

    let grid = cfg.domain.grid();
    let initial = cfg.initial.as_ref().expect("validated: simulate has [initial]");
    let field = build_field(cfg, &grid, &initial.u, opts.seed_grid)?;
    let reaction = cfg.physics.reaction_spec();
    let schedule = cfg.schedule.as_ref().expect("validated: simulate has [schedule]").schedule();

    let trajectory = run_transient(
        &grid,
        &cfg.potential,
        cfg.physics.chi,
        cfg.physics.diffusion,
        &reaction,
        &field,
        &schedule,
    )?;

    write_trajectory(manifest, &grid, &trajectory, "diagnostics.csv")?;

    let maxima = detect_maxima(cfg, opts.seed_grid);
    let report = comparison_report(
        &grid,
        &cfg.potential,
        cfg.physics.chi,
        cfg.physics.diffusion,
        &reaction,
        cfg.physics.resource.as_ref(),
        &trajectory.final_field,
        &maxima,
    )?;
    write_artifact(
        manifest,
        "comparison.csv",
        &report.to_csv(grid.dim()),
        &format!("{} site(s) against predictions", report.rows.len()),
    )?;

    let _ = writeln!(
        log,
        "simulate: {} at t = {}, {} accepted steps",
        termination_text(trajectory.termination),
        fmt_sig(trajectory.final_time),
        trajectory.diagnostics.len().saturating_sub(1),
    );
    for row in &report.rows {
        let _ = writeln!(
            log,
            "  site x = {}: {} (height {}, predicted {}, lambda {})",
            point_text(&row.site),
            branch_name(row.observed_branch),
            fmt_sig(row.measured_height),
            fmt_sig(row.predicted_height),
            fmt_sig(row.measured_lambda),
        );
    }

    // Tallest live site, re-measured so the summary carries a half-width.
    let measurements = measure_spikes(&grid, &trajectory.final_field, &maxima);
    let tallest = measurements
        .iter()
        .filter(|m| !m.off)
        .max_by(|a, b| a.height.total_cmp(&b.height))
        .map(|m| (m.height, m.half_width));

    Ok(SimSummary {
        termination: trajectory.termination,
        tallest,
        leading_lambda: report.leading_lambda(),
    })
}

/// Write snapshots and diagnostics for one trajectory.
fn write_trajectory(
    manifest: &mut Manifest,
    grid: &Grid,
    trajectory: &Trajectory,
    diagnostics_name: &str,
) -> Result<(), HarnessError> {
    for (name, contents, time) in snapshot_files(grid, &trajectory.snapshots) {
        write_artifact(manifest, &name, &contents, &format!("t = {}", fmt_sig(time)))?;
    }
    write_artifact(
        manifest,
        diagnostics_name,
        &diagnostics_csv(&trajectory.diagnostics),
        &format!("{} accepted steps", trajectory.diagnostics.len().saturating_sub(1)),
    )
}

// ---------------------------------------------------------------------------
// compete
// ---------------------------------------------------------------------------

fn compete_into(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    root: &Path,
    log: &mut String,
) -> Result<(), HarnessError> {
    fs::create_dir_all(root).map_err(|e| io_error(root, e))?;
    let mut manifest = Manifest::new(root);
    let result = compete_body(cfg, opts, &mut manifest, log);
    match &result {
        Ok(()) => manifest.finish("complete")?,
        Err(error) => {
            let status = format!("failed: {error}");
            manifest.finish(&status)?;
        }
    }
    result
}

fn compete_body(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    manifest: &mut Manifest,
    log: &mut String,
) -> Result<(), HarnessError> {
    write_artifact(manifest, "config.cfg", &serialize_config(cfg), "resolved configuration")?;

    let grid = cfg.domain.grid();
    let initial = cfg.initial.as_ref().expect("validated: compete has [initial]");
    let u0 = build_field(cfg, &grid, &initial.u, opts.seed_grid)?;
    let v0 = build_field(
        cfg,
        &grid,
        initial.v.as_ref().expect("validated: compete has v"),
        opts.seed_grid,
    )?;
    let reaction = cfg.physics.reaction_spec();
    let schedule = cfg.schedule.as_ref().expect("validated: compete has [schedule]").schedule();
    let chi_pair = (cfg.physics.chi, cfg.physics.rival_chi());

    let (u_traj, v_traj) = run_two_species(
        &grid,
        &cfg.potential,
        chi_pair,
        cfg.physics.diffusion,
        &reaction,
        (&u0, &v0),
        &schedule,
    )?;

    for (name, contents, time) in snapshot_files_pair(&grid, &u_traj.snapshots, &v_traj.snapshots) {
        write_artifact(manifest, &name, &contents, &format!("t = {}", fmt_sig(time)))?;
    }
    write_artifact(
        manifest,
        "diagnostics_u.csv",
        &diagnostics_csv(&u_traj.diagnostics),
        &format!("{} accepted steps", u_traj.diagnostics.len().saturating_sub(1)),
    )?;
    write_artifact(
        manifest,
        "diagnostics_v.csv",
        &diagnostics_csv(&v_traj.diagnostics),
        &format!("{} accepted steps", v_traj.diagnostics.len().saturating_sub(1)),
    )?;

    // Comparison for the primary species; the linearization holds the rival
    // at its final state's single-species restriction (v frozen at zero),
    // which is the regime the closed forms describe.
    let maxima = detect_maxima(cfg, opts.seed_grid);
    let report = comparison_report(
        &grid,
        &cfg.potential,
        cfg.physics.chi,
        cfg.physics.diffusion,
        &reaction,
        cfg.physics.resource.as_ref(),
        &u_traj.final_field,
        &maxima,
    )?;
    write_artifact(
        manifest,
        "comparison.csv",
        &report.to_csv(grid.dim()),
        &format!("{} site(s), primary species", report.rows.len()),
    )?;

    let v_mass = v_traj.diagnostics.last().map(|row| row.mass).unwrap_or(f64::NAN);
    let _ = writeln!(
        log,
        "compete: {} at t = {}, rival advection = {}",
        termination_text(u_traj.termination),
        fmt_sig(u_traj.final_time),
        fmt_value(chi_pair.1),
    );
    let _ = writeln!(log, "  final rival mass = {}", fmt_sig(v_mass));
    for row in &report.rows {
        let _ = writeln!(
            log,
            "  site x = {}: {} (height {}, predicted {})",
            point_text(&row.site),
            branch_name(row.observed_branch),
            fmt_sig(row.measured_height),
            fmt_sig(row.predicted_height),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn apply_parameter(cfg: &mut ExperimentConfig, parameter: SweepParameter, value: f64) {
    match parameter {
        SweepParameter::Chi => cfg.physics.chi = value,
        SweepParameter::Theta => cfg.physics.theta = value,
        SweepParameter::Mu => cfg.physics.mu = value,
        SweepParameter::Diffusion => cfg.physics.diffusion = value,
    }
}

fn sweep(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    root: &Path,
    log: &mut String,
) -> Result<(), HarnessError> {
    fs::create_dir_all(root).map_err(|e| io_error(root, e))?;
    let mut manifest = Manifest::new(root);
    let result = sweep_body(cfg, opts, root, &mut manifest, log);
    match &result {
        Ok(()) => manifest.finish("complete")?,
        Err(error) => {
            let status = format!("failed: {error}");
            manifest.finish(&status)?;
        }
    }
    result
}

fn sweep_body(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    root: &Path,
    manifest: &mut Manifest,
    log: &mut String,
) -> Result<(), HarnessError> {
    let sweep_cfg = cfg.sweep.as_ref().expect("validated: sweep section");
    let axes = &sweep_cfg.axes;

    // Cartesian product, first axis outermost; this fixed order is the row
    // order of the summary, independent of scheduling.
    let mut tuples: Vec<Vec<(SweepParameter, f64)>> = Vec::new();
    for &a in &axes[0].values {
        match axes.get(1) {
            None => tuples.push(vec![(axes[0].parameter, a)]),
            Some(second) => {
                for &b in &second.values {
                    tuples.push(vec![(axes[0].parameter, a), (second.parameter, b)]);
                }
            }
        }
    }

    let workers = if opts.jobs == 0 {
        std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).min(tuples.len()).max(1)
    } else {
        opts.jobs.min(tuples.len()).max(1)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Runtime(format!("worker pool: {e}")))?;

    let _ = writeln!(log, "sweep: {} job(s) on {} worker(s)", tuples.len(), workers);

    struct JobOutcome {
        dir_name: String,
        log: String,
        result: Result<SimSummary, HarnessError>,
    }

    // Each job owns its subdirectory; nothing else is shared.
    let outcomes: Vec<JobOutcome> = pool.install(|| {
        tuples
            .par_iter()
            .map(|tuple| {
                let dir_name = tuple
                    .iter()
                    .map(|(p, v)| format!("{}={}", p.name(), fmt_value(*v)))
                    .collect::<Vec<_>>()
                    .join("_");
                let mut job_cfg = cfg.clone();
                job_cfg.mode = Mode::Simulate;
                job_cfg.sweep = None;
                job_cfg.output.dir = None;
                for &(parameter, value) in tuple {
                    apply_parameter(&mut job_cfg, parameter, value);
                }
                let mut job_log = String::new();
                let result = simulate_into(&job_cfg, opts, &root.join(&dir_name), &mut job_log);
                JobOutcome { dir_name, log: job_log, result }
            })
            .collect()
    });

    // Coordinator alone writes the summary, in tuple order.
    let mut summary = String::new();
    for axis in axes {
        let _ = write!(summary, "{},", axis.parameter.name());
    }
    summary.push_str("height,half_width,leading_eigenvalue,verdict,termination\n");

    let mut first_error: Option<HarnessError> = None;
    for (tuple, outcome) in tuples.iter().zip(outcomes) {
        log.push_str(&outcome.log);
        match outcome.result {
            Ok(run) => {
                manifest.record(&format!("{}/", outcome.dir_name), "complete");
                let (height, half_width) =
                    run.tallest.unwrap_or((0.0, f64::NAN));
                let lambda = run.leading_lambda.unwrap_or(f64::NAN);
                let verdict = if lambda.is_nan() {
                    "-"
                } else if lambda > 0.0 {
                    "unstable"
                } else if lambda < 0.0 {
                    "stable"
                } else {
                    "marginal"
                };
                for &(_, value) in tuple {
                    let _ = write!(summary, "{},", fmt_sig(value));
                }
                let _ = writeln!(
                    summary,
                    "{},{},{},{},{}",
                    fmt_sig(height),
                    fmt_sig(half_width),
                    fmt_sig(lambda),
                    verdict,
                    termination_text(run.termination),
                );
                let _ = writeln!(
                    log,
                    "  {}: height {}, lambda {}",
                    outcome.dir_name,
                    fmt_sig(height),
                    fmt_sig(lambda),
                );
            }
            Err(error) => {
                manifest.record(&format!("{}/", outcome.dir_name), &format!("failed: {error}"));
                let _ = writeln!(log, "  {}: failed: {error}", outcome.dir_name);
                if first_error.is_none() {
                    first_error = Some(error);
                }
            }
        }
    }

    write_artifact(manifest, "summary.csv", &summary, "one row per completed job")?;

    match first_error {
        None => Ok(()),
        Some(error) => Err(error),
    }
}
