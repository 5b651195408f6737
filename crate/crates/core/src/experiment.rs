//! Sweep runner behind the `heg` binary: per-run traces and summaries, a
//! manifest, replay checks and certification of saved summaries.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bifunction::{estimate_lipschitz, Bifunction, LipschitzEstimate};
use crate::config::{Problem, ProblemSpec, RunConfig};
use crate::error::{Error, Result};
use crate::extragradient::{analyze_rate, RateReport, RunOutcome, RunStatus, Solver, Trace, TRACE_COLUMNS};
use crate::feasible::BoxSet;
use crate::manifold::{Component, Manifold};
use crate::oracle::{certify_equilibrium, Certificate, Grid, DEFAULT_BUDGET};

/// Random triples used for the sampled Lipschitz-type estimate.
pub const LIPSCHITZ_SAMPLES: usize = 10_000;
/// Relative tolerance of replay comparisons.
pub const REPLAY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: usize,
    pub lambda0: f64,
    pub mu: f64,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub iterations: usize,
    pub final_x: Vec<f64>,
    pub final_y: Option<Vec<f64>>,
    pub final_eps: Option<f64>,
    /// Point the rate report is measured against.
    pub reference: Vec<f64>,
    /// `"config"` or `"final_iterate"`.
    pub reference_source: String,
    pub rate: Option<RateReport>,
    /// Analytic bound `gamma >= ` the true Lipschitz-type constant.
    pub lipschitz_upper_bound: f64,
    pub lipschitz_estimate: LipschitzEstimate,
    pub inner_nonconverged: usize,
    pub manifold: Vec<Component>,
    pub problem: ProblemSpec,
    pub bounds: Vec<[f64; 2]>,
    pub trace_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub lambda0: f64,
    pub mu: f64,
    pub status: RunStatus,
    pub iterations: usize,
    pub final_eps: Option<f64>,
    pub trace_file: String,
    pub summary_file: String,
    pub trace_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub sweep_label: Option<String>,
    pub seed: u64,
    pub config: RunConfig,
    pub runs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.status == RunStatus::Converged)
    }
}

pub fn trace_file_name(index: usize) -> String {
    format!("run_{index:03}.csv")
}

pub fn summary_file_name(index: usize) -> String {
    format!("run_{index:03}.json")
}

/// Everything shared by the runs of one sweep.
struct Shared {
    problem: Problem,
    bounds: Vec<[f64; 2]>,
    upper_bound: f64,
    estimate: LipschitzEstimate,
}

impl Shared {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let problem = cfg.build()?;
        let bounds = problem
            .set
            .lower()
            .iter()
            .zip(problem.set.upper())
            .map(|(&l, &u)| [l, u])
            .collect();
        let upper_bound = problem
            .bifunction
            .lipschitz_upper_bound(&problem.manifold, &problem.set);
        let estimate = estimate_lipschitz(
            &problem.bifunction,
            &problem.manifold,
            &problem.set,
            LIPSCHITZ_SAMPLES,
            cfg.seed,
        )?;
        Ok(Self {
            problem,
            bounds,
            upper_bound,
            estimate,
        })
    }
}

/// Runs sweep pair `index` without touching the filesystem.
pub fn run_single(cfg: &RunConfig, index: usize) -> Result<(RunOutcome, RunSummary)> {
    let shared = Shared::new(cfg)?;
    run_with(cfg, &shared, index)
}

fn run_with(cfg: &RunConfig, shared: &Shared, index: usize) -> Result<(RunOutcome, RunSummary)> {
    let sweep = cfg.sweep();
    let &(lambda0, mu) = sweep
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("run index {index} outside sweep of {}", sweep.len())))?;
    let p = &shared.problem;
    let solver = Solver::new(&p.bifunction, &p.manifold, &p.set, cfg.solver_config(lambda0, mu))?;
    let x0 = cfg.x0(p)?;
    let outcome = match solver.run(&x0) {
        Ok(outcome) => outcome,
        Err(e) => RunOutcome {
            trace: Trace {
                lambda0,
                mu,
                stop_tol: cfg.stop_tol,
                records: Vec::new(),
            },
            final_x: x0,
            status: RunStatus::Aborted,
            message: Some(e.to_string()),
        },
    };

    let (reference, reference_source) = match &cfg.reference {
        Some(r) => (p.manifold.point(r.clone())?, "config"),
        None => (outcome.final_x.clone(), "final_iterate"),
    };
    let rate = if outcome.trace.is_empty() {
        None
    } else {
        Some(analyze_rate(
            &outcome.trace,
            &p.manifold,
            &reference,
            Some(shared.upper_bound),
        )?)
    };
    let records = &outcome.trace.records;
    let summary = RunSummary {
        index,
        lambda0,
        mu,
        seed: cfg.seed,
        status: outcome.status.clone(),
        message: outcome.message.clone(),
        iterations: records.len(),
        final_x: outcome.final_x.coords().to_vec(),
        final_y: outcome.final_y().map(<[f64]>::to_vec),
        final_eps: records.last().map(|r| r.eps),
        reference: reference.coords().to_vec(),
        reference_source: reference_source.into(),
        rate,
        lipschitz_upper_bound: shared.upper_bound,
        lipschitz_estimate: shared.estimate.clone(),
        inner_nonconverged: records.iter().filter(|r| !r.inner_converged()).count(),
        manifold: cfg.manifold.clone(),
        problem: cfg.problem.clone(),
        bounds: shared.bounds.clone(),
        trace_file: trace_file_name(index),
    };
    Ok((outcome, summary))
}

/// Runs every `(lambda0, mu)` pair on at most `jobs` threads and writes
/// `run_NNN.csv`, `run_NNN.json` and `manifest.json` into `out_dir`.
pub fn run_experiment(cfg: &RunConfig, out_dir: &Path, jobs: usize) -> Result<Manifest> {
    let shared = Shared::new(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let indices: Vec<usize> = (0..cfg.sweep().len()).collect();
    let runs = pool.install(|| {
        indices
            .par_iter()
            .map(|&i| write_run(cfg, &shared, out_dir, i))
            .collect::<Result<Vec<ManifestEntry>>>()
    })?;
    let manifest = Manifest {
        sweep_label: cfg.sweep_label.clone(),
        seed: cfg.seed,
        config: cfg.clone(),
        runs,
    };
    std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

fn write_run(cfg: &RunConfig, shared: &Shared, out_dir: &Path, index: usize) -> Result<ManifestEntry> {
    let (outcome, summary) = run_with(cfg, shared, index)?;
    let csv = outcome.trace.to_csv_string();
    std::fs::write(out_dir.join(trace_file_name(index)), &csv)?;
    std::fs::write(
        out_dir.join(summary_file_name(index)),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(ManifestEntry {
        index,
        lambda0: summary.lambda0,
        mu: summary.mu,
        status: summary.status,
        iterations: summary.iterations,
        final_eps: summary.final_eps,
        trace_file: trace_file_name(index),
        summary_file: summary_file_name(index),
        trace_sha256: sha256_hex(csv.as_bytes()),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// 0-based data row; equals the shorter row count when lengths differ.
    pub row: usize,
    pub column: String,
    pub recorded: String,
    pub replayed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    /// Sweep index compared against (the closest one when nothing matched).
    pub index: usize,
    pub rows: usize,
    pub divergence: Option<Divergence>,
}

impl ReplayReport {
    pub fn matched(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Re-runs the configuration and compares against a recorded trace. Every
/// column except `elapsed_s` (wall-clock) must agree to [`REPLAY_TOL`].
///
/// Without `index` the sweep position is read from a `run_NNN` file name, and
/// failing that every pair is tried.
pub fn replay_check(trace_path: &Path, cfg: &RunConfig, index: Option<usize>) -> Result<ReplayReport> {
    let recorded = std::fs::read_to_string(trace_path)?;
    let shared = Shared::new(cfg)?;
    let candidates: Vec<usize> = match index.or_else(|| index_from_name(trace_path)) {
        Some(i) => vec![i],
        None => (0..cfg.sweep().len()).collect(),
    };
    let mut best: Option<ReplayReport> = None;
    for i in candidates {
        let (outcome, _) = run_with(cfg, &shared, i)?;
        let replayed = outcome.trace.to_csv_string();
        let report = ReplayReport {
            index: i,
            rows: outcome.trace.len(),
            divergence: compare_traces(&recorded, &replayed),
        };
        if report.matched() {
            return Ok(report);
        }
        let further = |r: &ReplayReport| r.divergence.as_ref().map_or(usize::MAX, |d| d.row);
        if best.as_ref().is_none_or(|b| further(&report) > further(b)) {
            best = Some(report);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty sweep".into()))
}

fn index_from_name(path: &Path) -> Option<usize> {
    path.file_stem()?.to_str()?.strip_prefix("run_")?.parse().ok()
}

fn compare_traces(recorded: &str, replayed: &str) -> Option<Divergence> {
    let mut a = recorded.lines();
    let mut b = replayed.lines();
    let header_a: Vec<&str> = a.next().unwrap_or("").split(',').collect();
    let header_b: Vec<&str> = b.next().unwrap_or("").split(',').collect();
    if header_a != header_b {
        return Some(Divergence {
            row: 0,
            column: "header".into(),
            recorded: header_a.join(","),
            replayed: header_b.join(","),
        });
    }
    let elapsed = TRACE_COLUMNS.iter().position(|c| *c == "elapsed_s");
    let mut row = 0;
    loop {
        match (a.next(), b.next()) {
            (None, None) => return None,
            (Some(ra), Some(rb)) => {
                let (va, vb): (Vec<&str>, Vec<&str>) = (ra.split(',').collect(), rb.split(',').collect());
                for (j, column) in header_a.iter().enumerate() {
                    if Some(j) == elapsed {
                        continue;
                    }
                    let (x, y) = (va.get(j).copied().unwrap_or(""), vb.get(j).copied().unwrap_or(""));
                    if !values_agree(x, y) {
                        return Some(Divergence {
                            row,
                            column: column.to_string(),
                            recorded: x.into(),
                            replayed: y.into(),
                        });
                    }
                }
            }
            (ra, rb) => {
                return Some(Divergence {
                    row,
                    column: "row count".into(),
                    recorded: ra.unwrap_or("<end>").into(),
                    replayed: rb.unwrap_or("<end>").into(),
                });
            }
        }
        row += 1;
    }
}

fn values_agree(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= REPLAY_TOL * x.abs().max(y.abs()).max(1.0),
        _ => false,
    }
}

/// Loads a run summary and certifies its final point on a uniform grid.
pub fn certify_summary(path: &Path, points_per_axis: usize, slack: f64) -> Result<Certificate> {
    let summary: RunSummary = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let manifold = Manifold::new(summary.manifold.clone())?;
    let f = summary.problem.build_bifunction()?;
    if f.dim() != manifold.dim() {
        return Err(Error::DimensionMismatch {
            expected: manifold.dim(),
            got: f.dim(),
        });
    }
    let set = BoxSet::from_pairs(&manifold, &summary.bounds)?;
    let x = manifold.point(summary.final_x.clone())?;
    let grid = Grid::uniform(&set, points_per_axis, DEFAULT_BUDGET)?;
    certify_equilibrium(&f, &manifold, &set, &x, &grid, slack)
}

/// Summary files listed in a manifest, in sweep order.
pub fn summary_paths(out_dir: &Path, manifest: &Manifest) -> Vec<PathBuf> {
    manifest.runs.iter().map(|r| out_dir.join(&r.summary_file)).collect()
}
