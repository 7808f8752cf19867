//! Command-line front end: argument parsing, run configuration and the
//! artifacts written by a run.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{emit_rate_fit, rate_fit, FileObserver, RateFit, RecordRow};
use crate::mesh::{Mesh, Point};
use crate::problems::{Case, Example, Source};
use crate::solver::{adaptive_solve, RunResult, RunStatus, SolverParams};

#[derive(Debug, Parser)]
#[command(name = "layerfem", version, about = "Adaptive P1 solver for quasilinear diffusion with steep layers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one of the benchmark problems adaptively.
    Run(RunArgs),
    /// Fit convergence rates to a records.csv.
    RateFit {
        records: PathBuf,
        /// Use only the last N consistent rows.
        #[arg(long)]
        window: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceLevel {
    /// No trace file.
    Off,
    /// Only iterations with an update, exit, reset or anomaly.
    Events,
    /// Every inner iteration.
    Full,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub example: String,
    #[arg(long)]
    pub source: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub max_refinements: Option<usize>,
    #[arg(long)]
    pub max_dofs: Option<usize>,
    #[arg(long)]
    pub eps_con: Option<f64>,
    #[arg(long)]
    pub eps_t: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub q_gamma: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub i_base: Option<usize>,
    /// Bisection passes applied to each marked element per adaptive step.
    #[arg(long)]
    pub bisections: Option<usize>,
    #[arg(long, value_enum, default_value = "full")]
    pub trace: TraceLevel,
}

/// A validated run request.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: Case,
    pub params: SolverParams,
    pub out_dir: PathBuf,
    pub trace: TraceLevel,
}

impl RunConfig {
    /// Defaults for `case`: the case's rate tolerance and the matching `gamma_max`.
    pub fn new(case: Case, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            case,
            params: SolverParams::with_eps_t(case.default_eps_t()),
            out_dir: out_dir.into(),
            trace: TraceLevel::Full,
        }
    }

    pub fn from_args(a: &RunArgs) -> Result<Self> {
        let case = Case::new(a.example.parse::<Example>()?, a.source.parse::<Source>()?);
        let mut cfg = Self::new(case, &a.out);
        cfg.trace = a.trace;
        let p = &mut cfg.params;
        if let Some(eps_t) = a.eps_t {
            let eps_only = SolverParams::with_eps_t(eps_t);
            p.eps_t = eps_t;
            p.gamma_max = eps_only.gamma_max;
            p.delta_min = eps_only.delta_min;
        }
        if let Some(g) = a.gamma_max {
            p.set_gamma_max(g);
        }
        if let Some(v) = a.max_refinements {
            p.max_refinements = v;
        }
        if let Some(v) = a.max_dofs {
            p.max_dofs = v;
        }
        if let Some(v) = a.eps_con {
            p.eps_con = v;
        }
        if let Some(v) = a.theta {
            p.theta = v;
        }
        if let Some(v) = a.q_gamma {
            p.q_gamma = v;
        }
        if let Some(v) = a.sigma0 {
            p.sigma0 = v;
        }
        if let Some(v) = a.i_base {
            p.i_base = v;
        }
        if let Some(v) = a.bisections {
            p.bisections = v;
        }
        p.validate()?;
        Ok(cfg)
    }
}

/// Location of the finest element of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensestRegion {
    /// Centroid of the smallest element (lowest index on ties).
    pub centroid: Point,
    pub area: f64,
    /// Number of elements sharing the smallest area.
    pub count: usize,
    /// Mean centroid over those elements.
    pub mean_centroid: Point,
}

pub fn densest_region(mesh: &Mesh) -> DensestRegion {
    let geoms: Vec<_> = (0..mesh.num_triangles()).map(|t| mesh.geometry(t)).collect();
    let (best, min_area) = geoms
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (t, g)| if g.area < acc.1 { (t, g.area) } else { acc });
    let finest: Vec<Point> = geoms
        .iter()
        .filter(|g| g.area <= min_area * (1.0 + 1e-9))
        .map(|g| g.centroid())
        .collect();
    let count = finest.len();
    let sum = finest.iter().fold([0.0, 0.0], |s, c| [s[0] + c[0], s[1] + c[1]]);
    DensestRegion {
        centroid: geoms[best].centroid(),
        area: min_area,
        count,
        mean_centroid: [sum[0] / count as f64, sum[1] / count as f64],
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub case: String,
    pub status: RunStatus,
    pub params: SolverParams,
    pub gamma0: f64,
    pub delta0: f64,
    pub refinements: usize,
    pub resets: Vec<usize>,
    pub total_iterations: usize,
    pub gamma_updates: usize,
    pub delta_updates: usize,
    pub anomalies: usize,
    pub final_dofs: usize,
    pub final_elements: usize,
    pub final_r: f64,
    pub final_gamma: f64,
    pub final_delta: f64,
    pub first_consistent_level: Option<usize>,
    pub densest_region: DensestRegion,
    pub rate_fit: std::result::Result<RateFit, String>,
}

impl Summary {
    pub fn new(case: Case, params: &SolverParams, result: &RunResult) -> Self {
        let last = result.records.last().expect("a run produces at least one record");
        let rows: Vec<RecordRow> = result.records.iter().map(RecordRow::from).collect();
        Self {
            case: case.to_string(),
            status: result.status,
            params: params.clone(),
            gamma0: result.gamma0,
            delta0: result.delta0,
            refinements: result.records.len(),
            resets: result.resets.clone(),
            total_iterations: result.total_iterations(),
            gamma_updates: result.gamma_updates.len(),
            delta_updates: result.delta_updates.len(),
            anomalies: result.anomalies.len(),
            final_dofs: last.dofs,
            final_elements: last.elements,
            final_r: last.final_r,
            final_gamma: last.gamma,
            final_delta: last.delta,
            first_consistent_level: result.first_consistent_level(),
            densest_region: densest_region(&result.mesh),
            rate_fit: rate_fit(&rows, None).map_err(|e| e.to_string()),
        }
    }
}

/// Solves the configured case and writes `records.csv`, `trace.jsonl`,
/// `summary.json` and the final mesh into the output directory.
pub fn run(cfg: &RunConfig) -> Result<(RunResult, Summary)> {
    cfg.params.validate()?;
    let trace = match cfg.trace {
        TraceLevel::Off => None,
        TraceLevel::Events => Some(true),
        TraceLevel::Full => Some(false),
    };
    let mut observer = FileObserver::create(&cfg.out_dir, trace)?;
    let result = adaptive_solve(&cfg.case.problem(), &cfg.params, &mut observer)?;
    let summary = Summary::new(cfg.case, &cfg.params, &result);
    std::fs::write(cfg.out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let mesh_file = std::fs::File::create(cfg.out_dir.join("mesh.txt"))?;
    result.mesh.write_dump(std::io::BufWriter::new(mesh_file))?;
    Ok((result, summary))
}

/// Exit code for a failed command: 2 for bad configuration, 3 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        _ => 3,
    }
}

/// Rate fit printed by the `rate-fit` subcommand.
pub fn rate_fit_report(path: &Path, window: Option<usize>) -> Result<String> {
    let fit = emit_rate_fit(path, window)?;
    Ok(serde_json::to_string_pretty(&fit)?)
}
