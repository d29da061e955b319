//! Batch front-end behind the `mlc` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::chart::scenario::{failures, run_scenario};
use crate::cubic::{norm_sq, CubicField};
use crate::dec::{gauss_curvature, inner, ConformalMetric, DiscreteForm};
use crate::error::{ErrorClass, MlcError, Result};
use crate::hodge::{decompose, harmonic_basis};
use crate::io::{parse_complex_csv, parse_values_csv, read_text, vtk_point_data, write_text};
use crate::mesh::{flat_torus, generate_genus, icosphere, load_off, EdgeLengthMetric, TriMesh};
use crate::solver::inputs::{build_beta, build_cubic, BetaSpec, CubicSpec};
use crate::solver::{solve, ProblemData, Route, Sign, SolveOptions, SolveReport};

#[derive(Debug, Parser)]
#[command(name = "mlc", version, about = "Minimal Lagrangian connection solver and identity checker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configured solver tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write legacy VTK point data.
    #[arg(long)]
    pub vtk: bool,
    /// Seed for randomized inputs and scenarios.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the conformal factor and write the report and fields.
    Solve(CommonArgs),
    /// Hodge-decompose a 1-form.
    Hodge(CommonArgs),
    /// Evaluate connection identities on a built-in chart scenario.
    ChartVerify(CommonArgs),
    /// Solve and print only the report.
    Report(CommonArgs),
}

/// Mesh source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    /// Path to an OFF file, relative to the config file.
    Off(String),
    Generate {
        genus: usize,
        #[serde(default)]
        subdivisions: usize,
    },
    Icosphere {
        level: usize,
    },
    Torus {
        n: usize,
        m: usize,
        spacing: f64,
    },
}

/// JSON run configuration; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: Option<MeshSpec>,
    pub beta: Option<BetaSpec>,
    /// `id,value` CSV of edge values, instead of `beta`.
    pub beta_csv: Option<String>,
    pub cubic: Option<CubicSpec>,
    /// `id,re,im` CSV of vertex coefficients, instead of `cubic`.
    pub cubic_csv: Option<String>,
    /// Constant `τ = |C|²` in the background metric, instead of a cubic field.
    pub tau: Option<f64>,
    pub sign: Option<Sign>,
    pub route: Option<Route>,
    pub tol: Option<f64>,
    pub hodge_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub scenario: Option<String>,
}

/// Resolved configuration for one run.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub out: PathBuf,
    pub tol: f64,
    pub hodge_tol: f64,
    pub seed: u64,
    pub vtk: bool,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| MlcError::Parse {
        line: e.line(),
        message: format!("config: {e}"),
    })
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(MlcError::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

impl Run {
    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let config = parse_config(&read_text(&args.config)?)?;
        let base_dir = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
        let tol = positive("tol", args.tol.or(config.tol).unwrap_or(1e-10))?;
        let hodge_tol = positive("hodge_tol", config.hodge_tol.unwrap_or(1e-12))?;
        if config.max_iter == Some(0) {
            return Err(MlcError::InvalidArgument("max_iter must be positive".into()));
        }
        Ok(Run {
            seed: args.seed.or(config.seed).unwrap_or(0),
            out: args.out.clone().unwrap_or_else(|| PathBuf::from("mlc-out")),
            config,
            base_dir,
            tol,
            hodge_tol,
            vtk: args.vtk,
        })
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    fn mesh(&self) -> Result<(TriMesh, EdgeLengthMetric)> {
        match &self.config.mesh {
            None => Err(MlcError::InvalidArgument("config needs a 'mesh' entry".into())),
            Some(MeshSpec::Off(p)) => load_off(self.path(p)),
            Some(MeshSpec::Generate { genus, subdivisions }) => generate_genus(*genus, *subdivisions),
            Some(MeshSpec::Icosphere { level }) => icosphere(*level),
            Some(MeshSpec::Torus { n, m, spacing }) => {
                let t = flat_torus(*n, *m, positive("torus spacing", *spacing)?)?;
                Ok((t.mesh, t.metric))
            }
        }
    }

    fn beta(&self, mesh: &TriMesh, metric: &ConformalMetric) -> Result<DiscreteForm> {
        match (&self.config.beta, &self.config.beta_csv) {
            (Some(_), Some(_)) => Err(MlcError::InvalidArgument("give either 'beta' or 'beta_csv'".into())),
            (Some(spec), None) => build_beta(mesh, metric, spec, self.seed, self.hodge_tol),
            (None, Some(p)) => {
                let v = parse_values_csv(&read_text(self.path(p))?, mesh.n_edges())?;
                DiscreteForm::new(mesh, 1, v)
            }
            (None, None) => Ok(DiscreteForm::zeros(mesh, 1)),
        }
    }

    /// `τ` per vertex, and the cubic field it came from when there is one.
    fn tau(&self, mesh: &TriMesh, metric: &ConformalMetric, beta: &DiscreteForm) -> Result<(Vec<f64>, Option<CubicField>)> {
        let c = &self.config;
        let given = [c.cubic.is_some(), c.cubic_csv.is_some(), c.tau.is_some()];
        if given.iter().filter(|g| **g).count() > 1 {
            return Err(MlcError::InvalidArgument("give at most one of 'cubic', 'cubic_csv', 'tau'".into()));
        }
        let field = if let Some(spec) = &c.cubic {
            Some(build_cubic(mesh, metric, beta, spec, self.seed)?)
        } else if let Some(p) = &c.cubic_csv {
            let coeff = parse_complex_csv(&read_text(self.path(p))?, mesh.n_vertices())?;
            Some(CubicField::new(mesh, metric, coeff)?)
        } else {
            None
        };
        match field {
            Some(f) => Ok((norm_sq(&f, metric).into_values(), Some(f))),
            None => Ok((vec![c.tau.unwrap_or(0.0); mesh.n_vertices()], None)),
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|source| MlcError::Io {
            path: self.out.display().to_string(),
            source,
        })?;
        Ok(&self.out)
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        write_text(self.out_dir()?.join(name), text)
    }
}

fn problem(run: &Run) -> Result<(ProblemData, Option<CubicField>)> {
    let (mesh, bg) = run.mesh()?;
    let metric = ConformalMetric::flat(&mesh, bg.clone());
    let beta = run.beta(&mesh, &metric)?;
    let (tau, field) = run.tau(&mesh, &metric, &beta)?;
    let sign = run.config.sign.unwrap_or(Sign::Spacelike);
    Ok((ProblemData::new(mesh, bg, beta, tau, sign)?, field))
}

fn run_solve(run: &Run) -> Result<(ProblemData, Option<CubicField>, SolveReport)> {
    let (data, field) = problem(run)?;
    let opts = SolveOptions {
        route: run.config.route.unwrap_or(Route::Direct),
        tol: run.tol,
        max_iter: run.config.max_iter.unwrap_or(100),
        hodge_tol: run.hodge_tol.min(1e-12),
        initial: None,
    };
    let report = solve(&data, &opts)?;
    Ok((data, field, report))
}

pub fn cmd_solve(run: &Run) -> Result<String> {
    let (data, field, report) = run_solve(run)?;
    let json = report.to_json();
    run.write("report.json", &json)?;
    let u = DiscreteForm::new(&data.mesh, 0, report.u.clone())?;
    run.write("u.csv", &u.to_csv())?;
    if let Some(f) = &field {
        run.write("cubic.csv", &f.to_csv())?;
    }
    if run.vtk {
        let mut fields: Vec<(&str, Vec<f64>)> = vec![("u", report.u.clone())];
        fields.push((
            "cubic_norm_sq",
            data.tau.iter().zip(&report.u).map(|(t, u)| t * (-6.0 * u).exp()).collect(),
        ));
        if let Ok(g) = ConformalMetric::new(&data.mesh, data.background.clone(), report.u.clone()) {
            fields.push(("gauss_curvature", gauss_curvature(&data.mesh, &g).into_values()));
        }
        let refs: Vec<(&str, &[f64])> = fields.iter().map(|(n, v)| (*n, v.as_slice())).collect();
        run.write("solution.vtk", &vtk_point_data(&data.mesh, &refs)?)?;
    }
    Ok(json)
}

pub fn cmd_report(run: &Run) -> Result<String> {
    let (_, _, report) = run_solve(run)?;
    let json = report.to_json();
    run.write("report.json", &json)?;
    Ok(json)
}

/// Norms and residuals of a Hodge decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HodgeSummary {
    pub harmonic_dimension: usize,
    pub beta_norm: f64,
    pub exact_norm: f64,
    pub coexact_norm: f64,
    pub harmonic_norm: f64,
    pub reconstruction_residual: f64,
    /// `max |dγ|`.
    pub harmonic_closed_residual: f64,
    /// `max |M δγ|`.
    pub harmonic_coclosed_residual: f64,
}

pub fn cmd_hodge(run: &Run) -> Result<String> {
    let (mesh, bg) = run.mesh()?;
    let metric = ConformalMetric::flat(&mesh, bg);
    let beta = run.beta(&mesh, &metric)?;
    let parts = decompose(&beta, &mesh, &metric, run.hodge_tol)?;
    let geom = metric.geometry(&mesh);
    let exact = parts.exact(&mesh);
    let norm = |f: &DiscreteForm| inner(f, f, &geom).sqrt();
    let recon = beta.sub(&exact).sub(&parts.coexact).sub(&parts.gamma).max_abs();
    let basis = harmonic_basis(&mesh, &metric, run.hodge_tol)?;
    let summary = HodgeSummary {
        harmonic_dimension: basis.len(),
        beta_norm: norm(&beta),
        exact_norm: norm(&exact),
        coexact_norm: norm(&parts.coexact),
        harmonic_norm: norm(&parts.gamma),
        reconstruction_residual: recon,
        harmonic_closed_residual: crate::dec::d(&parts.gamma, &mesh)?.max_abs(),
        harmonic_coclosed_residual: crate::hodge::coclosed_residual(&parts.gamma, &mesh, &geom),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    run.write("hodge.json", &json)?;
    run.write("gamma.csv", &parts.gamma.to_csv())?;
    run.write("potential.csv", &parts.v.to_csv())?;
    run.write("coexact.csv", &parts.coexact.to_csv())?;
    Ok(json)
}

pub fn cmd_chart_verify(run: &Run) -> Result<String> {
    let name = run
        .config
        .scenario
        .as_deref()
        .ok_or_else(|| MlcError::InvalidArgument("config needs a 'scenario' entry".into()))?;
    let rows = run_scenario(name, run.seed)?;
    let json = serde_json::to_string_pretty(&rows).expect("rows serialize");
    run.write("chart.json", &json)?;
    let bad = failures(&rows);
    if let Some(worst) = bad.first() {
        return Err(MlcError::Numerical(format!(
            "{} chart residuals exceed tolerance (first: {} at {:?} = {:e})",
            bad.len(),
            worst.identity,
            worst.point,
            worst.residual
        )));
    }
    Ok(json)
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Precondition => 2,
        ErrorClass::Numerical => 3,
    }
}

/// One-line JSON diagnostic.
pub fn error_json(e: &MlcError) -> String {
    let code = exit_code(e.class());
    json!({ "error": e.kind(), "exit_code": code, "message": e.to_string() }).to_string()
}

pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(&Run::from_args(a)?),
        Command::Report(a) => cmd_report(&Run::from_args(a)?),
        Command::Hodge(a) => cmd_hodge(&Run::from_args(a)?),
        Command::ChartVerify(a) => cmd_chart_verify(&Run::from_args(a)?),
    }
}

/// Runs the CLI on `args`, printing results to stdout and diagnostics to
/// stderr, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": "usage", "exit_code": 1, "message": first }));
            return 1;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            use std::io::Write;
            // A closed pipe on stdout is not a failure of the run.
            let _ = writeln!(std::io::stdout(), "{out}");
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(e.class())
        }
    }
}
