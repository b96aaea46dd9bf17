//! `plap solve` and `plap bench`.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use plap_core::Exponent;

use crate::bench::{self, BenchSpec};
use crate::config::{self, BoundarySpec, ForcingSpec, ProblemFile};
use crate::error::{CliError, Result};
use crate::io;

#[derive(Debug, Parser)]
#[command(name = "plap", version, about = "Barrier-method solver for the discrete p-Laplacian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write a JSON report.
    Solve(SolveArgs),
    /// Sweep (p, n, method) cells on the unit square and write CSV tables.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem file (.json or .toml); flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exponent, a real >= 1 or "inf".
    #[arg(long)]
    pub p: Option<Exponent>,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Box side lengths, comma separated (default: unit box).
    #[arg(long, value_delimiter = ',')]
    pub extents: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// short, long or adaptive.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub kappa0: Option<f64>,
    /// Preset (zero, linear-x, xy, fig1, step) or a file of boundary values.
    #[arg(long)]
    pub g: Option<String>,
    /// Constant forcing.
    #[arg(long)]
    pub f: Option<f64>,
    /// harmonic or zero.
    #[arg(long)]
    pub prolongation: Option<String>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Vertex coordinates and u + g as CSV.
    #[arg(long)]
    pub dump_solution: Option<PathBuf>,
    /// Per-iteration trace as CSV.
    #[arg(long)]
    pub dump_trace: Option<PathBuf>,
    /// Mesh as JSON.
    #[arg(long)]
    pub dump_mesh: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,inf")]
    pub p_list: Vec<Exponent>,
    /// Interior-vertex counts; each is rounded to the nearest (k-1)^2.
    #[arg(long, value_delimiter = ',', default_value = "16,36,64,100")]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "short,long,adaptive")]
    pub methods: Vec<String>,
    /// Long-step multipliers; one series per value.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub kappa_list: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub kappa0: f64,
    #[arg(long, default_value_t = config::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Per-cell limit in seconds.
    #[arg(long, default_value_t = bench::DEFAULT_TIMEOUT.as_secs_f64())]
    pub timeout: f64,
    #[arg(long, default_value = "fig1")]
    pub g: String,
    #[arg(long, default_value_t = 0.0)]
    pub f: f64,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

impl SolveArgs {
    /// Merges the optional problem file with the flags.
    pub fn problem(&self) -> Result<ProblemFile> {
        let mut file = match &self.config {
            Some(path) => ProblemFile::load(path)?,
            None => ProblemFile {
                d: 2,
                cells: 0,
                extents: None,
                p: Exponent::Finite(2.0),
                epsilon: config::DEFAULT_EPSILON,
                g: BoundarySpec::Preset("zero".into()),
                f: ForcingSpec::Constant(0.0),
                method: "adaptive".into(),
                kappa: None,
                kappa0: None,
                prolongation: Default::default(),
            },
        };
        if self.config.is_none() {
            let p = self
                .p
                .ok_or_else(|| CliError::Config("--p is required without --config".into()))?;
            file.p = p;
            file.cells = self
                .cells
                .ok_or_else(|| CliError::Config("--cells is required without --config".into()))?;
        }
        if let Some(p) = self.p {
            file.p = p;
        }
        if let Some(c) = self.cells {
            file.cells = c;
        }
        if let Some(d) = self.dim {
            file.d = d;
            if self.extents.is_none() && file.extents.as_ref().is_some_and(|e| e.len() != d) {
                file.extents = None;
            }
        }
        if let Some(e) = &self.extents {
            file.extents = Some(e.clone());
        }
        if let Some(eps) = self.epsilon {
            file.epsilon = eps;
        }
        if let Some(m) = &self.method {
            file.method = m.clone();
        }
        if self.kappa.is_some() {
            file.kappa = self.kappa;
        }
        if self.kappa0.is_some() {
            file.kappa0 = self.kappa0;
        }
        if let Some(g) = &self.g {
            file.g = if config::parse_preset(g).is_ok() {
                BoundarySpec::Preset(g.clone())
            } else {
                let path = PathBuf::from(g);
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "--g {g:?} is neither a preset (zero, linear-x, xy, fig1, step) nor a file"
                    )));
                }
                BoundarySpec::Values(io::read_values(&path)?)
            };
        }
        if let Some(f) = self.f {
            file.f = ForcingSpec::Constant(f);
        }
        if let Some(pr) = &self.prolongation {
            file.prolongation = config::parse_prolongation(pr)?;
        }
        Ok(file)
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let file = args.problem()?;
    let config = file.to_config()?;
    let mesh = config.build_mesh()?;
    if let Some(path) = &args.dump_mesh {
        io::write_mesh_json(path, &mesh)?;
    }
    let start = Instant::now();
    let report = plap_core::solve(&config)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let json = io::ReportJson::new(ProblemFile::from_config(&config), &report, wall_ms);
    match &args.out {
        Some(path) => io::write_json(path, &json)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&json).map_err(|e| CliError::Config(e.to_string()))?
        ),
    }
    if let Some(path) = &args.dump_solution {
        io::write_solution_csv(path, &mesh, &report.nodal)?;
    }
    if let Some(path) = &args.dump_trace {
        io::write_trace_csv(path, &report.trace)?;
    }
    Ok(())
}

impl BenchArgs {
    pub fn spec(&self) -> Result<BenchSpec> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(CliError::Config(format!("timeout must be positive, got {}", self.timeout)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CliError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.n_list.contains(&0) {
            return Err(CliError::Config("n must be positive".into()));
        }
        Ok(BenchSpec {
            p_list: self.p_list.clone(),
            n_list: self.n_list.clone(),
            methods: bench::expand_methods(&self.methods, &self.kappa_list, self.kappa0)?,
            epsilon: self.epsilon,
            timeout: Duration::from_secs_f64(self.timeout),
            boundary: config::parse_preset(&self.g)?,
            forcing: self.f,
        })
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let spec = args.spec()?;
    let workers = bench::workers_from_env()?;
    let rows = bench::run(&spec, workers)?;
    bench::write_rows(&args.out, &rows)?;
    bench::write_companions(&args.out, &rows)?;
    bench::outcome(&rows)
}

/// Parses `args`, runs the command and returns the process exit code. Errors
/// go to stderr as one JSON object.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
