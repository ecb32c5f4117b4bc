//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! Settings come from an optional TOML file (`--config`) and are overridden
//! by flags. Example:
//!
//! ```toml
//! threads = 4
//!
//! [mesh]
//! voronoi = { seeds = 64, layers = 8, lloyd = 50, seed = 1 }
//!
//! [problem]
//! case = 3
//! k = [2]
//! dirichlet = ["x0", "x1", "y0", "y1", "z0", "z1"]
//!
//! [stabilization]
//! kind = "recipe"
//! tau = 1.0
//!
//! [solver]
//! kind = "cg"
//! tol = 1e-12
//!
//! [output]
//! csv = "run.csv"
//! ```

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{value_parser, ArgAction, Args, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::{
    csv_row, default_study, problem_for, run_study, solve_problem, summarize, BoundarySplit,
    MeshFamily, TauGrid, CSV_HEADER,
};
use crate::element::{StabilizationConfig, StabilizationKind};
use crate::error::{Result, VemError};
use crate::global::{write_matrix_market, SolverKind, SolverOptions};
use crate::mesh::{
    build_prismatic_voronoi_mesh, build_structured_cube_mesh, load_mesh, mesh_size,
    parse_mesh_unchecked, validate_mesh, write_mesh, BoxDomain, Mesh, PrismaticVoronoiParams,
};

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "VEM3D_THREADS";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub threads: Option<usize>,
    pub mesh: MeshConfig,
    pub problem: ProblemConfig,
    pub stabilization: StabilizationSection,
    pub solver: SolverSection,
    pub study: StudySection,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub structured: Option<usize>,
    pub voronoi: Option<VoronoiConfig>,
    pub file: Option<PathBuf>,
    pub domain: Option<DomainConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoronoiConfig {
    pub seeds: usize,
    pub layers: usize,
    pub lloyd: usize,
    pub seed: u64,
}

impl Default for VoronoiConfig {
    fn default() -> Self {
        let p = PrismaticVoronoiParams::default();
        Self {
            seeds: p.n_seeds,
            layers: p.n_layers,
            lloyd: p.lloyd_iters,
            seed: p.rng_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    /// Test case 1..=5; selects the exact solution.
    pub case: Option<u32>,
    pub k: Option<Vec<usize>>,
    /// Dirichlet tags; the remaining boundary tags get the exact Neumann trace.
    pub dirichlet: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilizationSection {
    pub kind: Option<StabilizationKind>,
    pub tau: Option<f64>,
    /// Number of `τ = 10^t` values with `t` in `[-2, 2]`.
    pub tau_points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub kind: Option<SolverKind>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub family: Option<MeshFamily>,
    pub refinements: Option<Vec<usize>>,
    pub stabilizations: Option<Vec<StabilizationKind>>,
    pub timings: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub mesh: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| VemError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| VemError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| VemError::Config(format!("{}: {e}", path.display())))
    }

    fn domain(&self) -> BoxDomain {
        self.mesh
            .domain
            .map(|d| BoxDomain::new(d.min, d.max))
            .unwrap_or_else(BoxDomain::unit)
    }
}

#[derive(Debug, Parser)]
#[command(name = "vem3d", version, about = "Virtual element solver for polyhedral meshes")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (also `VEM3D_THREADS`).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a mesh and write it as a polymesh file.
    Generate(GenerateArgs),
    /// Load a mesh file and report every validation check.
    Validate {
        mesh: PathBuf,
    },
    /// Solve one manufactured problem and print its CSV row.
    Solve(SolveArgs),
    /// Run one of the convergence studies (1..=5).
    Study(StudyArgs),
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Structured `n × n × n` cube mesh.
    #[arg(long, value_parser = value_parser!(u64).range(1..), conflicts_with_all = ["prismatic_voronoi", "mesh"])]
    structured: Option<u64>,
    /// Prismatic Voronoi mesh, e.g. `seeds=16 layers=4 lloyd=50 seed=7`.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE", conflicts_with = "mesh")]
    prismatic_voronoi: Option<Vec<String>>,
    /// Mesh file.
    #[arg(long)]
    mesh: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    /// Output file.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, value_parser = parse_solver_kind)]
    solver: Option<SolverKind>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    /// Test case whose exact solution is used.
    #[arg(long, value_parser = value_parser!(u32).range(1..=5))]
    case: Option<u32>,
    #[arg(long, value_parser = value_parser!(u64).range(1..))]
    k: Option<u64>,
    #[arg(long)]
    stab: Option<StabilizationKind>,
    #[arg(long)]
    tau: Option<f64>,
    /// Dirichlet tags; other boundary tags get Neumann data.
    #[arg(long, value_delimiter = ',')]
    dirichlet: Option<Vec<String>>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Append the CSV row to this file as well.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the global DOF vector as `index value` lines.
    #[arg(long)]
    dump_solution: Option<PathBuf>,
    /// Write the free-DOF system matrix in MatrixMarket format.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[arg(value_parser = value_parser!(u32).range(1..=5))]
    case: u32,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    refinements: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    stab: Option<Vec<StabilizationKind>>,
    #[arg(long, conflicts_with = "tau_points")]
    tau: Option<f64>,
    /// Sweep `τ = 10^t` over this many `t` in `[-2, 2]`.
    #[arg(long, value_parser = value_parser!(u64).range(1..))]
    tau_points: Option<u64>,
    /// `structured` or `voronoi`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    lloyd: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed layer count for Voronoi meshes.
    #[arg(long)]
    layers: Option<usize>,
    /// Study a single mesh file.
    #[arg(long, conflicts_with = "family")]
    mesh: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record wall-clock times in the CSV.
    #[arg(long)]
    timings: bool,
}

fn parse_solver_kind(s: &str) -> std::result::Result<SolverKind, String> {
    match s {
        "cg" => Ok(SolverKind::Cg),
        "direct" => Ok(SolverKind::Direct),
        _ => Err(format!("unknown solver `{s}` (expected cg or direct)")),
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &VemError) -> i32 {
    match e {
        VemError::Config(_) => 2,
        VemError::Parse { .. } | VemError::Validation(_) | VemError::Io(_) => 3,
        VemError::Solver { .. } => 4,
        _ => 1,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("RUST_LOG").try_init();

    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let env_threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| VemError::Config(format!("{THREADS_ENV}={v} is not a thread count")))?,
        ),
        Err(_) => None,
    };
    let threads = cli.threads.or(env_threads).or(cfg.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| VemError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Generate(a) => cmd_generate(&cfg, a),
        Command::Validate { mesh } => cmd_validate(&mesh),
        Command::Solve(a) => cmd_solve(&cfg, a),
        Command::Study(a) => cmd_study(&cfg, a),
    })
}

enum MeshSource {
    Structured(usize),
    Voronoi(VoronoiConfig),
    File(PathBuf),
}

fn parse_voronoi(pairs: &[String], base: VoronoiConfig) -> Result<VoronoiConfig> {
    let mut v = base;
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| VemError::Config(format!("expected KEY=VALUE, got `{pair}`")))?;
        let bad = || VemError::Config(format!("invalid value in `{pair}`"));
        match key {
            "seeds" => v.seeds = value.parse().map_err(|_| bad())?,
            "layers" => v.layers = value.parse().map_err(|_| bad())?,
            "lloyd" => v.lloyd = value.parse().map_err(|_| bad())?,
            "seed" => v.seed = value.parse().map_err(|_| bad())?,
            _ => {
                return Err(VemError::Config(format!(
                    "unknown Voronoi key `{key}` (expected seeds, layers, lloyd, seed)"
                )))
            }
        }
    }
    Ok(v)
}

fn mesh_source(cfg: &RunConfig, args: &MeshArgs) -> Result<MeshSource> {
    if let Some(n) = args.structured {
        return Ok(MeshSource::Structured(n as usize));
    }
    if let Some(pairs) = &args.prismatic_voronoi {
        return Ok(MeshSource::Voronoi(parse_voronoi(
            pairs,
            cfg.mesh.voronoi.unwrap_or_default(),
        )?));
    }
    if let Some(p) = &args.mesh {
        return Ok(MeshSource::File(p.clone()));
    }
    let m = &cfg.mesh;
    match (m.structured, m.voronoi, &m.file) {
        (Some(n), None, None) => Ok(MeshSource::Structured(n)),
        (None, Some(v), None) => Ok(MeshSource::Voronoi(v)),
        (None, None, Some(p)) => Ok(MeshSource::File(p.clone())),
        (None, None, None) => Err(VemError::Config(
            "no mesh given (use --structured, --prismatic-voronoi or --mesh)".into(),
        )),
        _ => Err(VemError::Config(
            "[mesh] must set exactly one of structured, voronoi, file".into(),
        )),
    }
}

fn build_mesh(cfg: &RunConfig, source: &MeshSource) -> Result<(Mesh, String)> {
    let domain = cfg.domain();
    match source {
        MeshSource::Structured(n) => {
            if *n == 0 {
                return Err(VemError::Config("structured mesh needs n >= 1".into()));
            }
            Ok((build_structured_cube_mesh(*n, &domain)?, MeshFamily::Structured.label()))
        }
        MeshSource::Voronoi(v) => {
            let mesh = build_prismatic_voronoi_mesh(&PrismaticVoronoiParams {
                n_seeds: v.seeds,
                n_layers: v.layers,
                rng_seed: v.seed,
                lloyd_iters: v.lloyd,
                domain,
            })?;
            let family = MeshFamily::Voronoi {
                lloyd: v.lloyd,
                seed: v.seed,
                layers: Some(v.layers),
            };
            Ok((mesh, family.label()))
        }
        MeshSource::File(p) => Ok((load_mesh(p)?, MeshFamily::File { path: p.clone() }.label())),
    }
}

fn cmd_generate(cfg: &RunConfig, args: GenerateArgs) -> Result<()> {
    let source = mesh_source(cfg, &args.mesh)?;
    let (mesh, _) = build_mesh(cfg, &source)?;
    let report = validate_mesh(&mesh);
    let out = args
        .output
        .or_else(|| cfg.output.mesh.clone())
        .unwrap_or_else(|| PathBuf::from("mesh.polymesh"));
    write_mesh(&mesh, &out)?;
    println!("wrote {}", out.display());
    println!("N_P = {}", mesh.num_cells());
    println!("h   = {}", mesh_size(&mesh));
    print!("{report}");
    match report.first_failure() {
        None => Ok(()),
        Some(msg) => Err(VemError::Validation(msg)),
    }
}

fn cmd_validate(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)?;
    let mesh = parse_mesh_unchecked(&text, path)?;
    let report = validate_mesh(&mesh);
    println!(
        "{}: {} vertices, {} faces, {} cells",
        path.display(),
        mesh.vertices.len(),
        mesh.faces.len(),
        mesh.num_cells()
    );
    print!("{report}");
    match report.first_failure() {
        None => {
            println!("h = {}", mesh_size(&mesh));
            Ok(())
        }
        Some(msg) => Err(VemError::Validation(msg)),
    }
}

fn solver_options(cfg: &SolverSection, args: &SolverArgs) -> Result<SolverOptions> {
    let d = SolverOptions::default();
    let tol = args.tol.or(cfg.tol).unwrap_or(d.tol);
    if !(tol > 0.0) {
        return Err(VemError::Config(format!("solver tolerance must be positive, got {tol}")));
    }
    Ok(SolverOptions {
        kind: args.solver.or(cfg.kind).unwrap_or(d.kind),
        tol,
        max_iter: args.max_iter.or(cfg.max_iter),
    })
}

fn cmd_solve(cfg: &RunConfig, args: SolveArgs) -> Result<()> {
    let case = args.case.or(cfg.problem.case).unwrap_or(4);
    let k = match (args.k, &cfg.problem.k) {
        (Some(k), _) => k as usize,
        (None, Some(ks)) if ks.len() == 1 => ks[0],
        (None, Some(_)) => {
            return Err(VemError::Config("solve takes a single k; use study for lists".into()))
        }
        (None, None) => 1,
    };
    if k == 0 {
        return Err(VemError::Config("polynomial degree must be at least 1".into()));
    }
    let kind = args.stab.or(cfg.stabilization.kind).unwrap_or(StabilizationKind::DofiDofi);
    let tau = args.tau.or(cfg.stabilization.tau).unwrap_or(1.0);
    let stab = StabilizationConfig::new(kind, tau)?;
    let solver = solver_options(&cfg.solver, &args.solver)?;

    let source = mesh_source(cfg, &args.mesh)?;
    let (mesh, label) = build_mesh(cfg, &source)?;
    let mut problem = problem_for(case, k)?;
    if let Some(dir) = args.dirichlet.clone().or_else(|| cfg.problem.dirichlet.clone()) {
        let rest: Vec<String> = mesh.boundary_tags().into_iter().filter(|t| !dir.contains(t)).collect();
        if let Some(t) = dir.iter().find(|t| !mesh.boundary_tags().contains(t)) {
            return Err(VemError::Config(format!("unknown Dirichlet tag `{t}`")));
        }
        problem.boundary = if rest.is_empty() {
            BoundarySplit::AllDirichlet
        } else {
            BoundarySplit::Neumann(rest)
        };
    }

    let out = solve_problem(&mesh, &label, case, k, &problem, &stab, &solver, true)?;
    println!("{CSV_HEADER}");
    println!("{}", csv_row(&out.record));

    if let Some(p) = args.csv.or_else(|| cfg.output.csv.clone()) {
        let fresh = !p.exists();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&p)?;
        if fresh {
            writeln!(f, "{CSV_HEADER}")?;
        }
        writeln!(f, "{}", csv_row(&out.record))?;
    }
    if let Some(p) = args.dump_solution.or_else(|| cfg.output.solution.clone()) {
        let mut f = BufWriter::new(fs::File::create(&p)?);
        for (i, v) in out.solution.values.iter().enumerate() {
            writeln!(f, "{i} {v:.17e}")?;
        }
        f.flush()?;
    }
    if let Some(p) = args.dump_matrix.or_else(|| cfg.output.matrix.clone()) {
        write_matrix_market(&out.assembly.matrix, &p)?;
    }
    Ok(())
}

fn cmd_study(cfg: &RunConfig, args: StudyArgs) -> Result<()> {
    let mut study = default_study(args.case)?;
    study.domain = cfg.domain();

    if let Some(f) = &cfg.study.family {
        study.family = f.clone();
    }
    if let Some(name) = &args.family {
        study.family = match name.as_str() {
            "structured" => MeshFamily::Structured,
            "voronoi" => match &study.family {
                MeshFamily::Voronoi { .. } => study.family.clone(),
                _ => MeshFamily::Voronoi {
                    lloyd: 0,
                    seed: 1,
                    layers: None,
                },
            },
            _ => {
                return Err(VemError::Config(format!(
                    "unknown mesh family `{name}` (expected structured or voronoi)"
                )))
            }
        };
    }
    if let Some(p) = &args.mesh {
        study.family = MeshFamily::File { path: p.clone() };
    }
    if args.lloyd.is_some() || args.seed.is_some() || args.layers.is_some() {
        match &mut study.family {
            MeshFamily::Voronoi { lloyd, seed, layers } => {
                *lloyd = args.lloyd.unwrap_or(*lloyd);
                *seed = args.seed.unwrap_or(*seed);
                if args.layers.is_some() {
                    *layers = args.layers;
                }
            }
            _ => {
                return Err(VemError::Config(
                    "--lloyd, --seed and --layers need a Voronoi family".into(),
                ))
            }
        }
    }
    if matches!(study.family, MeshFamily::File { .. }) {
        study.refinements = Some(vec![1]);
    }

    if let Some(ks) = args.k.clone().or_else(|| cfg.problem.k.clone()) {
        study.ks = ks;
    }
    if let Some(r) = args.refinements.clone().or_else(|| cfg.study.refinements.clone()) {
        study.refinements = Some(r);
    }
    if let Some(s) = args.stab.clone().or_else(|| cfg.study.stabilizations.clone()) {
        study.stabilizations = s;
    } else if let Some(kind) = cfg.stabilization.kind {
        study.stabilizations = vec![kind];
    }
    let points = args.tau_points.map(|p| p as usize).or(cfg.stabilization.tau_points);
    if let Some(tau) = args.tau {
        study.taus = vec![tau];
    } else if let Some(points) = points {
        study.taus = TauGrid {
            t_min: -2.0,
            t_max: 2.0,
            points,
        }
        .values();
    } else if let Some(tau) = cfg.stabilization.tau {
        study.taus = vec![tau];
    }
    study.solver = solver_options(&cfg.solver, &args.solver)?;
    study.timings = args.timings || cfg.study.timings.unwrap_or(false);

    let csv_path = args.csv.clone().or_else(|| cfg.output.csv.clone());
    let mut sink: Box<dyn Write> = match &csv_path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(sink, "{CSV_HEADER}")?;
    sink.flush()?;
    let result = run_study(&study, |r| {
        writeln!(sink, "{}", csv_row(r))?;
        sink.flush()?;
        Ok(())
    });
    drop(sink);
    let records = result?;
    let table = summarize(args.case, &records);
    if csv_path.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    Ok(())
}
