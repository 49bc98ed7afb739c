use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hopflab::barrier::{barrier_certificate, DEFAULT_INNER_RADIUS, DEFAULT_RADIUS};
use hopflab::coefficients::{certify_ellipticity, make_preset, ConductivityField, FieldKind, PresetParams, RasterGrid};
use hopflab::config::ConfigMap;
use hopflab::experiments::{
    boundary_datum, estimate_constant, fit_convergence, read_rows, run_sweep, write_rows, SweepConfig, SWEEP_KEYS,
};
use hopflab::functionals::hopf_report;
use hopflab::kernels::{discrete_poisson_kernel, interior_samples, write_bound_report, KERNEL_REL_TOL, SAMPLE_MARGIN};
use hopflab::mesh::{generate_disk_mesh, TriangleMesh};
use hopflab::solver::{assemble_system, DEFAULT_REL_TOL};
use hopflab::{Error, Result};

/// Every key any subcommand reads from a configuration file.
const KNOWN_KEYS: &[&str] = &[
    "sigma",
    "k",
    "target_h",
    "rel_tol",
    "mesh_path",
    "raster_path",
    "output_path",
    "report_path",
    "bounds_path",
    "certificates_path",
    "margin",
    "min_separation",
    "r",
    "rho",
    "input",
    "exclude_k1",
    "sigma_kinds",
    "k_values",
    "with_kernel_checks",
    "with_barrier",
];

#[derive(Parser)]
#[command(name = "hopflab", version, about = "Quantitative Hopf-lemma experiments on the unit disk")]
struct Cli {
    /// Configuration file (`key = value` lines or a JSON object); flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a disk mesh and write it as text.
    Mesh(MeshArgs),
    /// Solve one Dirichlet problem with datum h_k and print its report row.
    Solve(SolveArgs),
    /// Build the discrete Poisson kernel and its two-sided bound report.
    Kernel(KernelArgs),
    /// Build the barrier certificate at the boundary maximum.
    Barrier(BarrierArgs),
    /// Run the h_k sweep over coefficient presets.
    Sweep(SweepArgs),
    /// Fit log(l1_gamma) against log(dnu) from a sweep CSV.
    Fit(FitArgs),
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long)]
    target_h: Option<f64>,
    /// Mesh file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ProblemArgs {
    /// Coefficient preset.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    target_h: Option<f64>,
    /// Read the mesh from a file instead of generating one.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Raster for the `realistic` preset.
    #[arg(long)]
    raster: Option<PathBuf>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Exponent index of the boundary datum h_k.
    #[arg(long)]
    k: Option<u32>,
    /// Nodal values file.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Report CSV; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Minimal distance of samples from the boundary.
    #[arg(long)]
    margin: Option<f64>,
    /// Pairs closer than this are left out of the bound ratios.
    #[arg(long)]
    min_separation: Option<f64>,
    /// Kernel CSV.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Bound report CSV; stdout when absent.
    #[arg(long)]
    bounds: Option<PathBuf>,
}

#[derive(Args)]
struct BarrierArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Certificate CSV; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated presets.
    #[arg(long)]
    sigma_kinds: Option<String>,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    k_values: Option<String>,
    #[arg(long)]
    target_h: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Sweep CSV; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    kernel_checks: bool,
    #[arg(long)]
    barrier: bool,
    /// Certificate CSV (implies --barrier).
    #[arg(long)]
    certificates: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Fit only this preset; every preset in the file otherwise.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    exclude_k1: bool,
}

fn put<T: ToString>(map: &mut ConfigMap, key: &str, value: &Option<T>) {
    if let Some(v) = value {
        map.set(key, v.to_string());
    }
}

fn put_path(map: &mut ConfigMap, key: &str, value: &Option<PathBuf>) {
    put(map, key, &value.as_ref().map(|p| p.display()));
}

fn put_flag(map: &mut ConfigMap, key: &str, value: bool) {
    if value {
        map.set(key, "true");
    }
}

impl ProblemArgs {
    fn apply(&self, map: &mut ConfigMap) {
        put(map, "sigma", &self.sigma);
        put(map, "target_h", &self.target_h);
        put_path(map, "mesh_path", &self.mesh);
        put_path(map, "raster_path", &self.raster);
        put(map, "rel_tol", &self.rel_tol);
    }
}

fn output(path: Option<&str>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_mesh(map: &ConfigMap) -> Result<TriangleMesh> {
    match map.get("mesh_path") {
        Some(p) => TriangleMesh::read_text(BufReader::new(File::open(p)?)),
        None => generate_disk_mesh(map.parse_value("target_h")?.unwrap_or(0.05)),
    }
}

fn load_field(map: &ConfigMap) -> Result<ConductivityField> {
    let kind: FieldKind = map.parse_value("sigma")?.unwrap_or(FieldKind::Identity);
    match map.get("raster_path") {
        Some(p) => {
            let raster = RasterGrid::read_text(BufReader::new(File::open(p)?))?;
            make_preset(kind, &PresetParams::default().with_raster(raster))
        }
        None => ConductivityField::preset(kind),
    }
}

fn boundary_values(mesh: &TriangleMesh, k: u32) -> Vec<f64> {
    let datum = boundary_datum(k);
    mesh.vertices().iter().map(|&p| datum(p)).collect()
}

fn run_mesh(map: &ConfigMap) -> Result<()> {
    let mesh = generate_disk_mesh(map.parse_value("target_h")?.unwrap_or(0.05))?;
    mesh.write_text(output(map.get("output_path"))?)?;
    eprintln!(
        "{} vertices, {} triangles, max angle {:.2} deg",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.max_angle().to_degrees()
    );
    Ok(())
}

fn run_solve(map: &ConfigMap) -> Result<()> {
    let mesh = load_mesh(map)?;
    let field = load_field(map)?;
    certify_ellipticity(&field, &mesh)?;
    let k = map.parse_value("k")?.unwrap_or(1);
    let rel_tol = map.parse_value("rel_tol")?.unwrap_or(DEFAULT_REL_TOL);
    let system = assemble_system(&mesh, &field, |_| 0.0, boundary_datum(k))?;
    let solution = system.solve(rel_tol)?;
    if let Some(p) = map.get("output_path") {
        solution.write_text(File::create(p)?)?;
    }
    let report = hopf_report(&solution)?;
    write_rows(&[report.to_row(field.kind().as_str(), Some(k), mesh.target_h())], output(map.get("report_path"))?)?;
    eprintln!(
        "cg: {} iterations, relative residual {:.2e}",
        solution.iterations, solution.solve_residual
    );
    Ok(())
}

fn run_kernel(map: &ConfigMap) -> Result<()> {
    let mesh = load_mesh(map)?;
    let field = load_field(map)?;
    let margin = map.parse_value("margin")?.unwrap_or(SAMPLE_MARGIN);
    let rel_tol = map.parse_value("rel_tol")?.unwrap_or(KERNEL_REL_TOL);
    let samples = interior_samples(&mesh, margin);
    let kernel = discrete_poisson_kernel(&mesh, &field, &samples, rel_tol)?;
    if let Some(p) = map.get("output_path") {
        kernel.write_csv(File::create(p)?)?;
    }
    let min_value = kernel.min_value();
    if min_value < -1e-8 {
        return Err(Error::Certification(format!("kernel value {min_value:e} is negative")));
    }
    let min_separation = map.parse_value("min_separation")?.unwrap_or(0.0);
    let ratios = write_bound_report(&kernel, min_separation, output(map.get("bounds_path"))?)?;
    let row_error = kernel
        .row_sums()
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    eprintln!(
        "{} samples x {} boundary vertices; varkappa_obs {:.4}; max |row sum - 1| {:.2e}",
        kernel.num_rows(),
        kernel.num_cols(),
        ratios.varkappa_obs,
        row_error
    );
    Ok(())
}

fn run_barrier(map: &ConfigMap) -> Result<()> {
    let mesh = load_mesh(map)?;
    let field = load_field(map)?;
    let k = map.parse_value("k")?.unwrap_or(1);
    let rel_tol = map.parse_value("rel_tol")?.unwrap_or(DEFAULT_REL_TOL);
    let system = assemble_system(&mesh, &field, |_| 0.0, |_| 0.0)?;
    let solution = system.solve_with_boundary(&boundary_values(&mesh, k), rel_tol)?;
    let x0 = hopf_report(&solution)?.x0.vertex;
    let r = map.parse_value("r")?.unwrap_or(DEFAULT_RADIUS);
    let rho = map.parse_value("rho")?.unwrap_or(DEFAULT_INNER_RADIUS);
    let certificate = barrier_certificate(&solution, x0, r, rho)?;
    write_rows(&[certificate.to_row()], output(map.get("output_path"))?)?;
    Ok(())
}

fn run_sweep_command(map: &ConfigMap) -> Result<()> {
    let sweep_map = {
        let mut m = ConfigMap::new();
        for key in SWEEP_KEYS.iter().filter(|&&k| k != "output_path") {
            if let Some(v) = map.get(key) {
                m.set(key, v);
            }
        }
        if map.get("certificates_path").is_some() {
            m.set("with_barrier", "true");
        }
        m
    };
    let config = SweepConfig::from_config(&sweep_map)?;
    let outcome = run_sweep(&config)?;
    write_rows(&outcome.rows, output(map.get("output_path"))?)?;
    if let Some(p) = map.get("certificates_path") {
        write_rows(&outcome.certificates, File::create(p)?)?;
    }
    let (c_me0, c_me) = estimate_constant(&outcome.rows)?;
    eprintln!("{} rows; C_me0 = {c_me0:.6}, C_me = {c_me:.6}", outcome.rows.len());
    for check in &outcome.kernel_checks {
        eprintln!(
            "{}: varkappa_obs {:.4}, representation residual {:.2e}",
            check.sigma_kind, check.varkappa_obs, check.max_representation_residual
        );
        if check.max_representation_residual > 1e-8 {
            return Err(Error::Certification(format!(
                "representation residual {:e} for `{}`",
                check.max_representation_residual, check.sigma_kind
            )));
        }
    }
    Ok(())
}

fn run_fit(map: &ConfigMap) -> Result<()> {
    let input = map
        .get("input")
        .ok_or_else(|| Error::InvalidArgument("fit needs --input".into()))?;
    let rows = read_rows(File::open(Path::new(input))?)?;
    let exclude_k1 = map.parse_value("exclude_k1")?.unwrap_or(false);
    let mut kinds: Vec<&str> = match map.get("sigma") {
        Some(s) => vec![s],
        None => rows.iter().map(|r| r.sigma_kind.as_str()).collect(),
    };
    kinds.sort_unstable();
    kinds.dedup();
    let mut out = io::stdout().lock();
    writeln!(out, "sigma_kind,points,slope,intercept,r_squared")?;
    for kind in kinds {
        let fit = fit_convergence(&rows, kind, exclude_k1)?;
        writeln!(out, "{kind},{},{},{},{}", fit.points, fit.slope, fit.intercept, fit.r_squared)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut map = match &cli.config {
        Some(p) => ConfigMap::load(p)?,
        None => ConfigMap::new(),
    };
    map.reject_unknown(KNOWN_KEYS)?;
    match &cli.command {
        Command::Mesh(a) => {
            put(&mut map, "target_h", &a.target_h);
            put_path(&mut map, "output_path", &a.output);
            run_mesh(&map)
        }
        Command::Solve(a) => {
            a.problem.apply(&mut map);
            put(&mut map, "k", &a.k);
            put_path(&mut map, "output_path", &a.output);
            put_path(&mut map, "report_path", &a.report);
            run_solve(&map)
        }
        Command::Kernel(a) => {
            a.problem.apply(&mut map);
            put(&mut map, "margin", &a.margin);
            put(&mut map, "min_separation", &a.min_separation);
            put_path(&mut map, "output_path", &a.output);
            put_path(&mut map, "bounds_path", &a.bounds);
            run_kernel(&map)
        }
        Command::Barrier(a) => {
            a.problem.apply(&mut map);
            put(&mut map, "k", &a.k);
            put(&mut map, "r", &a.r);
            put(&mut map, "rho", &a.rho);
            put_path(&mut map, "output_path", &a.output);
            run_barrier(&map)
        }
        Command::Sweep(a) => {
            put(&mut map, "sigma_kinds", &a.sigma_kinds);
            put(&mut map, "k_values", &a.k_values);
            put(&mut map, "target_h", &a.target_h);
            put(&mut map, "rel_tol", &a.rel_tol);
            put_path(&mut map, "output_path", &a.output);
            put_flag(&mut map, "with_kernel_checks", a.kernel_checks);
            put_flag(&mut map, "with_barrier", a.barrier);
            put_path(&mut map, "certificates_path", &a.certificates);
            run_sweep_command(&map)
        }
        Command::Fit(a) => {
            put_path(&mut map, "input", &a.input);
            put(&mut map, "sigma", &a.sigma);
            put_flag(&mut map, "exclude_k1", a.exclude_k1);
            run_fit(&map)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_certification_failure() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
