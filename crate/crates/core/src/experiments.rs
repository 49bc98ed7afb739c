//! Boundary-data sweep `h_k = ((x2 + 3) / 4)^(1/k)` across coefficient
//! presets, log-log convergence fits and empirical constants.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::{barrier_certificate, BarrierCertificate, DEFAULT_INNER_RADIUS, DEFAULT_RADIUS};
use crate::coefficients::{ConductivityField, FieldKind};
use crate::config::ConfigMap;
use crate::error::{Error, Result};
use crate::functionals::{hopf_report, ReportRow};
use crate::geometry::Vec2;
use crate::kernels::{
    discrete_poisson_kernel, interior_samples, kernel_bound_ratios, representation_residual, KERNEL_REL_TOL,
    SAMPLE_MARGIN,
};
use crate::mesh::{generate_disk_mesh, TriangleMesh};
use crate::solver::{assemble_system, StiffnessSystem, DEFAULT_REL_TOL};

pub type SweepRow = ReportRow;

/// Keys understood by [`SweepConfig::from_config`].
pub const SWEEP_KEYS: [&str; 7] = [
    "sigma_kinds",
    "k_values",
    "target_h",
    "rel_tol",
    "output_path",
    "with_kernel_checks",
    "with_barrier",
];

/// Boundary datum `h_k`.
pub fn boundary_datum(k: u32) -> impl Fn(Vec2) -> f64 + Copy {
    let exponent = 1.0 / k as f64;
    move |x: Vec2| ((x.y + 3.0) / 4.0).powf(exponent)
}

/// `1, 2, 4, ..., 256`.
pub fn default_k_values() -> Vec<u32> {
    (0..9).map(|i| 1 << i).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub sigma_kinds: Vec<FieldKind>,
    pub k_values: Vec<u32>,
    pub target_h: f64,
    pub rel_tol: f64,
    pub output_path: Option<PathBuf>,
    pub with_kernel_checks: bool,
    pub with_barrier: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sigma_kinds: FieldKind::BENCHMARK.to_vec(),
            k_values: default_k_values(),
            target_h: 0.05,
            rel_tol: DEFAULT_REL_TOL,
            output_path: None,
            with_kernel_checks: false,
            with_barrier: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_kinds.is_empty() {
            return Err(Error::invalid("sigma_kinds is empty"));
        }
        if self.k_values.is_empty() {
            return Err(Error::invalid("k_values is empty"));
        }
        if self.k_values[0] == 0 || self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("k_values must be positive and strictly increasing"));
        }
        if !(self.target_h > 0.0 && self.target_h < 1.0) {
            return Err(Error::invalid(format!("target_h must lie in (0, 1), got {}", self.target_h)));
        }
        if !(self.rel_tol > 1e-14 && self.rel_tol < 1e-2) {
            return Err(Error::invalid(format!("rel_tol must lie in (1e-14, 1e-2), got {}", self.rel_tol)));
        }
        Ok(())
    }

    /// Defaults overridden by whichever [`SWEEP_KEYS`] are present.
    pub fn from_config(map: &ConfigMap) -> Result<Self> {
        let mut config = SweepConfig::default();
        if let Some(kinds) = map.parse_list("sigma_kinds")? {
            config.sigma_kinds = kinds;
        }
        if let Some(k) = map.parse_list("k_values")? {
            config.k_values = k;
        }
        if let Some(h) = map.parse_value("target_h")? {
            config.target_h = h;
        }
        if let Some(t) = map.parse_value("rel_tol")? {
            config.rel_tol = t;
        }
        if let Some(p) = map.get("output_path") {
            config.output_path = Some(PathBuf::from(p));
        }
        if let Some(b) = map.parse_value("with_kernel_checks")? {
            config.with_kernel_checks = b;
        }
        if let Some(b) = map.parse_value("with_barrier")? {
            config.with_barrier = b;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Per-preset kernel diagnostics gathered during a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub sigma_kind: String,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub varkappa_obs: f64,
    /// Largest representation residual over every `h_k`.
    pub max_representation_residual: f64,
    pub max_column_integral: f64,
}

/// Certificate record with its sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCertificateRow {
    pub sigma_kind: String,
    pub k: u32,
    pub x0_x: f64,
    pub x0_y: f64,
    pub r: f64,
    pub rho: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub subsol_min: f64,
    pub ineq1_margin: f64,
    pub chain_ratio: Option<f64>,
}

impl SweepCertificateRow {
    fn new(kind: FieldKind, k: u32, c: &BarrierCertificate) -> Self {
        SweepCertificateRow {
            sigma_kind: kind.to_string(),
            k,
            x0_x: c.x0.x,
            x0_y: c.x0.y,
            r: c.r,
            rho: c.rho,
            lambda: c.lambda,
            epsilon: c.epsilon,
            gamma: c.gamma,
            subsol_min: c.subsolution_min,
            ineq1_margin: c.ineq1_margin,
            chain_ratio: c.chain_ratio,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutcome {
    /// Sorted by `(sigma_kind, k)`.
    pub rows: Vec<SweepRow>,
    /// Same order as `rows`; empty unless barriers were requested.
    pub certificates: Vec<SweepCertificateRow>,
    /// Sorted by `sigma_kind`; empty unless kernel checks were requested.
    pub kernel_checks: Vec<KernelCheck>,
}

struct Cell {
    row: SweepRow,
    certificate: Option<SweepCertificateRow>,
}

fn run_cell(system: &StiffnessSystem<'_>, kind: FieldKind, k: u32, config: &SweepConfig) -> Result<Cell> {
    let mesh = system.mesh();
    let datum = boundary_datum(k);
    let data: Vec<f64> = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, &p)| if mesh.is_boundary(v) { datum(p) } else { 0.0 })
        .collect();
    let solution = system.solve_with_boundary(&data, config.rel_tol)?;
    let report = hopf_report(&solution)?;
    if report.x0.point != Vec2::new(0.0, 1.0) {
        return Err(Error::Certification(format!(
            "boundary maximum resolved to ({}, {}) instead of the north pole",
            report.x0.point.x, report.x0.point.y
        )));
    }
    let certificate = if config.with_barrier {
        let c = barrier_certificate(&solution, report.x0.vertex, DEFAULT_RADIUS, DEFAULT_INNER_RADIUS)?;
        Some(SweepCertificateRow::new(kind, k, &c))
    } else {
        None
    };
    Ok(Cell {
        row: report.to_row(kind.as_str(), Some(k), config.target_h),
        certificate,
    })
}

fn kernel_check(
    mesh: &TriangleMesh,
    field: &ConductivityField,
    system: &StiffnessSystem<'_>,
    config: &SweepConfig,
) -> Result<KernelCheck> {
    let samples = interior_samples(mesh, SAMPLE_MARGIN);
    let kernel = discrete_poisson_kernel(mesh, field, &samples, KERNEL_REL_TOL)?;
    let ratios = kernel_bound_ratios(&kernel, 0.0)?;
    let mut max_representation_residual: f64 = 0.0;
    let mut max_column_integral: f64 = 0.0;
    for &k in &config.k_values {
        let datum = boundary_datum(k);
        let data: Vec<f64> = mesh.vertices().iter().map(|&p| datum(p)).collect();
        let solution = system.solve_with_boundary(&data, KERNEL_REL_TOL)?;
        let check = representation_residual(&kernel, &solution)?;
        max_representation_residual = max_representation_residual.max(check.max_abs_residual);
        max_column_integral = max_column_integral.max(check.max_column_integral);
    }
    Ok(KernelCheck {
        sigma_kind: field.kind().to_string(),
        min_ratio: ratios.min_ratio,
        max_ratio: ratios.max_ratio,
        varkappa_obs: ratios.varkappa_obs,
        max_representation_residual,
        max_column_integral,
    })
}

/// Runs every `(sigma, k)` cell in parallel. Output is independent of the
/// thread count. A failing cell aborts the sweep with its coordinates.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let mesh = generate_disk_mesh(config.target_h)?;
    let mut kinds = config.sigma_kinds.clone();
    kinds.sort_by_key(|k| k.as_str());
    kinds.dedup();
    let fields = kinds
        .iter()
        .map(|&k| ConductivityField::preset(k))
        .collect::<Result<Vec<_>>>()?;
    let systems = fields
        .par_iter()
        .map(|f| assemble_system(&mesh, f, |_| 0.0, |_| 0.0))
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, u32)> = (0..kinds.len())
        .flat_map(|s| config.k_values.iter().map(move |&k| (s, k)))
        .collect();
    let cells: Vec<Result<Cell>> = tasks
        .par_iter()
        .map(|&(s, k)| run_cell(&systems[s], kinds[s], k, config))
        .collect();
    let mut outcome = SweepOutcome::default();
    for (&(s, k), cell) in tasks.iter().zip(cells) {
        let cell = cell.map_err(|e| Error::SweepCell {
            sigma_kind: kinds[s].to_string(),
            k,
            source: Box::new(e),
        })?;
        outcome.rows.push(cell.row);
        outcome.certificates.extend(cell.certificate);
    }

    if config.with_kernel_checks {
        outcome.kernel_checks = fields
            .iter()
            .zip(&systems)
            .map(|(f, system)| kernel_check(&mesh, f, system, config))
            .collect::<Result<_>>()?;
    }

    if let Some(path) = &config.output_path {
        write_rows(&outcome.rows, std::fs::File::create(path)?)?;
    }
    Ok(outcome)
}

pub fn write_rows<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of `log(l1_gamma)` against `log(dnu)` over the rows of
/// one preset (optionally without `k = 1`). Needs at least four rows.
pub fn fit_convergence(rows: &[SweepRow], sigma_kind: &str, exclude_k1: bool) -> Result<ConvergenceFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in rows.iter().filter(|r| r.sigma_kind == sigma_kind) {
        if exclude_k1 && row.k == Some(1) {
            continue;
        }
        if !(row.dnu > 0.0 && row.l1_gamma > 0.0) {
            return Err(Error::invalid(format!(
                "non-positive data point (k = {:?}): dnu = {}, l1_gamma = {}",
                row.k, row.dnu, row.l1_gamma
            )));
        }
        xs.push(row.dnu.ln());
        ys.push(row.l1_gamma.ln());
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::invalid(format!("need at least 4 rows for `{sigma_kind}`, found {n}")));
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("all dnu values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(ConvergenceFit {
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

/// Empirical constants `(max ratio_me0, max ratio_me)`; rows without ratios
/// (constant data) are skipped.
pub fn estimate_constant(rows: &[SweepRow]) -> Result<(f64, f64)> {
    let c_me0 = rows.iter().filter_map(|r| r.ratio_me0).fold(f64::NEG_INFINITY, f64::max);
    let c_me = rows.iter().filter_map(|r| r.ratio_me).fold(f64::NEG_INFINITY, f64::max);
    if c_me0.is_finite() && c_me.is_finite() {
        Ok((c_me0, c_me))
    } else {
        Err(Error::invalid("no row carries finite ratios"))
    }
}

/// `(pi / 4 + pi / 2) / (1 / 4)`, the constant for the affine datum `h_1`.
pub const AFFINE_RATIO_ME: f64 = 3.0 * PI;
