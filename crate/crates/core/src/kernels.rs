//! Discrete Poisson kernels and Green's functions.
//!
//! The kernel is built through harmonic measure: column `j` solves the
//! homogeneous problem with boundary data equal to the hat function at `y_j`,
//! and `K(x_i, y_j) = u_j(x_i) / w_j`. Every discrete Dirichlet solution with
//! zero source is then represented exactly (by linearity) as
//! `u_h(x_i) = sum_j g(y_j) K(x_i, y_j) w_j`.

use std::f64::consts::PI;
use std::io::Write;
use std::ptr;

use rayon::prelude::*;

use crate::coefficients::{ConductivityField, FieldKind};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::TriangleMesh;
use crate::solver::{assemble_system, Solution, StiffnessSystem};

/// Default interior margin for kernel samples.
pub const SAMPLE_MARGIN: f64 = 0.1;
/// Algebraic tolerance used for kernel and Green solves.
pub const KERNEL_REL_TOL: f64 = 1e-12;
/// Cap on the offending pairs listed in a bound violation.
const MAX_REPORTED_PAIRS: usize = 32;

/// Closed-form Poisson kernel of the unit disk for the Laplacian.
pub fn disk_poisson_kernel(x: Vec2, y: Vec2) -> f64 {
    (1.0 - x.norm_squared()) / (2.0 * PI * x.distance(y).powi(2))
}

/// Interior vertices at distance at least `margin` from the unit circle,
/// in increasing index order.
pub fn interior_samples(mesh: &TriangleMesh, margin: f64) -> Vec<usize> {
    mesh.interior_vertices()
        .filter(|&v| TriangleMesh::dist_to_boundary(mesh.vertex(v)) >= margin - 1e-12)
        .collect()
}

/// `K(x_i, y_j)` for interior samples `x_i` and every boundary vertex `y_j`.
#[derive(Clone, Debug)]
pub struct KernelMatrix<'a> {
    mesh: &'a TriangleMesh,
    field: &'a ConductivityField,
    samples: Vec<usize>,
    lump_weights: Vec<f64>,
    /// Row-major, `samples.len() x boundary`.
    values: Vec<f64>,
    column_integrals: Vec<f64>,
}

/// Extremes of `R = K |x - y|^2 / (1 - |x|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRatios {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub varkappa_obs: f64,
    pub pairs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepresentationCheck {
    pub max_abs_residual: f64,
    /// `max_j sum_i area_i K(x_i, y_j)` over interior vertices.
    pub max_column_integral: f64,
}

/// Nodal values of `G(., y)` for an interior source vertex `y`.
#[derive(Clone, Debug)]
pub struct GreenColumn {
    pub source: usize,
    pub values: Vec<f64>,
}

fn check_samples(mesh: &TriangleMesh, samples: &[usize]) -> Result<()> {
    for &v in samples {
        if v >= mesh.num_vertices() || mesh.is_boundary(v) {
            return Err(Error::invalid(format!("sample {v} is not an interior vertex")));
        }
    }
    Ok(())
}

/// Builds the discrete kernel by one homogeneous solve per boundary vertex.
/// Columns run in parallel; the first failing column (by index) is reported.
pub fn discrete_poisson_kernel<'a>(
    mesh: &'a TriangleMesh,
    field: &'a ConductivityField,
    samples: &[usize],
    rel_tol: f64,
) -> Result<KernelMatrix<'a>> {
    check_samples(mesh, samples)?;
    let system = assemble_system(mesh, field, |_| 0.0, |_| 0.0)?;
    let boundary = mesh.boundary_vertices();
    let lump_weights = mesh.boundary_geometry().lump_weights;
    let areas = mesh.vertex_areas();

    let columns: Vec<Result<(Vec<f64>, f64)>> = (0..boundary.len())
        .into_par_iter()
        .map(|j| {
            let mut data = vec![0.0; mesh.num_vertices()];
            data[boundary[j]] = 1.0;
            let u = system.solve_with_boundary(&data, rel_tol)?;
            let w = lump_weights[j];
            let column = samples.iter().map(|&v| u.value(v) / w).collect();
            let integral = mesh.interior_vertices().map(|v| areas[v] * u.value(v)).sum::<f64>() / w;
            Ok((column, integral))
        })
        .collect();

    let nb = boundary.len();
    let mut values = vec![0.0; samples.len() * nb];
    let mut column_integrals = Vec::with_capacity(nb);
    for (j, column) in columns.into_iter().enumerate() {
        let (column, integral) = column.map_err(|e| Error::KernelColumn {
            column: j,
            source: Box::new(e),
        })?;
        for (i, k) in column.into_iter().enumerate() {
            values[i * nb + j] = k;
        }
        column_integrals.push(integral);
    }
    Ok(KernelMatrix {
        mesh,
        field,
        samples: samples.to_vec(),
        lump_weights,
        values,
        column_integrals,
    })
}

impl<'a> KernelMatrix<'a> {
    /// Kernel given by a formula `k(x, y)` on the same sample layout, e.g.
    /// [`disk_poisson_kernel`].
    pub fn from_fn(
        mesh: &'a TriangleMesh,
        field: &'a ConductivityField,
        samples: &[usize],
        k: impl Fn(Vec2, Vec2) -> f64,
    ) -> Result<Self> {
        check_samples(mesh, samples)?;
        let boundary = mesh.boundary_vertices();
        let areas = mesh.vertex_areas();
        let mut values = Vec::with_capacity(samples.len() * boundary.len());
        for &v in samples {
            values.extend(boundary.iter().map(|&b| k(mesh.vertex(v), mesh.vertex(b))));
        }
        let column_integrals = boundary
            .iter()
            .map(|&b| {
                mesh.interior_vertices()
                    .map(|v| areas[v] * k(mesh.vertex(v), mesh.vertex(b)))
                    .sum()
            })
            .collect();
        Ok(KernelMatrix {
            mesh,
            field,
            samples: samples.to_vec(),
            lump_weights: mesh.boundary_geometry().lump_weights,
            values,
            column_integrals,
        })
    }

    pub fn mesh(&self) -> &'a TriangleMesh {
        self.mesh
    }

    pub fn field(&self) -> &'a ConductivityField {
        self.field
    }

    /// Sample vertex indices (rows).
    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    /// Boundary vertex indices (columns).
    pub fn boundary_vertices(&self) -> &[usize] {
        self.mesh.boundary_vertices()
    }

    pub fn lump_weights(&self) -> &[f64] {
        &self.lump_weights
    }

    pub fn num_rows(&self) -> usize {
        self.samples.len()
    }

    pub fn num_cols(&self) -> usize {
        self.lump_weights.len()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.num_cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nb = self.num_cols();
        &self.values[i * nb..(i + 1) * nb]
    }

    pub fn sample_point(&self, i: usize) -> Vec2 {
        self.mesh.vertex(self.samples[i])
    }

    pub fn boundary_point(&self, j: usize) -> Vec2 {
        self.mesh.vertex(self.mesh.boundary_vertices()[j])
    }

    /// `sum_j K(x_i, y_j) w_j` per row; 1 up to solver tolerance.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.num_rows())
            .map(|i| self.row(i).iter().zip(&self.lump_weights).map(|(k, w)| k * w).sum())
            .collect()
    }

    pub fn column_integrals(&self) -> &[f64] {
        &self.column_integrals
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `xi_index,yj_index,K,value_exact_if_available` with vertex
    /// indices; the exact column is the disk kernel for the identity field
    /// and empty otherwise.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let exact = self.field.kind() == FieldKind::Identity;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi_index", "yj_index", "K", "value_exact_if_available"])?;
        for (i, &xi) in self.samples.iter().enumerate() {
            for (j, &yj) in self.boundary_vertices().iter().enumerate() {
                let exact = if exact {
                    disk_poisson_kernel(self.mesh.vertex(xi), self.mesh.vertex(yj)).to_string()
                } else {
                    String::new()
                };
                w.write_record([
                    xi.to_string(),
                    yj.to_string(),
                    self.value(i, j).to_string(),
                    exact,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn bound_ratio(kernel: &KernelMatrix<'_>, i: usize, j: usize) -> f64 {
    let x = kernel.sample_point(i);
    let y = kernel.boundary_point(j);
    kernel.value(i, j) * x.distance(y).powi(2) / TriangleMesh::dist_to_boundary(x)
}

/// `R(x, y) = K(x, y) |x - y|^2 / dist(x, Gamma)` over pairs with
/// `|x - y| >= min_separation`. Any non-positive ratio is a bound violation.
pub fn kernel_bound_ratios(kernel: &KernelMatrix<'_>, min_separation: f64) -> Result<BoundRatios> {
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut pairs = 0;
    let mut offending = Vec::new();
    let mut count = 0;
    for i in 0..kernel.num_rows() {
        for j in 0..kernel.num_cols() {
            if kernel.sample_point(i).distance(kernel.boundary_point(j)) < min_separation {
                continue;
            }
            let r = bound_ratio(kernel, i, j);
            if !(r > 0.0) {
                count += 1;
                if offending.len() < MAX_REPORTED_PAIRS {
                    offending.push((kernel.samples[i], kernel.boundary_vertices()[j]));
                }
                continue;
            }
            pairs += 1;
            min_ratio = min_ratio.min(r);
            max_ratio = max_ratio.max(r);
        }
    }
    if count > 0 {
        return Err(Error::KernelBoundViolation {
            count,
            first: offending[0],
            pairs: offending,
        });
    }
    if pairs == 0 {
        return Err(Error::invalid("no sample pairs satisfy the separation"));
    }
    Ok(BoundRatios {
        min_ratio,
        max_ratio,
        varkappa_obs: max_ratio.max(1.0 / min_ratio),
        pairs,
    })
}

/// Writes `x1,x2,y1,y2,R` for every pair with `|x - y| >= min_separation`,
/// followed by a `#` summary line.
pub fn write_bound_report<W: Write>(
    kernel: &KernelMatrix<'_>,
    min_separation: f64,
    mut out: W,
) -> Result<BoundRatios> {
    let ratios = kernel_bound_ratios(kernel, min_separation)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["x1", "x2", "y1", "y2", "R"])?;
        for i in 0..kernel.num_rows() {
            for j in 0..kernel.num_cols() {
                let (x, y) = (kernel.sample_point(i), kernel.boundary_point(j));
                if x.distance(y) < min_separation {
                    continue;
                }
                w.serialize((x.x, x.y, y.x, y.y, bound_ratio(kernel, i, j)))?;
            }
        }
        w.flush()?;
    }
    writeln!(
        out,
        "# min_ratio={} max_ratio={} varkappa_obs={} pairs={}",
        ratios.min_ratio, ratios.max_ratio, ratios.varkappa_obs, ratios.pairs
    )?;
    Ok(ratios)
}

/// Residual of `u(x0) - u(x_i) = sum_j K(x_i, y_j) (u(x0) - g(y_j)) w_j`
/// at every sample, where `u(x0)` is the boundary maximum. `solution` must
/// come from the kernel's mesh and field with zero source.
pub fn representation_residual(
    kernel: &KernelMatrix<'_>,
    solution: &Solution<'_>,
) -> Result<RepresentationCheck> {
    if !ptr::eq(kernel.mesh, solution.mesh()) || !ptr::eq(kernel.field, solution.field()) {
        return Err(Error::Mismatch);
    }
    let boundary = kernel.boundary_vertices();
    let u0 = boundary
        .iter()
        .map(|&v| solution.value(v))
        .fold(f64::NEG_INFINITY, f64::max);
    let deficit: Vec<f64> = boundary
        .iter()
        .zip(&kernel.lump_weights)
        .map(|(&v, &w)| (u0 - solution.value(v)) * w)
        .collect();
    let max_abs_residual = (0..kernel.num_rows())
        .map(|i| {
            let represented: f64 = kernel.row(i).iter().zip(&deficit).map(|(k, d)| k * d).sum();
            (u0 - solution.value(kernel.samples[i]) - represented).abs()
        })
        .fold(0.0, f64::max);
    let max_column_integral = kernel.column_integrals.iter().copied().fold(0.0, f64::max);
    Ok(RepresentationCheck {
        max_abs_residual,
        max_column_integral,
    })
}

/// `max |K(x1, y_j) - K(x2, y_j)| / |x1 - x2|` over sample pairs inside the
/// disk of radius `radius` and every boundary vertex.
pub fn kernel_lipschitz(kernel: &KernelMatrix<'_>, radius: f64) -> Result<f64> {
    let inner: Vec<usize> = (0..kernel.num_rows())
        .filter(|&i| kernel.sample_point(i).norm() <= radius + 1e-12)
        .collect();
    if inner.len() < 2 {
        return Err(Error::invalid(format!("fewer than two samples within radius {radius}")));
    }
    let mut best: f64 = 0.0;
    for (a, &i1) in inner.iter().enumerate() {
        for &i2 in &inner[a + 1..] {
            let d = kernel.sample_point(i1).distance(kernel.sample_point(i2));
            let diff = kernel
                .row(i1)
                .iter()
                .zip(kernel.row(i2))
                .map(|(k1, k2)| (k1 - k2).abs())
                .fold(0.0, f64::max);
            best = best.max(diff / d);
        }
    }
    Ok(best)
}

/// Discrete Green column: unit nodal load at `source`, zero boundary values.
pub fn discrete_green(
    mesh: &TriangleMesh,
    field: &ConductivityField,
    source: usize,
    rel_tol: f64,
) -> Result<GreenColumn> {
    let system = assemble_system(mesh, field, |_| 0.0, |_| 0.0)?;
    green_column(&system, source, rel_tol)
}

/// [`discrete_green`] reusing an assembled system.
pub fn green_column(system: &StiffnessSystem<'_>, source: usize, rel_tol: f64) -> Result<GreenColumn> {
    let mesh = system.mesh();
    let dof = system
        .dof_of(source)
        .ok_or_else(|| Error::invalid(format!("Green source {source} is not an interior vertex")))?;
    let mut rhs = vec![0.0; system.interior_dofs().len()];
    rhs[dof] = 1.0;
    let mut load = vec![0.0; mesh.num_vertices()];
    load[source] = 1.0;
    let u = system.solve_with(&rhs, &vec![0.0; mesh.num_vertices()], load, rel_tol)?;
    Ok(GreenColumn {
        source,
        values: u.values().to_vec(),
    })
}
