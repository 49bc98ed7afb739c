//! P1 finite elements for `-div(sigma grad u) = f` in the disk with `u = g`
//! on the boundary.
//!
//! The coefficient is frozen at each triangle centroid, so the local
//! stiffness is `area * grad(phi_a) . sigma(c_T) grad(phi_b)`. Dirichlet values
//! are imposed strongly: boundary unknowns are eliminated and their coupling
//! moves to the right-hand side. The reduced system is solved with
//! Jacobi-preconditioned conjugate gradients.

pub mod cg;
pub mod sparse;

use std::io::Write;

use crate::coefficients::ConductivityField;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::TriangleMesh;

pub use cg::CgOutcome;
pub use sparse::CsrMatrix;

/// Default relative residual for algebraic solves.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Assembled Dirichlet problem. `matrix` and `load` live on the interior
/// degrees of freedom; `full` and `source` cover every vertex.
#[derive(Clone, Debug)]
pub struct StiffnessSystem<'a> {
    mesh: &'a TriangleMesh,
    field: &'a ConductivityField,
    full: CsrMatrix,
    matrix: CsrMatrix,
    dof_vertex: Vec<usize>,
    vertex_dof: Vec<Option<usize>>,
    source: Vec<f64>,
    lift: Vec<f64>,
    load: Vec<f64>,
}

/// Discrete solution with its provenance.
#[derive(Clone, Debug)]
pub struct Solution<'a> {
    mesh: &'a TriangleMesh,
    field: &'a ConductivityField,
    nodal_values: Vec<f64>,
    source: Vec<f64>,
    pub solve_residual: f64,
    pub iterations: usize,
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 1e-14 && rel_tol < 1e-2 {
        Ok(())
    } else {
        Err(Error::invalid(format!("rel_tol must lie in (1e-14, 1e-2), got {rel_tol}")))
    }
}

/// Full-vertex stiffness matrix and source vector `(f, phi_i)`.
fn assemble_full(
    mesh: &TriangleMesh,
    field: &ConductivityField,
    f: &dyn Fn(Vec2) -> f64,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = mesh.num_vertices();
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    let mut source = vec![0.0; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.signed_area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateTriangle { triangle: t, area });
        }
        let c = mesh.centroid(t);
        let sigma = field.evaluate(c)?;
        let (lo, _) = sigma.eigenvalues();
        if !(lo > 0.0) {
            return Err(Error::NotAdmissible {
                x: c.x,
                y: c.y,
                reason: format!("smallest eigenvalue {lo}"),
            });
        }
        let grads = mesh.hat_gradients(t);
        let mut local = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in a..3 {
                let v = area * grads[a].dot(sigma.mul_vec(grads[b]));
                local[a][b] = v;
                local[b][a] = v;
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((tri[a], tri[b], local[a][b]));
            }
        }
        // Edge-midpoint rule: phi_a = 1/2 at the two midpoints on edges
        // touching a, 0 at the third.
        let p = mesh.triangle_points(t);
        let w = area / 3.0;
        for k in 0..3 {
            let fm = f(p[k].midpoint(p[(k + 1) % 3]));
            source[tri[k]] += 0.5 * w * fm;
            source[tri[(k + 1) % 3]] += 0.5 * w * fm;
        }
    }
    Ok((CsrMatrix::from_triplets(n, n, &triplets), source))
}

/// Assembles the Dirichlet problem with source `f` and boundary data `g`
/// (sampled at boundary vertices).
pub fn assemble_system<'a>(
    mesh: &'a TriangleMesh,
    field: &'a ConductivityField,
    f: impl Fn(Vec2) -> f64,
    g: impl Fn(Vec2) -> f64,
) -> Result<StiffnessSystem<'a>> {
    let (full, source) = assemble_full(mesh, field, &f)?;
    let mut vertex_dof = vec![None; mesh.num_vertices()];
    let mut dof_vertex = Vec::new();
    for v in mesh.interior_vertices() {
        vertex_dof[v] = Some(dof_vertex.len());
        dof_vertex.push(v);
    }
    let matrix = full.restrict(&vertex_dof, dof_vertex.len());
    let mut lift = vec![0.0; mesh.num_vertices()];
    for &v in mesh.boundary_vertices() {
        lift[v] = g(mesh.vertex(v));
    }
    let mut system = StiffnessSystem {
        mesh,
        field,
        full,
        matrix,
        dof_vertex,
        vertex_dof,
        source,
        lift,
        load: Vec::new(),
    };
    system.load = system.reduced_rhs(&system.source, &system.lift);
    Ok(system)
}

/// Solves the assembled system to relative residual `rel_tol`.
pub fn solve_dirichlet<'a>(system: &StiffnessSystem<'a>, rel_tol: f64) -> Result<Solution<'a>> {
    system.solve(rel_tol)
}

impl<'a> StiffnessSystem<'a> {
    pub fn mesh(&self) -> &'a TriangleMesh {
        self.mesh
    }

    pub fn field(&self) -> &'a ConductivityField {
        self.field
    }

    /// Stiffness over all vertices (boundary rows included).
    pub fn full_matrix(&self) -> &CsrMatrix {
        &self.full
    }

    /// Stiffness over interior degrees of freedom.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Boundary values per vertex (zero at interior vertices).
    pub fn lift(&self) -> &[f64] {
        &self.lift
    }

    /// `(f, phi_i)` for every vertex.
    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.dof_vertex
    }

    pub fn dof_of(&self, vertex: usize) -> Option<usize> {
        self.vertex_dof[vertex]
    }

    /// Interior right-hand side `source_I - A_IB g_B`.
    pub fn reduced_rhs(&self, source: &[f64], boundary_values: &[f64]) -> Vec<f64> {
        self.dof_vertex
            .iter()
            .map(|&v| {
                let (cols, vals) = self.full.row(v);
                let coupling: f64 = cols
                    .iter()
                    .zip(vals)
                    .filter(|(&j, _)| self.mesh.is_boundary(j))
                    .map(|(&j, &a)| a * boundary_values[j])
                    .sum();
                source[v] - coupling
            })
            .collect()
    }

    pub fn solve(&self, rel_tol: f64) -> Result<Solution<'a>> {
        self.solve_with(&self.load, &self.lift, self.source.clone(), rel_tol)
    }

    /// Same operator and source, different boundary values (per vertex).
    pub fn solve_with_boundary(&self, boundary_values: &[f64], rel_tol: f64) -> Result<Solution<'a>> {
        let rhs = self.reduced_rhs(&self.source, boundary_values);
        self.solve_with(&rhs, boundary_values, self.source.clone(), rel_tol)
    }

    /// Fully general solve: interior right-hand side, boundary values per
    /// vertex and the full source vector kept for flux recovery.
    pub fn solve_with(
        &self,
        rhs: &[f64],
        boundary_values: &[f64],
        source: Vec<f64>,
        rel_tol: f64,
    ) -> Result<Solution<'a>> {
        check_rel_tol(rel_tol)?;
        let mut interior = vec![0.0; self.dof_vertex.len()];
        let outcome = cg::pcg(&self.matrix, rhs, &mut interior, rel_tol)?;
        let mut nodal_values = vec![0.0; self.mesh.num_vertices()];
        for &v in self.mesh.boundary_vertices() {
            nodal_values[v] = boundary_values[v];
        }
        for (&v, &x) in self.dof_vertex.iter().zip(&interior) {
            nodal_values[v] = x;
        }
        Ok(Solution {
            mesh: self.mesh,
            field: self.field,
            nodal_values,
            source,
            solve_residual: outcome.relative_residual,
            iterations: outcome.iterations,
        })
    }
}

impl<'a> Solution<'a> {
    /// Wraps given nodal values (e.g. an interpolant) as a solution with zero
    /// source term.
    pub fn from_nodal_values(
        mesh: &'a TriangleMesh,
        field: &'a ConductivityField,
        nodal_values: Vec<f64>,
    ) -> Result<Self> {
        if nodal_values.len() != mesh.num_vertices() {
            return Err(Error::invalid(format!(
                "{} nodal values for {} vertices",
                nodal_values.len(),
                mesh.num_vertices()
            )));
        }
        Ok(Solution {
            mesh,
            field,
            nodal_values,
            source: vec![0.0; mesh.num_vertices()],
            solve_residual: 0.0,
            iterations: 0,
        })
    }

    pub fn mesh(&self) -> &'a TriangleMesh {
        self.mesh
    }

    pub fn field(&self) -> &'a ConductivityField {
        self.field
    }

    pub fn values(&self) -> &[f64] {
        &self.nodal_values
    }

    pub fn value(&self, v: usize) -> f64 {
        self.nodal_values[v]
    }

    /// `(f, phi_i)` per vertex.
    pub fn source(&self) -> &[f64] {
        &self.source
    }

    /// P1 interpolation at an arbitrary point of the polygon.
    pub fn evaluate(&self, x: Vec2) -> Option<f64> {
        let loc = self.mesh.locate(x)?;
        let tri = self.mesh.triangles()[loc.triangle];
        Some((0..3).map(|k| loc.barycentric[k] * self.nodal_values[tri[k]]).sum())
    }

    /// Constant gradient of the solution on triangle `t`.
    pub fn gradient(&self, t: usize) -> Vec2 {
        let tri = self.mesh.triangles()[t];
        let grads = self.mesh.hat_gradients(t);
        (0..3).fold(Vec2::ZERO, |acc, k| acc + grads[k] * self.nodal_values[tri[k]])
    }

    /// `a_sigma(u_h, phi_v)` computed locally over the triangles around `v`.
    pub fn energy_against_hat(&self, v: usize) -> Result<f64> {
        let mut total = 0.0;
        for &t in self.mesh.vertex_triangles(v) {
            let tri = self.mesh.triangles()[t];
            let k = tri.iter().position(|&w| w == v).expect("incident triangle");
            let sigma = self.field.evaluate(self.mesh.centroid(t))?;
            let grad_hat = self.mesh.hat_gradients(t)[k];
            total += self.mesh.signed_area(t) * grad_hat.dot(sigma.mul_vec(self.gradient(t)));
        }
        Ok(total)
    }

    /// Writes one `vertex_index value` line per vertex.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for (v, x) in self.nodal_values.iter().enumerate() {
            writeln!(out, "{v} {x}")?;
        }
        Ok(())
    }
}

/// `(L2 error, max vertex error)` against an exact solution. The L2 error
/// uses the edge-midpoint quadrature with P1 values at the midpoints.
pub fn manufactured_error(solution: &Solution<'_>, u_exact: impl Fn(Vec2) -> f64) -> (f64, f64) {
    let mesh = solution.mesh();
    let u = solution.values();
    let mut l2 = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let w = mesh.signed_area(t) / 3.0;
        for k in 0..3 {
            let (a, b) = (k, (k + 1) % 3);
            let uh = 0.5 * (u[tri[a]] + u[tri[b]]);
            l2 += w * (uh - u_exact(p[a].midpoint(p[b]))).powi(2);
        }
    }
    let linf = (0..mesh.num_vertices())
        .map(|v| (u[v] - u_exact(mesh.vertex(v))).abs())
        .fold(0.0, f64::max);
    (l2.sqrt(), linf)
}
