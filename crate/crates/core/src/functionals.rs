//! Boundary maximum, normal derivative and L1 deviations of a discrete
//! solution: the two sides of
//!
//! ```text
//! |u(x0) - u|_L1(Omega)                          <= C |u(x0) - u|_L1(Gamma)
//! |u(x0) - u|_L1(Omega) + |u(x0) - u|_L1(Gamma)  <= C d_nu u(x0)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::solver::Solution;

/// Slack allowed for interior values above the boundary maximum.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;
/// Below this boundary deviation the solution counts as constant.
pub const CONSTANT_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryMax {
    pub vertex: usize,
    pub point: Vec2,
    pub u_max: f64,
}

/// Normal-derivative estimates at a boundary vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxEstimate {
    /// Geometric derivative `grad u . nu` recovered from the variational
    /// flux. This is the primary estimate.
    pub normal: f64,
    /// Variational (conormal) flux `sigma grad u . nu`.
    pub conormal: f64,
    /// Angle-weighted average of `grad u_h . nu` over incident triangles.
    pub gradient_average: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfReport {
    pub x0: BoundaryMax,
    pub normal_derivative: f64,
    pub conormal_derivative: f64,
    pub flux_cross_check: f64,
    pub l1_omega: f64,
    pub l1_gamma: f64,
    /// `None` for constant solutions.
    pub ratio_me0: Option<f64>,
    pub ratio_me: Option<f64>,
}

/// One CSV record:
/// `sigma_kind,k,h,x0_x,x0_y,u_max,dnu,l1_omega,l1_gamma,ratio_me0,ratio_me`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub sigma_kind: String,
    pub k: Option<u32>,
    pub h: f64,
    pub x0_x: f64,
    pub x0_y: f64,
    pub u_max: f64,
    pub dnu: f64,
    pub l1_omega: f64,
    pub l1_gamma: f64,
    pub ratio_me0: Option<f64>,
    pub ratio_me: Option<f64>,
}

/// Boundary vertex with the largest nodal value (smallest index on ties).
/// Fails if an interior vertex exceeds it by more than [`MAX_PRINCIPLE_TOL`].
pub fn locate_max(solution: &Solution<'_>) -> Result<BoundaryMax> {
    let mesh = solution.mesh();
    let u = solution.values();
    let mut best: Option<(usize, f64)> = None;
    for &v in mesh.boundary_vertices() {
        let better = match best {
            None => true,
            Some((bv, bu)) => u[v] > bu || (u[v] == bu && v < bv),
        };
        if better {
            best = Some((v, u[v]));
        }
    }
    let (vertex, u_max) = best.ok_or_else(|| Error::InvalidMesh("mesh has no boundary".into()))?;
    if let Some(v) = mesh
        .interior_vertices()
        .filter(|&v| u[v] > u_max + MAX_PRINCIPLE_TOL)
        .max_by(|&a, &b| u[a].total_cmp(&u[b]))
    {
        return Err(Error::MaximumPrincipleViolation {
            vertex: v,
            value: u[v],
            boundary_max: u_max,
        });
    }
    Ok(BoundaryMax {
        vertex,
        point: mesh.vertex(vertex),
        u_max,
    })
}

/// Normal derivative at boundary vertex `x0`.
///
/// The variational flux `[a(u_h, phi_x0) - (f, phi_x0)] / w(x0)` approximates
/// the conormal derivative; dividing by `nu . sigma(x0) nu` gives the
/// geometric one.
pub fn boundary_flux(solution: &Solution<'_>, x0: usize) -> Result<FluxEstimate> {
    let mesh = solution.mesh();
    let slot = mesh
        .boundary_slot(x0)
        .ok_or_else(|| Error::invalid(format!("vertex {x0} is not on the boundary")))?;
    let here = mesh.vertex(x0);
    let geo = mesh.boundary_geometry();
    let weight = geo.lump_weights[slot];
    if !(weight > 0.0) {
        return Err(Error::InvalidMesh(format!("zero boundary weight at vertex {x0}")));
    }
    let normal = geo.outward_normals[slot];

    let conormal = (solution.energy_against_hat(x0)? - solution.source()[x0]) / weight;
    let sigma = solution.field().evaluate(here)?;
    let normal_derivative = conormal / sigma.quadratic_form(normal);

    let mut weighted = 0.0;
    let mut angles = 0.0;
    for &t in mesh.vertex_triangles(x0) {
        let k = mesh.triangles()[t].iter().position(|&w| w == x0).expect("incident");
        let angle = mesh.angle(t, k);
        weighted += angle * solution.gradient(t).dot(normal);
        angles += angle;
    }

    Ok(FluxEstimate {
        normal: normal_derivative,
        conormal,
        gradient_average: weighted / angles,
    })
}

/// `(|u_max - u_h|_L1(Omega), |u_max - g|_L1(Gamma))`. The domain integral
/// uses the edge-midpoint rule (exact here since the integrand is affine per
/// triangle); the boundary integral uses lumped boundary weights.
pub fn l1_deviation(solution: &Solution<'_>, u_max: f64) -> (f64, f64) {
    let mesh = solution.mesh();
    let u = solution.values();
    let mut l1_omega = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.signed_area(t) / 3.0;
        for k in 0..3 {
            let mid = 0.5 * (u[tri[k]] + u[tri[(k + 1) % 3]]);
            l1_omega += w * (u_max - mid).abs();
        }
    }
    let geo = mesh.boundary_geometry();
    let l1_gamma = mesh
        .boundary_vertices()
        .iter()
        .zip(&geo.lump_weights)
        .map(|(&v, &w)| w * (u_max - u[v]).abs())
        .sum();
    (l1_omega, l1_gamma)
}

/// Assembles every functional for `solution`. Constant solutions get
/// `None` ratios; a non-positive normal derivative on a non-constant solution
/// is reported as [`Error::HopfViolation`].
pub fn hopf_report(solution: &Solution<'_>) -> Result<HopfReport> {
    let x0 = locate_max(solution)?;
    let (l1_omega, l1_gamma) = l1_deviation(solution, x0.u_max);
    let flux = boundary_flux(solution, x0.vertex)?;
    let (ratio_me0, ratio_me) = if l1_gamma <= CONSTANT_GUARD {
        (None, None)
    } else if flux.normal > 0.0 {
        (
            Some(l1_omega / l1_gamma),
            Some((l1_omega + l1_gamma) / flux.normal),
        )
    } else {
        return Err(Error::HopfViolation {
            vertex: x0.vertex,
            value: flux.normal,
        });
    };
    Ok(HopfReport {
        x0,
        normal_derivative: flux.normal,
        conormal_derivative: flux.conormal,
        flux_cross_check: flux.gradient_average,
        l1_omega,
        l1_gamma,
        ratio_me0,
        ratio_me,
    })
}

impl HopfReport {
    pub fn to_row(&self, sigma_kind: &str, k: Option<u32>, h: f64) -> ReportRow {
        ReportRow {
            sigma_kind: sigma_kind.to_owned(),
            k,
            h,
            x0_x: self.x0.point.x,
            x0_y: self.x0.point.y,
            u_max: self.x0.u_max,
            dnu: self.normal_derivative,
            l1_omega: self.l1_omega,
            l1_gamma: self.l1_gamma,
            ratio_me0: self.ratio_me0,
            ratio_me: self.ratio_me,
        }
    }
}
