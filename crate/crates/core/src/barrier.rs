//! Barrier certificates for the boundary-point lemma.
//!
//! For a boundary point `x0` and the tangent interior ball `B(x~, r)`, the
//! barrier `v = exp(-lambda s^2) - exp(-lambda r^2)` with `s = |x - x~|`
//! satisfies `div(sigma grad v) >= 0` on the annulus `rho < s < r` once
//! `lambda` is large enough. Comparison with `u` then gives
//!
//! ```text
//! d_nu u(x0) >= gamma * min_{s = rho} (u(x0) - u),
//! gamma = 2 r lambda exp(-lambda r^2) / (exp(-lambda rho^2) - exp(-lambda r^2)).
//! ```

use serde::{Deserialize, Serialize};

use crate::coefficients::ConductivityField;
use crate::error::{Error, Result};
use crate::functionals::{boundary_flux, l1_deviation, CONSTANT_GUARD, MAX_PRINCIPLE_TOL};
use crate::geometry::Vec2;
use crate::solver::Solution;

pub const DEFAULT_RADIUS: f64 = 0.5;
pub const DEFAULT_INNER_RADIUS: f64 = 0.25;
/// Sample count on the inner circle `|x - x~| = rho`.
pub const CIRCLE_SAMPLES: usize = 36;
/// Certified floor for `div(sigma grad v)` on the annulus.
pub const SUBSOLUTION_TOL: f64 = 1e-8;
/// Certified floor for the margin of the lower bound on `d_nu u(x0)`.
pub const MARGIN_TOL: f64 = 1e-6;
pub const MAX_DOUBLINGS: u32 = 10;

const ANNULUS_RADII: usize = 24;
const ANNULUS_ANGLES: usize = 96;
/// Step for the finite-difference divergence of the coefficient.
const COEFFICIENT_STEP: f64 = 1e-5;

/// Centre of the ball of radius `r` inside the unit disk tangent at `x0`.
pub fn interior_ball(x0: Vec2, r: f64) -> Result<Vec2> {
    if (x0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("x0 = ({}, {}) is not on the unit circle", x0.x, x0.y)));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid(format!("interior ball radius must lie in (0, 1), got {r}")));
    }
    let centre = (1.0 - r) * x0;
    // Containment and single tangency: |x~| + r = 1 with |x~| > 0.
    debug_assert!((centre.norm() + r - 1.0).abs() < 1e-12 && centre.norm() > 0.0);
    Ok(centre)
}

/// Closed-form Hopf constant.
pub fn gamma(r: f64, rho: f64, lambda: f64) -> f64 {
    2.0 * r * lambda * (-lambda * r * r).exp() / ((-lambda * rho * rho).exp() - (-lambda * r * r).exp())
}

/// Deterministic polar grid strictly inside the annulus `rho < s < r`.
pub fn annulus_points(x_tilde: Vec2, r: f64, rho: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(ANNULUS_RADII * ANNULUS_ANGLES);
    for i in 0..ANNULUS_RADII {
        let s = rho + (r - rho) * (i as f64 + 0.5) / ANNULUS_RADII as f64;
        for k in 0..ANNULUS_ANGLES {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / ANNULUS_ANGLES as f64;
            out.push(x_tilde + Vec2::new(s * t.cos(), s * t.sin()));
        }
    }
    out
}

fn barrier_flux(field: &ConductivityField, x_tilde: Vec2, lambda: f64, x: Vec2) -> Vec2 {
    let d = x - x_tilde;
    let grad = (-2.0 * lambda * (-lambda * d.norm_squared()).exp()) * d;
    field.eval_unchecked(x).mul_vec(grad)
}

/// `div(sigma grad v)` at `x` by fourth-order centred differences of the
/// analytic flux `sigma grad v`.
pub fn barrier_divergence(field: &ConductivityField, x_tilde: Vec2, lambda: f64, x: Vec2) -> f64 {
    // The flux varies on the scale 1/sqrt(lambda).
    let step = 1e-3 * (1.0 / lambda.sqrt()).min(1.0);
    let flux = |p: Vec2| barrier_flux(field, x_tilde, lambda, p);
    let d = |e: Vec2, pick: fn(Vec2) -> f64| {
        (8.0 * (pick(flux(x + e)) - pick(flux(x - e))) - (pick(flux(x + 2.0 * e)) - pick(flux(x - 2.0 * e))))
            / (12.0 * step)
    };
    d(Vec2::new(step, 0.0), |f| f.x) + d(Vec2::new(0.0, step), |f| f.y)
}

/// Outcome of the barrier steepness search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaCertificate {
    /// Certified steepness (the analytic bound, possibly doubled).
    pub lambda: f64,
    /// `D / (2 mu rho^2)`.
    pub lambda_bound: f64,
    /// `D = sup (tr sigma + |div sigma . (x - x~)|)` over the annulus.
    pub operator_bound: f64,
    /// Smallest eigenvalue of `sigma` over the annulus.
    pub min_eigenvalue: f64,
    pub doublings: u32,
    /// `min div(sigma grad v)` over the annulus at `lambda`.
    pub subsolution_min: f64,
    pub worst_point: Vec2,
}

fn subsolution_min(field: &ConductivityField, x_tilde: Vec2, lambda: f64, points: &[Vec2]) -> (f64, Vec2) {
    points
        .iter()
        .map(|&p| (barrier_divergence(field, x_tilde, lambda, p), p))
        .fold((f64::INFINITY, Vec2::ZERO), |a, b| if b.0 < a.0 { b } else { a })
}

/// Smallest admissible steepness: `4 lambda^2 mu rho^2 - 2 lambda D >= 0`,
/// then verified pointwise, doubling up to [`MAX_DOUBLINGS`] times.
pub fn lambda_min(field: &ConductivityField, x_tilde: Vec2, r: f64, rho: f64) -> Result<LambdaCertificate> {
    if !(rho > 0.0 && rho < r) {
        return Err(Error::invalid(format!("need 0 < rho < r, got rho = {rho}, r = {r}")));
    }
    let points = annulus_points(x_tilde, r, rho);
    let mut operator_bound: f64 = 0.0;
    let mut min_eigenvalue = f64::INFINITY;
    for &p in &points {
        let sigma = field.evaluate(p)?;
        let div = field.divergence_fd(p, COEFFICIENT_STEP);
        operator_bound = operator_bound.max(sigma.trace() + div.dot(p - x_tilde).abs());
        min_eigenvalue = min_eigenvalue.min(sigma.eigenvalues().0);
    }
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NotAdmissible {
            x: x_tilde.x,
            y: x_tilde.y,
            reason: format!("smallest eigenvalue {min_eigenvalue} on the annulus"),
        });
    }
    let lambda_bound = operator_bound / (2.0 * min_eigenvalue * rho * rho);
    let mut lambda = lambda_bound;
    let mut doublings = 0;
    loop {
        let (min, worst) = subsolution_min(field, x_tilde, lambda, &points);
        if min >= -SUBSOLUTION_TOL {
            return Ok(LambdaCertificate {
                lambda,
                lambda_bound,
                operator_bound,
                min_eigenvalue,
                doublings,
                subsolution_min: min,
                worst_point: worst,
            });
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Certification(format!(
                "barrier is not a subsolution after {MAX_DOUBLINGS} doublings: \
                 div(sigma grad v) = {min:e} at ({}, {}) with lambda = {lambda}",
                worst.x, worst.y
            )));
        }
        lambda *= 2.0;
        doublings += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierCertificate {
    pub x0_vertex: usize,
    pub x0: Vec2,
    pub x_tilde: Vec2,
    pub r: f64,
    pub rho: f64,
    pub lambda: f64,
    pub lambda_bound: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub subsolution_min: f64,
    /// `min_{s = rho} (u(x0) - u)`.
    pub min_circle: f64,
    pub normal_derivative: f64,
    /// `d_nu u(x0) - gamma * min_circle`.
    pub ineq1_margin: f64,
    pub l1_gamma: f64,
    /// `min_circle / l1_gamma`; `None` for constant data.
    pub chain_ratio: Option<f64>,
    /// `l1_gamma / d_nu u(x0)`; `None` for constant data.
    pub flux_ratio: Option<f64>,
}

/// CSV record `x0_x,x0_y,r,rho,lambda,epsilon,gamma,subsol_min,ineq1_margin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub x0_x: f64,
    pub x0_y: f64,
    pub r: f64,
    pub rho: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub subsol_min: f64,
    pub ineq1_margin: f64,
}

/// Builds the certificate at boundary vertex `x0` (normally the boundary
/// maximum) and checks every certificate invariant.
pub fn barrier_certificate(solution: &Solution<'_>, x0: usize, r: f64, rho: f64) -> Result<BarrierCertificate> {
    let mesh = solution.mesh();
    if !mesh.is_boundary(x0) {
        return Err(Error::invalid(format!("vertex {x0} is not on the boundary")));
    }
    let point = mesh.vertex(x0);
    let x_tilde = interior_ball(point, r)?;
    let lam = lambda_min(solution.field(), x_tilde, r, rho)?;
    let u0 = solution.value(x0);

    let mut circle_max = f64::NEG_INFINITY;
    for i in 0..CIRCLE_SAMPLES {
        let t = 2.0 * std::f64::consts::PI * i as f64 / CIRCLE_SAMPLES as f64;
        let p = x_tilde + Vec2::new(rho * t.cos(), rho * t.sin());
        let u = solution
            .evaluate(p)
            .ok_or_else(|| Error::invalid(format!("circle point ({}, {}) is outside the mesh", p.x, p.y)))?;
        circle_max = circle_max.max(u);
    }
    let mut min_circle = u0 - circle_max;
    if min_circle < -MAX_PRINCIPLE_TOL {
        return Err(Error::Certification(format!(
            "maximum principle: u = {circle_max} on the inner circle exceeds u(x0) = {u0}"
        )));
    }
    // Interpolating a constant can be off by rounding.
    if min_circle.abs() <= 1e-12 * u0.abs().max(1.0) {
        min_circle = 0.0;
    }
    let min_circle = min_circle.max(0.0);

    let lambda = lam.lambda;
    let epsilon = min_circle / ((-lambda * rho * rho).exp() - (-lambda * r * r).exp());
    let gamma = gamma(r, rho, lambda);
    let normal_derivative = boundary_flux(solution, x0)?.normal;
    let (_, l1_gamma) = l1_deviation(solution, u0);
    let non_constant = l1_gamma > CONSTANT_GUARD;

    let certificate = BarrierCertificate {
        x0_vertex: x0,
        x0: point,
        x_tilde,
        r,
        rho,
        lambda,
        lambda_bound: lam.lambda_bound,
        epsilon,
        gamma,
        subsolution_min: lam.subsolution_min,
        min_circle,
        normal_derivative,
        ineq1_margin: normal_derivative - gamma * min_circle,
        l1_gamma,
        chain_ratio: non_constant.then(|| min_circle / l1_gamma),
        flux_ratio: (non_constant && normal_derivative > 0.0).then(|| l1_gamma / normal_derivative),
    };
    certificate.check()?;
    Ok(certificate)
}

impl BarrierCertificate {
    /// Certificate invariants; any failure is a certification error.
    pub fn check(&self) -> Result<()> {
        let fail = |what: String| Err(Error::Certification(what));
        if (self.x0.distance(self.x_tilde) - self.r).abs() > 1e-12 {
            return fail(format!("|x0 - x~| = {} differs from r = {}", self.x0.distance(self.x_tilde), self.r));
        }
        if !(self.rho > 0.0 && self.rho < self.r) {
            return fail(format!("rho = {} not in (0, r)", self.rho));
        }
        if !(self.lambda >= self.lambda_bound && self.gamma > 0.0 && self.epsilon >= 0.0) {
            return fail(format!(
                "inconsistent constants: lambda = {}, gamma = {}, epsilon = {}",
                self.lambda, self.gamma, self.epsilon
            ));
        }
        if self.subsolution_min < -SUBSOLUTION_TOL {
            return fail(format!("subsolution minimum {:e}", self.subsolution_min));
        }
        if self.ineq1_margin < -MARGIN_TOL {
            return fail(format!(
                "d_nu u(x0) = {} is below gamma * min_circle = {}",
                self.normal_derivative,
                self.gamma * self.min_circle
            ));
        }
        if let Some(c) = self.chain_ratio {
            if !(c > 0.0) {
                return fail(format!("inner-circle deficit {} is not positive", self.min_circle));
            }
        }
        Ok(())
    }

    pub fn to_row(&self) -> CertificateRow {
        CertificateRow {
            x0_x: self.x0.x,
            x0_y: self.x0.y,
            r: self.r,
            rho: self.rho,
            lambda: self.lambda,
            epsilon: self.epsilon,
            gamma: self.gamma,
            subsol_min: self.subsolution_min,
            ineq1_margin: self.ineq1_margin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::FieldKind;
    use crate::functionals::locate_max;
    use crate::mesh::generate_disk_mesh;
    use crate::solver::assemble_system;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a / b - 1.0).abs() <= rel
    }

    #[test]
    fn ball_centres() {
        assert_eq!(interior_ball(Vec2::new(0.0, 1.0), 0.5).unwrap(), Vec2::new(0.0, 0.5));
        assert_eq!(interior_ball(Vec2::new(1.0, 0.0), 0.25).unwrap(), Vec2::new(0.75, 0.0));
        assert!(interior_ball(Vec2::new(0.0, 1.0), 1.0).is_err());
        assert!(interior_ball(Vec2::new(0.0, 1.0), 0.0).is_err());
        assert!(interior_ball(Vec2::new(0.0, 0.9), 0.5).is_err());
    }

    #[test]
    fn gamma_formula() {
        let e = f64::exp;
        assert!(close(gamma(1.0, 0.5, 2.0), 4.0 * e(-2.0) / (e(-0.5) - e(-2.0)), 1e-15));
        assert!(close(gamma(1.0, 0.5, 2.0), 1.14886, 1e-5));
        assert!(close(gamma(0.5, 0.25, 16.0), 16.0 * e(-4.0) / (e(-1.0) - e(-4.0)), 1e-15));
        assert!(close(gamma(0.5, 0.25, 16.0), 0.83835, 1e-4));
        for lambda in [1e-3, 0.5, 16.0, 500.0] {
            assert!(gamma(0.5, 0.25, lambda) > 0.0);
        }
    }

    #[test]
    fn lambda_for_constant_coefficients() {
        let x_tilde = Vec2::new(0.0, 0.5);
        for field in [ConductivityField::identity(), ConductivityField::constant(2.5).unwrap()] {
            let cert = lambda_min(&field, x_tilde, 0.5, 0.25).unwrap();
            assert!((cert.lambda - 16.0).abs() < 1e-9, "{cert:?}");
            assert_eq!(cert.doublings, 0);
            assert!(cert.subsolution_min >= 0.0);
        }
        assert!(lambda_min(&ConductivityField::identity(), x_tilde, 0.25, 0.25).is_err());
    }

    #[test]
    fn barrier_divergence_matches_laplacian() {
        let field = ConductivityField::identity();
        let x_tilde = Vec2::new(0.0, 0.5);
        let lambda = 16.0;
        for p in annulus_points(x_tilde, 0.5, 0.25).into_iter().step_by(97) {
            let s2 = (p - x_tilde).norm_squared();
            let exact = (4.0 * lambda * lambda * s2 - 4.0 * lambda) * (-lambda * s2).exp();
            assert!((barrier_divergence(&field, x_tilde, lambda, p) - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn lambda_for_benchmark_presets() {
        for kind in FieldKind::BENCHMARK {
            let field = ConductivityField::preset(kind).unwrap();
            let cert = lambda_min(&field, Vec2::new(0.0, 0.5), 0.5, 0.25).unwrap();
            assert!(cert.lambda.is_finite() && cert.lambda >= 16.0, "{kind}: {cert:?}");
            assert!(cert.subsolution_min >= -SUBSOLUTION_TOL);
        }
    }

    #[test]
    fn certificate_for_x2() {
        let mesh = generate_disk_mesh(0.05).unwrap();
        let field = ConductivityField::identity();
        let sol = assemble_system(&mesh, &field, |_| 0.0, |x| x.y).unwrap().solve(1e-12).unwrap();
        let x0 = locate_max(&sol).unwrap().vertex;
        let cert = barrier_certificate(&sol, x0, 0.5, 0.25).unwrap();
        let e = f64::exp;
        assert!((cert.lambda - 16.0).abs() < 1e-9);
        assert!((cert.min_circle - 0.25).abs() < 1e-9);
        assert!(close(cert.epsilon, 0.25 / (e(-1.0) - e(-4.0)), 1e-8));
        assert!(close(cert.epsilon, 0.71518, 1e-4));
        assert!(close(cert.gamma, 0.83835, 1e-4));
        assert!((cert.ineq1_margin - 0.7904).abs() < 0.05, "{cert:?}");
        assert!(cert.chain_ratio.unwrap() > 0.0);
        let row = cert.to_row();
        assert_eq!((row.x0_x, row.x0_y), (0.0, 1.0));
    }

    #[test]
    fn constant_solution_gives_vacuous_certificate() {
        let mesh = generate_disk_mesh(0.1).unwrap();
        let field = ConductivityField::identity();
        let sol = assemble_system(&mesh, &field, |_| 0.0, |_| 3.0).unwrap().solve(1e-12).unwrap();
        let x0 = locate_max(&sol).unwrap().vertex;
        let cert = barrier_certificate(&sol, x0, 0.5, 0.25).unwrap();
        assert_eq!(cert.epsilon, 0.0);
        assert!(cert.gamma > 0.0);
        assert!(cert.ineq1_margin.abs() < 1e-10);
        assert!(cert.chain_ratio.is_none());
    }

    #[test]
    fn certificate_at_a_non_maximum_fails() {
        let mesh = generate_disk_mesh(0.1).unwrap();
        let field = ConductivityField::identity();
        let sol = assemble_system(&mesh, &field, |_| 0.0, |x| x.y).unwrap().solve(1e-12).unwrap();
        let south = *mesh
            .boundary_vertices()
            .iter()
            .find(|&&v| mesh.vertex(v).distance(Vec2::new(0.0, -1.0)) < 1e-12)
            .unwrap();
        let err = barrier_certificate(&sol, south, 0.5, 0.25).unwrap_err();
        assert!(err.is_certification_failure());
    }
}
