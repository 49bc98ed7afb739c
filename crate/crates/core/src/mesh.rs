//! Quasi-uniform triangulations of the closed unit disk.
//!
//! The generator places `m` concentric rings at radii `j/m`; ring `j` carries
//! `8j` equispaced vertices starting at the north pole `(0, 1)`. Consecutive
//! rings are stitched with a zipper that keeps every quadrilateral locally
//! Delaunay, which is what the discrete maximum principle relies on. With
//! `m = ceil(pi / (4h))` the boundary carries `8m >= 2 pi / h` vertices and
//! halving `h` doubles `m` for the usual dyadic sequence of resolutions.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

const SECTORS: usize = 8;
const UNIT_CIRCLE_TOL: f64 = 4.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    /// Cyclic, counterclockwise.
    boundary_vertices: Vec<usize>,
    target_h: f64,
    /// `boundary_slot[v]` is the position of `v` in `boundary_vertices`.
    boundary_slot: Vec<Option<usize>>,
    vertex_triangles: Vec<Vec<usize>>,
}

/// Outward normals, lumped boundary measure and polar angle per boundary vertex,
/// all indexed like [`TriangleMesh::boundary_vertices`].
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryGeometry {
    pub outward_normals: Vec<Vec2>,
    pub lump_weights: Vec<f64>,
    pub vertex_angles: Vec<f64>,
}

/// A quadrature node and its weight.
#[derive(Clone, Copy, Debug)]
pub struct QuadraturePoint {
    pub point: Vec2,
    pub weight: f64,
    pub triangle: usize,
}

/// Location of a point inside the mesh: containing triangle and barycentric
/// coordinates ordered like the triangle's vertices.
#[derive(Clone, Copy, Debug)]
pub struct Location {
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

fn ring_point(ring: usize, index: usize, rings: usize) -> Vec2 {
    let n = SECTORS * ring;
    let radius = if ring == rings {
        1.0
    } else {
        ring as f64 / rings as f64
    };
    // Fold the index into the first quadrant (measured from the north pole)
    // so that the vertex set is exactly symmetric under both axis reflections.
    let (k, sign_x) = if index <= n / 2 {
        (index, -1.0)
    } else {
        (n - index, 1.0)
    };
    let (k, sign_y) = if k <= n / 4 { (k, 1.0) } else { (n / 2 - k, -1.0) };
    let phi = 2.0 * PI * k as f64 / n as f64;
    let (s, c) = phi.sin_cos();
    // `+ 0.0` normalizes negative zeros on the axes.
    Vec2::new(sign_x * radius * s + 0.0, sign_y * radius * c + 0.0)
}

/// Positive iff `d` lies strictly inside the circumcircle of the
/// counterclockwise triangle `(a, b, c)`.
fn in_circle(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    let (ax, ay) = (a.x - d.x, a.y - d.y);
    let (bx, by) = (b.x - d.x, b.y - d.y);
    let (cx, cy) = (c.x - d.x, c.y - d.y);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
}

/// Triangulates the unit disk with rings of spacing about `target_h`.
pub fn generate_disk_mesh(target_h: f64) -> Result<TriangleMesh> {
    if !(target_h > 0.0 && target_h < 1.0) {
        return Err(Error::invalid(format!(
            "target_h must lie in (0, 1), got {target_h}"
        )));
    }
    let rings = ((2.0 * PI / (SECTORS as f64 * target_h)).ceil() as usize).max(1);

    let mut vertices = vec![Vec2::ZERO];
    let mut ring_start = vec![0usize];
    for j in 1..=rings {
        ring_start.push(vertices.len());
        vertices.extend((0..SECTORS * j).map(|i| ring_point(j, i, rings)));
    }

    let mut triangles = Vec::new();
    // Center fan.
    for i in 0..SECTORS {
        let a = ring_start[1] + i;
        let b = ring_start[1] + (i + 1) % SECTORS;
        triangles.push([0, a, b]);
    }
    for j in 2..=rings {
        let n_in = SECTORS * (j - 1);
        let n_out = SECTORS * j;
        let inner = |i: usize| ring_start[j - 1] + i % n_in;
        let outer = |i: usize| ring_start[j] + i % n_out;
        let (mut a, mut b) = (0usize, 0usize);
        while a < n_in || b < n_out {
            let advance_inner = if a == n_in {
                false
            } else if b == n_out {
                true
            } else {
                let (pa, pb) = (vertices[inner(a)], vertices[outer(b)]);
                let (na, nb) = (vertices[inner(a + 1)], vertices[outer(b + 1)]);
                let det = in_circle(pa, pb, nb, na);
                let scale = (pa - pb).norm_squared().powi(2);
                if det.abs() > 1e-12 * scale {
                    det > 0.0
                } else {
                    // Cocircular: advance the ring whose next vertex comes first.
                    (a + 1) * n_out <= (b + 1) * n_in
                }
            };
            if advance_inner {
                triangles.push([inner(a), outer(b), inner(a + 1)]);
                a += 1;
            } else {
                triangles.push([inner(a), outer(b), outer(b + 1)]);
                b += 1;
            }
        }
    }

    let boundary: Vec<usize> = (ring_start[rings]..vertices.len()).collect();
    TriangleMesh::from_parts(vertices, triangles, boundary, target_h)
}

fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * (b - a).cross(c - a)
}

impl TriangleMesh {
    /// Builds a mesh from raw parts and checks every mesh invariant.
    pub fn from_parts(
        vertices: Vec<Vec2>,
        triangles: Vec<[usize; 3]>,
        boundary_vertices: Vec<usize>,
        target_h: f64,
    ) -> Result<Self> {
        let mut boundary_slot = vec![None; vertices.len()];
        for (slot, &v) in boundary_vertices.iter().enumerate() {
            if v >= vertices.len() {
                return Err(Error::InvalidMesh(format!("boundary vertex {v} out of range")));
            }
            if boundary_slot[v].replace(slot).is_some() {
                return Err(Error::InvalidMesh(format!("boundary vertex {v} listed twice")));
            }
        }
        let mut vertex_triangles = vec![Vec::new(); vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} out of range"
                    )));
                }
                vertex_triangles[v].push(t);
            }
        }
        let mesh = TriangleMesh {
            vertices,
            triangles,
            boundary_vertices,
            target_h,
            boundary_slot,
            vertex_triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
        }
        let edges = self.edge_multiplicity();
        for (&(a, b), &count) in &edges {
            let on_boundary = self.is_boundary(a) && self.is_boundary(b);
            match count {
                1 if on_boundary => {}
                2 => {}
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) is shared by {count} triangles"
                    )))
                }
            }
        }
        let boundary_edges = edges.values().filter(|&&c| c == 1).count();
        if boundary_edges != self.boundary_vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "{} boundary edges for {} boundary vertices",
                boundary_edges,
                self.boundary_vertices.len()
            )));
        }
        let euler = self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64;
        if euler != 1 {
            return Err(Error::InvalidMesh(format!("Euler characteristic {euler}, expected 1")));
        }
        for (v, p) in self.vertices.iter().enumerate() {
            let r = p.norm();
            if self.is_boundary(v) {
                if (r - 1.0).abs() > UNIT_CIRCLE_TOL {
                    return Err(Error::InvalidMesh(format!(
                        "boundary vertex {v} has radius {r}"
                    )));
                }
            } else if r >= 1.0 {
                return Err(Error::InvalidMesh(format!("interior vertex {v} has radius {r}")));
            }
        }
        let n = self.boundary_vertices.len();
        for i in 0..n {
            let a = self.boundary_vertices[i];
            let b = self.boundary_vertices[(i + 1) % n];
            if edges.get(&(a.min(b), a.max(b))) != Some(&1) {
                return Err(Error::InvalidMesh(format!(
                    "boundary vertices {a} and {b} are not joined by a boundary edge"
                )));
            }
        }
        Ok(())
    }

    fn edge_multiplicity(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::with_capacity(self.triangles.len() * 3 / 2 + 8);
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec2 {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_slot[v].is_some()
    }

    /// Position of `v` in the cyclic boundary list.
    pub fn boundary_slot(&self, v: usize) -> Option<usize> {
        self.boundary_slot[v]
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| !self.is_boundary(v))
    }

    /// Triangles incident to vertex `v`.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    /// Sorted unique edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self.edge_multiplicity().into_keys().collect();
        edges.sort_unstable();
        edges
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangle_points(t);
        Vec2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Gradients of the three barycentric hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangle_points(t);
        let twice_area = (b - a).cross(c - a);
        [
            (b - c).perp() * (-1.0 / twice_area),
            (c - a).perp() * (-1.0 / twice_area),
            (a - b).perp() * (-1.0 / twice_area),
        ]
    }

    /// Interior angle of triangle `t` at its local vertex `k`.
    pub fn angle(&self, t: usize, k: usize) -> f64 {
        let p = self.triangle_points(t);
        let e1 = p[(k + 1) % 3] - p[k];
        let e2 = p[(k + 2) % 3] - p[k];
        e1.cross(e2).atan2(e1.dot(e2))
    }

    pub fn max_angle(&self) -> f64 {
        (0..self.triangles.len())
            .flat_map(|t| (0..3).map(move |k| (t, k)))
            .map(|(t, k)| self.angle(t, k))
            .fold(0.0, f64::max)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .into_iter()
            .map(|(a, b)| self.vertices[a].distance(self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Lumped (one third of incident triangle areas) measure per vertex.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let third = self.signed_area(t) / 3.0;
            for &v in tri {
                areas[v] += third;
            }
        }
        areas
    }

    pub fn polygon_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn polygon_perimeter(&self) -> f64 {
        let n = self.boundary_vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[self.boundary_vertices[i]];
                let b = self.vertices[self.boundary_vertices[(i + 1) % n]];
                a.distance(b)
            })
            .sum()
    }

    /// Distance to the unit circle. This is the true distance to the curved
    /// boundary, not to the polygon.
    pub fn dist_to_boundary(x: Vec2) -> f64 {
        1.0 - x.norm()
    }

    pub fn boundary_geometry(&self) -> BoundaryGeometry {
        let n = self.boundary_vertices.len();
        let mut outward_normals = Vec::with_capacity(n);
        let mut lump_weights = Vec::with_capacity(n);
        let mut vertex_angles = Vec::with_capacity(n);
        for i in 0..n {
            let prev = self.vertices[self.boundary_vertices[(i + n - 1) % n]];
            let here = self.vertices[self.boundary_vertices[i]];
            let next = self.vertices[self.boundary_vertices[(i + 1) % n]];
            let r = here.norm();
            outward_normals.push(Vec2::new(here.x / r, here.y / r));
            lump_weights.push(0.5 * (here.distance(prev) + here.distance(next)));
            vertex_angles.push(here.y.atan2(here.x));
        }
        BoundaryGeometry {
            outward_normals,
            lump_weights,
            vertex_angles,
        }
    }

    /// Edge-midpoint rule: three nodes per triangle, each with weight area/3.
    /// Exact for quadratic integrands on every triangle.
    pub fn quadrature_points(&self) -> Vec<QuadraturePoint> {
        let mut out = Vec::with_capacity(3 * self.triangles.len());
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            let weight = self.signed_area(t) / 3.0;
            for k in 0..3 {
                out.push(QuadraturePoint {
                    point: p[k].midpoint(p[(k + 1) % 3]),
                    weight,
                    triangle: t,
                });
            }
        }
        out
    }

    pub fn quadrature_integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.quadrature_points()
            .iter()
            .map(|q| q.weight * f(q.point))
            .sum()
    }

    /// Finds the triangle containing `x` (brute force).
    pub fn locate(&self, x: Vec2) -> Option<Location> {
        const SLACK: f64 = 1e-12;
        let mut best: Option<(f64, Location)> = None;
        for (t, _) in self.triangles.iter().enumerate() {
            let [a, b, c] = self.triangle_points(t);
            let area = signed_area(a, b, c);
            let l0 = signed_area(x, b, c) / area;
            let l1 = signed_area(a, x, c) / area;
            let l2 = 1.0 - l0 - l1;
            let worst = l0.min(l1).min(l2);
            if worst >= -SLACK && best.as_ref().is_none_or(|(w, _)| worst > *w) {
                best = Some((
                    worst,
                    Location {
                        triangle: t,
                        barycentric: [l0, l1, l2],
                    },
                ));
                if worst >= 0.0 {
                    break;
                }
            }
        }
        best.map(|(_, loc)| loc)
    }

    /// Writes the plain-text mesh format: a header `V E_b T`, then one
    /// `x y is_boundary` line per vertex and one `i j k` line per triangle.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {}",
            self.vertices.len(),
            self.boundary_vertices.len(),
            self.triangles.len()
        );
        for (v, p) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{} {} {}", p.x, p.y, u8::from(self.is_boundary(v)));
        }
        for [i, j, k] in &self.triangles {
            let _ = writeln!(s, "{i} {j} {k}");
        }
        s
    }

    /// Reads the format written by [`TriangleMesh::write_text`]. The boundary
    /// cycle is recovered from the triangles, starting at the smallest
    /// boundary index and running counterclockwise. The target resolution is
    /// not stored, so it is set to the longest boundary edge.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|l| !l.trim().is_empty()).unwrap_or(true));
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            match lines.next() {
                Some((i, line)) => Ok((
                    i + 1,
                    line?.split_whitespace().map(str::to_owned).collect(),
                )),
                None => Err(Error::Parse {
                    line: 0,
                    message: format!("unexpected end of file while reading {what}"),
                }),
            }
        };
        fn field<T: std::str::FromStr>(line: usize, tokens: &[String], i: usize) -> Result<T> {
            tokens
                .get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("cannot parse field {} of {:?}", i + 1, tokens),
                })
        }

        let (line, header) = next("header")?;
        let nv: usize = field(line, &header, 0)?;
        let nb: usize = field(line, &header, 1)?;
        let nt: usize = field(line, &header, 2)?;
        let mut vertices = Vec::with_capacity(nv);
        let mut flags = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, tok) = next("vertex")?;
            vertices.push(Vec2::new(field(line, &tok, 0)?, field(line, &tok, 1)?));
            let flag: u8 = field(line, &tok, 2)?;
            flags.push(flag == 1);
        }
        let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (line, tok) = next("triangle")?;
            triangles.push([field(line, &tok, 0)?, field(line, &tok, 1)?, field(line, &tok, 2)?]);
        }

        // Directed boundary edges follow the counterclockwise orientation.
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut successor: HashMap<usize, usize> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if counts[&(a.min(b), a.max(b))] == 1 {
                    successor.insert(a, b);
                }
            }
        }
        let start = (0..nv).find(|&v| flags.get(v) == Some(&true));
        let mut boundary = Vec::with_capacity(nb);
        if let Some(start) = start {
            let mut v = start;
            loop {
                boundary.push(v);
                v = *successor.get(&v).ok_or_else(|| {
                    Error::InvalidMesh(format!("boundary vertex {v} has no outgoing boundary edge"))
                })?;
                if v == start || boundary.len() > nv {
                    break;
                }
            }
        }
        let flagged = flags.iter().filter(|&&f| f).count();
        if boundary.len() != nb || flagged != nb {
            return Err(Error::InvalidMesh(format!(
                "header announces {nb} boundary vertices, flags mark {flagged}, cycle has {}",
                boundary.len()
            )));
        }
        let h = (0..nb)
            .map(|i| vertices[boundary[i]].distance(vertices[boundary[(i + 1) % nb]]))
            .fold(0.0, f64::max);
        TriangleMesh::from_parts(vertices, triangles, boundary, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_resolution() {
        for h in [0.0, -0.1, 1.0, 1.5, f64::NAN] {
            assert!(generate_disk_mesh(h).is_err(), "h = {h}");
        }
    }

    #[test]
    fn coarse_mesh_is_valid() {
        let mesh = generate_disk_mesh(0.5).unwrap();
        let v = mesh.num_vertices() as i64;
        let e = mesh.edges().len() as i64;
        let f = mesh.num_triangles() as i64;
        assert_eq!(v - e + f, 1);
        assert!((0..mesh.num_triangles()).all(|t| mesh.signed_area(t) > 0.0));
    }

    #[test]
    fn resolution_guarantees() {
        for h in [0.4, 0.3, 0.2, 0.1, 0.07, 0.05] {
            let mesh = generate_disk_mesh(h).unwrap();
            assert!(mesh.max_edge_length() <= 2.0 * h, "h = {h}");
            assert!(mesh.boundary_vertices().len() >= (2.0 * PI / h).ceil() as usize);
        }
    }

    #[test]
    fn perimeter_and_area_match_inscribed_polygon() {
        let mesh = generate_disk_mesh(0.1).unwrap();
        let n = mesh.boundary_vertices().len() as f64;
        let perimeter = n * 2.0 * (PI / n).sin();
        let area = 0.5 * n * (2.0 * PI / n).sin();
        assert!((mesh.polygon_perimeter() - perimeter).abs() < 1e-12);
        assert!((mesh.polygon_area() - area).abs() < 1e-12);
        assert!((mesh.polygon_perimeter() / (2.0 * PI) - 1.0).abs() < 0.01);
        assert!((mesh.polygon_area() / PI - 1.0).abs() < 0.01);
    }

    #[test]
    fn north_pole_is_first_boundary_vertex() {
        let mesh = generate_disk_mesh(0.2).unwrap();
        let v = mesh.boundary_vertices()[0];
        assert_eq!(mesh.vertex(v), Vec2::new(0.0, 1.0));
    }

    #[test]
    fn normals_and_weights() {
        let mesh = generate_disk_mesh(0.05).unwrap();
        let geo = mesh.boundary_geometry();
        let pole = mesh
            .boundary_vertices()
            .iter()
            .position(|&v| mesh.vertex(v) == Vec2::new(0.0, 1.0))
            .unwrap();
        assert_eq!(geo.outward_normals[pole], Vec2::new(0.0, 1.0));
        assert!((geo.vertex_angles[pole] - PI / 2.0).abs() < 1e-15);
        for n in &geo.outward_normals {
            assert!((n.norm() - 1.0).abs() < 1e-15);
        }
        let total: f64 = geo.lump_weights.iter().sum();
        assert!((total - mesh.polygon_perimeter()).abs() < 1e-12);
        assert!(geo.lump_weights.iter().all(|&w| (0.025..=0.1).contains(&w)));
    }

    #[test]
    fn quadrature_examples() {
        let mesh = generate_disk_mesh(0.05).unwrap();
        let one = mesh.quadrature_integrate(|_| 1.0);
        assert!((one / PI - 1.0).abs() < 0.005);
        assert!(mesh.quadrature_integrate(|x| x.y).abs() < 1e-13);
        assert!(mesh.quadrature_integrate(|x| x.x).abs() < 1e-13);
        let shifted = mesh.quadrature_integrate(|x| 1.0 - x.y);
        assert!((shifted / PI - 1.0).abs() < 0.01);
    }

    #[test]
    fn quadrature_is_exact_for_quadratics_on_a_triangle() {
        // Single reference triangle; integral of x^2 over (0,0),(1,0),(0,1) is 1/12.
        let tri = TriangleMesh {
            vertices: vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            triangles: vec![[0, 1, 2]],
            boundary_vertices: vec![],
            target_h: 1.0,
            boundary_slot: vec![None; 3],
            vertex_triangles: vec![vec![0]; 3],
        };
        let got = tri.quadrature_integrate(|p| p.x * p.x);
        assert!((got - 1.0 / 12.0).abs() < 1e-15);
        let got = tri.quadrature_integrate(|p| p.x * p.y);
        assert!((got - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_reduces_area_error_quadratically() {
        let hs = [0.4, 0.2, 0.1, 0.05];
        let errors: Vec<f64> = hs
            .iter()
            .map(|&h| (generate_disk_mesh(h).unwrap().polygon_area() - PI).abs())
            .collect();
        for w in errors.windows(2) {
            let factor = w[0] / w[1];
            assert!((3.4..=4.6).contains(&factor), "factor {factor}");
        }
    }

    #[test]
    fn normals_agree_at_coincident_vertices_under_refinement() {
        let coarse = generate_disk_mesh(0.1).unwrap();
        let fine = generate_disk_mesh(0.05).unwrap();
        let cg = coarse.boundary_geometry();
        let fg = fine.boundary_geometry();
        let mut matched = 0;
        for (i, &v) in coarse.boundary_vertices().iter().enumerate() {
            let p = coarse.vertex(v);
            if let Some(j) = fine
                .boundary_vertices()
                .iter()
                .position(|&w| fine.vertex(w).distance(p) < 1e-14)
            {
                assert!(cg.outward_normals[i].distance(fg.outward_normals[j]) < 1e-15);
                matched += 1;
            }
        }
        assert_eq!(matched, coarse.boundary_vertices().len());
    }

    #[test]
    fn triangulation_is_delaunay() {
        // Every interior edge: the two opposite angles sum to at most pi.
        let mesh = generate_disk_mesh(0.05).unwrap();
        let mut opposite: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                opposite.entry((a.min(b), a.max(b))).or_default().push(mesh.angle(t, k));
            }
        }
        for angles in opposite.values().filter(|a| a.len() == 2) {
            assert!(angles[0] + angles[1] <= PI + 1e-9);
        }
    }

    #[test]
    fn text_format_roundtrip() {
        let mesh = generate_disk_mesh(0.3).unwrap();
        let text = mesh.to_text();
        assert!(text.starts_with(&format!(
            "{} {} {}\n",
            mesh.num_vertices(),
            mesh.boundary_vertices().len(),
            mesh.num_triangles()
        )));
        let back = TriangleMesh::read_text(text.as_bytes()).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.boundary_vertices(), mesh.boundary_vertices());
        assert_eq!(generate_disk_mesh(0.3).unwrap().to_text(), text);
    }

    #[test]
    fn read_rejects_inconsistent_header() {
        let text = "3 2 1\n0 0 1\n1 0 1\n0 1 1\n0 1 2\n";
        assert!(TriangleMesh::read_text(text.as_bytes()).is_err());
    }

    #[test]
    fn locate_finds_barycentric_coordinates() {
        let mesh = generate_disk_mesh(0.2).unwrap();
        let x = Vec2::new(0.123, -0.456);
        let loc = mesh.locate(x).unwrap();
        let p = mesh.triangle_points(loc.triangle);
        let back = p[0] * loc.barycentric[0] + p[1] * loc.barycentric[1] + p[2] * loc.barycentric[2];
        assert!(back.distance(x) < 1e-14);
        assert!(mesh.locate(Vec2::new(1.5, 0.0)).is_none());
    }
}
