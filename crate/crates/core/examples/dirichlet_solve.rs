//! One variable-coefficient Dirichlet solve and its discrete maximum principle.

use hopflab::coefficients::{ConductivityField, FieldKind};
use hopflab::experiments::boundary_datum;
use hopflab::mesh::generate_disk_mesh;
use hopflab::solver::{assemble_system, DEFAULT_REL_TOL};
use hopflab::Vec2;

fn main() -> hopflab::Result<()> {
    let mesh = generate_disk_mesh(0.05)?;
    let field = ConductivityField::preset(FieldKind::Gaussian)?;
    let system = assemble_system(&mesh, &field, |_| 0.0, boundary_datum(4))?;
    let solution = system.solve(DEFAULT_REL_TOL)?;
    println!(
        "{} unknowns, {} CG iterations, relative residual {:.2e}",
        system.interior_dofs().len(),
        solution.iterations,
        solution.solve_residual
    );

    let interior_max = mesh
        .interior_vertices()
        .map(|v| solution.value(v))
        .fold(f64::NEG_INFINITY, f64::max);
    let boundary_max = mesh
        .boundary_vertices()
        .iter()
        .map(|&v| solution.value(v))
        .fold(f64::NEG_INFINITY, f64::max);
    println!("interior max {interior_max:.6} <= boundary max {boundary_max:.6}");
    for p in [Vec2::ZERO, Vec2::new(0.0, 0.5), Vec2::new(0.0, -0.5)] {
        println!("u({:5.2}, {:5.2}) = {:.6}", p.x, p.y, solution.evaluate(p).expect("inside the mesh"));
    }
    Ok(())
}
