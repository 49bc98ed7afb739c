//! Barrier certificates at the boundary maximum for every benchmark preset.

use hopflab::barrier::{barrier_certificate, gamma, lambda_min, DEFAULT_INNER_RADIUS, DEFAULT_RADIUS};
use hopflab::coefficients::{ConductivityField, FieldKind};
use hopflab::experiments::boundary_datum;
use hopflab::functionals::locate_max;
use hopflab::mesh::generate_disk_mesh;
use hopflab::solver::assemble_system;
use hopflab::Vec2;

fn main() -> hopflab::Result<()> {
    let identity = ConductivityField::identity();
    let lam = lambda_min(&identity, Vec2::new(0.0, 0.5), DEFAULT_RADIUS, DEFAULT_INNER_RADIUS)?;
    println!(
        "identity: lambda = {}, gamma = {:.6}",
        lam.lambda,
        gamma(DEFAULT_RADIUS, DEFAULT_INNER_RADIUS, lam.lambda)
    );

    let mesh = generate_disk_mesh(0.05)?;
    println!("\npreset        k    lambda   epsilon     gamma       subsol_min  ineq1_margin");
    for kind in FieldKind::BENCHMARK {
        let field = ConductivityField::preset(kind)?;
        let system = assemble_system(&mesh, &field, |_| 0.0, |_| 0.0)?;
        for k in [1, 16] {
            let datum = boundary_datum(k);
            let data: Vec<f64> = mesh.vertices().iter().map(|&p| datum(p)).collect();
            let solution = system.solve_with_boundary(&data, 1e-12)?;
            let x0 = locate_max(&solution)?.vertex;
            let c = barrier_certificate(&solution, x0, DEFAULT_RADIUS, DEFAULT_INNER_RADIUS)?;
            println!(
                "{kind:12} {k:3}  {:7.3}  {:.4e}  {:.4e}  {:.4e}  {:.4e}",
                c.lambda,
                c.epsilon,
                c.gamma,
                c.subsolution_min,
                c.ineq1_margin
            );
        }
    }
    Ok(())
}
