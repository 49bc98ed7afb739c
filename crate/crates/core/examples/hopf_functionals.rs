//! Boundary maximum, normal derivative and L1 deviations for affine and
//! steep boundary data.

use hopflab::coefficients::ConductivityField;
use hopflab::experiments::boundary_datum;
use hopflab::functionals::{boundary_flux, hopf_report};
use hopflab::mesh::generate_disk_mesh;
use hopflab::solver::assemble_system;

fn main() -> hopflab::Result<()> {
    let mesh = generate_disk_mesh(0.05)?;
    let field = ConductivityField::identity();
    println!("datum      dnu        l1_omega   l1_gamma   ratio_me0  ratio_me  (3 pi = {:.4})", 3.0 * std::f64::consts::PI);
    for (name, k) in [("h_1", 1), ("h_16", 16), ("h_256", 256)] {
        let solution = assemble_system(&mesh, &field, |_| 0.0, boundary_datum(k))?.solve(1e-12)?;
        let r = hopf_report(&solution)?;
        println!(
            "{name:8}  {:.3e}  {:.3e}  {:.3e}  {:.4}     {:.4}",
            r.normal_derivative,
            r.l1_omega,
            r.l1_gamma,
            r.ratio_me0.unwrap_or(f64::NAN),
            r.ratio_me.unwrap_or(f64::NAN)
        );
    }

    // The three flux estimates for u = x2 at the north pole.
    let solution = assemble_system(&mesh, &field, |_| 0.0, |p| p.y)?.solve(1e-12)?;
    let flux = boundary_flux(&solution, mesh.boundary_vertices()[0])?;
    println!(
        "\nu = x2: geometric {:.5}, conormal {:.5}, gradient average {:.5} (exact 1)",
        flux.normal, flux.conormal, flux.gradient_average
    );
    Ok(())
}
