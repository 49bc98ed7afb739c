//! Discrete Green columns: the logarithmic profile, symmetry and positivity.

use hopflab::coefficients::{ConductivityField, FieldKind};
use hopflab::kernels::{green_column, KERNEL_REL_TOL};
use hopflab::mesh::generate_disk_mesh;
use hopflab::solver::assemble_system;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hopflab::Result<()> {
    let mesh = generate_disk_mesh(0.05)?;
    let identity = ConductivityField::identity();
    let system = assemble_system(&mesh, &identity, |_| 0.0, |_| 0.0)?;
    let centre = mesh.interior_vertices().find(|&v| mesh.vertex(v).norm() == 0.0).expect("centre vertex");
    let g = green_column(&system, centre, KERNEL_REL_TOL)?;
    for radius in [0.25, 0.5, 0.75] {
        let v = mesh
            .interior_vertices()
            .find(|&v| (mesh.vertex(v).norm() - radius).abs() < 1e-12)
            .expect("ring vertex");
        println!(
            "G(0, |y| = {radius}) = {:.5}   -ln|y|/(2 pi) = {:.5}",
            g.values[v],
            -radius.ln() / (2.0 * std::f64::consts::PI)
        );
    }

    let field = ConductivityField::preset(FieldKind::Oscillating)?;
    let system = assemble_system(&mesh, &field, |_| 0.0, |_| 0.0)?;
    let interior: Vec<usize> = mesh.interior_vertices().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("\noscillating preset, random pairs:");
    for _ in 0..5 {
        let pair: Vec<usize> = interior.choose_multiple(&mut rng, 2).copied().collect();
        let ga = green_column(&system, pair[0], KERNEL_REL_TOL)?;
        let gb = green_column(&system, pair[1], KERNEL_REL_TOL)?;
        let min = mesh.interior_vertices().map(|v| ga.values[v]).fold(f64::INFINITY, f64::min);
        println!(
            "  G({:4}, {:4}) = {:.6e}  G({:4}, {:4}) = {:.6e}  min G(., {:4}) = {:.2e}",
            pair[0], pair[1], ga.values[pair[1]], pair[1], pair[0], gb.values[pair[0]], pair[0], min
        );
    }
    Ok(())
}
