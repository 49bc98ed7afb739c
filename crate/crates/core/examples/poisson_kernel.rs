//! Discrete Poisson kernel against the closed-form disk kernel, the
//! two-sided bound ratios and the representation identity.

use hopflab::coefficients::{ConductivityField, FieldKind};
use hopflab::experiments::boundary_datum;
use hopflab::kernels::{
    discrete_poisson_kernel, disk_poisson_kernel, interior_samples, kernel_bound_ratios, kernel_lipschitz,
    representation_residual, KERNEL_REL_TOL, SAMPLE_MARGIN,
};
use hopflab::mesh::generate_disk_mesh;
use hopflab::solver::assemble_system;

fn main() -> hopflab::Result<()> {
    let mesh = generate_disk_mesh(0.05)?;
    let samples = interior_samples(&mesh, SAMPLE_MARGIN);

    let identity = ConductivityField::identity();
    let kernel = discrete_poisson_kernel(&mesh, &identity, &samples, KERNEL_REL_TOL)?;
    let mut worst: f64 = 0.0;
    for i in 0..kernel.num_rows() {
        for j in 0..kernel.num_cols() {
            let (x, y) = (kernel.sample_point(i), kernel.boundary_point(j));
            if x.distance(y) >= 0.2 {
                worst = worst.max((kernel.value(i, j) / disk_poisson_kernel(x, y) - 1.0).abs());
            }
        }
    }
    println!(
        "identity: {} x {} kernel, worst relative error vs closed form {:.2}%",
        kernel.num_rows(),
        kernel.num_cols(),
        100.0 * worst
    );

    println!("\npreset        min R    max R    varkappa_obs  Lipschitz(|x|<=0.3)  repr. residual");
    for kind in FieldKind::BENCHMARK {
        let field = ConductivityField::preset(kind)?;
        let kernel = discrete_poisson_kernel(&mesh, &field, &samples, KERNEL_REL_TOL)?;
        let ratios = kernel_bound_ratios(&kernel, 0.0)?;
        let solution = assemble_system(&mesh, &field, |_| 0.0, boundary_datum(8))?.solve(KERNEL_REL_TOL)?;
        let check = representation_residual(&kernel, &solution)?;
        println!(
            "{kind:12}  {:.4}   {:.4}   {:8.4}      {:8.4}             {:.2e}",
            ratios.min_ratio,
            ratios.max_ratio,
            ratios.varkappa_obs,
            kernel_lipschitz(&kernel, 0.3)?,
            check.max_abs_residual
        );
    }
    Ok(())
}
