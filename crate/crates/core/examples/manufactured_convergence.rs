//! Second-order L2 convergence for sigma = (1 + x1^2) I, u = x1^2.

use hopflab::coefficients::{ConductivityField, FieldKind};
use hopflab::mesh::generate_disk_mesh;
use hopflab::solver::{assemble_system, manufactured_error};

fn main() -> hopflab::Result<()> {
    let field = ConductivityField::preset(FieldKind::Manufactured)?;
    let exact = |p: hopflab::Vec2| p.x * p.x;
    // -div((1 + x1^2) grad x1^2) = -(2 + 6 x1^2)
    let source = |p: hopflab::Vec2| -(2.0 + 6.0 * p.x * p.x);
    let mut previous: Option<f64> = None;
    println!("    h        L2 error     Linf error   ratio");
    for h in [0.4, 0.2, 0.1, 0.05] {
        let mesh = generate_disk_mesh(h)?;
        let solution = assemble_system(&mesh, &field, source, exact)?.solve(1e-12)?;
        let (l2, linf) = manufactured_error(&solution, exact);
        let ratio = previous.map(|p| format!("{:.3}", p / l2)).unwrap_or_default();
        println!("{h:5}  {l2:12.4e}  {linf:12.4e}   {ratio}");
        previous = Some(l2);
    }
    Ok(())
}
