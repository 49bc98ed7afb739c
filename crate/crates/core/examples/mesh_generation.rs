//! Structured disk meshes under refinement.

use hopflab::mesh::generate_disk_mesh;

fn main() -> hopflab::Result<()> {
    println!("target_h  vertices  triangles  max_edge  max_angle  area_defect");
    for h in [0.4, 0.2, 0.1, 0.05] {
        let mesh = generate_disk_mesh(h)?;
        println!(
            "{h:8}  {:8}  {:9}  {:8.4}  {:9.2}  {:.3e}",
            mesh.num_vertices(),
            mesh.num_triangles(),
            mesh.max_edge_length(),
            mesh.max_angle().to_degrees(),
            std::f64::consts::PI - mesh.polygon_area()
        );
    }

    let mesh = generate_disk_mesh(0.4)?;
    let text = mesh.to_text();
    println!("\nfirst lines of the h = 0.4 mesh file:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
