//! Benchmark coefficient fields: values, ellipticity and a custom raster.

use hopflab::coefficients::{certify_ellipticity, make_preset, ConductivityField, FieldKind, PresetParams, RasterGrid};
use hopflab::mesh::generate_disk_mesh;
use hopflab::Vec2;

fn main() -> hopflab::Result<()> {
    let mesh = generate_disk_mesh(0.1)?;
    let probes = [Vec2::ZERO, Vec2::new(0.3, 0.2), Vec2::new(0.0, 1.0), Vec2::new(-0.7, -0.7)];
    for kind in FieldKind::BENCHMARK {
        let field = ConductivityField::preset(kind)?;
        let values: Vec<String> = probes
            .iter()
            .map(|&p| Ok(format!("{:.3}", field.evaluate(p)?.xx)))
            .collect::<hopflab::Result<_>>()?;
        println!(
            "{kind:12} kappa {:.1}  sampled {:.3}  sigma at probes [{}]",
            field.kappa(),
            certify_ellipticity(&field, &mesh)?,
            values.join(", ")
        );
    }

    // A raster is rescaled onto [1, 4] before use.
    let raster = RasterGrid::from_fn(21, 21, (-1.0, 1.0), (-1.0, 1.0), |x, y| (3.0 * x).sin() + y * y)?;
    let field = make_preset(FieldKind::Realistic, &PresetParams::default().with_raster(raster))?;
    println!("custom raster: sigma(0, 0) = {:.4}", field.evaluate(Vec2::ZERO)?.xx);

    let anisotropic = make_preset(
        FieldKind::Anisotropic,
        &PresetParams::default().with("major", 3.0).with("angle", 0.5),
    )?;
    let (lo, hi) = anisotropic.evaluate(Vec2::ZERO)?.eigenvalues();
    println!("anisotropic eigenvalues: {lo:.3}, {hi:.3}");
    Ok(())
}
