//! File formats written by the library read back unchanged.

use std::fs::File;
use std::io::BufReader;

use hopflab::barrier::{barrier_certificate, CertificateRow};
use hopflab::coefficients::{make_preset, ConductivityField, FieldKind, PresetParams, RasterGrid};
use hopflab::experiments::{read_rows, run_sweep, write_rows, SweepConfig};
use hopflab::functionals::hopf_report;
use hopflab::kernels::{discrete_poisson_kernel, interior_samples, KERNEL_REL_TOL};
use hopflab::mesh::{generate_disk_mesh, TriangleMesh};
use hopflab::solver::assemble_system;

#[test]
fn mesh_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("disk.mesh");
    let mesh = generate_disk_mesh(0.15).unwrap();
    mesh.write_text(File::create(&path).unwrap()).unwrap();
    let back = TriangleMesh::read_text(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.triangles(), mesh.triangles());
    let mut a = back.boundary_vertices().to_vec();
    let mut b = mesh.boundary_vertices().to_vec();
    a.sort_unstable();
    b.sort_unstable();
    assert_eq!(a, b);
    assert_eq!(back.to_text(), mesh.to_text());
}

#[test]
fn truncated_mesh_file_is_a_parse_error() {
    let text = generate_disk_mesh(0.4).unwrap().to_text();
    let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    let err = TriangleMesh::read_text(cut.as_bytes()).unwrap_err();
    assert!(matches!(err, hopflab::Error::Parse { .. }), "{err}");
}

#[test]
fn raster_file_roundtrip_gives_the_same_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sigma.raster");
    let raster = RasterGrid::synthetic_default();
    raster.write_text(File::create(&path).unwrap()).unwrap();
    let back = RasterGrid::read_text(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back, raster);

    let a = make_preset(FieldKind::Realistic, &PresetParams::default().with_raster(back)).unwrap();
    let b = ConductivityField::preset(FieldKind::Realistic).unwrap();
    for p in generate_disk_mesh(0.3).unwrap().vertices() {
        assert_eq!(a.evaluate(*p).unwrap(), b.evaluate(*p).unwrap());
    }
}

#[test]
fn sweep_csv_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let outcome = run_sweep(&SweepConfig {
        sigma_kinds: vec![FieldKind::Oscillating, FieldKind::Identity],
        k_values: vec![1, 2, 4, 8],
        target_h: 0.2,
        output_path: Some(path.clone()),
        ..SweepConfig::default()
    })
    .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "sigma_kind,k,h,x0_x,x0_y,u_max,dnu,l1_omega,l1_gamma,ratio_me0,ratio_me"
    );
    let rows = read_rows(File::open(&path).unwrap()).unwrap();
    assert_eq!(rows, outcome.rows);
    assert_eq!(rows[0].sigma_kind, "identity");
    assert_eq!(rows[4].sigma_kind, "oscillating");
}

#[test]
fn solution_and_certificate_exports() {
    let mesh = generate_disk_mesh(0.2).unwrap();
    let field = ConductivityField::identity();
    let solution = assemble_system(&mesh, &field, |_| 0.0, |p| p.y).unwrap().solve(1e-12).unwrap();
    let mut buf = Vec::new();
    solution.write_text(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), mesh.num_vertices());
    for (v, line) in text.lines().enumerate() {
        let (index, value) = line.split_once(' ').unwrap();
        assert_eq!(index.parse::<usize>().unwrap(), v);
        assert_eq!(value.parse::<f64>().unwrap(), solution.value(v));
    }

    let x0 = hopf_report(&solution).unwrap().x0.vertex;
    let row = barrier_certificate(&solution, x0, 0.5, 0.25).unwrap().to_row();
    let mut buf = Vec::new();
    write_rows(std::slice::from_ref(&row), &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["x0_x", "x0_y", "r", "rho", "lambda", "epsilon", "gamma", "subsol_min", "ineq1_margin"]
    );
    let back: Vec<CertificateRow> = reader.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(back, [row]);
}

#[test]
fn kernel_csv_has_exact_column_only_for_identity() {
    let mesh = generate_disk_mesh(0.25).unwrap();
    let samples = interior_samples(&mesh, 0.1);
    for (field, exact) in [
        (ConductivityField::identity(), true),
        (ConductivityField::preset(FieldKind::Linear).unwrap(), false),
    ] {
        let kernel = discrete_poisson_kernel(&mesh, &field, &samples, KERNEL_REL_TOL).unwrap();
        let mut buf = Vec::new();
        kernel.write_csv(&mut buf).unwrap();
        let mut reader = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            ["xi_index", "yj_index", "K", "value_exact_if_available"]
        );
        let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().unwrap();
        assert_eq!(records.len(), kernel.num_rows() * kernel.num_cols());
        assert!(records.iter().all(|r| r[3].is_empty() != exact));
    }
}
