//! The h_k sweep over the four benchmark presets, written as CSV.

use hopflab::experiments::{estimate_constant, run_sweep, write_rows, SweepConfig};

fn main() -> hopflab::Result<()> {
    let path = std::env::temp_dir().join("hopflab_sweep.csv");
    let config = SweepConfig {
        output_path: Some(path.clone()),
        with_barrier: true,
        ..SweepConfig::default()
    };
    let outcome = run_sweep(&config)?;
    println!("wrote {} rows to {}", outcome.rows.len(), path.display());

    let (c_me0, c_me) = estimate_constant(&outcome.rows)?;
    println!("C_me0 = {c_me0:.5}, C_me = {c_me:.5}");
    let worst = outcome
        .certificates
        .iter()
        .map(|c| c.ineq1_margin)
        .fold(f64::INFINITY, f64::min);
    println!("smallest certified margin: {worst:.3e}\n");

    write_rows(&outcome.rows[..3], std::io::stdout().lock())?;
    Ok(())
}
