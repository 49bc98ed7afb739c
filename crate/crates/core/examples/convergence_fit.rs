//! Log-log slope of the boundary deviation against the normal derivative.

use hopflab::coefficients::FieldKind;
use hopflab::experiments::{fit_convergence, run_sweep, SweepConfig};

fn main() -> hopflab::Result<()> {
    let outcome = run_sweep(&SweepConfig::default())?;
    println!("preset        slope (all k)  slope (k >= 2)  R^2 (k >= 2)");
    for kind in FieldKind::BENCHMARK {
        let all = fit_convergence(&outcome.rows, kind.as_str(), false)?;
        let tail = fit_convergence(&outcome.rows, kind.as_str(), true)?;
        println!("{kind:12}  {:.4}         {:.4}          {:.6}", all.slope, tail.slope, tail.r_squared);
    }
    Ok(())
}
