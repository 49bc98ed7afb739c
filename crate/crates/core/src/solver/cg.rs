use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Iteration count and achieved relative residual `|b - Ax| / |b|`
/// (recomputed from scratch, not the recursive estimate).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Iteration budget `ceil(20 sqrt(N))`; hitting it indicates an assembly bug.
pub fn iteration_budget(n: usize) -> usize {
    (20.0 * (n as f64).sqrt()).ceil() as usize
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
/// Stops once the relative residual drops to `rel_tol`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], rel_tol: f64) -> Result<CgOutcome> {
    let n = b.len();
    assert_eq!(a.nrows(), n);
    assert_eq!(x.len(), n);
    x.iter_mut().for_each(|v| *v = 0.0);

    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NotPositiveDefinite {
                    iteration: 0,
                    curvature: d,
                })
            }
        })
        .collect::<Result<_>>()?;

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let budget = iteration_budget(n);

    for iteration in 1..=budget {
        a.mul_vec_into(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::NotPositiveDefinite {
                iteration,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= rel_tol * b_norm {
            return Ok(CgOutcome {
                iterations: iteration,
                relative_residual: true_residual(a, b, x, b_norm),
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: budget,
        residual: true_residual(a, b, x, b_norm),
    })
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64], b_norm: f64) -> f64 {
    let ax = a.mul_vec(x);
    let r2: f64 = b.iter().zip(&ax).map(|(b, ax)| (b - ax).powi(2)).sum();
    r2.sqrt() / b_norm
}
