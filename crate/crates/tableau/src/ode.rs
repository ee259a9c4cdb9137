//! Classical use of a tableau: stepping a scalar ODE, and the linear
//! stability function.

use crate::{ButcherTableau, TableauError};

/// `R(z) = 1 + z bᵀ (I − zA)⁻¹ 1` for real `z`.
pub fn stability_function(t: &ButcherTableau, z: f64) -> Result<f64, TableauError> {
    let q = t.q();
    let mut m: Vec<f64> = t.a_matrix().iter().map(|&a| -z * a).collect();
    for i in 0..q {
        m[i * q + i] += 1.0;
    }
    let k = solve(m, vec![1.0; q])?;
    Ok(1.0 + z * t.b().iter().zip(&k).map(|(b, k)| b * k).sum::<f64>())
}

/// Integrate `y' = f(y)` over `steps` steps of size `dt`, solving the
/// stage equations `Y_i = y + dt Σ_j a_ij f(Y_j)` by Newton's method with
/// the derivative `df`.
pub fn integrate_scalar(
    t: &ButcherTableau,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    y0: f64,
    dt: f64,
    steps: usize,
) -> Result<f64, TableauError> {
    let q = t.q();
    let mut y = y0;
    for _ in 0..steps {
        let mut stages = vec![y; q];
        let mut converged = false;
        for _ in 0..50 {
            let fy: Vec<f64> = stages.iter().map(|&s| f(s)).collect();
            let dfy: Vec<f64> = stages.iter().map(|&s| df(s)).collect();
            let mut jac = vec![0.0; q * q];
            let mut rhs = vec![0.0; q];
            for i in 0..q {
                let row = t.a_row(i);
                let mut g = stages[i] - y;
                for j in 0..q {
                    g -= dt * row[j] * fy[j];
                    jac[i * q + j] = -dt * row[j] * dfy[j];
                }
                jac[i * q + i] += 1.0;
                rhs[i] = -g;
            }
            let delta = solve(jac, rhs)?;
            let mut size = 0.0f64;
            for (s, d) in stages.iter_mut().zip(&delta) {
                *s += d;
                size = size.max(d.abs() / s.abs().max(1.0));
            }
            if size <= 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(TableauError::Numerical(
                "stage Newton iteration did not converge".into(),
            ));
        }
        y += dt * t.b().iter().zip(&stages).map(|(b, &s)| b * f(s)).sum::<f64>();
    }
    Ok(y)
}

/// Gaussian elimination with partial pivoting on a row-major square system.
fn solve(mut m: Vec<f64>, mut rhs: Vec<f64>) -> Result<Vec<f64>, TableauError> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs()))
            .expect("non-empty");
        if m[piv * n + col] == 0.0 {
            return Err(TableauError::Numerical("singular stage system".into()));
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            rhs.swap(piv, col);
        }
        for r in col + 1..n {
            let factor = m[r * n + col] / m[col * n + col];
            for k in col..n {
                m[r * n + k] -= factor * m[col * n + k];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r * n + k] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[r * n + r];
    }
    Ok(x)
}
