//! Gauss–Hermite quadrature for the weight `e^{−x²}` on the real line.

use std::f64::consts::PI;

use pinn_core::{Error, Result};

const MAX_NEWTON: usize = 100;

/// Nodes (ascending) and natural logarithms of the weights. Logs are kept
/// because the outer weights of large rules sit near the bottom of the
/// double range.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl HermiteRule {
    /// `n`-point rule. Nodes start from the eigenvalues of the Jacobi
    /// matrix of the Hermite recurrence and are polished by Newton steps on
    /// the orthonormal recurrence, which also yields the weights.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("Gauss-Hermite rule needs at least one node".into()));
        }
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let mut off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
        let mut guesses = vec![0.0; n];
        tridiagonal_eigenvalues(&mut guesses, &mut off)?;
        guesses.sort_by(f64::total_cmp);

        let mut nodes = Vec::with_capacity(n);
        let mut log_weights = Vec::with_capacity(n);
        for (i, &g) in guesses.iter().enumerate() {
            let mut z = g;
            let mut converged = false;
            let mut pp = 0.0;
            for _ in 0..MAX_NEWTON {
                let (p1, p2) = recurrence(z, n, pim4);
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    let (_, p2) = recurrence(z, n, pim4);
                    pp = (2.0 * nf).sqrt() * p2;
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerical(format!(
                    "Gauss-Hermite node {i} of {n} did not converge"
                )));
            }
            nodes.push(z);
            log_weights.push(2f64.ln() - 2.0 * pp.abs().ln());
        }
        // Exact symmetry about the origin.
        for i in 0..n / 2 {
            let z = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            let l = 0.5 * (log_weights[i] + log_weights[n - 1 - i]);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            log_weights[i] = l;
            log_weights[n - 1 - i] = l;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Numerical(format!(
                "Gauss-Hermite nodes for n={n} are not distinct"
            )));
        }
        Ok(Self { nodes, log_weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e`, by implicit QL iteration; overwrites `d`.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut Vec<f64>) -> Result<()> {
    let n = d.len();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical(
                    "tridiagonal eigenvalue iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// `(p_n(z), p_{n−1}(z))` of the orthonormal Hermite polynomials.
fn recurrence(z: f64, n: usize, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn integrate(r: &HermiteRule, f: impl Fn(f64) -> f64) -> f64 {
        r.nodes.iter().zip(&r.log_weights).map(|(&x, &l)| l.exp() * f(x)).sum()
    }

    #[test]
    fn moments() {
        for n in [1, 2, 5, 20, 100, 254] {
            let r = HermiteRule::new(n).unwrap();
            assert_eq!(r.len(), n);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            assert_relative_eq!(integrate(&r, |_| 1.0), PI.sqrt(), max_relative = 1e-13);
            if n >= 2 {
                assert_relative_eq!(integrate(&r, |x| x * x), PI.sqrt() / 2.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn two_point_rule() {
        let r = HermiteRule::new(2).unwrap();
        let s = 0.5f64.sqrt();
        assert_relative_eq!(r.nodes[1], s, epsilon = 1e-15);
        assert_relative_eq!(r.log_weights[0].exp(), PI.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_shift() {
        // ∫ e^{−x²} cos(x) dx = √π e^{−1/4}
        let r = HermiteRule::new(40).unwrap();
        assert_relative_eq!(
            integrate(&r, f64::cos),
            PI.sqrt() * (-0.25f64).exp(),
            max_relative = 1e-14
        );
    }
}
