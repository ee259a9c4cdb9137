//! Exact solution of the viscous Burgers problem
//! `u_t + u u_x = ν u_xx`, `u(0, x) = −sin(πx)`, `u(t, ±1) = 0`,
//! through the Cole–Hopf transformation:
//!
//! ```text
//! u(t, x) = −∫ sin(π(x−η)) f(x−η) e^{−η²/4νt} dη / ∫ f(x−η) e^{−η²/4νt} dη,
//! f(y) = exp(−cos(πy) / 2πν).
//! ```
//!
//! Both integrals are evaluated with Gauss–Hermite quadrature after the
//! substitution `η = √(4νt) z`, accumulated in log space.

use std::f64::consts::PI;
use std::sync::OnceLock;

use pinn_core::metrics::SolutionGrid;
use pinn_core::{Error, Result};

use crate::hermite::HermiteRule;

/// Default node count.
pub const HERMITE_NODES: usize = 100;
/// Node count used when `t ν` is small, where the heat kernel is narrow
/// against the initial profile's scale.
pub const HERMITE_NODES_FINE: usize = 254;
const FINE_THRESHOLD: f64 = 1e-4;

fn cached(n: usize) -> Result<&'static HermiteRule> {
    static COARSE: OnceLock<HermiteRule> = OnceLock::new();
    static FINE: OnceLock<HermiteRule> = OnceLock::new();
    let cell = match n {
        HERMITE_NODES => &COARSE,
        HERMITE_NODES_FINE => &FINE,
        _ => return Err(Error::Argument(format!("no cached rule with {n} nodes"))),
    };
    if let Some(r) = cell.get() {
        return Ok(r);
    }
    let r = HermiteRule::new(n)?;
    Ok(cell.get_or_init(|| r))
}

/// `u(t, x)` with the default rule: 100 nodes, or 254 when `tν < 1e-4`.
pub fn burgers_exact(t: f64, x: f64, nu: f64) -> Result<f64> {
    check(t, x, nu)?;
    if t == 0.0 {
        return Ok(-(PI * x).sin());
    }
    let n = if t * nu < FINE_THRESHOLD {
        HERMITE_NODES_FINE
    } else {
        HERMITE_NODES
    };
    cole_hopf(cached(n)?, t, x, nu)
}

/// `u(t, x)` with an explicit rule.
pub fn burgers_exact_with(rule: &HermiteRule, t: f64, x: f64, nu: f64) -> Result<f64> {
    check(t, x, nu)?;
    if t == 0.0 {
        return Ok(-(PI * x).sin());
    }
    cole_hopf(rule, t, x, nu)
}

fn check(t: f64, x: f64, nu: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Argument(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Argument(format!("x = {x} outside [-1, 1]")));
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Argument(format!("viscosity must be positive, got {nu}")));
    }
    Ok(())
}

fn cole_hopf(rule: &HermiteRule, t: f64, x: f64, nu: f64) -> Result<f64> {
    let s = (4.0 * nu * t).sqrt();
    let scale = 1.0 / (2.0 * PI * nu);
    let logs: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.log_weights)
        .map(|(&z, &lw)| lw - (PI * (x - s * z)).cos() * scale)
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (&z, &l) in rule.nodes.iter().zip(&logs) {
        let w = (l - top).exp();
        num += (PI * (x - s * z)).sin() * w;
        den += w;
    }
    if !(den >= 1e-300) {
        return Err(Error::Numerical(format!(
            "Cole-Hopf quadrature broke down at t={t}, x={x}"
        )));
    }
    Ok(-num / den)
}

/// Exact solution on a tensor grid, component `u`.
pub fn burgers_grid(t: &[f64], x: &[f64], nu: f64) -> Result<SolutionGrid<f64>> {
    let mut grid = SolutionGrid::new(t.to_vec(), x.to_vec())?;
    let mut values = Vec::with_capacity(t.len() * x.len());
    for &ti in t {
        for &xj in x {
            values.push(burgers_exact(ti, xj, nu)?);
        }
    }
    grid.push("u", values, None)?;
    Ok(grid)
}

/// The standard evaluation grid: 100 times on `[0, 0.99]` and 256 points
/// on `[−1, 1]`.
pub fn burgers_reference_axes() -> (Vec<f64>, Vec<f64>) {
    (linspace(0.0, 0.99, 100), linspace(-1.0, 1.0, 256))
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const NU: f64 = 0.01 / PI;

    #[test]
    fn initial_condition_is_returned_exactly() {
        for x in linspace(-1.0, 1.0, 11) {
            assert_eq!(burgers_exact(0.0, x, NU).unwrap(), -(PI * x).sin());
        }
    }

    #[test]
    fn arguments_are_checked() {
        assert!(burgers_exact(-0.1, 0.0, NU).is_err());
        assert!(burgers_exact(0.1, 1.5, NU).is_err());
        assert!(burgers_exact(0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn heat_limit_for_large_viscosity() {
        // For large ν the nonlinearity is negligible over short times:
        // u ≈ −e^{−νπ²t} sin(πx).
        let (nu, t) = (1.0, 1e-3);
        let u = burgers_exact(t, 0.5, nu).unwrap();
        assert_relative_eq!(u, -(-nu * PI * PI * t).exp(), max_relative = 1e-3);
    }
}
