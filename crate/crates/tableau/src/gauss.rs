//! Gauss-Legendre nodes, weights and collocation matrices.

use std::f64::consts::PI;

use crate::fixed::{Arith, BigFixed};
use crate::{ButcherTableau, TableauError};

const MAX_NEWTON: usize = 100;

/// Precision used when none is requested: 256 bits up to `q = 100`,
/// 768 bits up to `q = 500`, and `2q` (rounded up to 64) beyond.
pub fn default_precision_bits(q: usize) -> u32 {
    match q {
        0..=100 => 256,
        101..=500 => 768,
        _ => (2 * q as u32).div_ceil(64) * 64,
    }
}

fn check(q: usize, precision_bits: u32) -> Result<(), TableauError> {
    if q == 0 {
        return Err(TableauError::Argument("stage count must be at least 1".into()));
    }
    if precision_bits < 64 {
        return Err(TableauError::Argument(format!(
            "precision must be at least 64 bits, got {precision_bits}"
        )));
    }
    Ok(())
}

/// Roots of `P_q(2c − 1)` in `(0, 1)`, ascending, computed with
/// `precision_bits` fractional bits and rounded to `f64`.
pub fn legendre_roots(q: usize, precision_bits: u32) -> Result<Vec<f64>, TableauError> {
    check(q, precision_bits)?;
    let x = roots_on(&BigFixed::zero(precision_bits), q)?;
    let one = BigFixed::zero(precision_bits).int(1);
    Ok(x.iter().map(|xi| xi.add(&one).div_int(2).to_f64()).collect())
}

/// The `q`-stage Gauss-Legendre collocation tableau, generated in
/// `precision_bits`-bit fixed point, rounded to `f64` and checked.
pub fn gauss_legendre_tableau(q: usize, precision_bits: u32) -> Result<ButcherTableau, TableauError> {
    check(q, precision_bits)?;
    let (c, b, a) = collocation(&BigFixed::zero(precision_bits), q)?;
    let round = |v: &[BigFixed]| v.iter().map(Arith::to_f64).collect::<Vec<f64>>();
    let tableau = ButcherTableau::new(
        round(&c),
        round(&b),
        a.iter().flat_map(|row| round(row)).collect(),
        precision_bits,
    )?;
    let report = crate::verify_tableau(&tableau);
    let tol = 1e-10 * q as f64;
    if report.order_residual() > tol {
        return Err(TableauError::Numerical(format!(
            "order-condition residual {:e} exceeds {tol:e} for q={q}; increase precision_bits (was {precision_bits})",
            report.order_residual()
        )));
    }
    Ok(tableau)
}

/// The same construction carried out in a caller-chosen arithmetic, for
/// example plain `f64`. Returns `(c, b, a)` with `a` row-major.
pub fn gauss_legendre_in<S: Arith>(zero: &S, q: usize) -> Result<(Vec<S>, Vec<S>, Vec<Vec<S>>), TableauError> {
    if q == 0 {
        return Err(TableauError::Argument("stage count must be at least 1".into()));
    }
    collocation(zero, q)
}

/// `P_0(x) ..= P_n(x)` by the three-term recurrence.
fn legendre_table<S: Arith>(x: &S, n: usize) -> Vec<S> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(x.int(1));
    if n >= 1 {
        p.push(x.clone());
    }
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) x P_k − k P_{k−1}
        let next = x
            .mul(&p[k])
            .mul_int(2 * k as i64 + 1)
            .sub(&p[k - 1].mul_int(k as i64))
            .div_int(k as i64 + 1);
        p.push(next);
    }
    p
}

/// `(P_q(x), P_q'(x))`.
fn legendre_with_derivative<S: Arith>(x: &S, q: usize) -> (S, S) {
    let p = legendre_table(x, q);
    let one = x.int(1);
    // P_q' = q (x P_q − P_{q−1}) / (x² − 1)
    let d = x.mul(&p[q]).sub(&p[q - 1]).mul_int(q as i64).div(&x.mul(x).sub(&one));
    (p[q].clone(), d)
}

/// Roots of `P_q` on `[−1, 1]`, ascending.
fn roots_on<S: Arith>(zero: &S, q: usize) -> Result<Vec<S>, TableauError> {
    let mut roots = Vec::with_capacity(q);
    for k in 1..=q {
        let guess = (PI * (k as f64 - 0.25) / (q as f64 + 0.5)).cos();
        let mut x = zero.from_f64(guess);
        let mut converged = false;
        for _ in 0..MAX_NEWTON {
            let (p, d) = legendre_with_derivative(&x, q);
            let dx = p.div(&d);
            x = x.sub(&dx);
            if dx.negligible() {
                // One more step to clean up the last bits.
                let (p, d) = legendre_with_derivative(&x, q);
                x = x.sub(&p.div(&d));
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(TableauError::Numerical(format!(
                "Newton iteration for root {k} of P_{q} did not converge in {MAX_NEWTON} steps"
            )));
        }
        roots.push(x);
    }
    roots.reverse();
    Ok(roots)
}

/// Nodes, weights and `a_ij = ∫_0^{c_i} ℓ_j`, using the Legendre expansion
/// of the Lagrange basis,
/// `ℓ_j(x) = w_j Σ_{k<q} (2k+1)/2 P_k(x_j) P_k(x)`,
/// and `∫_{−1}^{y} P_k = (P_{k+1}(y) − P_{k−1}(y)) / (2k+1)`.
#[allow(clippy::type_complexity)]
fn collocation<S: Arith>(zero: &S, q: usize) -> Result<(Vec<S>, Vec<S>, Vec<Vec<S>>), TableauError> {
    let x = roots_on(zero, q)?;
    let one = zero.int(1);
    let tables: Vec<Vec<S>> = x.iter().map(|xi| legendre_table(xi, q)).collect();

    // Gauss weights on [−1, 1]: w = 2 / ((1 − x²) P_q'(x)²).
    let w: Vec<S> = x
        .iter()
        .map(|xi| {
            let (_, d) = legendre_with_derivative(xi, q);
            one.mul_int(2).div(&one.sub(&xi.mul(xi)).mul(&d.mul(&d)))
        })
        .collect();

    // D_k(x_i) = (P_{k+1}(x_i) − P_{k−1}(x_i)) / 2 for k = 1..q−1.
    let dk: Vec<Vec<S>> = tables
        .iter()
        .map(|p| (1..q).map(|k| p[k + 1].sub(&p[k - 1]).div_int(2)).collect())
        .collect();
    let pk: Vec<Vec<S>> = tables.iter().map(|p| p[1..q].to_vec()).collect();

    let c: Vec<S> = x.iter().map(|xi| xi.add(&one).div_int(2)).collect();
    let b: Vec<S> = w.iter().map(|wj| wj.div_int(2)).collect();
    let mut a = Vec::with_capacity(q);
    for i in 0..q {
        let base = x[i].add(&one).div_int(2);
        let row: Vec<S> = (0..q)
            .map(|j| {
                let s = if q > 1 { S::dot(&pk[j], &dk[i]) } else { zero.int(0) };
                // a_ij = (1/2) w_j [ (x_i + 1)/2 + Σ_k P_k(x_j) D_k(x_i) ]
                w[j].mul(&base.add(&s)).div_int(2)
            })
            .collect();
        a.push(row);
    }
    Ok((c, b, a))
}
