//! Gauss-Legendre implicit Runge-Kutta tableaux.
//!
//! Nodes, weights and the collocation matrix are generated in binary fixed
//! point with a configurable number of fractional bits and rounded to
//! `f64` at the end. Generated tableaux can be cached on disk in a plain
//! text format that round-trips bit for bit.

mod cache;
pub mod fixed;
mod gauss;
mod ode;

use std::fmt;

pub use cache::{CacheStatus, TableauCache};
pub use gauss::{default_precision_bits, gauss_legendre_in, gauss_legendre_tableau, legendre_roots};
pub use ode::{integrate_scalar, stability_function};

#[derive(Debug, thiserror::Error)]
pub enum TableauError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("tableau file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `q`-stage Butcher tableau `(c, A, b)` in `f64`.
#[derive(Clone, PartialEq)]
pub struct ButcherTableau {
    q: usize,
    c: Vec<f64>,
    b: Vec<f64>,
    /// Row-major `q × q`.
    a: Vec<f64>,
    precision_bits: u32,
}

impl ButcherTableau {
    pub fn new(c: Vec<f64>, b: Vec<f64>, a: Vec<f64>, precision_bits: u32) -> Result<Self, TableauError> {
        let q = c.len();
        if q == 0 || b.len() != q || a.len() != q * q {
            return Err(TableauError::Argument(format!(
                "inconsistent tableau sizes: c {}, b {}, a {}",
                c.len(),
                b.len(),
                a.len()
            )));
        }
        if c.iter().chain(&b).chain(&a).any(|v| !v.is_finite()) {
            return Err(TableauError::Numerical("tableau has non-finite entries".into()));
        }
        Ok(Self {
            q,
            c,
            b,
            a,
            precision_bits,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.q + j]
    }

    /// Row-major `q × q` matrix.
    pub fn a_matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn a_row(&self, i: usize) -> &[f64] {
        &self.a[i * self.q..(i + 1) * self.q]
    }

    /// Precision the tableau was generated with.
    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// Text form: header `q=<q> precision_bits=<p>`, then one line of `c`,
    /// one of `b` and `q` lines with the rows of `A`; numbers separated by
    /// single spaces, each with 17 significant digits.
    pub fn to_text(&self) -> String {
        let line = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let mut s = format!("q={} precision_bits={}\n", self.q, self.precision_bits);
        s.push_str(&line(&self.c));
        s.push('\n');
        s.push_str(&line(&self.b));
        s.push('\n');
        for i in 0..self.q {
            s.push_str(&line(self.a_row(i)));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, TableauError> {
        let err = |line: usize, message: String| TableauError::Parse { line, message };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let mut q = None;
        let mut bits = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("q", v)) => q = v.parse::<usize>().ok(),
                Some(("precision_bits", v)) => bits = v.parse::<u32>().ok(),
                _ => return Err(err(1, format!("unexpected header field {field:?}"))),
            }
        }
        let (q, bits) = match (q, bits) {
            (Some(q), Some(b)) if q > 0 => (q, b),
            _ => return Err(err(1, "header must be q=<q> precision_bits=<p>".into())),
        };
        let mut rows = Vec::with_capacity(q + 2);
        for k in 0..q + 2 {
            let lineno = k + 2;
            let line = lines
                .next()
                .ok_or_else(|| err(lineno, "unexpected end of file".into()))?;
            let row = line
                .split_whitespace()
                .map(|f| f.parse::<f64>().map_err(|e| err(lineno, format!("{f:?}: {e}"))))
                .collect::<Result<Vec<f64>, _>>()?;
            if row.len() != q {
                return Err(err(lineno, format!("expected {q} numbers, got {}", row.len())));
            }
            rows.push(row);
        }
        if let Some((k, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
            return Err(err(q + 4 + k, format!("trailing content {extra:?}")));
        }
        let mut rows = rows.into_iter();
        let c = rows.next().expect("c row");
        let b = rows.next().expect("b row");
        let a = rows.flatten().collect();
        Self::new(c, b, a, bits)
    }
}

impl fmt::Debug for ButcherTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ButcherTableau")
            .field("q", &self.q)
            .field("c", &self.c)
            .field("b", &self.b)
            .field("precision_bits", &self.precision_bits)
            .finish_non_exhaustive()
    }
}

/// Largest residuals of the tableau invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableauReport {
    pub q: usize,
    /// `|Σ_j b_j − 1|`.
    pub sum_b: f64,
    /// `max_i |Σ_j a_ij − c_i|`.
    pub row_sums: f64,
    /// `max_{i,k} |Σ_j a_ij c_j^{k−1} − c_i^k / k|`, `k = 1..q`.
    pub collocation_a: f64,
    /// `max_k |Σ_j b_j c_j^{k−1} − 1/k|`, `k = 1..q`.
    pub collocation_b: f64,
    /// `max_i |c_i + c_{q+1−i} − 1|`.
    pub node_symmetry: f64,
    /// `max_{i,j} |a_ij + a_{q+1−i,q+1−j} − b_j|`.
    pub matrix_symmetry: f64,
    pub min_b: f64,
    pub nodes_increasing: bool,
    pub nodes_inside: bool,
}

impl TableauReport {
    /// Largest order-condition residual.
    pub fn order_residual(&self) -> f64 {
        self.sum_b
            .max(self.row_sums)
            .max(self.collocation_a)
            .max(self.collocation_b)
    }

    /// All invariants hold with order-condition tolerance `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.order_residual() <= tol
            && self.node_symmetry <= 1e-14
            && self.matrix_symmetry <= 1e-12
            && self.min_b > 0.0
            && self.nodes_increasing
            && self.nodes_inside
    }
}

/// Evaluate every invariant of a Gauss-Legendre tableau. Sums use a
/// compensated dot product so the report reflects the stored values, not
/// the evaluation.
pub fn verify_tableau(t: &ButcherTableau) -> TableauReport {
    let q = t.q;
    let ones = vec![1.0; q];
    let mut report = TableauReport {
        q,
        sum_b: (dot2(&t.b, &ones) - 1.0).abs(),
        row_sums: 0.0,
        collocation_a: 0.0,
        collocation_b: 0.0,
        node_symmetry: 0.0,
        matrix_symmetry: 0.0,
        min_b: t.b.iter().copied().fold(f64::INFINITY, f64::min),
        nodes_increasing: t.c.windows(2).all(|w| w[0] < w[1]),
        nodes_inside: t.c.iter().all(|&c| 0.0 < c && c < 1.0),
    };
    for i in 0..q {
        report.row_sums = report.row_sums.max((dot2(t.a_row(i), &ones) - t.c[i]).abs());
        report.node_symmetry = report.node_symmetry.max((t.c[i] + t.c[q - 1 - i] - 1.0).abs());
        for j in 0..q {
            let s = t.a(i, j) + t.a(q - 1 - i, q - 1 - j) - t.b[j];
            report.matrix_symmetry = report.matrix_symmetry.max(s.abs());
        }
    }
    // powers[j] = c_j^{k−1}
    let mut powers = vec![1.0; q];
    let mut ci_pow: Vec<f64> = t.c.clone();
    for k in 1..=q {
        let kf = k as f64;
        report.collocation_b = report.collocation_b.max((dot2(&t.b, &powers) - 1.0 / kf).abs());
        for i in 0..q {
            let r = dot2(t.a_row(i), &powers) - ci_pow[i] / kf;
            report.collocation_a = report.collocation_a.max(r.abs());
        }
        for j in 0..q {
            powers[j] *= t.c[j];
            ci_pow[j] *= t.c[j];
        }
    }
    report
}

/// Dot product in twice the working precision (Ogita, Rump & Oishi).
fn dot2(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let p = x * y;
        let pe = x.mul_add(y, -p);
        let t = s + p;
        let z = t - s;
        let se = (s - (t - z)) + (p - z);
        s = t;
        c += pe + se;
    }
    s + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let t = gauss_legendre_tableau(3, 128).unwrap();
        let back = ButcherTableau::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert!(t.to_text().starts_with("q=3 precision_bits=128\n"));
    }

    #[test]
    fn malformed_text_is_rejected() {
        let t = gauss_legendre_tableau(2, 128).unwrap().to_text();
        let cut: String = t.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            ButcherTableau::from_text(&cut),
            Err(TableauError::Parse { line: 4, .. })
        ));
        let bad = t.replacen("q=2", "q=x", 1);
        assert!(matches!(
            ButcherTableau::from_text(&bad),
            Err(TableauError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn dot2_is_compensated() {
        let a = [1e16, 1.0, -1e16];
        let b = [1.0, 1.0, 1.0];
        assert_eq!(dot2(&a, &b), 1.0);
    }
}
