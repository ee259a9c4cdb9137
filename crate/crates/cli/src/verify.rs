//! `pinn verify`: fast invariant checks across the solver stack.

use std::f64::consts::PI;

use pinn_core::ct::{self, CtProblem, CtTrainingSet, DataPoint, BURGERS_VISCOSITY};
use pinn_core::dt::{self, DtProblem, DtSnapshot};
use pinn_core::network::MlpConfig;
use pinn_refsolve::{allen_cahn_spectral, burgers_exact, nls_mass, nls_spectral, SpectralConfig};
use pinn_tableau::{gauss_legendre_tableau, verify_tableau};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Largest relative difference between an analytic gradient and central
/// differences of the objective.
fn fd_mismatch(f: impl Fn(&[f64]) -> (f64, Vec<f64>), x: &[f64]) -> f64 {
    let (_, g) = f(x);
    let mut worst: f64 = 0.0;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp).0;
        xp[i] = x[i] - h;
        let fm = f(&xp).0;
        xp[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-6));
    }
    worst
}

pub fn run_checks() -> Vec<Check> {
    let mut out = Vec::new();

    let n = MlpConfig::new(2, 8, 20, 1).parameter_count();
    out.push(check("parameter count 2-8x20-1", n == 3021, format!("{n}")));

    let mut burgers = CtProblem::burgers();
    burgers.network = MlpConfig::new(2, 2, 5, 1);
    let set = CtTrainingSet {
        data: vec![
            DataPoint {
                t: 0.0,
                x: 0.3,
                values: vec![-0.8],
            },
            DataPoint {
                t: 0.4,
                x: -1.0,
                values: vec![0.0],
            },
        ],
        boundary_times: vec![],
        collocation: vec![[0.2, 0.1], [0.7, -0.5], [0.5, 0.9]],
    };
    let params = burgers.network.init::<f64>(3).into_inner();
    let worst = fd_mismatch(|p| ct::ct_loss(&burgers, p, &set).expect("loss"), &params);
    out.push(check(
        "burgers-ct gradient",
        worst < 1e-4,
        format!("max rel {worst:.2e}"),
    ));

    match gauss_legendre_tableau(2, 128) {
        Ok(tab) => {
            let mut dtp = DtProblem::allen_cahn(tab, 0.3);
            dtp.network = MlpConfig::new(1, 1, 6, 3);
            let snap = DtSnapshot {
                t: 0.1,
                x: vec![-0.6, 0.1, 0.8],
                u: vec![0.2, -0.3, 0.5],
            };
            let params = dtp.network.init::<f64>(4).into_inner();
            let worst = fd_mismatch(|p| dt::dt_loss(&dtp, p, &snap).expect("loss"), &params);
            out.push(check(
                "allen-cahn-dt gradient",
                worst < 1e-4,
                format!("max rel {worst:.2e}"),
            ));
        }
        Err(e) => out.push(check("allen-cahn-dt gradient", false, e.to_string())),
    }

    let mut worst: f64 = 0.0;
    let mut failure = None;
    for q in [1, 2, 3, 5, 8] {
        match gauss_legendre_tableau(q, pinn_tableau::default_precision_bits(q)) {
            Ok(t) => {
                let r = verify_tableau(&t);
                worst = worst.max(r.order_residual() / q as f64);
                if !r.passes(1e-10 * q as f64) {
                    failure = Some(format!("q={q} fails"));
                }
            }
            Err(e) => failure = Some(e.to_string()),
        }
    }
    out.push(check(
        "Gauss-Legendre order conditions",
        failure.is_none(),
        failure.unwrap_or_else(|| format!("max residual/q {worst:.2e}")),
    ));

    let mut odd: f64 = 0.0;
    for t in [0.25, 0.5, 0.99] {
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            match (
                burgers_exact(t, x, BURGERS_VISCOSITY),
                burgers_exact(t, -x, BURGERS_VISCOSITY),
            ) {
                (Ok(a), Ok(b)) => odd = odd.max((a + b).abs()),
                _ => odd = f64::INFINITY,
            }
        }
    }
    out.push(check(
        "burgers exact solution odd",
        odd <= 1e-12,
        format!("max |u(x)+u(-x)| {odd:.1e}"),
    ));

    let nls = SpectralConfig {
        time_step: 1e-4,
        snapshots: 3,
        ..SpectralConfig::nls_desk()
    };
    match nls_spectral(&nls, 0.1).and_then(|g| Ok((nls_mass(&g, 0)?, nls_mass(&g, 2)?))) {
        Ok((m0, m1)) => {
            let expected = 8.0 * 5f64.tanh();
            let ok = (m0 - expected).abs() < 1e-6 && ((m1 - m0) / m0).abs() < 1e-6;
            out.push(check("nls mass", ok, format!("m(0)={m0:.9} m(0.1)={m1:.9}")));
        }
        Err(e) => out.push(check("nls mass", false, e.to_string())),
    }

    match allen_cahn_spectral(&SpectralConfig::allen_cahn_fast(), 1.0) {
        Ok(g) => {
            let u = &g.component("u").expect("u").values;
            let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let ic = g.row("u", 0).expect("row");
            let ic_ok = g.x().iter().zip(ic).all(|(&x, &v)| v == x * x * (PI * x).cos());
            out.push(check(
                "allen-cahn bounded",
                max <= 1.05 && ic_ok,
                format!("max |u| {max:.6}"),
            ));
        }
        Err(e) => out.push(check("allen-cahn bounded", false, e.to_string())),
    }
    out
}
