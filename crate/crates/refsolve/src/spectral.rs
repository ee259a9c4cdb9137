//! Fourier pseudospectral integration of semilinear periodic problems
//! `û_t = L(k) û + N̂(û)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use pinn_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Classical explicit fourth-order Runge–Kutta.
    Rk4,
    /// Exponential time differencing RK4 (Cox–Matthews), coefficients by
    /// the contour-integral method of Kassam and Trefethen.
    Etdrk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    /// Grid points, a power of two.
    pub modes: usize,
    /// Requested step; the actual step divides the snapshot spacing.
    pub time_step: f64,
    pub integrator: Integrator,
    /// Period of the domain.
    pub length: f64,
    /// Zero the upper third of the spectrum of every nonlinear term.
    #[serde(default = "yes")]
    pub dealias: bool,
    /// Snapshots stored on a uniform grid including `t = 0`.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
}

fn yes() -> bool {
    true
}

fn default_snapshots() -> usize {
    201
}

impl SpectralConfig {
    /// Schrödinger: 256 modes on `[−5, 5)`, RK4 with `Δt = 1e-5`.
    pub fn nls_desk() -> Self {
        Self {
            modes: 256,
            time_step: 1e-5,
            integrator: Integrator::Rk4,
            length: 10.0,
            dealias: true,
            snapshots: 201,
        }
    }

    /// Schrödinger with the step `π/2 · 1e-6`.
    pub fn nls_paper() -> Self {
        Self {
            time_step: PI / 2.0 * 1e-6,
            ..Self::nls_desk()
        }
    }

    /// Allen–Cahn: 512 modes on `[−1, 1)`, RK4 with `Δt = 1e-5`.
    pub fn allen_cahn_desk() -> Self {
        Self {
            modes: 512,
            time_step: 1e-5,
            integrator: Integrator::Rk4,
            length: 2.0,
            dealias: true,
            snapshots: 201,
        }
    }

    /// Allen–Cahn with ETDRK4 at `Δt = 1e-3`, for quick runs.
    pub fn allen_cahn_fast() -> Self {
        Self {
            time_step: 1e-3,
            integrator: Integrator::Etdrk4,
            ..Self::allen_cahn_desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes < 4 || !self.modes.is_power_of_two() {
            return Err(Error::Argument(format!(
                "modes must be a power of two >= 4, got {}",
                self.modes
            )));
        }
        if !(self.time_step > 0.0) || !self.time_step.is_finite() {
            return Err(Error::Argument(format!(
                "time step must be positive, got {}",
                self.time_step
            )));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::Argument(format!(
                "domain length must be positive, got {}",
                self.length
            )));
        }
        if self.snapshots < 2 {
            return Err(Error::Argument("at least two snapshots are required".into()));
        }
        Ok(())
    }

    /// `j · 2π/L` in FFT order; the Nyquist entry is negative.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.modes as isize;
        let s = 2.0 * PI / self.length;
        (0..n).map(|j| if j < n / 2 { j } else { j - n } as f64 * s).collect()
    }
}

/// Forward and inverse transforms of one size; the inverse is normalized.
pub(crate) struct Fourier {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C>,
}

impl Fourier {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            n,
            fwd,
            inv,
            scratch: vec![C::default(); len],
        }
    }

    pub(crate) fn forward(&mut self, data: &mut [C]) {
        self.fwd.process_with_scratch(data, &mut self.scratch);
    }

    pub(crate) fn inverse(&mut self, data: &mut [C]) {
        self.inv.process_with_scratch(data, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Mask keeping `|j| < n/3`.
pub(crate) fn dealias_mask(n: usize, on: bool) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j } else { n - j };
            if !on || 3 * m < n {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// The nonlinear part as a map on spectra.
pub(crate) type Nonlinear<'a> = Box<dyn FnMut(&[C], &mut [C]) + 'a>;

pub(crate) struct Semilinear<'a> {
    pub(crate) linear: Vec<C>,
    pub(crate) nonlinear: Nonlinear<'a>,
}

enum Stepper {
    Rk4 {
        k: [Vec<C>; 4],
        tmp: Vec<C>,
    },
    Etd {
        e: Vec<C>,
        e2: Vec<C>,
        q: Vec<C>,
        f1: Vec<C>,
        f2: Vec<C>,
        f3: Vec<C>,
        nv: Vec<C>,
        na: Vec<C>,
        nb: Vec<C>,
        nc: Vec<C>,
        a: Vec<C>,
        b: Vec<C>,
        c: Vec<C>,
    },
}

/// ETDRK4 coefficients by averaging over a circle of radius one around
/// each `hL` (32 points), which avoids cancellation for small `hL`.
fn etd_coefficients(linear: &[C], h: f64) -> [Vec<C>; 6] {
    const M: usize = 32;
    let roots: Vec<C> = (1..=M)
        .map(|j| C::from_polar(1.0, PI * (j as f64 - 0.5) / M as f64))
        .collect();
    let n = linear.len();
    let mut out: [Vec<C>; 6] = Default::default();
    for v in &mut out {
        v.reserve(n);
    }
    for &l in linear {
        let hl = l * h;
        out[0].push(hl.exp());
        out[1].push((hl / 2.0).exp());
        let (mut q, mut f1, mut f2, mut f3) = (C::default(), C::default(), C::default(), C::default());
        // Upper and lower half circles; conjugate points are needed when
        // `hL` is complex.
        for &r in roots
            .iter()
            .chain(roots.iter().map(|r| r.conj()).collect::<Vec<_>>().iter())
        {
            let z = hl + r;
            let ez = z.exp();
            let z3 = z * z * z;
            q += ((z / 2.0).exp() - 1.0) / z;
            f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
            f2 += (2.0 + z + ez * (z - 2.0)) / z3;
            f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
        }
        let s = h / (2 * M) as f64;
        out[2].push(q * s);
        out[3].push(f1 * s);
        out[4].push(f2 * s);
        out[5].push(f3 * s);
    }
    out
}

impl Stepper {
    fn new(kind: Integrator, linear: &[C], h: f64) -> Self {
        let n = linear.len();
        let z = || vec![C::default(); n];
        match kind {
            Integrator::Rk4 => Stepper::Rk4 {
                k: [z(), z(), z(), z()],
                tmp: z(),
            },
            Integrator::Etdrk4 => {
                let [e, e2, q, f1, f2, f3] = etd_coefficients(linear, h);
                Stepper::Etd {
                    e,
                    e2,
                    q,
                    f1,
                    f2,
                    f3,
                    nv: z(),
                    na: z(),
                    nb: z(),
                    nc: z(),
                    a: z(),
                    b: z(),
                    c: z(),
                }
            }
        }
    }

    fn step(&mut self, sys: &mut Semilinear<'_>, u: &mut [C], h: f64) {
        let lin = &sys.linear;
        match self {
            Stepper::Rk4 { k, tmp } => {
                let rhs = |nl: &mut Nonlinear<'_>, v: &[C], out: &mut [C]| {
                    nl(v, out);
                    for ((o, &l), &x) in out.iter_mut().zip(lin).zip(v) {
                        *o += l * x;
                    }
                };
                rhs(&mut sys.nonlinear, u, &mut k[0]);
                for (s, (frac, prev)) in [(0.5, 0), (0.5, 1), (1.0, 2)].into_iter().enumerate() {
                    for ((t, &x), &d) in tmp.iter_mut().zip(u.iter()).zip(&k[prev]) {
                        *t = x + d * (h * frac);
                    }
                    rhs(&mut sys.nonlinear, tmp, &mut k[s + 1]);
                }
                for (i, x) in u.iter_mut().enumerate() {
                    *x += (k[0][i] + 2.0 * (k[1][i] + k[2][i]) + k[3][i]) * (h / 6.0);
                }
            }
            Stepper::Etd {
                e,
                e2,
                q,
                f1,
                f2,
                f3,
                nv,
                na,
                nb,
                nc,
                a,
                b,
                c,
            } => {
                let nl = &mut sys.nonlinear;
                nl(u, nv);
                for i in 0..u.len() {
                    a[i] = e2[i] * u[i] + q[i] * nv[i];
                }
                nl(a, na);
                for i in 0..u.len() {
                    b[i] = e2[i] * u[i] + q[i] * na[i];
                }
                nl(b, nb);
                for i in 0..u.len() {
                    c[i] = e2[i] * a[i] + q[i] * (2.0 * nb[i] - nv[i]);
                }
                nl(c, nc);
                for i in 0..u.len() {
                    u[i] = e[i] * u[i] + nv[i] * f1[i] + 2.0 * (na[i] + nb[i]) * f2[i] + nc[i] * f3[i];
                }
            }
        }
    }
}

/// Integrate from the spectrum `u0` and hand every snapshot spectrum
/// (`t_k = k T / (snapshots − 1)`, `k ≥ 1`) to `record`.
pub(crate) fn integrate(
    config: &SpectralConfig,
    sys: &mut Semilinear<'_>,
    u0: Vec<C>,
    t_final: f64,
    mut record: impl FnMut(usize, &[C]) -> Result<()>,
) -> Result<()> {
    config.validate()?;
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Argument(format!("final time must be positive, got {t_final}")));
    }
    let spacing = t_final / (config.snapshots - 1) as f64;
    let substeps = (spacing / config.time_step - 1e-9).ceil().max(1.0) as usize;
    let h = spacing / substeps as f64;
    if (h - config.time_step).abs() > 1e-12 * config.time_step {
        log::debug!(
            "time step adjusted from {} to {h} to land on snapshots",
            config.time_step
        );
    }
    let mut stepper = Stepper::new(config.integrator, &sys.linear, h);
    let mut u = u0;
    for k in 1..config.snapshots {
        for _ in 0..substeps {
            stepper.step(sys, &mut u, h);
        }
        record(k, &u)?;
    }
    Ok(())
}

/// Physical values of a spectrum.
pub(crate) fn to_physical(fft: &mut Fourier, hat: &[C], out: &mut [C]) {
    out.copy_from_slice(hat);
    fft.inverse(out);
}

/// Largest modulus, or an error when it exceeds `limit` or is not finite.
pub(crate) fn check_bounded(values: &[C], limit: f64, t: f64) -> Result<f64> {
    let m = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if values.iter().any(|v| !v.is_finite()) || m > limit {
        return Err(Error::Numerical(format!(
            "solution blew up (max |u| = {m:e}) at t = {t}"
        )));
    }
    Ok(m)
}

/// Trigonometric interpolant of a spectrum on `[x0, x0 + L)` at `x`.
pub fn interpolate(hat: &[C], length: f64, x0: f64, x: f64) -> C {
    let n = hat.len();
    let s = 2.0 * PI / length;
    let mut acc = C::default();
    for (j, &c) in hat.iter().enumerate() {
        let m = j as isize;
        let k = if j < n / 2 {
            m
        } else if j == n / 2 {
            // Split the Nyquist mode evenly between ±n/2.
            acc += c * (s * m as f64 * (x - x0)).cos();
            continue;
        } else {
            m - n as isize
        };
        acc += c * C::from_polar(1.0, s * k as f64 * (x - x0));
    }
    acc / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn config_validation() {
        SpectralConfig::nls_desk().validate().unwrap();
        let mut c = SpectralConfig::allen_cahn_desk();
        c.modes = 500;
        assert!(c.validate().is_err());
        c.modes = 512;
        c.time_step = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn linear_decay_is_exact_for_etd() {
        // û_t = −k² û with no nonlinearity: ETDRK4 is exact.
        let cfg = SpectralConfig {
            modes: 16,
            time_step: 0.01,
            integrator: Integrator::Etdrk4,
            length: 2.0 * PI,
            dealias: false,
            snapshots: 2,
        };
        let k = cfg.wavenumbers();
        let lin: Vec<C> = k.iter().map(|&k| C::from(-k * k)).collect();
        let mut sys = Semilinear {
            linear: lin,
            nonlinear: Box::new(|_, out: &mut [C]| out.iter_mut().for_each(|v| *v = C::default())),
        };
        let u0: Vec<C> = (0..16).map(|j| C::new(1.0 / (1 + j) as f64, 0.0)).collect();
        let mut last = vec![];
        integrate(&cfg, &mut sys, u0.clone(), 0.5, |_, u| {
            last = u.to_vec();
            Ok(())
        })
        .unwrap();
        for ((&a, &b), &kk) in last.iter().zip(&u0).zip(&k) {
            assert_relative_eq!(
                a.re,
                b.re * (-kk * kk * 0.5).exp(),
                epsilon = 1e-13,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn rk4_logistic_growth() {
        // Single mode with û_t = û − û² on the mean: logistic equation.
        let cfg = SpectralConfig {
            modes: 4,
            time_step: 1e-3,
            integrator: Integrator::Rk4,
            length: 1.0,
            dealias: false,
            snapshots: 2,
        };
        let mut sys = Semilinear {
            linear: vec![C::from(1.0), C::default(), C::default(), C::default()],
            nonlinear: Box::new(|u: &[C], out: &mut [C]| {
                // the mean value is û_0 / n
                out.iter_mut().for_each(|v| *v = C::default());
                out[0] = -u[0] * u[0] / 4.0;
            }),
        };
        let mut last = C::default();
        integrate(
            &cfg,
            &mut sys,
            vec![C::from(0.4), C::default(), C::default(), C::default()],
            1.0,
            |_, u| {
                last = u[0] / 4.0;
                Ok(())
            },
        )
        .unwrap();
        let exact = 0.1 * 1f64.exp() / (1.0 - 0.1 + 0.1 * 1f64.exp());
        assert_relative_eq!(last.re, exact, max_relative = 1e-12);
    }

    #[test]
    fn interpolation_reproduces_grid_values_and_modes() {
        let n = 8;
        let mut fft = Fourier::new(n);
        let x0 = -1.0;
        let xs: Vec<f64> = (0..n).map(|j| x0 + 2.0 * j as f64 / n as f64).collect();
        let mut v: Vec<C> = xs
            .iter()
            .map(|&x| C::from((PI * x).sin() + 0.3 * (2.0 * PI * x).cos()))
            .collect();
        fft.forward(&mut v);
        for x in [0.123, -0.77, 0.5] {
            let exact = (PI * x).sin() + 0.3 * (2.0 * PI * x).cos();
            assert_relative_eq!(interpolate(&v, 2.0, x0, x).re, exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn mask_keeps_the_lower_two_thirds() {
        let m = dealias_mask(12, true);
        assert_eq!(m, vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(dealias_mask(12, false).iter().all(|&v| v == 1.0));
    }
}
