//! Reference simulations of the benchmark problems.

use num_complex::Complex64 as C;

use pinn_core::metrics::SolutionGrid;
use pinn_core::{Error, Result};

use crate::spectral::{
    check_bounded, dealias_mask, integrate, interpolate, to_physical, Fourier, Semilinear, SpectralConfig,
};

const BLOW_UP: f64 = 1e6;

fn grid_axes(config: &SpectralConfig, x0: f64, t_final: f64) -> (Vec<f64>, Vec<f64>) {
    let n = config.modes;
    let dx = config.length / n as f64;
    let x = (0..n).map(|j| x0 + j as f64 * dx).collect();
    let m = config.snapshots - 1;
    let t = (0..=m).map(|k| t_final * k as f64 / m as f64).collect();
    (t, x)
}

/// `i h_t + 0.5 h_xx + |h|² h = 0` on `[−L/2, L/2)` from `h(0, x) = 2 sech x`.
/// Components `u = Re h`, `v = Im h` and `h_abs = |h|`.
pub fn nls_spectral(config: &SpectralConfig, t_final: f64) -> Result<SolutionGrid<f64>> {
    config.validate()?;
    let n = config.modes;
    let (t, x) = grid_axes(config, -config.length / 2.0, t_final);
    let h0: Vec<C> = x.iter().map(|&x| C::from(2.0 / x.cosh())).collect();

    let k = config.wavenumbers();
    let mask = dealias_mask(n, config.dealias);
    let linear = k.iter().map(|&k| C::new(0.0, -0.5 * k * k)).collect();
    let mut fft = Fourier::new(n);
    let mut phys = vec![C::default(); n];
    let nonlinear = Box::new(move |hat: &[C], out: &mut [C]| {
        to_physical(&mut fft, hat, &mut phys);
        for (o, &h) in out.iter_mut().zip(&phys) {
            *o = C::i() * h * h.norm_sqr();
        }
        fft.forward(out);
        out.iter_mut().zip(&mask).for_each(|(o, &m)| *o *= m);
    });
    let mut sys = Semilinear { linear, nonlinear };

    let mut rows: Vec<Vec<C>> = vec![h0.clone()];
    let mut hat = h0.clone();
    let mut fft = Fourier::new(n);
    fft.forward(&mut hat);
    integrate(config, &mut sys, hat, t_final, |k, spec| {
        let mut v = vec![C::default(); n];
        to_physical(&mut fft, spec, &mut v);
        check_bounded(&v, BLOW_UP, t[k])?;
        rows.push(v);
        Ok(())
    })?;

    let mut grid = SolutionGrid::new(t, x)?;
    let flat = |f: fn(&C) -> f64| rows.iter().flat_map(|r| r.iter().map(f)).collect::<Vec<f64>>();
    grid.push("u", flat(|h| h.re), None)?;
    grid.push("v", flat(|h| h.im), None)?;
    grid.push("h_abs", flat(|h| h.norm()), None)?;
    Ok(grid)
}

/// `∫|h|² dx` at row `i` of a Schrödinger grid by the periodic trapezoid rule.
pub fn nls_mass(grid: &SolutionGrid<f64>, i: usize) -> Result<f64> {
    let u = grid
        .row("u", i)
        .ok_or_else(|| Error::Argument("grid has no u component".into()))?;
    let v = grid
        .row("v", i)
        .ok_or_else(|| Error::Argument("grid has no v component".into()))?;
    let x = grid.x();
    if x.len() < 2 {
        return Err(Error::Argument("grid too small".into()));
    }
    let dx = x[1] - x[0];
    Ok(u.iter().zip(v).map(|(a, b)| a * a + b * b).sum::<f64>() * dx)
}

/// `u_t − 0.0001 u_xx + 5u³ − 5u = 0` on `[−1, 1)` from `u(0, x) = x² cos(πx)`.
pub fn allen_cahn_spectral(config: &SpectralConfig, t_final: f64) -> Result<SolutionGrid<f64>> {
    config.validate()?;
    let n = config.modes;
    let (t, x) = grid_axes(config, -config.length / 2.0, t_final);
    let u0: Vec<f64> = x.iter().map(|&x| x * x * (std::f64::consts::PI * x).cos()).collect();

    let k = config.wavenumbers();
    let mask = dealias_mask(n, config.dealias);
    let linear = k.iter().map(|&k| C::from(5.0 - 1e-4 * k * k)).collect();
    let mut fft = Fourier::new(n);
    let mut phys = vec![C::default(); n];
    let nonlinear = Box::new(move |hat: &[C], out: &mut [C]| {
        to_physical(&mut fft, hat, &mut phys);
        for (o, &u) in out.iter_mut().zip(&phys) {
            *o = C::from(-5.0 * u.re * u.re * u.re);
        }
        fft.forward(out);
        out.iter_mut().zip(&mask).for_each(|(o, &m)| *o *= m);
    });
    let mut sys = Semilinear { linear, nonlinear };

    let mut values = u0.clone();
    let mut hat: Vec<C> = u0.iter().map(|&v| C::from(v)).collect();
    let mut fft = Fourier::new(n);
    fft.forward(&mut hat);
    integrate(config, &mut sys, hat, t_final, |k, spec| {
        let mut v = vec![C::default(); n];
        to_physical(&mut fft, spec, &mut v);
        check_bounded(&v, BLOW_UP, t[k])?;
        values.extend(v.iter().map(|c| c.re));
        Ok(())
    })?;
    let mut grid = SolutionGrid::new(t, x)?;
    grid.push("u", values, None)?;
    Ok(grid)
}

/// Viscous Burgers `u_t + u u_x = ν u_xx` with period 2 from `−sin(πx)`,
/// sampled at arbitrary `(t, x)`. The odd periodic solution vanishes at
/// `x = ±1`, so it coincides with the Dirichlet problem on `[−1, 1]`;
/// used to cross-check the Cole–Hopf evaluation.
pub fn burgers_periodic_spectral(config: &SpectralConfig, nu: f64, t: &[f64], x: &[f64]) -> Result<SolutionGrid<f64>> {
    config.validate()?;
    let n = config.modes;
    let x0 = -config.length / 2.0;
    let dx = config.length / n as f64;
    let mut grid = SolutionGrid::new(t.to_vec(), x.to_vec())?;
    if t[0] < 0.0 {
        return Err(Error::Argument("negative time".into()));
    }

    let k = config.wavenumbers();
    let mask = dealias_mask(n, config.dealias);
    let linear = k.iter().map(|&k| C::from(-nu * k * k)).collect();
    let kk = k.clone();
    let mut fft = Fourier::new(n);
    let mut phys = vec![C::default(); n];
    let mut sys = Semilinear {
        linear,
        nonlinear: Box::new(move |hat: &[C], out: &mut [C]| {
            to_physical(&mut fft, hat, &mut phys);
            for (o, &u) in out.iter_mut().zip(&phys) {
                *o = C::from(u.re * u.re);
            }
            fft.forward(out);
            // −½ (u²)_x, with the Nyquist derivative set to zero
            for (j, (o, &k)) in out.iter_mut().zip(&kk).enumerate() {
                let d = if j == n / 2 { 0.0 } else { k };
                *o *= C::new(0.0, -0.5 * d) * mask[j];
            }
        }),
    };

    let mut hat: Vec<C> = (0..n)
        .map(|j| C::from(-(std::f64::consts::PI * (x0 + j as f64 * dx)).sin()))
        .collect();
    let mut fft = Fourier::new(n);
    fft.forward(&mut hat);
    let segment = SpectralConfig {
        snapshots: 2,
        ..config.clone()
    };
    let mut values = Vec::with_capacity(t.len() * x.len());
    let mut now = 0.0;
    for &ti in t {
        if ti < now {
            return Err(Error::Argument("time axis must be ascending".into()));
        }
        if ti > now {
            let mut next = None;
            integrate(&segment, &mut sys, hat.clone(), ti - now, |_, u| {
                next = Some(u.to_vec());
                Ok(())
            })?;
            hat = next.expect("one snapshot");
            check_bounded(&hat, BLOW_UP * n as f64, ti)?;
            now = ti;
        }
        for &xj in x {
            values.push(interpolate(&hat, config.length, x0, xj).re);
        }
    }
    grid.push("u", values, None)?;
    Ok(grid)
}
