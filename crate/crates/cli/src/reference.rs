//! Reference data on disk: generated by the reference solvers on first use
//! and cached under a name derived from the generating configuration.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use pinn_core::ct::BURGERS_VISCOSITY;
use pinn_core::SolutionGrid;
use pinn_refsolve::{allen_cahn_spectral, burgers_grid, burgers_reference_axes, nls_spectral, SpectralConfig};

use crate::config::ProblemKind;
use crate::error::CliError;

/// Final time of the Schrödinger reference.
pub const NLS_FINAL_TIME: f64 = FRAC_PI_2;
/// Final time of the Allen–Cahn reference.
pub const ALLEN_CAHN_FINAL_TIME: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Generated,
}

/// Canonical description of the data a problem's reference run produces.
/// Two runs with the same key produce the same grid.
pub fn reference_key(problem: ProblemKind, spectral: Option<&SpectralConfig>) -> Result<String, CliError> {
    let cfg = || -> Result<String, CliError> {
        let s = spectral.ok_or_else(|| CliError::Config(format!("{problem} needs spectral solver settings")))?;
        serde_json::to_string(s).map_err(|e| CliError::Other(e.to_string()))
    };
    Ok(match problem {
        ProblemKind::BurgersCt | ProblemKind::BurgersDt => {
            format!("burgers cole-hopf nu={BURGERS_VISCOSITY:e} t=0:0.99:100 x=-1:1:256")
        }
        ProblemKind::NlsCt => format!("nls t_final={NLS_FINAL_TIME:e} {}", cfg()?),
        ProblemKind::AllenCahnDt => format!("allen-cahn t_final={ALLEN_CAHN_FINAL_TIME:e} {}", cfg()?),
    })
}

/// 64-bit FNV-1a; stable across platforms and toolchains.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn reference_path(
    dir: &Path,
    problem: ProblemKind,
    spectral: Option<&SpectralConfig>,
) -> Result<PathBuf, CliError> {
    let key = reference_key(problem, spectral)?;
    Ok(dir.join(format!("{}-{:016x}.csv", problem.equation(), fnv1a(&key))))
}

/// Run the reference solver.
pub fn generate(problem: ProblemKind, spectral: Option<&SpectralConfig>) -> Result<SolutionGrid, CliError> {
    let need = || spectral.ok_or_else(|| CliError::Config(format!("{problem} needs spectral solver settings")));
    Ok(match problem {
        ProblemKind::BurgersCt | ProblemKind::BurgersDt => {
            let (t, x) = burgers_reference_axes();
            burgers_grid(&t, &x, BURGERS_VISCOSITY)?
        }
        ProblemKind::NlsCt => nls_spectral(need()?, NLS_FINAL_TIME)?,
        ProblemKind::AllenCahnDt => allen_cahn_spectral(need()?, ALLEN_CAHN_FINAL_TIME)?,
    })
}

/// Load the cached grid or generate and store it.
pub fn load_or_generate(
    dir: &Path,
    problem: ProblemKind,
    spectral: Option<&SpectralConfig>,
) -> Result<(SolutionGrid, PathBuf, CacheStatus), CliError> {
    let path = reference_path(dir, problem, spectral)?;
    if path.exists() {
        log::info!("reference cache hit: {}", path.display());
        let grid = SolutionGrid::read_file(&path)?;
        return Ok((grid, path, CacheStatus::Hit));
    }
    log::info!("generating {} reference data", problem.equation());
    let grid = generate(problem, spectral)?;
    std::fs::create_dir_all(dir)?;
    grid.write_file(&path)?;
    log::info!("wrote {}", path.display());
    Ok((grid, path, CacheStatus::Generated))
}

/// Index of `t` on the time axis of `grid`, if it lies on it.
pub fn time_index(grid: &SolutionGrid, t: f64) -> Result<usize, CliError> {
    grid.t()
        .iter()
        .position(|&ti| (ti - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| {
            let axis = grid.t();
            CliError::Config(format!(
                "time {t} is not on the reference time grid ({} points on [{}, {}])",
                axis.len(),
                axis[0],
                axis[axis.len() - 1]
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_separate_configurations() {
        let a = SpectralConfig::allen_cahn_desk();
        let b = SpectralConfig {
            modes: 256,
            ..a.clone()
        };
        let ka = reference_key(ProblemKind::AllenCahnDt, Some(&a)).unwrap();
        let kb = reference_key(ProblemKind::AllenCahnDt, Some(&b)).unwrap();
        assert_ne!(ka, kb);
        assert_eq!(ka, reference_key(ProblemKind::AllenCahnDt, Some(&a.clone())).unwrap());
        assert_eq!(
            reference_key(ProblemKind::BurgersCt, None).unwrap(),
            reference_key(ProblemKind::BurgersDt, None).unwrap()
        );
        assert!(reference_key(ProblemKind::NlsCt, None).is_err());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
    }
}
