//! Write-once on-disk cache of generated tableaux keyed by `(q, precision)`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::{gauss_legendre_tableau, ButcherTableau, TableauError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Generated,
}

#[derive(Debug, Clone)]
pub struct TableauCache {
    dir: PathBuf,
}

impl TableauCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, q: usize, precision_bits: u32) -> PathBuf {
        self.dir.join(format!("gauss_legendre_q{q}_p{precision_bits}.txt"))
    }

    /// Cached tableau, if present.
    pub fn load(&self, q: usize, precision_bits: u32) -> Result<Option<ButcherTableau>, TableauError> {
        let path = self.path(q, precision_bits);
        if !path.exists() {
            return Ok(None);
        }
        let t = ButcherTableau::from_text(&fs::read_to_string(&path)?)?;
        if t.q() != q || t.precision_bits() != precision_bits {
            return Err(TableauError::Parse {
                line: 1,
                message: format!(
                    "{} holds q={} precision_bits={}",
                    path.display(),
                    t.q(),
                    t.precision_bits()
                ),
            });
        }
        Ok(Some(t))
    }

    /// Load from the cache or generate and store. Files are written to a
    /// temporary name and renamed into place.
    pub fn get_or_generate(
        &self,
        q: usize,
        precision_bits: u32,
    ) -> Result<(ButcherTableau, CacheStatus), TableauError> {
        if let Some(t) = self.load(q, precision_bits)? {
            log::info!("tableau cache hit: q={q} precision_bits={precision_bits}");
            return Ok((t, CacheStatus::Hit));
        }
        log::info!("generating Gauss-Legendre tableau q={q} precision_bits={precision_bits}");
        let t = gauss_legendre_tableau(q, precision_bits)?;
        fs::create_dir_all(&self.dir)?;
        let path = self.path(q, precision_bits);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, t.to_text())?;
        fs::rename(&tmp, &path)?;
        Ok((t, CacheStatus::Generated))
    }
}
