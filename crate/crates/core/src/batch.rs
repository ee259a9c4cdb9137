//! Blocked evaluation of per-point loss contributions over a point set.
//!
//! Points are cut into fixed-size blocks; each block gets its own jet and
//! its own copy of the loss head, so blocks may run on different threads.
//! Results are reduced in block order, which makes the outcome independent
//! of the number of workers.

use rayon::prelude::*;

use crate::error::Result;
use crate::jet::{Jet, JetSpec};
use crate::network::MlpConfig;
use crate::scalar::Real;

/// Points per block. Even, so that pairs of consecutive points never
/// straddle a block boundary.
pub(crate) const BLOCK: usize = 64;

/// Per-block callback: given the block jet and the index of its first
/// point, push one contribution per point (or per pair) and write
/// `d contribution / d jet` into the adjoint buffer.
pub(crate) trait BlockFn<T, H>: Fn(&mut H, &Jet<T>, usize, &mut [T], &mut Vec<T>) -> Result<()> + Sync {}
impl<T, H, F> BlockFn<T, H> for F where F: Fn(&mut H, &Jet<T>, usize, &mut [T], &mut Vec<T>) -> Result<()> + Sync {}

/// Returns the contributions in point order and, when `want_grad`, the
/// gradient of their plain sum with respect to the parameters.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_blocks<T, H, F>(
    config: &MlpConfig,
    params: &[T],
    spec: &JetSpec,
    points: &[T],
    workers: usize,
    head: &H,
    want_grad: bool,
    f: F,
) -> Result<(Vec<T>, Vec<T>)>
where
    T: Real,
    H: Clone + Send,
    F: BlockFn<T, H>,
{
    let d = config.input_dim;
    let blocks: Vec<(usize, &[T])> = points
        .chunks(BLOCK * d)
        .enumerate()
        .map(|(b, c)| (b * BLOCK, c))
        .collect();
    let work = |(start, pts): (usize, &[T]), mut h: H| -> Result<(Vec<T>, Option<Vec<T>>)> {
        let jet = Jet::forward(config, params, spec, pts)?;
        let mut adj = jet.zeros_like_output();
        let mut contrib = Vec::with_capacity(jet.len());
        f(&mut h, &jet, start, &mut adj, &mut contrib)?;
        let grad = if want_grad {
            let mut g = vec![T::zero(); params.len()];
            jet.backward(config, params, &adj, &mut g)?;
            Some(g)
        } else {
            None
        };
        Ok((contrib, grad))
    };
    let results: Vec<Result<(Vec<T>, Option<Vec<T>>)>> = if workers > 1 && blocks.len() > 1 {
        let heads: Vec<H> = blocks.iter().map(|_| head.clone()).collect();
        blocks.into_par_iter().zip(heads).map(|(b, h)| work(b, h)).collect()
    } else {
        blocks.into_iter().map(|b| work(b, head.clone())).collect()
    };

    let mut contributions = Vec::with_capacity(points.len() / d.max(1));
    let mut grad = vec![T::zero(); if want_grad { params.len() } else { 0 }];
    for r in results {
        let (c, g) = r?;
        contributions.extend(c);
        if let Some(g) = g {
            grad.iter_mut().zip(&g).for_each(|(a, &b)| *a += b);
        }
    }
    Ok((contributions, grad))
}

/// Sequential sum in index order.
pub(crate) fn ordered_sum<T: Real>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, &v| acc + v)
}
