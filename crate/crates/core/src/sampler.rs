//! Seeded sampling: Latin hypercube collocation points and subsampling of
//! reference data.
//!
//! All randomness comes from [`Rng`] (ChaCha8), whose stream is fixed by
//! its 64-bit seed on every platform.

use rand::{Rng as _, SeedableRng};

use crate::error::{argument, Result};
use crate::scalar::Real;

/// The one random generator used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Seed handed to worker/cell `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index)
}

/// Axis-aligned box `[lower_d, upper_d]` per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Real> BoxDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(argument("box bounds must have the same, nonzero length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(argument("box requires lower < upper in every dimension"));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn contains(&self, p: &[T]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| l <= x && x <= u)
    }
}

/// Latin hypercube sample of `n` points.
///
/// Each axis is cut into `n` equal strata; every stratum receives exactly
/// one point, placed uniformly at random inside it, and the strata are
/// paired across axes by independent random permutations.
pub fn lhs<T: Real>(domain: &BoxDomain<T>, n: usize, rng: &mut Rng) -> Vec<Vec<T>> {
    let mut points = vec![Vec::with_capacity(domain.dim()); n];
    let mut perm: Vec<usize> = (0..n).collect();
    for d in 0..domain.dim() {
        shuffle(&mut perm, rng);
        let (lo, hi) = (domain.lower[d].to_f64_lossy(), domain.upper[d].to_f64_lossy());
        let width = (hi - lo) / n as f64;
        for (p, &stratum) in points.iter_mut().zip(&perm) {
            let jitter: f64 = rng.random();
            let x = lo + (stratum as f64 + jitter) * width;
            p.push(T::lit(x.min(hi)));
        }
    }
    points
}

/// `n` distinct elements drawn uniformly without replacement, in draw order.
pub fn subsample<X: Clone>(dataset: &[X], n: usize, rng: &mut Rng) -> Result<Vec<X>> {
    Ok(subsample_indices(dataset.len(), n, rng)?
        .into_iter()
        .map(|i| dataset[i].clone())
        .collect())
}

/// Indices of a uniform draw of `n` out of `len` without replacement.
pub fn subsample_indices(len: usize, n: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if n > len {
        return Err(argument(format!("cannot draw {n} items from {len}")));
    }
    let mut idx: Vec<usize> = (0..len).collect();
    for i in 0..n {
        let j = rng.random_range(i..len);
        idx.swap(i, j);
    }
    idx.truncate(n);
    Ok(idx)
}

fn shuffle(v: &mut [usize], rng: &mut Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> BoxDomain<f64> {
        BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn single_point_lies_in_box() {
        let d = unit_square();
        let p = lhs(&d, 1, &mut rng(1));
        assert_eq!(p.len(), 1);
        assert!(d.contains(&p[0]));
    }

    #[test]
    fn ten_points_one_per_stratum() {
        let d = BoxDomain::<f64>::new(vec![0.0], vec![1.0]).unwrap();
        let mut xs: Vec<f64> = lhs(&d, 10, &mut rng(2)).into_iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        for (k, x) in xs.iter().enumerate() {
            assert!(*x >= k as f64 / 10.0 && *x < (k + 1) as f64 / 10.0, "{k}: {x}");
        }
    }

    #[test]
    fn histogram_bins_aligned_with_strata_are_exact() {
        let d = BoxDomain::<f64>::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let pts = lhs(&d, 10_000, &mut rng(3));
        for dim in 0..2 {
            let (lo, hi) = (d.lower()[dim], d.upper()[dim]);
            let mut bins = [0usize; 100];
            for p in &pts {
                let b = (((p[dim] - lo) / (hi - lo)) * 100.0).floor() as usize;
                bins[b.min(99)] += 1;
            }
            assert!(bins.iter().all(|&c| c == 100), "dim {dim}: {bins:?}");
        }
    }

    #[test]
    fn subsample_edge_cases() {
        let data: Vec<u32> = (0..20).collect();
        let mut all = subsample(&data, 20, &mut rng(4)).unwrap();
        all.sort();
        assert_eq!(all, data);
        assert!(subsample(&data, 0, &mut rng(4)).unwrap().is_empty());
        assert!(subsample(&data, 21, &mut rng(4)).is_err());
    }

    #[test]
    fn subsample_is_reproducible() {
        let a = subsample_indices(256, 50, &mut rng(5)).unwrap();
        let b = subsample_indices(256, 50, &mut rng(5)).unwrap();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 50);
    }

    #[test]
    fn invalid_boxes_are_rejected() {
        assert!(BoxDomain::<f64>::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoxDomain::<f64>::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn lhs_stratifies_every_axis(n in 1usize..200, seed in any::<u64>()) {
            let d = BoxDomain::<f64>::new(vec![0.0, -5.0, 2.0], vec![1.0, 5.0, 2.5]).unwrap();
            let pts = lhs(&d, n, &mut rng(seed));
            prop_assert_eq!(pts.len(), n);
            for dim in 0..3 {
                let (lo, hi) = (d.lower()[dim], d.upper()[dim]);
                let mut hit = vec![false; n];
                for p in &pts {
                    prop_assert!(d.contains(p));
                    let s = (((p[dim] - lo) / (hi - lo)) * n as f64).floor() as usize;
                    hit[s.min(n - 1)] = true;
                }
                prop_assert!(hit.iter().all(|&h| h));
            }
        }
    }
}
