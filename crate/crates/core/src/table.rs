//! Per-component gradient memory `y_i` with an incrementally maintained mean.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Result};
use crate::point::Point;

/// Stores `y_1 .. y_n` (all zero initially) and `ybar = (1/n) sum_i y_i`.
///
/// Replacing one entry costs `O(d)`: the mean moves by `(new - old) / n`.
/// Rounding drift is cleared by an exact recomputation once every `n`
/// replacements, which keeps the amortised cost per replacement at `O(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTable {
    dim: usize,
    entries: Vec<f64>,
    mean: Point,
    since_sync: usize,
    resync_every: Option<usize>,
}

impl GradientTable {
    pub fn new(n: usize, dim: usize) -> Self {
        GradientTable {
            dim,
            entries: vec![0.0; n * dim],
            mean: Point::zeros(dim),
            since_sync: 0,
            resync_every: Some(n.max(1)),
        }
    }

    /// Overrides the resync period; `None` disables it.
    pub fn with_resync_every(mut self, every: Option<usize>) -> Self {
        self.resync_every = every.map(|e| e.max(1));
        self
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.entries.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entry_point(&self, i: usize) -> Point {
        Point::from(self.entry(i))
    }

    pub fn mean(&self) -> &Point {
        &self.mean
    }

    /// Sets `y_i = value`; returns the change of the mean, `(value - old)/n`.
    pub fn replace(&mut self, i: usize, value: &Point) -> Result<Point> {
        check_dim(self.dim, value.dim())?;
        let inv_n = 1.0 / self.len() as f64;
        let mut delta = Point::zeros(self.dim);
        let slot = &mut self.entries[i * self.dim..(i + 1) * self.dim];
        for ((old, new), dm) in slot.iter_mut().zip(value.as_slice()).zip(delta.as_mut_slice()) {
            *dm = (new - *old) * inv_n;
            *old = *new;
        }
        self.since_sync += 1;
        if self.resync_every.is_some_and(|every| self.since_sync >= every) {
            let before = self.mean.clone();
            self.resync();
            delta = self.mean.sub(&before);
        } else {
            self.mean.add_assign(&delta);
        }
        Ok(delta)
    }

    /// Exact `(1/n) sum_i y_i`, `O(n d)`.
    pub fn recomputed_mean(&self) -> Point {
        let mut acc = Point::zeros(self.dim);
        for i in 0..self.len() {
            for (a, v) in acc.as_mut_slice().iter_mut().zip(self.entry(i)) {
                *a += v;
            }
        }
        acc.scale(1.0 / self.len() as f64);
        acc
    }

    pub fn resync(&mut self) {
        self.mean = self.recomputed_mean();
        self.since_sync = 0;
    }

    /// `||ybar - exact mean|| / (1 + ||exact mean||)`.
    pub fn mean_drift(&self) -> f64 {
        let exact = self.recomputed_mean();
        libm::sqrt(self.mean.dist_sq(&exact)) / (1.0 + exact.norm())
    }

    /// Overwrites every entry (and resyncs), for building analysis snapshots.
    pub fn set_all(&mut self, values: &[Point]) -> Result<()> {
        check_dim(self.len(), values.len())?;
        for (i, v) in values.iter().enumerate() {
            check_dim(self.dim, v.dim())?;
            self.entries[i * self.dim..(i + 1) * self.dim].copy_from_slice(v.as_slice());
        }
        self.resync();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn starts_at_zero() {
        let t = GradientTable::new(3, 2);
        assert_eq!(t.mean(), &Point::zeros(2));
        assert_eq!(t.entry(2), &[0.0, 0.0]);
    }

    #[test]
    fn replace_moves_mean_by_delta() {
        let mut t = GradientTable::new(4, 1).with_resync_every(None);
        let d = t.replace(1, &Point::new(vec![2.0])).unwrap();
        assert_eq!(d.as_slice(), &[0.5]);
        assert_eq!(t.mean().as_slice(), &[0.5]);
        t.replace(1, &Point::new(vec![-2.0])).unwrap();
        assert_eq!(t.mean().as_slice(), &[-0.5]);
    }

    #[test]
    fn long_run_drift_stays_small_without_resync() {
        let mut t = GradientTable::new(37, 3).with_resync_every(None);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let i = rng.random_range(0..37);
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-100.0..100.0)).collect();
            t.replace(i, &Point::new(v)).unwrap();
        }
        assert!(t.mean_drift() <= 1e-8, "drift {}", t.mean_drift());
    }

    proptest! {
        #[test]
        fn running_mean_tracks_exact_mean(
            ops in proptest::collection::vec((0usize..6, -1e3f64..1e3, -1e3f64..1e3), 1..200)
        ) {
            let mut t = GradientTable::new(6, 2);
            for (i, a, b) in ops {
                t.replace(i, &Point::new(vec![a, b])).unwrap();
                prop_assert!(t.mean_drift() <= 1e-10);
            }
        }
    }
}
