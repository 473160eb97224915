//! Seeded sampling: minibatches, client subsets and output selection.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::point::Point;

/// Uniform `b`-subset of `0..n`, returned sorted ascending.
///
/// Runs the first `b` swaps of a Fisher-Yates shuffle over a virtual
/// identity permutation; only displaced slots are materialised, so the cost
/// is `O(b log b)` regardless of `n`.
pub fn sample_without_replacement<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Result<Vec<usize>> {
    if b == 0 || b > n {
        return Err(Error::invalid(format!("cannot draw {b} of {n} without replacement")));
    }
    if b == n {
        return Ok((0..n).collect());
    }
    let mut displaced: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(b);
    for i in 0..b {
        let j = rng.random_range(i..n);
        let at_j = displaced.get(&j).copied().unwrap_or(j);
        let at_i = displaced.get(&i).copied().unwrap_or(i);
        displaced.insert(j, at_i);
        out.push(at_j);
    }
    out.sort_unstable();
    Ok(out)
}

/// Uniform `s`-subset of client ids `0..n`.
pub fn sample_clients<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<Vec<usize>> {
    sample_without_replacement(n, s, rng)
}

/// Lane reserved for server-side draws (client subsets, output selection).
pub const SERVER_LANE: u64 = u64::MAX;

/// Derives independent, reproducible PRNG streams from one master seed.
///
/// Every random draw is keyed by `(lane, step)`: lane `i` is client `i`
/// (the sequential optimizers use lane 0), `step` is the iteration. Two
/// runs that key their draws identically see identical randomness, which is
/// what lets a one-client federation replay the sequential trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        SeedStream { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn rng(&self, lane: u64, step: u64) -> ChaCha8Rng {
        let mut h = splitmix(self.master);
        h = splitmix(h ^ lane);
        h = splitmix(h ^ step.rotate_left(32));
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Index drawn with probability `eta_k / sum_t eta_t`.
pub fn select_output_index<R: Rng + ?Sized>(etas: &[f64], rng: &mut R) -> Result<usize> {
    if etas.is_empty() {
        return Err(Error::EmptyHistory);
    }
    if etas.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::invalid("stepsizes must be finite and >= 0"));
    }
    let total: f64 = etas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("stepsizes sum to zero"));
    }
    let target = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for (k, eta) in etas.iter().enumerate() {
        cumulative += eta;
        if target < cumulative {
            return Ok(k);
        }
    }
    // rounding can leave target == total
    Ok(etas.iter().rposition(|e| *e > 0.0).unwrap_or(etas.len() - 1))
}

/// Draws the reported output `x^` from the iterate history.
pub fn select_output<'a, R: Rng + ?Sized>(iterates: &'a [Point], etas: &[f64], rng: &mut R) -> Result<&'a Point> {
    if iterates.len() != etas.len() {
        return Err(Error::invalid("iterate and stepsize histories differ in length"));
    }
    select_output_index(etas, rng).map(|k| &iterates[k])
}

/// Streaming form of [`select_output`]: offered iterates are kept with
/// probability `eta_k / (sum of etas offered so far)`, which leaves iterate
/// `k` selected with probability `eta_k / sum_t eta_t` at the end.
#[derive(Debug, Clone, Default)]
pub struct OutputSelector {
    total: f64,
    chosen: Option<(usize, Point)>,
    offered: usize,
}

impl OutputSelector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn offer<R: Rng + ?Sized>(&mut self, eta: f64, x: &Point, rng: &mut R) -> Result<()> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::invalid("stepsizes must be finite and >= 0"));
        }
        self.total += eta;
        if eta > 0.0 && rng.random::<f64>() * self.total < eta {
            self.chosen = Some((self.offered, x.clone()));
        }
        self.offered += 1;
        Ok(())
    }

    /// Index and value of the selected iterate.
    pub fn selected(&self) -> Result<(usize, &Point)> {
        match &self.chosen {
            Some((k, x)) => Ok((*k, x)),
            None if self.offered == 0 => Err(Error::EmptyHistory),
            None => Err(Error::invalid("stepsizes sum to zero")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn full_draw_is_identity() {
        let mut rng = SeedStream::new(1).rng(0, 0);
        assert_eq!(sample_without_replacement(5, 5, &mut rng).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rejects_oversized_draw() {
        let mut rng = SeedStream::new(1).rng(0, 0);
        assert!(sample_without_replacement(3, 4, &mut rng).is_err());
        assert!(sample_without_replacement(3, 0, &mut rng).is_err());
    }

    #[test]
    fn draws_are_sorted_and_distinct() {
        let stream = SeedStream::new(9);
        for step in 0..200 {
            let s = sample_without_replacement(50, 7, &mut stream.rng(0, step)).unwrap();
            assert_eq!(s.len(), 7);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < 50));
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = SeedStream::new(3);
        let draw = |lane, step| sample_without_replacement(1000, 10, &mut a.rng(lane, step)).unwrap();
        assert_eq!(draw(0, 5), draw(0, 5));
        assert_ne!(draw(0, 5), draw(1, 5));
        assert_ne!(draw(0, 5), draw(0, 6));
    }

    #[test]
    fn single_client_always_selected() {
        let mut rng = SeedStream::new(0).rng(SERVER_LANE, 0);
        assert_eq!(sample_clients(1, 1, &mut rng).unwrap(), vec![0]);
    }

    #[test]
    fn single_iterate_always_selected() {
        let xs = vec![Point::new(vec![1.0])];
        let mut rng = SeedStream::new(0).rng(0, 0);
        assert_eq!(select_output(&xs, &[0.3], &mut rng).unwrap(), &xs[0]);
        assert_eq!(select_output(&[], &[], &mut rng), Err(Error::EmptyHistory));
    }

    #[test]
    fn streaming_selector_matches_weights() {
        let stream = SeedStream::new(3);
        let x = Point::zeros(1);
        let mut counts = [0u32; 3];
        for t in 0..30_000 {
            let mut sel = OutputSelector::new();
            let mut rng = stream.rng(0, t);
            for eta in [1.0, 2.0, 1.0] {
                sel.offer(eta, &x, &mut rng).unwrap();
            }
            counts[sel.selected().unwrap().0] += 1;
        }
        for (c, p) in counts.iter().zip([0.25, 0.5, 0.25]) {
            assert!((*c as f64 / 30_000.0 - p).abs() < 0.01);
        }
        assert!(OutputSelector::new().selected().is_err());
    }
}
