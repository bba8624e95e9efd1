//! Deterministic compensated summation.
//!
//! Sums are split into fixed blocks of [`BLOCK`] terms; each block is reduced
//! with Neumaier's compensated sum and block totals are merged left to right.
//! The result depends only on the input order, never on the thread count.

use rayon::prelude::*;

pub const BLOCK: usize = 1 << 16;

/// Running Neumaier sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn block_sum(xs: &[f64]) -> f64 {
    let mut acc = Neumaier::default();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

fn merge(blocks: &[f64]) -> f64 {
    block_sum(blocks)
}

/// Sum of `xs`, bit-identical for any thread count.
pub fn sum(xs: &[f64]) -> f64 {
    let blocks: Vec<f64> = xs.par_chunks(BLOCK).map(block_sum).collect();
    merge(&blocks)
}

/// Sequential reference for [`sum`].
pub fn sum_sequential(xs: &[f64]) -> f64 {
    let blocks: Vec<f64> = xs.chunks(BLOCK).map(block_sum).collect();
    merge(&blocks)
}

/// Prefix sums evaluated at the given cut points (exclusive end indices into
/// `xs`, nondecreasing). Each prefix is the merge of whole blocks plus a
/// compensated partial block, so values at different cuts are consistent with
/// [`sum`] of the same prefix.
pub fn prefix_sums_at(xs: &[f64], cuts: &[usize]) -> Vec<f64> {
    let blocks: Vec<f64> = xs.par_chunks(BLOCK).map(block_sum).collect();
    cuts.iter()
        .map(|&c| {
            let c = c.min(xs.len());
            let full = c / BLOCK;
            let mut all: Vec<f64> = blocks[..full].to_vec();
            if c % BLOCK != 0 {
                all.push(block_sum(&xs[full * BLOCK..c]));
            }
            merge(&all)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut xs = vec![1e16, 1.0, -1e16];
        xs.extend(std::iter::repeat(1e-3).take(1000));
        assert!((sum(&xs) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn thread_count_independent() {
        let xs: Vec<f64> = (0..300_000).map(|i| ((i as f64) * 0.37).sin() / (1.0 + i as f64)).collect();
        let seq = sum_sequential(&xs);
        for threads in [1, 2, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let par = pool.install(|| sum(&xs));
            assert_eq!(par.to_bits(), seq.to_bits());
        }
    }

    #[test]
    fn prefixes_agree_with_full_sum() {
        let xs: Vec<f64> = (0..200_000).map(|i| (i as f64).sqrt().cos()).collect();
        let cuts = [0, 1, BLOCK, BLOCK + 17, xs.len()];
        let p = prefix_sums_at(&xs, &cuts);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1], xs[0]);
        assert_eq!(p[4].to_bits(), sum(&xs).to_bits());
        assert_eq!(p[3].to_bits(), sum(&xs[..BLOCK + 17]).to_bits());
    }

    proptest! {
        #[test]
        fn close_to_exact_rational_sum(v in proptest::collection::vec(-1000i32..1000, 0..500)) {
            let xs: Vec<f64> = v.iter().map(|&k| k as f64 / 8.0).collect();
            let exact: i64 = v.iter().map(|&k| k as i64).sum();
            prop_assert_eq!(sum(&xs), exact as f64 / 8.0);
        }
    }
}
