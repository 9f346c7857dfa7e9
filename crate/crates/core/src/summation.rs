//! Pairwise (cascade) summation. The reduction tree depends only on the
//! number of terms, so results are reproducible bit for bit.

const BLOCK: usize = 32;

/// Sums `term(i)` for `i in 0..len` with a fixed binary tree over blocks.
#[inline]
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, term: &F) -> f64 {
    pairwise_range(0, len, term)
}

fn pairwise_range<F: Fn(usize) -> f64>(start: usize, end: usize, term: &F) -> f64 {
    let len = end - start;
    if len <= BLOCK {
        let mut acc = 0.0;
        for i in start..end {
            acc += term(i);
        }
        return acc;
    }
    let mid = start + len / 2;
    pairwise_range(start, mid, term) + pairwise_range(mid, end, term)
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), &|i| values[i])
}

const LANES: usize = 8;
const RECIP_BLOCK: usize = 256;

/// `Σ_k w[k] / (shift + z[k])` with a fixed reduction tree: halves down to
/// blocks of 256, eight interleaved accumulators inside a block.
pub fn weighted_reciprocal_sum(shift: f64, z: &[f64], w: &[f64]) -> f64 {
    debug_assert_eq!(z.len(), w.len());
    if z.len() <= RECIP_BLOCK {
        return reciprocal_block(shift, z, w);
    }
    let mid = z.len() / 2;
    weighted_reciprocal_sum(shift, &z[..mid], &w[..mid])
        + weighted_reciprocal_sum(shift, &z[mid..], &w[mid..])
}

#[inline]
fn reciprocal_block(shift: f64, z: &[f64], w: &[f64]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let zc = z.chunks_exact(LANES);
    let wc = w.chunks_exact(LANES);
    let (zr, wr) = (zc.remainder(), wc.remainder());
    for (zz, ww) in zc.zip(wc) {
        for k in 0..LANES {
            acc[k] += ww[k] / (shift + zz[k]);
        }
    }
    let mut tail = 0.0;
    for (zz, ww) in zr.iter().zip(wr) {
        tail += ww / (shift + zz);
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_sum_matches_compensated() {
        let z: Vec<f64> = (0..3001).map(|i| (i as f64 * 0.37).sin().abs() * 4.0).collect();
        let w: Vec<f64> = (0..3001).map(|i| 1.0 + (i % 7) as f64).collect();
        let mut exact = CompensatedSum::default();
        for (zz, ww) in z.iter().zip(&w) {
            exact.add(ww / (0.5 + zz));
        }
        let fast = weighted_reciprocal_sum(0.5, &z, &w);
        assert!(((fast - exact.value()) / exact.value()).abs() < 1e-14);
        assert_eq!(weighted_reciprocal_sum(1.0, &[], &[]), 0.0);
    }

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn compensated_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-16).abs() < 1e-30);
    }
}
