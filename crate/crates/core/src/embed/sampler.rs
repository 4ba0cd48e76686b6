use alloc::vec::Vec;

use rand::Rng;

/// Exponent applied to unigram counts for the negative distribution.
pub const UNIGRAM_POWER: f64 = 0.75;

/// Keep probability for one occurrence of a word with corpus frequency
/// `f = word_freq / total_tokens`: `min(1, sqrt(t/f) + t/f)`.
pub fn subsample_keep_probability(word_freq: u64, total_tokens: u64, threshold: f64) -> f64 {
    if word_freq == 0 || total_tokens == 0 {
        return 1.0;
    }
    let ratio = threshold / (word_freq as f64 / total_tokens as f64);
    (libm::sqrt(ratio) + ratio).min(1.0)
}

/// Draws word indices from `count^0.75 / Z` by inverse-CDF lookup.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = counts
            .iter()
            .map(|&c| {
                acc += libm::pow(c as f64, UNIGRAM_POWER);
                acc
            })
            .collect();
        if acc == 0.0 {
            cumulative = (1..=counts.len()).map(|i| i as f64).collect();
        }
        NegativeSampler { cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn probability(&self, i: usize) -> f64 {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let prev = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        (self.cumulative[i] - prev) / total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("sampler over empty vocabulary");
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }

    /// A draw different from `avoid`, or `None` if every attempt hit it.
    pub fn sample_excluding<R: Rng + ?Sized>(&self, rng: &mut R, avoid: usize) -> Option<usize> {
        (0..16).map(|_| self.sample(rng)).find(|&i| i != avoid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keep_probability_values() {
        assert_eq!(subsample_keep_probability(1, 10_000, 1e-4), 1.0);
        let p = subsample_keep_probability(100, 10_000, 1e-4);
        assert!((p - 0.11).abs() < 1e-12, "{p}");
        let p = subsample_keep_probability(10, 10, 1e-4);
        assert!((p - 0.0101).abs() < 1e-12, "{p}");
    }

    #[test]
    fn probabilities_follow_power_law() {
        let s = NegativeSampler::new(&[16, 1, 0]);
        assert!((s.probability(0) - 8.0 / 9.0).abs() < 1e-12);
        assert!((s.probability(1) - 1.0 / 9.0).abs() < 1e-12);
        assert_eq!(s.probability(2), 0.0);
    }
}
