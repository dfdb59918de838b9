use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;

use crate::error::{Error, Result};

/// Zipf content popularity over ranks `1..=n`; content ids equal ranks.
#[derive(Debug, Clone)]
pub struct ZipfWorkload {
    index: WeightedIndex<f64>,
}

impl ZipfWorkload {
    pub fn new(alpha: f64, n_contents: usize) -> Result<Self> {
        if n_contents == 0 {
            return Err(Error::invalid_arg("catalog is empty"));
        }
        let weights = (1..=n_contents).map(|r| (r as f64).powf(-alpha));
        let index = WeightedIndex::new(weights)
            .map_err(|e| Error::invalid_arg(format!("Zipf weights: {e}")))?;
        Ok(Self { index })
    }

    /// Probability of rank `r`.
    pub fn probability(alpha: f64, n_contents: usize, r: usize) -> f64 {
        let norm: f64 = (1..=n_contents).map(|j| (j as f64).powf(-alpha)).sum();
        (r as f64).powf(-alpha) / norm
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.index.sample(rng) as u32 + 1
    }
}

pub fn draw_content_request<R: Rng + ?Sized>(
    alpha: f64,
    n_contents: usize,
    rng: &mut R,
) -> Result<u32> {
    Ok(ZipfWorkload::new(alpha, n_contents)?.draw(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_content() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(draw_content_request(0.75, 1, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn rank_ratio() {
        let ratio = ZipfWorkload::probability(0.75, 10, 1) / ZipfWorkload::probability(0.75, 10, 2);
        assert!((ratio - 2f64.powf(0.75)).abs() < 1e-12);
    }

    #[test]
    fn empirical_frequencies() {
        let w = ZipfWorkload::new(0.75, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[w.draw(&mut rng) as usize - 1] += 1;
        }
        for (r, c) in counts.iter().enumerate() {
            let p = ZipfWorkload::probability(0.75, 10, r + 1);
            assert!((*c as f64 / n as f64 - p).abs() <= 0.005, "rank {}", r + 1);
        }
    }
}
