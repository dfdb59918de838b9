//! Probability mass functions over non-negative integers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`DiscretePdf`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A probability mass function with finite support on `0..=max_support`.
///
/// The mass at value `x` is stored at index `x`. Trailing zeros are trimmed
/// on construction so `max_support` is always the largest value with
/// positive mass (or 0 for the point mass at zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PdfRepr", into = "PdfRepr")]
pub struct DiscretePdf {
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PdfRepr {
    probs: Vec<f64>,
}

impl TryFrom<PdfRepr> for DiscretePdf {
    type Error = Error;

    fn try_from(value: PdfRepr) -> Result<Self> {
        DiscretePdf::new(value.probs)
    }
}

impl From<DiscretePdf> for PdfRepr {
    fn from(value: DiscretePdf) -> Self {
        PdfRepr { probs: value.probs }
    }
}

impl DiscretePdf {
    /// Validates `probs` (non-negative, finite, summing to 1 within
    /// [`MASS_TOLERANCE`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPdf("empty support".into()));
        }
        if let Some((x, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidPdf(format!("mass {p} at {x}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPdf(format!("total mass {total}")));
        }
        Ok(Self::trimmed(probs))
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPdf("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPdf("weights sum to zero".into()));
        }
        Ok(Self::trimmed(
            weights.into_iter().map(|w| w / total).collect(),
        ))
    }

    /// Normalized histogram of integer samples.
    pub fn from_samples<I: IntoIterator<Item = usize>>(samples: I) -> Result<Self> {
        let mut counts: Vec<f64> = Vec::new();
        for x in samples {
            if counts.len() <= x {
                counts.resize(x + 1, 0.0);
            }
            counts[x] += 1.0;
        }
        if counts.is_empty() {
            return Err(Error::InvalidPdf("no samples".into()));
        }
        Self::from_weights(counts)
    }

    pub fn point_mass(value: usize) -> Self {
        let mut probs = vec![0.0; value + 1];
        probs[value] = 1.0;
        Self { probs }
    }

    /// Symmetric triangular law with the given integer mean on
    /// `[1, 2 * mean - 1]`, mass proportional to `mean - |x - mean|`.
    pub fn triangular(mean: usize) -> Result<Self> {
        if mean == 0 {
            return Err(Error::InvalidPdf("triangular mean must be positive".into()));
        }
        let weights = (0..2 * mean)
            .map(|x| {
                if x == 0 {
                    0.0
                } else {
                    (mean as f64 - (x as f64 - mean as f64).abs()).max(0.0)
                }
            })
            .collect();
        Self::from_weights(weights)
    }

    fn trimmed(mut probs: Vec<f64>) -> Self {
        while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs.get(x).copied().unwrap_or(0.0)
    }

    pub fn max_support(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(x, p)| x as f64 * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(x, p)| (x as f64 - mean).powi(2) * p)
            .sum()
    }

    /// `ccdf[j] = P(X >= j)` for `j` in `0..=max_support + 1`.
    pub fn ccdf(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.probs.len() + 1];
        let mut acc = 0.0;
        for x in (0..self.probs.len()).rev() {
            acc += self.probs[x];
            out[x] = acc;
        }
        out
    }

    pub fn prob_at_least(&self, x: usize) -> f64 {
        self.probs.iter().skip(x).sum()
    }

    /// Law of the sum of two independent variables (direct summation).
    pub fn convolve(&self, other: &DiscretePdf) -> DiscretePdf {
        let len = self.probs.len() + other.probs.len() - 1;
        Self::trimmed(convolve_slices(&self.probs, &other.probs, len))
    }

    /// Pushforward through `f`; masses landing on the same value are merged.
    pub fn map_support(&self, f: impl Fn(usize) -> usize) -> DiscretePdf {
        let mut out: Vec<f64> = Vec::new();
        for (x, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let y = f(x);
            if out.len() <= y {
                out.resize(y + 1, 0.0);
            }
            out[y] += p;
        }
        if out.is_empty() {
            out.push(0.0);
        }
        Self::trimmed(out)
    }

    /// Caps the variable at `capacity`: mass at and above `capacity` is
    /// collected on `capacity` itself.
    pub fn truncate(&self, capacity: usize) -> DiscretePdf {
        if capacity >= self.max_support() {
            return self.clone();
        }
        let mut probs = self.probs[..capacity].to_vec();
        probs.push(self.probs[capacity..].iter().sum());
        Self::trimmed(probs)
    }
}

/// Caps the chunk-count law at the cache capacity `capacity` (in chunks).
pub fn truncate_to_cache(x_pdf: &DiscretePdf, capacity: usize) -> DiscretePdf {
    x_pdf.truncate(capacity)
}

/// Direct convolution of two mass vectors, keeping only indices `< len`.
pub(crate) fn convolve_slices(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &pa) in a.iter().enumerate() {
        if pa == 0.0 || i >= len {
            continue;
        }
        for (j, &pb) in b.iter().enumerate().take(len - i) {
            out[i + j] += pa * pb;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mass() {
        assert!(DiscretePdf::new(vec![0.5, 0.4]).is_err());
        assert!(DiscretePdf::new(vec![1.2, -0.2]).is_err());
        assert!(DiscretePdf::new(vec![]).is_err());
        assert!(DiscretePdf::new(vec![0.0, 0.5, 0.5, 0.0]).is_ok());
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let pdf = DiscretePdf::new(vec![0.0, 0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(pdf.max_support(), 2);
    }

    #[test]
    fn triangular_mean_ten() {
        let pdf = DiscretePdf::triangular(10).unwrap();
        assert_eq!(pdf.max_support(), 19);
        assert_eq!(pdf.prob(0), 0.0);
        assert!((pdf.prob(10) - 0.1).abs() < 1e-15);
        assert!((pdf.mean() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_inactive_above_support() {
        let pdf = DiscretePdf::triangular(5).unwrap();
        assert_eq!(pdf.truncate(9), pdf);
        assert_eq!(pdf.truncate(100), pdf);
    }

    #[test]
    fn truncation_to_zero_is_point_mass() {
        let pdf = DiscretePdf::triangular(5).unwrap();
        assert_eq!(pdf.truncate(0), DiscretePdf::point_mass(0));
    }

    #[test]
    fn truncation_collects_tail() {
        // triangular on [0, 20] peaking at 10
        let weights: Vec<f64> = (0..=20).map(|x| 11.0 - (x as f64 - 10.0).abs()).collect();
        let pdf = DiscretePdf::from_weights(weights.clone()).unwrap();
        let total: f64 = weights.iter().sum();
        let tail: f64 = weights[15..].iter().sum::<f64>() / total;
        let capped = truncate_to_cache(&pdf, 15);
        assert_eq!(capped.max_support(), 15);
        assert!((capped.prob(15) - tail).abs() < 1e-15);
        for x in 0..15 {
            assert_eq!(capped.prob(x), pdf.prob(x));
        }
        assert!((capped.total_mass() - 1.0).abs() < 1e-12);
        assert!(capped.mean() <= pdf.mean());
    }

    #[test]
    fn pushforward_merges_mass() {
        let pdf = DiscretePdf::new(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let halved = pdf.map_support(|x| x / 2);
        assert_eq!(halved.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn convolution_of_bernoullis() {
        let b = DiscretePdf::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(b.convolve(&b).probs(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn histogram_from_samples() {
        let pdf = DiscretePdf::from_samples([1, 1, 3, 3]).unwrap();
        assert_eq!(pdf.probs(), &[0.0, 0.5, 0.0, 0.5]);
        assert!(DiscretePdf::from_samples(std::iter::empty()).is_err());
    }
}
