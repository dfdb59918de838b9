use serde::{Deserialize, Serialize};

use super::pdf::DiscretePdf;
use crate::error::{Error, Result};

/// Absorbs rounding noise before flooring a real chunk count.
const FLOOR_SLACK: f64 = 1e-9;

/// Radio parameters feeding the dwell-time to chunk-count conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Total EN bandwidth in bit/s.
    pub bandwidth_bps: f64,
    /// Chunk size in bits.
    pub chunk_size_bits: f64,
    /// Average number of cars under each EN, in EN index order.
    pub avg_users: Vec<f64>,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_bps > 0.0 && self.bandwidth_bps.is_finite()) {
            return Err(Error::invalid_arg("bandwidth must be positive"));
        }
        if !(self.chunk_size_bits > 0.0 && self.chunk_size_bits.is_finite()) {
            return Err(Error::invalid_arg("chunk size must be positive"));
        }
        if self.avg_users.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
            return Err(Error::invalid_arg("average user counts must be positive"));
        }
        Ok(())
    }

    /// Sharing factor for EN `en`, floored at one car.
    pub fn users(&self, en: usize) -> f64 {
        self.avg_users.get(en).copied().unwrap_or(1.0).max(1.0)
    }

    /// Chunks a car can fetch at EN `en` while dwelling `dwell_s` seconds.
    pub fn chunks_for_dwell(&self, dwell_s: f64, en: usize) -> usize {
        let x = dwell_s * self.bandwidth_bps / (self.chunk_size_bits * self.users(en));
        (x + FLOOR_SLACK).floor().max(0.0) as usize
    }
}

/// Law of the number of chunks downloadable at EN `en_index`, obtained by
/// pushing the binned dwell-time law through `w -> floor(w b / (s u))`.
///
/// Dwell bin `j` stands for a dwell of `j * bin_width` seconds.
pub fn estimate_chunk_count_dist(
    dwell_pdf: &DiscretePdf,
    bin_width: f64,
    radio: &RadioParams,
    en_index: usize,
) -> Result<DiscretePdf> {
    radio.validate()?;
    if !(bin_width > 0.0) {
        return Err(Error::invalid_arg("bin width must be positive"));
    }
    Ok(dwell_pdf.map_support(|bin| radio.chunks_for_dwell(bin as f64 * bin_width, en_index)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radio(users: f64) -> RadioParams {
        RadioParams {
            bandwidth_bps: 5.2e6,
            chunk_size_bits: 5.2e5,
            avg_users: vec![users],
        }
    }

    #[test]
    fn ten_seconds_is_hundred_chunks() {
        let x =
            estimate_chunk_count_dist(&DiscretePdf::point_mass(10), 1.0, &radio(1.0), 0).unwrap();
        assert_eq!(x, DiscretePdf::point_mass(100));
    }

    #[test]
    fn two_users_halve_the_count() {
        let x =
            estimate_chunk_count_dist(&DiscretePdf::point_mass(10), 1.0, &radio(2.0), 0).unwrap();
        assert_eq!(x, DiscretePdf::point_mass(50));
    }

    #[test]
    fn users_floored_at_one() {
        let x =
            estimate_chunk_count_dist(&DiscretePdf::point_mass(10), 1.0, &radio(0.5), 0).unwrap();
        assert_eq!(x, DiscretePdf::point_mass(100));
    }

    #[test]
    fn fast_slow_mixture_mean() {
        // 80% of cars dwell 1 s (10 chunks), 20% dwell 10 s (100 chunks)
        let mut w = vec![0.0; 11];
        w[1] = 0.8;
        w[10] = 0.2;
        let dwell = DiscretePdf::from_weights(w).unwrap();
        let x = estimate_chunk_count_dist(&dwell, 1.0, &radio(1.0), 0).unwrap();
        assert!((x.prob(10) - 0.8).abs() < 1e-12);
        assert!((x.prob(100) - 0.2).abs() < 1e-12);
        assert!((x.mean() - 28.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_params() {
        let mut r = radio(1.0);
        r.bandwidth_bps = 0.0;
        assert!(estimate_chunk_count_dist(&DiscretePdf::point_mass(1), 1.0, &r, 0).is_err());
        assert!(
            estimate_chunk_count_dist(&DiscretePdf::point_mass(1), 0.0, &radio(1.0), 0).is_err()
        );
    }
}
