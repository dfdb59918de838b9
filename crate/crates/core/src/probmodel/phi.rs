//! Per-EN chunk download probabilities.
//!
//! For a car crossing ENs `1..=N` in order, `phi(i, k)` is the probability
//! that chunk `k` is delivered while the car is under EN `i`, i.e.
//! `P(Y_{i-1} < k <= Y_i)` where `Y_i` is the number of chunks received after
//! leaving EN `i` and the per-EN chunk counts `X_i = Y_i - Y_{i-1}` are
//! independent.
//!
//! EN indices are 0-based in this API; chunk indices run from 1 to `K`.

use serde::Serialize;

use super::pdf::{convolve_slices, DiscretePdf};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PhiMatrix {
    n_ens: usize,
    n_chunks: usize,
    /// Row-major `n_ens x n_chunks`; column `k - 1` holds chunk `k`.
    phi: Vec<f64>,
    per_en_mean: Vec<f64>,
}

/// JSON layout of a [`PhiMatrix`] dump.
#[derive(Serialize)]
struct PhiDump<'a> {
    n_ens: usize,
    n_chunks: usize,
    phi: &'a [f64],
}

impl PhiMatrix {
    pub(crate) fn from_parts(
        n_ens: usize,
        n_chunks: usize,
        phi: Vec<f64>,
        per_en_mean: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(phi.len(), n_ens * n_chunks);
        Self {
            n_ens,
            n_chunks,
            phi,
            per_en_mean,
        }
    }

    pub fn n_ens(&self) -> usize {
        self.n_ens
    }

    pub fn n_chunks(&self) -> usize {
        self.n_chunks
    }

    /// Probability that chunk `k` (1-based) is delivered at EN `en`.
    pub fn get(&self, en: usize, k: usize) -> f64 {
        if k == 0 || k > self.n_chunks || en >= self.n_ens {
            return 0.0;
        }
        self.phi[en * self.n_chunks + k - 1]
    }

    /// Row of EN `en`; index `k - 1` holds chunk `k`.
    pub fn row(&self, en: usize) -> &[f64] {
        &self.phi[en * self.n_chunks..(en + 1) * self.n_chunks]
    }

    /// Mean chunk count `E[X_i]` of the law each row was built from.
    pub fn per_en_mean(&self) -> &[f64] {
        &self.per_en_mean
    }

    /// Probability that chunk `k` is delivered at any EN of the matrix.
    pub fn column_sum(&self, k: usize) -> f64 {
        (0..self.n_ens).map(|i| self.get(i, k)).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phi
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PhiDump {
            n_ens: self.n_ens,
            n_chunks: self.n_chunks,
            phi: &self.phi,
        })?)
    }
}

/// Download probabilities for independent, arbitrarily distributed chunk
/// counts (one law per EN, in path order).
pub fn phi_general(x_pdfs: &[DiscretePdf], n_chunks: usize) -> Result<PhiMatrix> {
    phi_general_from(&DiscretePdf::point_mass(0), x_pdfs, n_chunks)
}

/// Same as [`phi_general`] but with `Y_0` drawn from `initial` rather than
/// fixed at zero.
pub fn phi_general_from(
    initial: &DiscretePdf,
    x_pdfs: &[DiscretePdf],
    n_chunks: usize,
) -> Result<PhiMatrix> {
    if x_pdfs.is_empty() {
        return Err(Error::invalid_arg("at least one EN is required"));
    }
    if n_chunks == 0 {
        return Err(Error::invalid_arg("at least one chunk is required"));
    }
    let k_max = n_chunks;
    let mut phi = vec![0.0; x_pdfs.len() * k_max];
    // Only Y values below K influence chunks 1..=K.
    let mut y: Vec<f64> = initial.probs().iter().copied().take(k_max).collect();
    for (i, x) in x_pdfs.iter().enumerate() {
        let ccdf = x.ccdf();
        let row = &mut phi[i * k_max..(i + 1) * k_max];
        for (n, &py) in y.iter().enumerate() {
            if py == 0.0 {
                continue;
            }
            // chunks k = n + j with 1 <= j <= max_support(X_i)
            let j_max = (x.max_support()).min(k_max - n);
            for j in 1..=j_max {
                row[n + j - 1] += py * ccdf[j];
            }
        }
        y = convolve_slices(&y, x.probs(), k_max);
    }
    Ok(PhiMatrix::from_parts(
        x_pdfs.len(),
        k_max,
        phi,
        x_pdfs.iter().map(DiscretePdf::mean).collect(),
    ))
}

/// Download probabilities when every EN shares the chunk-count law `f_x`,
/// built by the recursion `phi_i = f_x * phi_{i-1}`.
pub fn phi_iid(f_x: &DiscretePdf, n_ens: usize, n_chunks: usize) -> Result<PhiMatrix> {
    if n_ens == 0 {
        return Err(Error::invalid_arg("at least one EN is required"));
    }
    if n_chunks == 0 {
        return Err(Error::invalid_arg("at least one chunk is required"));
    }
    let k_max = n_chunks;
    let mut phi = vec![0.0; n_ens * k_max];
    let ccdf = f_x.ccdf();
    for k in 1..=k_max {
        phi[k - 1] = ccdf.get(k).copied().unwrap_or(0.0);
    }
    for i in 1..n_ens {
        let (prev_rows, rest) = phi.split_at_mut(i * k_max);
        let prev = &prev_rows[(i - 1) * k_max..];
        let row = &mut rest[..k_max];
        for k in 1..=k_max {
            let mut acc = 0.0;
            for t in 0..k.min(f_x.max_support() + 1) {
                let p = f_x.prob(t);
                if p != 0.0 {
                    acc += p * prev[k - t - 1];
                }
            }
            row[k - 1] = acc;
        }
    }
    Ok(PhiMatrix::from_parts(
        n_ens,
        k_max,
        phi,
        vec![f_x.mean(); n_ens],
    ))
}

/// Re-indexes the chunk axis for a car that already holds `delivered`
/// chunks: chunk `delivered + j` inherits the probability of chunk `j`.
pub fn shift_phi(phi: &PhiMatrix, delivered: usize) -> Result<PhiMatrix> {
    if delivered >= phi.n_chunks {
        return Err(Error::invalid_arg(format!(
            "delivered count {delivered} is not below the chunk count {}",
            phi.n_chunks
        )));
    }
    if delivered == 0 {
        return Ok(phi.clone());
    }
    let k_max = phi.n_chunks;
    let mut out = vec![0.0; phi.phi.len()];
    for i in 0..phi.n_ens {
        let src = phi.row(i);
        let dst = &mut out[i * k_max..(i + 1) * k_max];
        dst[delivered..].copy_from_slice(&src[..k_max - delivered]);
    }
    Ok(PhiMatrix::from_parts(
        phi.n_ens,
        k_max,
        out,
        phi.per_en_mean.clone(),
    ))
}
