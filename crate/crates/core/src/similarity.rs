//! Multiscale discrepancy between two wavelet pyramids.
//!
//! Scale `j` contributes the Euclidean distance between its detail vectors,
//! weighted by `2^-j`, so coarse structure dominates and fine-scale
//! fluctuations are damped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::WaveletPyramid;

/// Inclusive bounds on the detail scales entering the combined distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub lo: usize,
    pub hi: usize,
}

impl ScaleRange {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::Config(format!("scale range {lo}:{hi} is empty")));
        }
        Ok(ScaleRange { lo, hi })
    }

    /// All detail scales `j0..=J-1` of a pyramid.
    pub fn full(pyramid: &WaveletPyramid) -> Self {
        ScaleRange {
            lo: pyramid.j0(),
            hi: pyramid.finest_level() - 1,
        }
    }

    /// Checks `j0 <= lo <= hi <= J-1` for the given pyramid shape.
    pub fn validate_for(&self, pyramid: &WaveletPyramid) -> Result<()> {
        let (j0, top) = (pyramid.j0(), pyramid.finest_level() - 1);
        if self.lo < j0 || self.hi > top || self.lo > self.hi {
            return Err(Error::Config(format!(
                "scale range {}:{} outside available scales {j0}:{top}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Euclidean distance between two detail vectors of the same scale.
pub fn scale_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `Σ_{j=lo}^{hi} 2^-j · d_j(p1, p2)` over detail scales only.
pub fn combined_distance(p1: &WaveletPyramid, p2: &WaveletPyramid, range: ScaleRange) -> Result<f64> {
    Similarity {
        scales: Some(range),
        include_coarse: false,
    }
    .distance(p1, p2)
}

/// Configuration of the multiscale distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Similarity {
    /// Detail scales to compare; `None` means every scale of the pyramid.
    #[serde(default)]
    pub scales: Option<ScaleRange>,
    /// Adds a `2^-j0`-weighted term on the coarse scaling coefficients,
    /// making the distance sensitive to level shifts.
    #[serde(default)]
    pub include_coarse: bool,
}

impl Similarity {
    pub fn distance(&self, p1: &WaveletPyramid, p2: &WaveletPyramid) -> Result<f64> {
        if !p1.same_shape(p2) {
            return Err(Error::Structure(format!(
                "cannot compare pyramids (j0={}, J={}, {}) and (j0={}, J={}, {})",
                p1.j0(),
                p1.finest_level(),
                p1.filter(),
                p2.j0(),
                p2.finest_level(),
                p2.filter()
            )));
        }
        let range = self.scales.unwrap_or_else(|| ScaleRange::full(p1));
        range.validate_for(p1)?;

        let mut total = 0.0;
        if self.include_coarse {
            total += weight(p1.j0()) * scale_distance(p1.coarse(), p2.coarse())?;
        }
        for j in range.lo..=range.hi {
            // Both pyramids have the same shape, so the scale exists in each.
            let (a, b) = (p1.detail(j).unwrap_or(&[]), p2.detail(j).unwrap_or(&[]));
            total += weight(j) * scale_distance(a, b)?;
        }
        Ok(total)
    }
}

fn weight(j: usize) -> f64 {
    (-(j as f64)).exp2()
}
