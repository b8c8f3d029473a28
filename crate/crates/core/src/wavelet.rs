//! Interpolating discrete wavelet transform on periodic dyadic grids.
//!
//! The transform follows the interpolating (Deslauriers–Dubuc) construction:
//! the finest scaling coefficients of a segment are its sample values, and
//! each pyramid step keeps the even samples as the coarser scaling
//! coefficients while the odd samples are replaced by their residual against
//! a symmetric polynomial prediction from the neighbouring evens. The step is
//! a single lifting stage, so the inverse is exact up to floating-point
//! rounding whatever filter is plugged in.
//!
//! Boundaries wrap periodically at every level.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear interpolation, 2 taps.
const DD2_TAPS: [f64; 2] = [0.5, 0.5];

/// Deslauriers–Dubuc quintic midpoint rule, 6 taps (exact dyadic rationals).
const DD6_TAPS: [f64; 6] = [
    3.0 / 256.0,
    -25.0 / 256.0,
    75.0 / 128.0,
    75.0 / 128.0,
    -25.0 / 256.0,
    3.0 / 256.0,
];

/// Odd-index autocorrelation of the Symmlet-6 scaling filter. The
/// autocorrelation depends only on |H(ω)|², which Symmlet-6 shares with
/// Daubechies-6, and it coincides with the 12-point Deslauriers–Dubuc rule.
const SYM6_INTERP_TAPS: [f64; 12] = [
    -63.0 / 524288.0,
    847.0 / 524288.0,
    -5445.0 / 524288.0,
    22869.0 / 524288.0,
    -38115.0 / 262144.0,
    160083.0 / 262144.0,
    160083.0 / 262144.0,
    -38115.0 / 262144.0,
    22869.0 / 524288.0,
    -5445.0 / 524288.0,
    847.0 / 524288.0,
    -63.0 / 524288.0,
];

/// Prediction filter used by the interpolating transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Filter {
    /// Linear interpolation (Deslauriers–Dubuc, 2 points).
    #[serde(rename = "dd2")]
    Dd2,
    /// Deslauriers–Dubuc, 6 points.
    #[serde(rename = "dd6")]
    Dd6,
    /// Interpolating filter built from the Symmlet-6 autocorrelation (12 points).
    #[default]
    #[serde(rename = "sym6-interp")]
    Sym6Interp,
}

impl Filter {
    pub const ALL: [Filter; 3] = [Filter::Dd2, Filter::Dd6, Filter::Sym6Interp];

    pub fn id(self) -> &'static str {
        match self {
            Filter::Dd2 => "dd2",
            Filter::Dd6 => "dd6",
            Filter::Sym6Interp => "sym6-interp",
        }
    }

    /// Midpoint prediction weights. Tap `i` multiplies the even sample at
    /// offset `i + 1 - taps.len() / 2` from the odd sample being predicted.
    pub fn taps(self) -> &'static [f64] {
        match self {
            Filter::Dd2 => &DD2_TAPS,
            Filter::Dd6 => &DD6_TAPS,
            Filter::Sym6Interp => &SYM6_INTERP_TAPS,
        }
    }

    /// Degree of the polynomials reproduced exactly by the prediction step.
    pub fn polynomial_degree(self) -> usize {
        self.taps().len() - 1
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Filter::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown filter '{s}' (expected dd2, dd6 or sym6-interp)")))
    }
}

/// One block of equally spaced samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    values: Vec<f64>,
    /// 1-based position of the block in the series.
    pub index: usize,
    /// Sampling step, informational only.
    pub dt: f64,
}

impl Segment {
    /// Builds a segment, rejecting fewer than two samples or non-finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "segment needs at least 2 samples, got {}",
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(Segment {
            values,
            index: 1,
            dt: 1.0,
        })
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "non-finite value {} at position {i}",
            values[i]
        ))),
        None => Ok(()),
    }
}

/// Returns `log2(len)` when `len` is a power of two.
pub fn dyadic_level(len: usize) -> Option<usize> {
    len.is_power_of_two().then(|| len.trailing_zeros() as usize)
}

/// Extends a segment periodically at the right up to the next power of two.
pub fn pad_to_pow2(segment: &Segment) -> Result<Segment> {
    check_finite(segment.values())?;
    let padded = pad_values(segment.values());
    Ok(Segment {
        values: padded,
        index: segment.index,
        dt: segment.dt,
    })
}

pub(crate) fn pad_values(values: &[f64]) -> Vec<f64> {
    let p = values.len();
    let target = p.next_power_of_two();
    let mut out = Vec::with_capacity(target);
    out.extend_from_slice(values);
    out.extend((0..target - p).map(|i| values[i % p]));
    out
}

/// Multiscale decomposition of a dyadic-length segment.
///
/// `details[j - j0]` holds the `2^j` detail coefficients of scale `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletPyramid {
    j0: usize,
    levels: usize,
    coarse: Vec<f64>,
    details: Vec<Vec<f64>>,
    filter: Filter,
}

impl WaveletPyramid {
    /// Assembles a pyramid from parts, checking every coefficient count.
    pub fn from_parts(
        j0: usize,
        levels: usize,
        coarse: Vec<f64>,
        details: Vec<Vec<f64>>,
        filter: Filter,
    ) -> Result<Self> {
        if j0 >= levels {
            return Err(Error::Level { j0, levels });
        }
        if coarse.len() != 1 << j0 {
            return Err(Error::Structure(format!(
                "coarse block has {} coefficients, expected {}",
                coarse.len(),
                1usize << j0
            )));
        }
        if details.len() != levels - j0 {
            return Err(Error::Structure(format!(
                "{} detail scales, expected {}",
                details.len(),
                levels - j0
            )));
        }
        for (offset, d) in details.iter().enumerate() {
            let j = j0 + offset;
            if d.len() != 1 << j {
                return Err(Error::Structure(format!(
                    "scale {j} has {} coefficients, expected {}",
                    d.len(),
                    1usize << j
                )));
            }
        }
        Ok(WaveletPyramid {
            j0,
            levels,
            coarse,
            details,
            filter,
        })
    }

    pub fn j0(&self) -> usize {
        self.j0
    }

    /// Finest level `J`; the pyramid describes `2^J` samples.
    pub fn finest_level(&self) -> usize {
        self.levels
    }

    pub fn filter(&self) -> Filter {
        self.filter
    }

    pub fn coarse(&self) -> &[f64] {
        &self.coarse
    }

    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    /// Detail coefficients at scale `j`, if `j0 <= j < J`.
    pub fn detail(&self, j: usize) -> Option<&[f64]> {
        j.checked_sub(self.j0)
            .and_then(|o| self.details.get(o))
            .map(Vec::as_slice)
    }

    /// Total number of coefficients, always `2^J`.
    pub fn len(&self) -> usize {
        self.coarse.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when both pyramids have the same levels and filter.
    pub fn same_shape(&self, other: &WaveletPyramid) -> bool {
        self.j0 == other.j0 && self.levels == other.levels && self.filter == other.filter
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: f64) -> WaveletPyramid {
        WaveletPyramid {
            j0: self.j0,
            levels: self.levels,
            coarse: self.coarse.iter().map(|v| v * c).collect(),
            details: self
                .details
                .iter()
                .map(|d| d.iter().map(|v| v * c).collect())
                .collect(),
            filter: self.filter,
        }
    }
}

#[inline]
fn predict_odd(evens: &[f64], k: usize, taps: &[f64]) -> f64 {
    let m = evens.len() as isize;
    let back = (taps.len() / 2) as isize - 1;
    taps.iter()
        .enumerate()
        .map(|(i, w)| {
            let idx = (k as isize + i as isize - back).rem_euclid(m);
            w * evens[idx as usize]
        })
        .sum()
}

/// Forward transform of a segment whose length is a power of two.
pub fn forward_dwt(segment: &Segment, j0: usize, filter: Filter) -> Result<WaveletPyramid> {
    forward_dwt_values(segment.values(), j0, filter)
}

/// Forward transform of raw finest-level scaling coefficients.
pub fn forward_dwt_values(values: &[f64], j0: usize, filter: Filter) -> Result<WaveletPyramid> {
    let levels = dyadic_level(values.len()).ok_or(Error::NotPowerOfTwo { len: values.len() })?;
    if j0 >= levels {
        return Err(Error::Level { j0, levels });
    }
    check_finite(values)?;
    let taps = filter.taps();

    let mut current = values.to_vec();
    let mut details = Vec::with_capacity(levels - j0);
    for _ in j0..levels {
        let half = current.len() / 2;
        let evens: Vec<f64> = current.iter().step_by(2).copied().collect();
        let d: Vec<f64> = (0..half)
            .map(|k| current[2 * k + 1] - predict_odd(&evens, k, taps))
            .collect();
        details.push(d);
        current = evens;
    }
    details.reverse();

    Ok(WaveletPyramid {
        j0,
        levels,
        coarse: current,
        details,
        filter,
    })
}

/// Inverse transform back to the `2^J` sample values.
pub fn inverse_dwt(pyramid: &WaveletPyramid) -> Result<Segment> {
    let values = inverse_dwt_values(pyramid)?;
    Segment::new(values)
}

/// Inverse transform returning the raw finest-level scaling coefficients.
pub fn inverse_dwt_values(pyramid: &WaveletPyramid) -> Result<Vec<f64>> {
    // Re-validate: fields are private, but a deserialized pyramid may be malformed.
    let p = WaveletPyramid::from_parts(
        pyramid.j0,
        pyramid.levels,
        pyramid.coarse.clone(),
        pyramid.details.clone(),
        pyramid.filter,
    )?;
    let taps = p.filter.taps();
    let mut current = p.coarse;
    for d in &p.details {
        let mut next = vec![0.0; current.len() * 2];
        for (k, (&even, &detail)) in current.iter().zip(d).enumerate() {
            next[2 * k] = even;
            next[2 * k + 1] = detail + predict_odd(&current, k, taps);
        }
        current = next;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(v: &[f64]) -> Segment {
        Segment::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pad_examples() {
        assert_eq!(pad_to_pow2(&seg(&[1.0, 2.0, 3.0])).unwrap().values(), &[1.0, 2.0, 3.0, 1.0]);
        assert_eq!(pad_to_pow2(&seg(&[4.0, 7.0])).unwrap().values(), &[4.0, 7.0]);

        let twelve: Vec<f64> = (0..12).map(|i| i as f64 * 1.5 - 3.0).collect();
        let padded = pad_to_pow2(&seg(&twelve)).unwrap();
        assert_eq!(padded.len(), 16);
        assert_eq!(&padded.values()[12..], &twelve[..4]);
    }

    #[test]
    fn segment_rejects_bad_input() {
        assert!(matches!(Segment::new(vec![1.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(Segment::new(vec![1.0, f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(Segment::new(vec![f64::INFINITY, 0.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn constant_segment_has_zero_details() {
        for filter in Filter::ALL {
            let p = forward_dwt(&seg(&[5.0; 4]), 0, filter).unwrap();
            assert!(p.details().iter().flatten().all(|&d| d == 0.0), "{filter}");
            assert_eq!(p.coarse(), &[5.0]);
        }
    }

    #[test]
    fn linear_filter_hand_lifting() {
        let p = forward_dwt(&seg(&[0.0, 1.0, 2.0, 3.0]), 1, Filter::Dd2).unwrap();
        assert_eq!(p.detail(1).unwrap(), &[0.0, 2.0]);
        assert_eq!(p.coarse(), &[0.0, 2.0]);
        assert!(p.detail(0).is_none());
    }

    #[test]
    fn coefficient_counts() {
        let x: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64).collect();
        let p = forward_dwt(&seg(&x), 0, Filter::Sym6Interp).unwrap();
        assert_eq!(p.coarse().len(), 1);
        let counts: Vec<usize> = p.details().iter().map(Vec::len).collect();
        assert_eq!(counts, vec![1, 2, 4, 8]);
        assert_eq!(p.len(), 16);
    }

    #[test]
    fn size_and_level_errors() {
        assert!(matches!(
            forward_dwt(&seg(&[1.0, 2.0, 3.0]), 0, Filter::Dd2),
            Err(Error::NotPowerOfTwo { len: 3 })
        ));
        assert!(matches!(
            forward_dwt(&seg(&[1.0, 2.0, 3.0, 4.0]), 2, Filter::Dd2),
            Err(Error::Level { j0: 2, levels: 2 })
        ));
    }

    #[test]
    fn inverse_rejects_inconsistent_counts() {
        assert!(matches!(
            WaveletPyramid::from_parts(0, 2, vec![1.0], vec![vec![0.0], vec![0.0]], Filter::Dd2),
            Err(Error::Structure(_))
        ));
        let bad: WaveletPyramid = serde_json::from_str(
            r#"{"j0":0,"levels":2,"coarse":[1.0],"details":[[0.0],[0.0,0.0,0.0]],"filter":"dd2"}"#,
        )
        .unwrap();
        assert!(matches!(inverse_dwt(&bad), Err(Error::Structure(_))));
    }

    #[test]
    fn zero_pyramid_inverts_to_zero() {
        let p = WaveletPyramid::from_parts(
            1,
            3,
            vec![0.0; 2],
            vec![vec![0.0; 2], vec![0.0; 4]],
            Filter::Dd6,
        )
        .unwrap();
        assert_eq!(inverse_dwt_values(&p).unwrap(), vec![0.0; 8]);
    }

    /// Midpoint Lagrange weights on the nodes `-(N-1)..=N`, computed directly.
    fn lagrange_midpoint(points: usize) -> Vec<f64> {
        let half = points as i64 / 2;
        let nodes: Vec<f64> = (-(half - 1)..=half).map(|x| x as f64).collect();
        nodes
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                nodes
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &xj)| (0.5 - xj) / (xi - xj))
                    .product()
            })
            .collect()
    }

    #[test]
    fn taps_match_lagrange_oracle() {
        for filter in Filter::ALL {
            let taps = filter.taps();
            let oracle = lagrange_midpoint(taps.len());
            for (a, b) in taps.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-15, "{filter}: {a} vs {b}");
            }
            assert!((taps.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sym6_taps_are_symmlet_autocorrelation() {
        // Daubechies-6 scaling filter (same |H| as Symmlet-6), sum = sqrt(2).
        let h = [
            0.11154074335010923,
            0.49462389039845295,
            0.7511339080210979,
            0.31525035170920357,
            -0.22626469396543664,
            -0.12976686756726566,
            0.09750160558731787,
            0.027522865530303853,
            -0.03158203931748617,
            0.0005538422011613627,
            0.004777257510945456,
            -0.001077301085308464,
        ];
        let auto = |lag: usize| -> f64 { (0..h.len() - lag).map(|n| h[n] * h[n + lag]).sum() };
        assert!((auto(0) - 1.0).abs() < 1e-12);
        for lag in (2..12).step_by(2) {
            assert!(auto(lag).abs() < 1e-12, "even lag {lag}");
        }
        let taps = Filter::Sym6Interp.taps();
        for (i, lag) in (1..12).step_by(2).enumerate() {
            assert!((taps[6 + i] - auto(lag)).abs() < 1e-12, "odd lag {lag}");
            assert!((taps[5 - i] - auto(lag)).abs() < 1e-12, "odd lag {lag}");
        }
    }

    #[test]
    fn filters_reproduce_polynomials() {
        // Degree-d polynomials sampled on a long grid give zero finest details
        // away from the periodic seam.
        for filter in Filter::ALL {
            let deg = filter.polynomial_degree() as i32;
            let n = 128usize;
            let x: Vec<f64> = (0..n).map(|i| (i as f64 / n as f64).powi(deg)).collect();
            let p = forward_dwt_values(&x, 6, filter).unwrap();
            let fine = p.detail(6).unwrap();
            let reach = filter.taps().len();
            for (k, d) in fine.iter().enumerate().take(64 - reach).skip(reach) {
                assert!(d.abs() < 1e-9, "{filter} k={k} d={d}");
            }
        }
    }

    #[test]
    fn filter_ids_round_trip() {
        for filter in Filter::ALL {
            assert_eq!(filter.id().parse::<Filter>().unwrap(), filter);
            let json = serde_json::to_string(&filter).unwrap();
            assert_eq!(json, format!("\"{}\"", filter.id()));
        }
        assert!("haar".parse::<Filter>().is_err());
    }
}
