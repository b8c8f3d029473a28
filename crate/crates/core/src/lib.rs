//! Functional wavelet-kernel prediction of segmented time series.
//!
//! A series is cut into blocks of `P` samples. Each block is decomposed with
//! an interpolating wavelet transform, past blocks are compared with the
//! latest one through a scale-weighted distance between their detail
//! coefficients, and the next block is predicted as a kernel-weighted
//! average of the successors of similar past blocks. Resampling those
//! successors with the same weights yields pointwise prediction intervals.
//!
//! Modules:
//! - [`wavelet`]: padding and the forward/inverse interpolating transform.
//! - [`similarity`]: per-scale and combined distances between pyramids.
//! - [`predictor`]: kernels, the one-step predictor and bandwidth selection.
//! - [`intervals`]: resampling weights, pseudo-blocks and interval bounds.
//! - [`evaluation`]: RMAE, rolling evaluation, baselines and synthetic data.
//! - [`io`]: series files, run configuration and the batch runner.

pub mod error;
pub mod evaluation;
pub mod intervals;
pub mod io;
pub mod predictor;
pub mod similarity;
pub mod wavelet;

pub use error::{Error, Result};
pub use intervals::{
    normalized_weights, prediction_interval, resample_weights, PredictionInterval, QuantileMode,
    ResamplingPlan,
};
pub use predictor::{
    cv_bandwidth, predict_coefficients, predict_one_ahead, KernelFamily, KernelSpec,
    PredictionResult, PredictorConfig, PreparedHistory, WeightScheme,
};
pub use similarity::{combined_distance, scale_distance, ScaleRange, Similarity};
pub use wavelet::{forward_dwt, inverse_dwt, pad_to_pow2, Filter, Segment, WaveletPyramid};
