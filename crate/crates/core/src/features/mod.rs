//! Per-window feature extraction and online normalization.
//!
//! Each window yields 98 values laid out as
//! `[accel x(16), accel y(16), accel z(16), accel SMA, gyro x(16), gyro y(16), gyro z(16), gyro SMA]`,
//! where each block of 16 is the eleven [`TimeFeatures`] followed by the five
//! [`FreqFeatures`], both in declaration order.

mod normalize;
mod spectral;
mod time;
mod vector;

pub use normalize::{OnlineNormalizer, Welford};
pub use spectral::{freq_features, spectrum, FreqFeatures, Spectrum};
pub use time::{time_features, TimeFeatures};
pub use vector::{extract, feature_names, sma, FeatureConfig, FeatureError, FeatureVector, SmaMode};

/// Features computed per axis.
pub const AXIS_FEATURES: usize = TimeFeatures::COUNT + FreqFeatures::COUNT;
/// Features per sensor: three axes plus one SMA value.
pub const SENSOR_FEATURES: usize = 3 * AXIS_FEATURES + 1;
/// Length of every feature vector.
pub const FEATURE_DIM: usize = 2 * SENSOR_FEATURES;
