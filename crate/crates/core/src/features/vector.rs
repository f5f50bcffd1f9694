use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use super::{freq_features, spectrum, time_features, FreqFeatures, TimeFeatures, FEATURE_DIM};
use crate::window::{Axis, Sensor, SensorWindow};

/// How the signal magnitude area combines the three axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmaMode {
    /// `(1/n) Σ (|x| + |y| + |z|)`.
    #[default]
    Absolute,
    /// `(1/n) Σ (x + y + z)`, signs kept.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub autocorr_lag: usize,
    pub sma: SmaMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            autocorr_lag: 1,
            sma: SmaMode::Absolute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureError {
    LengthMismatch { x: usize, y: usize, z: usize },
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::LengthMismatch { x, y, z } => {
                write!(f, "axis lengths differ: x={x} y={y} z={z}")
            }
        }
    }
}

impl core::error::Error for FeatureError {}

/// Signal magnitude area of a three-axis window.
pub fn sma(x: &[f64], y: &[f64], z: &[f64], mode: SmaMode) -> Result<f64, FeatureError> {
    if x.len() != y.len() || y.len() != z.len() {
        return Err(FeatureError::LengthMismatch {
            x: x.len(),
            y: y.len(),
            z: z.len(),
        });
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = match mode {
        SmaMode::Absolute => x
            .iter()
            .zip(y)
            .zip(z)
            .map(|((a, b), c)| libm::fabs(*a) + libm::fabs(*b) + libm::fabs(*c))
            .sum(),
        SmaMode::Literal => x.iter().zip(y).zip(z).map(|((a, b), c)| a + b + c).sum(),
    };
    Ok(sum / x.len() as f64)
}

/// 98 feature values of one window plus its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<String>,
    pub window_index: u64,
}

/// Builds the feature vector of a complete window. Pure; the label never
/// influences the values.
pub fn extract(window: &SensorWindow, config: &FeatureConfig) -> FeatureVector {
    let mut values = Vec::with_capacity(FEATURE_DIM);
    for sensor in Sensor::ALL {
        let axes = Axis::ALL.map(|axis| window.axis_view(sensor, axis));
        for series in &axes {
            let t = time_features(&series.values, config.autocorr_lag);
            let f = freq_features(&spectrum(&series.values, window.rate_hz));
            values.extend_from_slice(&t.to_array());
            values.extend_from_slice(&f.to_array());
        }
        // equal lengths by construction
        let area = sma(&axes[0].values, &axes[1].values, &axes[2].values, config.sma).unwrap_or(0.0);
        values.push(area);
    }
    debug_assert_eq!(values.len(), FEATURE_DIM);
    FeatureVector {
        values,
        label: window.label.clone(),
        window_index: window.index,
    }
}

/// Column names in vector order, e.g. `accel_x_max`, `gyro_sma`.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for sensor in ["accel", "gyro"] {
        for axis in ["x", "y", "z"] {
            for f in TimeFeatures::NAMES.iter().chain(FreqFeatures::NAMES.iter()) {
                names.push(format!("{sensor}_{axis}_{f}"));
            }
        }
        names.push(format!("{sensor}_sma"));
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::{SensorSample, WindowAssembler, WindowConfig};
    use alloc::string::ToString;

    fn window_from(f: impl Fn(usize) -> ([f64; 3], [f64; 3])) -> SensorWindow {
        let mut asm = WindowAssembler::new(WindowConfig::default());
        let mut out = None;
        for i in 0..40 {
            let (a, g) = f(i);
            out = asm
                .push(SensorSample::new(i as i64 * 50, a, g, Some("Walking".to_string())))
                .unwrap()
                .window;
        }
        out.unwrap()
    }

    #[test]
    fn sma_variants() {
        let ones = [1.0; 8];
        let neg = [-1.0; 8];
        assert_eq!(sma(&ones, &ones, &ones, SmaMode::Absolute).unwrap(), 3.0);
        assert_eq!(sma(&neg, &neg, &neg, SmaMode::Absolute).unwrap(), 3.0);
        assert_eq!(sma(&neg, &neg, &neg, SmaMode::Literal).unwrap(), -3.0);
        assert_eq!(sma(&[0.0; 4], &[0.0; 4], &[0.0; 4], SmaMode::Absolute).unwrap(), 0.0);
        assert_eq!(
            sma(&ones, &ones[..3], &ones, SmaMode::Absolute),
            Err(FeatureError::LengthMismatch { x: 8, y: 3, z: 8 })
        );
    }

    #[test]
    fn extract_has_98_values_and_label() {
        let w = window_from(|i| {
            let t = i as f64 * 0.05;
            ([libm::sin(t), 0.3 * t, 9.8], [0.1, libm::cos(3.0 * t), -t])
        });
        let v = extract(&w, &FeatureConfig::default());
        assert_eq!(v.values.len(), 98);
        assert_eq!(v.label.as_deref(), Some("Walking"));
        assert!(v.values.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn zero_window_zero_vector() {
        let w = window_from(|_| ([0.0; 3], [0.0; 3]));
        let v = extract(&w, &FeatureConfig::default());
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn swapping_sensors_swaps_halves() {
        let f = |i: usize| {
            let t = i as f64;
            ([t.sin(), (0.7 * t).cos() * 2.0, 9.8 + 0.1 * t], [0.5 * t, -(t * 0.3).sin(), 1.0])
        };
        let w = window_from(f);
        let swapped = window_from(|i| {
            let (a, g) = f(i);
            (g, a)
        });
        let v = extract(&w, &FeatureConfig::default()).values;
        let s = extract(&swapped, &FeatureConfig::default()).values;
        assert_eq!(&v[..49], &s[49..]);
        assert_eq!(&v[49..], &s[..49]);
    }

    #[test]
    fn names_match_layout() {
        let names = feature_names();
        assert_eq!(names.len(), 98);
        assert_eq!(names[0], "accel_x_max");
        assert_eq!(names[15], "accel_x_spectral_energy");
        assert_eq!(names[48], "accel_sma");
        assert_eq!(names[49], "gyro_x_max");
        assert_eq!(names[97], "gyro_sma");
    }
}
