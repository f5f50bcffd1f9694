use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Time-domain statistics of one axis series.
///
/// Standard deviation uses population (1/n) normalization, kurtosis is the raw
/// fourth standardized moment (no excess correction), and autocorrelation is
/// taken at a configurable lag.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeFeatures {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub range: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub iqr: f64,
    pub autocorr: f64,
    pub rms: f64,
}

impl TimeFeatures {
    pub const COUNT: usize = 11;
    pub const NAMES: [&'static str; Self::COUNT] = [
        "max", "min", "mean", "median", "std", "range", "skewness", "kurtosis", "iqr", "autocorr",
        "rms",
    ];

    pub fn to_array(&self) -> [f64; Self::COUNT] {
        [
            self.max,
            self.min,
            self.mean,
            self.median,
            self.std,
            self.range,
            self.skewness,
            self.kurtosis,
            self.iqr,
            self.autocorr,
            self.rms,
        ]
    }
}

/// Computes the eleven time-domain features of `values`.
///
/// When the series has zero spread, skewness, kurtosis and autocorrelation are
/// reported as 0. An empty series yields all zeros.
pub fn time_features(values: &[f64], lag: usize) -> TimeFeatures {
    let n = values.len();
    if n == 0 {
        return TimeFeatures::default();
    }
    let nf = n as f64;
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[n - 1];

    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        sq += v * v;
    }
    let var = m2 / nf;
    let std = libm::sqrt(var);

    let (skewness, kurtosis, autocorr) = if is_degenerate(std, min, max) {
        (0.0, 0.0, 0.0)
    } else {
        let skew = m3 / (nf * std * std * std);
        let kurt = m4 / (nf * var * var);
        let ac = if lag < n {
            let cross: f64 = values
                .iter()
                .zip(&values[lag..])
                .map(|(a, b)| (a - mean) * (b - mean))
                .sum();
            cross / ((n - lag) as f64 * var)
        } else {
            0.0
        };
        (skew, kurt, ac)
    };

    TimeFeatures {
        max,
        min,
        mean,
        median: quantile_sorted(&sorted, 0.5),
        std,
        range: max - min,
        skewness,
        kurtosis,
        iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        autocorr,
        rms: libm::sqrt(sq / nf),
    }
}

/// Spread this small relative to the data's magnitude is rounding noise.
fn is_degenerate(std: f64, min: f64, max: f64) -> bool {
    let scale = libm::fmax(libm::fabs(min), libm::fabs(max));
    std <= 1e-12 * scale || std == 0.0 || min == max
}

/// Linear interpolation between closest ranks over a sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn one_to_four() {
        let f = time_features(&[1.0, 2.0, 3.0, 4.0], 1);
        assert!(close(f.mean, 2.5));
        assert!(close(f.std, 1.25f64.sqrt()));
        assert!(close(f.std, 1.118033988749895));
        assert!(close(f.range, 3.0));
        assert!(close(f.rms, 7.5f64.sqrt()));
        assert!(close(f.median, 2.5));
        // quartiles 1.75 and 3.25
        assert!(close(f.iqr, 1.5));
    }

    #[test]
    fn symmetric_has_zero_skew() {
        let f = time_features(&[1.0, 2.0, 3.0], 1);
        assert!(f.skewness.abs() < 1e-15);
    }

    #[test]
    fn alternating_autocorr_is_minus_one() {
        let s: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let f = time_features(&s, 1);
        assert!(close(f.autocorr, -1.0));
        assert!(close(f.kurtosis, 1.0));
    }

    #[test]
    fn constant_series_substitutes_zero() {
        let f = time_features(&[5.0; 40], 1);
        assert_eq!(f.std, 0.0);
        assert_eq!(f.range, 0.0);
        assert_eq!((f.skewness, f.kurtosis, f.autocorr), (0.0, 0.0, 0.0));
        let g = time_features(&[5.1; 40], 1);
        assert_eq!((g.skewness, g.kurtosis, g.autocorr), (0.0, 0.0, 0.0));
        assert!(!g.skewness.is_nan());
    }

    #[test]
    fn lag_beyond_length_gives_zero() {
        let f = time_features(&[1.0, 3.0], 5);
        assert_eq!(f.autocorr, 0.0);
    }
}
