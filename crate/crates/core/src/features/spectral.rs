use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

/// One-sided magnitude spectrum of a real series (bins `0..=n/2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Centre frequency of each bin in Hz, `i * rate / n`.
    pub bin_freqs: Vec<f64>,
    /// Unnormalized DFT magnitudes.
    pub magnitudes: Vec<f64>,
    /// Mean squared time-domain sample, carried for the energy feature.
    pub time_energy: f64,
}

impl Spectrum {
    pub fn n_bins(&self) -> usize {
        self.magnitudes.len()
    }
}

/// Computes the magnitude spectrum with one Goertzel recurrence per bin.
///
/// No taper is applied. Output is deterministic for a given input.
pub fn spectrum(values: &[f64], rate_hz: f64) -> Spectrum {
    let n = values.len();
    if n == 0 {
        return Spectrum {
            bin_freqs: Vec::new(),
            magnitudes: Vec::new(),
            time_energy: 0.0,
        };
    }
    let n_bins = n / 2 + 1;
    // no bin can exceed the L1 norm; residue far below it is recurrence rounding
    let floor = 1e-12 * values.iter().map(|v| libm::fabs(*v)).sum::<f64>();
    let mut bin_freqs = Vec::with_capacity(n_bins);
    let mut magnitudes = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        bin_freqs.push(k as f64 * rate_hz / n as f64);
        let m = goertzel_magnitude(values, k);
        magnitudes.push(if m < floor { 0.0 } else { m });
    }
    let time_energy = values.iter().map(|v| v * v).sum::<f64>() / n as f64;
    Spectrum {
        bin_freqs,
        magnitudes,
        time_energy,
    }
}

fn goertzel_magnitude(values: &[f64], bin: usize) -> f64 {
    let omega = 2.0 * PI * bin as f64 / values.len() as f64;
    let (sin_w, cos_w) = libm::sincos(omega);
    let coeff = 2.0 * cos_w;
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for &x in values {
        let s0 = x + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    let re = s1 - s2 * cos_w;
    let im = s2 * sin_w;
    libm::hypot(re, im)
}

/// Frequency-domain features of one axis series.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FreqFeatures {
    /// Frequency of the largest-magnitude bin (lowest bin on ties).
    pub max_freq: f64,
    /// Lowest frequency at which cumulative power reaches half the total.
    pub med_freq: f64,
    /// Magnitude-weighted mean bin frequency.
    pub spectral_centroid: f64,
    /// Shannon entropy (nats) of the normalized power distribution.
    pub spectral_entropy: f64,
    /// Mean squared time-domain sample.
    pub spectral_energy: f64,
}

impl FreqFeatures {
    pub const COUNT: usize = 5;
    pub const NAMES: [&'static str; Self::COUNT] = [
        "max_freq",
        "med_freq",
        "spectral_centroid",
        "spectral_entropy",
        "spectral_energy",
    ];

    pub fn to_array(&self) -> [f64; Self::COUNT] {
        [
            self.max_freq,
            self.med_freq,
            self.spectral_centroid,
            self.spectral_entropy,
            self.spectral_energy,
        ]
    }
}

/// An all-zero spectrum yields zero for every frequency feature.
pub fn freq_features(spec: &Spectrum) -> FreqFeatures {
    let mags = &spec.magnitudes;
    let total_mag: f64 = mags.iter().sum();
    let total_pow: f64 = mags.iter().map(|m| m * m).sum();
    if mags.is_empty() || total_pow <= 0.0 {
        return FreqFeatures {
            spectral_energy: spec.time_energy,
            ..FreqFeatures::default()
        };
    }

    let mut best = 0;
    for (i, &m) in mags.iter().enumerate() {
        if m > mags[best] {
            best = i;
        }
    }

    let half = total_pow / 2.0;
    let mut cum = 0.0;
    let mut med = mags.len() - 1;
    for (i, &m) in mags.iter().enumerate() {
        cum += m * m;
        if cum >= half {
            med = i;
            break;
        }
    }

    let centroid = spec
        .bin_freqs
        .iter()
        .zip(mags)
        .map(|(k, f)| k * f)
        .sum::<f64>()
        / total_mag;

    let entropy = -mags
        .iter()
        .map(|m| m * m / total_pow)
        .filter(|&p| p > 0.0)
        .map(|p| p * libm::log(p))
        .sum::<f64>();

    FreqFeatures {
        max_freq: spec.bin_freqs[best],
        med_freq: spec.bin_freqs[med],
        spectral_centroid: centroid,
        spectral_entropy: libm::fmax(entropy, 0.0),
        spectral_energy: spec.time_energy,
    }
}
