//! Brute-force reference implementations of the window features, written
//! independently of the library: naive loops, sorting for order statistics and
//! an O(n²) DFT instead of the Goertzel recurrence.

#![allow(dead_code)]

use std::f64::consts::PI;

use har_core::features::{extract, FeatureConfig, SmaMode};
use har_core::{SensorSample, SensorWindow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REL_TOL: f64 = 1e-9;

pub const TIME_NAMES: [&str; 11] = [
    "max", "min", "mean", "median", "std", "range", "skewness", "kurtosis", "iqr", "autocorr", "rms",
];
pub const FREQ_NAMES: [&str; 5] = ["max_freq", "med_freq", "centroid", "entropy", "energy"];

/// Relative comparison with a floor far below any rounding noise of the
/// inputs used here.
pub fn close(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1e-12);
    (a - b).abs() <= REL_TOL * scale
}

fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * q;
    let below = h.floor();
    let i = below as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] * (1.0 - (h - below)) + v[i + 1] * (h - below)
}

/// max, min, mean, median, std, range, skewness, kurtosis, iqr, autocorr, rms.
pub fn time_oracle(x: &[f64], lag: usize) -> [f64; 11] {
    let n = x.len() as f64;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    for &v in x {
        if v > max {
            max = v;
        }
        if v < min {
            min = v;
        }
        sum += v;
    }
    let mean = sum / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let constant = max == min;
    let (skew, kurt, ac) = if constant {
        (0.0, 0.0, 0.0)
    } else {
        let skew = x.iter().map(|v| ((v - mean) / std).powi(3)).sum::<f64>() / n;
        let kurt = x.iter().map(|v| ((v - mean) / std).powi(4)).sum::<f64>() / n;
        let mut cross = 0.0;
        for t in 0..x.len() - lag {
            cross += (x[t] - mean) * (x[t + lag] - mean);
        }
        (skew, kurt, cross / ((x.len() - lag) as f64 * var))
    };
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    [
        max,
        min,
        mean,
        percentile(x, 0.5),
        std,
        max - min,
        skew,
        kurt,
        percentile(x, 0.75) - percentile(x, 0.25),
        ac,
        rms,
    ]
}

/// Magnitudes of the one-sided DFT, bins `0..=n/2`.
pub fn dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let angle = 2.0 * PI * (k * t % n) as f64 / n as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// max_freq, med_freq, centroid, entropy, energy.
pub fn freq_oracle(x: &[f64], rate: f64) -> [f64; 5] {
    let n = x.len();
    let mags = dft_magnitudes(x);
    let freq = |k: usize| k as f64 * rate / n as f64;
    let energy = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let power: Vec<f64> = mags.iter().map(|m| m * m).collect();
    let total_power: f64 = power.iter().sum();
    if total_power == 0.0 {
        return [0.0, 0.0, 0.0, 0.0, energy];
    }
    let mut peak = 0;
    for k in 1..mags.len() {
        if mags[k] > mags[peak] {
            peak = k;
        }
    }
    let mut med = mags.len() - 1;
    for k in 0..mags.len() {
        let below: f64 = power[..=k].iter().sum();
        if below >= total_power / 2.0 {
            med = k;
            break;
        }
    }
    let centroid = (0..mags.len()).map(|k| freq(k) * mags[k]).sum::<f64>() / mags.iter().sum::<f64>();
    let entropy: f64 = power
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| {
            let q = p / total_power;
            -q * q.ln()
        })
        .sum();
    [freq(peak), freq(med), centroid, entropy.max(0.0), energy]
}

pub fn sma_oracle(x: &[f64], y: &[f64], z: &[f64], mode: SmaMode) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        total += match mode {
            SmaMode::Absolute => x[i].abs() + y[i].abs() + z[i].abs(),
            SmaMode::Literal => x[i] + y[i] + z[i],
        };
    }
    total / x.len() as f64
}

/// The 98-value vector in library layout, built from the oracles.
pub fn vector_oracle(w: &SensorWindow, cfg: &FeatureConfig) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (s, sensor) in ["accel", "gyro"].iter().enumerate() {
        let axes: Vec<Vec<f64>> = (0..3)
            .map(|a| w.samples.iter().map(|p| p.channels()[s * 3 + a]).collect())
            .collect();
        for (a, axis) in ["x", "y", "z"].iter().enumerate() {
            for (name, v) in TIME_NAMES.iter().zip(time_oracle(&axes[a], cfg.autocorr_lag)) {
                out.push((format!("{sensor}_{axis}_{name}"), v));
            }
            for (name, v) in FREQ_NAMES.iter().zip(freq_oracle(&axes[a], w.rate_hz)) {
                out.push((format!("{sensor}_{axis}_{name}"), v));
            }
        }
        out.push((format!("{sensor}_sma"), sma_oracle(&axes[0], &axes[1], &axes[2], cfg.sma)));
    }
    out
}

pub fn window_of(samples: Vec<SensorSample>, rate_hz: f64) -> SensorWindow {
    SensorWindow {
        index: 0,
        samples,
        label: None,
        rate_hz,
    }
}

/// Random 40-sample windows of several shapes: wide noise, tones plus noise,
/// small integers (ties in the order statistics) and large offsets.
pub fn random_windows(count: usize, seed: u64) -> Vec<SensorWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let shape = i % 4;
            let freqs: Vec<f64> = (0..6).map(|_| rng.random_range(0.3..9.7)).collect();
            let amps: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..5.0)).collect();
            let offsets: Vec<f64> = (0..6).map(|_| rng.random_range(-20.0..20.0)).collect();
            let samples = (0..40)
                .map(|t| {
                    let mut c = [0.0; 6];
                    for (ch, v) in c.iter_mut().enumerate() {
                        *v = match shape {
                            0 => rng.random_range(-10.0..10.0),
                            1 => {
                                offsets[ch]
                                    + amps[ch] * (2.0 * PI * freqs[ch] * t as f64 / 20.0).sin()
                                    + rng.random_range(-0.2..0.2)
                            }
                            2 => rng.random_range(-3i32..=3) as f64,
                            _ => 1e3 * offsets[ch] + rng.random_range(-1.0..1.0),
                        };
                    }
                    SensorSample::new(t as i64 * 50, [c[0], c[1], c[2]], [c[3], c[4], c[5]], None)
                })
                .collect();
            window_of(samples, 20.0)
        })
        .collect()
}

/// Compares every library feature of `w` to the oracle. Returns the number of
/// values checked or a description of the first mismatch.
pub fn check_window(w: &SensorWindow, cfg: &FeatureConfig) -> Result<usize, String> {
    let got = extract(w, cfg).values;
    let want = vector_oracle(w, cfg);
    if got.len() != want.len() {
        return Err(format!("length {} != {}", got.len(), want.len()));
    }
    for (g, (name, v)) in got.iter().zip(&want) {
        if !close(*g, *v) {
            return Err(format!("{name}: library {g:e} oracle {v:e}"));
        }
    }
    Ok(got.len())
}

/// Runs the oracle comparison on `count` random windows for both SMA modes.
pub fn run_suite(count: usize, seed: u64) -> Result<usize, String> {
    let mut checked = 0;
    for (i, w) in random_windows(count, seed).iter().enumerate() {
        for sma in [SmaMode::Absolute, SmaMode::Literal] {
            let cfg = FeatureConfig { sma, ..FeatureConfig::default() };
            checked += check_window(w, &cfg).map_err(|e| format!("window {i}: {e}"))?;
        }
    }
    Ok(checked)
}

/// Constant and all-zero windows produce the documented substitutions.
pub fn check_degenerate() -> Result<(), String> {
    let cfg = FeatureConfig::default();
    let zero = window_of(
        (0..40).map(|t| SensorSample::new(t * 50, [0.0; 3], [0.0; 3], None)).collect(),
        20.0,
    );
    if extract(&zero, &cfg).values.iter().any(|&v| v != 0.0) {
        return Err("all-zero window must give an all-zero vector".into());
    }
    let constant = window_of(
        (0..40).map(|t| SensorSample::new(t * 50, [5.0, -2.0, 0.5], [1.0, 1.0, -3.0], None)).collect(),
        20.0,
    );
    let v = extract(&constant, &cfg).values;
    for (axis, c) in [5.0f64, -2.0, 0.5, 1.0, 1.0, -3.0].iter().enumerate() {
        let base = (axis / 3) * 49 + (axis % 3) * 16;
        let block = &v[base..base + 16];
        let expect = [
            *c, *c, *c, *c, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, c.abs(), 0.0, 0.0, 0.0, 0.0, c * c,
        ];
        for (k, (g, e)) in block.iter().zip(expect).enumerate() {
            if !close(*g, e) {
                return Err(format!("constant channel {axis} feature {k}: {g} != {e}"));
            }
        }
    }
    Ok(())
}
