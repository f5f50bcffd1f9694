//! Seeded synthetic activity streams standing in for recorded sessions.
//!
//! Each activity is six independent channels of `offset + amplitude·sin(2πft + phase)`
//! plus Gaussian noise. Scripts are ordered `(activity, seconds)` segments.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::window::SensorSample;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelWave {
    pub offset: f64,
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase: f64,
    pub noise_sd: f64,
}

impl ChannelWave {
    pub const fn new(offset: f64, amplitude: f64, freq_hz: f64, phase: f64, noise_sd: f64) -> Self {
        Self {
            offset,
            amplitude,
            freq_hz,
            phase,
            noise_sd,
        }
    }

    fn value(&self, t_s: f64, z: f64) -> f64 {
        self.offset + self.amplitude * libm::sin(2.0 * PI * self.freq_hz * t_s + self.phase) + self.noise_sd * z
    }
}

/// Channel order: ax, ay, az, gx, gy, gz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub name: String,
    pub channels: [ChannelWave; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub activity: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub segments: Vec<Segment>,
    pub rate_hz: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    UnknownActivity(String),
    InvalidProfile { name: String, reason: &'static str },
    InvalidScript(&'static str),
    NotEnoughProfiles { wanted: usize, available: usize },
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::UnknownActivity(a) => write!(f, "script references unknown activity {a:?}"),
            SynthError::InvalidProfile { name, reason } => write!(f, "profile {name:?}: {reason}"),
            SynthError::InvalidScript(r) => write!(f, "invalid script: {r}"),
            SynthError::NotEnoughProfiles { wanted, available } => {
                write!(f, "scenario needs {wanted} activities but only {available} profiles exist")
            }
        }
    }
}

impl core::error::Error for SynthError {}

impl ActivityProfile {
    pub fn validate(&self, rate_hz: f64) -> Result<(), SynthError> {
        let bad = |reason| {
            Err(SynthError::InvalidProfile {
                name: self.name.clone(),
                reason,
            })
        };
        if self.name.is_empty() {
            return bad("name must be non-empty");
        }
        for c in &self.channels {
            if !(c.freq_hz >= 0.0 && c.freq_hz < rate_hz / 2.0) {
                return bad("frequency must lie in [0, rate/2)");
            }
            if !(c.noise_sd >= 0.0) {
                return bad("noise deviation must be non-negative");
            }
            if !(c.offset.is_finite() && c.amplitude.is_finite() && c.phase.is_finite()) {
                return bad("channel parameters must be finite");
            }
        }
        Ok(())
    }
}

impl ScenarioScript {
    pub fn total_seconds(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    fn segment_samples(&self, seg: &Segment) -> usize {
        libm::round(seg.duration_s * self.rate_hz) as usize
    }

    pub fn total_samples(&self) -> usize {
        self.segments.iter().map(|s| self.segment_samples(s)).sum()
    }

    /// Moves every internal segment boundary by a uniform offset in
    /// `[-max_shift_s, max_shift_s]`, keeping the total duration. Used to make
    /// windows straddle activity changes.
    pub fn jittered(&self, max_shift_s: f64, seed: u64) -> ScenarioScript {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut segments = self.segments.clone();
        for i in 0..segments.len().saturating_sub(1) {
            let limit = libm::fmin(max_shift_s, libm::fmin(segments[i].duration_s, segments[i + 1].duration_s) / 2.0);
            let shift = if limit > 0.0 { rng.random_range(-limit..=limit) } else { 0.0 };
            segments[i].duration_s += shift;
            segments[i + 1].duration_s -= shift;
        }
        ScenarioScript {
            segments,
            rate_hz: self.rate_hz,
            seed: self.seed,
        }
    }
}

/// Lazily generated samples of a script.
pub struct SampleStream<'a> {
    profiles: Vec<&'a ActivityProfile>,
    counts: Vec<usize>,
    rate_hz: f64,
    rng: ChaCha8Rng,
    segment: usize,
    in_segment: usize,
    index: u64,
}

impl Iterator for SampleStream<'_> {
    type Item = SensorSample;

    fn next(&mut self) -> Option<SensorSample> {
        while self.segment < self.counts.len() && self.in_segment >= self.counts[self.segment] {
            self.segment += 1;
            self.in_segment = 0;
        }
        if self.segment >= self.counts.len() {
            return None;
        }
        let profile = self.profiles[self.segment];
        let t_s = self.index as f64 / self.rate_hz;
        let mut ch = [0.0; 6];
        for (v, wave) in ch.iter_mut().zip(&profile.channels) {
            let z: f64 = self.rng.sample(StandardNormal);
            *v = wave.value(t_s, z);
        }
        let sample = SensorSample {
            t_ms: libm::round(t_s * 1000.0) as i64,
            ax: ch[0],
            ay: ch[1],
            az: ch[2],
            gx: ch[3],
            gy: ch[4],
            gz: ch[5],
            label: Some(profile.name.clone()),
        };
        self.index += 1;
        self.in_segment += 1;
        Some(sample)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.counts[self.segment.min(self.counts.len())..].iter().sum::<usize>()
            - if self.segment < self.counts.len() { self.in_segment } else { 0 };
        (left, Some(left))
    }
}

/// Validates the script against `profiles` and returns a lazy sample stream.
pub fn stream<'a>(profiles: &'a [ActivityProfile], script: &ScenarioScript) -> Result<SampleStream<'a>, SynthError> {
    if !(script.rate_hz > 0.0) {
        return Err(SynthError::InvalidScript("rate must be positive"));
    }
    let mut chosen = Vec::with_capacity(script.segments.len());
    let mut counts = Vec::with_capacity(script.segments.len());
    for seg in &script.segments {
        if !(seg.duration_s > 0.0) {
            return Err(SynthError::InvalidScript("segment durations must be positive"));
        }
        let p = profiles
            .iter()
            .find(|p| p.name == seg.activity)
            .ok_or_else(|| SynthError::UnknownActivity(seg.activity.clone()))?;
        p.validate(script.rate_hz)?;
        chosen.push(p);
        counts.push(script.segment_samples(seg));
    }
    Ok(SampleStream {
        profiles: chosen,
        counts,
        rate_hz: script.rate_hz,
        rng: ChaCha8Rng::seed_from_u64(script.seed),
        segment: 0,
        in_segment: 0,
        index: 0,
    })
}

pub fn generate(profiles: &[ActivityProfile], script: &ScenarioScript) -> Result<Vec<SensorSample>, SynthError> {
    Ok(stream(profiles, script)?.collect())
}

/// Three rounds over the first `n` profiles: two minutes each, then one
/// minute each, then one minute each, at 20 Hz.
pub fn three_round_scenario(profiles: &[ActivityProfile], n: usize, seed: u64) -> Result<ScenarioScript, SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidScript("at least one activity is required"));
    }
    if profiles.len() < n {
        return Err(SynthError::NotEnoughProfiles {
            wanted: n,
            available: profiles.len(),
        });
    }
    let mut segments = Vec::with_capacity(3 * n);
    for minutes in [2.0, 1.0, 1.0] {
        for p in &profiles[..n] {
            segments.push(Segment {
                activity: p.name.clone(),
                duration_s: minutes * 60.0,
            });
        }
    }
    Ok(ScenarioScript {
        segments,
        rate_hz: 20.0,
        seed,
    })
}

/// Activity names used by the bundled profile sets.
pub const ACTIVITY_NAMES: [&str; 20] = [
    "Walking",
    "Running",
    "Standing Still",
    "Sitting on a Chair",
    "Side Leg Lifts",
    "Boxer Shuffle",
    "Knee Lifts",
    "Cycling using Exercise Bicycle",
    "Forward Lunge",
    "Torso Rotation",
    "Squats",
    "Mountain Climber Twist",
    "Arm Swings",
    "Forearm Rotation",
    "Dumbbell Biceps Curl",
    "Jumping Jack",
    "Chest Expansion",
    "Cross Toe Touch",
    "Straight Punch",
    "Big Arm Circles",
];

/// Five activities with dominant frequencies 2 Hz apart (1, 3, 5, 7, 9 Hz)
/// and distinct amplitudes and offsets.
pub fn well_separated_profiles() -> Vec<ActivityProfile> {
    let names = ["Walking", "Running", "Cycling using Exercise Bicycle", "Squats", "Jumping Jack"];
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let k = i as f64;
            let f = 1.0 + 2.0 * k;
            let amp = 1.0 + 0.75 * k;
            ActivityProfile {
                name: name.to_string(),
                channels: [
                    ChannelWave::new(0.5 * k, amp, f, 0.0, 0.2),
                    ChannelWave::new(-0.3 * k, 0.6 * amp, f, 1.0, 0.2),
                    ChannelWave::new(9.8 - 0.4 * k, 0.4 * amp, f, 2.0, 0.2),
                    ChannelWave::new(0.1 * k, 0.5 + 0.3 * k, f, 0.5, 0.05),
                    ChannelWave::new(-0.1 * k, 0.3 + 0.2 * k, f, 1.5, 0.05),
                    ChannelWave::new(0.05 * k, 0.2 + 0.25 * k, f, 2.5, 0.05),
                ],
            }
        })
        .collect()
}

/// Twenty activities, one per name in [`ACTIVITY_NAMES`], with neighbouring profiles only
/// 0.45 Hz apart and heavier noise.
pub fn catalog_profiles() -> Vec<ActivityProfile> {
    ACTIVITY_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let k = i as f64;
            let f = 0.5 + 0.45 * k;
            let amp = 1.0 + 0.1 * k;
            // forearm activities (the last eight) rotate more
            let gyro = if i >= 12 { 1.5 } else { 0.5 };
            ActivityProfile {
                name: name.to_string(),
                channels: [
                    ChannelWave::new(0.05 * k, amp, f, 0.0, 0.4),
                    ChannelWave::new(-0.05 * k, 0.7 * amp, f, 0.7, 0.4),
                    ChannelWave::new(9.8, 0.3 * amp, 2.0 * f % 9.5, 1.3, 0.4),
                    ChannelWave::new(0.0, gyro, f, 0.2, 0.1),
                    ChannelWave::new(0.0, 0.5 * gyro, f, 0.9, 0.1),
                    ChannelWave::new(0.0, 0.3 * gyro + 0.02 * k, f, 1.8, 0.1),
                ],
            }
        })
        .collect()
}

/// Profiles that are all copies of the first well-separated activity under
/// different names. Learners cannot tell them apart.
pub fn identical_profiles(n: usize) -> Vec<ActivityProfile> {
    let base = well_separated_profiles().remove(0);
    (0..n)
        .map(|i| ActivityProfile {
            name: format!("Activity {}", i + 1),
            ..base.clone()
        })
        .collect()
}
