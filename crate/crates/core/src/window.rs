//! Tumbling-window assembly of raw sensor samples.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

/// One timestamped accelerometer + gyroscope reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    /// Milliseconds since stream start.
    pub t_ms: i64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
    /// Activity name, absent when no feedback is available.
    pub label: Option<String>,
}

impl SensorSample {
    pub fn new(t_ms: i64, accel: [f64; 3], gyro: [f64; 3], label: Option<String>) -> Self {
        Self {
            t_ms,
            ax: accel[0],
            ay: accel[1],
            az: accel[2],
            gx: gyro[0],
            gy: gyro[1],
            gz: gyro[2],
            label,
        }
    }

    pub fn channels(&self) -> [f64; 6] {
        [self.ax, self.ay, self.az, self.gx, self.gy, self.gz]
    }

    pub fn channel(&self, sensor: Sensor, axis: Axis) -> f64 {
        self.channels()[sensor as usize * 3 + axis as usize]
    }

    pub fn is_finite(&self) -> bool {
        self.channels().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sensor {
    Accel = 0,
    Gyro = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Sensor {
    pub const ALL: [Sensor; 2] = [Sensor::Accel, Sensor::Gyro];
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    /// Samples per window.
    pub size: usize,
    pub rate_hz: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            size: 40,
            rate_hz: 20.0,
        }
    }
}

impl WindowConfig {
    /// Window span in milliseconds.
    pub fn span_ms(&self) -> f64 {
        self.size as f64 * 1000.0 / self.rate_hz
    }
}

/// A complete, non-overlapping window of `size` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorWindow {
    pub index: u64,
    pub samples: Vec<SensorSample>,
    /// Modal sample label; ties go to the label seen last.
    pub label: Option<String>,
    pub rate_hz: f64,
}

impl SensorWindow {
    pub fn axis_view(&self, sensor: Sensor, axis: Axis) -> AxisSeries {
        AxisSeries {
            values: self.samples.iter().map(|s| s.channel(sensor, axis)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Ordered values of one channel inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSeries {
    pub values: Vec<f64>,
}

impl AxisSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl core::ops::Index<usize> for AxisSeries {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowError {
    /// A channel was NaN or infinite; the sample was dropped.
    NonFiniteChannel { t_ms: i64 },
}

impl fmt::Display for WindowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowError::NonFiniteChannel { t_ms } => {
                write!(f, "non-finite channel value in sample at t_ms={t_ms}")
            }
        }
    }
}

impl core::error::Error for WindowError {}

/// Reported when a sample's timestamp is earlier than its predecessor's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimestampRegression {
    pub previous_ms: i64,
    pub current_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pushed {
    pub window: Option<SensorWindow>,
    pub regression: Option<TimestampRegression>,
}

/// Single-writer state machine emitting a window every `size` samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowAssembler {
    config: WindowConfig,
    buffer: Vec<SensorSample>,
    next_index: u64,
    last_t_ms: Option<i64>,
}

impl WindowAssembler {
    pub fn new(config: WindowConfig) -> Self {
        assert!(config.size >= 1, "window size must be at least 1");
        Self {
            config,
            buffer: Vec::with_capacity(config.size),
            next_index: 0,
            last_t_ms: None,
        }
    }

    pub fn config(&self) -> WindowConfig {
        self.config
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    pub fn windows_emitted(&self) -> u64 {
        self.next_index
    }

    pub fn push(&mut self, sample: SensorSample) -> Result<Pushed, WindowError> {
        if !sample.is_finite() {
            return Err(WindowError::NonFiniteChannel { t_ms: sample.t_ms });
        }
        let regression = match self.last_t_ms {
            Some(prev) if sample.t_ms < prev => Some(TimestampRegression {
                previous_ms: prev,
                current_ms: sample.t_ms,
            }),
            _ => None,
        };
        self.last_t_ms = Some(sample.t_ms);
        self.buffer.push(sample);
        let window = if self.buffer.len() == self.config.size {
            let samples = core::mem::replace(&mut self.buffer, Vec::with_capacity(self.config.size));
            let label = modal_label(&samples);
            let index = self.next_index;
            self.next_index += 1;
            Some(SensorWindow {
                index,
                samples,
                label,
                rate_hz: self.config.rate_hz,
            })
        } else {
            None
        };
        Ok(Pushed { window, regression })
    }
}

/// Most frequent label; among tied labels the one occurring latest wins.
fn modal_label(samples: &[SensorSample]) -> Option<String> {
    // (label, count, last position)
    let mut tally: Vec<(Option<&str>, usize, usize)> = Vec::new();
    for (pos, s) in samples.iter().enumerate() {
        let key = s.label.as_deref();
        match tally.iter_mut().find(|(l, _, _)| *l == key) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 = pos;
            }
            None => tally.push((key, 1, pos)),
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(a.2.cmp(&b.2)))
        .and_then(|(l, _, _)| l.map(String::from))
}
