//! Timestamped CO₂ / humidity / temperature channel sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sensor reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    /// CO₂ mole fraction, ppm. May be negative only in corrected series.
    pub co2: f64,
    /// Relative humidity, %.
    pub rh: f64,
    /// Temperature, °C.
    pub temp: f64,
}

/// A run of samples from one pod or ambient sensor.
///
/// Timestamps are strictly increasing. `gap_markers` hold `(start, end)`
/// pairs bounding stretches with no data; values are never interpolated
/// across them. A corrected series (plant minus control) may carry
/// negative CO₂ values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorSeries {
    pub channel_id: String,
    pub samples: Vec<Sample>,
    pub gap_markers: Vec<(i64, i64)>,
    #[serde(default)]
    pub corrected: bool,
}

impl SensorSeries {
    pub fn new(channel_id: impl Into<String>, samples: Vec<Sample>) -> Self {
        SensorSeries {
            channel_id: channel_id.into(),
            samples,
            gap_markers: Vec::new(),
            corrected: false,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.samples.iter().map(|s| s.timestamp).collect()
    }

    pub fn co2(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.co2).collect()
    }

    pub fn rh(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.rh).collect()
    }

    pub fn start(&self) -> Option<i64> {
        self.samples.first().map(|s| s.timestamp)
    }

    pub fn end(&self) -> Option<i64> {
        self.samples.last().map(|s| s.timestamp)
    }

    /// Median spacing between consecutive samples, seconds.
    pub fn nominal_period(&self) -> Option<i64> {
        if self.samples.len() < 2 {
            return None;
        }
        let mut d: Vec<i64> = self.samples.windows(2).map(|w| w[1].timestamp - w[0].timestamp).collect();
        let mid = d.len() / 2;
        Some(*d.select_nth_unstable(mid).1)
    }

    /// Index ranges of the contiguous segments between gap markers.
    pub fn segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..self.samples.len() {
            let (a, b) = (self.samples[i - 1].timestamp, self.samples[i].timestamp);
            if self.gap_markers.iter().any(|&(gs, ge)| gs < b && ge > a) {
                out.push(start..i);
                start = i;
            }
        }
        if start < self.samples.len() {
            out.push(start..self.samples.len());
        }
        out
    }

    /// Checks ordering and physical ranges.
    pub fn validate(&self) -> Result<()> {
        for w in self.samples.windows(2) {
            if w[1].timestamp <= w[0].timestamp {
                return Err(Error::Input(format!(
                    "{}: timestamps not strictly increasing at {}",
                    self.channel_id, w[1].timestamp
                )));
            }
        }
        for s in &self.samples {
            if !s.co2.is_finite() || !s.rh.is_finite() || !s.temp.is_finite() {
                return Err(Error::Input(format!("{}: non-finite value at {}", self.channel_id, s.timestamp)));
            }
            if !self.corrected && s.co2 < 0.0 {
                return Err(Error::Input(format!("{}: negative CO2 at {}", self.channel_id, s.timestamp)));
            }
            if !(0.0..=100.0).contains(&s.rh) {
                return Err(Error::Input(format!("{}: RH out of range at {}", self.channel_id, s.timestamp)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(ts: &[i64]) -> SensorSeries {
        SensorSeries::new(
            "t",
            ts.iter()
                .map(|&t| Sample { timestamp: t, co2: 400.0, rh: 50.0, temp: 20.0 })
                .collect(),
        )
    }

    #[test]
    fn segments_split_at_gaps() {
        let mut s = series(&[0, 60, 120, 3600, 3660]);
        assert_eq!(s.segments(), vec![0..5]);
        s.gap_markers.push((120, 3600));
        assert_eq!(s.segments(), vec![0..3, 3..5]);
    }

    #[test]
    fn validate_rejects_disorder() {
        assert!(series(&[0, 60, 60]).validate().is_err());
        assert!(series(&[0, 60, 120]).validate().is_ok());
        assert_eq!(series(&[0, 60, 120, 300]).nominal_period(), Some(60));
    }
}
