use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DAY_S: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightMode {
    /// Square wave at `peak_lux` while lights are on.
    Artificial,
    /// Raised-cosine envelope over the photoperiod, so light falls off
    /// before the nominal off time.
    Natural,
}

/// A change of photoperiod taking effect at `timestamp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inversion {
    pub timestamp: i64,
    pub on_time: f64,
    pub off_time: f64,
}

/// Daily light schedule. Hours are UTC hour-of-day of the timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSchedule {
    pub on_time: f64,
    pub off_time: f64,
    pub peak_lux: f64,
    pub mode: LightMode,
    #[serde(default)]
    pub inversion_events: Vec<Inversion>,
}

pub fn hour_of_day(t: f64) -> f64 {
    t.rem_euclid(DAY_S as f64) / 3600.0
}

fn in_window(hod: f64, on: f64, off: f64) -> bool {
    if on < off {
        hod >= on && hod < off
    } else if on > off {
        hod >= on || hod < off
    } else {
        false
    }
}

impl LightSchedule {
    /// Square-wave schedule with no inversions.
    pub fn artificial(on_time: f64, off_time: f64, peak_lux: f64) -> Self {
        LightSchedule {
            on_time,
            off_time,
            peak_lux,
            mode: LightMode::Artificial,
            inversion_events: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let hours = std::iter::once((self.on_time, self.off_time))
            .chain(self.inversion_events.iter().map(|i| (i.on_time, i.off_time)));
        for (on, off) in hours {
            if !(0.0..24.0).contains(&on) || !(0.0..24.0).contains(&off) {
                return Err(Error::Input(format!("on/off times must be in [0,24), got {on}/{off}")));
            }
        }
        if !(self.peak_lux >= 0.0) {
            return Err(Error::Input("peak_lux must be >= 0".into()));
        }
        if self.inversion_events.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::Input("inversion events must be ordered in time".into()));
        }
        Ok(())
    }

    /// The (on, off) pair in force at `t`.
    pub fn active(&self, t: f64) -> (f64, f64) {
        self.inversion_events
            .iter()
            .rev()
            .find(|i| (i.timestamp as f64) <= t)
            .map(|i| (i.on_time, i.off_time))
            .unwrap_or((self.on_time, self.off_time))
    }

    pub fn is_light(&self, t: f64) -> bool {
        let (on, off) = self.active(t);
        in_window(hour_of_day(t), on, off)
    }

    /// Photosynthetically active light at `t`, lux.
    pub fn lux(&self, t: f64) -> f64 {
        let (on, off) = self.active(t);
        let hod = hour_of_day(t);
        if !in_window(hod, on, off) {
            return 0.0;
        }
        match self.mode {
            LightMode::Artificial => self.peak_lux,
            LightMode::Natural => {
                let length = (off - on).rem_euclid(24.0);
                let x = (hod - on).rem_euclid(24.0) / length;
                self.peak_lux * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * x).cos())
            }
        }
    }

    /// Hours elapsed since the most recent lights-on of the active schedule.
    pub fn external_phase(&self, t: f64) -> f64 {
        let (on, _) = self.active(t);
        (hour_of_day(t) - on).rem_euclid(24.0)
    }

    /// Photoperiod length of the base schedule, hours.
    pub fn photoperiod_hours(&self) -> f64 {
        (self.off_time - self.on_time).rem_euclid(24.0)
    }

    /// First light transition (on or off) of the schedule active at `t`,
    /// at or after `t`.
    pub fn next_transition(&self, t: i64) -> i64 {
        let (on, off) = self.active(t as f64);
        let day = t.div_euclid(DAY_S);
        let mut best = i64::MAX;
        for d in [day, day + 1] {
            for h in [on, off] {
                let c = d * DAY_S + (h * 3600.0).round() as i64;
                if c >= t && c < best {
                    best = c;
                }
            }
        }
        best
    }

    /// The same schedule with photoperiod and scotoperiod exchanged.
    pub fn swapped(&self) -> Self {
        LightSchedule {
            on_time: self.off_time,
            off_time: self.on_time,
            inversion_events: self
                .inversion_events
                .iter()
                .map(|i| Inversion {
                    timestamp: i.timestamp,
                    on_time: i.off_time,
                    off_time: i.on_time,
                })
                .collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_wave_and_phase() {
        let s = LightSchedule::artificial(10.0, 22.0, 1100.0);
        assert_eq!(s.lux(9.99 * 3600.0), 0.0);
        assert_eq!(s.lux(10.0 * 3600.0), 1100.0);
        assert_eq!(s.lux(22.0 * 3600.0), 0.0);
        assert_eq!(s.external_phase(13.0 * 3600.0), 3.0);
        assert_eq!(s.external_phase(2.0 * 3600.0), 16.0);
        assert_eq!(s.next_transition(0), 36_000);
        assert_eq!(s.next_transition(36_000), 36_000);
        assert_eq!(s.next_transition(36_001), 22 * 3600);
    }

    #[test]
    fn wrapped_window_and_swap() {
        let s = LightSchedule::artificial(10.0, 22.0, 500.0);
        let w = s.swapped();
        for h in 0..48 {
            let t = h as f64 * 1800.0;
            assert_ne!(s.is_light(t), w.is_light(t));
        }
    }

    #[test]
    fn natural_light_peaks_mid_day() {
        let s = LightSchedule {
            mode: LightMode::Natural,
            ..LightSchedule::artificial(6.0, 18.0, 1000.0)
        };
        assert!((s.lux(12.0 * 3600.0) - 1000.0).abs() < 1e-9);
        assert!(s.lux(17.0 * 3600.0) < 100.0);
    }

    #[test]
    fn inversion_changes_active_window() {
        let mut s = LightSchedule::artificial(10.0, 22.0, 1000.0);
        s.inversion_events.push(Inversion { timestamp: 22 * 3600, on_time: 22.0, off_time: 10.0 });
        assert!(s.is_light(23.0 * 3600.0));
        assert!(s.is_light(30.0 * 3600.0));
        assert!(!s.is_light(35.0 * 3600.0));
        assert_eq!(s.external_phase(22.0 * 3600.0), 0.0);
    }
}
