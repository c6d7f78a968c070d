use serde::{Deserialize, Serialize};

use super::presets::PresetId;
use crate::error::{Error, Result};

/// A period of human presence in the room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancyEvent {
    pub start: i64,
    pub end: i64,
    pub person_count: u32,
}

/// First-order room CO₂ response to occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OccupancyModel {
    /// Steady excursion per person in a ventilated room, ppm.
    pub kappa_ventilated: f64,
    /// Room time constant when ventilated, hours.
    pub tau_ventilated_h: f64,
    /// Steady excursion per person in an unventilated room, ppm.
    pub kappa_unventilated: f64,
    /// Room time constant when unventilated, hours.
    pub tau_unventilated_h: f64,
}

impl Default for OccupancyModel {
    fn default() -> Self {
        OccupancyModel {
            kappa_ventilated: 20.0,
            tau_ventilated_h: 0.5,
            kappa_unventilated: 80.0,
            tau_unventilated_h: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentProfile {
    /// Ambient CO₂ with an empty room, ppm.
    pub co2_baseline: f64,
    /// Ambient relative humidity, %.
    pub rh_ambient: f64,
    pub ventilated: bool,
    #[serde(default)]
    pub occupancy_events: Vec<OccupancyEvent>,
    #[serde(default)]
    pub preset_id: Option<PresetId>,
    #[serde(default)]
    pub occupancy: OccupancyModel,
}

impl EnvironmentProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.co2_baseline > 0.0) {
            return Err(Error::Input("co2_baseline must be > 0".into()));
        }
        if !(0.0..=100.0).contains(&self.rh_ambient) {
            return Err(Error::Input("rh_ambient must be in [0,100]".into()));
        }
        if self.occupancy_events.iter().any(|e| e.end <= e.start) {
            return Err(Error::Input("occupancy events need end > start".into()));
        }
        Ok(())
    }

    fn room_response(&self) -> (f64, f64) {
        let m = &self.occupancy;
        if self.ventilated {
            (m.kappa_ventilated, m.tau_ventilated_h * 3600.0)
        } else {
            (m.kappa_unventilated, m.tau_unventilated_h * 3600.0)
        }
    }
}

/// Contribution of one event at time `t` for a room with steady gain
/// `amplitude` and time constant `tau` seconds.
fn event_excursion(e: &OccupancyEvent, amplitude: f64, tau: f64, t: f64) -> f64 {
    let (start, end) = (e.start as f64, e.end as f64);
    if t <= start {
        0.0
    } else if t <= end {
        amplitude * (1.0 - (-(t - start) / tau).exp())
    } else {
        amplitude * (1.0 - (-(end - start) / tau).exp()) * (-(t - end) / tau).exp()
    }
}

/// Ambient (co2 ppm, rh %) at absolute time `t` seconds.
pub fn ambient_trace(env: &EnvironmentProfile, t: f64) -> (f64, f64) {
    let (kappa, tau) = env.room_response();
    let excursion: f64 = env
        .occupancy_events
        .iter()
        .map(|e| event_excursion(e, e.person_count as f64 * kappa, tau, t))
        .sum();
    (env.co2_baseline + excursion, env.rh_ambient)
}
