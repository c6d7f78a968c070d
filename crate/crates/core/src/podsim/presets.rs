use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ambient::{EnvironmentProfile, OccupancyModel};
use super::schedule::LightSchedule;
use crate::error::{Error, Result};

/// The three controlled growth environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetId {
    /// Small room growth chamber, well ventilated.
    Env1,
    /// Large chamber in a meeting room, high plant density.
    Env2,
    /// Intermediate enclosure in a third room.
    Env3,
}

impl PresetId {
    pub const ALL: [PresetId; 3] = [PresetId::Env1, PresetId::Env2, PresetId::Env3];
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetId::Env1 => "env1",
            PresetId::Env2 => "env2",
            PresetId::Env3 => "env3",
        })
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "env1" => Ok(PresetId::Env1),
            "env2" => Ok(PresetId::Env2),
            "env3" => Ok(PresetId::Env3),
            other => Err(Error::Input(format!("unknown environment preset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub environment: EnvironmentProfile,
    pub schedule: LightSchedule,
    /// Midpoint of the in-pod daytime temperature range, °C.
    pub temp_day: f64,
    /// Midpoint of the in-pod night temperature range, °C.
    pub temp_night: f64,
}

/// In-pod light levels and temperature ranges of the three environments,
/// with a 10:00–22:00 photoperiod.
pub fn preset_environment(id: PresetId) -> Preset {
    let (peak_lux, night, day) = match id {
        PresetId::Env1 => (1100.0, (21.0, 22.0), (26.0, 28.0)),
        PresetId::Env2 => (820.0, (18.0, 20.0), (22.0, 25.0)),
        PresetId::Env3 => (850.0, (22.0, 24.0), (24.0, 26.0)),
    };
    Preset {
        environment: EnvironmentProfile {
            co2_baseline: 420.0,
            rh_ambient: 45.0,
            ventilated: true,
            occupancy_events: Vec::new(),
            preset_id: Some(id),
            occupancy: OccupancyModel::default(),
        },
        schedule: LightSchedule::artificial(10.0, 22.0, peak_lux),
        temp_day: (day.0 + day.1) / 2.0,
        temp_night: (night.0 + night.1) / 2.0,
    }
}
