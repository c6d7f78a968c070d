//! Compact scenario files built on a preset environment.
//!
//! ```json
//! { "preset": "env1", "plant": "facultative_cam", "duration_days": 12,
//!   "initial_soil_water": 0, "initial_cam_weight": 1, "watering_days": [5] }
//! ```
//!
//! Times are given relative to the start of the run, which is lights-on
//! (10:00) of day 0.

use serde::{Deserialize, Serialize};

use super::ambient::OccupancyEvent;
use super::presets::PresetId;
use super::schedule::Inversion;
use super::{Scenario, Seal};
use crate::error::{Error, Result};
use crate::physiology::{ClockParams, LeafSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    C3,
    ObligateCam,
    FacultativeCam,
    Developmental,
}

/// Room occupancy relative to the run start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancySpec {
    pub start_h: f64,
    pub duration_h: f64,
    pub persons: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTemplate {
    pub preset: PresetId,
    pub plant: PlantKind,
    /// Leaf maturity in [0,1] for `developmental` plants.
    #[serde(default)]
    pub maturity: Option<f64>,
    #[serde(default)]
    pub duration_days: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub seal: Option<Seal>,
    #[serde(default)]
    pub volume_cm3: Option<f64>,
    /// Defaults to true for facultative plants.
    #[serde(default)]
    pub facultative: Option<bool>,
    #[serde(default)]
    pub initial_soil_water: Option<f64>,
    #[serde(default)]
    pub initial_cam_weight: Option<f64>,
    /// Days after the start at which the soil is refilled.
    #[serde(default)]
    pub watering_days: Vec<f64>,
    /// Days after the start at which photoperiod and scotoperiod swap.
    #[serde(default)]
    pub inversion_days: Vec<f64>,
    #[serde(default)]
    pub occupancy: Vec<OccupancySpec>,
    #[serde(default)]
    pub ventilated: Option<bool>,
    /// Sensor noise on/off; on by default.
    #[serde(default)]
    pub noise: Option<bool>,
    #[serde(default)]
    pub initial_pod_co2: Option<f64>,
    /// Hours after the start at which the leaf leaves the pod.
    #[serde(default)]
    pub leaf_removal_h: Option<f64>,
}

fn offset(start: i64, seconds: f64) -> i64 {
    start + seconds.round() as i64
}

impl ScenarioTemplate {
    pub fn new(preset: PresetId, plant: PlantKind) -> Self {
        ScenarioTemplate {
            preset,
            plant,
            maturity: None,
            duration_days: None,
            seed: None,
            seal: None,
            volume_cm3: None,
            facultative: None,
            initial_soil_water: None,
            initial_cam_weight: None,
            watering_days: Vec::new(),
            inversion_days: Vec::new(),
            occupancy: Vec::new(),
            ventilated: None,
            noise: None,
            initial_pod_co2: None,
            leaf_removal_h: None,
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        let (leaf, clock) = match self.plant {
            PlantKind::C3 => (LeafSpec::c3(), ClockParams::c3()),
            PlantKind::ObligateCam => (LeafSpec::obligate_cam(), ClockParams::cam()),
            PlantKind::FacultativeCam => (LeafSpec::facultative_cam(), ClockParams::cam()),
            PlantKind::Developmental => {
                let m = self
                    .maturity
                    .ok_or_else(|| Error::Input("developmental plants need a maturity".into()))?;
                if !(0.0..=1.0).contains(&m) {
                    return Err(Error::Input(format!("maturity must be in [0,1], got {m}")));
                }
                let clock = if m >= 0.5 { ClockParams::cam() } else { ClockParams::c3() };
                (LeafSpec::developmental(m), clock)
            }
        };
        let mut sc = Scenario::preset(self.preset, leaf, clock);
        if let Some(seal) = self.seal {
            sc = sc.with_seal(seal);
        }
        if let Some(v) = self.volume_cm3 {
            for pod in [&mut sc.pod, &mut sc.control_pod] {
                *pod = super::PodConfig::new(v, pod.seal, pod.temp_day, pod.temp_night);
            }
        }
        let start = sc.start_time_s;
        if let Some(d) = self.duration_days {
            sc.duration = d;
        }
        if let Some(seed) = self.seed {
            sc.rng_seed = seed;
        }
        sc.facultative = self.facultative.unwrap_or(self.plant == PlantKind::FacultativeCam);
        if let Some(w) = self.initial_soil_water {
            sc.initial_state.soil_water = w;
        }
        if let Some(w) = self.initial_cam_weight {
            sc.initial_state.cam_weight = w;
        }
        sc.watering_events = self.watering_days.iter().map(|d| offset(start, d * 86_400.0)).collect();
        let (on, off) = (sc.schedule.on_time, sc.schedule.off_time);
        for (k, d) in self.inversion_days.iter().enumerate() {
            let (on_time, off_time) = if k % 2 == 0 { (off, on) } else { (on, off) };
            sc.schedule.inversion_events.push(Inversion { timestamp: offset(start, d * 86_400.0), on_time, off_time });
        }
        sc.environment.occupancy_events = self
            .occupancy
            .iter()
            .map(|o| OccupancyEvent {
                start: offset(start, o.start_h * 3600.0),
                end: offset(start, (o.start_h + o.duration_h) * 3600.0),
                person_count: o.persons,
            })
            .collect();
        if let Some(v) = self.ventilated {
            sc.environment.ventilated = v;
        }
        if self.noise == Some(false) {
            sc.noise_co2_sd = 0.0;
            sc.noise_rh_sd = 0.0;
        }
        sc.initial_pod_co2 = self.initial_pod_co2;
        sc.leaf_removal_s = self.leaf_removal_h.map(|h| offset(start, h * 3600.0));
        sc.validate()?;
        Ok(sc)
    }
}

/// Reads a scenario file in either form: a compact template (has a
/// `preset` key) or a fully specified [`Scenario`]. Syntax errors carry
/// line and column.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let sc = if value.get("preset").is_some() {
        serde_json::from_value::<ScenarioTemplate>(value)?.build()?
    } else {
        serde_json::from_value::<Scenario>(value)?
    };
    sc.validate()?;
    Ok(sc)
}
