//! Well-mixed mass balance of the semi-sealed leaf pod.
//!
//! Each pod exchanges air with the room through a leak conductance `g`
//! (cm³ s⁻¹). For a pod of volume `V` holding `n_air` moles of air,
//!
//! ```text
//! dC/dt  = (g/V)·(C_amb − C) − F_net / n_air          [ppm s⁻¹]
//! dRH/dt = (g/V)·(RH_amb − RH) + E·β(T) / V           [% s⁻¹]
//! ```
//!
//! with `F_net` the leaf's net uptake (µmol s⁻¹), `E` its transpiration
//! (mmol s⁻¹) and `β(T)` the %RH raised by one mmol of vapour per cm³.
//! A plant pod, an empty control pod and the ambient sensor are integrated
//! side by side with RK4 and sampled every 60 s.

mod ambient;
mod presets;
mod schedule;
mod template;

pub use ambient::{ambient_trace, EnvironmentProfile, OccupancyEvent, OccupancyModel};
pub use presets::{preset_environment, Preset, PresetId};
pub use schedule::{hour_of_day, Inversion, LightMode, LightSchedule};
pub use template::{load_scenario, OccupancySpec, PlantKind, ScenarioTemplate};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physiology::{
    net_co2_flux, step_acid_pool, step_clock, step_stress_and_weight, stomatal_openness, transpiration_flux,
    ClockParams, LeafSpec, PathwayState, ResponseParams, StressParams,
};
use crate::series::{Sample, SensorSeries};

/// Standard atmosphere, Pa.
pub const PRESSURE_PA: f64 = 101_325.0;
/// Molar gas constant, J mol⁻¹ K⁻¹.
pub const R_GAS: f64 = 8.314_462_618;
/// Output sampling period, seconds.
pub const SAMPLE_PERIOD_S: i64 = 60;
/// Upper bound on the integration step, seconds.
pub const MAX_DT_S: f64 = 60.0;
/// Default leak of a tied-bag seal on a 700 cm³ pod, cm³ s⁻¹.
pub const TIED_LEAK: f64 = 0.05;
/// Default leak of a parafilm seal, cm³ s⁻¹.
pub const PARAFILM_LEAK: f64 = 0.01;
/// Peak-to-mean amplitude of the daytime ventilation temperature ripple, °C.
const RIPPLE_C: f64 = 0.5;
const RIPPLE_PERIOD_S: f64 = 1800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seal {
    Tied,
    Parafilm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodConfig {
    /// cm³
    pub volume: f64,
    /// Volumetric air exchange with the room, cm³ s⁻¹.
    pub leak_conductance: f64,
    pub seal: Seal,
    pub temp_day: f64,
    pub temp_night: f64,
}

impl PodConfig {
    pub fn new(volume: f64, seal: Seal, temp_day: f64, temp_night: f64) -> Self {
        let leak_conductance = match seal {
            Seal::Tied => TIED_LEAK,
            Seal::Parafilm => PARAFILM_LEAK,
        };
        PodConfig {
            volume,
            leak_conductance,
            seal,
            temp_day,
            temp_night,
        }
    }

    /// Exchange rate g/V, s⁻¹.
    pub fn exchange_rate(&self) -> f64 {
        self.leak_conductance / self.volume
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume > 0.0) {
            return Err(Error::Input("pod volume must be > 0".into()));
        }
        if !(self.leak_conductance >= 0.0) {
            return Err(Error::Input("leak_conductance must be >= 0".into()));
        }
        if self.seal == Seal::Parafilm && self.leak_conductance > TIED_LEAK {
            return Err(Error::Input("a parafilm seal cannot leak more than the tied-seal default".into()));
        }
        Ok(())
    }

    /// Air temperature in the pod at `t`: square day/night profile with a
    /// small ventilation ripple while the lights are on.
    pub fn temperature(&self, schedule: &LightSchedule, t: f64) -> f64 {
        if schedule.is_light(t) {
            self.temp_day + RIPPLE_C * (2.0 * std::f64::consts::PI * t / RIPPLE_PERIOD_S).sin()
        } else {
            self.temp_night
        }
    }

    /// Moles of air in the pod at `temp_c`.
    pub fn air_moles(&self, temp_c: f64) -> f64 {
        air_moles(self.volume, temp_c)
    }
}

pub fn air_moles(volume_cm3: f64, temp_c: f64) -> f64 {
    PRESSURE_PA * volume_cm3 * 1e-6 / (R_GAS * (temp_c + 273.15))
}

/// Saturation vapour pressure over water (Magnus), Pa.
pub fn saturation_vapor_pressure(temp_c: f64) -> f64 {
    610.94 * (17.625 * temp_c / (temp_c + 243.04)).exp()
}

/// %RH·cm³ produced by one mmol of water vapour at `temp_c`.
pub fn humidity_gain(temp_c: f64) -> f64 {
    let c_sat_mol_per_cm3 = saturation_vapor_pressure(temp_c) / (R_GAS * (temp_c + 273.15)) * 1e-6;
    100.0 * 1e-3 / c_sat_mol_per_cm3
}

fn default_start() -> i64 {
    // 10:00 UTC on day 0, i.e. lights-on under the presets
    36_000
}

/// Everything needed for one deterministic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub pod: PodConfig,
    pub control_pod: PodConfig,
    pub leaf: LeafSpec,
    pub initial_state: PathwayState,
    pub clock: ClockParams,
    pub schedule: LightSchedule,
    pub environment: EnvironmentProfile,
    /// days
    pub duration: f64,
    /// Integration step, seconds. Must divide the 60 s sampling period.
    pub dt: f64,
    #[serde(default)]
    pub watering_events: Vec<i64>,
    #[serde(default)]
    pub facultative: bool,
    #[serde(default)]
    pub rng_seed: u64,
    pub noise_co2_sd: f64,
    pub noise_rh_sd: f64,
    /// Epoch seconds of the first sample.
    #[serde(default = "default_start")]
    pub start_time_s: i64,
    #[serde(default)]
    pub response: ResponseParams,
    #[serde(default)]
    pub stress: StressParams,
    /// Initial plant-pod CO₂ (e.g. after an injection); defaults to ambient.
    #[serde(default)]
    pub initial_pod_co2: Option<f64>,
    /// Epoch seconds at which the leaf is taken out of the plant pod.
    #[serde(default)]
    pub leaf_removal_s: Option<i64>,
}

impl Scenario {
    /// A 7-day run in a preset environment with a 700 cm³ tied-seal pod,
    /// starting at lights-on with the clock entrained.
    pub fn preset(id: PresetId, leaf: LeafSpec, clock: ClockParams) -> Self {
        let p = preset_environment(id);
        let pod = PodConfig::new(700.0, Seal::Tied, p.temp_day, p.temp_night);
        let start = default_start();
        let initial_state = PathwayState::new(leaf.cam_weight_base, p.schedule.external_phase(start as f64));
        Scenario {
            control_pod: pod.clone(),
            pod,
            leaf,
            initial_state,
            clock,
            schedule: p.schedule,
            environment: p.environment,
            duration: 7.0,
            dt: 60.0,
            watering_events: Vec::new(),
            facultative: false,
            rng_seed: 0,
            noise_co2_sd: 5.0,
            noise_rh_sd: 1.0,
            start_time_s: start,
            response: ResponseParams::default(),
            stress: StressParams::default(),
            initial_pod_co2: None,
            leaf_removal_s: None,
        }
    }

    /// Replaces both pods with `seal`, keeping volume and temperatures.
    pub fn with_seal(mut self, seal: Seal) -> Self {
        for pod in [&mut self.pod, &mut self.control_pod] {
            *pod = PodConfig::new(pod.volume, seal, pod.temp_day, pod.temp_night);
        }
        self
    }

    pub fn end_time_s(&self) -> i64 {
        self.start_time_s + self.sample_count() as i64 * SAMPLE_PERIOD_S
    }

    fn sample_count(&self) -> usize {
        (self.duration * 86_400.0 / SAMPLE_PERIOD_S as f64).round() as usize
    }

    /// Checks every invariant. Malformed values are input errors; a step
    /// that breaks the stability bound is a configuration error.
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::Input("duration must be > 0 days".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Input("dt must be > 0 s".into()));
        }
        if self.noise_co2_sd < 0.0 || self.noise_rh_sd < 0.0 {
            return Err(Error::Input("noise standard deviations must be >= 0".into()));
        }
        self.pod.validate()?;
        self.control_pod.validate()?;
        self.leaf.validate()?;
        self.initial_state.validate(&self.leaf)?;
        self.clock.validate()?;
        self.schedule.validate()?;
        self.environment.validate()?;
        if self.sample_count() == 0 {
            return Err(Error::Input("duration shorter than one sample period".into()));
        }
        if self.dt > MAX_DT_S {
            return Err(Error::Config(format!("dt = {} s exceeds the {MAX_DT_S} s bound", self.dt)));
        }
        for pod in [&self.pod, &self.control_pod] {
            if pod.leak_conductance > 0.0 && self.dt >= pod.volume / pod.leak_conductance {
                return Err(Error::Config(format!(
                    "dt = {} s is not below the pod time constant {} s",
                    self.dt,
                    pod.volume / pod.leak_conductance
                )));
            }
        }
        let per_sample = SAMPLE_PERIOD_S as f64 / self.dt;
        if (per_sample - per_sample.round()).abs() > 1e-9 {
            return Err(Error::Config(format!("dt = {} s must divide the 60 s sample period", self.dt)));
        }
        Ok(())
    }
}

/// One row of the pathway-state trace, recorded at every output sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub timestamp: i64,
    pub state: PathwayState,
    pub light: f64,
    pub openness: f64,
    /// True net leaf uptake, µmol s⁻¹.
    pub net_flux: f64,
    /// True transpiration, mmol s⁻¹.
    pub transpiration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub plant: SensorSeries,
    pub control: SensorSeries,
    pub ambient: SensorSeries,
    pub trace: Vec<TraceRecord>,
}

#[derive(Clone, Copy)]
struct PodAir {
    co2: f64,
    rh: f64,
}

/// Leaf quantities frozen over one integration step.
struct LeafDrive<'a> {
    spec: &'a LeafSpec,
    state: &'a PathwayState,
    clock: &'a ClockParams,
    resp: &'a ResponseParams,
    openness: f64,
    light: f64,
}

impl LeafDrive<'_> {
    fn fluxes(&self, air: PodAir, temp: f64) -> Result<(f64, f64)> {
        let f = net_co2_flux(
            self.spec,
            self.state,
            self.openness,
            self.light,
            air.co2.max(0.0),
            self.clock,
            self.resp,
        )?;
        let e = transpiration_flux(self.spec, self.openness, air.rh.clamp(0.0, 100.0), temp)?;
        Ok((f, e))
    }
}

fn rates(pod: &PodConfig, sc: &Scenario, leaf: Option<&LeafDrive<'_>>, t: f64, air: PodAir) -> Result<PodAir> {
    let (c_amb, rh_amb) = ambient_trace(&sc.environment, t);
    let temp = pod.temperature(&sc.schedule, t);
    let k = pod.exchange_rate();
    let (flux, transp) = match leaf {
        Some(l) => l.fluxes(air, temp)?,
        None => (0.0, 0.0),
    };
    Ok(PodAir {
        co2: k * (c_amb - air.co2) - flux / pod.air_moles(temp),
        rh: k * (rh_amb - air.rh) + transp * humidity_gain(temp) / pod.volume,
    })
}

fn rk4(pod: &PodConfig, sc: &Scenario, leaf: Option<&LeafDrive<'_>>, t: f64, dt: f64, y: PodAir) -> Result<PodAir> {
    let add = |a: PodAir, k: PodAir, h: f64| PodAir {
        co2: a.co2 + k.co2 * h,
        rh: a.rh + k.rh * h,
    };
    let k1 = rates(pod, sc, leaf, t, y)?;
    let k2 = rates(pod, sc, leaf, t + dt / 2.0, add(y, k1, dt / 2.0))?;
    let k3 = rates(pod, sc, leaf, t + dt / 2.0, add(y, k2, dt / 2.0))?;
    let k4 = rates(pod, sc, leaf, t + dt, add(y, k3, dt))?;
    Ok(PodAir {
        co2: (y.co2 + dt / 6.0 * (k1.co2 + 2.0 * k2.co2 + 2.0 * k3.co2 + k4.co2)).max(0.0),
        rh: (y.rh + dt / 6.0 * (k1.rh + 2.0 * k2.rh + 2.0 * k3.rh + k4.rh)).clamp(0.0, 100.0),
    })
}

fn noisy(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sd
}

/// Runs a scenario. Identical scenarios (seed included) give bitwise
/// identical output.
pub fn simulate(sc: &Scenario) -> Result<SimulationOutput> {
    sc.validate()?;
    let t0 = sc.start_time_s as f64;
    let steps_per_sample = (SAMPLE_PERIOD_S as f64 / sc.dt).round() as usize;
    let n_samples = sc.sample_count();

    let (c_amb0, rh_amb0) = ambient_trace(&sc.environment, t0);
    let mut plant = PodAir {
        co2: sc.initial_pod_co2.unwrap_or(c_amb0),
        rh: rh_amb0,
    };
    let mut control = PodAir { co2: c_amb0, rh: rh_amb0 };
    let mut leaf_state = sc.initial_state;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.rng_seed);

    let mut out_plant = Vec::with_capacity(n_samples + 1);
    let mut out_control = Vec::with_capacity(n_samples + 1);
    let mut out_ambient = Vec::with_capacity(n_samples + 1);
    let mut trace = Vec::with_capacity(n_samples + 1);

    let leaf_present = |t: f64| sc.leaf_removal_s.is_none_or(|r| t < r as f64);

    for k in 0..=n_samples {
        let timestamp = sc.start_time_s + k as i64 * SAMPLE_PERIOD_S;
        let t = timestamp as f64;
        let (c_amb, rh_amb) = ambient_trace(&sc.environment, t);
        let temp_plant = sc.pod.temperature(&sc.schedule, t);
        let temp_control = sc.control_pod.temperature(&sc.schedule, t);

        let light = sc.schedule.lux(t);
        let (openness, net_flux, transpiration) = if leaf_present(t) {
            let g = stomatal_openness(&sc.leaf, &leaf_state, light, &sc.clock, &sc.response)?;
            let drive = LeafDrive {
                spec: &sc.leaf,
                state: &leaf_state,
                clock: &sc.clock,
                resp: &sc.response,
                openness: g,
                light,
            };
            let (f, e) = drive.fluxes(plant, temp_plant)?;
            (g, f, e)
        } else {
            (0.0, 0.0, 0.0)
        };
        trace.push(TraceRecord {
            timestamp,
            state: leaf_state,
            light,
            openness,
            net_flux,
            transpiration,
        });

        let sample = |air: PodAir, temp: f64, rng: &mut ChaCha8Rng| Sample {
            timestamp,
            co2: (air.co2 + noisy(rng, sc.noise_co2_sd)).max(0.0),
            rh: (air.rh + noisy(rng, sc.noise_rh_sd)).clamp(0.0, 100.0),
            temp,
        };
        out_plant.push(sample(plant, temp_plant, &mut rng));
        out_control.push(sample(control, temp_control, &mut rng));
        out_ambient.push(sample(PodAir { co2: c_amb, rh: rh_amb }, temp_plant, &mut rng));

        if k == n_samples {
            break;
        }
        for s in 0..steps_per_sample {
            let ts = t + s as f64 * sc.dt;
            let te = ts + sc.dt;
            control = rk4(&sc.control_pod, sc, None, ts, sc.dt, control)?;
            if !leaf_present(ts) {
                plant = rk4(&sc.pod, sc, None, ts, sc.dt, plant)?;
                continue;
            }
            let light = sc.schedule.lux(ts);
            let g = stomatal_openness(&sc.leaf, &leaf_state, light, &sc.clock, &sc.response)?;
            let drive = LeafDrive {
                spec: &sc.leaf,
                state: &leaf_state,
                clock: &sc.clock,
                resp: &sc.response,
                openness: g,
                light,
            };
            let temp = sc.pod.temperature(&sc.schedule, ts);
            let (_, e) = drive.fluxes(plant, temp)?;
            let co2_before = plant.co2;
            plant = rk4(&sc.pod, sc, Some(&drive), ts, sc.dt, plant)?;

            let watering = sc.watering_events.iter().any(|&w| (w as f64) > ts && (w as f64) <= te);
            let mut next = step_acid_pool(&sc.leaf, &leaf_state, g, co2_before.max(0.0), &sc.clock, &sc.response, sc.dt);
            next = step_stress_and_weight(&sc.leaf, &next, &sc.stress, sc.dt, e, watering, sc.facultative);
            next = step_clock(&next, &sc.clock, sc.dt, sc.schedule.external_phase(te));
            leaf_state = next;
        }
    }

    let series = |id: &str, samples: Vec<Sample>| SensorSeries::new(id, samples);
    Ok(SimulationOutput {
        plant: series("plant", out_plant),
        control: series("control", out_control),
        ambient: series("ambient", out_ambient),
        trace,
    })
}

/// Analytic night-time respiration plateau `C_amb + F·V/(g·n_air)`, ppm,
/// for a leaf respiring `resp_flux` µmol s⁻¹.
pub fn respiration_plateau(pod: &PodConfig, c_amb: f64, resp_flux: f64, temp_c: f64) -> f64 {
    c_amb + resp_flux * pod.volume / (pod.leak_conductance * pod.air_moles(temp_c))
}
