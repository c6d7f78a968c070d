//! Leaf-side gas-exchange models.
//!
//! A leaf is described by a static [`LeafSpec`] and an evolving
//! [`PathwayState`]. The C₃ and CAM behaviours are blended by the current CAM
//! weight `w`: `w = 0` is a pure C₃ leaf that opens its stomata with light,
//! `w = 1` is an obligate CAM leaf that opens at subjective night and stores
//! the fixed carbon as an acid pool which is decarboxylated behind closed
//! stomata during the subjective day.
//!
//! Every function here is a pure value transition; nothing is shared.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HOURS_PER_DAY: f64 = 24.0;

/// Static description of a leaf (or of the enclosed leaf area).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafSpec {
    /// Enclosed leaf area, cm².
    pub area: f64,
    /// Light-saturated C₃ assimilation capacity, µmol CO₂ m⁻² s⁻¹.
    pub a_max: f64,
    /// CAM nocturnal fixation capacity, µmol CO₂ m⁻² s⁻¹.
    pub f_max: f64,
    /// Respiration rate, µmol CO₂ m⁻² s⁻¹.
    pub r_dark: f64,
    /// Maximum transpiration, mmol H₂O m⁻² s⁻¹.
    pub e_max: f64,
    /// Vacuolar malate storage ceiling, µmol CO₂-equivalent per leaf.
    pub acid_capacity: f64,
    /// Resting CAM weight the leaf relaxes to when well watered.
    pub cam_weight_base: f64,
    /// Leaf maturity in [0, 1].
    pub maturity: f64,
}

impl LeafSpec {
    /// A C₃ leaf (Pothos-like). Respiration is tuned so that a 700 cm³
    /// tied-seal pod plateaus near 500 ppm at night.
    pub fn c3() -> Self {
        LeafSpec {
            area: 40.0,
            a_max: 0.3,
            f_max: 0.0,
            r_dark: 0.04,
            e_max: 0.01,
            acid_capacity: 1.0,
            cam_weight_base: 0.0,
            maturity: 1.0,
        }
    }

    /// An obligate CAM leaf (Kalanchoe-like).
    pub fn obligate_cam() -> Self {
        LeafSpec {
            f_max: 0.2,
            a_max: 0.0,
            acid_capacity: 60.0,
            cam_weight_base: 1.0,
            ..Self::c3()
        }
    }

    /// A facultative CAM leaf (Coleus-like): C₃-leaning when watered,
    /// CAM under drought.
    pub fn facultative_cam() -> Self {
        LeafSpec {
            a_max: 0.2,
            f_max: 0.5,
            r_dark: 0.02,
            acid_capacity: 5.0,
            cam_weight_base: 0.55,
            ..Self::c3()
        }
    }

    /// A developmental CAM leaf. Young leaves (maturity 0) are small and C₃,
    /// mature leaves (maturity 1) are larger and CAM.
    pub fn developmental(maturity: f64) -> Self {
        let maturity = maturity.clamp(0.0, 1.0);
        LeafSpec {
            area: 8.0 + 32.0 * maturity,
            a_max: 0.3,
            f_max: 0.2,
            acid_capacity: 60.0,
            cam_weight_base: maturity,
            maturity,
            ..Self::c3()
        }
    }

    pub fn area_m2(&self) -> f64 {
        self.area * 1e-4
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area > 0.0) {
            return Err(Error::Domain(format!("leaf area must be > 0, got {}", self.area)));
        }
        for (name, v) in [
            ("a_max", self.a_max),
            ("f_max", self.f_max),
            ("r_dark", self.r_dark),
            ("e_max", self.e_max),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.cam_weight_base) {
            return Err(Error::Domain("cam_weight_base must be in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.maturity) {
            return Err(Error::Domain("maturity must be in [0,1]".into()));
        }
        if self.cam_weight_base > 0.0 && !(self.acid_capacity > 0.0) {
            return Err(Error::Domain(
                "acid_capacity must be > 0 for a leaf with CAM weight".into(),
            ));
        }
        Ok(())
    }
}

/// Evolving physiological state of a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwayState {
    /// Current CAM fraction: 0 = pure C₃, 1 = obligate CAM.
    pub cam_weight: f64,
    /// Stored nocturnally fixed carbon, µmol.
    pub acid_pool: f64,
    /// Internal subjective time in hours, [0, 24). 0 is subjective dawn.
    pub clock_phase: f64,
    /// Bucket-model soil water fill fraction.
    pub soil_water: f64,
}

impl PathwayState {
    /// Well-watered state with an empty acid pool and the clock at `clock_phase`.
    pub fn new(cam_weight: f64, clock_phase: f64) -> Self {
        PathwayState {
            cam_weight,
            acid_pool: 0.0,
            clock_phase: wrap_hours(clock_phase),
            soil_water: 1.0,
        }
    }

    pub fn validate(&self, spec: &LeafSpec) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cam_weight) {
            return Err(Error::Domain("cam_weight must be in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.soil_water) {
            return Err(Error::Domain("soil_water must be in [0,1]".into()));
        }
        if !(0.0..HOURS_PER_DAY).contains(&self.clock_phase) {
            return Err(Error::Domain("clock_phase must be in [0,24)".into()));
        }
        if self.acid_pool < 0.0 || self.acid_pool > spec.acid_capacity {
            return Err(Error::Domain("acid_pool must be in [0, acid_capacity]".into()));
        }
        if self.cam_weight > 0.0 && !(spec.acid_capacity > 0.0) {
            return Err(Error::Domain(
                "acid_capacity must be > 0 for a leaf with CAM weight".into(),
            ));
        }
        Ok(())
    }
}

/// Internal clock parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockParams {
    /// First-order entrainment time constant toward the external light phase, hours.
    pub tau_entrain: f64,
    /// Free-running period, hours.
    #[serde(default = "default_free_period")]
    pub free_period: f64,
    /// Length of the subjective day, hours. Clock phases in
    /// `[subjective_day_hours, 24)` are subjective night.
    #[serde(default = "default_subjective_day")]
    pub subjective_day_hours: f64,
}

fn default_free_period() -> f64 {
    24.0
}

fn default_subjective_day() -> f64 {
    12.0
}

impl ClockParams {
    /// C₃ leaves track the light cue immediately.
    pub fn c3() -> Self {
        ClockParams {
            tau_entrain: 0.0,
            free_period: 24.0,
            subjective_day_hours: 12.0,
        }
    }

    /// CAM timing carries inertia of roughly one cycle.
    pub fn cam() -> Self {
        ClockParams {
            tau_entrain: 14.0,
            ..Self::c3()
        }
    }

    pub fn is_subjective_night(&self, clock_phase: f64) -> bool {
        wrap_hours(clock_phase) >= self.subjective_day_hours
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_entrain >= 0.0) {
            return Err(Error::Domain("tau_entrain must be >= 0".into()));
        }
        if !(self.free_period > 0.0) {
            return Err(Error::Domain("free_period must be > 0".into()));
        }
        if !(self.subjective_day_hours > 0.0 && self.subjective_day_hours < HOURS_PER_DAY) {
            return Err(Error::Domain("subjective_day_hours must be in (0,24)".into()));
        }
        Ok(())
    }
}

impl Default for ClockParams {
    fn default() -> Self {
        Self::c3()
    }
}

/// Saturating response constants shared by the flux functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseParams {
    /// Half-saturation light level, lux.
    pub k_light: f64,
    /// Half-saturation CO₂ level, ppm.
    pub k_co2: f64,
    /// Residual CAM stomatal openness during the subjective day.
    pub g_day_cam: f64,
    /// Fraction of respiration refixed from decarboxylated acid while the
    /// pool is non-empty during the subjective day. Must stay below 1.
    pub decarb_offset: f64,
}

impl Default for ResponseParams {
    fn default() -> Self {
        ResponseParams {
            k_light: 200.0,
            k_co2: 200.0,
            g_day_cam: 0.05,
            decarb_offset: 0.8,
        }
    }
}

/// Bucket-model water stress parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StressParams {
    /// CAM-weight relaxation time constant, days.
    pub tau_w_days: f64,
    /// Soil water fraction below which CAM is induced.
    pub theta: f64,
    /// Soil water fraction lost per mmol transpired.
    pub drain_per_mmol: f64,
}

impl Default for StressParams {
    fn default() -> Self {
        StressParams {
            tau_w_days: 2.0,
            theta: 0.5,
            drain_per_mmol: 0.05,
        }
    }
}

/// Wraps an hour value onto [0, 24).
pub fn wrap_hours(h: f64) -> f64 {
    let w = h.rem_euclid(HOURS_PER_DAY);
    // rem_euclid can round up to exactly 24.0 for tiny negative inputs
    if w >= HOURS_PER_DAY {
        0.0
    } else {
        w
    }
}

/// Signed shortest angular distance from `from` to `to` on the 24 h circle,
/// in [-12, 12).
pub fn phase_difference(from: f64, to: f64) -> f64 {
    (to - from + 12.0).rem_euclid(HOURS_PER_DAY) - 12.0
}

fn hyperbola(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x / (x + k)
    }
}

/// Blended stomatal openness in [0, 1].
pub fn stomatal_openness(
    spec: &LeafSpec,
    state: &PathwayState,
    light: f64,
    clock: &ClockParams,
    resp: &ResponseParams,
) -> Result<f64> {
    if !(light >= 0.0) {
        return Err(Error::Domain(format!("light must be >= 0 lux, got {light}")));
    }
    let w = state.cam_weight;
    let g_c3 = hyperbola(light, resp.k_light);
    let g_cam = if clock.is_subjective_night(state.clock_phase) && state.acid_pool < spec.acid_capacity {
        1.0
    } else {
        resp.g_day_cam
    };
    Ok(((1.0 - w) * g_c3 + w * g_cam).clamp(0.0, 1.0))
}

/// CAM fixation rate per unit area (µmol m⁻² s⁻¹), zero outside the
/// subjective night or when the acid pool is full.
fn cam_fixation(
    spec: &LeafSpec,
    state: &PathwayState,
    openness: f64,
    co2: f64,
    clock: &ClockParams,
    resp: &ResponseParams,
) -> f64 {
    if clock.is_subjective_night(state.clock_phase) && state.acid_pool < spec.acid_capacity {
        openness * spec.f_max * hyperbola(co2, resp.k_co2)
    } else {
        0.0
    }
}

/// Acid pool drain rate during the subjective day, µmol s⁻¹: a full pool
/// empties over one subjective photoperiod.
fn acid_drain_rate(spec: &LeafSpec, clock: &ClockParams) -> f64 {
    spec.acid_capacity / (clock.subjective_day_hours * 3600.0)
}

/// Respiration fraction refixed from the acid pool at this instant. The
/// carbon released by the draining pool offsets respiration one for one,
/// up to `resp.decarb_offset`.
fn decarb_offset(spec: &LeafSpec, state: &PathwayState, clock: &ClockParams, resp: &ResponseParams) -> f64 {
    if clock.is_subjective_night(state.clock_phase) || state.acid_pool <= 0.0 {
        return 0.0;
    }
    let respiration = spec.r_dark * spec.area_m2();
    if respiration <= 0.0 {
        return 0.0;
    }
    (acid_drain_rate(spec, clock) / respiration).min(resp.decarb_offset)
}

/// Net leaf CO₂ flux in µmol s⁻¹, positive for uptake from the pod air.
pub fn net_co2_flux(
    spec: &LeafSpec,
    state: &PathwayState,
    openness: f64,
    light: f64,
    co2: f64,
    clock: &ClockParams,
    resp: &ResponseParams,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&openness) {
        return Err(Error::Domain(format!("openness must be in [0,1], got {openness}")));
    }
    if !(co2 >= 0.0) {
        return Err(Error::Domain(format!("co2 must be >= 0, got {co2}")));
    }
    if !(light >= 0.0) {
        return Err(Error::Domain(format!("light must be >= 0 lux, got {light}")));
    }
    let w = state.cam_weight;
    let a_c3 = openness * spec.a_max * hyperbola(light, resp.k_light) * hyperbola(co2, resp.k_co2);
    let f_cam = cam_fixation(spec, state, openness, co2, clock, resp);
    let offset = decarb_offset(spec, state, clock, resp);
    Ok(spec.area_m2() * ((1.0 - w) * a_c3 + w * f_cam - spec.r_dark * (1.0 - offset)))
}

/// Transpiration in mmol H₂O s⁻¹.
pub fn transpiration_flux(spec: &LeafSpec, openness: f64, rh_pod: f64, temp: f64) -> Result<f64> {
    let _ = temp;
    if !(0.0..=100.0).contains(&rh_pod) {
        return Err(Error::Domain(format!("relative humidity must be in [0,100], got {rh_pod}")));
    }
    if !(0.0..=1.0).contains(&openness) {
        return Err(Error::Domain(format!("openness must be in [0,1], got {openness}")));
    }
    Ok((spec.area_m2() * openness * spec.e_max * (1.0 - rh_pod / 100.0)).max(0.0))
}

/// Advances the acid pool by `dt` seconds.
///
/// During the subjective night the pool fills with the CAM share of fixed
/// carbon; during the subjective day it drains linearly so that a full pool
/// empties over one subjective photoperiod.
pub fn step_acid_pool(
    spec: &LeafSpec,
    state: &PathwayState,
    openness: f64,
    co2: f64,
    clock: &ClockParams,
    resp: &ResponseParams,
    dt: f64,
) -> PathwayState {
    let mut next = *state;
    if clock.is_subjective_night(state.clock_phase) {
        let uptake = spec.area_m2() * state.cam_weight * cam_fixation(spec, state, openness, co2, clock, resp);
        next.acid_pool = (state.acid_pool + uptake * dt).min(spec.acid_capacity);
    } else {
        next.acid_pool = (state.acid_pool - acid_drain_rate(spec, clock) * dt).max(0.0);
    }
    next
}

/// Advances the internal clock by `dt` seconds and relaxes it toward the
/// external light phase (hours since lights-on).
pub fn step_clock(state: &PathwayState, params: &ClockParams, dt: f64, external_phase: f64) -> PathwayState {
    let mut next = *state;
    let external = wrap_hours(external_phase);
    if params.tau_entrain <= 0.0 {
        next.clock_phase = external;
        return next;
    }
    let dt_h = dt / 3600.0;
    let advanced = state.clock_phase + dt_h * HOURS_PER_DAY / params.free_period;
    let mismatch = phase_difference(advanced, external);
    let relax = 1.0 - (-dt_h / params.tau_entrain).exp();
    next.clock_phase = wrap_hours(advanced + mismatch * relax);
    next
}

/// Updates soil water from transpiration and watering, then relaxes the CAM
/// weight toward its stress target when the leaf is facultative.
pub fn step_stress_and_weight(
    spec: &LeafSpec,
    state: &PathwayState,
    params: &StressParams,
    dt: f64,
    transpiration: f64,
    watering: bool,
    facultative: bool,
) -> PathwayState {
    let mut next = *state;
    next.soil_water = if watering {
        1.0
    } else {
        (state.soil_water - params.drain_per_mmol * transpiration.max(0.0) * dt).clamp(0.0, 1.0)
    };
    if facultative {
        let target = (1.0 - next.soil_water / params.theta).clamp(spec.cam_weight_base, 1.0);
        let decay = (-dt / (params.tau_w_days * 86_400.0)).exp();
        next.cam_weight = (target + (state.cam_weight - target) * decay).clamp(0.0, 1.0);
    }
    next
}
