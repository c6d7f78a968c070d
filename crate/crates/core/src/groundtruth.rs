//! Biochemical and gas-exchange ground truth: malic-acid titration,
//! reference-analyzer records and the inverse-relation check between
//! measured assimilation and pod CO₂.
//!
//! Titration CSV:
//!
//! ```text
//! sample_time,phase,v_naoh_l,c_naoh_mol_l,m_leaf_g
//! 1700000000,dawn,0.010,0.001,0.5
//! ```
//!
//! `sample_time` is epoch seconds or ISO 8601. Ground-truth CSV:
//!
//! ```text
//! timestamp_s,photo,trmmol
//! 1700000000,4.21,0.83
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::{correlation, smooth};
use crate::error::{Error, Result};
use crate::ingest::{parse_timestamp, TimestampKind};
use crate::physiology::LeafSpec;
use crate::podsim::{LightSchedule, TraceRecord};
use crate::series::SensorSeries;

/// Molar mass of malic acid, g mol⁻¹.
pub const MALIC_ACID_MOLAR_MASS: f64 = 134.09;
/// NaOH concentrations outside this range draw a warning.
pub const C_NAOH_RANGE: (f64, f64) = (0.0005, 0.005);
/// Hours before a light transition at which leaf samples are taken.
pub const SAMPLING_LEAD_H: f64 = 2.0;
/// Smoothing window applied to pod CO₂ before differentiation, minutes.
pub const SMOOTHING_MIN: f64 = 30.0;
/// Half-width of the central difference, seconds.
pub const DERIVATIVE_HALF_S: i64 = 900;
/// Largest time offset at which a reference record pairs with the pod, seconds.
pub const PAIRING_TOLERANCE_S: i64 = 300;
pub const MIN_PAIRS: usize = 10;
pub const MIN_OVERLAP_S: i64 = 6 * 3600;
/// The relation passes when the correlation is below this value.
pub const PASS_THRESHOLD: f64 = -0.5;

pub const TITRATION_HEADER: &str = "sample_time,phase,v_naoh_l,c_naoh_mol_l,m_leaf_g";
pub const GROUND_TRUTH_HEADER: &str = "timestamp_s,photo,trmmol";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Dawn,
    Dusk,
}

impl Phase {
    pub fn swapped(self) -> Self {
        match self {
            Phase::Dawn => Phase::Dusk,
            Phase::Dusk => Phase::Dawn,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Dawn => "dawn",
            Phase::Dusk => "dusk",
        })
    }
}

/// One NaOH titration of a leaf extract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TitrationRecord {
    /// Burette volume, L.
    pub v_naoh: f64,
    /// NaOH concentration, mol L⁻¹.
    pub c_naoh: f64,
    /// Fresh leaf mass, g.
    pub m_leaf: f64,
    pub sample_time: i64,
    pub phase: Phase,
}

/// One reference gas-exchange reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub timestamp: i64,
    /// Net assimilation, µmol CO₂ m⁻² s⁻¹.
    pub photo: f64,
    /// Transpiration, mmol H₂O m⁻² s⁻¹.
    pub trmmol: f64,
}

/// Malic acid as a percentage of fresh leaf mass, with any range warning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcidReading {
    pub percent: f64,
    pub warnings: Vec<String>,
}

/// Malic acid content, assuming two moles of NaOH neutralize one mole of
/// the diprotic acid.
pub fn malic_acid_percent(rec: &TitrationRecord) -> Result<AcidReading> {
    malic_acid_percent_with(rec, MALIC_ACID_MOLAR_MASS)
}

pub fn malic_acid_percent_with(rec: &TitrationRecord, m_malic: f64) -> Result<AcidReading> {
    if !(rec.m_leaf > 0.0) {
        return Err(Error::Domain(format!("leaf mass must be > 0 g, got {}", rec.m_leaf)));
    }
    if !(rec.v_naoh >= 0.0) || !rec.v_naoh.is_finite() {
        return Err(Error::Domain(format!("NaOH volume must be >= 0 L, got {}", rec.v_naoh)));
    }
    if !(rec.c_naoh > 0.0) || !rec.c_naoh.is_finite() {
        return Err(Error::Domain(format!("NaOH concentration must be > 0, got {}", rec.c_naoh)));
    }
    let mut warnings = Vec::new();
    if rec.c_naoh < C_NAOH_RANGE.0 || rec.c_naoh > C_NAOH_RANGE.1 {
        warnings.push(format!(
            "NaOH concentration {} mol/L is outside the usual {}-{} mol/L dilution range",
            rec.c_naoh, C_NAOH_RANGE.0, C_NAOH_RANGE.1
        ));
    }
    let percent = rec.v_naoh * rec.c_naoh * m_malic / (2.0 * rec.m_leaf) * 100.0;
    Ok(AcidReading { percent, warnings })
}

/// Dawn-minus-dusk acid content for one calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayDelta {
    /// Days since the Unix epoch.
    pub day: i64,
    pub dawn_percent: f64,
    pub dusk_percent: f64,
    /// Positive when acid accumulated overnight.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DawnDuskReport {
    pub days: Vec<DayDelta>,
    pub warnings: Vec<String>,
}

/// Pairs dawn and dusk titrations by UTC day. Several records of one phase
/// on a day are averaged; days missing either phase are skipped with a
/// warning.
pub fn dawn_dusk_delta(records: &[TitrationRecord]) -> Result<DawnDuskReport> {
    let mut by_day: BTreeMap<i64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut warnings = Vec::new();
    for rec in records {
        let reading = malic_acid_percent(rec)?;
        warnings.extend(reading.warnings);
        let entry = by_day.entry(rec.sample_time.div_euclid(86_400)).or_default();
        match rec.phase {
            Phase::Dawn => entry.0.push(reading.percent),
            Phase::Dusk => entry.1.push(reading.percent),
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut days = Vec::new();
    for (day, (dawn, dusk)) in by_day {
        if dawn.is_empty() || dusk.is_empty() {
            let missing = if dawn.is_empty() { Phase::Dawn } else { Phase::Dusk };
            warnings.push(format!("day {day}: no {missing} record, skipped"));
            continue;
        }
        let (a, b) = (mean(&dawn), mean(&dusk));
        days.push(DayDelta { day, dawn_percent: a, dusk_percent: b, delta: a - b });
    }
    Ok(DawnDuskReport { days, warnings })
}

/// Outcome of comparing reference assimilation with the pod CO₂ slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseRelation {
    /// Pearson r between `photo` and dC/dt of the smoothed pod series.
    pub r: f64,
    pub pairs: usize,
    pub overlap_s: i64,
    pub pass: bool,
}

impl fmt::Display for InverseRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "inverse relation: {verdict} (r = {:.2})", self.r)
    }
}

/// Central-difference slope of CO₂ in ppm s⁻¹ at each sample that has data
/// `DERIVATIVE_HALF_S` on both sides within its segment.
fn co2_slope(series: &SensorSeries) -> Vec<(i64, f64)> {
    let mut out = Vec::new();
    for seg in series.segments() {
        let part = &series.samples[seg];
        let ts: Vec<i64> = part.iter().map(|s| s.timestamp).collect();
        for (i, &t) in ts.iter().enumerate() {
            let j = ts.partition_point(|&x| x < t - DERIVATIVE_HALF_S);
            let k = ts.partition_point(|&x| x <= t + DERIVATIVE_HALF_S) - 1;
            let span = ts[k] - ts[j];
            let reach = (t - ts[j]).min(ts[k] - t);
            if j < i && k > i && reach * 10 >= DERIVATIVE_HALF_S * 9 {
                out.push((t, (part[k].co2 - part[j].co2) / span as f64));
            }
        }
    }
    out
}

/// Checks that reference assimilation rises while pod CO₂ falls.
///
/// Pod CO₂ is smoothed with a 30 min median and differentiated over
/// ±15 min. Each reference record is paired with the nearest slope sample
/// within ±5 min. Needs 6 h of overlap and at least 10 pairs.
pub fn validate_inverse_relation(gt: &[GroundTruthRecord], pod: &SensorSeries) -> Result<InverseRelation> {
    if gt.windows(2).any(|w| w[1].timestamp <= w[0].timestamp) {
        return Err(Error::Input("ground-truth timestamps must be strictly increasing".into()));
    }
    let (Some(gs), Some(ge), Some(ps), Some(pe)) =
        (gt.first().map(|g| g.timestamp), gt.last().map(|g| g.timestamp), pod.start(), pod.end())
    else {
        return Err(Error::InsufficientData("ground truth or pod series is empty".into()));
    };
    let overlap_s = ge.min(pe) - gs.max(ps);
    if overlap_s < MIN_OVERLAP_S {
        return Err(Error::InsufficientData(format!(
            "records overlap for {:.1} h; need at least {} h",
            overlap_s.max(0) as f64 / 3600.0,
            MIN_OVERLAP_S / 3600
        )));
    }
    let slope = co2_slope(&smooth(pod, SMOOTHING_MIN)?);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for g in gt {
        let i = slope.partition_point(|(t, _)| *t < g.timestamp);
        let nearest = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|k| slope.get(k))
            .min_by_key(|(t, _)| (t - g.timestamp).abs());
        if let Some(&(t, d)) = nearest {
            if (t - g.timestamp).abs() <= PAIRING_TOLERANCE_S {
                x.push(g.photo);
                y.push(d);
            }
        }
    }
    if x.len() < MIN_PAIRS {
        return Err(Error::InsufficientData(format!("{} paired points; need at least {MIN_PAIRS}", x.len())));
    }
    let r = correlation(&x, &y)
        .ok_or_else(|| Error::InsufficientData("zero variance in assimilation or pod slope".into()))?;
    Ok(InverseRelation { r, pairs: x.len(), overlap_s, pass: r < PASS_THRESHOLD })
}

/// Reference records derived from a simulation trace: the true leaf flux
/// and transpiration per unit leaf area, one record every `every_s`.
pub fn synthesize_ground_truth(trace: &[TraceRecord], leaf: &LeafSpec, every_s: i64) -> Vec<GroundTruthRecord> {
    let area_m2 = leaf.area * 1e-4;
    let Some(first) = trace.first() else { return Vec::new() };
    trace
        .iter()
        .filter(|r| (r.timestamp - first.timestamp) % every_s.max(1) == 0)
        .map(|r| GroundTruthRecord {
            timestamp: r.timestamp,
            photo: r.net_flux / area_m2,
            trmmol: r.transpiration / area_m2,
        })
        .collect()
}

/// How simulated acid pools are turned into titration records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TitrationSampling {
    pub c_naoh: f64,
    /// Mass of each leaf sample, g.
    pub m_sample: f64,
    /// Fresh leaf mass per area, g cm⁻².
    pub mass_per_area: f64,
}

impl Default for TitrationSampling {
    fn default() -> Self {
        TitrationSampling { c_naoh: 0.001, m_sample: 0.5, mass_per_area: 0.05 }
    }
}

/// Titrations of the simulated leaf, sampled 2 h before each lights-on
/// (dawn) and 2 h before each lights-off (dusk) within the trace. Each
/// stored CO₂ is one malate, neutralized by two NaOH.
pub fn synthesize_titrations(
    trace: &[TraceRecord],
    schedule: &LightSchedule,
    leaf: &LeafSpec,
    sampling: &TitrationSampling,
) -> Vec<TitrationRecord> {
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else { return Vec::new() };
    let lead = (SAMPLING_LEAD_H * 3600.0).round() as i64;
    let leaf_mass = leaf.area * sampling.mass_per_area;
    let mut out = Vec::new();
    let mut t = schedule.next_transition(first.timestamp + lead);
    while t - lead <= last.timestamp {
        let at = t - lead;
        let phase = if schedule.is_light(t as f64) { Phase::Dawn } else { Phase::Dusk };
        let i = trace.partition_point(|r| r.timestamp < at).min(trace.len() - 1);
        let malate_mol = trace[i].state.acid_pool.max(0.0) * 1e-6 * sampling.m_sample / leaf_mass;
        out.push(TitrationRecord {
            v_naoh: 2.0 * malate_mol / sampling.c_naoh,
            c_naoh: sampling.c_naoh,
            m_leaf: sampling.m_sample,
            sample_time: at,
            phase,
        });
        t = schedule.next_transition(t + 1);
    }
    out
}

fn data_lines<'a>(text: &'a str, header: &str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    let header = header.to_owned();
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(move |(_, l)| !l.is_empty() && !l.starts_with('#') && *l != header)
}

fn field<T: std::str::FromStr>(raw: &str, name: &str, line: usize) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Input(format!("line {line}: invalid {name} {raw:?}")))
}

pub fn parse_titration_csv(text: &str) -> Result<Vec<TitrationRecord>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text, TITRATION_HEADER) {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Input(format!("line {line}: expected 5 fields, found {}", f.len())));
        }
        let sample_time = parse_timestamp(f[0], TimestampKind::EpochS)
            .or_else(|| parse_timestamp(f[0], TimestampKind::Iso8601))
            .ok_or_else(|| Error::Input(format!("line {line}: invalid sample_time {:?}", f[0])))?;
        let phase = match f[1].trim().to_ascii_lowercase().as_str() {
            "dawn" => Phase::Dawn,
            "dusk" => Phase::Dusk,
            other => return Err(Error::Input(format!("line {line}: phase must be dawn or dusk, got {other:?}"))),
        };
        out.push(TitrationRecord {
            sample_time,
            phase,
            v_naoh: field(f[2], "v_naoh_l", line)?,
            c_naoh: field(f[3], "c_naoh_mol_l", line)?,
            m_leaf: field(f[4], "m_leaf_g", line)?,
        });
    }
    if out.is_empty() {
        return Err(Error::Input("titration file has no records".into()));
    }
    Ok(out)
}

pub fn serialize_titration_csv(records: &[TitrationRecord]) -> String {
    let mut s = format!("{TITRATION_HEADER}\n");
    for r in records {
        s.push_str(&format!("{},{},{},{},{}\n", r.sample_time, r.phase, r.v_naoh, r.c_naoh, r.m_leaf));
    }
    s
}

pub fn parse_ground_truth_csv(text: &str) -> Result<Vec<GroundTruthRecord>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text, GROUND_TRUTH_HEADER) {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Input(format!("line {line}: expected 3 fields, found {}", f.len())));
        }
        out.push(GroundTruthRecord {
            timestamp: field(f[0], "timestamp_s", line)?,
            photo: field(f[1], "photo", line)?,
            trmmol: field(f[2], "trmmol", line)?,
        });
    }
    if out.is_empty() {
        return Err(Error::Input("ground-truth file has no records".into()));
    }
    Ok(out)
}

pub fn serialize_ground_truth_csv(records: &[GroundTruthRecord]) -> String {
    let mut s = format!("{GROUND_TRUTH_HEADER}\n");
    for r in records {
        s.push_str(&format!("{},{},{}\n", r.timestamp, r.photo, r.trmmol));
    }
    s
}
