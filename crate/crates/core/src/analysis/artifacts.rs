use serde::{Deserialize, Serialize};

use super::smooth::{median, rolling_median};
use crate::series::SensorSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CauseHint {
    Occupancy,
    VentilationChange,
    Unknown,
}

/// A stretch of time where the room air, not the leaf, drove pod CO₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArtifactWindow {
    pub start: i64,
    pub end: i64,
    /// Largest excess over the rolling baseline, ppm.
    pub peak_excursion: f64,
    pub cause_hint: CauseHint,
}

impl ArtifactWindow {
    pub fn overlaps(&self, start: i64, end: i64) -> bool {
        self.start < end && self.end > start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtifactConfig {
    /// Excess over baseline that counts as an excursion, ppm.
    pub threshold_ppm: f64,
    /// Excursions must last longer than this, seconds.
    pub min_duration_s: i64,
    /// Length of the trailing rolling-median baseline, hours.
    pub baseline_window_h: f64,
    /// Windows closer than this are merged, seconds.
    pub merge_gap_s: i64,
    /// Span before and after a window used to compare levels, seconds.
    pub level_span_s: i64,
}

impl Default for ArtifactConfig {
    fn default() -> Self {
        ArtifactConfig {
            threshold_ppm: 50.0,
            min_duration_s: 600,
            baseline_window_h: 12.0,
            merge_gap_s: 1800,
            level_span_s: 7200,
        }
    }
}

fn level(ts: &[i64], co2: &[f64], from: i64, to: i64) -> Option<f64> {
    let mut v: Vec<f64> = ts.iter().zip(co2).filter(|(t, _)| **t >= from && **t < to).map(|(_, c)| *c).collect();
    (!v.is_empty()).then(|| median(&mut v))
}

fn excursions(series: &SensorSeries, cfg: &ArtifactConfig) -> Vec<ArtifactWindow> {
    let mut out = Vec::new();
    let span = (cfg.baseline_window_h * 3600.0).round() as i64;
    let period = series.nominal_period().unwrap_or(60);
    for seg in series.segments() {
        let part = &series.samples[seg];
        let ts: Vec<i64> = part.iter().map(|s| s.timestamp).collect();
        let co2: Vec<f64> = part.iter().map(|s| s.co2).collect();
        let base = rolling_median(&ts, &co2, span, 0);
        let mut run: Option<(usize, f64)> = None;
        for i in 0..=ts.len() {
            let excess = (i < ts.len()).then(|| co2[i] - base[i]);
            match (excess, run) {
                (Some(e), None) if e > cfg.threshold_ppm => run = Some((i, e)),
                (Some(e), Some((s, peak))) if e > cfg.threshold_ppm => run = Some((s, peak.max(e))),
                (_, Some((s, peak))) => {
                    let start = ts[s];
                    let end = if i < ts.len() { ts[i] } else { ts[i - 1] + period };
                    if end - start > cfg.min_duration_s {
                        let pre = level(&ts, &co2, start - cfg.level_span_s, start);
                        let post = level(&ts, &co2, end, end + cfg.level_span_s);
                        let cause_hint = match (pre, post) {
                            (Some(a), Some(b)) if b - a > cfg.threshold_ppm => CauseHint::VentilationChange,
                            (Some(_), Some(_)) => CauseHint::Occupancy,
                            _ => CauseHint::Unknown,
                        };
                        out.push(ArtifactWindow { start, end, peak_excursion: peak, cause_hint });
                    }
                    run = None;
                }
                _ => {}
            }
        }
    }
    out
}

fn merge(mut windows: Vec<ArtifactWindow>, gap: i64) -> Vec<ArtifactWindow> {
    windows.sort_by_key(|w| w.start);
    let mut out: Vec<ArtifactWindow> = Vec::new();
    for w in windows {
        match out.last_mut() {
            Some(last) if w.start <= last.end + gap => {
                last.end = last.end.max(w.end);
                if w.peak_excursion > last.peak_excursion {
                    last.peak_excursion = w.peak_excursion;
                }
                if w.cause_hint == CauseHint::VentilationChange || last.cause_hint == CauseHint::Unknown {
                    last.cause_hint = w.cause_hint;
                }
            }
            _ => out.push(w),
        }
    }
    out
}

/// Finds occupancy and ventilation excursions in the reference channels.
///
/// Only `control` and `ambient` are inspected; the plant channel is taken
/// for interface symmetry and never read, so real uptake cannot be
/// mistaken for an artifact.
pub fn detect_artifacts(_plant: &SensorSeries, control: &SensorSeries, ambient: &SensorSeries) -> Vec<ArtifactWindow> {
    detect_artifacts_with(&[control, ambient], &ArtifactConfig::default())
}

/// Excursion windows across any set of reference channels, merged.
pub fn detect_artifacts_with(references: &[&SensorSeries], cfg: &ArtifactConfig) -> Vec<ArtifactWindow> {
    let all = references.iter().filter(|s| !s.is_empty()).flat_map(|s| excursions(s, cfg)).collect();
    merge(all, cfg.merge_gap_s)
}
