use std::fmt;

use serde::{Deserialize, Serialize};

use super::artifacts::ArtifactWindow;
use super::smooth::smooth;
use crate::error::{Error, Result};
use crate::podsim::LightSchedule;
use crate::series::SensorSeries;

const CYCLE_S: i64 = 86_400;

/// Per-cycle summary of a (usually baseline-corrected) CO₂ series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DielMetrics {
    /// 0-based index of the 24 h cycle.
    pub cycle_index: usize,
    pub start: i64,
    pub end: i64,
    /// Summed CO₂ decreases attributed to the photoperiod, ppm.
    pub day_drawdown: f64,
    /// Summed CO₂ decreases attributed to the scotoperiod, ppm.
    pub night_drawdown: f64,
    /// Max minus min of the smoothed CO₂ over the cycle, ppm.
    pub amplitude: f64,
    /// `(day − night)/(day + night)`; `None` when the total drawdown does
    /// not clear the amplitude floor.
    pub day_fraction_index: Option<f64>,
    /// Pearson correlation of RH with −CO₂; `None` if either is constant.
    pub humidity_phase_corr: Option<f64>,
    pub artifact_flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DielConfig {
    /// Median pre-filter width, minutes.
    pub smoothing_min: f64,
    /// Width of the bins whose means are differenced, minutes.
    pub bin_min: i64,
    /// Smallest total drawdown for which D is defined, ppm.
    pub amplitude_floor: f64,
    /// |D| above this gives a pure-pathway label.
    pub d_threshold: f64,
}

impl Default for DielConfig {
    fn default() -> Self {
        DielConfig {
            smoothing_min: 30.0,
            bin_min: 60,
            amplitude_floor: 20.0,
            d_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathwayLabel {
    C3,
    #[serde(rename = "CAM")]
    Cam,
    Mixed,
    Indeterminate,
}

impl fmt::Display for PathwayLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathwayLabel::C3 => "C3",
            PathwayLabel::Cam => "CAM",
            PathwayLabel::Mixed => "Mixed",
            PathwayLabel::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleLabel {
    pub cycle_index: usize,
    pub label: PathwayLabel,
    #[serde(rename = "D")]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    /// Cycle at which the new label first appears.
    pub cycle_index: usize,
    pub from: PathwayLabel,
    pub to: PathwayLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub per_cycle: Vec<CycleLabel>,
    pub overall: PathwayLabel,
    pub confidence: f64,
    pub transitions: Vec<Transition>,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation coefficient, `None` for fewer than two points or a
/// constant input.
pub fn correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    pearson(x, y)
}

/// Start of the first cycle: the first light transition that has at least
/// one full bin of data before it.
fn first_anchor(series: &SensorSeries, schedule: &LightSchedule, bin: i64) -> Option<i64> {
    series.start().map(|s| schedule.next_transition(s + bin))
}

/// Diel metrics with default settings.
pub fn diel_metrics(series: &SensorSeries, schedule: &LightSchedule) -> Result<Vec<DielMetrics>> {
    diel_metrics_with(series, schedule, &DielConfig::default())
}

/// Splits the series into 24 h cycles anchored at a light transition and
/// measures where in each cycle CO₂ is drawn down.
///
/// The CO₂ trace is median-filtered, averaged into bins, and every
/// negative step between consecutive bins is credited to day or night
/// according to the light state at the boundary between the two bins.
/// Steps at the cycle start belong to the cycle, so the transition that
/// anchors a cycle is counted in it.
pub fn diel_metrics_with(series: &SensorSeries, schedule: &LightSchedule, cfg: &DielConfig) -> Result<Vec<DielMetrics>> {
    if series.is_empty() {
        return Err(Error::InsufficientData("series is empty".into()));
    }
    let bin = cfg.bin_min * 60;
    if bin <= 0 || CYCLE_S % bin != 0 {
        return Err(Error::Input("bin width must divide 24 h".into()));
    }
    let smoothed = smooth(series, cfg.smoothing_min)?;
    let ts = smoothed.timestamps();
    let co2 = smoothed.co2();
    let rh = smoothed.rh();
    let end = series.end().unwrap_or_default();
    let period = series.nominal_period().unwrap_or(60);
    let anchor = first_anchor(series, schedule, bin).unwrap_or_default();

    let bins_per_cycle = (CYCLE_S / bin) as usize;
    let mut metrics = Vec::new();
    let mut c0 = anchor;
    while c0 + CYCLE_S - period <= end {
        let c1 = c0 + CYCLE_S;
        // bin j covers [c0 + (j−1)·bin, c0 + j·bin), j = 0 is the bin
        // before the cycle
        let mut sums = vec![(0.0, 0usize); bins_per_cycle + 1];
        let lo = ts.partition_point(|&t| t < c0 - bin);
        let hi = ts.partition_point(|&t| t < c1);
        for i in lo..hi {
            let j = ((ts[i] - (c0 - bin)) / bin) as usize;
            sums[j].0 += co2[i];
            sums[j].1 += 1;
        }
        let means: Vec<Option<f64>> = sums.iter().map(|&(s, n)| (n > 0).then(|| s / n as f64)).collect();
        let (mut day, mut night) = (0.0, 0.0);
        for j in 0..bins_per_cycle {
            let (Some(a), Some(b)) = (means[j], means[j + 1]) else { continue };
            let drop = a - b;
            if drop > 0.0 {
                let boundary = c0 + j as i64 * bin;
                if schedule.is_light(boundary as f64) {
                    day += drop;
                } else {
                    night += drop;
                }
            }
        }
        let cyc_lo = ts.partition_point(|&t| t < c0);
        let cyc_co2 = &co2[cyc_lo..hi];
        let amplitude = cyc_co2.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - cyc_co2.iter().copied().fold(f64::INFINITY, f64::min);
        let neg: Vec<f64> = cyc_co2.iter().map(|c| -c).collect();
        let total = day + night;
        metrics.push(DielMetrics {
            cycle_index: metrics.len(),
            start: c0,
            end: c1,
            day_drawdown: day,
            night_drawdown: night,
            amplitude: if cyc_co2.is_empty() { 0.0 } else { amplitude },
            day_fraction_index: (total > cfg.amplitude_floor).then(|| (day - night) / total),
            humidity_phase_corr: pearson(&rh[cyc_lo..hi], &neg),
            artifact_flagged: false,
        });
        c0 = c1;
    }
    if metrics.is_empty() {
        return Err(Error::InsufficientData("series is shorter than one complete light cycle".into()));
    }
    Ok(metrics)
}

/// Marks every cycle that overlaps an artifact window.
pub fn flag_artifact_cycles(metrics: &mut [DielMetrics], windows: &[ArtifactWindow]) {
    for m in metrics {
        m.artifact_flagged = windows.iter().any(|w| w.overlaps(m.start, m.end));
    }
}

pub fn label_cycle(m: &DielMetrics, cfg: &DielConfig) -> PathwayLabel {
    match m.day_fraction_index {
        _ if m.artifact_flagged => PathwayLabel::Indeterminate,
        None => PathwayLabel::Indeterminate,
        Some(d) if d > cfg.d_threshold => PathwayLabel::C3,
        Some(d) if d < -cfg.d_threshold => PathwayLabel::Cam,
        Some(_) => PathwayLabel::Mixed,
    }
}

/// Classification with default thresholds.
pub fn classify(metrics: &[DielMetrics]) -> ClassificationResult {
    classify_with(metrics, &DielConfig::default())
}

/// Labels each cycle and takes the majority of the classifiable ones.
///
/// A tie for the majority resolves to the tied label seen most recently.
/// Transitions are recorded between consecutive classifiable cycles, so an
/// Indeterminate cycle never starts or ends one.
pub fn classify_with(metrics: &[DielMetrics], cfg: &DielConfig) -> ClassificationResult {
    let per_cycle: Vec<CycleLabel> = metrics
        .iter()
        .map(|m| CycleLabel {
            cycle_index: m.cycle_index,
            label: label_cycle(m, cfg),
            d: m.day_fraction_index,
        })
        .collect();
    let decided: Vec<&CycleLabel> = per_cycle.iter().filter(|c| c.label != PathwayLabel::Indeterminate).collect();
    if decided.is_empty() {
        return ClassificationResult {
            per_cycle,
            overall: PathwayLabel::Indeterminate,
            confidence: 0.0,
            transitions: Vec::new(),
        };
    }
    let count = |l: PathwayLabel| decided.iter().filter(|c| c.label == l).count();
    let last_seen = |l: PathwayLabel| decided.iter().rposition(|c| c.label == l);
    let overall = [PathwayLabel::C3, PathwayLabel::Cam, PathwayLabel::Mixed]
        .into_iter()
        .max_by_key(|&l| (count(l), last_seen(l)))
        .expect("three candidates");
    let transitions = decided
        .windows(2)
        .filter(|w| w[0].label != w[1].label)
        .map(|w| Transition {
            cycle_index: w[1].cycle_index,
            from: w[0].label,
            to: w[1].label,
        })
        .collect();
    ClassificationResult {
        confidence: count(overall) as f64 / decided.len() as f64,
        per_cycle,
        overall,
        transitions,
    }
}

/// Entrainment lag with default settings.
pub fn entrainment_lag(series: &SensorSeries, schedule: &LightSchedule) -> Result<usize> {
    entrainment_lag_with(series, schedule, &DielConfig::default())
}

/// Cycles after the first photoperiod inversion whose label disagrees with
/// the steady pre-inversion label, counted up to the first cycle that
/// agrees again. A cycle straddling the inversion counts if it already
/// disagrees, but agreeing with the steady label does not end the count
/// there, since most of it may precede the inversion. Indeterminate cycles
/// carry no evidence either way and are skipped; an inversion that
/// stretches one light period to 24 h leaves such a cycle with no drawdown
/// at all.
pub fn entrainment_lag_with(series: &SensorSeries, schedule: &LightSchedule, cfg: &DielConfig) -> Result<usize> {
    let Some(inv) = schedule.inversion_events.first() else {
        return Err(Error::Input("schedule has no inversion event".into()));
    };
    let metrics = diel_metrics_with(series, schedule, cfg)?;
    let result = classify_with(&metrics, cfg);
    let pre: Vec<_> = metrics
        .iter()
        .zip(&result.per_cycle)
        .filter(|(m, _)| m.end <= inv.timestamp)
        .map(|(m, _)| *m)
        .collect();
    let steady = classify_with(&pre, cfg).overall;
    if steady == PathwayLabel::Indeterminate {
        return Err(Error::InsufficientData("no classifiable cycle before the inversion".into()));
    }
    let post: Vec<PathwayLabel> = metrics
        .iter()
        .zip(&result.per_cycle)
        .filter(|(m, c)| m.end > inv.timestamp && c.label != PathwayLabel::Indeterminate)
        .filter(|(m, c)| m.start >= inv.timestamp || c.label != steady)
        .map(|(_, c)| c.label)
        .collect();
    if post.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 classifiable cycles after the inversion, have {}",
            post.len()
        )));
    }
    Ok(post.iter().take_while(|&&l| l != steady).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Sample;

    fn metric(i: usize, d: Option<f64>) -> DielMetrics {
        DielMetrics {
            cycle_index: i,
            start: i as i64 * CYCLE_S,
            end: (i as i64 + 1) * CYCLE_S,
            day_drawdown: 0.0,
            night_drawdown: 0.0,
            amplitude: 0.0,
            day_fraction_index: d,
            humidity_phase_corr: None,
            artifact_flagged: false,
        }
    }

    /// A synthetic corrected trace: drawdown ramps within the chosen half
    /// of the day, recovery ramps in the other.
    fn synthetic(days: i64, f: impl Fn(f64) -> f64) -> SensorSeries {
        SensorSeries::new(
            "syn",
            (0..=days * 1440)
                .map(|i| {
                    let t = 36_000 + i * 60;
                    Sample { timestamp: t, co2: f(t as f64), rh: 50.0 - 0.05 * f(t as f64), temp: 22.0 }
                })
                .collect(),
        )
    }

    fn c3_shape(t: f64) -> f64 {
        // lights 10–22: falls by 80 ppm over the day, recovers at night
        let h = (t / 3600.0).rem_euclid(24.0);
        if (10.0..22.0).contains(&h) {
            -80.0 * (h - 10.0) / 12.0
        } else {
            -80.0 + 80.0 * ((h - 22.0).rem_euclid(24.0)) / 12.0
        }
    }

    #[test]
    fn unanimous_c3() {
        let m: Vec<_> = [0.8, 0.9, 0.7].iter().enumerate().map(|(i, &d)| metric(i, Some(d))).collect();
        let r = classify(&m);
        assert_eq!(r.overall, PathwayLabel::C3);
        assert_eq!(r.confidence, 1.0);
        assert!(r.transitions.is_empty());
    }

    #[test]
    fn nothing_classifiable() {
        let r = classify(&[metric(0, None), metric(1, None)]);
        assert_eq!(r.overall, PathwayLabel::Indeterminate);
        assert_eq!(r.confidence, 0.0);
    }

    #[test]
    fn transitions_skip_indeterminate() {
        let m = vec![metric(0, Some(-0.9)), metric(1, None), metric(2, Some(0.1)), metric(3, Some(0.0))];
        let r = classify(&m);
        assert_eq!(r.transitions, vec![Transition { cycle_index: 2, from: PathwayLabel::Cam, to: PathwayLabel::Mixed }]);
        // tie (1 vs 2 is no tie) -> Mixed wins with two cycles
        assert_eq!(r.overall, PathwayLabel::Mixed);
        assert!((r.confidence - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn flagged_cycles_are_indeterminate() {
        let mut m = metric(0, Some(0.9));
        m.artifact_flagged = true;
        assert_eq!(label_cycle(&m, &DielConfig::default()), PathwayLabel::Indeterminate);
    }

    #[test]
    fn flat_series_below_floor() {
        let s = synthetic(3, |_| 0.0);
        let m = diel_metrics(&s, &LightSchedule::artificial(10.0, 22.0, 1000.0)).unwrap();
        assert!(!m.is_empty());
        for x in &m {
            assert_eq!(x.day_drawdown, 0.0);
            assert_eq!(x.night_drawdown, 0.0);
            assert_eq!(x.day_fraction_index, None);
        }
        assert_eq!(classify(&m).overall, PathwayLabel::Indeterminate);
    }

    #[test]
    fn too_short_is_error() {
        let s = synthetic(0, |_| 0.0);
        assert!(diel_metrics(&s, &LightSchedule::artificial(10.0, 22.0, 1000.0)).is_err());
    }

    #[test]
    fn synthetic_c3_shape() {
        let sched = LightSchedule::artificial(10.0, 22.0, 1000.0);
        let m = diel_metrics(&synthetic(4, c3_shape), &sched).unwrap();
        assert_eq!(m.len(), 3);
        for x in &m {
            assert!(x.day_fraction_index.unwrap() > 0.9, "{x:?}");
            // the median filter rounds off the sharp minimum slightly
            assert!((x.amplitude - 80.0).abs() < 3.0, "{}", x.amplitude);
            assert!(x.humidity_phase_corr.unwrap() > 0.99);
        }
    }

    #[test]
    fn swapping_day_and_night_negates_d() {
        let sched = LightSchedule::artificial(10.0, 22.0, 1000.0);
        let s = synthetic(5, |t| c3_shape(t) + 7.0 * (t / 5000.0).sin());
        let a = diel_metrics(&s, &sched).unwrap();
        let b = diel_metrics(&s, &sched.swapped()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.start, y.start);
            assert_eq!(x.day_fraction_index.map(|d| -d), y.day_fraction_index);
        }
    }

    #[test]
    fn scaling_leaves_labels_unchanged() {
        let sched = LightSchedule::artificial(10.0, 22.0, 1000.0);
        let base = synthetic(4, |t| c3_shape(t) * 0.4 + 10.0 * (t / 9000.0).cos());
        let mut scaled = base.clone();
        for s in &mut scaled.samples {
            s.co2 *= 3.5;
        }
        let a = classify(&diel_metrics(&base, &sched).unwrap());
        let b = classify(&diel_metrics(&scaled, &sched).unwrap());
        assert_eq!(a.overall, b.overall);
        for (x, y) in a.per_cycle.iter().zip(&b.per_cycle) {
            assert_eq!(x.label, y.label);
            assert!((x.d.unwrap() - y.d.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn lag_needs_inversion() {
        let s = synthetic(4, c3_shape);
        assert!(entrainment_lag(&s, &LightSchedule::artificial(10.0, 22.0, 1000.0)).is_err());
    }
}
