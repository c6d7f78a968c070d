//! Signal conditioning, diel metrics, pathway classification, artifact
//! detection and leak calibration.

mod artifacts;
mod diel;
mod leak;
mod smooth;

pub use artifacts::{detect_artifacts, detect_artifacts_with, ArtifactConfig, ArtifactWindow, CauseHint};
pub use diel::{
    classify, classify_with, correlation, diel_metrics, diel_metrics_with, entrainment_lag, entrainment_lag_with,
    flag_artifact_cycles, label_cycle, ClassificationResult, CycleLabel, DielConfig, DielMetrics, PathwayLabel,
    Transition,
};
pub use leak::{fit_leak_decay, LeakFit, MIN_EXCESS_PPM, R_SQUARED_WARNING};
pub use smooth::smooth;

use crate::error::{Error, Result};
use crate::ingest::align;
use crate::series::{Sample, SensorSeries};

/// Plant-minus-control CO₂ on a common grid. RH and temperature come from
/// the plant pod unchanged, since an empty pod has no humidity source.
pub fn baseline_correct(plant: &SensorSeries, control: &SensorSeries) -> Result<SensorSeries> {
    let (p, c) = if plant.timestamps() == control.timestamps() {
        (plant.clone(), control.clone())
    } else {
        let mut aligned = align(&[plant.clone(), control.clone()])?;
        let c = aligned.pop().expect("two series");
        (aligned.pop().expect("two series"), c)
    };
    if p.timestamps() != c.timestamps() {
        return Err(Error::Input("plant and control grids differ after alignment".into()));
    }
    let mut gap_markers = p.gap_markers.clone();
    gap_markers.extend(c.gap_markers.iter().copied());
    gap_markers.sort_unstable();
    gap_markers.dedup();
    Ok(SensorSeries {
        channel_id: format!("{}-corrected", plant.channel_id),
        samples: p
            .samples
            .iter()
            .zip(&c.samples)
            .map(|(a, b)| Sample { co2: a.co2 - b.co2, ..*a })
            .collect(),
        gap_markers,
        corrected: true,
    })
}

/// The standard pipeline: baseline correction, artifact flagging against
/// the control (and ambient, if given), diel metrics and classification.
pub fn classify_pipeline(
    plant: &SensorSeries,
    control: &SensorSeries,
    ambient: Option<&SensorSeries>,
    schedule: &crate::podsim::LightSchedule,
    cfg: &DielConfig,
) -> Result<(Vec<DielMetrics>, Vec<ArtifactWindow>, ClassificationResult)> {
    let corrected = baseline_correct(plant, control)?;
    let mut metrics = diel_metrics_with(&corrected, schedule, cfg)?;
    let mut refs = vec![control];
    refs.extend(ambient);
    let windows = detect_artifacts_with(&refs, &ArtifactConfig::default());
    flag_artifact_cycles(&mut metrics, &windows);
    let result = classify_with(&metrics, cfg);
    Ok((metrics, windows, result))
}
