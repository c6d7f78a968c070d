//! Runs the classification pipeline on a C3 leaf and an obligate CAM leaf.

use phytosim::analysis::{classify_pipeline, DielConfig};
use phytosim::podsim::{simulate, PlantKind, PresetId, ScenarioTemplate};

fn main() -> phytosim::Result<()> {
    for plant in [PlantKind::C3, PlantKind::ObligateCam] {
        let sc = ScenarioTemplate::new(PresetId::Env2, plant).build()?;
        let out = simulate(&sc)?;
        let (metrics, _, result) =
            classify_pipeline(&out.plant, &out.control, Some(&out.ambient), &sc.schedule, &DielConfig::default())?;
        let d: Vec<String> = metrics
            .iter()
            .map(|m| m.day_fraction_index.map_or("-".into(), |d| format!("{d:+.2}")))
            .collect();
        println!("{plant:?}: {} (confidence {:.2}), D per cycle [{}]", result.overall, result.confidence, d.join(" "));
    }
    Ok(())
}
