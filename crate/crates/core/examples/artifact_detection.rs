//! A crowded unventilated room raises CO₂ in every pod. The excursion is
//! detected on the control channel and the affected cycles are excluded.

use phytosim::analysis::{classify_pipeline, DielConfig};
use phytosim::podsim::{simulate, OccupancySpec, PlantKind, PresetId, ScenarioTemplate};

fn main() -> phytosim::Result<()> {
    let sc = ScenarioTemplate {
        ventilated: Some(false),
        occupancy: vec![OccupancySpec { start_h: 30.0, duration_h: 2.0, persons: 5 }],
        ..ScenarioTemplate::new(PresetId::Env1, PlantKind::ObligateCam)
    }
    .build()?;
    let out = simulate(&sc)?;
    let (metrics, windows, result) =
        classify_pipeline(&out.plant, &out.control, Some(&out.ambient), &sc.schedule, &DielConfig::default())?;
    for w in &windows {
        println!(
            "window +{:.1} h .. +{:.1} h, peak {:.0} ppm, cause {:?}",
            (w.start - sc.start_time_s) as f64 / 3600.0,
            (w.end - sc.start_time_s) as f64 / 3600.0,
            w.peak_excursion,
            w.cause_hint
        );
    }
    let flagged: Vec<usize> = metrics.iter().filter(|m| m.artifact_flagged).map(|m| m.cycle_index).collect();
    println!("flagged cycles {flagged:?}; overall {}", result.overall);
    Ok(())
}
