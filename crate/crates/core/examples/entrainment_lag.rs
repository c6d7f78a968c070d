//! Swaps day and night at several times of day and counts how many cycles
//! each pathway needs before its label recovers.

use phytosim::analysis::{baseline_correct, entrainment_lag};
use phytosim::podsim::{simulate, PlantKind, PresetId, ScenarioTemplate};

fn main() -> phytosim::Result<()> {
    for day in [3.25, 3.5, 3.75, 4.0] {
        let mut lags = Vec::new();
        for plant in [PlantKind::C3, PlantKind::ObligateCam] {
            let sc = ScenarioTemplate {
                duration_days: Some(8.0),
                inversion_days: vec![day],
                ..ScenarioTemplate::new(PresetId::Env1, plant)
            }
            .build()?;
            let out = simulate(&sc)?;
            let corrected = baseline_correct(&out.plant, &out.control)?;
            lags.push(entrainment_lag(&corrected, &sc.schedule)?);
        }
        println!("inversion at day {day}: C3 lag {} cycle(s), CAM lag {} cycle(s)", lags[0], lags[1]);
    }
    Ok(())
}
