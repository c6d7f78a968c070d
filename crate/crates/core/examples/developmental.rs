//! Sweeps leaf maturity of a developmental plant from young (C3) to old
//! (CAM) and prints the resulting pathway label.

use phytosim::analysis::{classify_pipeline, DielConfig};
use phytosim::podsim::{simulate, PlantKind, PresetId, ScenarioTemplate};

fn main() -> phytosim::Result<()> {
    for maturity in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let sc = ScenarioTemplate {
            maturity: Some(maturity),
            duration_days: Some(5.0),
            ..ScenarioTemplate::new(PresetId::Env3, PlantKind::Developmental)
        }
        .build()?;
        let out = simulate(&sc)?;
        let (metrics, _, result) = classify_pipeline(&out.plant, &out.control, None, &sc.schedule, &DielConfig::default())?;
        let d: Vec<f64> = metrics.iter().filter_map(|m| m.day_fraction_index).collect();
        let mean = d.iter().sum::<f64>() / d.len().max(1) as f64;
        println!("maturity {maturity:.2}: {} (mean D {mean:+.2})", result.overall);
    }
    Ok(())
}
