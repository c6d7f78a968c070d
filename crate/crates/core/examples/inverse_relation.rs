//! Checks that pod CO₂ falls while a reference gas-exchange instrument
//! reports uptake, using a parafilm-sealed C3 leaf.

use phytosim::groundtruth::{synthesize_ground_truth, validate_inverse_relation};
use phytosim::podsim::{simulate, PlantKind, PresetId, ScenarioTemplate, Seal};

fn main() -> phytosim::Result<()> {
    let sc = ScenarioTemplate {
        duration_days: Some(2.0),
        seal: Some(Seal::Parafilm),
        ..ScenarioTemplate::new(PresetId::Env1, PlantKind::C3)
    }
    .build()?;
    let out = simulate(&sc)?;
    let gt = synthesize_ground_truth(&out.trace, &sc.leaf, 300);
    let relation = validate_inverse_relation(&gt, &out.plant)?;
    println!("{relation} over {} pairs, {:.1} h overlap", relation.pairs, relation.overlap_s as f64 / 3600.0);
    Ok(())
}
