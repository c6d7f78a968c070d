//! A drought-stressed facultative CAM leaf is watered on day 5 and relaxes
//! toward C3, which shows up as a transition in the per-cycle labels.

use phytosim::analysis::{classify_pipeline, DielConfig};
use phytosim::podsim::{load_scenario, simulate};

const SCENARIO: &str = r#"{
    "preset": "env1", "plant": "facultative_cam", "duration_days": 12,
    "initial_soil_water": 0, "initial_cam_weight": 1, "watering_days": [5]
}"#;

fn main() -> phytosim::Result<()> {
    let sc = load_scenario(SCENARIO)?;
    let out = simulate(&sc)?;
    let (_, _, result) = classify_pipeline(&out.plant, &out.control, None, &sc.schedule, &DielConfig::default())?;
    for c in &result.per_cycle {
        let weight = out.trace.iter().find(|r| r.timestamp >= sc.start_time_s + c.cycle_index as i64 * 86_400);
        println!(
            "cycle {:>2}: {:<13} D {:>6}  CAM weight {:.2}",
            c.cycle_index,
            c.label.to_string(),
            c.d.map_or("-".into(), |d| format!("{d:+.2}")),
            weight.map_or(f64::NAN, |r| r.state.cam_weight)
        );
    }
    for t in &result.transitions {
        println!("transition at cycle {}: {} -> {}", t.cycle_index, t.from, t.to);
    }
    Ok(())
}
