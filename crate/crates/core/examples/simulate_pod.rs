//! Simulates a C3 leaf in a tied pod for three days and prints the
//! nightly CO₂ plateau against the control pod.

use phytosim::podsim::{simulate, PlantKind, PresetId, ScenarioTemplate};

fn main() -> phytosim::Result<()> {
    let sc = ScenarioTemplate { duration_days: Some(3.0), ..ScenarioTemplate::new(PresetId::Env1, PlantKind::C3) }.build()?;
    let out = simulate(&sc)?;
    println!("{} samples per channel, dt = {} s", out.plant.len(), sc.dt);
    for day in 0..3 {
        // two hours before lights-on, deep in the night
        let t = sc.start_time_s + day * 86_400 + 22 * 3600;
        let i = out.plant.samples.partition_point(|s| s.timestamp < t);
        println!(
            "night {day}: plant {:.1} ppm, control {:.1} ppm, ambient {:.1} ppm",
            out.plant.samples[i].co2, out.control.samples[i].co2, out.ambient.samples[i].co2
        );
    }
    Ok(())
}
