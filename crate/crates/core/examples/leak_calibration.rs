//! Injects CO₂ into an empty pod and recovers its leak conductance from
//! the exponential decay back to room level.

use phytosim::analysis::fit_leak_decay;
use phytosim::podsim::{simulate, PlantKind, PresetId, ScenarioTemplate, Seal};

fn main() -> phytosim::Result<()> {
    for seal in [Seal::Tied, Seal::Parafilm] {
        let mut sc = ScenarioTemplate {
            duration_days: Some(0.5),
            seal: Some(seal),
            initial_pod_co2: Some(2000.0),
            ..ScenarioTemplate::new(PresetId::Env1, PlantKind::C3)
        }
        .build()?;
        // an empty pod: the leaf is gone from the first step
        sc.leaf_removal_s = Some(sc.start_time_s);
        let out = simulate(&sc)?;
        let fit = fit_leak_decay(&out.plant, sc.environment.co2_baseline, sc.pod.volume)?;
        println!(
            "{seal:?}: g_leak {:.3} cm3/s (true {:.3}), tau {:.0} min, r2 {:.4}",
            fit.g_leak,
            sc.pod.leak_conductance,
            1.0 / fit.k / 60.0,
            fit.r_squared
        );
    }
    Ok(())
}
