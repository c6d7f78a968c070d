//! Samples a CAM leaf before dawn and before dusk, converts titrant
//! volumes to malic acid and reports the overnight accumulation.

use phytosim::groundtruth::{dawn_dusk_delta, malic_acid_percent, synthesize_titrations, TitrationSampling};
use phytosim::podsim::{simulate, PlantKind, PresetId, ScenarioTemplate};

fn main() -> phytosim::Result<()> {
    let sc = ScenarioTemplate { duration_days: Some(4.0), ..ScenarioTemplate::new(PresetId::Env1, PlantKind::ObligateCam) }.build()?;
    let out = simulate(&sc)?;
    let records = synthesize_titrations(&out.trace, &sc.schedule, &sc.leaf, &TitrationSampling::default());
    for r in &records {
        println!("t {} {:<4} V {:.2} mL -> {:.4} % malic acid", r.sample_time, r.phase, r.v_naoh * 1e3, malic_acid_percent(r)?.percent);
    }
    let report = dawn_dusk_delta(&records)?;
    for d in &report.days {
        println!("{}: dawn {:.4} %, dusk {:.4} %, delta {:+.4} %", d.day, d.dawn_percent, d.dusk_percent, d.delta);
    }
    Ok(())
}
