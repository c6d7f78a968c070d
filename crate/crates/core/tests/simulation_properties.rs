use phytosim::analysis::{
    baseline_correct, classify, classify_pipeline, diel_metrics, correlation, fit_leak_decay, DielConfig,
};
use phytosim::podsim::{simulate, OccupancySpec, PlantKind, PresetId, ScenarioTemplate};

fn template(plant: PlantKind) -> ScenarioTemplate {
    ScenarioTemplate::new(PresetId::Env1, plant)
}

#[test]
fn inert_leaf_corrects_to_zero() {
    let mut sc = ScenarioTemplate { duration_days: Some(3.0), ..template(PlantKind::C3) }.build().unwrap();
    sc.leaf.a_max = 0.0;
    sc.leaf.r_dark = 0.0;
    sc.leaf.e_max = 0.0;
    let out = simulate(&sc).unwrap();
    let corrected = baseline_correct(&out.plant, &out.control).unwrap();
    let n = corrected.len() as f64;
    let mean = corrected.co2().iter().sum::<f64>() / n;
    // the difference of two independent noisy channels has sd √2·σ
    let bound = 3.0 * std::f64::consts::SQRT_2 * sc.noise_co2_sd / n.sqrt();
    assert!(mean.abs() < bound, "{mean} vs {bound}");
    let metrics = diel_metrics(&corrected, &sc.schedule).unwrap();
    assert_eq!(classify(&metrics).overall, phytosim::analysis::PathwayLabel::Indeterminate);
}

#[test]
fn leaf_removal_decay_matches_leak_rate() {
    let sc = ScenarioTemplate { duration_days: Some(1.0), noise: Some(false), leaf_removal_h: Some(6.0), ..template(PlantKind::C3) }
        .build()
        .unwrap();
    let out = simulate(&sc).unwrap();
    let removal = sc.leaf_removal_s.unwrap();
    let decay = phytosim::SensorSeries::new(
        "decay",
        out.plant.samples.iter().filter(|s| s.timestamp >= removal).copied().collect(),
    );
    let fit = fit_leak_decay(&decay, sc.environment.co2_baseline, sc.pod.volume).unwrap();
    let k = sc.pod.leak_conductance / sc.pod.volume;
    assert!((fit.k - k).abs() / k < 0.02);
    assert!((fit.g_leak - sc.pod.leak_conductance).abs() / sc.pod.leak_conductance < 0.02);
}

#[test]
fn flagged_cycles_never_flip_the_overall_label() {
    for plant in [PlantKind::C3, PlantKind::ObligateCam] {
        let occupancy = vec![
            OccupancySpec { start_h: 30.0, duration_h: 2.0, persons: 5 },
            OccupancySpec { start_h: 80.0, duration_h: 3.0, persons: 8 },
        ];
        let sc = ScenarioTemplate { ventilated: Some(false), occupancy, ..template(plant) }.build().unwrap();
        let out = simulate(&sc).unwrap();
        let (metrics, windows, result) =
            classify_pipeline(&out.plant, &out.control, Some(&out.ambient), &sc.schedule, &DielConfig::default()).unwrap();
        assert!(!windows.is_empty());
        let kept: Vec<_> = metrics.iter().filter(|m| !m.artifact_flagged).cloned().collect();
        assert!(kept.len() < metrics.len());
        let reference = classify(&kept);
        assert_eq!(reference.overall, result.overall, "{plant:?}");
        assert_eq!(reference.transitions, result.transitions);
    }
}

/// First-order low-pass of the ambient trace with rate g/V, stepped on
/// the 60 s sample grid with the exact exponential update.
fn low_pass(ambient: &[f64], k: f64, dt: f64, start: f64) -> Vec<f64> {
    let a = (-k * dt).exp();
    let mut y = start;
    let mut out = vec![y];
    for w in ambient.windows(2) {
        // linear interpolation of the input over the step
        let (u0, u1) = (w[0], w[1]);
        let slope = (u1 - u0) / dt;
        y = u1 - slope / k + (y - u0 + slope / k) * a;
        out.push(y);
    }
    out
}

#[test]
fn control_pod_is_low_passed_ambient() {
    let occupancy = vec![
        OccupancySpec { start_h: 5.0, duration_h: 2.0, persons: 5 },
        OccupancySpec { start_h: 30.0, duration_h: 4.0, persons: 3 },
    ];
    let sc = ScenarioTemplate { duration_days: Some(3.0), noise: Some(false), ventilated: Some(false), occupancy, ..template(PlantKind::C3) }
        .build()
        .unwrap();
    let out = simulate(&sc).unwrap();
    let amb = out.ambient.co2();
    let ctl = out.control.co2();
    let k = sc.control_pod.leak_conductance / sc.control_pod.volume;
    let oracle = low_pass(&amb, k, 60.0, ctl[0]);
    let worst = oracle.iter().zip(&ctl).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let excursion = amb.iter().fold(0.0f64, |m, c| m.max(c - sc.environment.co2_baseline));
    assert!(worst < 0.01 * excursion, "{worst} vs excursion {excursion}");

    // the control lags the room: cross-correlation peaks at a positive lag
    // of the order of the pod time constant
    let tau_samples = (1.0 / k / 60.0).round() as usize;
    let best = (0..3 * tau_samples)
        .max_by(|&a, &b| {
            let r = |lag: usize| correlation(&amb[..amb.len() - lag], &ctl[lag..]).unwrap_or(-1.0);
            r(a).total_cmp(&r(b))
        })
        .unwrap();
    assert!(best > 0 && best < 2 * tau_samples, "peak lag {best} samples, tau {tau_samples}");
}

#[test]
fn cam_lag_is_one_cycle_for_inversions_at_light_transitions_and_mid_day() {
    // 16:00 mid-photoperiod, 22:00 lights-off, 10:00 lights-on
    for day in [3.25, 3.5, 4.0] {
        for (plant, expected) in [(PlantKind::C3, 0), (PlantKind::ObligateCam, 1)] {
            let sc = ScenarioTemplate { duration_days: Some(8.0), inversion_days: vec![day], ..template(plant) }
                .build()
                .unwrap();
            let out = simulate(&sc).unwrap();
            let corrected = baseline_correct(&out.plant, &out.control).unwrap();
            let lag = phytosim::analysis::entrainment_lag(&corrected, &sc.schedule).unwrap();
            assert_eq!(lag, expected, "{plant:?} inverted at day {day}");
        }
    }
}
