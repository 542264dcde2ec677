mod common;

use pdeguard_core::backstepping::{transform, BacksteppingKernel, Direction, KernelParams};
use pdeguard_core::detector::{
    calibrate_threshold, co_simulate, detect, evaluate_requirements, h_norm, log_slope, DetectorSettings, FdGrid,
    Profile, Scenario, Signal, SimulationTrace, TraceRecord, Uncertainty, TRACE_HEADER,
};
use pdeguard_core::lmi::{DesignCertificate, InitialBounds};
use pdeguard_core::Error;
use proptest::prelude::*;

fn nominal(horizon: f64) -> Scenario {
    let mut s = Scenario::quiescent(3.0, -1.0, horizon);
    s.initial = Profile::Constant { value: 1.0 };
    s.record_every = 10;
    s
}

fn certificate(grid_nodes: usize) -> DesignCertificate {
    let params = common::reference_params();
    let k = BacksteppingKernel::new(KernelParams::new(params.c, params.alpha).unwrap()).unwrap();
    let psi0 = transform(&vec![1.0; grid_nodes], &k, Direction::ToTarget).unwrap();
    let bounds = InitialBounds::from_profile(&psi0, 1e-6).unwrap();
    DesignCertificate::evaluate(&params, &bounds).unwrap()
}

fn synthetic(residuals: &[f64]) -> SimulationTrace {
    SimulationTrace {
        records: residuals
            .iter()
            .enumerate()
            .map(|(i, &r)| TraceRecord {
                t: i as f64 * 0.1,
                y: r,
                yhat: 0.0,
                r,
                psi1: r,
                w: 0.0,
                norm_u: 0.0,
                norm_ux: 0.0,
                norm_eta_h: 0.0,
                delta: 0.0,
                flag: false,
            })
            .collect(),
        attack_dist_h_sq: 0.0,
    }
}

#[test]
fn energy_decays_and_boundary_error_matches_target_state() {
    let grid = FdGrid::new(201, 1e-4).unwrap();
    let trace = co_simulate(&nominal(2.0), &grid).unwrap();
    let recs = &trace.records;
    for w in recs[3..].windows(2) {
        assert!(w[1].w <= w[0].w * (1.0 + 1e-9), "W grew at t = {}", w[1].t);
    }
    let t: Vec<f64> = recs[3..].iter().map(|r| r.t).collect();
    let w: Vec<f64> = recs[3..].iter().map(|r| r.w).collect();
    assert!(log_slope(&t, &w).unwrap() <= -2.0 * 3.0 * 0.85);
    let scale = recs.iter().fold(0.0f64, |m, r| m.max(r.r.abs()));
    for r in recs {
        assert!((r.psi1 - r.r).abs() <= 1e-12 * scale.max(1e-300), "t = {}", r.t);
    }
}

#[test]
fn certified_requirements_hold_on_clean_runs() {
    let grid = FdGrid::new(201, 1e-4).unwrap();
    let cert = certificate(201);
    let nominal_report = evaluate_requirements(&co_simulate(&nominal(2.0), &grid).unwrap(), &cert).unwrap();
    assert!(nominal_report.exponential_decay.holds, "{nominal_report:?}");
    assert!(nominal_report.input_to_state.holds);

    let mut attacked = nominal(2.0);
    attacked.input_dist = Profile::Constant { value: 1.0 };
    attacked.attack_dist = Profile::Constant { value: 1.0 };
    attacked.attack = Signal::Sine {
        amplitude: 0.5,
        frequency: 1.0,
    };
    let report = evaluate_requirements(&co_simulate(&attacked, &grid).unwrap(), &cert).unwrap();
    assert!(report.input_to_state.holds, "{report:?}");

    let mut noisy = nominal(2.0);
    noisy.uncertainty = Uncertainty::seeded(1e-3, 7);
    let report = evaluate_requirements(&co_simulate(&noisy, &grid).unwrap(), &cert).unwrap();
    assert!(report.input_to_state.holds, "{report:?}");
    assert!(report.robustness.holds, "{report:?}");
}

#[test]
fn calibration_is_deterministic_and_linear_in_amplitude() {
    let grid = FdGrid::new(101, 1e-3).unwrap();
    let mut s = Scenario::quiescent(3.0, -1.0, 2.0);
    s.record_every = 10;
    s.attack_dist = Profile::Constant { value: 1.0 };
    s.input_dist = Profile::Constant { value: 1.0 };
    s.attack = Signal::Constant { value: 5.0 };
    s.uncertainty = Uncertainty::seeded(1e-4, 3);
    let settings = DetectorSettings::default();
    let a = calibrate_threshold(&s, 4, &grid, &settings).unwrap();
    let b = calibrate_threshold(&s, 4, &grid, &settings).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seeds, vec![3, 4, 5, 6]);
    assert!((a.threshold - 1.1 * a.peak).abs() <= 1e-15 * a.threshold);

    // The attack is dropped for calibration, and with zero initial error the
    // residual is linear in the noise.
    let mut louder = s.clone();
    louder.uncertainty.amplitude = 2e-4;
    let c = calibrate_threshold(&louder, 4, &grid, &settings).unwrap();
    assert!((c.threshold - 2.0 * a.threshold).abs() <= 1e-9 * c.threshold);
}

#[test]
fn distinct_seeds_give_distinct_noise() {
    let grid = FdGrid::new(101, 1e-3).unwrap();
    let mut s = Scenario::quiescent(3.0, -1.0, 0.5);
    s.uncertainty = Uncertainty::seeded(1e-3, 1);
    let a = co_simulate(&s, &grid).unwrap();
    let b = co_simulate(&s.with_seed(2), &grid).unwrap();
    let a2 = co_simulate(&s, &grid).unwrap();
    assert_eq!(a, a2);
    assert_ne!(a.residuals(), b.residuals());
}

#[test]
fn trace_csv_round_trips_and_reports_missing_channels() {
    let dir = tempfile::tempdir().unwrap();
    let grid = FdGrid::new(101, 1e-3).unwrap();
    let mut s = nominal(0.5);
    s.uncertainty = Uncertainty::seeded(1e-3, 11);
    let mut trace = co_simulate(&s, &grid).unwrap();
    trace.mark(&detect(&trace, 0.0, &DetectorSettings::raw()));
    assert_eq!(trace.records.iter().filter(|r| r.flag).count(), 1);

    let path = dir.path().join("trace.csv");
    trace.write_csv(&path).unwrap();
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_HEADER.to_vec());
    let back = SimulationTrace::read_csv(&path, trace.attack_dist_h_sq).unwrap();
    assert_eq!(back, trace);

    let text = std::fs::read_to_string(&path).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(4);
            f.join(",") + "\n"
        })
        .collect();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, stripped).unwrap();
    assert!(matches!(SimulationTrace::read_csv(&bad, 0.0), Err(Error::MissingChannel("psi1"))));
}

#[test]
fn unstable_plant_is_reported_as_divergence() {
    let mut s = Scenario::quiescent(3.0, 50.0, 2.0);
    s.initial = Profile::Constant { value: 1.0 };
    let err = co_simulate(&s, &FdGrid::new(101, 1e-3).unwrap()).unwrap_err();
    match err {
        Error::Divergence { t, magnitude } => {
            assert!(t > 0.0 && t < 2.0);
            assert!(magnitude > 1e12);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn scenario_validation() {
    let grid = FdGrid::new(101, 1e-3).unwrap();
    let mut s = Scenario::quiescent(3.0, -1.0, 1.0);
    s.attack_dist = Profile::Constant { value: 1.0 };
    s.input_dist = Profile::Polynomial { coeffs: vec![0.0, 1.0] };
    assert!(matches!(co_simulate(&s, &grid), Err(Error::InvalidParameter(_))));

    let mut s = Scenario::quiescent(3.0, -1.0, 1.0);
    s.uncertainty.amplitude = 1e-3;
    assert!(co_simulate(&s, &grid).is_err());

    assert!(matches!(FdGrid::new(50, 1e-3), Err(Error::GridTooCoarse(_))));
    assert!(co_simulate(&Scenario::quiescent(0.0, -1.0, 1.0), &grid).is_err());
    assert!(co_simulate(&Scenario::quiescent(3.0, -1.0, 1e-4), &grid).is_err());
}

#[test]
fn quiescent_system_stays_at_rest() {
    let trace = co_simulate(&Scenario::quiescent(3.0, -1.0, 0.5), &FdGrid::new(51, 1e-2).unwrap()).unwrap();
    assert_eq!(trace.records.len(), 51);
    assert!(trace.records.iter().all(|r| r.y == 0.0 && r.r == 0.0 && r.w == 0.0));
}

#[test]
fn h_norm_of_simple_fields() {
    assert!((h_norm(&vec![1.0; 101], None).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    let x: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    let ones = vec![1.0; 101];
    // f = x: |f(1)|² + 1/3 + 1, the trapezoid rule adds dx²/6.
    let want = (1.0 + 1.0 / 3.0 + 1e-4 / 6.0 + 1.0f64).sqrt();
    assert!((h_norm(&x, Some(&ones)).unwrap() - want).abs() < 1e-12);
    assert!(h_norm(&[1.0, 2.0], None).is_err());
    assert!(h_norm(&x, Some(&ones[..50])).is_err());
}

#[test]
fn debounce_and_arming() {
    let trace = synthetic(&[0.0, 2.0, 0.0, 2.0, 2.0, 2.0, 2.0]);
    let raw = detect(&trace, 1.0, &DetectorSettings::raw());
    assert_eq!(raw.index, Some(1));
    let debounced = detect(&trace, 1.0, &DetectorSettings::default());
    assert_eq!(debounced.index, Some(3));
    assert!((debounced.time.unwrap() - 0.3).abs() < 1e-12);
    let armed = DetectorSettings {
        arm_time: 0.35,
        ..DetectorSettings::default()
    };
    assert_eq!(detect(&trace, 1.0, &armed).index, Some(4));
    assert!(!detect(&trace, 2.0, &DetectorSettings::raw()).detected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detection_is_monotone(r in proptest::collection::vec(-3.0f64..3.0, 1..60), lo in 0.0f64..2.0, extra in 0.0f64..1.0, k in 1usize..5) {
        let trace = synthetic(&r);
        let settings = DetectorSettings { debounce: k, ..DetectorSettings::default() };
        let raw = detect(&trace, lo, &DetectorSettings::raw());
        let low = detect(&trace, lo, &settings);
        let high = detect(&trace, lo + extra, &settings);
        // A debounced alarm implies a raw one no later; a higher threshold
        // never alarms earlier.
        if let Some(i) = low.index {
            prop_assert!(raw.index.unwrap() <= i);
            prop_assert!(r[i..i + k].iter().all(|v| v.abs() > lo));
        }
        if let Some(j) = high.index {
            prop_assert!(low.index.unwrap() <= j);
        }
    }

    #[test]
    fn residual_is_linear_in_the_attack(a in -2.0f64..2.0) {
        let grid = FdGrid::new(51, 1e-2).unwrap();
        let mut s = Scenario::quiescent(2.0, -0.5, 0.5);
        s.input_dist = Profile::Constant { value: 1.0 };
        s.attack_dist = Profile::Cosine { coeffs: vec![1.0, 0.5] };
        s.attack = Signal::Sine { amplitude: 1.0, frequency: 2.0 };
        let unit = co_simulate(&s, &grid).unwrap().residuals();
        s.attack = Signal::Sine { amplitude: a, frequency: 2.0 };
        let scaled = co_simulate(&s, &grid).unwrap().residuals();
        let scale = unit.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in unit.iter().zip(&scaled) {
            prop_assert!((a * u - v).abs() <= 1e-12 * scale);
        }
    }
}
