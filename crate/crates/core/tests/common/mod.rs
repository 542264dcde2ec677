#![allow(dead_code)]

use std::f64::consts::PI;

use pdeguard_core::detector::{co_simulate, FdGrid, Profile, Scenario, Signal};
use pdeguard_core::lmi::TuningParams;
use pdeguard_core::spectral::{forward_solve, ForwardProblem, ModalBasis, ModalCoefficients, SampledSignal};
use pdeguard_core::stealth::StealthProblem;

pub const FINE_NODES: usize = 16385;

/// α = −1, φ = 1 + cos(πx), D_a ≡ 1, zero target. The attack is
/// `−π² e^{(−1−π²)t}`.
pub fn closed_form_problem(horizon: f64, dt: f64) -> StealthProblem {
    let basis = ModalBasis::new(-1.0, 64).unwrap();
    let mut phi = vec![0.0; 65];
    phi[0] = 1.0;
    phi[1] = 1.0;
    StealthProblem::zero_output(
        basis,
        ModalCoefficients::new(phi),
        ModalCoefficients::unit(64, 0, 1.0),
        horizon,
        dt,
    )
    .unwrap()
}

pub fn closed_form_attack(t: f64) -> f64 {
    -PI * PI * ((-1.0 - PI * PI) * t).exp()
}

pub fn reference_params() -> TuningParams {
    TuningParams {
        c: 3.0,
        lambda: 0.5,
        alphas: [1.0, 1.0, 1.0, -10.0, -10.0, -10.0],
        lambdas: [0.1; 6],
        beta1: 4.0,
        beta2: 5.0,
        alpha: -1.0,
    }
}

/// Smooth Neumann-compatible initial profile.
pub fn galerkin_phi(x: f64) -> f64 {
    x * x - 2.0 * x * x * x / 3.0
}

/// Boundary output of the Galerkin model with `n` modes for
/// `φ = x² − 2x³/3`, `D_a ≡ 1`, `δ = sin(2πt)`, α = −1, on `[0, 1]`.
pub fn galerkin_run(n: usize, dt: f64) -> pdeguard_core::spectral::ModalTrajectory {
    let basis = ModalBasis::new(-1.0, n).unwrap();
    let phi = ModalCoefficients::from_fn(galerkin_phi, n, FINE_NODES).unwrap();
    let delta = SampledSignal::from_fn(|t| (2.0 * PI * t).sin(), 0.0, 1.0, dt).unwrap();
    let p = ForwardProblem::free(basis, phi).with_attack(ModalCoefficients::unit(n, 0, 1.0), delta);
    forward_solve(&p, 1.0, dt).unwrap()
}

/// Plant-only cross-validation data:
/// φ = cos(πx) + 0.5cos(2πx), D = 1 + 0.3cos(πx), D_a ≡ 1, q ≡ 1,
/// δ = 0.5 sin(2πt), α = −1, horizon 1.
pub fn cross_validation_scenario() -> Scenario {
    let mut s = Scenario::quiescent(3.0, -1.0, 1.0);
    s.initial = Profile::Cosine { coeffs: vec![0.0, 1.0, 0.5] };
    s.input_dist = Profile::Cosine { coeffs: vec![1.0, 0.3] };
    s.attack_dist = Profile::Constant { value: 1.0 };
    s.input = Signal::Constant { value: 1.0 };
    s.attack = Signal::Sine { amplitude: 0.5, frequency: 1.0 };
    s.inject = false;
    s
}

pub fn cross_validation_spectral(dt: f64) -> (Vec<f64>, Vec<f64>) {
    let basis = ModalBasis::new(-1.0, 64).unwrap();
    let init = ModalCoefficients::from_fn(|x| (PI * x).cos() + 0.5 * (2.0 * PI * x).cos(), 64, FINE_NODES).unwrap();
    let d = ModalCoefficients::from_fn(|x| 1.0 + 0.3 * (PI * x).cos(), 64, FINE_NODES).unwrap();
    let q = SampledSignal::constant(1.0, 0.0, 1.0, dt).unwrap();
    let delta = SampledSignal::from_fn(|t| 0.5 * (2.0 * PI * t).sin(), 0.0, 1.0, dt).unwrap();
    let p = ForwardProblem::free(basis, init)
        .with_input(d, q)
        .with_attack(ModalCoefficients::unit(64, 0, 1.0), delta);
    let traj = forward_solve(&p, 1.0, dt).unwrap();
    (traj.times(), traj.boundary_outputs())
}

/// Max over recorded samples of `|y_fd − y_spectral|` for `m` intervals.
pub fn cross_validation_error(m: usize, dt: f64, spectral: &(Vec<f64>, Vec<f64>)) -> f64 {
    let mut s = cross_validation_scenario();
    s.record_every = 100;
    let trace = co_simulate(&s, &FdGrid::new(m + 1, dt).unwrap()).unwrap();
    trace
        .records
        .iter()
        .map(|r| {
            let k = (r.t / dt).round() as usize;
            assert!((spectral.0[k] - r.t).abs() < 1e-9);
            (r.y - spectral.1[k]).abs()
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn observed_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
