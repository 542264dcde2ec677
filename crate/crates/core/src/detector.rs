//! Finite-difference co-simulation of the plant and the boundary observer,
//! residual generation, threshold calibration and detection.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backstepping::{observer_gains, BacksteppingKernel, Direction, KernelParams, TransformTable};
use crate::error::{ensure, Error, Result};
use crate::lmi::DesignCertificate;
use crate::quadrature::{derivative, l2_norm, linspace, trapezoid};
use crate::spectral::SampledSignal;

pub const MIN_NODES: usize = 51;
/// Any field entry beyond this aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;
pub const THRESHOLD_INFLATION: f64 = 1.1;
pub const DEFAULT_DEBOUNCE: usize = 3;
/// Samples skipped at the start of a trace by the pointwise envelope checks.
pub const STARTUP_SAMPLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    n_nodes: usize,
    dt: f64,
}

impl FdGrid {
    pub fn new(n_nodes: usize, dt: f64) -> Result<Self> {
        if n_nodes < MIN_NODES {
            return Err(Error::GridTooCoarse(format!(
                "finite-difference grid needs at least {MIN_NODES} nodes, got {n_nodes}"
            )));
        }
        ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
        Ok(Self { n_nodes, dt })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.n_nodes - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nodes(&self) -> Vec<f64> {
        linspace(0.0, 1.0, self.n_nodes)
    }
}

/// Spatial profile on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// `Σ a_k cos(kπx)`
    Cosine { coeffs: Vec<f64> },
    /// `Σ a_k x^k`
    Polynomial { coeffs: Vec<f64> },
}

impl Profile {
    pub fn zero() -> Self {
        Profile::Constant { value: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Cosine { coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * (k as f64 * PI * x).cos())
                .sum(),
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a),
        }
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&x| self.eval(x)).collect()
    }
}

/// Scalar time signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    Zero,
    Constant { value: f64 },
    /// `a sin(2πft)`
    Sine { amplitude: f64, frequency: f64 },
    /// `m(1 − e^{−r(t−t_a)})` for `t ≥ t_a`, zero before.
    SaturatingRamp { magnitude: f64, rate: f64, onset: f64 },
    /// Linear interpolation of uniform samples; zero outside their span.
    Sampled { t0: f64, dt: f64, values: Vec<f64> },
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant { value } => *value,
            Signal::Sine { amplitude, frequency } => amplitude * (2.0 * PI * frequency * t).sin(),
            Signal::SaturatingRamp { magnitude, rate, onset } => {
                if t < *onset {
                    0.0
                } else {
                    -magnitude * (-rate * (t - onset)).exp_m1()
                }
            }
            Signal::Sampled { t0, dt, values } => {
                let s = (t - t0) / dt;
                let last = values.len().saturating_sub(1) as f64;
                if values.is_empty() || s < -1e-9 || s > last + 1e-9 {
                    return 0.0;
                }
                let s = s.clamp(0.0, last);
                let i = (s.floor() as usize).min(values.len().saturating_sub(2));
                if values.len() == 1 {
                    return values[0];
                }
                let w = s - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Signal::Zero => true,
            Signal::Constant { value } => *value == 0.0,
            Signal::Sine { amplitude, .. } => *amplitude == 0.0,
            Signal::SaturatingRamp { magnitude, .. } => *magnitude == 0.0,
            Signal::Sampled { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }
}

impl From<&SampledSignal> for Signal {
    fn from(s: &SampledSignal) -> Self {
        Signal::Sampled {
            t0: s.t0(),
            dt: s.dt(),
            values: s.values().to_vec(),
        }
    }
}

/// Distributed uncertainty `η`: i.i.d. standard normal per node and step,
/// scaled by `amplitude`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Uncertainty {
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Uncertainty {
    pub fn none() -> Self {
        Self {
            amplitude: 0.0,
            seed: None,
        }
    }

    pub fn seeded(amplitude: f64, seed: u64) -> Self {
        Self {
            amplitude,
            seed: Some(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub c: f64,
    pub alpha: f64,
    pub initial: Profile,
    pub observer_initial: Profile,
    pub input: Signal,
    pub input_dist: Profile,
    pub attack: Signal,
    pub attack_dist: Profile,
    pub uncertainty: Uncertainty,
    pub horizon: f64,
    pub record_every: usize,
    /// Output injection on; `false` runs the observer open loop.
    pub inject: bool,
}

/// Pointwise tolerance for the support check `supp D_a ⊆ supp D`.
const SUPPORT_TOL: f64 = 1e-12;

impl Scenario {
    /// Plant and observer both at rest, no inputs.
    pub fn quiescent(c: f64, alpha: f64, horizon: f64) -> Self {
        Self {
            c,
            alpha,
            initial: Profile::zero(),
            observer_initial: Profile::zero(),
            input: Signal::Zero,
            input_dist: Profile::zero(),
            attack: Signal::Zero,
            attack_dist: Profile::zero(),
            uncertainty: Uncertainty::none(),
            horizon,
            record_every: 1,
            inject: true,
        }
    }

    pub fn validate(&self, grid: &FdGrid) -> Result<()> {
        ensure(self.c > 0.0 && self.c.is_finite(), || format!("c must be positive, got {}", self.c))?;
        ensure(self.alpha.is_finite(), || "alpha must be finite".into())?;
        ensure(self.horizon > 0.0 && self.horizon.is_finite(), || {
            format!("horizon must be positive, got {}", self.horizon)
        })?;
        ensure(self.horizon >= grid.dt(), || "horizon shorter than one time step".into())?;
        ensure(self.record_every >= 1, || "record_every must be at least 1".into())?;
        let u = &self.uncertainty;
        ensure(u.amplitude >= 0.0 && u.amplitude.is_finite(), || {
            format!("uncertainty amplitude must be non-negative, got {}", u.amplitude)
        })?;
        ensure(u.amplitude == 0.0 || u.seed.is_some(), || {
            "a seed is required when the uncertainty amplitude is positive".into()
        })?;
        let nodes = grid.nodes();
        let d = self.input_dist.sample(&nodes);
        let da = self.attack_dist.sample(&nodes);
        if let Some(i) = (0..nodes.len()).find(|&i| da[i].abs() > SUPPORT_TOL && d[i].abs() <= SUPPORT_TOL) {
            return Err(Error::InvalidParameter(format!(
                "attack distribution is nonzero at x = {} where the input distribution vanishes",
                nodes[i]
            )));
        }
        Ok(())
    }

    /// Same scenario with the attack removed.
    pub fn without_attack(&self) -> Self {
        Self {
            attack: Signal::Zero,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.uncertainty.seed = Some(seed);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub y: f64,
    pub yhat: f64,
    pub r: f64,
    pub psi1: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub norm_u: f64,
    pub norm_ux: f64,
    #[serde(rename = "norm_eta_H")]
    pub norm_eta_h: f64,
    pub delta: f64,
    #[serde(with = "flag01")]
    pub flag: bool,
}

mod flag01 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        Ok(u8::deserialize(d)? != 0)
    }
}

pub const TRACE_HEADER: [&str; 11] = [
    "t", "y", "yhat", "r", "psi1", "W", "norm_u", "norm_ux", "norm_eta_H", "delta", "flag",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub records: Vec<TraceRecord>,
    /// `‖D_a‖²_H`, needed by the attack-sensitivity checks.
    pub attack_dist_h_sq: f64,
}

impl SimulationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for rec in &self.records {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a trace written by [`SimulationTrace::write_csv`].
    pub fn read_csv(path: &Path, attack_dist_h_sq: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header = rdr.headers()?.clone();
        for name in TRACE_HEADER {
            if !header.iter().any(|h| h == name) {
                return Err(Error::MissingChannel(name));
            }
        }
        let records = rdr.deserialize().collect::<std::result::Result<Vec<TraceRecord>, _>>()?;
        Ok(Self {
            records,
            attack_dist_h_sq,
        })
    }
}

/// `√(|f(1)|² + ‖f‖² + ‖f_x‖²)` with trapezoid norms. Without `field_x`
/// the derivative is taken by finite differences.
pub fn h_norm(field: &[f64], field_x: Option<&[f64]>) -> Result<f64> {
    let n = field.len();
    if n < 3 {
        return Err(Error::GridTooCoarse(format!("H-norm needs at least 3 nodes, got {n}")));
    }
    let dx = 1.0 / (n - 1) as f64;
    let fx = match field_x {
        Some(fx) => {
            if fx.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "derivative has {} nodes, field {n}",
                    fx.len()
                )));
            }
            fx.to_vec()
        }
        None => derivative(field, dx),
    };
    let sq = |v: &[f64]| trapezoid(&v.iter().map(|a| a * a).collect::<Vec<_>>(), dx);
    Ok((field[n - 1].powi(2) + sq(field) + sq(&fx)).sqrt())
}

/// Tridiagonal system with a precomputed Thomas factorization.
struct Tridiagonal {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    denom: Vec<f64>,
}

impl Tridiagonal {
    fn factor(lower: Vec<f64>, diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        let mut upper_mod = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = diag[0];
        upper_mod[0] = upper[0] / denom[0];
        for i in 1..n {
            denom[i] = diag[i] - lower[i] * upper_mod[i - 1];
            upper_mod[i] = upper[i] / denom[i];
        }
        Self {
            lower,
            upper_mod,
            denom,
        }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] /= self.denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_mod[i] * rhs[i + 1];
        }
    }
}

/// Neumann Laplacian with mirrored ghost nodes at both ends.
fn laplacian(u: &[f64], inv_dx2: f64, out: &mut [f64]) {
    let m = u.len() - 1;
    out[0] = 2.0 * (u[1] - u[0]) * inv_dx2;
    for i in 1..m {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dx2;
    }
    out[m] = 2.0 * (u[m - 1] - u[m]) * inv_dx2;
}

fn check_finite(u: &[f64], t: f64) -> Result<()> {
    let magnitude = u.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) });
    if magnitude > DIVERGENCE_LIMIT {
        return Err(Error::Divergence { t, magnitude });
    }
    Ok(())
}

/// Advances plant and observer by Crank–Nicolson on a uniform grid.
///
/// Plant and observer sources enter at the half step. The boundary
/// injection `û_x(1) = L₁ỹ` uses the ghost node `û_{M+1} = û_{M−1} + 2dx L₁ỹ`;
/// both it and the in-domain injection `L(x)ỹ` are averaged over the step,
/// which makes the observer matrix tridiagonal plus a rank-one column,
/// solved by Sherman–Morrison.
pub fn co_simulate(s: &Scenario, grid: &FdGrid) -> Result<SimulationTrace> {
    s.validate(grid)?;
    let n = grid.n_nodes();
    let m = n - 1;
    let dx = grid.dx();
    let inv_dx2 = 1.0 / (dx * dx);
    let n_steps = (s.horizon / grid.dt()).round().max(1.0) as usize;
    let dt = s.horizon / n_steps as f64;
    let x = grid.nodes();

    let kernel = BacksteppingKernel::new(KernelParams::new(s.c, s.alpha)?)?;
    let table = TransformTable::new(&kernel, n)?;
    let (gain, gain1) = if s.inject {
        observer_gains(&kernel, &x)
    } else {
        (vec![0.0; n], 0.0)
    };

    let d = s.input_dist.sample(&x);
    let da = s.attack_dist.sample(&x);
    let attack_dist_h_sq = h_norm(&da, None)?.powi(2);
    let mut u = s.initial.sample(&x);
    let mut uh = s.observer_initial.sample(&x);

    let rr = 0.5 * dt * inv_dx2;
    let diag0 = 1.0 + 2.0 * rr - 0.5 * dt * s.alpha;
    let mut lower = vec![-rr; n];
    let mut upper = vec![-rr; n];
    lower[0] = 0.0;
    upper[0] = -2.0 * rr;
    lower[m] = -2.0 * rr;
    upper[m] = 0.0;
    let mut diag = vec![diag0; n];
    let plant_lu = Tridiagonal::factor(lower.clone(), &diag, &upper);

    diag[m] += dt * gain1 / dx;
    let observer_lu = Tridiagonal::factor(lower, &diag, &upper);
    let mut sm = gain.iter().map(|l| 0.5 * dt * l).collect::<Vec<_>>();
    observer_lu.solve(&mut sm);
    let sm_denominator = 1.0 + sm[m];

    let amplitude = s.uncertainty.amplitude;
    let mut rng = ChaCha8Rng::seed_from_u64(s.uncertainty.seed.unwrap_or(0));
    let mut eta = vec![0.0; n];
    let mut lap = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut records = Vec::with_capacity(n_steps / s.record_every + 1);

    for step in 0..=n_steps {
        let t = step as f64 * dt;
        if amplitude > 0.0 {
            for e in eta.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *e = amplitude * z;
            }
        }
        if step % s.record_every == 0 {
            records.push(record(t, &u, &uh, &eta, s.attack.eval(t), &table, s.c, dx)?);
        }
        if step == n_steps {
            break;
        }

        let th = t + 0.5 * dt;
        let (q, delta) = (s.input.eval(th), s.attack.eval(th));
        let y0 = u[m];
        laplacian(&u, inv_dx2, &mut lap);
        for i in 0..n {
            rhs[i] = u[i] + 0.5 * dt * (lap[i] + s.alpha * u[i]) + dt * (d[i] * q + da[i] * delta + eta[i]);
        }
        plant_lu.solve(&mut rhs);
        u.copy_from_slice(&rhs);
        check_finite(&u, t + dt)?;
        let y1 = u[m];

        let err0 = y0 - uh[m];
        laplacian(&uh, inv_dx2, &mut lap);
        lap[m] += 2.0 * gain1 * err0 / dx;
        for i in 0..n {
            rhs[i] = uh[i]
                + 0.5 * dt * (lap[i] + s.alpha * uh[i] + gain[i] * (err0 + y1))
                + dt * d[i] * q;
        }
        rhs[m] += dt * gain1 * y1 / dx;
        observer_lu.solve(&mut rhs);
        let correction = rhs[m] / sm_denominator;
        for i in 0..n {
            uh[i] = rhs[i] - sm[i] * correction;
        }
        check_finite(&uh, t + dt)?;
    }
    Ok(SimulationTrace {
        records,
        attack_dist_h_sq,
    })
}

#[allow(clippy::too_many_arguments)]
fn record(
    t: f64,
    u: &[f64],
    uh: &[f64],
    eta: &[f64],
    delta: f64,
    table: &TransformTable,
    c: f64,
    dx: f64,
) -> Result<TraceRecord> {
    let m = u.len() - 1;
    let err: Vec<f64> = u.iter().zip(uh).map(|(a, b)| a - b).collect();
    let psi = table.apply(&err, Direction::ToTarget)?;
    let psi_x = derivative(&psi, dx);
    let err_x = derivative(&err, dx);
    let w = 0.5 * c * psi[m].powi(2) + 0.5 * l2_norm(&psi, dx).powi(2) + 0.5 * l2_norm(&psi_x, dx).powi(2);
    Ok(TraceRecord {
        t,
        y: u[m],
        yhat: uh[m],
        r: err[m],
        psi1: psi[m],
        w,
        norm_u: l2_norm(&err, dx),
        norm_ux: l2_norm(&err_x, dx),
        norm_eta_h: h_norm(eta, None)?,
        delta,
        flag: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSettings {
    /// Samples before this time are ignored by calibration and detection.
    pub arm_time: f64,
    /// Consecutive exceedances needed to raise an alarm; 1 is the raw test.
    pub debounce: usize,
    pub inflation: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            arm_time: 0.0,
            debounce: DEFAULT_DEBOUNCE,
            inflation: THRESHOLD_INFLATION,
        }
    }
}

impl DetectorSettings {
    pub fn raw() -> Self {
        Self {
            debounce: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    /// Largest armed `|r|` before inflation.
    pub peak: f64,
    pub seeds: Vec<u64>,
}

/// Runs `n_runs` attack-free simulations with seeds `seed, seed + 1, …` and
/// returns the inflated peak armed residual.
pub fn calibrate_threshold(
    s: &Scenario,
    n_runs: usize,
    grid: &FdGrid,
    settings: &DetectorSettings,
) -> Result<Calibration> {
    ensure(n_runs >= 1, || "calibration needs at least one run".into())?;
    let base = s.without_attack();
    let first = base.uncertainty.seed.unwrap_or(0);
    let seeds: Vec<u64> = (0..n_runs as u64).map(|k| first.wrapping_add(k)).collect();
    let peaks = seeds
        .par_iter()
        .map(|&seed| {
            let trace = co_simulate(&base.with_seed(seed), grid)?;
            Ok(trace
                .records
                .iter()
                .filter(|r| r.t >= settings.arm_time)
                .fold(0.0f64, |m, r| m.max(r.r.abs())))
        })
        .collect::<Result<Vec<f64>>>()?;
    let peak = peaks.into_iter().fold(0.0, f64::max);
    Ok(Calibration {
        threshold: peak * settings.inflation,
        peak,
        seeds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub detected: bool,
    /// Time of the first sample of the confirming run of exceedances.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

/// First armed sample starting `debounce` consecutive samples with
/// `|r| > eps_th`.
pub fn detect(trace: &SimulationTrace, eps_th: f64, settings: &DetectorSettings) -> Detection {
    let need = settings.debounce.max(1);
    let mut run = 0;
    for (i, rec) in trace.records.iter().enumerate() {
        if rec.t >= settings.arm_time && rec.r.abs() > eps_th {
            run += 1;
            if run == need {
                let start = i + 1 - need;
                return Detection {
                    detected: true,
                    time: Some(trace.records[start].t),
                    index: Some(start),
                };
            }
        } else {
            run = 0;
        }
    }
    Detection {
        detected: false,
        time: None,
        index: None,
    }
}

impl SimulationTrace {
    /// Sets `flag` on the detection sample only.
    pub fn mark(&mut self, detection: &Detection) {
        for rec in &mut self.records {
            rec.flag = false;
        }
        if let Some(i) = detection.index {
            self.records[i].flag = true;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub holds: bool,
    /// Left and right side at the worst sample (pointwise checks) or the
    /// two integrals (integral checks).
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementReport {
    /// Integrals run over `[0, horizon]` only.
    pub horizon: f64,
    pub exponential_decay: Check,
    pub input_to_state: Check,
    pub robustness: Check,
    pub sensitivity: Check,
}

/// `|r|` below this multiple of `ε_machine·max|y|` is treated as round-off.
const ROUNDOFF_FACTOR: f64 = 1e3;

fn pointwise(lhs: &[f64], rhs: &[f64], floor: f64) -> Check {
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    for (&l, &r) in lhs.iter().zip(rhs).skip(STARTUP_SAMPLES) {
        if l - r > worst.0 {
            worst = (l - r, l, r);
        }
    }
    if worst.0 == f64::NEG_INFINITY {
        return Check {
            holds: true,
            lhs: 0.0,
            rhs: 0.0,
        };
    }
    Check {
        holds: worst.1 <= worst.2 * (1.0 + 1e-9) + floor,
        lhs: worst.1,
        rhs: worst.2,
    }
}

/// Checks the decay, input-to-state, robustness and sensitivity inequalities
/// on a trace against the certificate constants.
pub fn evaluate_requirements(trace: &SimulationTrace, cert: &DesignCertificate) -> Result<RequirementReport> {
    let recs = &trace.records;
    if recs.is_empty() {
        return Err(Error::MissingChannel("r"));
    }
    let k = &cert.constants;
    let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let r2: Vec<f64> = recs.iter().map(|r| r.r * r.r).collect();
    let r0 = r2[0];
    let attack_sq: Vec<f64> = recs.iter().map(|r| trace.attack_dist_h_sq * r.delta * r.delta).collect();
    let eta_sq: Vec<f64> = recs.iter().map(|r| r.norm_eta_h * r.norm_eta_h).collect();

    let y_max = recs.iter().fold(0.0f64, |m, r| m.max(r.y.abs()).max(r.yhat.abs()));
    let floor = (ROUNDOFF_FACTOR * f64::EPSILON * y_max).powi(2);
    let decay: Vec<f64> = t.iter().map(|&t| k.k1 * (-k.k2 * t).exp() * r0).collect();
    let mut sup = 0.0f64;
    let iss: Vec<f64> = t
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            sup = sup.max(attack_sq[i] + eta_sq[i]);
            k.k3 * (-k.k4 * t).exp() * r0 + k.k5 * sup
        })
        .collect();

    let integral = |v: &[f64]| -> f64 {
        t.windows(2)
            .zip(v.windows(2))
            .map(|(tw, vw)| 0.5 * (tw[1] - tw[0]) * (vw[0] + vw[1]))
            .sum()
    };
    let int_r = integral(&r2);
    let beta1 = cert.params.beta1;
    let beta2 = cert.params.beta2;
    let robust_rhs = beta1 * beta1 * integral(&eta_sq) + k.epsilon;
    let sens_rhs = beta2 * beta2 * integral(&attack_sq) - k.epsilon;

    Ok(RequirementReport {
        horizon: *t.last().unwrap_or(&0.0),
        exponential_decay: pointwise(&r2, &decay, floor),
        input_to_state: pointwise(&r2, &iss, floor),
        robustness: Check {
            holds: int_r <= robust_rhs,
            lhs: int_r,
            rhs: robust_rhs,
        },
        sensitivity: Check {
            holds: int_r >= sens_rhs,
            lhs: int_r,
            rhs: sens_rhs,
        },
    })
}

/// Least-squares slope of `ln v` against `t` over samples with `v > 0`.
pub fn log_slope(t: &[f64], v: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(v)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
