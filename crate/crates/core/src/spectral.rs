//! Cosine-basis representation of the plant and its exact-modal forward
//! solver.
//!
//! The plant `u_t = u_xx + αu + D(x)q(t) + D_a(x)δ(t)` with homogeneous
//! Neumann conditions diagonalizes in the basis `cos(nπx)`: every mode obeys
//! the scalar ODE `T_n' = λ_n T_n + d_n δ(t) + D_n q(t)` with
//! `λ_n = α − (nπ)²`. Coefficients use the unnormalized reconstruction
//! `f = c_0 + Σ_{n≥1} c_n cos(nπx)`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{ensure, Error, Result};
use crate::quadrature::{linspace, simpson};

/// Default truncation order.
pub const DEFAULT_MODES: usize = 64;

/// Exponents below this are treated as underflowed to zero.
const UNDERFLOW_EXPONENT: f64 = -700.0;

/// Sturm–Liouville eigenvalues `λ_n = α − (nπ)²` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    alpha: f64,
    eigenvalues: Vec<f64>,
    conforming: bool,
}

impl ModalBasis {
    /// Basis for a stable plant (`α < 0`).
    pub fn new(alpha: f64, n_modes: usize) -> Result<Self> {
        ensure(alpha < 0.0, || {
            format!("reaction coefficient must be negative, got {alpha}")
        })?;
        Self::build(alpha, n_modes, true)
    }

    /// Basis without the `α < 0` requirement, e.g. the battery case
    /// (`α = 0`). Marked as nonconforming.
    pub fn nonconforming(alpha: f64, n_modes: usize) -> Result<Self> {
        Self::build(alpha, n_modes, alpha < 0.0)
    }

    fn build(alpha: f64, n_modes: usize, conforming: bool) -> Result<Self> {
        ensure(n_modes >= 1, || "n_modes must be at least 1".into())?;
        ensure(alpha.is_finite(), || "alpha must be finite".into())?;
        let eigenvalues = (0..=n_modes)
            .map(|n| alpha - (n as f64 * PI).powi(2))
            .collect();
        Ok(Self {
            alpha,
            eigenvalues,
            conforming,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Truncation order `N`; the basis has `N + 1` functions.
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.eigenvalues[n]
    }

    pub fn is_conforming(&self) -> bool {
        self.conforming
    }
}

/// Shorthand for [`ModalBasis::new`].
pub fn eigenvalues(alpha: f64, n_modes: usize) -> Result<ModalBasis> {
    ModalBasis::new(alpha, n_modes)
}

/// Coefficients `c_0..c_N` against `1, cos(πx), …, cos(Nπx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoefficients {
    coeffs: Vec<f64>,
}

impl ModalCoefficients {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n_modes: usize) -> Self {
        Self::new(vec![0.0; n_modes + 1])
    }

    /// Single-mode coefficient vector `value · cos(kπx)`.
    pub fn unit(n_modes: usize, k: usize, value: f64) -> Self {
        let mut c = vec![0.0; n_modes + 1];
        c[k] = value;
        Self::new(c)
    }

    /// Projects a function sampled on `grid_nodes` uniform nodes.
    pub fn from_fn(f: impl Fn(f64) -> f64, n_modes: usize, grid_nodes: usize) -> Result<Self> {
        let values: Vec<f64> = linspace(0.0, 1.0, grid_nodes).into_iter().map(f).collect();
        cosine_coefficients(&values, n_modes)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * (n as f64 * PI * x).cos())
            .sum()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| -c * n as f64 * PI * (n as f64 * PI * x).sin())
            .sum()
    }

    /// `f(1) = Σ (−1)^n c_n`.
    pub fn boundary_value(&self) -> f64 {
        alternating_sum(&self.coeffs)
    }

    /// Sup-norm estimate on a 1001-node grid.
    pub fn sup_norm(&self) -> f64 {
        linspace(0.0, 1.0, 1001)
            .into_iter()
            .map(|x| self.evaluate(x).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len(), "coefficient vectors")?;
        Ok(Self::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        ))
    }
}

fn alternating_sum(v: &[f64]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(n, c)| if n % 2 == 0 { *c } else { -c })
        .sum()
}

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("{what}: {a} vs {b}")))
    }
}

/// Cosine coefficients of a function sampled on a uniform grid over
/// `[0, 1]`: `c_0 = ∫f`, `c_n = 2∫f cos(nπx)`, by composite Simpson.
pub fn cosine_coefficients(values: &[f64], n_modes: usize) -> Result<ModalCoefficients> {
    ensure(n_modes >= 1, || "n_modes must be at least 1".into())?;
    let needed = 4 * n_modes + 1;
    if values.len() < needed {
        return Err(Error::GridTooCoarse(format!(
            "{} nodes cannot resolve {n_modes} modes without aliasing (need {needed})",
            values.len()
        )));
    }
    let h = 1.0 / (values.len() - 1) as f64;
    let x = linspace(0.0, 1.0, values.len());
    let mut work = vec![0.0; values.len()];
    let coeffs = (0..=n_modes)
        .map(|n| {
            let k = n as f64 * PI;
            for ((w, f), x) in work.iter_mut().zip(values).zip(&x) {
                *w = f * (k * x).cos();
            }
            let scale = if n == 0 { 1.0 } else { 2.0 };
            scale * simpson(&work, h)
        })
        .collect();
    Ok(ModalCoefficients::new(coeffs))
}

/// Uniformly sampled scalar signal with piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        ensure(dt > 0.0 && dt.is_finite(), || format!("signal step must be positive, got {dt}"))?;
        ensure(!values.is_empty(), || "signal needs at least one sample".into())?;
        Ok(Self { t0, dt, values })
    }

    /// Samples `f` on `t0, t0 + dt, …` up to and including `t_end`.
    pub fn from_fn(f: impl Fn(f64) -> f64, t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        ensure(dt > 0.0, || format!("signal step must be positive, got {dt}"))?;
        let n = ((t_end - t0) / dt).round().max(0.0) as usize;
        Self::new(t0, dt, (0..=n).map(|i| f(t0 + i as f64 * dt)).collect())
    }

    pub fn constant(value: f64, t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        Self::from_fn(|_| value, t0, t_end, dt)
    }

    pub fn zeros(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        Self::constant(0.0, t0, t_end, dt)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.values.len() - 1) as f64 * self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.t0 + i as f64 * self.dt)
    }

    /// Linear interpolation; queries outside the sampled range are errors.
    pub fn at(&self, t: f64) -> Result<f64> {
        let slack = 1e-9 * self.dt;
        let end = self.t_end();
        if t < self.t0 - slack || t > end + slack {
            return Err(Error::OutOfRange {
                t,
                start: self.t0,
                end,
            });
        }
        let last = self.values.len() - 1;
        if last == 0 {
            return Ok(self.values[0]);
        }
        let s = ((t - self.t0) / self.dt).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        let w = s - i as f64;
        Ok((1.0 - w) * self.values[i] + w * self.values[i + 1])
    }

    /// Writes `t,<column>` rows.
    pub fn write_csv(&self, path: &Path, column: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", column])?;
        for (t, v) in self.times().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Modal coefficient vector at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub t: f64,
    pub modes: Vec<f64>,
}

impl ModalState {
    pub fn field(&self, x: f64) -> f64 {
        self.modes
            .iter()
            .enumerate()
            .map(|(n, c)| c * (n as f64 * PI * x).cos())
            .sum()
    }

    /// `‖u‖` via Parseval for the unnormalized basis.
    pub fn l2_norm(&self) -> f64 {
        let tail: f64 = self.modes.iter().skip(1).map(|c| c * c).sum();
        (self.modes[0].powi(2) + 0.5 * tail).sqrt()
    }

    /// `‖u_x‖` via Parseval.
    pub fn gradient_l2_norm(&self) -> f64 {
        let s: f64 = self
            .modes
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| (n as f64 * PI * c).powi(2))
            .sum();
        (0.5 * s).sqrt()
    }
}

/// Boundary measurement `y = u(1, t) = Σ (−1)^n T_n(t)`.
pub fn boundary_output(state: &ModalState) -> f64 {
    alternating_sum(&state.modes)
}

/// A distributed source `profile(x) · signal(t)`.
#[derive(Debug, Clone)]
pub struct ModalSource {
    pub profile: ModalCoefficients,
    pub signal: SampledSignal,
}

/// Inputs of a forward run. `input` is the nominal channel `D q`,
/// `attack` the compromised channel `D_a δ`.
#[derive(Debug, Clone)]
pub struct ForwardProblem {
    pub basis: ModalBasis,
    pub initial: ModalCoefficients,
    pub input: Option<ModalSource>,
    pub attack: Option<ModalSource>,
}

impl ForwardProblem {
    pub fn free(basis: ModalBasis, initial: ModalCoefficients) -> Self {
        Self {
            basis,
            initial,
            input: None,
            attack: None,
        }
    }

    pub fn with_input(mut self, profile: ModalCoefficients, signal: SampledSignal) -> Self {
        self.input = Some(ModalSource { profile, signal });
        self
    }

    pub fn with_attack(mut self, profile: ModalCoefficients, signal: SampledSignal) -> Self {
        self.attack = Some(ModalSource { profile, signal });
        self
    }
}

/// Time history of modal states produced by [`forward_solve`].
#[derive(Debug, Clone)]
pub struct ModalTrajectory {
    pub basis: ModalBasis,
    pub states: Vec<ModalState>,
}

impl ModalTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn boundary_outputs(&self) -> Vec<f64> {
        self.states.iter().map(boundary_output).collect()
    }

    pub fn output_signal(&self) -> Result<SampledSignal> {
        let dt = if self.states.len() > 1 {
            self.states[1].t - self.states[0].t
        } else {
            1.0
        };
        SampledSignal::new(self.states[0].t, dt, self.boundary_outputs())
    }

    /// Field snapshots as `t,x,u`, every `time_stride`-th state on
    /// `x_nodes` uniform points.
    pub fn write_snapshots_csv(&self, path: &Path, time_stride: usize, x_nodes: usize) -> Result<()> {
        let xs = linspace(0.0, 1.0, x_nodes);
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "x", "u"])?;
        for s in self.states.iter().step_by(time_stride.max(1)) {
            for &x in &xs {
                w.write_record([s.t.to_string(), x.to_string(), s.field(x).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Modal trajectories as `t,T0,T1,...`.
    pub fn write_modes_csv(&self, path: &Path, time_stride: usize) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((0..self.basis.len()).map(|n| format!("T{n}")))
            .collect();
        writeln!(file, "{}", header.join(","))?;
        for s in self.states.iter().step_by(time_stride.max(1)) {
            let row: Vec<String> = std::iter::once(s.t.to_string())
                .chain(s.modes.iter().map(|c| c.to_string()))
                .collect();
            writeln!(file, "{}", row.join(","))?;
        }
        file.flush()?;
        Ok(())
    }
}

/// `φ₁(z) = (eᶻ − 1)/z` and `φ₂(z) = (eᶻ − 1 − z)/z²`.
fn etd_weights(z: f64) -> (f64, f64) {
    if z.abs() < 1e-2 {
        // Horner form of the Taylor series, seven terms each.
        let p1 = 1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0 * (1.0 + z / 6.0 * (1.0 + z / 7.0)))));
        let p2 = 0.5 * (1.0 + z / 3.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0 * (1.0 + z / 6.0 * (1.0 + z / 7.0 * (1.0 + z / 8.0))))));
        (p1, p2)
    } else {
        let em1 = z.exp_m1();
        (em1 / z, (em1 - z) / (z * z))
    }
}

/// Advances every mode with the exact exponential integrator, treating the
/// source as linear within each step (second-order exponential time
/// differencing). Without sources each step multiplies `T_n` by
/// `e^{λ_n Δt}` exactly.
///
/// The step is adjusted to `horizon / round(horizon / dt)`.
pub fn forward_solve(problem: &ForwardProblem, horizon: f64, dt: f64) -> Result<ModalTrajectory> {
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
    ensure(horizon > 0.0 && horizon.is_finite(), || {
        format!("horizon must be positive, got {horizon}")
    })?;
    let basis = &problem.basis;
    let len = basis.len();
    check_len(problem.initial.len(), len, "initial condition vs basis")?;
    let sources: Vec<&ModalSource> = problem.input.iter().chain(problem.attack.iter()).collect();
    for s in &sources {
        check_len(s.profile.len(), len, "source profile vs basis")?;
        if s.signal.t0() > 0.0 + 1e-12 || s.signal.t_end() < horizon - 1e-9 * dt {
            return Err(Error::OutOfRange {
                t: horizon,
                start: s.signal.t0(),
                end: s.signal.t_end(),
            });
        }
    }

    let steps = ((horizon / dt).round() as usize).max(1);
    let h = horizon / steps as f64;
    let coefs: Vec<(f64, f64, f64)> = basis
        .eigenvalues()
        .iter()
        .map(|&lam| {
            let z = lam * h;
            let decay = if z < UNDERFLOW_EXPONENT { 0.0 } else { z.exp() };
            let (p1, p2) = etd_weights(z);
            (decay, h * p1, h * p2)
        })
        .collect();

    let forcing = |t: f64| -> Result<Vec<f64>> {
        let mut f = vec![0.0; len];
        for s in &sources {
            let amp = s.signal.at(t)?;
            if amp != 0.0 {
                for (fi, p) in f.iter_mut().zip(s.profile.as_slice()) {
                    *fi += p * amp;
                }
            }
        }
        Ok(f)
    };

    let mut states = Vec::with_capacity(steps + 1);
    let mut modes = problem.initial.as_slice().to_vec();
    states.push(ModalState {
        t: 0.0,
        modes: modes.clone(),
    });
    let mut f_old = forcing(0.0)?;
    for k in 1..=steps {
        let t = k as f64 * h;
        let f_new = forcing(t.min(horizon))?;
        for n in 0..len {
            let (decay, w1, w2) = coefs[n];
            modes[n] = decay * modes[n] + w1 * f_old[n] + w2 * (f_new[n] - f_old[n]);
        }
        states.push(ModalState {
            t,
            modes: modes.clone(),
        });
        f_old = f_new;
    }
    Ok(ModalTrajectory {
        basis: basis.clone(),
        states,
    })
}
