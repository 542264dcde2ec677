//! Synthesis of stealthy actuator attacks.
//!
//! Pinning the boundary output to a target `g(t)` turns the forward series
//! into a first-kind Volterra equation for the attack,
//!
//! ```text
//! ∫₀ᵗ b(t − τ) δ(τ) dτ = ā(t),   ā(t) = g(t) − Σ (−1)ⁿ φₙ e^{λₙ t},
//! b(s) = Σ (−1)ⁿ dₙ e^{λₙ s},
//! ```
//!
//! which, after differentiation and division by `b(0) = D_a(1)`, becomes the
//! second-kind equation `δ(t) − ∫ K(t,τ) δ(τ) dτ = m(t)` with
//! `K = −b_t / b(0)` and `m = ā′ / b(0)`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::quadrature::{derivative, max_abs, trapezoid};
use crate::spectral::{forward_solve, ForwardProblem, ModalBasis, ModalCoefficients, SampledSignal};

/// `|D_a(1)|` below this is a degenerate kernel.
pub const DEGENERATE_KERNEL_TOL: f64 = 1e-10;
/// Allowed mismatch `|g(0) − φ₁(1)|` relative to `max(1, |g(0)|)`.
pub const COMPATIBILITY_TOL: f64 = 1e-8;
/// Default decay rate of the compatibility blend.
pub const DEFAULT_BLEND_KAPPA: f64 = 50.0;
/// The blend is complete after `BLEND_SPAN / κ`.
pub const BLEND_SPAN: f64 = 5.0;

const UNDERFLOW_EXPONENT: f64 = -700.0;

/// Inverse problem data: drive the output of the plant started from `phi1`
/// along `target` using the attack channel `attack_dist`.
#[derive(Debug, Clone)]
pub struct StealthProblem {
    pub basis: ModalBasis,
    pub phi1: ModalCoefficients,
    pub target: SampledSignal,
    pub attack_dist: ModalCoefficients,
}

/// How an incompatible target was repaired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendReport {
    pub kappa: f64,
    /// `φ₁(1) − g(0)`, the initial boundary mismatch that was blended out.
    pub mismatch: f64,
    /// Time after which the blended target equals the requested one.
    pub transient_end: f64,
}

impl StealthProblem {
    /// Validates the compatibility `g(0) = φ₁(1)` and `D_a(1) ≠ 0`.
    pub fn new(
        basis: ModalBasis,
        phi1: ModalCoefficients,
        target: SampledSignal,
        attack_dist: ModalCoefficients,
    ) -> Result<Self> {
        let problem = Self {
            basis,
            phi1,
            target,
            attack_dist,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Output pinned at zero, the classical stealthiness condition.
    pub fn zero_output(
        basis: ModalBasis,
        phi1: ModalCoefficients,
        attack_dist: ModalCoefficients,
        horizon: f64,
        dt: f64,
    ) -> Result<Self> {
        let target = SampledSignal::zeros(0.0, horizon, dt)?;
        Self::new(basis, phi1, target, attack_dist)
    }

    /// Builds a compatible problem from a target whose initial value differs
    /// from `φ₁(1)`: the target is replaced by
    /// `g̃(t) = g(t) + (φ₁(1) − g(0))·β(κt/5)` where `β` is the quintic
    /// smoothstep falling from 1 to 0 on `[0, 1]` (C² and exactly zero
    /// afterwards).
    pub fn blended(
        basis: ModalBasis,
        phi1: ModalCoefficients,
        target: &SampledSignal,
        attack_dist: ModalCoefficients,
        kappa: f64,
    ) -> Result<(Self, BlendReport)> {
        ensure(kappa > 0.0, || format!("blend rate must be positive, got {kappa}"))?;
        let mismatch = phi1.boundary_value() - target.values()[0];
        let transient_end = BLEND_SPAN / kappa;
        let blended: Vec<f64> = target
            .times()
            .zip(target.values())
            .map(|(t, g)| g + mismatch * smooth_blend(t / transient_end))
            .collect();
        let target = SampledSignal::new(target.t0(), target.dt(), blended)?;
        let problem = Self::new(basis, phi1, target, attack_dist)?;
        Ok((
            problem,
            BlendReport {
                kappa,
                mismatch,
                transient_end,
            },
        ))
    }

    fn validate(&self) -> Result<()> {
        let n = self.basis.len();
        if self.phi1.len() != n || self.attack_dist.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "basis has {n} modes, phi1 {}, D_a {}",
                self.phi1.len(),
                self.attack_dist.len()
            )));
        }
        let b0 = self.attack_dist.boundary_value();
        if b0.abs() < DEGENERATE_KERNEL_TOL {
            return Err(Error::DegenerateKernel(b0));
        }
        let g0 = self.target.values()[0];
        let phi_end = self.phi1.boundary_value();
        if (g0 - phi_end).abs() > COMPATIBILITY_TOL * g0.abs().max(1.0) {
            return Err(Error::IncompatibleTarget {
                target: g0,
                initial: phi_end,
            });
        }
        Ok(())
    }
}

/// Quintic smoothstep `1 − (10s³ − 15s⁴ + 6s⁵)`, clamped to `[0, 1]`.
fn smooth_blend(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Checks `f′(0) = f′(1) = 0` on a uniform grid with second-order one-sided
/// differences, relative to `max(1, max|f|)`.
pub fn check_neumann_compatible(values: &[f64], tol: f64) -> Result<()> {
    if values.len() < 3 {
        return Err(Error::GridTooCoarse("need at least three samples".into()));
    }
    let h = 1.0 / (values.len() - 1) as f64;
    let d = derivative(values, h);
    let scale = max_abs(values).max(1.0);
    let (left, right) = (d[0], d[d.len() - 1]);
    if left.abs() > tol * scale || right.abs() > tol * scale {
        return Err(Error::NotNeumannCompatible(format!(
            "f'(0) = {left:e}, f'(1) = {right:e}"
        )));
    }
    Ok(())
}

/// Discretized Volterra system on the uniform grid `t_i = i·dt`.
///
/// The kernel depends on `t − τ` only and is stored as the vector
/// `K(t_k, 0)`, `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct VolterraSystem {
    pub dt: f64,
    pub a: Vec<f64>,
    pub a_dot: Vec<f64>,
    pub b_diag: f64,
    /// `b(t_k − 0)`, the first-kind kernel.
    pub b: Vec<f64>,
    /// `b((k + ½)·dt)`, `k = 0..n`, for the midpoint first-kind operator.
    pub b_mid: Vec<f64>,
    /// `K(t_k, 0) = −b_t(t_k)/b(0)`.
    pub kernel: Vec<f64>,
    pub m: Vec<f64>,
}

impl VolterraSystem {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }

    /// `K(t_i, t_j)` for `j ≤ i`.
    pub fn kernel_at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.kernel[i - j]
    }

    /// Dense lower-triangular kernel matrix.
    pub fn kernel_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| (0..=i).map(|j| self.kernel_at(i, j)).collect())
            .collect()
    }

    /// Trapezoid estimate of `∫∫_{τ≤t} K(t,τ)² dτ dt`.
    pub fn kernel_l2_sq(&self) -> f64 {
        let rows: Vec<f64> = (0..self.len())
            .map(|i| {
                let row: Vec<f64> = (0..=i).map(|j| self.kernel_at(i, j).powi(2)).collect();
                trapezoid(&row, self.dt)
            })
            .collect();
        trapezoid(&rows, self.dt)
    }

    /// Applies the trapezoid-discretized operator `(𝒦f)(t_i)`.
    pub fn apply_kernel(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                if i == 0 {
                    return 0.0;
                }
                let mut s = 0.5 * (self.kernel_at(i, 0) * f[0] + self.kernel_at(i, i) * f[i]);
                for j in 1..i {
                    s += self.kernel_at(i, j) * f[j];
                }
                self.dt * s
            })
            .collect()
    }

    /// First-kind operator collocated at `t_1..t_n` with `δ` constant on
    /// each cell: `(𝒯δ)(t_i) = dt·Σ_{j<i} b(t_i − t_{j+½}) δ_{j+½}`.
    ///
    /// Square and lower triangular with diagonal `dt·b(dt/2)`. The trapezoid
    /// rule on node values would leave row `t_0` empty and an alternating
    /// null vector behind.
    pub fn first_kind_matrix(&self) -> DMatrix<f64> {
        let n = self.b_mid.len();
        DMatrix::from_fn(n, n, |i, j| if j > i { 0.0 } else { self.dt * self.b_mid[i - j] })
    }

    /// Squared spectral norm of the first-kind operator (power iteration).
    pub fn first_kind_norm_sq(&self) -> f64 {
        spectral_norm_sq(&self.first_kind_matrix())
    }
}

fn spectral_norm_sq(t: &DMatrix<f64>) -> f64 {
    let gram = t.transpose() * t;
    let mut v = DVector::from_element(gram.ncols(), 1.0);
    let mut est = 0.0;
    for _ in 0..200 {
        let w = &gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm / v.norm();
        v = w / norm;
        if (next - est).abs() <= 1e-12 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Builds `ā`, `ā′`, `b`, `K` and `m` on `[0, horizon]`.
pub fn assemble_volterra(problem: &StealthProblem, dt: f64, horizon: f64) -> Result<VolterraSystem> {
    ensure(dt > 0.0, || format!("dt must be positive, got {dt}"))?;
    ensure(horizon > 0.0, || format!("horizon must be positive, got {horizon}"))?;
    problem.validate()?;
    let steps = ((horizon / dt).round() as usize).max(1);
    let h = horizon / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();

    let g: Vec<f64> = times
        .iter()
        .map(|&t| problem.target.at(t))
        .collect::<Result<_>>()?;
    let g_dot = derivative(&g, h);

    let lam = problem.basis.eigenvalues();
    let signed = |c: &[f64]| -> Vec<f64> {
        c.iter()
            .enumerate()
            .map(|(n, v)| if n % 2 == 0 { *v } else { -v })
            .collect()
    };
    let phi = signed(problem.phi1.as_slice());
    let d = signed(problem.attack_dist.as_slice());
    let b_diag: f64 = d.iter().sum();

    // Σ_n w_n λ_n^p e^{λ_n t}, skipping underflowed terms.
    let series = |w: &[f64], power: i32, t: f64| -> f64 {
        w.iter()
            .zip(lam)
            .filter(|(_, &l)| l * t >= UNDERFLOW_EXPONENT)
            .map(|(w, &l)| w * l.powi(power) * (l * t).exp())
            .sum()
    };

    let a: Vec<f64> = times
        .iter()
        .zip(&g)
        .map(|(&t, g)| g - series(&phi, 0, t))
        .collect();
    let a_dot: Vec<f64> = times
        .iter()
        .zip(&g_dot)
        .map(|(&t, gd)| gd - series(&phi, 1, t))
        .collect();
    let b: Vec<f64> = times.par_iter().map(|&t| series(&d, 0, t)).collect();
    let b_mid: Vec<f64> = times[1..].par_iter().map(|&t| series(&d, 0, t - 0.5 * h)).collect();
    let kernel: Vec<f64> = times
        .par_iter()
        .map(|&t| -series(&d, 1, t) / b_diag)
        .collect();
    let m = a_dot.iter().map(|v| v / b_diag).collect();
    Ok(VolterraSystem {
        dt: h,
        a,
        a_dot,
        b_diag,
        b,
        b_mid,
        kernel,
        m,
    })
}

/// Smallest admissible `|1 − (dt/2)K(t,t)|`.
pub const DIAGONAL_TOL: f64 = 1e-8;

/// Product-trapezoid discretization of the second-kind equation solved by
/// forward substitution.
pub fn solve_volterra2(sys: &VolterraSystem) -> Result<SampledSignal> {
    let n = sys.len();
    let diag = 1.0 - 0.5 * sys.dt * sys.kernel_at(0, 0);
    if diag.abs() < DIAGONAL_TOL {
        return Err(Error::SingularDiagonal {
            index: 1,
            value: diag,
        });
    }
    let mut delta = vec![0.0; n];
    delta[0] = sys.m[0];
    for i in 1..n {
        let mut s = 0.5 * sys.kernel_at(i, 0) * delta[0];
        for j in 1..i {
            s += sys.kernel_at(i, j) * delta[j];
        }
        delta[i] = (sys.m[i] + sys.dt * s) / diag;
    }
    SampledSignal::new(0.0, sys.dt, delta)
}

/// Partial Liouville–Neumann sum and its convergence indicators.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub delta: SampledSignal,
    /// Max-norm of each increment `𝒦ᵏm`, `k = 1..=n_terms`.
    pub increments: Vec<f64>,
}

impl NeumannSolution {
    pub fn last_increment(&self) -> f64 {
        self.increments.last().copied().unwrap_or(0.0)
    }
}

/// `δ ≈ m + Σ_{k=1}^{n_terms} 𝒦ᵏm` with the trapezoid-discretized operator.
pub fn neumann_series_solve(sys: &VolterraSystem, n_terms: usize) -> Result<NeumannSolution> {
    ensure(n_terms >= 1, || "n_terms must be at least 1".into())?;
    let mut sum = sys.m.clone();
    let mut term = sys.m.clone();
    let mut increments = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        term = sys.apply_kernel(&term);
        increments.push(max_abs(&term));
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    Ok(NeumannSolution {
        delta: SampledSignal::new(0.0, sys.dt, sum)?,
        increments,
    })
}

/// Minimizer of `‖𝒯δ − ā‖² + γ‖δ‖²` through the normal equations and a
/// Cholesky factorization, with 𝒯 from
/// [`first_kind_matrix`](VolterraSystem::first_kind_matrix). Cell values are
/// interpolated back to the nodes.
pub fn tikhonov_solve(sys: &VolterraSystem, gamma: f64) -> Result<SampledSignal> {
    ensure(gamma > 0.0, || format!("gamma must be positive, got {gamma}"))?;
    let t = sys.first_kind_matrix();
    tikhonov_with_operator(&t, &sys.a, gamma, sys.dt)
}

fn tikhonov_with_operator(t: &DMatrix<f64>, a: &[f64], gamma: f64, dt: f64) -> Result<SampledSignal> {
    let n = t.ncols();
    let mut normal = t.transpose() * t;
    for i in 0..n {
        normal[(i, i)] += gamma;
    }
    let rhs = t.transpose() * DVector::from_column_slice(&a[1..]);
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("normal equations lost definiteness".into()))?;
    let cells = chol.solve(&rhs);
    SampledSignal::new(0.0, dt, cells_to_nodes(cells.as_slice()))
}

fn cells_to_nodes(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    match n {
        1 => return vec![c[0]; 2],
        2 => return vec![1.5 * c[0] - 0.5 * c[1], 0.5 * (c[0] + c[1]), 1.5 * c[1] - 0.5 * c[0]],
        _ => {}
    }
    let mut out = Vec::with_capacity(n + 1);
    // Cubic interpolation inside, quadratic next to and at the ends.
    out.push((15.0 * c[0] - 10.0 * c[1] + 3.0 * c[2]) / 8.0);
    for j in 1..n {
        let v = if j == 1 {
            (3.0 * c[0] + 6.0 * c[1] - c[2]) / 8.0
        } else if j == n - 1 {
            (3.0 * c[n - 1] + 6.0 * c[n - 2] - c[n - 3]) / 8.0
        } else {
            (-c[j - 2] + 9.0 * c[j - 1] + 9.0 * c[j] - c[j + 1]) / 16.0
        };
        out.push(v);
    }
    out.push((15.0 * c[n - 1] - 10.0 * c[n - 2] + 3.0 * c[n - 3]) / 8.0);
    out
}

/// Max over the horizon of `|y(t) − g(t)|` when the plant started at `φ₁`
/// is driven by `delta`.
pub fn verify_stealth(delta: &SampledSignal, problem: &StealthProblem, dt: f64) -> Result<f64> {
    let horizon = delta.t_end().min(problem.target.t_end());
    let fp = ForwardProblem::free(problem.basis.clone(), problem.phi1.clone())
        .with_attack(problem.attack_dist.clone(), delta.clone());
    let traj = forward_solve(&fp, horizon, dt)?;
    traj.states
        .iter()
        .map(|s| Ok((crate::spectral::boundary_output(s) - problem.target.at(s.t)?).abs()))
        .try_fold(0.0, |acc, r: Result<f64>| Ok(f64::max(acc, r?)))
}

/// One row of a continuous-dependence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationReport {
    pub gamma: f64,
    /// `‖δ_γ − δ̃_γ‖_{L²}`.
    pub diff_delta: f64,
    /// `‖ā − ã‖_{L²}`.
    pub diff_a: f64,
    /// `diff_delta / (diff_a / γ)`; zero when both differences vanish.
    pub bound_ratio: f64,
}

impl PerturbationReport {
    /// `‖δ_γ − δ̃_γ‖ ≤ γ⁻¹‖ā − ã‖`.
    pub fn bound_holds(&self) -> bool {
        self.diff_delta <= self.diff_a / self.gamma * (1.0 + 1e-12) + 1e-300
    }
}

/// Solves the regularized problem for `φ₁` and for `phi_tilde` (same target
/// and channel) and compares the two attacks.
pub fn perturbation_study(
    problem: &StealthProblem,
    phi_tilde: &ModalCoefficients,
    gamma: f64,
    dt: f64,
    horizon: f64,
) -> Result<PerturbationReport> {
    ensure(gamma > 0.0, || format!("gamma must be positive, got {gamma}"))?;
    let sys = assemble_volterra(problem, dt, horizon)?;
    // The perturbed initial condition generally breaks g(0) = φ̃(1); the
    // first-kind data is still well defined, so assemble it directly.
    let perturbed = StealthProblem {
        phi1: phi_tilde.clone(),
        ..problem.clone()
    };
    let a_tilde = first_kind_rhs(&perturbed, &sys)?;
    let t = sys.first_kind_matrix();
    let d1 = tikhonov_with_operator(&t, &sys.a, gamma, sys.dt)?;
    let d2 = tikhonov_with_operator(&t, &a_tilde, gamma, sys.dt)?;
    let l2 = |x: &[f64], y: &[f64]| -> f64 {
        let sq: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).collect();
        trapezoid(&sq, sys.dt).sqrt()
    };
    let diff_delta = l2(d1.values(), d2.values());
    let diff_a = l2(&sys.a, &a_tilde);
    let bound_ratio = if diff_a == 0.0 {
        0.0
    } else {
        diff_delta / (diff_a / gamma)
    };
    Ok(PerturbationReport {
        gamma,
        diff_delta,
        diff_a,
        bound_ratio,
    })
}

fn first_kind_rhs(problem: &StealthProblem, sys: &VolterraSystem) -> Result<Vec<f64>> {
    let lam = problem.basis.eigenvalues();
    sys.times()
        .iter()
        .map(|&t| {
            let free: f64 = problem
                .phi1
                .as_slice()
                .iter()
                .zip(lam)
                .enumerate()
                .filter(|(_, (_, &l))| l * t >= UNDERFLOW_EXPONENT)
                .map(|(n, (p, &l))| if n % 2 == 0 { 1.0 } else { -1.0 } * p * (l * t).exp())
                .sum();
            Ok(problem.target.at(t)? - free)
        })
        .collect()
}

/// Writes `gamma,diff_delta,diff_a,bound_ratio` rows.
pub fn write_perturbation_csv(path: &Path, rows: &[PerturbationReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["gamma", "diff_delta", "diff_a", "bound_ratio"])?;
    for r in rows {
        w.write_record([
            r.gamma.to_string(),
            r.diff_delta.to_string(),
            r.diff_a.to_string(),
            r.bound_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const N: usize = 16;

    fn basis() -> ModalBasis {
        ModalBasis::new(-1.0, N).unwrap()
    }

    fn two_mode_phi() -> ModalCoefficients {
        let mut c = vec![0.0; N + 1];
        c[0] = 1.0;
        c[1] = 1.0;
        ModalCoefficients::new(c)
    }

    #[test]
    fn zero_data_gives_zero_system_and_attack() {
        let p = StealthProblem::zero_output(
            basis(),
            ModalCoefficients::zeros(N),
            ModalCoefficients::unit(N, 0, 1.0),
            1.0,
            0.01,
        )
        .unwrap();
        let sys = assemble_volterra(&p, 0.01, 1.0).unwrap();
        assert!(sys.a.iter().chain(&sys.m).all(|v| *v == 0.0));
        let d = solve_volterra2(&sys).unwrap();
        assert!(d.values().iter().all(|v| *v == 0.0));
        let t = tikhonov_solve(&sys, 1e-3).unwrap();
        assert!(t.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn incompatible_target_is_rejected() {
        let err = StealthProblem::zero_output(
            basis(),
            ModalCoefficients::unit(N, 0, 1.0),
            ModalCoefficients::unit(N, 0, 1.0),
            1.0,
            0.01,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IncompatibleTarget { .. }));
    }

    #[test]
    fn degenerate_channel_is_rejected() {
        // D_a = 1 + cos(πx) vanishes at x = 1.
        let mut d = vec![0.0; N + 1];
        d[0] = 1.0;
        d[1] = 1.0;
        let err = StealthProblem::zero_output(
            basis(),
            ModalCoefficients::zeros(N),
            ModalCoefficients::new(d),
            1.0,
            0.01,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateKernel(_)));
    }

    #[test]
    fn single_mode_channel_kernel_is_exponential() {
        let p = StealthProblem::zero_output(
            basis(),
            ModalCoefficients::zeros(N),
            ModalCoefficients::unit(N, 0, 1.0),
            1.0,
            0.01,
        )
        .unwrap();
        let sys = assemble_volterra(&p, 0.01, 1.0).unwrap();
        assert_eq!(sys.b_diag, 1.0);
        for (k, t) in sys.times().iter().enumerate() {
            // K(t, τ) = −α e^{α(t−τ)} with α = −1.
            assert_abs_diff_eq!(sys.kernel[k], (-t).exp(), epsilon = 1e-14);
            assert_abs_diff_eq!(sys.kernel_at(k, 0), sys.kernel[k]);
        }
        let km = sys.kernel_matrix();
        assert_eq!(km[5].len(), 6);
        assert_abs_diff_eq!(km[5][2], (-0.03f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn homogeneous_equation_has_zero_solution() {
        let sys = VolterraSystem {
            dt: 0.1,
            a: vec![0.0; 11],
            a_dot: vec![0.0; 11],
            b_diag: 1.0,
            b: vec![1.0; 11],
            b_mid: vec![1.0; 10],
            kernel: vec![0.7; 11],
            m: vec![0.0; 11],
        };
        assert!(solve_volterra2(&sys).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn neumann_with_zero_kernel_is_identity() {
        let m: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let sys = VolterraSystem {
            dt: 0.1,
            a: vec![0.0; 11],
            a_dot: vec![0.0; 11],
            b_diag: 1.0,
            b: vec![1.0; 11],
            b_mid: vec![1.0; 10],
            kernel: vec![0.0; 11],
            m: m.clone(),
        };
        let sol = neumann_series_solve(&sys, 1).unwrap();
        assert_eq!(sol.delta.values(), &m[..]);
        assert_eq!(sol.last_increment(), 0.0);
        assert!(neumann_series_solve(&sys, 0).is_err());
    }

    #[test]
    fn singular_diagonal_is_reported() {
        let sys = VolterraSystem {
            dt: 0.5,
            a: vec![0.0; 3],
            a_dot: vec![0.0; 3],
            b_diag: 1.0,
            b: vec![1.0; 3],
            b_mid: vec![1.0; 2],
            kernel: vec![4.0; 3],
            m: vec![1.0; 3],
        };
        assert!(matches!(solve_volterra2(&sys), Err(Error::SingularDiagonal { .. })));
    }

    #[test]
    fn two_mode_closed_form_attack() {
        let p = StealthProblem::zero_output(
            basis(),
            two_mode_phi(),
            ModalCoefficients::unit(N, 0, 1.0),
            1.0,
            1e-3,
        )
        .unwrap();
        let sys = assemble_volterra(&p, 1e-3, 1.0).unwrap();
        let d = solve_volterra2(&sys).unwrap();
        let lam1 = -1.0 - PI * PI;
        let err = d
            .times()
            .zip(d.values())
            .map(|(t, v)| (v - (-PI * PI * (lam1 * t).exp())).abs())
            .fold(0.0, f64::max);
        assert!(err / (PI * PI) < 1e-4, "relative error {err}");
        assert!(verify_stealth(&d, &p, 1e-3).unwrap() < 1e-4);
    }

    #[test]
    fn unattacked_mismatch_equals_free_boundary_response() {
        let p = StealthProblem::zero_output(
            basis(),
            two_mode_phi(),
            ModalCoefficients::unit(N, 0, 1.0),
            1.0,
            1e-2,
        )
        .unwrap();
        let zero = SampledSignal::zeros(0.0, 1.0, 1e-2).unwrap();
        let lam1 = -1.0 - PI * PI;
        let expected = (0..=100)
            .map(|i| {
                let t = i as f64 * 1e-2;
                ((-t).exp() - (lam1 * t).exp()).abs()
            })
            .fold(0.0, f64::max);
        let got = verify_stealth(&zero, &p, 1e-2).unwrap();
        assert!(got > 0.0);
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);

        let p0 = StealthProblem::zero_output(
            basis(),
            ModalCoefficients::zeros(N),
            ModalCoefficients::unit(N, 0, 1.0),
            1.0,
            1e-2,
        )
        .unwrap();
        assert_eq!(verify_stealth(&zero, &p0, 1e-2).unwrap(), 0.0);
    }

    #[test]
    fn blend_repairs_incompatible_target() {
        let b = ModalBasis::nonconforming(0.0, N).unwrap();
        let target = SampledSignal::constant(298.0, 0.0, 1.0, 1e-3).unwrap();
        let (p, report) = StealthProblem::blended(
            b,
            ModalCoefficients::unit(N, 0, 290.0),
            &target,
            ModalCoefficients::unit(N, 0, 1.0),
            50.0,
        )
        .unwrap();
        assert_eq!(report.mismatch, -8.0);
        assert_abs_diff_eq!(report.transient_end, 0.1);
        assert_abs_diff_eq!(p.target.values()[0], 290.0);
        assert_abs_diff_eq!(p.target.at(0.1).unwrap(), 298.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.target.at(0.5).unwrap(), 298.0);
    }

    #[test]
    fn neumann_check_flags_sloped_profiles() {
        let flat: Vec<f64> = (0..=100).map(|i| (PI * i as f64 / 100.0).cos()).collect();
        assert!(check_neumann_compatible(&flat, 1e-3).is_ok());
        let sloped: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        assert!(matches!(
            check_neumann_compatible(&sloped, 1e-3),
            Err(Error::NotNeumannCompatible(_))
        ));
    }

    #[test]
    fn identical_initial_data_gives_zero_perturbation() {
        let p = StealthProblem::zero_output(
            basis(),
            two_mode_phi(),
            ModalCoefficients::unit(N, 0, 1.0),
            1.0,
            1e-2,
        )
        .unwrap();
        let r = perturbation_study(&p, &two_mode_phi(), 1e-2, 1e-2, 1.0).unwrap();
        assert_eq!(r.diff_delta, 0.0);
        assert_eq!(r.diff_a, 0.0);
        assert_eq!(r.bound_ratio, 0.0);
        assert!(r.bound_holds());
    }
}
