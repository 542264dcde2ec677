//! Backstepping kernels, observer gains and the Volterra transforms between
//! the residual dynamics and the exponentially stable target system.
//!
//! Both kernels are written through the entire function
//! `Φ₁(z) = I₁(√z)/√z = ½ Σ_k (z/4)ᵏ / (k!(k+1)!)`:
//!
//! ```text
//! P(x,y) = −s·y·Φ₁( s(y² − x²)),
//! Q(x,y) = −s·y·Φ₁(−s(y² − x²)),      s = c + α,
//! ```
//!
//! which covers the modified-Bessel and Bessel forms for either sign of `s`
//! and has no removable singularity on the diagonal.

use std::path::Path;

use crate::error::{ensure, Error, Result};
use crate::quadrature::{gregory_weights, linspace};

/// Default truncation order of the kernel series.
pub const DEFAULT_ORDER: usize = 30;
/// Largest series argument accepted by [`phi1`].
pub const MAX_ARGUMENT: f64 = 1e4;
/// Minimum nodes for the transforms.
pub const MIN_TRANSFORM_NODES: usize = 51;

/// Below this the alternating series loses too many digits to
/// cancellation; the Bessel function is evaluated directly instead.
const CANCELLATION_SWITCH: f64 = -100.0;

/// `Σ_k (z/4)ᵏ / (k!(k+ν)!)` summed until the term drops below 1e-16 of the
/// partial sum or `order` terms are used.
fn bessel_series(nu: u32, z: f64, order: usize) -> f64 {
    let q = z / 4.0;
    let mut term = 1.0 / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 0..order {
        let k = k as f64;
        term *= q / ((k + 1.0) * (k + 1.0 + f64::from(nu)));
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() {
            break;
        }
    }
    sum
}

/// Same sum for `z ≪ 0` through `J_ν(√−z) / (√−z/2)^ν`.
fn bessel_j_form(nu: u32, z: f64) -> f64 {
    let x = (-z).sqrt();
    libm::jn(nu as i32, x) / (x / 2.0).powi(nu as i32)
}

fn scaled_series(nu: u32, z: f64, order: usize) -> f64 {
    if z < CANCELLATION_SWITCH {
        bessel_j_form(nu, z)
    } else {
        bessel_series(nu, z, order)
    }
}

/// `Φ₁(z) = I₁(√z)/√z`, analytically continued to `z < 0` as `J₁(√−z)/√−z`.
pub fn phi1(z: f64, order: usize) -> Result<f64> {
    check_argument(z, order)?;
    Ok(0.5 * scaled_series(1, z, order))
}

/// `Φ₁′(z) = ⅛ Σ_k (z/4)ᵏ / (k!(k+2)!)`.
pub fn phi1_prime(z: f64, order: usize) -> Result<f64> {
    check_argument(z, order)?;
    Ok(0.125 * scaled_series(2, z, order))
}

fn check_argument(z: f64, order: usize) -> Result<()> {
    ensure(order >= 1, || "series order must be positive".into())?;
    if !(z.abs() <= MAX_ARGUMENT) {
        return Err(Error::InvalidParameter(format!(
            "series argument {z} outside [-{MAX_ARGUMENT}, {MAX_ARGUMENT}]"
        )));
    }
    Ok(())
}

/// Order needed for the positive series to converge at `|z|`: terms peak
/// near `k ≈ √|z|/2`, so allow well past that.
fn order_for(zmax: f64, requested: usize) -> usize {
    requested.max((2.0 * zmax.sqrt()).ceil() as usize + 30)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub c: f64,
    pub alpha: f64,
}

impl KernelParams {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        ensure(c > 0.0 && c.is_finite(), || format!("c must be positive, got {c}"))?;
        ensure(alpha.is_finite(), || "alpha must be finite".into())?;
        Ok(Self { c, alpha })
    }

    /// `s = c + α`, the only combination entering the kernels.
    pub fn s(&self) -> f64 {
        self.c + self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    P,
    Q,
    Py,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `ũ ↦ ψ = ũ + ∫ₓ¹ Q(x,y) ũ(y) dy`.
    ToTarget,
    /// `ψ ↦ ũ = ψ − ∫ₓ¹ P(x,y) ψ(y) dy`.
    ToOriginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacksteppingKernel {
    pub params: KernelParams,
    order: usize,
}

impl BacksteppingKernel {
    pub fn new(params: KernelParams) -> Result<Self> {
        Self::with_order(params, DEFAULT_ORDER)
    }

    pub fn with_order(params: KernelParams, order: usize) -> Result<Self> {
        ensure(order >= 1, || "series order must be positive".into())?;
        let zmax = params.s().abs();
        if zmax > MAX_ARGUMENT {
            return Err(Error::InvalidParameter(format!(
                "|c + alpha| = {zmax} exceeds the series range"
            )));
        }
        Ok(Self {
            params,
            order: order_for(zmax, order),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn c(&self) -> f64 {
        self.params.c
    }

    pub fn s(&self) -> f64 {
        self.params.s()
    }

    fn check_triangle(x: f64, y: f64) -> Result<()> {
        let eps = 1e-12;
        if x < -eps || y > 1.0 + eps || x > y + eps {
            return Err(Error::InvalidParameter(format!(
                "({x}, {y}) outside the triangle 0 <= x <= y <= 1"
            )));
        }
        Ok(())
    }

    // Arguments inside the triangle are bounded by |s| ≤ MAX_ARGUMENT, so the
    // series evaluators cannot fail here.
    fn f(&self, z: f64) -> f64 {
        0.5 * scaled_series(1, z, self.order)
    }

    fn fp(&self, z: f64) -> f64 {
        0.125 * scaled_series(2, z, self.order)
    }

    pub fn eval(&self, x: f64, y: f64, which: Which) -> Result<f64> {
        Self::check_triangle(x, y)?;
        Ok(match which {
            Which::P => self.p(x, y),
            Which::Q => self.q(x, y),
            Which::Py => self.p_y(x, y),
        })
    }

    pub fn p(&self, x: f64, y: f64) -> f64 {
        let s = self.s();
        -s * y * self.f(s * (y * y - x * x))
    }

    pub fn q(&self, x: f64, y: f64) -> f64 {
        let s = self.s();
        -s * y * self.f(-s * (y * y - x * x))
    }

    /// `∂P/∂y`, by term-wise differentiation of the series.
    pub fn p_y(&self, x: f64, y: f64) -> f64 {
        let s = self.s();
        let z = s * (y * y - x * x);
        -s * self.f(z) - 2.0 * s * s * y * y * self.fp(z)
    }

    pub fn p_x(&self, x: f64, y: f64) -> f64 {
        let s = self.s();
        2.0 * s * s * x * y * self.fp(s * (y * y - x * x))
    }

    pub fn q_x(&self, x: f64, y: f64) -> f64 {
        let s = self.s();
        -2.0 * s * s * x * y * self.fp(-s * (y * y - x * x))
    }

    pub fn q_y(&self, x: f64, y: f64) -> f64 {
        let s = self.s();
        let z = -s * (y * y - x * x);
        -s * self.f(z) + 2.0 * s * s * y * y * self.fp(z)
    }

    /// Writes `x,y,P,Q,Py` on the triangle of a uniform `nodes`-point grid.
    pub fn write_table_csv(&self, path: &Path, nodes: usize) -> Result<()> {
        let xs = linspace(0.0, 1.0, nodes);
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y", "P", "Q", "Py"])?;
        for (i, &x) in xs.iter().enumerate() {
            for &y in &xs[i..] {
                w.write_record([
                    x.to_string(),
                    y.to_string(),
                    self.p(x, y).to_string(),
                    self.q(x, y).to_string(),
                    self.p_y(x, y).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Free-function form of [`BacksteppingKernel::eval`].
pub fn kernel_eval(k: &BacksteppingKernel, x: f64, y: f64, which: Which) -> Result<f64> {
    k.eval(x, y, which)
}

/// Observer gains `L(x) = −cP(x,1) − P_y(x,1)` on `grid` and
/// `L₁ = c − P(1,1) = c + (c+α)/2`.
pub fn observer_gains(k: &BacksteppingKernel, grid: &[f64]) -> (Vec<f64>, f64) {
    let c = k.c();
    let l = grid.iter().map(|&x| -c * k.p(x, 1.0) - k.p_y(x, 1.0)).collect();
    (l, c + 0.5 * k.s())
}

/// Kernel sampled on a uniform grid together with the quadrature weights,
/// so the transforms reduce to upper-triangular matrix–vector products.
#[derive(Debug, Clone)]
pub struct TransformTable {
    nodes: usize,
    /// Row `i` holds `w_j K(x_i, x_j)` for `j ≥ i`.
    p_rows: Vec<Vec<f64>>,
    q_rows: Vec<Vec<f64>>,
}

impl TransformTable {
    pub fn new(k: &BacksteppingKernel, nodes: usize) -> Result<Self> {
        if nodes < MIN_TRANSFORM_NODES {
            return Err(Error::GridTooCoarse(format!(
                "transform needs at least {MIN_TRANSFORM_NODES} nodes, got {nodes}"
            )));
        }
        let xs = linspace(0.0, 1.0, nodes);
        let h = 1.0 / (nodes - 1) as f64;
        let rows = |kernel: &dyn Fn(f64, f64) -> f64| -> Vec<Vec<f64>> {
            (0..nodes)
                .map(|i| {
                    let w = gregory_weights(nodes - 1 - i, h);
                    xs[i..]
                        .iter()
                        .zip(&w)
                        .map(|(&y, w)| w * kernel(xs[i], y))
                        .collect()
                })
                .collect()
        };
        Ok(Self {
            nodes,
            p_rows: rows(&|x, y| k.p(x, y)),
            q_rows: rows(&|x, y| k.q(x, y)),
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn apply(&self, field: &[f64], direction: Direction) -> Result<Vec<f64>> {
        if field.len() != self.nodes {
            return Err(Error::DimensionMismatch(format!(
                "field has {} nodes, table {}",
                field.len(),
                self.nodes
            )));
        }
        let (rows, sign) = match direction {
            Direction::ToTarget => (&self.q_rows, 1.0),
            Direction::ToOriginal => (&self.p_rows, -1.0),
        };
        Ok(rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let integral: f64 = row.iter().zip(&field[i..]).map(|(a, b)| a * b).sum();
                field[i] + sign * integral
            })
            .collect())
    }
}

/// Applies the backstepping transform (or its inverse) to a field sampled on
/// a uniform grid over `[0, 1]`.
pub fn transform(field: &[f64], k: &BacksteppingKernel, direction: Direction) -> Result<Vec<f64>> {
    TransformTable::new(k, field.len())?.apply(field, direction)
}

/// `D = D_a + ∫ₓ¹ Q D_a dy` and `θ = η + ∫ₓ¹ Q η dy`.
pub fn transform_sources(
    da: &[f64],
    eta: &[f64],
    k: &BacksteppingKernel,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if da.len() != eta.len() {
        return Err(Error::DimensionMismatch(format!(
            "D_a has {} nodes, eta {}",
            da.len(),
            eta.len()
        )));
    }
    let table = TransformTable::new(k, da.len())?;
    Ok((
        table.apply(da, Direction::ToTarget)?,
        table.apply(eta, Direction::ToTarget)?,
    ))
}
