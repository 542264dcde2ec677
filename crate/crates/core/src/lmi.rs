//! Matrix-inequality design conditions for the detection observer and the
//! certified decay/robustness constants.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{check_semidefinite, Sense};
use crate::error::{ensure, Error, Result};

/// Absolute tolerance on the extreme eigenvalues.
pub const FEASIBILITY_TOL: f64 = 1e-10;

pub type Matrix6 = [[f64; 6]; 6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningParams {
    pub c: f64,
    pub lambda: f64,
    /// `α₁..α₆`
    pub alphas: [f64; 6],
    /// `λ₁..λ₆`
    pub lambdas: [f64; 6],
    pub beta1: f64,
    pub beta2: f64,
    /// Plant reaction coefficient.
    pub alpha: f64,
}

impl TuningParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.lambda > 0.0, || format!("lambda must be positive, got {}", self.lambda))?;
        ensure(self.c > self.lambda, || {
            format!("c must exceed lambda (c = {}, lambda = {})", self.c, self.lambda)
        })?;
        for (i, l) in self.lambdas.iter().enumerate() {
            ensure(*l > 0.0, || format!("lambda_{} must be positive, got {l}", i + 1))?;
        }
        ensure(self.beta1 > 0.0, || format!("beta1 must be positive, got {}", self.beta1))?;
        ensure(self.beta2 > 0.0, || format!("beta2 must be positive, got {}", self.beta2))?;
        let finite = [self.c, self.lambda, self.beta1, self.beta2, self.alpha]
            .iter()
            .chain(&self.alphas)
            .chain(&self.lambdas)
            .all(|v| v.is_finite());
        ensure(finite, || "tuning parameters must be finite".into())
    }

    fn s2(&self) -> f64 {
        1.0 + (self.c + self.alpha) / 2.0
    }

    fn s16(&self) -> f64 {
        1.0 + (self.c + self.alpha) / 16.0
    }
}

/// Returns `(𝔸, 𝔹)`.
pub fn assemble_lmi(p: &TuningParams) -> Result<(Matrix6, Matrix6)> {
    p.validate()?;
    let c = p.c;
    let [a1, a2, a3, a4, a5, a6] = p.alphas;
    let [l1, l2, l3, l4, l5, l6] = p.lambdas;
    let (s2, s16) = (p.s2(), p.s16());
    let (b1, b2) = (p.beta1 * p.beta1, p.beta2 * p.beta2);

    let mut a = [[0.0; 6]; 6];
    a[0][0] = 1.0 - c * c + c * a1 * l1 / 2.0;
    a[1][1] = -c + s2 * a2 * l2 / 2.0;
    a[2][2] = -c + s16 * a3 * l3 / 2.0;
    a[3][3] = c * a1 / (2.0 * l1) - b1;
    a[4][4] = s2 * a2 / (2.0 * l2) - b1;
    a[5][5] = s16 * a3 / (2.0 * l3) - b1;
    set_pair(&mut a, 0, 3, c * (1.0 - a1) / 2.0);
    set_pair(&mut a, 1, 4, s2 * (1.0 - a2) / 2.0);
    set_pair(&mut a, 2, 5, s16 * (1.0 - a3) / 2.0);

    let mut b = [[0.0; 6]; 6];
    b[0][0] = 1.0 + c * c - c * a4 * l4 / 2.0;
    b[1][1] = c - s2 * a5 * l5 / 2.0;
    b[2][2] = c - s16 * a6 * l6 / 2.0;
    b[3][3] = -c * a4 / (2.0 * l4) - b2;
    b[4][4] = -s2 * a5 / (2.0 * l5) - b2;
    b[5][5] = -s16 * a6 / (2.0 * l6) - b2;
    set_pair(&mut b, 0, 3, -c * (1.0 - a4) / 2.0);
    set_pair(&mut b, 1, 4, -s2 * (1.0 - a5) / 2.0);
    set_pair(&mut b, 2, 5, -s16 * (1.0 - a6) / 2.0);
    Ok((a, b))
}

fn set_pair(m: &mut Matrix6, i: usize, j: usize, v: f64) {
    m[i][j] = v;
    m[j][i] = v;
}

fn rows(m: &Matrix6) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBounds {
    /// Bound on `‖ψ(·,0)‖`.
    pub psi0_bar: f64,
    /// Bound on `‖ψ_x(·,0)‖`.
    pub psix0_bar: f64,
    /// Upper bound on `|ψ(1,0)|`.
    pub psi10_bar: f64,
    /// Lower bound on `|ψ(1,0)|`.
    pub psi10_lower: f64,
}

impl InitialBounds {
    /// Bounds read off a sampled initial target-coordinate error.
    /// `floor` keeps the lower boundary bound positive when `ψ(1,0)` vanishes.
    pub fn from_profile(psi0: &[f64], floor: f64) -> Result<Self> {
        ensure(psi0.len() >= 2, || "initial profile needs at least two nodes".into())?;
        let dx = 1.0 / (psi0.len() - 1) as f64;
        let dpsi = crate::quadrature::derivative(psi0, dx);
        let psi1 = psi0[psi0.len() - 1].abs();
        Ok(Self {
            psi0_bar: crate::quadrature::l2_norm(psi0, dx),
            psix0_bar: crate::quadrature::l2_norm(&dpsi, dx),
            psi10_bar: psi1.max(floor),
            psi10_lower: psi1.max(floor),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "K3")]
    pub k3: f64,
    #[serde(rename = "K4")]
    pub k4: f64,
    #[serde(rename = "K5")]
    pub k5: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    pub epsilon: f64,
}

pub fn certified_constants(p: &TuningParams, bounds: &InitialBounds) -> Result<Constants> {
    p.validate()?;
    ensure(bounds.psi10_lower > 0.0, || {
        format!("lower bound on psi(1,0) must be positive, got {}", bounds.psi10_lower)
    })?;
    let c = p.c;
    let k1 = (2.0 / c) * (c / 2.0 + (bounds.psi0_bar + bounds.psix0_bar) / (2.0 * bounds.psi10_lower));
    let m2 = [c * c, p.s2().powi(2), p.s16().powi(2)]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
        / (2.0 * p.lambda);
    Ok(Constants {
        k1,
        k2: 2.0 * c,
        k3: k1,
        k4: 2.0 * (c - p.lambda),
        k5: m2 / (c * (c - p.lambda)),
        m2,
        epsilon: (c / 2.0) * bounds.psi10_bar.powi(2) + bounds.psi0_bar.powi(2) + bounds.psix0_bar.powi(2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignCertificate {
    pub feasible: bool,
    pub margin: f64,
    pub eig_a_max: f64,
    pub eig_b_min: f64,
    pub params: TuningParams,
    pub initial_bounds: InitialBounds,
    pub constants: Constants,
    pub eig_a: Vec<f64>,
    pub eig_b: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl DesignCertificate {
    /// Assembles and checks both matrices. Infeasible parameter sets still
    /// yield a certificate with `feasible = false`.
    pub fn evaluate(p: &TuningParams, bounds: &InitialBounds) -> Result<Self> {
        let (a, b) = assemble_lmi(p)?;
        let ca = check_semidefinite(&rows(&a), Sense::NegativeSemidefinite, FEASIBILITY_TOL)?;
        let cb = check_semidefinite(&rows(&b), Sense::PositiveSemidefinite, FEASIBILITY_TOL)?;
        Ok(Self {
            feasible: ca.holds && cb.holds,
            margin: (-ca.extreme).min(cb.extreme),
            eig_a_max: ca.extreme,
            eig_b_min: cb.extreme,
            params: p.clone(),
            initial_bounds: bounds.clone(),
            constants: certified_constants(p, bounds)?,
            eig_a: ca.eigenvalues,
            eig_b: cb.eigenvalues,
            a: rows(&a),
            b: rows(&b),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("certificate: {e}")))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Lattice over the tuning parameters. `α₁..α₃` share one value and
/// `α₄..α₆` another; likewise `λ₁..λ₃` and `λ₄..λ₆`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub c: Vec<f64>,
    pub lambda: Vec<f64>,
    pub alpha_a: Vec<f64>,
    pub lambda_a: Vec<f64>,
    pub alpha_b: Vec<f64>,
    pub lambda_b: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            c: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            lambda: vec![0.1, 0.5, 1.0],
            alpha_a: vec![-1.0, 0.0, 0.5, 1.0, 1.5, 2.0],
            lambda_a: vec![0.05, 0.1, 0.2, 0.5, 1.0],
            alpha_b: vec![-20.0, -10.0, -5.0, -1.0, 0.0],
            lambda_b: vec![0.05, 0.1, 0.2, 0.5, 1.0],
        }
    }
}

impl SearchSpace {
    /// Candidates in lexicographic order, skipping `c ≤ λ`.
    pub fn candidates(&self, alpha: f64, beta1: f64, beta2: f64) -> Vec<TuningParams> {
        let mut out = Vec::new();
        for &c in &self.c {
            for &lambda in &self.lambda {
                if c <= lambda {
                    continue;
                }
                for &aa in &self.alpha_a {
                    for &la in &self.lambda_a {
                        for &ab in &self.alpha_b {
                            for &lb in &self.lambda_b {
                                out.push(TuningParams {
                                    c,
                                    lambda,
                                    alphas: [aa, aa, aa, ab, ab, ab],
                                    lambdas: [la, la, la, lb, lb, lb],
                                    beta1,
                                    beta2,
                                    alpha,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub best: DesignCertificate,
    pub candidates: usize,
    pub feasible: usize,
}

/// Exhaustive lattice scan returning the feasible certificate of largest
/// margin. Ties keep the lexicographically first candidate.
pub fn scan_design(
    alpha: f64,
    beta1: f64,
    beta2: f64,
    space: &SearchSpace,
    bounds: &InitialBounds,
) -> Result<ScanReport> {
    ensure(beta1 > 0.0, || format!("beta1 must be positive, got {beta1}"))?;
    ensure(beta2 > 0.0, || format!("beta2 must be positive, got {beta2}"))?;
    let candidates = space.candidates(alpha, beta1, beta2);
    ensure(!candidates.is_empty(), || "search space has no candidate with c > lambda".into())?;

    let evaluated: Vec<DesignCertificate> = candidates
        .par_iter()
        .map(|p| DesignCertificate::evaluate(p, bounds))
        .collect::<Result<_>>()?;

    let mut best_any = f64::NEG_INFINITY;
    let mut best: Option<&DesignCertificate> = None;
    let mut feasible = 0;
    for cert in &evaluated {
        best_any = best_any.max(cert.margin);
        if cert.feasible {
            feasible += 1;
            if best.is_none_or(|b| cert.margin > b.margin) {
                best = Some(cert);
            }
        }
    }
    match best {
        Some(b) => Ok(ScanReport {
            best: b.clone(),
            candidates: evaluated.len(),
            feasible,
        }),
        None => Err(Error::Infeasible {
            beta1,
            beta2,
            best_margin: best_any,
            candidates: evaluated.len(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn reference() -> TuningParams {
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

    fn bounds() -> InitialBounds {
        InitialBounds {
            psi0_bar: 1.0,
            psix0_bar: 1.0,
            psi10_bar: 1.0,
            psi10_lower: 0.5,
        }
    }

    #[test]
    fn unit_alphas_decouple() {
        let mut p = reference();
        p.alphas = [1.0; 6];
        let (a, b) = assemble_lmi(&p).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(a[i][j], 0.0);
                    assert_eq!(b[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn reference_diagonal_of_a() {
        let (a, _) = assemble_lmi(&reference()).unwrap();
        let expected = [-7.85, -2.9, -2.94375, -1.0, -6.0, -10.375];
        for i in 0..6 {
            assert_abs_diff_eq!(a[i][i], expected[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn reference_blocks_of_b() {
        let (_, b) = assemble_lmi(&reference()).unwrap();
        let blocks = [
            (0, 3, [11.5, -16.5, 125.0]),
            (1, 4, [4.0, -11.0, 75.0]),
            (2, 5, [3.5625, -6.1875, 31.25]),
        ];
        for (i, j, [d1, off, d2]) in blocks {
            assert_abs_diff_eq!(b[i][i], d1, epsilon = 1e-12);
            assert_abs_diff_eq!(b[i][j], off, epsilon = 1e-12);
            assert_abs_diff_eq!(b[j][i], off, epsilon = 1e-12);
            assert_abs_diff_eq!(b[j][j], d2, epsilon = 1e-12);
            assert!(d1 * d2 - off * off > 0.0);
        }
    }

    #[test]
    fn reference_is_feasible_and_lower_beta1_is_not() {
        let cert = DesignCertificate::evaluate(&reference(), &bounds()).unwrap();
        assert!(cert.feasible);
        let mut p = reference();
        p.beta1 = 3.8;
        let (a, _) = assemble_lmi(&p).unwrap();
        assert_abs_diff_eq!(a[3][3], 15.0 - 14.44, epsilon = 1e-12);
        assert!(!DesignCertificate::evaluate(&p, &bounds()).unwrap().feasible);
    }

    #[test]
    fn constants_match_closed_forms() {
        let k = certified_constants(&reference(), &bounds()).unwrap();
        assert_eq!(k.k2, 6.0);
        assert_eq!(k.k4, 5.0);
        assert_abs_diff_eq!(k.m2, 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k.k5, 1.2, epsilon = 1e-14);
        assert_abs_diff_eq!(k.k1, (2.0 / 3.0) * (1.5 + 2.0), epsilon = 1e-14);
        assert_eq!(k.k1, k.k3);
        assert_abs_diff_eq!(k.epsilon, 1.5 + 1.0 + 1.0, epsilon = 1e-14);
        let mut b = bounds();
        b.psi10_lower = 0.0;
        assert!(certified_constants(&reference(), &b).is_err());
    }

    #[test]
    fn validation() {
        let mut p = reference();
        p.beta2 = 0.0;
        assert!(assemble_lmi(&p).is_err());
        let mut p = reference();
        p.lambda = 3.0;
        assert!(assemble_lmi(&p).is_err());
        let mut p = reference();
        p.lambdas[4] = 0.0;
        assert!(assemble_lmi(&p).is_err());
    }

    #[test]
    fn scan_finds_reference_lattice_point() {
        let space = SearchSpace {
            c: vec![3.0],
            lambda: vec![0.5],
            alpha_a: vec![1.0],
            lambda_a: vec![0.1],
            alpha_b: vec![-10.0],
            lambda_b: vec![0.1],
        };
        let report = scan_design(-1.0, 4.0, 5.0, &space, &bounds()).unwrap();
        assert_eq!((report.candidates, report.feasible), (1, 1));
        assert_eq!(report.best.params, reference());
        match scan_design(-1.0, 3.8, 5.0, &space, &bounds()) {
            Err(Error::Infeasible { candidates, best_margin, .. }) => {
                assert_eq!(candidates, 1);
                assert!(best_margin < 0.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(scan_design(-1.0, 4.0, 0.0, &space, &bounds()).is_err());
    }

    #[test]
    fn certificate_round_trips_through_toml() {
        let cert = DesignCertificate::evaluate(&reference(), &bounds()).unwrap();
        let text = cert.to_toml().unwrap();
        assert_eq!(DesignCertificate::from_toml(&text).unwrap(), cert);
    }
}
