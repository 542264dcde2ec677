//! Cyclic Jacobi eigenvalue iteration for small dense symmetric matrices.

use crate::error::{Error, Result};

/// Allowed `|M_ij − M_ji|` relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Sweeps stop once the off-diagonal Frobenius mass drops below this
/// (relative to the matrix Frobenius norm).
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `M ⪯ 0`
    NegativeSemidefinite,
    /// `M ⪰ 0`
    PositiveSemidefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemidefiniteCheck {
    pub holds: bool,
    /// Largest eigenvalue for the negative test, smallest for the positive one.
    pub extreme: f64,
    /// All eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    let scale = m
        .iter()
        .flatten()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((m[i][j] - m[j][i]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric(asym));
    }

    let mut a: Vec<Vec<f64>> = m.to_vec();
    let frob = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= OFF_DIAGONAL_TOL * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

/// One Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut [Vec<f64>], p: usize, q: usize) {
    let apq = a[p][q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.len();
    for k in 0..n {
        let akp = a[k][p];
        let akq = a[k][q];
        a[k][p] = c * akp - s * akq;
        a[k][q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p][k];
        let aqk = a[q][k];
        a[p][k] = c * apk - s * aqk;
        a[q][k] = s * apk + c * aqk;
    }
    a[p][q] = 0.0;
    a[q][p] = 0.0;
}

/// Tests `M ⪯ 0` or `M ⪰ 0` against an absolute tolerance on the extreme
/// eigenvalue.
pub fn check_semidefinite(m: &[Vec<f64>], sense: Sense, tol: f64) -> Result<SemidefiniteCheck> {
    let eigenvalues = symmetric_eigenvalues(m)?;
    let (holds, extreme) = match sense {
        Sense::NegativeSemidefinite => {
            let max = *eigenvalues.last().unwrap_or(&0.0);
            (max <= tol, max)
        }
        Sense::PositiveSemidefinite => {
            let min = *eigenvalues.first().unwrap_or(&0.0);
            (min >= -tol, min)
        }
    };
    Ok(SemidefiniteCheck {
        holds,
        extreme,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embed(block: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in block.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[i][j] = *v;
            }
        }
        m
    }

    #[test]
    fn identity_is_positive() {
        let id: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let r = check_semidefinite(&id, Sense::PositiveSemidefinite, 1e-10).unwrap();
        assert!(r.holds);
        assert_eq!(r.extreme, 1.0);
    }

    #[test]
    fn diagonal_negative_semidefinite() {
        let m = embed(&[vec![-1.0, 0.0], vec![0.0, -2.0]], 6);
        let r = check_semidefinite(&m, Sense::NegativeSemidefinite, 1e-10).unwrap();
        assert!(r.holds);
        assert_eq!(r.extreme, 0.0);
    }

    #[test]
    fn swap_block_is_indefinite() {
        let m = embed(&[vec![0.0, 1.0], vec![1.0, 0.0]], 6);
        let r = check_semidefinite(&m, Sense::PositiveSemidefinite, 1e-10).unwrap();
        assert!(!r.holds);
        assert!((r.extreme + 1.0).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = vec![vec![1.0, 2.0], vec![2.5, 1.0]];
        assert!(matches!(
            check_semidefinite(&m, Sense::PositiveSemidefinite, 1e-10),
            Err(Error::Asymmetric(_))
        ));
        assert!(symmetric_eigenvalues(&[vec![1.0, 2.0]]).is_err());
    }
}
