//! Small dense matrix helpers. Matrices are row-major slices of length
//! `dim * dim`; dimensions here never exceed a handful.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative degeneracy threshold: a matrix is singular when
/// `|det| ≤ DEGENERACY · (max |entry|)^dim`.
pub const DEGENERACY: f64 = 1e-10;

pub fn max_abs(m: &[f64]) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn identity(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

/// Determinant by partial-pivot elimination.
pub fn det(m: &[f64], dim: usize) -> f64 {
    let mut a = m.to_vec();
    let mut d = 1.0;
    for c in 0..dim {
        let piv = (c..dim)
            .max_by(|&r, &s| a[r * dim + c].abs().total_cmp(&a[s * dim + c].abs()))
            .unwrap_or(c);
        if a[piv * dim + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for k in 0..dim {
                a.swap(c * dim + k, piv * dim + k);
            }
            d = -d;
        }
        let p = a[c * dim + c];
        d *= p;
        for r in c + 1..dim {
            let f = a[r * dim + c] / p;
            for k in c..dim {
                a[r * dim + k] -= f * a[c * dim + k];
            }
        }
    }
    d
}

/// Fails with [`Error::Degenerate`] when `m` is numerically singular.
pub fn check_nondegenerate(m: &[f64], dim: usize) -> Result<f64> {
    let d = det(m, dim);
    let threshold = DEGENERACY * max_abs(m).powi(dim as i32);
    if !(d.abs() > threshold) {
        return Err(Error::Degenerate { det: d, threshold });
    }
    Ok(d)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting on the primal
/// parts. Running the elimination in dual arithmetic propagates
/// `d(A⁻¹) = −A⁻¹ (dA) A⁻¹` without forming it.
pub fn invert<S: Scalar>(m: &[S], dim: usize) -> Result<Vec<S>> {
    if m.len() != dim * dim {
        return Err(Error::Dimension(format!(
            "matrix of length {} is not {dim}x{dim}",
            m.len()
        )));
    }
    let primal: Vec<f64> = m.iter().map(|s| s.re()).collect();
    check_nondegenerate(&primal, dim)?;

    let mut a = m.to_vec();
    let mut inv = vec![S::zero(); dim * dim];
    for i in 0..dim {
        inv[i * dim + i] = S::one();
    }
    for c in 0..dim {
        let piv = (c..dim)
            .max_by(|&r, &s| a[r * dim + c].re().abs().total_cmp(&a[s * dim + c].re().abs()))
            .unwrap_or(c);
        if piv != c {
            for k in 0..dim {
                a.swap(c * dim + k, piv * dim + k);
                inv.swap(c * dim + k, piv * dim + k);
            }
        }
        let p = a[c * dim + c];
        for k in 0..dim {
            a[c * dim + k] = a[c * dim + k] / p;
            inv[c * dim + k] = inv[c * dim + k] / p;
        }
        for r in 0..dim {
            if r == c {
                continue;
            }
            let f = a[r * dim + c];
            if f.re() == 0.0 && !S::HAS_DERIVATIVES {
                continue;
            }
            for k in 0..dim {
                let (ack, ick) = (a[c * dim + k], inv[c * dim + k]);
                a[r * dim + k] -= f * ack;
                inv[r * dim + k] -= f * ick;
            }
        }
    }
    Ok(inv)
}

pub fn matmul(a: &[f64], b: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

/// `(m + mᵀ)/2` and the largest `|m_ij − m_ji|`.
pub fn symmetrize(m: &[f64], dim: usize) -> (Vec<f64>, f64) {
    let mut out = m.to_vec();
    let mut asym = 0.0f64;
    for i in 0..dim {
        for j in i + 1..dim {
            let (a, b) = (m[i * dim + j], m[j * dim + i]);
            asym = asym.max((a - b).abs());
            out[i * dim + j] = 0.5 * (a + b);
            out[j * dim + i] = 0.5 * (a + b);
        }
    }
    (out, asym)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(m: &[f64], dim: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * dim + j] * a[i * dim + j])
            .sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * dim + q] - a[p * dim + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let (akp, akq) = (a[k * dim + p], a[k * dim + q]);
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let (apk, aqk) = (a[p * dim + k], a[q * dim + k]);
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..dim).map(|i| a[i * dim + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Counts of positive and negative eigenvalues; eigenvalues within
/// `1e-12 · max|λ|` of zero are counted in neither.
pub fn signature(m: &[f64], dim: usize) -> (usize, usize) {
    let ev = symmetric_eigenvalues(m, dim);
    let tol = 1e-12 * max_abs(&ev);
    let pos = ev.iter().filter(|&&l| l > tol).count();
    let neg = ev.iter().filter(|&&l| l < -tol).count();
    (pos, neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    #[test]
    fn inverse_examples() {
        assert_eq!(invert(&identity(3), 3).unwrap(), identity(3));
        let inv = invert(&[2.0, 0.0, 0.0, -3.0], 2).unwrap();
        assert_eq!(inv[0], 0.5);
        assert!((inv[3] + 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(inv[1], 0.0);
    }

    #[test]
    fn singular_is_reported_with_determinant() {
        match invert(&[1.0, 2.0, 2.0, 4.0], 2) {
            Err(Error::Degenerate { det, .. }) => assert_eq!(det, 0.0),
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn dual_inverse_derivative() {
        // A(s) = [[1+s, 1], [0, 2]]: d(A⁻¹)/ds at s=0 equals −A⁻¹ E₁₁ A⁻¹.
        let a = [Dual::new(1.0, 1.0), Dual::constant(1.0), Dual::constant(0.0), Dual::constant(2.0)];
        let inv = invert(&a, 2).unwrap();
        let ai = [1.0, -0.5, 0.0, 0.5];
        let expect = [-ai[0] * ai[0], -ai[0] * ai[1], -ai[2] * ai[0], -ai[2] * ai[1]];
        for k in 0..4 {
            assert!((inv[k].re - ai[k]).abs() < 1e-15);
            assert!((inv[k].eps - expect[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn eigen_and_signature() {
        let m = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, -5.0];
        let ev = symmetric_eigenvalues(&m, 3);
        for (got, want) in ev.iter().zip([-5.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(signature(&m, 3), (2, 1));
        assert_eq!(signature(&[0.0, 0.5, 0.5, 0.0], 2), (1, 1));
    }
}
