//! Small exact linear algebra over jets and scalars (7x7 at most).

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::{Scalar, Sign};

pub type JetMat<S> = Vec<Vec<Jet<S>>>;

pub fn mat_zero<S: Scalar>(n: usize, order: u32) -> JetMat<S> {
    (0..n)
        .map(|_| (0..n).map(|_| Jet::zero(order)).collect())
        .collect()
}

pub fn mat_identity<S: Scalar>(n: usize, order: u32) -> JetMat<S> {
    let mut m = mat_zero(n, order);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Jet::one(order);
    }
    m
}

pub fn mat_scale<S: Scalar>(m: &JetMat<S>, c: &S) -> JetMat<S> {
    m.iter()
        .map(|row| row.iter().map(|j| j.scale(c)).collect())
        .collect()
}

pub fn mat_is_symmetric<S: Scalar>(m: &JetMat<S>) -> bool {
    let n = m.len();
    (0..n).all(|i| (i + 1..n).all(|j| m[i][j] == m[j][i]))
}

/// LU decomposition without pivoting; valid when every leading pivot is a
/// unit jet (nonzero constant term), which holds for matrices whose
/// constant term is definite. Returns (det, inverse).
pub fn mat_det_inverse<S: Scalar>(m: &JetMat<S>) -> Result<(Jet<S>, JetMat<S>)> {
    let n = m.len();
    let order = m[0][0].order();
    // augmented Gauss-Jordan
    let mut a = m.clone();
    let mut inv = mat_identity::<S>(n, order);
    let mut det = Jet::one(order);
    for col in 0..n {
        let pivot = a[col][col].clone();
        if pivot.eval0().is_zero() {
            return Err(Error::SingularMetric);
        }
        det = det.mul(&pivot)?;
        let pinv = pivot.unit_power(-1, 1)?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&pinv)?;
            inv[col][j] = inv[col][j].mul(&pinv)?;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                a[row][j] = a[row][j].sub(&f.mul(&a[col][j])?)?;
                inv[row][j] = inv[row][j].sub(&f.mul(&inv[col][j])?)?;
            }
        }
    }
    Ok((det, inv))
}

/// Leading principal minors of a scalar matrix, exact, via fraction-free
/// Bareiss elimination. Stops early (returning fewer minors) if a pivot
/// vanishes, which already rules out definiteness.
pub fn leading_minors<S: Scalar>(m: &[Vec<S>]) -> Vec<S> {
    let n = m.len();
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut minors = Vec::with_capacity(n);
    let mut prev = S::one();
    for k in 0..n {
        let pivot = a[k][k].clone();
        minors.push(pivot.clone());
        if pivot.is_zero() {
            break;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[i][j].mul(&pivot).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = num.div(&prev).expect("bareiss divisibility");
            }
        }
        prev = pivot;
    }
    minors
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Neither,
}

pub fn definiteness<S: Scalar>(m: &[Vec<S>]) -> Definiteness {
    let n = m.len();
    let minors = leading_minors(m);
    if minors.len() < n || minors.iter().any(|d| d.is_zero()) {
        return Definiteness::Neither;
    }
    if minors.iter().all(|d| d.sign() == Sign::Positive) {
        return Definiteness::PositiveDefinite;
    }
    let alternating = minors.iter().enumerate().all(|(k, d)| {
        let expected = if k % 2 == 0 {
            Sign::Negative
        } else {
            Sign::Positive
        };
        d.sign() == expected
    });
    if alternating {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::Neither
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn inverse_roundtrip() {
        let k = 3;
        let mut m = mat_identity::<Rational>(3, k);
        m[0][1] = Jet::var(1, k);
        m[1][0] = Jet::var(1, k);
        m[2][2] = Jet::one(k).add(&Jet::var(2, k)).unwrap();
        let (det, inv) = mat_det_inverse(&m).unwrap();
        assert!(!det.is_zero());
        // m * inv = id to effective order
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Jet::zero(k);
                for l in 0..3 {
                    acc = acc.add(&m[i][l].mul(&inv[l][j]).unwrap()).unwrap();
                }
                let expected = if i == j { Jet::one(k) } else { Jet::zero(k) };
                let n = acc.eff().max(0) as u32;
                assert!(acc.eq_through(&expected, n));
            }
        }
    }

    #[test]
    fn definiteness_cases() {
        let pos = vec![
            vec![Rational::new(2, 1), Rational::new(1, 1)],
            vec![Rational::new(1, 1), Rational::new(2, 1)],
        ];
        assert_eq!(definiteness(&pos), Definiteness::PositiveDefinite);
        let neg = vec![
            vec![Rational::new(-2, 1), Rational::new(1, 1)],
            vec![Rational::new(1, 1), Rational::new(-2, 1)],
        ];
        assert_eq!(definiteness(&neg), Definiteness::NegativeDefinite);
        let indef = vec![
            vec![Rational::new(2, 1), Rational::new(3, 1)],
            vec![Rational::new(3, 1), Rational::new(2, 1)],
        ];
        assert_eq!(definiteness(&indef), Definiteness::Neither);
        let sing = vec![
            vec![Rational::zero(), Rational::zero()],
            vec![Rational::zero(), Rational::new(1, 1)],
        ];
        assert_eq!(definiteness(&sing), Definiteness::Neither);
    }
}
