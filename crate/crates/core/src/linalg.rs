//! Small dense linear algebra over any [`Scalar`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Condition number (1-norm) beyond which a floating-point solve is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.n + c] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.to_vec())
            .collect()
    }

    fn one_norm(&self) -> f64 {
        (0..self.n)
            .map(|c| {
                (0..self.n)
                    .map(|r| self.get(r, c).to_f64_lossy().abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// LU factorization with partial pivoting.
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let pivot_row = (k..n)
                .max_by(|&i, &j| {
                    lu[i * n + k]
                        .abs()
                        .partial_cmp(&lu[j * n + k].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty pivot range");
            if lu[pivot_row * n + k].is_zero() {
                return Err(Error::Numerical("singular matrix".into()));
            }
            if pivot_row != k {
                for c in 0..n {
                    lu.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[k * n + k].clone();
            for r in k + 1..n {
                let factor = lu[r * n + k].clone() / pivot.clone();
                if factor.is_zero() {
                    continue;
                }
                for c in k + 1..n {
                    let delta = factor.clone() * lu[k * n + c].clone();
                    lu[r * n + c] = lu[r * n + c].clone() - delta;
                }
                lu[r * n + k] = factor;
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for r in 0..n {
            for c in 0..r {
                let delta = self.lu[r * n + c].clone() * x[c].clone();
                x[r] = x[r].clone() - delta;
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                let delta = self.lu[r * n + c].clone() * x[c].clone();
                x[r] = x[r].clone() - delta;
            }
            x[r] = x[r].clone() / self.lu[r * n + r].clone();
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.n;
        let mut inv = Matrix::zeros(n);
        for c in 0..n {
            let mut e = vec![T::zero(); n];
            e[c] = T::one();
            for (r, v) in self.solve(&e).into_iter().enumerate() {
                inv.set(r, c, v);
            }
        }
        inv
    }
}

/// 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁`, computed in `f64`.
pub fn condition_number<T: Scalar>(a: &Matrix<T>) -> Result<f64> {
    let lu = Lu::factor(a)?;
    Ok(a.one_norm() * lu.inverse().one_norm())
}

/// Solves `a x = b`. For inexact scalars, refuses systems whose condition
/// number exceeds [`CONDITION_LIMIT`].
pub fn solve_checked<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let lu = Lu::factor(a)?;
    if !T::EXACT {
        let cond = a.one_norm() * lu.inverse().one_norm();
        if cond.is_nan() || cond > CONDITION_LIMIT {
            return Err(Error::Numerical(format!(
                "condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
            )));
        }
    }
    Ok(lu.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, Rational};

    #[test]
    fn exact_solve_of_a_small_system() {
        let a = Matrix::from_fn(2, |r, c| rational([[2, 1], [1, 3]][r][c], 1));
        let b = vec![rational(3, 1), rational(5, 1)];
        let x = solve_checked(&a, &b).unwrap();
        assert_eq!(x, vec![rational(4, 5), rational(7, 5)]);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_fn(2, |r, c| [[0.0, 1.0], [2.0, 0.0]][r][c]);
        let x = solve_checked(&a, &[3.0, 4.0]).unwrap();
        assert_eq!(x, vec![2.0, 3.0]);
    }

    #[test]
    fn singular_and_ill_conditioned_systems_are_rejected() {
        let a = Matrix::from_fn(2, |_, _| rational(1, 1));
        assert!(matches!(
            solve_checked::<Rational>(&a, &[rational(1, 1), rational(1, 1)]),
            Err(Error::Numerical(_))
        ));
        let a = Matrix::from_fn(2, |r, c| if r == 1 && c == 1 { 1.0 + 1e-14 } else { 1.0 });
        assert!(matches!(
            solve_checked(&a, &[1.0, 1.0]),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = Matrix::from_fn(3, |r, c| {
            [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]][r][c]
        });
        let inv = Lu::factor(&a).unwrap().inverse();
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| a.get(r, k) * inv.get(k, c)).sum();
                assert!((v - if r == c { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(condition_number(&a).unwrap() > 1.0);
    }
}
