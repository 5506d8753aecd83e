//! Small dense linear algebra: phase-space 2-vectors and 2×2 matrices,
//! an in-place Cholesky factorization for the noise-sampling covariance,
//! and deterministic pairwise summation.

use crate::error::{Error, Result};
use crate::Real;
use core::ops::{Add, Mul, Neg, Sub};

/// Phase-space vector (x, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2<T = f64> {
    pub x: T,
    pub p: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, p: T) -> Self {
        Vec2 { x, p }
    }

    pub fn zero() -> Self {
        Vec2 {
            x: T::zero(),
            p: T::zero(),
        }
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.p * other.p
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Vec2::new(self.x + rhs.x, self.p + rhs.p)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Vec2::new(self.x - rhs.x, self.p - rhs.p)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec2::new(self.x * s, self.p * s)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.p)
    }
}

/// Dense 2×2 matrix in row-major order over phase-space indices (x, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T = f64> {
    pub m: [[T; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Mat2 {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    /// Symmetric matrix from the (xx, xp, pp) components.
    pub fn symmetric(xx: T, xp: T, pp: T) -> Self {
        Self::new(xx, xp, xp, pp)
    }

    pub fn transpose(self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    /// Inverse; errors if |det| is below `tol` times the squared norm.
    pub fn try_inverse(self, tol: T) -> Option<Self> {
        let d = self.det();
        let scale = self.norm_frobenius();
        if d.abs() <= tol * scale * scale {
            return None;
        }
        Some(Self::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    pub fn norm_frobenius(self) -> T {
        let mut s = T::zero();
        for r in &self.m {
            for &v in r {
                s += v * v;
            }
        }
        s.sqrt()
    }

    /// Largest absolute entry.
    pub fn norm_max(self) -> T {
        let mut s = T::zero();
        for r in &self.m {
            for &v in r {
                s = s.max(v.abs());
            }
        }
        s
    }

    pub fn mul_vec(self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.p,
            self.m[1][0] * v.x + self.m[1][1] * v.p,
        )
    }

    /// (self symmetrized): (A + Aᵀ)/2.
    pub fn sym(self) -> Self {
        let half = T::lit(0.5);
        Self::new(
            self.m[0][0],
            (self.m[0][1] + self.m[1][0]) * half,
            (self.m[0][1] + self.m[1][0]) * half,
            self.m[1][1],
        )
    }

    /// Eigenvalues of a symmetric 2×2 matrix, ascending.
    pub fn sym_eigenvalues(self) -> (T, T) {
        let half = T::lit(0.5);
        let mean = (self.m[0][0] + self.m[1][1]) * half;
        let off = (self.m[0][1] + self.m[1][0]) * half;
        let dev = (self.m[0][0] - self.m[1][1]) * half;
        let r = (dev * dev + off * off).sqrt();
        (mean - r, mean + r)
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] -= rhs.m[i][j];
            }
        }
        out
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        out
    }
}

impl<T: Real> Mul<T> for Mat2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] *= s;
            }
        }
        out
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self * T::lit(-1.0)
    }
}

/// In-place Cholesky factorization A = LLᵀ of a symmetric positive-definite
/// matrix stored row-major in `a` (n×n). On success the lower triangle holds
/// L and the strict upper triangle is zeroed.
pub fn cholesky_in_place<T: Real>(a: &mut [T], n: usize) -> Result<()> {
    assert_eq!(a.len(), n * n, "matrix buffer must be n*n");
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= T::zero() || !d.is_finite() {
            return Err(Error::Factorization {
                context: format!(
                    "pivot {} non-positive ({:e}) in Cholesky of {}x{} matrix",
                    j,
                    d.to_f64().unwrap_or(f64::NAN),
                    n,
                    n
                ),
            });
        }
        let l = d.sqrt();
        a[j * n + j] = l;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
        for i in 0..j {
            a[i * n + j] = T::zero();
        }
    }
    Ok(())
}

/// Multiplies the lower-triangular factor (as produced by
/// [`cholesky_in_place`]) by a vector: y = L g.
pub fn lower_tri_mul<T: Real>(l: &[T], n: usize, g: &[T], out: &mut [T]) {
    assert_eq!(g.len(), n);
    assert_eq!(out.len(), n);
    for i in 0..n {
        let mut s = T::zero();
        for k in 0..=i {
            s += l[i * n + k] * g[k];
        }
        out[i] = s;
    }
}

/// Eigenvalues of a symmetric n×n matrix (row-major) by cyclic Jacobi
/// rotations. Intended for modest n (diagnostic checks on noise matrices);
/// cost is O(n³) per sweep. Returns the eigenvalues sorted ascending.
pub fn jacobi_eigenvalues<T: Real>(a: &[T], n: usize) -> Vec<T> {
    assert_eq!(a.len(), n * n, "matrix buffer must be n*n");
    let mut m = a.to_vec();
    let off = |m: &[T]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s
    };
    let scale = (0..n)
        .map(|i| m[i * n + i].abs())
        .fold(T::zero(), T::max)
        .max(T::lit(1e-300));
    for _sweep in 0..60 {
        if off(&m) <= T::epsilon() * T::epsilon() * scale * scale * T::of_usize(n * n) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= T::epsilon() * scale {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = {
                    let sign = if theta >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = (T::one() + t * t).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Sums a slice by fixed-order pairwise reduction. The result depends only on
/// the order of the input slice, never on chunking or thread count, and loses
/// fewer digits than naive left-to-right accumulation.
pub fn pairwise_sum<T: Real>(v: &[T]) -> T {
    match v.len() {
        0 => T::zero(),
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mat2_inverse_roundtrip() {
        let a = Mat2::<f64>::new(2.0, 1.0, -0.5, 3.0);
        let inv = a.try_inverse(1e-14).unwrap();
        let id = a * inv;
        assert_relative_eq!(id.m[0][0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(id.m[1][1], 1.0, epsilon = 1e-14);
        assert!(id.m[0][1].abs() < 1e-14 && id.m[1][0].abs() < 1e-14);
    }

    #[test]
    fn mat2_singular_detected() {
        let a = Mat2::new(1.0, 2.0, 0.5, 1.0);
        assert!(a.try_inverse(1e-10).is_none());
    }

    #[test]
    fn sym_eigenvalues_match_characteristic_polynomial() {
        let a = Mat2::symmetric(2.0, 0.7, 1.0);
        let (lo, hi) = a.sym_eigenvalues();
        assert_relative_eq!(lo + hi, a.trace(), epsilon = 1e-14);
        assert_relative_eq!(lo * hi, a.det(), epsilon = 1e-14);
        assert!(lo <= hi);
    }

    #[test]
    fn cholesky_reconstructs_matrix() {
        // A = B Bᵀ + I for a fixed B is symmetric positive definite.
        let n = 5;
        let b: Vec<f64> = (0..n * n).map(|k| ((k * 7 + 3) % 11) as f64 / 11.0).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in 0..n {
                    s += b[i * n + k] * b[j * n + k];
                }
                a[i * n + j] = s;
            }
        }
        let orig = a.clone();
        cholesky_in_place(&mut a, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += a[i * n + k] * a[j * n + k];
                }
                assert_relative_eq!(s, orig[i * n + j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_in_place(&mut a, 2).is_err());
    }

    #[test]
    fn pairwise_sum_matches_exact() {
        let v: Vec<f64> = (1..=1000).map(|k| 1.0 / k as f64).collect();
        let s = pairwise_sum(&v);
        let mut exact = 0.0f64;
        for &x in v.iter().rev() {
            exact += x;
        }
        assert_relative_eq!(s, exact, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_eigenvalues_known_spectrum() {
        // Diagonal (1, 2, 5) conjugated by a rotation in the (0,1) plane.
        let (c, s) = (0.6f64, 0.8f64);
        let d = [1.0, 2.0, 5.0];
        let mut a = vec![0.0; 9];
        let r = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    v += r[i][k] * d[k] * r[j][k];
                }
                a[i * 3 + j] = v;
            }
        }
        let eigs = jacobi_eigenvalues(&a, 3);
        assert_relative_eq!(eigs[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[2], 5.0, epsilon = 1e-12);
    }
}
