//! Small fixed-size vector helpers over `[T; 3]` / `[T; 6]`.

use crate::real::Real;

pub type V3<T> = [T; 3];
pub type V6<T> = [T; 6];

#[inline]
pub fn dot<T: Real>(a: &V3<T>, b: &V3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm<T: Real>(a: &V3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn add<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Real>(a: &V3<T>, s: T) -> V3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn unit<T: Real>(a: &V3<T>) -> V3<T> {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Rotation of `v` about the z-axis by angle `a`.
#[inline]
pub fn rot_z<T: Real>(v: &V3<T>, a: T) -> V3<T> {
    let (s, c) = a.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        let z = T::zero();
        let o = T::one();
        Mat3([[o, z, z], [z, o, z], [z, z, o]])
    }

    /// Matrix with the given column vectors.
    pub fn from_columns(c0: &V3<T>, c1: &V3<T>, c2: &V3<T>) -> Self {
        Mat3([
            [c0[0], c1[0], c2[0]],
            [c0[1], c1[1], c2[1]],
            [c0[2], c1[2], c2[2]],
        ])
    }

    #[inline]
    pub fn mul_vec(&self, v: &V3<T>) -> V3<T> {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        let a = &self.0;
        let b = &other.0;
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Mat3(out)
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.0;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        Mat3(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.0;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v + other.0[i][j];
            }
        }
        Mat3(out)
    }

    /// Max-abs deviation of `self · selfᵀ` from the identity.
    pub fn orthonormality_residual(&self) -> T {
        let p = self.mul_mat(&self.transpose());
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((p.0[i][j] - target).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_right_handed() {
        let x = [1.0f64, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        assert_eq!(cross(&x, &y), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn rotation_round_trip() {
        let v = [0.3f64, -1.2, 0.7];
        let w = rot_z(&rot_z(&v, 1.1), -1.1);
        for i in 0..3 {
            assert!((v[i] - w[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn mat3_transpose_mul() {
        let m = Mat3([[1.0, 2.0, 3.0], [0.0, 1.0, 4.0], [5.0, 6.0, 0.0]]);
        let v = [1.0, 1.0, 1.0];
        let mv = m.mul_vec(&v);
        assert_eq!(mv, [6.0, 5.0, 11.0]);
        assert!(Mat3::<f64>::identity().orthonormality_residual() == 0.0);
    }
}
