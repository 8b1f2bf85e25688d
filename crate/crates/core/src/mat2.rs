//! Fixed-size 2x2 complex matrices for single-qubit operator identities.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
    pub const IDENTITY: Mat2 = Mat2([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);

    /// Elementary matrix |row><col|.
    pub fn unit(row: usize, col: usize) -> Mat2 {
        let mut m = Mat2::ZERO;
        m.0[row][col] = c(1.0, 0.0);
        m
    }

    /// |v><v| for a column vector v.
    pub fn projector(v: [Complex64; 2]) -> Mat2 {
        let mut m = Mat2::ZERO;
        for (r, row) in m.0.iter_mut().enumerate() {
            for (col, entry) in row.iter_mut().enumerate() {
                *entry = v[r] * v[col].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let mut m = *self;
        for row in &mut m.0 {
            for e in row {
                *e *= s;
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for col in 0..2 {
                worst = worst.max((self.0[r][col] - other.0[r][col]).norm());
            }
        }
        worst
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut m = self;
        for r in 0..2 {
            for col in 0..2 {
                m.0[r][col] += rhs.0[r][col];
            }
        }
        m
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut m = Mat2::ZERO;
        for r in 0..2 {
            for col in 0..2 {
                m.0[r][col] = self.0[r][0] * rhs.0[0][col] + self.0[r][1] * rhs.0[1][col];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_trace_is_one() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = Mat2::projector([c(s, 0.0), c(0.0, s)]);
        assert!((p.trace() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(p.max_abs_diff(&(p * p)) < 1e-15);
    }
}
