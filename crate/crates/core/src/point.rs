//! Points of `C` and `C²`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A point in one or two complex dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    C1(C64),
    C2([C64; 2]),
}

impl Point {
    pub fn one(z: C64) -> Self {
        Point::C1(z)
    }

    pub fn two(z1: C64, z2: C64) -> Self {
        Point::C2([z1, z2])
    }

    pub fn from_slice(coords: &[C64]) -> Result<Self> {
        match coords {
            [z] => Ok(Point::C1(*z)),
            [z1, z2] => Ok(Point::C2([*z1, *z2])),
            _ => Err(Error::Usage(format!(
                "points have 1 or 2 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn zero(dim: usize) -> Self {
        match dim {
            1 => Point::C1(C64::new(0.0, 0.0)),
            _ => Point::C2([C64::new(0.0, 0.0); 2]),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Point::C1(_) => 1,
            Point::C2(_) => 2,
        }
    }

    pub fn coords(&self) -> &[C64] {
        match self {
            Point::C1(z) => std::slice::from_ref(z),
            Point::C2(z) => z,
        }
    }

    pub fn coord(&self, i: usize) -> C64 {
        self.coords()[i]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩ = Σ self_i conj(other_i)`.
    pub fn inner(&self, other: &Point) -> C64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    pub fn scale(&self, s: C64) -> Point {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Point {
        match self {
            Point::C1(z) => Point::C1(f(*z)),
            Point::C2([a, b]) => Point::C2([f(*a), f(*b)]),
        }
    }

    pub fn conj(&self) -> Point {
        self.map(|z| z.conj())
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Unit vector in direction `i`.
    pub fn basis(dim: usize, i: usize) -> Point {
        let mut p = Point::zero(dim);
        if let Point::C1(z) = &mut p {
            *z = C64::new(1.0, 0.0);
        } else if let Point::C2(z) = &mut p {
            z[i] = C64::new(1.0, 0.0);
        }
        p
    }

    pub fn normalized(&self) -> Point {
        let n = self.norm();
        self.scale(C64::new(1.0 / n, 0.0))
    }

    fn zip(self, rhs: Point, f: impl Fn(C64, C64) -> C64) -> Point {
        match (self, rhs) {
            (Point::C1(a), Point::C1(b)) => Point::C1(f(a, b)),
            (Point::C2([a1, a2]), Point::C2([b1, b2])) => Point::C2([f(a1, b1), f(a2, b2)]),
            (a, b) => panic!("dimension mismatch: {} vs {}", a.dim(), b.dim()),
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        self.map(|z| z * rhs)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords()
            .iter()
            .map(|z| format!("{}{:+}i", z.re, z.im))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Complex 2×2 matrix stored row-major; used for unitary factors and Jacobians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Mat2([[o, z], [z, o]])
    }

    pub fn diag(a: C64, b: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Mat2([[a, z], [z, b]])
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    pub fn adjoint(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let m = &self.0;
        Some(Mat2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    /// Largest entry of `|M* M − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let id = Mat2::identity();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((p.0[i][j] - id.0[i][j]).norm());
            }
        }
        worst
    }

    /// Nearest unitary by Gram–Schmidt on the columns.
    pub fn reunitarize(&self) -> Mat2 {
        let m = &self.0;
        let mut c0 = [m[0][0], m[1][0]];
        let n0 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
        c0 = [c0[0] / n0, c0[1] / n0];
        let mut c1 = [m[0][1], m[1][1]];
        let proj = c1[0] * c0[0].conj() + c1[1] * c0[1].conj();
        c1 = [c1[0] - proj * c0[0], c1[1] - proj * c0[1]];
        let n1 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
        c1 = [c1[0] / n1, c1[1] / n1];
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    /// `exp(iθ)` rotation of the first axis combined with a rotation mixing the two axes.
    pub fn unitary(alpha: f64, beta: f64, mix: f64) -> Mat2 {
        let (s, c) = mix.sin_cos();
        let ea = C64::from_polar(1.0, alpha);
        let eb = C64::from_polar(1.0, beta);
        Mat2([[ea * c, -eb.conj() * s], [eb * s, ea.conj() * c]])
    }
}

/// Parses `"re,im"` or `"re,im;re,im"`.
pub fn parse_point(s: &str) -> Result<Point> {
    let coords: Result<Vec<C64>> = s.split(';').map(parse_complex).collect();
    Point::from_slice(&coords?)
}

pub fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| Error::Usage(format!("bad number '{t}' in '{s}'")))
    };
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(Error::Usage(format!("bad complex number '{s}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_points() {
        assert_eq!(parse_point("0.5,0.1").unwrap(), Point::one(c64(0.5, 0.1)));
        assert_eq!(
            parse_point("0.3,0;0.2,-1").unwrap(),
            Point::two(c64(0.3, 0.0), c64(0.2, -1.0))
        );
        assert!(parse_point("1,2,3").is_err());
        assert!(parse_point("a,b").is_err());
    }

    #[test]
    fn unitary_builder_is_unitary() {
        for k in 0..10 {
            let u = Mat2::unitary(0.3 * k as f64, 1.1 - k as f64, 0.7 * k as f64);
            assert!(u.unitarity_defect() < 1e-14);
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = Mat2([[c64(1.0, 2.0), c64(0.5, 0.0)], [c64(-0.3, 0.1), c64(2.0, -1.0)]]);
        let p = m.mul(&m.inverse().unwrap());
        assert!((p.0[0][0] - 1.0).norm() < 1e-14 && p.0[0][1].norm() < 1e-14);
    }
}
