//! Truncated Laurent series in one variable and truncated Taylor series in two.
//!
//! A [`TruncatedLaurent`] stores `a_j` for `j ∈ [−M, N]` around a center `c` and
//! represents `Σ a_j (z − c)^j`. Every arithmetic result carries `tail_bound`,
//! an upper bound on the sup-error over the unit circle `|z − c| = 1` caused by
//! discarded coefficients. Coefficients smaller than [`FLUSH_TO_ZERO`] in
//! magnitude are stored as exact zeros.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{C64, Point};

pub const DEFAULT_LAURENT_ORDER: usize = 64;
pub const DEFAULT_TAYLOR_DEGREE: usize = 16;
pub const DEFAULT_TAIL_WINDOW: usize = 16;
pub const FLUSH_TO_ZERO: f64 = 1e-300;

const ZERO: C64 = C64::new(0.0, 0.0);

fn flush(c: C64) -> C64 {
    if c.norm() < FLUSH_TO_ZERO {
        ZERO
    } else {
        c
    }
}

/// Annular evaluation region `inner < |z − c| < outer`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub inner: f64,
    pub outer: f64,
}

impl Region {
    pub const PLANE: Region = Region {
        inner: 0.0,
        outer: f64::INFINITY,
    };

    pub fn is_plane(&self) -> bool {
        self.inner == 0.0 && self.outer.is_infinite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedLaurent {
    center: C64,
    lo: i32,
    coeffs: Vec<C64>,
    region: Region,
    tail_bound: f64,
}

impl TruncatedLaurent {
    /// Zero series with window `[−m, n]`.
    pub fn zeros(center: C64, m: usize, n: usize) -> Self {
        TruncatedLaurent {
            center,
            lo: -(m as i32),
            coeffs: vec![ZERO; m + n + 1],
            region: Region::PLANE,
            tail_bound: 0.0,
        }
    }

    pub fn from_entries(
        center: C64,
        m: usize,
        n: usize,
        entries: impl IntoIterator<Item = (i32, C64)>,
    ) -> Result<Self> {
        let mut s = Self::zeros(center, m, n);
        for (j, c) in entries {
            s.set(j, c)?;
        }
        Ok(s)
    }

    /// Builds `Σ_{j=−m}^{n} f(j) z^j` around zero.
    pub fn from_fn(m: usize, n: usize, f: impl Fn(i32) -> C64) -> Self {
        let mut s = Self::zeros(ZERO, m, n);
        for j in -(m as i32)..=(n as i32) {
            s.coeffs[(j - s.lo) as usize] = flush(f(j));
        }
        s
    }

    pub fn constant(c: C64, m: usize, n: usize) -> Self {
        let mut s = Self::zeros(ZERO, m, n);
        s.coeffs[(-s.lo) as usize] = flush(c);
        s
    }

    /// `z ↦ z` around zero.
    pub fn identity(m: usize, n: usize) -> Self {
        Self::monomial(C64::new(1.0, 0.0), 1, m, n.max(1))
    }

    pub fn monomial(c: C64, j: i32, m: usize, n: usize) -> Self {
        let mut s = Self::zeros(ZERO, m, n);
        s.set(j, c).expect("monomial index inside window");
        s
    }

    pub fn with_region(mut self, inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && outer > inner) {
            return Err(Error::Usage(format!(
                "region needs 0 ≤ inner < outer, got ({inner}, {outer})"
            )));
        }
        self.region = Region { inner, outer };
        Ok(self)
    }

    pub fn with_tail_bound(mut self, bound: f64) -> Self {
        self.tail_bound = bound;
        self
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `(M, N)`: the window is `[−M, N]`.
    pub fn orders(&self) -> (usize, usize) {
        let m = (-self.lo) as usize;
        (m, self.coeffs.len() - 1 - m)
    }

    pub fn min_index(&self) -> i32 {
        self.lo
    }

    pub fn max_index(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, j: i32) -> C64 {
        if j < self.lo || j > self.max_index() {
            ZERO
        } else {
            self.coeffs[(j - self.lo) as usize]
        }
    }

    pub fn set(&mut self, j: i32, c: C64) -> Result<()> {
        if j < self.lo || j > self.max_index() {
            return Err(Error::Usage(format!(
                "index {j} outside window [{}, {}]",
                self.lo,
                self.max_index()
            )));
        }
        self.coeffs[(j - self.lo) as usize] = flush(c);
        Ok(())
    }

    /// Nonzero `(j, a_j)` pairs in increasing `j`.
    pub fn entries(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(move |(i, c)| (i as i32 + self.lo, *c))
    }

    pub fn has_negative_terms(&self) -> bool {
        self.entries().any(|(j, _)| j < 0)
    }

    /// Sum of coefficient magnitudes: the sup-norm bound on the unit circle.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let w = z - self.center;
        let r = w.norm();
        let negative = self.has_negative_terms();
        let inside = if negative || self.region.inner > 0.0 {
            r > self.region.inner && r < self.region.outer && r > 0.0
        } else {
            r < self.region.outer
        };
        if !inside {
            return Err(Error::Domain(format!(
                "|z − c| = {r} outside evaluation region ({}, {})",
                self.region.inner, self.region.outer
            )));
        }
        Ok(self.eval_unchecked(w))
    }

    fn eval_unchecked(&self, w: C64) -> C64 {
        let mut pos = ZERO;
        for j in (0..=self.max_index().max(0)).rev() {
            pos = pos * w + self.coeff(j);
        }
        if !self.has_negative_terms() {
            return pos;
        }
        let inv = w.inv();
        let mut neg = ZERO;
        for k in (1..=-self.lo).rev() {
            neg = (neg + self.coeff(-k)) * inv;
        }
        pos + neg
    }

    fn check_center(&self, other: &Self) -> Result<()> {
        if (self.center - other.center).norm() > 1e-15 {
            return Err(Error::Usage(format!(
                "mismatched centers {} and {}",
                self.center, other.center
            )));
        }
        Ok(())
    }

    fn region_meet(&self, other: &Self) -> Region {
        Region {
            inner: self.region.inner.max(other.region.inner),
            outer: self.region.outer.min(other.region.outer),
        }
    }

    fn union_window(&self, other: &Self) -> (usize, usize) {
        let (m1, n1) = self.orders();
        let (m2, n2) = other.orders();
        (m1.max(m2), n1.max(n2))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let (m, n) = self.union_window(other);
        let mut out = Self::zeros(self.center, m, n);
        for j in out.lo..=out.max_index() {
            out.coeffs[(j - out.lo) as usize] = flush(self.coeff(j) + other.coeff(j));
        }
        out.region = self.region_meet(other);
        out.tail_bound = self.tail_bound + other.tail_bound;
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            *a = flush(*a * c);
        }
        out.tail_bound *= c.norm();
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Cauchy product truncated to the union of the two index windows.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let (m, n) = self.union_window(other);
        let mut out = Self::zeros(self.center, m, n);
        let mut discarded = 0.0;
        for (j, a) in self.entries() {
            for (k, b) in other.entries() {
                let idx = j + k;
                let p = a * b;
                if idx < out.lo || idx > out.max_index() {
                    discarded += p.norm();
                } else {
                    out.coeffs[(idx - out.lo) as usize] += p;
                }
            }
        }
        for c in out.coeffs.iter_mut() {
            *c = flush(*c);
        }
        out.region = self.region_meet(other);
        out.tail_bound = discarded
            + self.tail_bound * other.l1_norm()
            + other.tail_bound * self.l1_norm()
            + self.tail_bound * other.tail_bound;
        Ok(out)
    }

    /// If `self = b_0 + α (z − c)` with no other terms, returns `(b_0, α)`.
    pub fn as_affine(&self) -> Option<(C64, C64)> {
        if self.entries().any(|(j, _)| j != 0 && j != 1) {
            return None;
        }
        Some((self.coeff(0), self.coeff(1)))
    }

    /// `self ∘ g`.
    ///
    /// When `g(z) = c_self + α (z − c_g)` the substitution is exact and yields
    /// `Σ α^j a_j (z − c_g)^j`; otherwise `self` must have no negative indices
    /// and the composition is evaluated by truncated Horner steps.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if let Some((b0, alpha)) = g.as_affine() {
            if (b0 - self.center).norm() <= 1e-15 && alpha != ZERO {
                return Ok(self.substitute_linear(alpha, g));
            }
        }
        if self.has_negative_terms() {
            return Err(Error::UnsupportedComposition(
                "outer series has negative indices; inner series must be of the form αz".into(),
            ));
        }
        self.check_image_region(g)?;
        let (m_g, n_g) = g.orders();
        let (_, n_f) = self.orders();
        let n = n_f.max(n_g);
        let mut inner = g.clone().widen(m_g, n);
        let z0 = (-inner.lo) as usize;
        inner.coeffs[z0] = flush(inner.coeffs[z0] - self.center);
        let mut acc = Self::zeros(g.center, m_g, n);
        acc.region = g.region;
        for j in (0..=n_f as i32).rev() {
            acc = acc.multiply(&inner)?;
            let mut c = Self::zeros(g.center, m_g, n);
            c.region = g.region;
            c.coeffs[(-c.lo) as usize] = self.coeff(j);
            acc = acc.add(&c)?;
        }
        acc.tail_bound += self.tail_bound;
        acc.region = g.region;
        Ok(acc)
    }

    fn widen(mut self, m: usize, n: usize) -> Self {
        let (m0, n0) = self.orders();
        let (m, n) = (m.max(m0), n.max(n0));
        let mut out = Self::zeros(self.center, m, n);
        for (j, c) in self.entries() {
            out.coeffs[(j - out.lo) as usize] = c;
        }
        out.region = self.region;
        out.tail_bound = self.tail_bound;
        self.coeffs = out.coeffs;
        self.lo = out.lo;
        self
    }

    fn substitute_linear(&self, alpha: C64, g: &Self) -> Self {
        let mut out = self.clone();
        out.center = g.center;
        for j in self.lo..=self.max_index() {
            out.coeffs[(j - self.lo) as usize] = flush(self.coeff(j) * alpha.powi(j));
        }
        let r = alpha.norm();
        let (m, n) = self.orders();
        out.region = Region {
            inner: self.region.inner / r,
            outer: self.region.outer / r,
        };
        out.tail_bound = self.tail_bound * r.powi(n as i32).max(r.powi(-(m as i32))).max(1.0);
        out
    }

    fn check_image_region(&self, g: &Self) -> Result<()> {
        if self.region.is_plane() {
            return Ok(());
        }
        let gr = g.region;
        if gr.outer.is_infinite() {
            return Err(Error::Domain(
                "inner series has an unbounded region; its image cannot be certified".into(),
            ));
        }
        const RADII: usize = 8;
        const ANGLES: usize = 64;
        for k in 1..=RADII {
            let r = gr.inner + (gr.outer - gr.inner) * k as f64 / (RADII + 1) as f64;
            for t in 0..ANGLES {
                let z = g.center + C64::from_polar(r, 2.0 * PI * t as f64 / ANGLES as f64);
                let w = g.eval(z)? - self.center;
                let rw = w.norm();
                if !(rw > self.region.inner && rw < self.region.outer) {
                    return Err(Error::Domain(format!(
                        "image point {w} of the inner series leaves the outer region"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Annulus of convergence estimated by the root test over trailing windows.
    pub fn hadamard_radii(&self, tail_window: usize) -> Result<RadiiEstimate> {
        if tail_window < 2 {
            return Err(Error::Usage(format!(
                "tail window must be at least 2, got {tail_window}"
            )));
        }
        let (m, n) = self.orders();
        let outer = match n {
            0 => RadiusEstimate::no_terms(f64::INFINITY),
            n if n < tail_window => {
                return Err(Error::Usage(format!(
                    "tail window {tail_window} exceeds the {n} stored positive indices"
                )))
            }
            n => {
                let limsup = root_test(
                    ((n - tail_window + 1)..=n).map(|j| (j, self.coeff(j as i32))),
                );
                RadiusEstimate::estimated(
                    if limsup == 0.0 { f64::INFINITY } else { 1.0 / limsup },
                    tail_window,
                )
            }
        };
        let inner = match m {
            0 => RadiusEstimate::no_terms(0.0),
            m if m < tail_window => {
                return Err(Error::Usage(format!(
                    "tail window {tail_window} exceeds the {m} stored negative indices"
                )))
            }
            m => {
                let limsup = root_test(
                    ((m - tail_window + 1)..=m).map(|k| (k, self.coeff(-(k as i32)))),
                );
                RadiusEstimate::estimated(limsup, tail_window)
            }
        };
        Ok(RadiiEstimate { inner, outer })
    }
}

fn root_test(terms: impl Iterator<Item = (usize, C64)>) -> f64 {
    terms
        .map(|(j, a)| a.norm().powf(1.0 / j as f64))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusStatus {
    /// Root test over a trailing window; only as good as the truncation.
    TruncationLimited,
    /// No stored indices on this side.
    NoTerms,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub value: f64,
    pub status: RadiusStatus,
    pub window: usize,
}

impl RadiusEstimate {
    fn no_terms(value: f64) -> Self {
        RadiusEstimate {
            value,
            status: RadiusStatus::NoTerms,
            window: 0,
        }
    }

    fn estimated(value: f64, window: usize) -> Self {
        RadiusEstimate {
            value,
            status: RadiusStatus::TruncationLimited,
            window,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiiEstimate {
    pub inner: RadiusEstimate,
    pub outer: RadiusEstimate,
}

impl RadiiEstimate {
    pub fn pair(&self) -> (f64, f64) {
        (self.inner.value, self.outer.value)
    }
}

#[derive(Serialize, Deserialize)]
struct LaurentJson {
    center: C64,
    entries: Vec<(i32, f64, f64)>,
}

impl Serialize for TruncatedLaurent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LaurentJson {
            center: self.center,
            entries: self.entries().map(|(j, c)| (j, c.re, c.im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedLaurent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = LaurentJson::deserialize(d)?;
        let lo = raw.entries.iter().map(|e| e.0).min().unwrap_or(0).min(0);
        let hi = raw.entries.iter().map(|e| e.0).max().unwrap_or(0).max(0);
        TruncatedLaurent::from_entries(
            raw.center,
            (-lo) as usize,
            hi as usize,
            raw.entries.iter().map(|&(j, re, im)| (j, C64::new(re, im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Truncated Taylor series `Σ_{j+k ≤ D} a_{jk} (z1 − c1)^j (z2 − c2)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedTaylor2 {
    center: [C64; 2],
    degree: usize,
    coeffs: Vec<C64>,
    tail_bound: f64,
}

fn tri_index(j: usize, k: usize) -> usize {
    let d = j + k;
    d * (d + 1) / 2 + k
}

impl TruncatedTaylor2 {
    pub fn zeros(center: [C64; 2], degree: usize) -> Self {
        TruncatedTaylor2 {
            center,
            degree,
            coeffs: vec![ZERO; (degree + 1) * (degree + 2) / 2],
            tail_bound: 0.0,
        }
    }

    pub fn from_entries(
        center: [C64; 2],
        degree: usize,
        entries: impl IntoIterator<Item = ((usize, usize), C64)>,
    ) -> Result<Self> {
        let mut s = Self::zeros(center, degree);
        for ((j, k), c) in entries {
            s.set(j, k, c)?;
        }
        Ok(s)
    }

    /// Coordinate function `z_i` (i = 0 or 1) around the origin.
    pub fn coordinate(i: usize, degree: usize) -> Self {
        let mut s = Self::zeros([ZERO; 2], degree.max(1));
        let (j, k) = if i == 0 { (1, 0) } else { (0, 1) };
        s.coeffs[tri_index(j, k)] = C64::new(1.0, 0.0);
        s
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn coeff(&self, j: usize, k: usize) -> C64 {
        if j + k > self.degree {
            ZERO
        } else {
            self.coeffs[tri_index(j, k)]
        }
    }

    pub fn set(&mut self, j: usize, k: usize, c: C64) -> Result<()> {
        if j + k > self.degree {
            return Err(Error::Usage(format!(
                "multi-index ({j}, {k}) exceeds degree {}",
                self.degree
            )));
        }
        self.coeffs[tri_index(j, k)] = flush(c);
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), C64)> + '_ {
        (0..=self.degree)
            .flat_map(move |d| (0..=d).map(move |k| (d - k, k)))
            .map(move |(j, k)| ((j, k), self.coeff(j, k)))
            .filter(|(_, c)| *c != ZERO)
    }

    pub fn eval(&self, z: &Point) -> Result<C64> {
        let Point::C2([z1, z2]) = *z else {
            return Err(Error::Domain("bivariate series needs a point of C²".into()));
        };
        let (w1, w2) = (z1 - self.center[0], z2 - self.center[1]);
        let mut p1 = vec![C64::new(1.0, 0.0); self.degree + 1];
        let mut p2 = vec![C64::new(1.0, 0.0); self.degree + 1];
        for i in 1..=self.degree {
            p1[i] = p1[i - 1] * w1;
            p2[i] = p2[i - 1] * w2;
        }
        Ok(self
            .entries()
            .map(|((j, k), c)| c * p1[j] * p2[k])
            .sum())
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.center != other.center {
            return Err(Error::Usage("mismatched centers".into()));
        }
        let degree = self.degree.max(other.degree);
        let mut out = Self::zeros(self.center, degree);
        let mut discarded = 0.0;
        for ((j1, k1), a) in self.entries() {
            for ((j2, k2), b) in other.entries() {
                let (j, k) = (j1 + j2, k1 + k2);
                if j + k > degree {
                    discarded += (a * b).norm();
                } else {
                    out.coeffs[tri_index(j, k)] += a * b;
                }
            }
        }
        let l1 = |s: &Self| s.coeffs.iter().map(|c| c.norm()).sum::<f64>();
        out.tail_bound = discarded
            + self.tail_bound * l1(other)
            + other.tail_bound * l1(self)
            + self.tail_bound * other.tail_bound;
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct Taylor2Json {
    center: [C64; 2],
    entries: Vec<(usize, usize, f64, f64)>,
}

impl Serialize for TruncatedTaylor2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Taylor2Json {
            center: self.center,
            entries: self.entries().map(|((j, k), c)| (j, k, c.re, c.im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedTaylor2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Taylor2Json::deserialize(d)?;
        let degree = raw.entries.iter().map(|e| e.0 + e.1).max().unwrap_or(0);
        TruncatedTaylor2::from_entries(
            raw.center,
            degree,
            raw.entries
                .iter()
                .map(|&(j, k, re, im)| ((j, k), C64::new(re, im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::c64;

    fn one() -> C64 {
        c64(1.0, 0.0)
    }

    #[test]
    fn constant_evaluates_to_itself() {
        let s = TruncatedLaurent::constant(one(), 4, 4);
        for z in [c64(0.0, 0.0), c64(3.0, -2.0), c64(-0.1, 0.7)] {
            assert_eq!(s.eval(z).unwrap(), one());
        }
    }

    #[test]
    fn identity_evaluates_to_point() {
        let s = TruncatedLaurent::identity(0, 8);
        assert_eq!(s.eval(c64(0.3, 0.1)).unwrap(), c64(0.3, 0.1));
    }

    #[test]
    fn geometric_partial_sum() {
        let s = TruncatedLaurent::from_fn(0, 50, |_| one());
        let oracle = (1.0 - 0.5f64.powi(51)) / 0.5;
        assert!((s.eval(c64(0.5, 0.0)).unwrap() - oracle).norm() < 1e-12);
        assert!((s.eval(c64(0.5, 0.0)).unwrap().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_powers_evaluate() {
        let s = TruncatedLaurent::from_entries(
            c64(0.0, 0.0),
            3,
            2,
            [(-3, c64(2.0, 0.0)), (-1, c64(0.0, 1.0)), (2, one())],
        )
        .unwrap();
        let z = c64(0.7, -0.4);
        let oracle = 2.0 * z.powi(-3) + c64(0.0, 1.0) / z + z * z;
        assert!((s.eval(z).unwrap() - oracle).norm() < 1e-13);
        assert!(matches!(s.eval(c64(0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn region_is_enforced() {
        let s = TruncatedLaurent::identity(0, 4).with_region(0.0, 1.0).unwrap();
        assert!(s.eval(c64(0.5, 0.0)).is_ok());
        assert!(matches!(s.eval(c64(1.5, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn unit_is_neutral_for_multiply() {
        let t = TruncatedLaurent::from_fn(3, 5, |j| c64(j as f64, 1.0 / (1.0 + j.abs() as f64)));
        let p = TruncatedLaurent::constant(one(), 3, 5).multiply(&t).unwrap();
        assert_eq!(p, t);
    }

    #[test]
    fn z_times_z() {
        let z = TruncatedLaurent::identity(0, 4);
        let p = z.multiply(&z).unwrap();
        assert_eq!(p.entries().collect::<Vec<_>>(), vec![(2, one())]);
    }

    #[test]
    fn telescoping_product() {
        let s = TruncatedLaurent::from_fn(0, 11, |j| if j <= 10 { one() } else { C64::new(0.0, 0.0) });
        let t = TruncatedLaurent::from_entries(c64(0.0, 0.0), 0, 1, [(0, one()), (1, -one())]).unwrap();
        let p = s.multiply(&t).unwrap();
        assert_eq!(p.entries().collect::<Vec<_>>(), vec![(0, one()), (11, -one())]);
        assert_eq!(p.tail_bound(), 0.0);
    }

    #[test]
    fn discarded_terms_feed_the_bound() {
        let s = TruncatedLaurent::from_fn(0, 3, |_| one());
        let p = s.multiply(&s).unwrap();
        // indices 4, 5, 6 of (1+z+z²+z³)² carry 3 + 2 + 1
        assert!((p.tail_bound() - 6.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_centers_rejected() {
        let a = TruncatedLaurent::zeros(c64(0.0, 0.0), 0, 2);
        let b = TruncatedLaurent::zeros(c64(1.0, 0.0), 0, 2);
        assert!(matches!(a.multiply(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn compose_with_identity() {
        let f = TruncatedLaurent::from_fn(5, 5, |j| c64(1.0 + j as f64, -0.5 * j as f64));
        let id = TruncatedLaurent::identity(0, 1);
        assert_eq!(f.compose(&id).unwrap().entries().collect::<Vec<_>>(), f.entries().collect::<Vec<_>>());
    }

    #[test]
    fn compose_linear_scales_coefficients() {
        let f = TruncatedLaurent::from_fn(5, 5, |j| c64(0.3 * j as f64 + 1.0, 0.1));
        let alpha = c64(0.6, 0.8);
        let g = TruncatedLaurent::monomial(alpha, 1, 0, 1);
        let h = f.compose(&g).unwrap();
        for j in -5..=5 {
            assert!((h.coeff(j) - f.coeff(j) * alpha.powi(j)).norm() < 1e-15);
        }
    }

    #[test]
    fn compose_binomial() {
        let f = TruncatedLaurent::monomial(one(), 2, 0, 2);
        let g = TruncatedLaurent::from_entries(c64(0.0, 0.0), 0, 1, [(0, one()), (1, one())]).unwrap();
        let h = f.compose(&g).unwrap();
        assert_eq!(
            h.entries().collect::<Vec<_>>(),
            vec![(0, one()), (1, c64(2.0, 0.0)), (2, one())]
        );
    }

    #[test]
    fn negative_outer_with_general_inner_unsupported() {
        let f = TruncatedLaurent::monomial(one(), -1, 1, 1);
        let g = TruncatedLaurent::from_entries(c64(0.0, 0.0), 0, 2, [(1, one()), (2, one())]).unwrap();
        assert!(matches!(f.compose(&g), Err(Error::UnsupportedComposition(_))));
    }

    #[test]
    fn compose_checks_image_region() {
        let f = TruncatedLaurent::identity(0, 3).with_region(0.0, 1.0).unwrap();
        let g = TruncatedLaurent::monomial(c64(3.0, 0.0), 2, 0, 2)
            .with_region(0.0, 0.9)
            .unwrap();
        assert!(matches!(f.compose(&g), Err(Error::Domain(_))));
        let g_ok = TruncatedLaurent::monomial(c64(0.5, 0.0), 2, 0, 2)
            .with_region(0.0, 0.9)
            .unwrap();
        assert!(f.compose(&g_ok).is_ok());
    }

    #[test]
    fn geometric_radius() {
        let s = TruncatedLaurent::from_fn(0, 64, |_| one());
        let r = s.hadamard_radii(16).unwrap();
        assert!((r.outer.value - 1.0).abs() < 1e-12);
        assert_eq!(r.outer.status, RadiusStatus::TruncationLimited);
        assert_eq!(r.inner.status, RadiusStatus::NoTerms);
        assert_eq!(r.inner.value, 0.0);
    }

    fn two_sided() -> TruncatedLaurent {
        TruncatedLaurent::from_fn(64, 64, |j| {
            if j >= 0 {
                c64(2f64.powi(-j), 0.0)
            } else {
                c64(4f64.powi(j), 0.0)
            }
        })
    }

    #[test]
    fn two_sided_radii_match_root_test() {
        // oracle: |2^{-j}|^{1/j} = 1/2 and |4^{-j}|^{1/j} = 1/4 exactly
        let (inner, outer) = two_sided().hadamard_radii(16).unwrap().pair();
        assert!((inner - 0.25).abs() < 1e-12);
        assert!((outer - 2.0).abs() < 1e-12);
    }

    #[test]
    fn radii_shift_under_dilation() {
        let g = TruncatedLaurent::monomial(c64(2.0, 0.0), 1, 0, 1);
        let (inner, outer) = two_sided().compose(&g).unwrap().hadamard_radii(16).unwrap().pair();
        assert!((inner - 0.125).abs() < 1e-12);
        assert!((outer - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radii_window_preconditions() {
        let s = TruncatedLaurent::from_fn(0, 8, |_| one());
        assert!(matches!(s.hadamard_radii(1), Err(Error::Usage(_))));
        assert!(matches!(s.hadamard_radii(9), Err(Error::Usage(_))));
        let poly = TruncatedLaurent::from_fn(0, 20, |j| if j < 3 { one() } else { C64::new(0.0, 0.0) });
        assert!(poly.hadamard_radii(4).unwrap().outer.value.is_infinite());
    }

    #[test]
    fn tiny_coefficients_flush_to_zero() {
        let mut s = TruncatedLaurent::zeros(c64(0.0, 0.0), 0, 3);
        s.set(2, c64(1e-310, 0.0)).unwrap();
        assert_eq!(s.entries().count(), 0);
    }

    #[test]
    fn json_shape() {
        let s = TruncatedLaurent::from_entries(c64(0.0, 0.0), 1, 1, [(-1, c64(0.5, 0.0)), (1, c64(0.0, 2.0))]).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v, serde_json::json!({"center": [0.0, 0.0], "entries": [[-1, 0.5, 0.0], [1, 0.0, 2.0]]}));
        let back: TruncatedLaurent = serde_json::from_value(v).unwrap();
        assert_eq!(back.orders(), (1, 1));
        assert_eq!(back.coeff(1), c64(0.0, 2.0));
    }

    #[test]
    fn taylor2_eval_and_product() {
        let x = TruncatedTaylor2::coordinate(0, 4);
        let y = TruncatedTaylor2::coordinate(1, 4);
        let xy = x.multiply(&y).unwrap();
        let p = Point::two(c64(0.3, 0.1), c64(-0.2, 0.5));
        let oracle = p.coord(0) * p.coord(1);
        assert!((xy.eval(&p).unwrap() - oracle).norm() < 1e-15);
        assert!(TruncatedTaylor2::from_entries([ZERO; 2], 2, [((2, 1), one())]).is_err());
        let v = serde_json::to_value(&xy).unwrap();
        assert_eq!(v["entries"], serde_json::json!([[1, 1, 1.0, 0.0]]));
    }
}
