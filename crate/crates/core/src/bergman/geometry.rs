//! Bergman metric and holomorphic sectional curvature.
//!
//! Derivatives of `log K` come from Taylor coefficients of
//! `(s, t) ↦ log K(z + s·a, conj(z) + t·b)` extracted by the trapezoid rule on
//! a small torus `|s| = |t| = h`. Two node counts give the error estimate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::KernelModel;
use crate::error::{Error, Result};
use crate::point::{c64, Point, C64};

/// Smallest boundary clearance at which derivatives are attempted.
pub const MIN_CLEARANCE: f64 = 1e-9;
const NODES: usize = 24;
const CHECK_NODES: usize = 16;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricTensor {
    pub point: Point,
    /// Row-major `g_{i j̄}`.
    pub g: Vec<C64>,
    pub error_estimate: f64,
    pub step: f64,
}

impl MetricTensor {
    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.g[i * self.dim() + j]
    }

    /// `g(v, conj v)`.
    pub fn norm_sqr(&self, v: &Point) -> f64 {
        let n = self.dim();
        let mut acc = c64(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.entry(i, j) * v.coord(i) * v.coord(j).conj();
            }
        }
        acc.re
    }

    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_positive_definite(&self) -> bool {
        let g00 = self.entry(0, 0).re;
        if self.dim() == 1 {
            return g00 > 0.0;
        }
        let det = g00 * self.entry(1, 1).re - self.entry(0, 1).norm_sqr();
        g00 > 0.0 && det > 0.0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Curvature {
    pub value: f64,
    pub error_estimate: f64,
    pub step: f64,
}

/// Torus samples of `log(K(z + s a, w + t b)/K0)` and their Taylor coefficients.
struct Torus<'a> {
    k: &'a KernelModel,
    z: &'a Point,
    w: Point,
    h: f64,
    log_k0: C64,
}

impl<'a> Torus<'a> {
    fn new(k: &'a KernelModel, z: &'a Point, h: f64) -> Result<Self> {
        let w = z.conj();
        let k0 = k.holo(z, &w);
        if !(k0.re > 0.0) || !k0.re.is_finite() {
            return Err(Error::Stencil(format!("kernel not positive at {z}: {k0}")));
        }
        Ok(Torus { k, z, w, h, log_k0: c64(k0.re.ln(), 0.0) })
    }

    /// Coefficients `c_{pq}` for `p, q ≤ 2` with `n` nodes per circle.
    fn coefficients(&self, a: &Point, b: &Point, n: usize) -> [[C64; 3]; 3] {
        let roots: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect();
        let mut c = [[c64(0.0, 0.0); 3]; 3];
        let shift = |p: &Point, dir: &Point, s: C64| {
            Point::from_slice(&(0..p.dim()).map(|i| p.coord(i) + s * dir.coord(i)).collect::<Vec<_>>()).unwrap()
        };
        for (js, rs) in roots.iter().enumerate() {
            let zs = shift(self.z, a, self.h * rs);
            for (jt, rt) in roots.iter().enumerate() {
                let wt = shift(&self.w, b, self.h * rt);
                let psi = self.k.holo(&zs, &wt).ln() - self.log_k0;
                for (p, row) in c.iter_mut().enumerate() {
                    for (q, cell) in row.iter_mut().enumerate() {
                        // conj of e^{i(pθ_s + qθ_t)}
                        let phase = roots[(n - (p * js) % n) % n] * roots[(n - (q * jt) % n) % n];
                        *cell += psi * phase;
                    }
                }
            }
        }
        let norm = (n * n) as f64;
        for (p, row) in c.iter_mut().enumerate() {
            for (q, cell) in row.iter_mut().enumerate() {
                *cell /= norm * self.h.powi((p + q) as i32);
            }
        }
        c
    }
}

fn step_for(k: &KernelModel, z: &Point) -> Result<f64> {
    let d = k.domain();
    if z.dim() != d.dim() {
        return Err(Error::Usage(format!("point {z} has wrong dimension for {}", d.name())));
    }
    if !d.contains(z) {
        return Err(Error::Domain(format!("{z} is not interior to {}", d.name())));
    }
    let clearance = d.boundary_distance(z);
    if !(clearance >= MIN_CLEARANCE) {
        return Err(Error::Stencil(format!("clearance {clearance:.3e} at {z} is below {MIN_CLEARANCE:.0e}")));
    }
    let mut h = clearance / 4.0;
    if let crate::domains::ModelDomain::Annulus { .. } = d {
        // stay clear of the puncture as well
        h = h.min(z.norm() / 4.0);
    }
    Ok(h)
}

fn metric_with(t: &Torus, n: usize) -> Vec<C64> {
    let dim = t.z.dim();
    let mut g = vec![c64(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            g[i * dim + j] = t.coefficients(&Point::basis(dim, i), &Point::basis(dim, j), n)[1][1];
        }
    }
    g
}

pub fn bergman_metric(k: &KernelModel, z: &Point) -> Result<MetricTensor> {
    let h = step_for(k, z)?;
    let t = Torus::new(k, z, h)?;
    let g = metric_with(&t, NODES);
    let check = metric_with(&t, CHECK_NODES);
    let scale = g.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let err = g.iter().zip(&check).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let m = MetricTensor { point: *z, g, error_estimate: err, step: h };
    if !m.is_positive_definite() || !(scale.is_finite()) {
        return Err(Error::Stencil(format!("metric at {z} is not positive definite")));
    }
    Ok(m)
}

/// Roundoff allowance for `log K`: `ε (|log K| + KERNEL_ROUNDOFF)`.
const KERNEL_ROUNDOFF: f64 = 8.0;

/// Curvature at `n` nodes and the propagated roundoff of the order-4 coefficients.
fn curvature_with(t: &Torus, v: &Point, n: usize) -> Result<(f64, f64)> {
    let dim = t.z.dim();
    let vb = v.conj();
    let main = t.coefficients(v, &vb, n);
    let gvv = main[1][1].re;
    let d = 4.0 * main[2][2];
    let g = metric_with(t, n);
    let e = |i| Point::basis(dim, i);
    let a: Vec<C64> = (0..dim).map(|q| 2.0 * t.coefficients(v, &e(q), n)[2][1]).collect();
    let b: Vec<C64> = (0..dim).map(|p| 2.0 * t.coefficients(&e(p), &vb, n)[1][2]).collect();
    // G⁻¹ for 1×1 or 2×2
    let ginv: Vec<C64> = if dim == 1 {
        vec![g[0].inv()]
    } else {
        let det = g[0] * g[3] - g[1] * g[2];
        if det.norm() == 0.0 {
            return Err(Error::Stencil("singular metric".into()));
        }
        vec![g[3] / det, -g[1] / det, -g[2] / det, g[0] / det]
    };
    let mut r = -d;
    for p in 0..dim {
        for q in 0..dim {
            r += a[q] * ginv[q * dim + p] * b[p];
        }
    }
    let log_err = f64::EPSILON * (t.log_k0.re.abs() + KERNEL_ROUNDOFF);
    let roundoff = 16.0 * log_err / (t.h.powi(4) * gvv * gvv);
    Ok((2.0 * r.re / (gvv * gvv), roundoff))
}

/// Holomorphic sectional curvature of the Bergman metric at `z` along `v`,
/// normalized so the disk has constant curvature −2.
pub fn holo_curvature(k: &KernelModel, z: &Point, v: &Point) -> Result<Curvature> {
    if v.dim() != z.dim() || v.norm() == 0.0 {
        return Err(Error::Usage(format!("direction {v} is invalid at {z}")));
    }
    let v = v.normalized();
    let h = step_for(k, z)?;
    let t = Torus::new(k, z, h)?;
    let (value, roundoff) = curvature_with(&t, &v, NODES)?;
    let (check, _) = curvature_with(&t, &v, CHECK_NODES)?;
    if !value.is_finite() {
        return Err(Error::Stencil(format!("curvature at {z} is not finite")));
    }
    Ok(Curvature { value, error_estimate: (value - check).abs() + roundoff, step: h })
}
