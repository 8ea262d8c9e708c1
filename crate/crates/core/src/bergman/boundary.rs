//! Transformation law of the kernel and its behaviour toward the boundary.

use serde::{Deserialize, Serialize};

use super::{holo_curvature, KernelModel};
use crate::domains::Automorphism;
use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualRow {
    pub z: Point,
    pub zeta: Point,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualTable {
    pub max_residual: f64,
    pub rows: Vec<ResidualRow>,
}

impl ResidualTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,zeta,residual\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.z, r.zeta, crate::fmt::num(r.residual)));
        }
        out
    }
}

/// Relative defect of `J_F(z) K(F z, F ζ) conj(J_F(ζ)) = K(z, ζ)` over `pairs`.
pub fn transformation_residual(k: &KernelModel, f: &Automorphism, pairs: &[(Point, Point)]) -> Result<ResidualTable> {
    if f.domain() != k.domain() {
        return Err(Error::Usage(format!(
            "automorphism of {} used with a kernel on {}",
            f.domain().name(),
            k.domain().name()
        )));
    }
    let mut rows = Vec::with_capacity(pairs.len());
    let mut worst: f64 = 0.0;
    for (z, zeta) in pairs {
        let base = k.eval(z, zeta)?;
        let moved = k.eval(&f.apply(z)?, &f.apply(zeta)?)?;
        let lhs = f.jacobian(z) * moved * f.jacobian(zeta).conj();
        let residual = (lhs - base).norm() / base.norm();
        worst = worst.max(residual);
        rows.push(ResidualRow { z: *z, zeta: *zeta, residual });
    }
    Ok(ResidualTable { max_residual: worst, rows })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupFit {
    pub boundary_point: Point,
    pub exponent: f64,
    pub deltas: Vec<f64>,
    pub diagonal_values: Vec<f64>,
}

impl BlowupFit {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,kernel_diagonal\n");
        for (d, v) in self.deltas.iter().zip(&self.diagonal_values) {
            out.push_str(&format!("{},{}\n", crate::fmt::num(*d), crate::fmt::num(*v)));
        }
        out
    }
}

/// Point `x` moved inward by `delta` along the inner normal.
fn inward(k: &KernelModel, x: &Point, delta: f64) -> Result<Point> {
    let d = k.domain();
    let n = d.outward_normal(x)?;
    let p = Point::from_slice(&(0..x.dim()).map(|i| x.coord(i) - delta * n.coord(i)).collect::<Vec<_>>())?;
    if !d.contains(&p) {
        return Err(Error::Domain(format!("{p} (δ = {delta}) is not interior to {}", d.name())));
    }
    Ok(p)
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Usage("deltas must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Usage("deltas must be strictly decreasing".into()));
    }
    Ok(())
}

/// Least-squares slope of `log K(z_δ, z_δ)` against `log(1/δ)`.
pub fn blowup_exponent(k: &KernelModel, x: &Point, deltas: &[f64]) -> Result<BlowupFit> {
    if deltas.len() < 3 {
        return Err(Error::Usage(format!("blow-up fit needs at least 3 deltas, got {}", deltas.len())));
    }
    check_deltas(deltas)?;
    let mut values = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let z = inward(k, x, delta)?;
        values.push(k.eval(&z, &z)?.re);
    }
    let xs: Vec<f64> = deltas.iter().map(|d| -d.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = xs.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(BlowupFit { boundary_point: *x, exponent: sxy / sxx, deltas: deltas.to_vec(), diagonal_values: values })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KlembeckProfile {
    pub boundary_point: Point,
    pub direction: Point,
    pub target: f64,
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
    /// Set when the profile stopped early at a failing δ.
    pub truncated: bool,
    pub failure: Option<String>,
    /// `|value + 4/(n+1)|` strictly smaller at the last δ than at the first.
    pub improving: bool,
}

impl KlembeckProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,curvature,error_estimate,distance_to_target\n");
        for i in 0..self.values.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt::num(self.deltas[i]),
                crate::fmt::num(self.values[i]),
                crate::fmt::num(self.error_estimates[i]),
                crate::fmt::num((self.values[i] - self.target).abs())
            ));
        }
        out
    }
}

/// Holomorphic sectional curvature along `v` at points approaching `x`.
pub fn klembeck_profile(k: &KernelModel, x: &Point, deltas: &[f64], v: &Point) -> Result<KlembeckProfile> {
    check_deltas(deltas)?;
    let n = k.dim() as f64;
    let target = -4.0 / (n + 1.0);
    let (mut values, mut errs) = (Vec::new(), Vec::new());
    let mut failure = None;
    for &delta in deltas {
        let z = inward(k, x, delta)?;
        match holo_curvature(k, &z, v) {
            Ok(c) => {
                values.push(c.value);
                errs.push(c.error_estimate);
            }
            Err(e @ Error::Stencil(_)) => {
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let improving = values.len() >= 2
        && (values[values.len() - 1] - target).abs() < (values[0] - target).abs();
    Ok(KlembeckProfile {
        boundary_point: *x,
        direction: *v,
        target,
        deltas: deltas[..values.len()].to_vec(),
        values,
        error_estimates: errs,
        truncated: failure.is_some(),
        failure,
        improving,
    })
}
