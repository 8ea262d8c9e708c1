//! Bergman kernels of the model domains, the Bergman metric and its
//! holomorphic sectional curvature, and boundary behaviour of the kernel.

mod boundary;
mod geometry;
mod numeric;
mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use boundary::{
    blowup_exponent, klembeck_profile, transformation_residual, BlowupFit, KlembeckProfile, ResidualRow,
    ResidualTable,
};
pub use geometry::{bergman_metric, holo_curvature, Curvature, MetricTensor, MIN_CLEARANCE};
pub use numeric::{GramBlock, MonomialSet, NumericKernel, MAX_CONDITION};
pub use quadrature::{angular_moment, QuadratureSpec};

use crate::domains::ModelDomain;
use crate::error::{Error, Result};
use crate::point::{c64, Point, C64};

/// Default truncation `|j| ≤ N` of the annulus kernel series.
pub const ANNULUS_TRUNCATION: usize = 200;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KernelModel {
    ClosedForm { domain: ModelDomain, truncation: usize },
    Numeric(NumericKernel),
}

impl KernelModel {
    pub fn closed_form(domain: ModelDomain) -> Result<Self> {
        match domain.validated()? {
            ModelDomain::Ellipsoid { m } if m != 1 => {
                Err(Error::Usage(format!("no closed-form kernel for {}", domain.name())))
            }
            d => Ok(KernelModel::ClosedForm { domain: d, truncation: ANNULUS_TRUNCATION }),
        }
    }

    pub fn numeric(domain: ModelDomain, degree: usize, spec: &QuadratureSpec) -> Result<Self> {
        Self::numeric_with(domain, MonomialSet::TotalDegree { degree }, spec)
    }

    pub fn numeric_with(domain: ModelDomain, monomials: MonomialSet, spec: &QuadratureSpec) -> Result<Self> {
        Ok(KernelModel::Numeric(NumericKernel::build(domain.validated()?, monomials, spec)?))
    }

    pub fn domain(&self) -> ModelDomain {
        match self {
            KernelModel::ClosedForm { domain, .. } => *domain,
            KernelModel::Numeric(k) => k.domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain().dim()
    }

    /// Restores derived lookup data after deserialization.
    pub fn reindexed(self) -> Self {
        match self {
            KernelModel::Numeric(k) => KernelModel::Numeric(k.reindex()),
            other => other,
        }
    }

    /// `K(z, ζ)` for interior points.
    pub fn eval(&self, z: &Point, zeta: &Point) -> Result<C64> {
        let d = self.domain();
        for p in [z, zeta] {
            if p.dim() != d.dim() {
                return Err(Error::Usage(format!("point {p} has wrong dimension for {}", d.name())));
            }
            if !d.contains(p) {
                return Err(Error::Domain(format!("{p} is not interior to {}", d.name())));
            }
        }
        Ok(self.holo(z, &zeta.conj()))
    }

    /// `K(z, conj w)`: the kernel continued holomorphically in both slots.
    pub fn holo(&self, z: &Point, w: &Point) -> C64 {
        match self {
            KernelModel::Numeric(k) => k.eval_holo(z, w),
            KernelModel::ClosedForm { domain, truncation } => closed_holo(*domain, *truncation, z, w),
        }
    }

    /// Truncation bound on `|K(z, ζ)|` error; zero for exact closed forms.
    pub fn tail_bound(&self, z: &Point, zeta: &Point) -> f64 {
        match self {
            KernelModel::ClosedForm { domain: ModelDomain::Annulus { r }, truncation } => {
                annulus_tail(*r, *truncation, (z.coord(0) * zeta.coord(0).conj()).norm())
            }
            _ => 0.0,
        }
    }
}

fn disk_holo(u: C64) -> C64 {
    1.0 / (PI * (1.0 - u) * (1.0 - u))
}

fn closed_holo(domain: ModelDomain, truncation: usize, z: &Point, w: &Point) -> C64 {
    match domain {
        ModelDomain::Disk => disk_holo(z.coord(0) * w.coord(0)),
        ModelDomain::Bidisc => disk_holo(z.coord(0) * w.coord(0)) * disk_holo(z.coord(1) * w.coord(1)),
        ModelDomain::Ball | ModelDomain::Ellipsoid { .. } => {
            let d = 1.0 - z.coord(0) * w.coord(0) - z.coord(1) * w.coord(1);
            2.0 / (PI * PI * d * d * d)
        }
        ModelDomain::Siegel => {
            let q = 0.5 * (z.coord(0) + w.coord(0)) - z.coord(1) * w.coord(1);
            1.0 / (2.0 * PI * PI * q * q * q)
        }
        ModelDomain::Annulus { r } => annulus_holo(r, truncation, z.coord(0) * w.coord(0)),
    }
}

fn annulus_holo(r: f64, n: usize, u: C64) -> C64 {
    let mut acc = u.inv() / (2.0 * PI * (1.0 / r).ln());
    let mut up = c64(1.0, 0.0);
    let inv = u.inv();
    let mut down = inv * inv;
    for j in 0..=n as i32 {
        acc += up * ((j + 1) as f64 / (PI * (1.0 - r.powi(2 * j + 2))));
        up *= u;
        if j >= 2 {
            // order −j
            acc += down * ((1 - j) as f64 / (PI * (1.0 - r.powi(2 - 2 * j))));
            down *= inv;
        }
    }
    acc
}

/// Bound on the terms of order `|j| > n` at `|z·conj ζ| = q`.
fn annulus_tail(r: f64, n: usize, q: f64) -> f64 {
    let n = n as f64;
    let series = |x: f64| {
        if x >= 1.0 {
            f64::INFINITY
        } else {
            x.powf(n + 1.0) * ((n + 2.0) - (n + 1.0) * x) / ((1.0 - x) * (1.0 - x))
        }
    };
    // positive orders: (j+1)/(π(1 − r^{2j+2})) ≤ (j+1)/(π(1 − r²));
    // negative orders −k: (k−1) r^{2k−2}/(π(1 − r^{2k−2})) ≤ (k+1)(r²)^k/(π r²(1 − r²))
    (series(q) + series(r * r / q) / (r * r)) / (PI * (1.0 - r * r))
}
