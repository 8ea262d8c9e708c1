//! Radial and angular rules for Reinhardt domains.

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor rule: angular trapezoid per variable times composite Gauss–Legendre
/// panels in the radial variables, graded geometrically toward both endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Geometric panels toward each endpoint of a radial interval.
    pub graded_panels: usize,
    /// Uniform panels between the graded layers.
    pub uniform_panels: usize,
    pub points_per_panel: usize,
    /// Ratio between consecutive graded panel breakpoints.
    pub grading: f64,
    /// Angular trapezoid nodes per variable; zero picks `max degree + 1`.
    pub angular: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { graded_panels: 20, uniform_panels: 16, points_per_panel: 16, grading: 0.5, angular: 0 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_panel < 2 || self.uniform_panels == 0 || !(self.grading > 0.0 && self.grading < 1.0) {
            return Err(Error::Usage(format!("invalid quadrature spec {self:?}")));
        }
        Ok(())
    }

    pub fn radial_nodes(&self) -> usize {
        (2 * self.graded_panels + self.uniform_panels) * self.points_per_panel
    }

    /// Angular node count for monomials of degree at most `max_degree` (per variable).
    pub fn angular_nodes(&self, max_degree: usize) -> usize {
        if self.angular == 0 {
            max_degree + 1
        } else {
            self.angular
        }
    }

    /// Panel breakpoints on `[0, 1]`.
    fn breakpoints(&self) -> Vec<f64> {
        let edge = 0.5 * self.grading;
        let mut left: Vec<f64> = (0..self.graded_panels)
            .map(|k| edge * self.grading.powi((self.graded_panels - 1 - k) as i32))
            .collect();
        left.insert(0, 0.0);
        let mut pts = left.clone();
        for k in 1..=self.uniform_panels {
            pts.push(edge + (1.0 - 2.0 * edge) * k as f64 / self.uniform_panels as f64);
        }
        for &x in left.iter().rev().skip(1) {
            pts.push(1.0 - x);
        }
        pts
    }

    /// Nodes and weights of the radial rule on `[a, b]`.
    pub fn radial_rule(&self, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        let gl = GaussLegendre::new(self.points_per_panel)
            .map_err(|e| Error::Usage(format!("Gauss–Legendre rule: {e}")))?;
        let base = gl.as_node_weight_pairs();
        let bp = self.breakpoints();
        let mut out = Vec::with_capacity(self.radial_nodes());
        for w in bp.windows(2) {
            let (lo, hi) = (a + (b - a) * w[0], a + (b - a) * w[1]);
            let half = 0.5 * (hi - lo);
            for &(x, wt) in base {
                out.push((lo + half * (x + 1.0), half * wt));
            }
        }
        Ok(out)
    }
}

/// `Σ_k exp(i m θ_k)·(2π/n)` over the trapezoid nodes `θ_k = 2πk/n`: `2π` when
/// `n | m`, zero otherwise.
pub fn angular_moment(m: i64, n: usize) -> f64 {
    if m.rem_euclid(n as i64) == 0 {
        2.0 * std::f64::consts::PI
    } else {
        0.0
    }
}
