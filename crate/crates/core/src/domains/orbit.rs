use serde::Serialize;

use super::{Automorphism, ModelDomain};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::point::Point;

/// Number of trailing orbit points inspected for boundary accumulation.
pub const ACCUMULATION_TAIL: usize = 10;
/// Tail points must be this close to the boundary.
pub const ACCUMULATION_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub points: Vec<Point>,
    pub distances: Vec<f64>,
    pub accumulates_at_boundary: bool,
    /// Boundary point nearest the last orbit point, when the orbit accumulates.
    pub x_estimate: Option<Point>,
}

impl OrbitReport {
    /// CSV rows `j, re/im coordinates..., boundary_distance` with `j` starting at 1.
    pub fn to_csv(&self) -> String {
        let dim = self.points.first().map_or(1, Point::dim);
        let mut out = String::from("j");
        for i in 1..=dim {
            out.push_str(&format!(",re{i},im{i}"));
        }
        out.push_str(",boundary_distance\n");
        for (j, (p, d)) in self.points.iter().zip(&self.distances).enumerate() {
            out.push_str(&(j + 1).to_string());
            for z in p.coords() {
                out.push_str(&format!(",{},{}", num(z.re), num(z.im)));
            }
            out.push_str(&format!(",{}\n", num(*d)));
        }
        out
    }
}

/// Evaluates `φ_j(P)` for each automorphism and reports boundary accumulation:
/// the last [`ACCUMULATION_TAIL`] distances are all below
/// [`ACCUMULATION_THRESHOLD`] and nonincreasing.
pub fn orbit(d: ModelDomain, auts: &[Automorphism], p: &Point) -> Result<OrbitReport> {
    if auts.is_empty() {
        return Err(Error::Usage("orbit needs at least one automorphism".into()));
    }
    if !d.contains(p) {
        return Err(Error::Domain(format!("{p} is not in {}", d.name())));
    }
    let mut points = Vec::with_capacity(auts.len());
    for f in auts {
        if f.domain() != d {
            return Err(Error::Usage(format!(
                "automorphism of {} applied on {}",
                f.domain().name(),
                d.name()
            )));
        }
        points.push(f.apply(p)?);
    }
    let distances: Vec<f64> = points.iter().map(|q| d.boundary_distance(q)).collect();
    let tail = &distances[distances.len().saturating_sub(ACCUMULATION_TAIL)..];
    let accumulates = distances.len() >= ACCUMULATION_TAIL
        && tail.iter().all(|&x| x < ACCUMULATION_THRESHOLD)
        && tail.windows(2).all(|w| w[1] <= w[0]);
    let x_estimate = accumulates.then(|| d.project_to_boundary(points.last().unwrap()));
    Ok(OrbitReport { points, distances, accumulates_at_boundary: accumulates, x_estimate })
}
