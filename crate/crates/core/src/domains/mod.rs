//! Model domains with defining functions, boundary geometry and sampling.

mod automorphism;
mod orbit;

pub use automorphism::{Automorphism, DiskMobius};
pub use orbit::{orbit, OrbitReport, ACCUMULATION_TAIL, ACCUMULATION_THRESHOLD};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{c64, Point, C64};

/// The catalog of model domains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ModelDomain {
    Disk,
    /// `r < |z| < 1`.
    Annulus { r: f64 },
    Bidisc,
    Ball,
    /// `|z1|² + |z2|^{2m} < 1`.
    Ellipsoid { m: u32 },
    /// `Re w1 > |w2|²`.
    Siegel,
}

impl ModelDomain {
    pub fn annulus(r: f64) -> Result<Self> {
        ModelDomain::Annulus { r }.validated()
    }

    pub fn ellipsoid(m: u32) -> Result<Self> {
        ModelDomain::Ellipsoid { m }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            ModelDomain::Annulus { r } if !(r > 0.0 && r < 1.0) => Err(Error::Construction(
                format!("annulus needs 0 < r < 1, got {r}"),
            )),
            ModelDomain::Ellipsoid { m } if m < 1 => Err(Error::Construction(format!(
                "ellipsoid exponent must be ≥ 1, got {m}"
            ))),
            d => Ok(d),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelDomain::Disk | ModelDomain::Annulus { .. } => 1,
            _ => 2,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ModelDomain::Siegel)
    }

    pub fn name(&self) -> String {
        match self {
            ModelDomain::Disk => "disk".into(),
            ModelDomain::Annulus { r } => format!("annulus({r})"),
            ModelDomain::Bidisc => "bidisc".into(),
            ModelDomain::Ball => "ball".into(),
            ModelDomain::Ellipsoid { m } => format!("ellipsoid({m})"),
            ModelDomain::Siegel => "siegel".into(),
        }
    }

    fn check_dim(&self, z: &Point) -> Result<()> {
        if z.dim() != self.dim() {
            return Err(Error::Domain(format!(
                "{} lives in C^{}, got a point of C^{}",
                self.name(),
                self.dim(),
                z.dim()
            )));
        }
        Ok(())
    }

    /// Defining function: negative inside, zero on the boundary.
    pub fn rho(&self, z: &Point) -> f64 {
        match (*self, z) {
            (ModelDomain::Disk, Point::C1(w)) => w.norm_sqr() - 1.0,
            (ModelDomain::Annulus { r }, Point::C1(w)) => {
                let s = w.norm_sqr();
                (s - 1.0) * (s - r * r)
            }
            (ModelDomain::Bidisc, Point::C2([a, b])) => {
                (a.norm_sqr() - 1.0).max(b.norm_sqr() - 1.0)
            }
            (ModelDomain::Ball, Point::C2(_)) => z.norm_sqr() - 1.0,
            (ModelDomain::Ellipsoid { m }, Point::C2([a, b])) => {
                a.norm_sqr() + b.norm_sqr().powi(m as i32) - 1.0
            }
            (ModelDomain::Siegel, Point::C2([a, b])) => b.norm_sqr() - a.re,
            _ => f64::NAN,
        }
    }

    pub fn contains(&self, z: &Point) -> bool {
        z.dim() == self.dim() && z.is_finite() && self.rho(z) < 0.0
    }

    /// `(∂ρ/∂z̄_i)_i`; `None` where ρ is not differentiable (bidisc corners).
    pub fn grad_bar(&self, z: &Point) -> Option<Point> {
        let g = match (*self, z) {
            (ModelDomain::Disk | ModelDomain::Ball, _) => *z,
            (ModelDomain::Annulus { r }, Point::C1(w)) => {
                let s = w.norm_sqr();
                Point::one(w * (2.0 * s - 1.0 - r * r))
            }
            (ModelDomain::Bidisc, Point::C2([a, b])) => {
                let (sa, sb) = (a.norm_sqr(), b.norm_sqr());
                if (sa - sb).abs() < 1e-12 {
                    return None;
                }
                if sa > sb {
                    Point::two(*a, c64(0.0, 0.0))
                } else {
                    Point::two(c64(0.0, 0.0), *b)
                }
            }
            (ModelDomain::Ellipsoid { m }, Point::C2([a, b])) => {
                let m = m as i32;
                Point::two(*a, *b * (m as f64) * b.norm_sqr().powi(m - 1))
            }
            (ModelDomain::Siegel, Point::C2([_, b])) => Point::two(c64(-0.5, 0.0), *b),
            _ => return None,
        };
        if g.norm() == 0.0 {
            None
        } else {
            Some(g)
        }
    }

    /// Levi form `Σ ∂²ρ/∂z_i∂z̄_j τ_i conj(τ_j)`.
    pub fn levi(&self, z: &Point, tau: &Point) -> f64 {
        match (*self, z, tau) {
            (ModelDomain::Disk | ModelDomain::Ball, _, _) => tau.norm_sqr(),
            (ModelDomain::Annulus { r }, Point::C1(w), Point::C1(t)) => {
                let s = w.norm_sqr();
                (4.0 * s - 1.0 - r * r) * t.norm_sqr()
            }
            (ModelDomain::Bidisc, Point::C2([a, b]), Point::C2([t1, t2])) => {
                if a.norm_sqr() >= b.norm_sqr() {
                    t1.norm_sqr()
                } else {
                    t2.norm_sqr()
                }
            }
            (ModelDomain::Ellipsoid { m }, Point::C2([_, b]), Point::C2([t1, t2])) => {
                let mf = m as f64;
                t1.norm_sqr() + mf * mf * b.norm_sqr().powi(m as i32 - 1) * t2.norm_sqr()
            }
            (ModelDomain::Siegel, _, Point::C2([_, t2])) => t2.norm_sqr(),
            _ => f64::NAN,
        }
    }

    /// Unsigned distance to the boundary; exact except for ellipsoids and the
    /// Siegel domain, where it is the first-order estimate `|ρ| / |∇ρ|`.
    pub fn boundary_distance(&self, z: &Point) -> f64 {
        match (*self, z) {
            (ModelDomain::Disk, Point::C1(w)) => (w.norm() - 1.0).abs(),
            (ModelDomain::Annulus { r }, Point::C1(w)) => {
                let n = w.norm();
                (n - 1.0).abs().min((n - r).abs())
            }
            (ModelDomain::Bidisc, Point::C2([a, b])) => {
                let (na, nb) = (a.norm(), b.norm());
                if na < 1.0 && nb < 1.0 {
                    (1.0 - na).min(1.0 - nb)
                } else {
                    ((na - 1.0).max(0.0).powi(2) + (nb - 1.0).max(0.0).powi(2)).sqrt()
                }
            }
            (ModelDomain::Ball, _) => (z.norm() - 1.0).abs(),
            (ModelDomain::Ellipsoid { .. } | ModelDomain::Siegel, _) => {
                let rho = self.rho(z);
                match self.grad_bar(z) {
                    Some(g) => {
                        let est = rho.abs() / (2.0 * g.norm());
                        if rho < 0.0 && matches!(self, ModelDomain::Ellipsoid { .. }) {
                            est.min(1.0)
                        } else {
                            est
                        }
                    }
                    None => 1.0,
                }
            }
            _ => f64::NAN,
        }
    }

    /// Outward unit normal as a complex vector.
    pub fn outward_normal(&self, x: &Point) -> Result<Point> {
        self.check_dim(x)?;
        self.grad_bar(x)
            .map(|g| g.normalized())
            .ok_or_else(|| Error::Frame(format!("no normal direction at {x} on {}", self.name())))
    }

    /// A nearby boundary point (radial projection where available, Newton otherwise).
    pub fn project_to_boundary(&self, z: &Point) -> Point {
        match (*self, z) {
            (ModelDomain::Disk, Point::C1(w)) => {
                Point::one(if w.norm() == 0.0 { c64(1.0, 0.0) } else { w / w.norm() })
            }
            (ModelDomain::Annulus { r }, Point::C1(w)) => {
                let n = w.norm();
                let u = if n == 0.0 { c64(1.0, 0.0) } else { w / n };
                let target = if (n - 1.0).abs() <= (n - r).abs() { 1.0 } else { r };
                Point::one(u * target)
            }
            (ModelDomain::Ball, _) => {
                if z.norm() == 0.0 {
                    Point::basis(2, 0)
                } else {
                    z.normalized()
                }
            }
            (ModelDomain::Bidisc, Point::C2([a, b])) => {
                let unit = |w: C64| if w.norm() == 0.0 { c64(1.0, 0.0) } else { w / w.norm() };
                if a.norm() >= b.norm() {
                    Point::two(unit(*a), *b)
                } else {
                    Point::two(*a, unit(*b))
                }
            }
            (ModelDomain::Siegel, Point::C2([a, b])) => {
                Point::two(c64(b.norm_sqr(), a.im), *b)
            }
            (ModelDomain::Ellipsoid { .. }, _) => {
                let mut p = if z.norm() == 0.0 { Point::basis(2, 0) } else { *z };
                for _ in 0..60 {
                    let rho = self.rho(&p);
                    let Some(g) = self.grad_bar(&p) else { break };
                    let step = rho / (2.0 * g.norm_sqr());
                    p = p - g * step;
                    if rho.abs() < 1e-15 {
                        break;
                    }
                }
                p
            }
            _ => *z,
        }
    }

    /// Uniform-ish interior sample (rejection from a bounding box; the Siegel
    /// domain is sampled in the window `0 < Re w1 ≤ 2`, `|Im w1| ≤ 1`).
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        loop {
            let mut u = || c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let p = match self {
                ModelDomain::Disk | ModelDomain::Annulus { .. } => Point::one(u()),
                ModelDomain::Siegel => {
                    let w2 = u();
                    let w1 = c64(2.0 * (u().re.abs()), u().im);
                    Point::two(w1, w2)
                }
                _ => Point::two(u(), u()),
            };
            if self.contains(&p) {
                return p;
            }
        }
    }

    /// Interior point at depth `delta` along the inner normal of a random boundary point.
    pub fn sample_near_boundary<R: Rng + ?Sized>(&self, rng: &mut R, delta: f64) -> Point {
        for _ in 0..1000 {
            let x = self.project_to_boundary(&self.sample_interior(rng));
            if let Ok(n) = self.outward_normal(&x) {
                let p = x - n * delta;
                if self.contains(&p) {
                    return p;
                }
            }
        }
        self.sample_interior(rng)
    }

    /// Point of `C^n` for a real parameter vector, used by tests and the CLI.
    pub fn origin_like(&self) -> Point {
        match self {
            ModelDomain::Annulus { r } => Point::one(c64((1.0 + r) / 2.0, 0.0)),
            ModelDomain::Siegel => Point::two(c64(1.0, 0.0), c64(0.0, 0.0)),
            d => Point::zero(d.dim()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disk_center() {
        let d = ModelDomain::Disk;
        let z = Point::one(c64(0.0, 0.0));
        assert!(d.contains(&z));
        assert_eq!(d.boundary_distance(&z), 1.0);
    }

    #[test]
    fn annulus_hole_is_outside() {
        let d = ModelDomain::annulus(0.5).unwrap();
        assert!(!d.contains(&Point::one(c64(0.25, 0.0))));
        assert!(d.contains(&Point::one(c64(0.75, 0.0))));
    }

    #[test]
    fn ball_distance_is_exact() {
        let z = Point::two(c64(0.6, 0.0), c64(0.8 * 0.99, 0.0));
        let oracle = 1.0 - (0.36f64 + 0.627264).sqrt();
        assert!((ModelDomain::Ball.boundary_distance(&z) - oracle).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ModelDomain::annulus(1.2).is_err());
        assert!(ModelDomain::annulus(0.0).is_err());
        assert!(ModelDomain::ellipsoid(0).is_err());
    }

    #[test]
    fn distance_vanishes_on_boundary_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [
            ModelDomain::Disk,
            ModelDomain::annulus(0.4).unwrap(),
            ModelDomain::Bidisc,
            ModelDomain::Ball,
            ModelDomain::ellipsoid(2).unwrap(),
            ModelDomain::Siegel,
        ] {
            for _ in 0..50 {
                let p = d.sample_interior(&mut rng);
                assert!(d.rho(&p) < 0.0);
                assert!(d.boundary_distance(&p) > 0.0, "{} {p}", d.name());
                let x = d.project_to_boundary(&p);
                assert!(d.rho(&x).abs() < 1e-12, "{} {x}", d.name());
                assert!(d.boundary_distance(&x) < 1e-10, "{} {x}", d.name());
            }
        }
    }

    #[test]
    fn ellipsoid_first_order_distance_agrees_near_boundary() {
        let d = ModelDomain::ellipsoid(2).unwrap();
        let x = Point::two(c64(0.6, 0.0), c64((1.0f64 - 0.36).powf(0.25), 0.0));
        let n = d.outward_normal(&x).unwrap();
        let p = x - n * 1e-4;
        assert!((d.boundary_distance(&p) - 1e-4).abs() < 1e-7);
    }

    #[test]
    fn bidisc_corner_has_no_normal() {
        let corner = Point::two(c64(1.0, 0.0), c64(1.0, 0.0));
        assert!(ModelDomain::Bidisc.outward_normal(&corner).is_err());
    }

    #[test]
    fn levi_form_values() {
        let e2 = ModelDomain::ellipsoid(2).unwrap();
        let tangent = Point::two(c64(0.0, 0.0), c64(1.0, 0.0));
        // weakly pseudoconvex along z2 = 0
        assert_eq!(e2.levi(&Point::two(c64(1.0, 0.0), c64(0.0, 0.0)), &tangent), 0.0);
        let t1 = Point::two(c64(1.0, 0.0), c64(0.0, 0.0));
        assert_eq!(e2.levi(&Point::two(c64(0.0, 0.0), c64(1.0, 0.0)), &t1), 1.0);
    }

    #[test]
    fn near_boundary_samples_have_requested_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [ModelDomain::Disk, ModelDomain::Ball] {
            for _ in 0..20 {
                let p = d.sample_near_boundary(&mut rng, 1e-3);
                assert!((d.boundary_distance(&p) - 1e-3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn descriptor_json() {
        let v = serde_json::to_value(ModelDomain::Annulus { r: 0.5 }).unwrap();
        assert_eq!(v, serde_json::json!({"kind": "annulus", "params": {"r": 0.5}}));
        let d: ModelDomain = serde_json::from_str(r#"{"kind":"disk"}"#).unwrap();
        assert_eq!(d, ModelDomain::Disk);
    }
}
