//! Boundary scaling toward the Siegel model: frames at boundary points,
//! anisotropic dilations, graph defects of the rescaled boundary, and the
//! Cayley pair between the ball and the Siegel domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{Automorphism, ModelDomain};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::point::{c64, Mat2, Point, C64};

/// Boundary samples per dilation step.
pub const CLOUD_SIZE: usize = 500;
/// Rescaled window: `|w2| ≤ 1`, `|Im w1| ≤ 1`.
pub const WINDOW: f64 = 1.0;
const BOUNDARY_TOL: f64 = 1e-10;

pub const WINDOW_POLICY: &str = "rescaled window |w2| <= 1, |Im w1| <= 1; \
    in frame coordinates tangential radius sqrt(delta)/mu and normal extent delta";

/// Unitary-affine frame at a boundary point: `ζ = U (z − X)` with `ζ1` along
/// the inner complex normal and `ζ2` along the complex tangent, followed by
/// the holomorphic correction `ζ1 ↦ ζ1 − q ζ2² / (2γ)` that removes the pure
/// second-order term of the defining function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryFrame {
    pub domain: ModelDomain,
    pub point: Point,
    pub unitary: Mat2,
    /// `|∂ρ|` at the point.
    pub gradient: f64,
    /// Levi form along the tangent.
    pub levi: f64,
    /// `Σ ∂²ρ/∂z_i∂z_j τ_i τ_j`.
    pub pure_term: C64,
}

/// Holomorphic Hessian of the defining function contracted with `τ` twice.
fn pure_hessian(d: ModelDomain, x: &Point, tau: &Point) -> C64 {
    match d {
        ModelDomain::Ellipsoid { m } => {
            let (b, t) = (x.coord(1), tau.coord(1));
            let m = m as i32;
            if m < 2 {
                return c64(0.0, 0.0);
            }
            (m * (m - 1)) as f64 * b.powi(m - 2) * b.conj().powi(m) * t * t
        }
        // |z|², |z_i|² and Re z1 have no pure second-order terms
        _ => c64(0.0, 0.0),
    }
}

impl BoundaryFrame {
    pub fn new(domain: ModelDomain, x: &Point) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(Error::Usage(format!("scaling needs a two-variable domain, got {}", domain.name())));
        }
        let rho = domain.rho(x);
        if !(rho.abs() <= BOUNDARY_TOL) {
            return Err(Error::Domain(format!("{x} is not on the boundary of {} (ρ = {rho:.3e})", domain.name())));
        }
        let g = domain
            .grad_bar(x)
            .ok_or_else(|| Error::Frame(format!("no complex normal at {x} on {}", domain.name())))?;
        let n = g.normalized();
        let (n1, n2) = (n.coord(0), n.coord(1));
        let tau = Point::two(-n2.conj(), n1.conj());
        let unitary = Mat2([[-n1.conj(), -n2.conj()], [tau.coord(0).conj(), tau.coord(1).conj()]]);
        let gradient = g.norm();
        let levi = domain.levi(x, &tau);
        if !(levi > 1e-10 * gradient) {
            return Err(Error::Frame(format!(
                "Levi form {levi:.3e} degenerates at {x} on {}: not strongly pseudoconvex",
                domain.name()
            )));
        }
        let pure_term = pure_hessian(domain, x, &tau);
        Ok(BoundaryFrame { domain, point: *x, unitary, gradient, levi, pure_term })
    }

    /// Tangential normalization making the model boundary `Re w1 = |w2|²`.
    pub fn mu(&self) -> f64 {
        (self.levi / (2.0 * self.gradient)).sqrt()
    }

    pub fn to_frame(&self, z: &Point) -> [C64; 2] {
        let h = [z.coord(0) - self.point.coord(0), z.coord(1) - self.point.coord(1)];
        let [a, b] = self.unitary.apply(h);
        [a - self.pure_term * b * b / (2.0 * self.gradient), b]
    }

    pub fn from_frame(&self, zeta: [C64; 2]) -> Point {
        let a = zeta[0] + self.pure_term * zeta[1] * zeta[1] / (2.0 * self.gradient);
        let h = self.unitary.adjoint().apply([a, zeta[1]]);
        Point::two(self.point.coord(0) + h[0], self.point.coord(1) + h[1])
    }

    /// The point `X − δ n` used as the dilation anchor.
    pub fn anchor(&self, delta: f64) -> Point {
        self.from_frame([c64(delta, 0.0), c64(0.0, 0.0)])
    }
}

/// Anchor (in frame coordinates) and depth of one dilation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DilationStep {
    pub anchor: [C64; 2],
    pub delta: f64,
}

/// `ψ(z1, z2) = (X′1 + (z1 − X′1)/δ, X′2 + (z2 − X′2)/√δ)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Dilation {
    pub step: DilationStep,
}

pub fn dilation_map(step: DilationStep) -> Result<Dilation> {
    if !(step.delta > 0.0) || !step.delta.is_finite() {
        return Err(Error::Usage(format!("dilation needs δ > 0, got {}", step.delta)));
    }
    Ok(Dilation { step })
}

impl Dilation {
    pub fn apply(&self, z: [C64; 2]) -> [C64; 2] {
        let [a1, a2] = self.step.anchor;
        let d = self.step.delta;
        [a1 + (z[0] - a1) / d, a2 + (z[1] - a2) / d.sqrt()]
    }

    pub fn inverse(&self, w: [C64; 2]) -> [C64; 2] {
        let [a1, a2] = self.step.anchor;
        let d = self.step.delta;
        [a1 + (w[0] - a1) * d, a2 + (w[1] - a2) * d.sqrt()]
    }

    /// Complex Jacobian determinant `δ^{−3/2}`.
    pub fn jacobian(&self) -> f64 {
        self.step.delta.powf(-1.5)
    }
}

/// Frame, dilation about the anchor `X − δ n`, and the fixed normalization
/// `w1 = ψ1 − X′1 + 1`, `w2 = μ (ψ2 − X′2)` that puts the anchor at `(1, 0)`.
#[derive(Clone, Debug)]
pub struct Rescaling {
    pub frame: BoundaryFrame,
    pub dilation: Dilation,
}

impl Rescaling {
    pub fn new(frame: BoundaryFrame, delta: f64) -> Result<Self> {
        let step = DilationStep { anchor: [c64(delta, 0.0), c64(0.0, 0.0)], delta };
        Ok(Rescaling { frame, dilation: dilation_map(step)? })
    }

    pub fn apply(&self, z: &Point) -> Point {
        let psi = self.dilation.apply(self.frame.to_frame(z));
        let a = self.dilation.step.anchor;
        Point::two(psi[0] - a[0] + 1.0, (psi[1] - a[1]) * self.frame.mu())
    }

    pub fn inverse(&self, w: &Point) -> Point {
        let a = self.dilation.step.anchor;
        let psi = [w.coord(0) + a[0] - 1.0, w.coord(1) / self.frame.mu() + a[1]];
        self.frame.from_frame(self.dilation.inverse(psi))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleStep {
    pub delta: f64,
    pub anchor: Point,
    /// `max |Re w1 − |w2|²|` over the rescaled cloud.
    pub defect: f64,
    pub window_tangential: f64,
    pub window_normal: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleReport {
    pub domain: ModelDomain,
    pub boundary_point: Point,
    pub seed: u64,
    pub steps: Vec<ScaleStep>,
    pub strictly_decreasing: bool,
    pub final_defect: f64,
    pub window_policy: String,
}

impl ScaleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,defect,window,samples\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{}\n",
                num(s.delta),
                num(s.defect),
                num(s.window_tangential),
                s.samples
            ));
        }
        out
    }
}

/// Boundary point whose rescaled coordinates are `(σ + i·im, w2)`, solving for σ.
fn boundary_in_window(resc: &Rescaling, im: f64, w2: C64) -> Option<Point> {
    let d = resc.frame.domain;
    let at = |s: f64| resc.inverse(&Point::two(c64(s, im), w2));
    // ρ decreases as Re w1 grows; bracket the root nearest the paraboloid
    let (mut lo, mut hi) = (w2.norm_sqr() - 1.0, w2.norm_sqr() + 1.0);
    let mut widen = 0;
    while !(d.rho(&at(lo)) > 0.0 && d.rho(&at(hi)) < 0.0) {
        widen += 1;
        if widen > 10 {
            return None;
        }
        lo -= widen as f64;
        hi += widen as f64;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d.rho(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(at(0.5 * (lo + hi)))
}

/// Rescales boundary clouds near `x` for each δ and measures the distance of
/// the rescaled boundary from the Siegel paraboloid `Re w1 = |w2|²`.
pub fn scale_sequence(d: ModelDomain, x: &Point, deltas: &[f64], seed: u64) -> Result<ScaleReport> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Usage("deltas must be positive and strictly decreasing".into()));
    }
    let frame = BoundaryFrame::new(d, x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // one cloud in rescaled coordinates, reused at every step
    let cloud: Vec<(f64, C64)> = (0..CLOUD_SIZE)
        .map(|_| {
            let w2 = loop {
                let c = c64(rng.gen_range(-WINDOW..WINDOW), rng.gen_range(-WINDOW..WINDOW));
                if c.norm() <= WINDOW {
                    break c;
                }
            };
            (rng.gen_range(-WINDOW..WINDOW), w2)
        })
        .collect();
    let mut steps = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let resc = Rescaling::new(frame.clone(), delta)?;
        let anchor = frame.anchor(delta);
        if !d.contains(&anchor) {
            return Err(Error::Domain(format!("anchor {anchor} at δ = {delta} is not interior")));
        }
        let mut defect: f64 = 0.0;
        let mut samples = 0;
        for &(im, w2) in &cloud {
            let Some(p) = boundary_in_window(&resc, im, w2) else { continue };
            let w = resc.apply(&p);
            defect = defect.max((w.coord(0).re - w.coord(1).norm_sqr()).abs());
            samples += 1;
        }
        if samples == 0 {
            return Err(Error::Frame(format!("no boundary samples found in the window at δ = {delta}")));
        }
        steps.push(ScaleStep {
            delta,
            anchor,
            defect,
            window_tangential: delta.sqrt() / frame.mu(),
            window_normal: delta,
            samples,
        });
    }
    let strictly_decreasing = steps.windows(2).all(|w| w[1].defect < w[0].defect);
    let final_defect = steps.last().map_or(f64::NAN, |s| s.defect);
    Ok(ScaleReport {
        domain: d,
        boundary_point: *x,
        seed,
        steps,
        strictly_decreasing,
        final_defect,
        window_policy: WINDOW_POLICY.into(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitScaleStep {
    pub delta: f64,
    /// `sup |G_j − G_{j−1}|` on the compact grid (absent at the first step).
    pub change: Option<f64>,
    /// `min (Re w1 − |w2|²)` over the grid images.
    pub min_margin: f64,
    /// `sup |(Re w1 − |w2|²) − (1 − |z|²)/|1 − z1|²|`: distance from a Cayley transform.
    pub cayley_defect: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitScaleReport {
    pub boundary_point: Point,
    pub grid_radius: f64,
    pub grid_size: usize,
    pub steps: Vec<OrbitScaleStep>,
    pub converging: bool,
}

/// Rescales genuine ball orbit maps: `G_j = rescaling_j ∘ φ_j` with `φ_j(0)`
/// the anchor at depth `δ_j`, evaluated on a compact grid of the ball.
pub fn ball_orbit_rescaling(x: &Point, deltas: &[f64], grid_radius: f64, seed: u64) -> Result<OrbitScaleReport> {
    let d = ModelDomain::Ball;
    let frame = BoundaryFrame::new(d, x)?;
    if !(grid_radius > 0.0 && grid_radius < 1.0) {
        return Err(Error::Usage(format!("grid radius {grid_radius} must lie in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<Point> = (0..200)
        .map(|_| loop {
            let p = d.sample_interior(&mut rng);
            if p.norm() <= grid_radius {
                break p;
            }
        })
        .collect();
    // rotate the boundary point to (1, 0) so the Cayley comparison applies
    let n = frame.point;
    let to_pole = Mat2([[n.coord(0).conj(), n.coord(1).conj()], [-n.coord(1), n.coord(0)]]);
    let mut steps: Vec<OrbitScaleStep> = Vec::new();
    let mut prev: Option<Vec<Point>> = None;
    for &delta in deltas {
        let resc = Rescaling::new(frame.clone(), delta)?;
        let phi = Automorphism::ball(frame.anchor(delta), Mat2::identity())?;
        let images: Vec<Point> = grid.iter().map(|z| resc.apply(&phi.map(z))).collect();
        let margins = images.iter().map(|w| w.coord(0).re - w.coord(1).norm_sqr());
        let min_margin = margins.clone().fold(f64::INFINITY, f64::min);
        let cayley_defect = grid
            .iter()
            .zip(margins)
            .map(|(z, m)| {
                let [u1, u2] = to_pole.apply([z.coord(0), z.coord(1)]);
                let model = (1.0 - u1.norm_sqr() - u2.norm_sqr()) / (1.0 - u1).norm_sqr();
                (m - model).abs()
            })
            .fold(0.0, f64::max);
        let change = prev.as_ref().map(|p| p.iter().zip(&images).map(|(a, b)| a.dist(b)).fold(0.0, f64::max));
        steps.push(OrbitScaleStep { delta, change, min_margin, cayley_defect });
        prev = Some(images);
    }
    let changes: Vec<f64> = steps.iter().filter_map(|s| s.change).collect();
    let converging = changes.windows(2).all(|w| w[1] < w[0]) && steps.iter().all(|s| s.min_margin > 0.0);
    Ok(OrbitScaleReport { boundary_point: *x, grid_radius, grid_size: grid.len(), steps, converging })
}

/// Ball to Siegel: `(z1, z2) ↦ ((1 − z1)/(1 + z1), z2/(1 + z1))`.
pub fn cayley(z: &Point) -> Result<Point> {
    if !ModelDomain::Ball.contains(z) {
        return Err(Error::Domain(format!("{z} is not interior to the ball")));
    }
    let (z1, z2) = (z.coord(0), z.coord(1));
    Ok(Point::two((1.0 - z1) / (1.0 + z1), z2 / (1.0 + z1)))
}

/// Siegel to ball: `(w1, w2) ↦ ((1 − w1)/(1 + w1), 2 w2/(1 + w1))`.
pub fn cayley_inverse(w: &Point) -> Result<Point> {
    if !ModelDomain::Siegel.contains(w) {
        return Err(Error::Domain(format!("{w} is not interior to the Siegel domain")));
    }
    let (w1, w2) = (w.coord(0), w.coord(1));
    Ok(Point::two((1.0 - w1) / (1.0 + w1), 2.0 * w2 / (1.0 + w1)))
}
