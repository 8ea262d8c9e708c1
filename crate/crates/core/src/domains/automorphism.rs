use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelDomain;
use crate::error::{Error, Result};
use crate::point::{c64, Mat2, Point, C64};

/// Unitarity tolerance for the ball's `U` factor.
const UNITARY_TOL: f64 = 1e-10;

fn wrap(theta: f64) -> f64 {
    theta.sin().atan2(theta.cos())
}

/// `z ↦ e^{iθ}(z − a)/(1 − conj(a) z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskMobius {
    pub a: C64,
    pub theta: f64,
}

impl DiskMobius {
    pub fn new(a: C64, theta: f64) -> Result<Self> {
        let m = DiskMobius { a, theta };
        m.validate()?;
        Ok(m)
    }

    pub fn identity() -> Self {
        DiskMobius { a: c64(0.0, 0.0), theta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.norm() < 1.0) || !self.theta.is_finite() {
            return Err(Error::Construction(format!(
                "Möbius parameter needs |a| < 1 and finite θ, got a = {}, θ = {}",
                self.a, self.theta
            )));
        }
        Ok(())
    }

    pub fn apply(&self, z: C64) -> C64 {
        C64::from_polar(1.0, self.theta) * (z - self.a) / (1.0 - self.a.conj() * z)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        let d = 1.0 - self.a.conj() * z;
        C64::from_polar(1.0 - self.a.norm_sqr(), self.theta) / (d * d)
    }

    pub fn inverse(&self) -> Self {
        DiskMobius {
            a: -self.a * C64::from_polar(1.0, self.theta),
            theta: wrap(-self.theta),
        }
    }

    fn matrix(&self) -> [[C64; 2]; 2] {
        let e = C64::from_polar(1.0, self.theta);
        [[e, -e * self.a], [-self.a.conj(), c64(1.0, 0.0)]]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DiskMobius) -> Self {
        let p = Mat2(self.matrix()).mul(&Mat2(other.matrix())).0;
        let (p00, p01, p11) = (p[0][0], p[0][1], p[1][1]);
        DiskMobius { a: -p01 / p00, theta: wrap((p00 / p11).arg()) }
    }
}

/// Closed-form automorphisms of the catalog domains, serialized as `{kind, params}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Automorphism {
    Disk(DiskMobius),
    /// `z ↦ e^{iθ} z`, or `z ↦ e^{iθ} r / z` when `flip`.
    Annulus { r: f64, theta: f64, flip: bool },
    /// `z ↦ U φ_a(z)` with `φ_a(z) = (a − P_a z − s_a Q_a z)/(1 − ⟨z, a⟩)`,
    /// `P_a` the projection onto `a`, `Q_a = I − P_a`, `s_a = sqrt(1 − |a|²)`.
    /// The identity is `a = 0, U = −I`.
    Ball { a: [C64; 2], u: Mat2 },
    /// `(z1, z2) ↦ (first(z_σ1), second(z_σ2))`, `σ` the coordinate swap when `swap`.
    Bidisc { first: DiskMobius, second: DiskMobius, swap: bool },
    /// `(w1, w2) ↦ (λ²w1 + 2 conj(b) μ w2 + |b|² + i t, μ w2 + b)`, `μ = λ e^{iθ}`.
    Siegel { lambda: f64, theta: f64, b: C64, t: f64 },
}

impl Automorphism {
    pub fn disk(a: C64, theta: f64) -> Result<Self> {
        Ok(Automorphism::Disk(DiskMobius::new(a, theta)?))
    }

    pub fn annulus_rotation(r: f64, theta: f64) -> Result<Self> {
        Automorphism::Annulus { r, theta, flip: false }.validated()
    }

    pub fn annulus_flip(r: f64, theta: f64) -> Result<Self> {
        Automorphism::Annulus { r, theta, flip: true }.validated()
    }

    pub fn ball(a: Point, u: Mat2) -> Result<Self> {
        match a {
            Point::C2(a) => Automorphism::Ball { a, u }.validated(),
            _ => Err(Error::Construction("ball parameter must lie in C²".into())),
        }
    }

    pub fn bidisc(first: DiskMobius, second: DiskMobius, swap: bool) -> Result<Self> {
        Automorphism::Bidisc { first, second, swap }.validated()
    }

    pub fn siegel(lambda: f64, theta: f64, b: C64, t: f64) -> Result<Self> {
        Automorphism::Siegel { lambda, theta, b, t }.validated()
    }

    pub fn identity(domain: ModelDomain) -> Result<Self> {
        match domain {
            ModelDomain::Disk => Ok(Automorphism::Disk(DiskMobius::identity())),
            ModelDomain::Annulus { r } => Automorphism::annulus_rotation(r, 0.0),
            ModelDomain::Ball => Ok(Automorphism::Ball {
                a: [c64(0.0, 0.0); 2],
                u: Mat2::diag(c64(-1.0, 0.0), c64(-1.0, 0.0)),
            }),
            ModelDomain::Bidisc => Ok(Automorphism::Bidisc {
                first: DiskMobius::identity(),
                second: DiskMobius::identity(),
                swap: false,
            }),
            ModelDomain::Siegel => Ok(Automorphism::Siegel {
                lambda: 1.0,
                theta: 0.0,
                b: c64(0.0, 0.0),
                t: 0.0,
            }),
            ModelDomain::Ellipsoid { .. } => Err(Error::Usage(
                "ellipsoid automorphisms are not in the catalog".into(),
            )),
        }
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Automorphism::Disk(m) => m.validate(),
            Automorphism::Annulus { r, theta, .. } => {
                ModelDomain::annulus(*r)?;
                if !theta.is_finite() {
                    return Err(Error::Construction("rotation angle must be finite".into()));
                }
                Ok(())
            }
            Automorphism::Ball { a, u } => {
                if !(Point::C2(*a).norm() < 1.0) {
                    return Err(Error::Construction(format!(
                        "ball parameter needs |a| < 1, got {}",
                        Point::C2(*a)
                    )));
                }
                let defect = u.unitarity_defect();
                if !(defect <= UNITARY_TOL) {
                    return Err(Error::Construction(format!(
                        "U is not unitary: |U*U − I| = {defect:.3e}"
                    )));
                }
                Ok(())
            }
            Automorphism::Bidisc { first, second, .. } => {
                first.validate()?;
                second.validate()
            }
            Automorphism::Siegel { lambda, theta, b, t } => {
                if !(*lambda > 0.0 && lambda.is_finite())
                    || !theta.is_finite()
                    || !t.is_finite()
                    || !(b.re.is_finite() && b.im.is_finite())
                {
                    return Err(Error::Construction(
                        "Siegel map needs λ > 0 and finite parameters".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn domain(&self) -> ModelDomain {
        match self {
            Automorphism::Disk(_) => ModelDomain::Disk,
            Automorphism::Annulus { r, .. } => ModelDomain::Annulus { r: *r },
            Automorphism::Ball { .. } => ModelDomain::Ball,
            Automorphism::Bidisc { .. } => ModelDomain::Bidisc,
            Automorphism::Siegel { .. } => ModelDomain::Siegel,
        }
    }

    /// Checked application: `z` must lie in the domain.
    pub fn apply(&self, z: &Point) -> Result<Point> {
        let d = self.domain();
        if !d.contains(z) {
            return Err(Error::Domain(format!("{z} is not in {}", d.name())));
        }
        Ok(self.map(z))
    }

    /// Unchecked evaluation of the closed form.
    pub fn map(&self, z: &Point) -> Point {
        match (self, z) {
            (Automorphism::Disk(m), Point::C1(w)) => Point::one(m.apply(*w)),
            (Automorphism::Annulus { r, theta, flip }, Point::C1(w)) => {
                let e = C64::from_polar(1.0, *theta);
                Point::one(if *flip { e * *r / w } else { e * w })
            }
            (Automorphism::Ball { a, u }, Point::C2(_)) => Point::C2(u.apply(phi(a, z))),
            (Automorphism::Bidisc { first, second, swap }, Point::C2(w)) => {
                let (i, j) = if *swap { (1, 0) } else { (0, 1) };
                Point::two(first.apply(w[i]), second.apply(w[j]))
            }
            (Automorphism::Siegel { lambda, theta, b, t }, Point::C2([w1, w2])) => {
                let mu = C64::from_polar(*lambda, *theta);
                Point::two(
                    lambda * lambda * w1 + 2.0 * b.conj() * mu * w2 + b.norm_sqr() + c64(0.0, *t),
                    mu * w2 + b,
                )
            }
            _ => Point::zero(self.domain().dim()).map(|_| c64(f64::NAN, f64::NAN)),
        }
    }

    pub fn inverse(&self) -> Automorphism {
        match *self {
            Automorphism::Disk(m) => Automorphism::Disk(m.inverse()),
            Automorphism::Annulus { r, theta, flip } => Automorphism::Annulus {
                r,
                theta: if flip { theta } else { wrap(-theta) },
                flip,
            },
            Automorphism::Ball { a, u } => Automorphism::Ball { a: u.apply(a), u: u.adjoint() },
            Automorphism::Bidisc { first, second, swap } => {
                if swap {
                    Automorphism::Bidisc { first: second.inverse(), second: first.inverse(), swap }
                } else {
                    Automorphism::Bidisc { first: first.inverse(), second: second.inverse(), swap }
                }
            }
            Automorphism::Siegel { lambda, theta, b, t } => {
                let mu = C64::from_polar(lambda, theta);
                let l2 = lambda * lambda;
                let inv = move |w: &Point| {
                    let [w1, w2] = two(w);
                    let z2 = (w2 - b) / mu;
                    let z1 = (w1 - 2.0 * b.conj() * mu * z2 - b.norm_sqr() - c64(0.0, t)) / l2;
                    Point::two(z1, z2)
                };
                siegel_from_evaluations(inv)
            }
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism> {
        if self.domain() != other.domain() {
            return Err(Error::Usage(format!(
                "cannot compose automorphisms of {} and {}",
                self.domain().name(),
                other.domain().name()
            )));
        }
        Ok(match (*self, *other) {
            (Automorphism::Disk(f), Automorphism::Disk(g)) => Automorphism::Disk(f.compose(&g)),
            (
                Automorphism::Annulus { r, theta: t1, flip: f1 },
                Automorphism::Annulus { theta: t2, flip: f2, .. },
            ) => {
                let theta = match (f1, f2) {
                    (false, false) => t1 + t2,
                    (true, false) => t1 - t2,
                    (false, true) => t1 + t2,
                    (true, true) => t1 - t2,
                };
                Automorphism::Annulus { r, theta: wrap(theta), flip: f1 ^ f2 }
            }
            (Automorphism::Ball { .. }, Automorphism::Ball { .. }) => {
                let b = other.inverse().map(&self.inverse().map(&Point::zero(2)));
                let [b0, b1] = two(&b);
                let dg = self
                    .jacobian_matrix(&other.map(&b))
                    .mul(&other.jacobian_matrix(&b));
                let w = dg.mul(&phi_jacobian(&[b0, b1], &Point::zero(2)));
                Automorphism::Ball { a: [b0, b1], u: w.reunitarize() }
            }
            (
                Automorphism::Bidisc { first: f1, second: f2, swap: sf },
                Automorphism::Bidisc { first: g1, second: g2, swap: sg },
            ) => {
                let g = [g1, g2];
                let sigma = |i: usize| if sf { 1 - i } else { i };
                Automorphism::Bidisc {
                    first: f1.compose(&g[sigma(0)]),
                    second: f2.compose(&g[sigma(1)]),
                    swap: sf ^ sg,
                }
            }
            (Automorphism::Siegel { .. }, Automorphism::Siegel { .. }) => {
                let (f, g) = (*self, *other);
                siegel_from_evaluations(move |w| f.map(&g.map(w)))
            }
            _ => unreachable!("domains already matched"),
        })
    }

    /// Complex Jacobian determinant at `z`.
    pub fn jacobian(&self, z: &Point) -> C64 {
        match (self, z) {
            (Automorphism::Disk(m), Point::C1(w)) => m.derivative(*w),
            (Automorphism::Annulus { r, theta, flip }, Point::C1(w)) => {
                let e = C64::from_polar(1.0, *theta);
                if *flip {
                    -e * *r / (w * w)
                } else {
                    e
                }
            }
            _ => self.jacobian_matrix(z).det(),
        }
    }

    /// Complex Jacobian matrix; one-variable maps occupy the upper-left entry.
    pub fn jacobian_matrix(&self, z: &Point) -> Mat2 {
        let zero = c64(0.0, 0.0);
        match (self, z) {
            (Automorphism::Disk(_) | Automorphism::Annulus { .. }, _) => {
                Mat2::diag(self.jacobian(z), c64(1.0, 0.0))
            }
            (Automorphism::Ball { a, u }, _) => u.mul(&phi_jacobian(a, z)),
            (Automorphism::Bidisc { first, second, swap }, Point::C2(w)) => {
                if *swap {
                    Mat2([[zero, first.derivative(w[1])], [second.derivative(w[0]), zero]])
                } else {
                    Mat2::diag(first.derivative(w[0]), second.derivative(w[1]))
                }
            }
            (Automorphism::Siegel { lambda, theta, b, .. }, _) => {
                let mu = C64::from_polar(*lambda, *theta);
                Mat2([[c64(lambda * lambda, 0.0), 2.0 * b.conj() * mu], [zero, mu]])
            }
            _ => Mat2([[c64(f64::NAN, 0.0); 2]; 2]),
        }
    }

    /// Push a tangent vector forward: `dF(z) v`.
    pub fn push_forward(&self, z: &Point, v: &Point) -> Point {
        match v {
            Point::C1(t) => Point::one(self.jacobian(z) * t),
            Point::C2(t) => Point::C2(self.jacobian_matrix(z).apply(*t)),
        }
    }

    /// Random automorphism with `|a| ≤ max_a` (translation parameters bounded
    /// by `max_a` for the Siegel domain).
    pub fn random<R: Rng + ?Sized>(domain: ModelDomain, rng: &mut R, max_a: f64) -> Result<Self> {
        let disk_param = |rng: &mut R| {
            let rad = max_a * rng.gen::<f64>().sqrt();
            C64::from_polar(rad, rng.gen_range(-PI..PI))
        };
        match domain {
            ModelDomain::Disk => {
                let a = disk_param(rng);
                Automorphism::disk(a, rng.gen_range(-PI..PI))
            }
            ModelDomain::Annulus { r } => {
                let theta = rng.gen_range(-PI..PI);
                Automorphism::Annulus { r, theta, flip: rng.gen_bool(0.5) }.validated()
            }
            ModelDomain::Ball => {
                let p = loop {
                    let p = Point::two(disk_param(rng), disk_param(rng));
                    if p.norm() <= max_a {
                        break p;
                    }
                };
                let u = Mat2::unitary(
                    rng.gen_range(-PI..PI),
                    rng.gen_range(-PI..PI),
                    rng.gen_range(-PI..PI),
                );
                Automorphism::ball(p, u)
            }
            ModelDomain::Bidisc => {
                let first = DiskMobius::new(disk_param(rng), rng.gen_range(-PI..PI))?;
                let second = DiskMobius::new(disk_param(rng), rng.gen_range(-PI..PI))?;
                Automorphism::bidisc(first, second, rng.gen_bool(0.5))
            }
            ModelDomain::Siegel => Automorphism::siegel(
                rng.gen_range(0.5..2.0),
                rng.gen_range(-PI..PI),
                disk_param(rng),
                rng.gen_range(-max_a..max_a),
            ),
            ModelDomain::Ellipsoid { .. } => Err(Error::Usage(
                "ellipsoid automorphisms are not in the catalog".into(),
            )),
        }
    }
}

fn two(p: &Point) -> [C64; 2] {
    match p {
        Point::C2(z) => *z,
        Point::C1(z) => [*z, c64(0.0, 0.0)],
    }
}

/// `L = P_a + s_a Q_a`.
fn involution_linear_part(a: &[C64; 2]) -> Mat2 {
    let n2 = a[0].norm_sqr() + a[1].norm_sqr();
    if n2 == 0.0 {
        return Mat2::identity();
    }
    let s = (1.0 - n2).sqrt();
    let mut m = [[c64(0.0, 0.0); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let p = a[i] * a[j].conj() / n2;
            let q = if i == j { 1.0 - p } else { -p };
            *cell = p + s * q;
        }
    }
    Mat2(m)
}

fn phi(a: &[C64; 2], z: &Point) -> [C64; 2] {
    let zz = two(z);
    let lz = involution_linear_part(a).apply(zz);
    let d = 1.0 - (zz[0] * a[0].conj() + zz[1] * a[1].conj());
    [(a[0] - lz[0]) / d, (a[1] - lz[1]) / d]
}

fn phi_jacobian(a: &[C64; 2], z: &Point) -> Mat2 {
    let zz = two(z);
    let l = involution_linear_part(a);
    let lz = l.apply(zz);
    let n = [a[0] - lz[0], a[1] - lz[1]];
    let d = 1.0 - (zz[0] * a[0].conj() + zz[1] * a[1].conj());
    let mut m = [[c64(0.0, 0.0); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (-l.0[i][j] * d + n[i] * a[j].conj()) / (d * d);
        }
    }
    Mat2(m)
}

/// Reads the Siegel parameters off an affine map of the Siegel family.
fn siegel_from_evaluations(f: impl Fn(&Point) -> Point) -> Automorphism {
    let zero = c64(0.0, 0.0);
    let [e1, e2] = two(&f(&Point::two(zero, zero)));
    let [_, d2] = two(&f(&Point::two(zero, c64(1.0, 0.0))));
    let mu = d2 - e2;
    Automorphism::Siegel { lambda: mu.norm(), theta: mu.arg(), b: e2, t: e1.im }
}
