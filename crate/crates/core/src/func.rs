//! Function and map handles: series, closed forms and compositions behind one interface.

use std::fmt;
use std::sync::Arc;

use crate::domains::Automorphism;
use crate::error::{Error, Result};
use crate::point::{c64, Point, C64};
use crate::series::{TruncatedLaurent, TruncatedTaylor2};

/// A scalar holomorphic function on a region of `C` or `C²`.
pub trait HoloFn: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, z: &Point) -> Result<C64>;
    /// Sup-error bound of the representation (zero for closed forms).
    fn tail_bound(&self) -> f64 {
        0.0
    }
    fn name(&self) -> String;
}

/// A holomorphic map between regions of `C^n` and `C^m`.
pub trait HoloMap: Send + Sync {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn eval(&self, z: &Point) -> Result<Point>;
    fn name(&self) -> String;
}

/// Shared function handle.
#[derive(Clone)]
pub struct Func(Arc<dyn HoloFn>);

/// Shared map handle.
#[derive(Clone)]
pub struct Map(Arc<dyn HoloMap>);

type ScalarFn = dyn Fn(&Point) -> Result<C64> + Send + Sync;
type VectorFn = dyn Fn(&Point) -> Result<Point> + Send + Sync;

struct Closure {
    dim: usize,
    name: String,
    tail: f64,
    f: Box<ScalarFn>,
}

impl HoloFn for Closure {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: &Point) -> Result<C64> {
        (self.f)(z)
    }
    fn tail_bound(&self) -> f64 {
        self.tail
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

impl HoloFn for TruncatedLaurent {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, z: &Point) -> Result<C64> {
        match z {
            Point::C1(w) => TruncatedLaurent::eval(self, *w),
            _ => Err(Error::Domain("Laurent series take one variable".into())),
        }
    }
    fn tail_bound(&self) -> f64 {
        TruncatedLaurent::tail_bound(self)
    }
    fn name(&self) -> String {
        let (m, n) = self.orders();
        format!("laurent[-{m},{n}]")
    }
}

impl HoloFn for TruncatedTaylor2 {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, z: &Point) -> Result<C64> {
        TruncatedTaylor2::eval(self, z)
    }
    fn tail_bound(&self) -> f64 {
        TruncatedTaylor2::tail_bound(self)
    }
    fn name(&self) -> String {
        format!("taylor2[{}]", self.degree())
    }
}

impl Func {
    pub fn new(f: impl HoloFn + 'static) -> Self {
        Func(Arc::new(f))
    }

    pub fn closure(
        dim: usize,
        name: impl Into<String>,
        f: impl Fn(&Point) -> Result<C64> + Send + Sync + 'static,
    ) -> Self {
        Func::new(Closure { dim, name: name.into(), tail: 0.0, f: Box::new(f) })
    }

    /// Closure over a one-variable formula.
    pub fn planar(name: impl Into<String>, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        Func::closure(1, name, move |z| match z {
            Point::C1(w) => Ok(f(*w)),
            _ => Err(Error::Domain("expected a point of C".into())),
        })
    }

    fn derived(
        dim: usize,
        name: String,
        tail: f64,
        f: impl Fn(&Point) -> Result<C64> + Send + Sync + 'static,
    ) -> Self {
        Func::new(Closure { dim, name, tail, f: Box::new(f) })
    }

    pub fn constant(c: C64, dim: usize) -> Self {
        Func::closure(dim, format!("{}{:+}i", c.re, c.im), move |_| Ok(c))
    }

    pub fn one(dim: usize) -> Self {
        Func::closure(dim, "1", |_| Ok(c64(1.0, 0.0)))
    }

    /// `z ↦ z_i`.
    pub fn coordinate(i: usize, dim: usize) -> Self {
        let name = if dim == 1 { "z".to_string() } else { format!("z{}", i + 1) };
        Func::closure(dim, name, move |z| Ok(z.coord(i)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn eval(&self, z: &Point) -> Result<C64> {
        self.0.eval(z)
    }

    pub fn tail_bound(&self) -> f64 {
        self.0.tail_bound()
    }

    pub fn name(&self) -> String {
        self.0.name()
    }

    pub fn mul(&self, other: &Func) -> Func {
        let (f, g) = (self.clone(), other.clone());
        Func::derived(
            self.dim(),
            format!("({})·({})", f.name(), g.name()),
            self.tail_bound() + other.tail_bound(),
            move |z| Ok(f.eval(z)? * g.eval(z)?),
        )
    }

    pub fn add(&self, other: &Func) -> Func {
        let (f, g) = (self.clone(), other.clone());
        Func::derived(
            self.dim(),
            format!("{} + {}", f.name(), g.name()),
            self.tail_bound() + other.tail_bound(),
            move |z| Ok(f.eval(z)? + g.eval(z)?),
        )
    }

    pub fn scale(&self, c: C64) -> Func {
        let f = self.clone();
        Func::derived(
            self.dim(),
            format!("{}·({})", c, f.name()),
            self.tail_bound() * c.norm(),
            move |z| Ok(c * f.eval(z)?),
        )
    }

    pub fn shift(&self, c: C64) -> Func {
        let f = self.clone();
        Func::derived(self.dim(), format!("{} + {c}", f.name()), self.tail_bound(), move |z| {
            Ok(f.eval(z)? + c)
        })
    }

    /// `self ∘ h`.
    pub fn compose(&self, h: &Map) -> Func {
        let (f, h) = (self.clone(), h.clone());
        Func::derived(
            h.source_dim(),
            format!("{} ∘ {}", f.name(), h.name()),
            self.tail_bound(),
            move |z| f.eval(&h.eval(z)?),
        )
    }
}

impl fmt::Debug for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Func({})", self.name())
    }
}

struct MapClosure {
    source: usize,
    target: usize,
    name: String,
    f: Box<VectorFn>,
}

impl HoloMap for MapClosure {
    fn source_dim(&self) -> usize {
        self.source
    }
    fn target_dim(&self) -> usize {
        self.target
    }
    fn eval(&self, z: &Point) -> Result<Point> {
        (self.f)(z)
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

impl HoloMap for Automorphism {
    fn source_dim(&self) -> usize {
        self.domain().dim()
    }
    fn target_dim(&self) -> usize {
        self.domain().dim()
    }
    fn eval(&self, z: &Point) -> Result<Point> {
        Ok(self.map(z))
    }
    fn name(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| "automorphism".into())
    }
}

impl Map {
    pub fn new(m: impl HoloMap + 'static) -> Self {
        Map(Arc::new(m))
    }

    pub fn closure(
        source: usize,
        target: usize,
        name: impl Into<String>,
        f: impl Fn(&Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        Map::new(MapClosure { source, target, name: name.into(), f: Box::new(f) })
    }

    pub fn planar(name: impl Into<String>, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        Map::closure(1, 1, name, move |z| match z {
            Point::C1(w) => Ok(Point::one(f(*w))),
            _ => Err(Error::Domain("expected a point of C".into())),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Map::closure(dim, dim, "id", |z| Ok(*z))
    }

    /// Map whose `i`-th coordinate is `components[i]`.
    pub fn from_components(components: Vec<Func>) -> Result<Self> {
        let source = components.first().map(Func::dim).unwrap_or(0);
        if components.is_empty() || components.len() > 2 || components.iter().any(|f| f.dim() != source) {
            return Err(Error::Usage("components must be 1 or 2 functions of one dimension".into()));
        }
        let name = format!(
            "({})",
            components.iter().map(Func::name).collect::<Vec<_>>().join(", ")
        );
        let target = components.len();
        Ok(Map::closure(source, target, name, move |z| {
            let vals: Result<Vec<C64>> = components.iter().map(|f| f.eval(z)).collect();
            Point::from_slice(&vals?)
        }))
    }

    pub fn source_dim(&self) -> usize {
        self.0.source_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.0.target_dim()
    }

    pub fn eval(&self, z: &Point) -> Result<Point> {
        self.0.eval(z)
    }

    pub fn name(&self) -> String {
        self.0.name()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Map) -> Map {
        let (f, g) = (self.clone(), other.clone());
        Map::closure(
            other.source_dim(),
            self.target_dim(),
            format!("{} ∘ {}", f.name(), g.name()),
            move |z| f.eval(&g.eval(z)?),
        )
    }
}

impl fmt::Debug for Map {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Map({})", self.name())
    }
}

impl From<Automorphism> for Map {
    fn from(a: Automorphism) -> Self {
        Map::new(a)
    }
}

impl From<TruncatedLaurent> for Func {
    fn from(s: TruncatedLaurent) -> Self {
        Func::new(s)
    }
}

impl From<TruncatedTaylor2> for Func {
    fn from(s: TruncatedTaylor2) -> Self {
        Func::new(s)
    }
}
