//! Characters, composition homomorphisms, recovery of the underlying map and
//! the annulus automorphism classifier.

mod annulus;
mod lipschitz_bound;

pub use annulus::{annulus_auto_classify, AnnulusVerdict, PROBE_ORDER};
pub use lipschitz_bound::{lipschitz_hom_bound, LipschitzBoundReport, LipschitzBoundRow};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domains::ModelDomain;
use crate::error::{Error, Result};
use crate::func::{Func, Map};
use crate::point::{c64, Point, C64};

pub const DEFAULT_TOL: f64 = 1e-8;

type ActionFn = dyn Fn(&Func) -> Result<Func> + Send + Sync;
type CharacterFn = dyn Fn(&Func) -> Result<C64> + Send + Sync;

/// Algebra homomorphism oracle `O(source) → O(target)`.
#[derive(Clone)]
pub struct HomAction {
    pub source: ModelDomain,
    pub target: ModelDomain,
    action: Arc<ActionFn>,
}

impl HomAction {
    pub fn new(
        source: ModelDomain,
        target: ModelDomain,
        action: impl Fn(&Func) -> Result<Func> + Send + Sync + 'static,
    ) -> Self {
        HomAction { source, target, action: Arc::new(action) }
    }

    /// `f ↦ f ∘ h` for `h: target → source`.
    pub fn composition(h: Map, source: ModelDomain, target: ModelDomain) -> Self {
        HomAction::new(source, target, move |f| Ok(f.compose(&h)))
    }

    pub fn apply(&self, f: &Func) -> Result<Func> {
        (self.action)(f)
    }
}

/// Scalar-valued oracle on `O(domain)`.
#[derive(Clone)]
pub struct Character {
    pub domain: ModelDomain,
    chi: Arc<CharacterFn>,
}

impl Character {
    pub fn new(domain: ModelDomain, chi: impl Fn(&Func) -> Result<C64> + Send + Sync + 'static) -> Self {
        Character { domain, chi: Arc::new(chi) }
    }

    /// `e_c: f ↦ f(c)`.
    pub fn point_evaluation(domain: ModelDomain, c: Point) -> Self {
        Character::new(domain, move |f| f.eval(&c))
    }

    pub fn apply(&self, f: &Func) -> Result<C64> {
        (self.chi)(f)
    }
}

/// Either kind of multiplicative oracle.
#[derive(Clone, Copy)]
pub enum Homomorphism<'a> {
    Action(&'a HomAction),
    Character(&'a Character),
}

impl<'a> From<&'a HomAction> for Homomorphism<'a> {
    fn from(h: &'a HomAction) -> Self {
        Homomorphism::Action(h)
    }
}

impl<'a> From<&'a Character> for Homomorphism<'a> {
    fn from(c: &'a Character) -> Self {
        Homomorphism::Character(c)
    }
}

/// Standard probes: `1, z, z², z − c` for three interior `c`, and `1/(z − c)`
/// for one `c` off the domain; in two variables the coordinates and all
/// monomials of degree at most two.
pub fn standard_test_set(domain: ModelDomain) -> Vec<Func> {
    if domain.dim() == 2 {
        let (z1, z2) = (Func::coordinate(0, 2), Func::coordinate(1, 2));
        return vec![
            Func::one(2),
            z1.clone(),
            z2.clone(),
            z1.mul(&z1),
            z1.mul(&z2),
            z2.mul(&z2),
        ];
    }
    let interior: [C64; 3] = match domain {
        ModelDomain::Annulus { r } => {
            let m = (1.0 + r) / 2.0;
            [c64(m, 0.0), c64(0.0, -m), c64(-0.6 * m, 0.6 * m)]
        }
        _ => [c64(0.3, 0.1), c64(0.0, -0.5), c64(-0.2, 0.4)],
    };
    let pole = c64(1.5, 0.5);
    let z = Func::coordinate(0, 1);
    let mut set = vec![Func::one(1), z.clone(), z.mul(&z)];
    for c in interior {
        set.push(Func::planar(format!("z - ({c})"), move |w| w - c));
    }
    set.push(Func::planar(format!("1/(z - ({pole}))"), move |w| 1.0 / (w - pole)));
    set
}

/// Coordinate functions of a domain (`id` in one variable).
pub fn coordinates(domain: ModelDomain) -> Vec<Func> {
    (0..domain.dim()).map(|i| Func::coordinate(i, domain.dim())).collect()
}

/// Tolerance raised by the truncation bounds of the inputs.
pub fn effective_tol(tol: f64, funcs: &[Func]) -> f64 {
    tol + funcs.iter().map(Func::tail_bound).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct HomReport {
    pub verdict: bool,
    pub residual_max: f64,
    pub unit_residual: f64,
    pub multiplicative_residual: f64,
    pub grid_size: usize,
    pub tests: usize,
    pub tol: f64,
}

/// Checks `φ(1) = 1` and `φ(fg) = φ(f)φ(g)` over the test set (and the grid,
/// for homomorphisms between function algebras).
pub fn is_unital_hom(phi: Homomorphism<'_>, test_set: &[Func], grid: &[Point], tol: f64) -> Result<HomReport> {
    if test_set.is_empty() {
        return Err(Error::Usage("test set must be nonempty".into()));
    }
    let one = match phi {
        Homomorphism::Action(a) => Func::one(a.source.dim()),
        Homomorphism::Character(c) => Func::one(c.domain.dim()),
    };
    let mut unit: f64 = 0.0;
    let mut mult: f64 = 0.0;
    match phi {
        Homomorphism::Action(a) => {
            if grid.is_empty() {
                return Err(Error::Usage("grid must be nonempty".into()));
            }
            if let Some(p) = grid.iter().find(|p| !a.target.contains(p)) {
                return Err(Error::Domain(format!("grid point {p} is not in {}", a.target.name())));
            }
            let images: Vec<Func> = test_set.iter().map(|f| a.apply(f)).collect::<Result<_>>()?;
            let image_one = a.apply(&one)?;
            let products: Vec<Vec<Func>> = test_set
                .iter()
                .enumerate()
                .map(|(i, f)| test_set[i..].iter().map(|g| a.apply(&f.mul(g))).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?;
            for p in grid {
                unit = unit.max((image_one.eval(p)? - 1.0).norm());
                let vals: Vec<C64> = images.iter().map(|g| g.eval(p)).collect::<Result<_>>()?;
                for (i, row) in products.iter().enumerate() {
                    for (k, fg) in row.iter().enumerate() {
                        mult = mult.max((fg.eval(p)? - vals[i] * vals[i + k]).norm());
                    }
                }
            }
        }
        Homomorphism::Character(c) => {
            unit = (c.apply(&one)? - 1.0).norm();
            let vals: Vec<C64> = test_set.iter().map(|f| c.apply(f)).collect::<Result<_>>()?;
            for (i, f) in test_set.iter().enumerate() {
                for (k, g) in test_set[i..].iter().enumerate() {
                    mult = mult.max((c.apply(&f.mul(g))? - vals[i] * vals[i + k]).norm());
                }
            }
        }
    }
    let residual = unit.max(mult);
    Ok(HomReport {
        verdict: residual <= tol,
        residual_max: residual,
        unit_residual: unit,
        multiplicative_residual: mult,
        grid_size: if matches!(phi, Homomorphism::Action(_)) { grid.len() } else { 0 },
        tests: test_set.len(),
        tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterReport {
    pub c: Point,
    pub residual_max: f64,
    pub tests: usize,
    pub tol: f64,
    pub verdict: String,
}

/// Locates the point `c = χ(id)` of a character and verifies `χ = e_c` on the test set.
///
/// In two variables `c_i = χ(z_i)`, and the test set is augmented with the
/// probe `(z1 − c1) + i(z2 − c2)`.
pub fn character_locate(chi: &Character, domain: ModelDomain, test_set: &[Func], tol: f64) -> Result<CharacterReport> {
    let coords: Vec<C64> = coordinates(domain).iter().map(|f| chi.apply(f)).collect::<Result<_>>()?;
    let c = Point::from_slice(&coords)?;
    if !domain.contains(&c) {
        return Err(Error::UnitObstruction { c });
    }
    let mut probes = test_set.to_vec();
    if domain.dim() == 2 {
        let (c1, c2) = (coords[0], coords[1]);
        probes.push(Func::closure(2, "(z1 - c1) + i(z2 - c2)", move |z| {
            Ok((z.coord(0) - c1) + c64(0.0, 1.0) * (z.coord(1) - c2))
        }));
    }
    let mut residual: f64 = 0.0;
    for f in &probes {
        residual = residual.max((chi.apply(f)? - f.eval(&c)?).norm());
    }
    if residual > tol {
        return Err(Error::NotPointEvaluation { c, residual, tol });
    }
    Ok(CharacterReport { c, residual_max: residual, tests: probes.len(), tol, verdict: "point_evaluation".into() })
}

/// Options for [`bers_recover`].
#[derive(Clone)]
pub struct RecoveryOptions {
    pub tol: f64,
    /// Candidate for `h⁻¹`; when given, bijectivity is certified on grids.
    pub candidate_inverse: Option<Map>,
    /// Points of the source domain used to check `h ∘ h⁻¹ = id`.
    pub inverse_grid_size: usize,
    pub seed: u64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { tol: DEFAULT_TOL, candidate_inverse: None, inverse_grid_size: 200, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryReport {
    /// Values of `h` on the grid.
    pub h_values: Vec<Point>,
    pub residual_max: f64,
    pub grid_size: usize,
    pub tol: f64,
    pub verdict: String,
    pub injective_on_grid: bool,
    /// Grid index pairs with colliding images.
    pub collisions: Vec<(usize, usize)>,
    pub bijectivity_certified: Option<bool>,
    pub inverse_residual: Option<f64>,
    #[serde(skip)]
    pub map: Option<Map>,
}

/// Relative distance below which two grid images count as a collision.
const COLLISION_TOL: f64 = 1e-9;

fn grid_collisions(grid: &[Point], images: &[Point]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..grid.len() {
        for j in (i + 1)..grid.len() {
            let sep = grid[i].dist(&grid[j]);
            if sep > 1e-6 && images[i].dist(&images[j]) <= COLLISION_TOL * (1.0 + sep) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Recovers `h = φ(id)` (componentwise `h_i = φ(z_i)`) and verifies `φ(f) = f ∘ h`.
pub fn bers_recover(phi: &HomAction, grid: &[Point], test_set: &[Func], opts: &RecoveryOptions) -> Result<RecoveryReport> {
    if grid.is_empty() {
        return Err(Error::Usage("grid must be nonempty".into()));
    }
    if let Some(p) = grid.iter().find(|p| !phi.target.contains(p)) {
        return Err(Error::Domain(format!("grid point {p} is not in {}", phi.target.name())));
    }
    let components: Vec<Func> = coordinates(phi.source).iter().map(|f| phi.apply(f)).collect::<Result<_>>()?;
    let h = Map::from_components(components)?;
    let h_values: Vec<Point> = grid.iter().map(|p| h.eval(p)).collect::<Result<_>>()?;
    if let Some((p, v)) = grid.iter().zip(&h_values).find(|(_, v)| !phi.source.contains(v)) {
        return Err(Error::InvalidHomomorphism(format!(
            "φ(id) maps {p} to {v}, outside {}",
            phi.source.name()
        )));
    }
    let tol = effective_tol(opts.tol, test_set);
    let mut residual: f64 = 0.0;
    for f in test_set {
        let image = phi.apply(f)?;
        for (p, hp) in grid.iter().zip(&h_values) {
            residual = residual.max((image.eval(p)? - f.eval(hp)?).norm());
        }
    }
    if residual > tol {
        return Err(Error::RecoveryFailure { residual, tol });
    }
    let collisions = grid_collisions(grid, &h_values);
    let (certified, inv_res) = match &opts.candidate_inverse {
        None => (None, None),
        Some(g) => {
            let mut r: f64 = 0.0;
            for (p, hp) in grid.iter().zip(&h_values) {
                r = r.max(g.eval(hp)?.dist(p));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for _ in 0..opts.inverse_grid_size {
                let q = phi.source.sample_interior(&mut rng);
                let gq = g.eval(&q)?;
                if !phi.target.contains(&gq) {
                    r = f64::INFINITY;
                    break;
                }
                r = r.max(h.eval(&gq)?.dist(&q));
            }
            (Some(r <= tol), Some(r))
        }
    };
    Ok(RecoveryReport {
        h_values,
        residual_max: residual,
        grid_size: grid.len(),
        tol,
        verdict: "recovered".into(),
        injective_on_grid: collisions.is_empty(),
        collisions,
        bijectivity_certified: certified,
        inverse_residual: inv_res,
        map: Some(h),
    })
}

/// Seeded interior grid of a domain.
pub fn interior_grid(domain: ModelDomain, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| domain.sample_interior(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Automorphism;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn compose_action(h: Automorphism) -> HomAction {
        HomAction::composition(Map::from(h), h.domain(), h.domain())
    }

    #[test]
    fn composition_is_unital_hom() {
        let d = ModelDomain::Disk;
        let phi = compose_action(Automorphism::disk(c64(0.4, 0.2), 1.0).unwrap());
        let r = is_unital_hom((&phi).into(), &standard_test_set(d), &interior_grid(d, 50, 1), DEFAULT_TOL).unwrap();
        assert!(r.verdict, "{}", r.residual_max);
    }

    #[test]
    fn doubling_fails_unit_test() {
        let d = ModelDomain::Disk;
        let phi = HomAction::new(d, d, |f| Ok(f.scale(c64(2.0, 0.0))));
        let r = is_unital_hom((&phi).into(), &standard_test_set(d), &interior_grid(d, 20, 1), DEFAULT_TOL).unwrap();
        assert!(!r.verdict);
        assert!((r.unit_residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shifted_composition_fails_at_one_hundredth_scale() {
        let d = ModelDomain::Disk;
        let h = Map::from(Automorphism::disk(c64(0.3, 0.0), 0.0).unwrap());
        let phi = HomAction::new(d, d, move |f| Ok(f.compose(&h).shift(c64(0.01, 0.0))));
        let r = is_unital_hom((&phi).into(), &standard_test_set(d), &interior_grid(d, 20, 1), DEFAULT_TOL).unwrap();
        assert!(!r.verdict);
        assert!(r.residual_max >= 0.01 - 1e-12 && r.residual_max < 0.2, "{}", r.residual_max);
    }

    #[test]
    fn point_evaluation_is_located() {
        let d = ModelDomain::Disk;
        let c = Point::one(c64(0.3, 0.1));
        let chi = Character::point_evaluation(d, c);
        let r = character_locate(&chi, d, &standard_test_set(d), 1e-12).unwrap();
        assert_eq!(r.c, c);
        assert!(r.residual_max <= 1e-12);
    }

    #[test]
    fn pulled_back_evaluation_locates_image_point() {
        let d = ModelDomain::Disk;
        let h = Automorphism::disk(c64(-0.2, 0.5), 0.3).unwrap();
        let a = Point::one(c64(0.1, -0.4));
        let chi = Character::new(d, move |f| f.eval(&h.map(&a)));
        let r = character_locate(&chi, d, &standard_test_set(d), 1e-12).unwrap();
        assert!(r.c.dist(&h.map(&a)) < 1e-15);
    }

    #[test]
    fn exterior_evaluation_is_unit_obstruction() {
        let d = ModelDomain::Disk;
        let chi = Character::point_evaluation(d, Point::one(c64(1.5, 0.0)));
        assert!(matches!(character_locate(&chi, d, &standard_test_set(d), 1e-10), Err(Error::UnitObstruction { .. })));
    }

    #[test]
    fn non_evaluation_character_is_flagged() {
        let d = ModelDomain::Disk;
        // unital and agrees with e_0 on id, but also picks up the z² coefficient
        let chi = Character::new(d, |f| {
            let n = 64;
            let mut acc = c64(0.0, 0.0);
            for k in 0..n {
                let w = C64::from_polar(0.5, 2.0 * PI * k as f64 / n as f64);
                acc += f.eval(&Point::one(w))? * (1.0 + 0.01 * w.conj() * w.conj());
            }
            Ok(acc / n as f64)
        });
        let r = character_locate(&chi, d, &standard_test_set(d), 1e-10);
        assert!(matches!(r, Err(Error::NotPointEvaluation { .. })), "{:?}", r.map(|r| r.residual_max));
    }

    #[test]
    fn two_variable_evaluation_is_located() {
        let d = ModelDomain::Ball;
        let c = Point::two(c64(0.2, -0.1), c64(0.3, 0.4));
        let r = character_locate(&Character::point_evaluation(d, c), d, &standard_test_set(d), 1e-12).unwrap();
        assert_eq!(r.c, c);
    }

    #[test]
    fn planted_mobius_is_recovered() {
        let d = ModelDomain::Disk;
        let h0 = Automorphism::disk(c64(0.4, 0.0), PI / 3.0).unwrap();
        let grid = interior_grid(d, 200, 3);
        let opts = RecoveryOptions { candidate_inverse: Some(Map::from(h0.inverse())), ..Default::default() };
        let r = bers_recover(&compose_action(h0), &grid, &standard_test_set(d), &opts).unwrap();
        for (p, v) in grid.iter().zip(&r.h_values) {
            assert!(v.dist(&h0.map(p)) < 1e-9);
        }
        assert!(r.injective_on_grid);
        assert_eq!(r.bijectivity_certified, Some(true));
    }

    #[test]
    fn squaring_is_recovered_but_not_injective() {
        let d = ModelDomain::Disk;
        let sq = Map::planar("z^2", |z| z * z);
        let phi = HomAction::composition(sq, d, d);
        let mut grid = interior_grid(d, 50, 3);
        let mirrored: Vec<Point> = grid.iter().map(|p| *p * -1.0).collect();
        grid.extend(mirrored);
        let r = bers_recover(&phi, &grid, &standard_test_set(d), &RecoveryOptions::default()).unwrap();
        assert!(r.residual_max < 1e-12);
        assert!(!r.injective_on_grid);
        assert!(r.collisions.contains(&(0, 50)));
    }

    #[test]
    fn flip_is_certified_by_itself() {
        let d = ModelDomain::annulus(0.5).unwrap();
        let flip = Automorphism::annulus_flip(0.5, 0.0).unwrap();
        let opts = RecoveryOptions { candidate_inverse: Some(Map::from(flip)), ..Default::default() };
        let r = bers_recover(&compose_action(flip), &interior_grid(d, 100, 2), &standard_test_set(d), &opts).unwrap();
        assert_eq!(r.bijectivity_certified, Some(true));
    }

    #[test]
    fn escaping_map_is_invalid() {
        let d = ModelDomain::Disk;
        let phi = HomAction::composition(Map::planar("2z", |z| 2.0 * z), d, d);
        let grid = vec![Point::one(c64(0.9, 0.0))];
        assert!(matches!(
            bers_recover(&phi, &grid, &standard_test_set(d), &RecoveryOptions::default()),
            Err(Error::InvalidHomomorphism(_))
        ));
    }

    #[test]
    fn non_composition_action_fails_recovery() {
        let d = ModelDomain::Disk;
        let phi = HomAction::new(d, d, |f| Ok(f.add(&f.scale(c64(0.001, 0.0)))));
        let r = bers_recover(&phi, &interior_grid(d, 20, 5), &standard_test_set(d), &RecoveryOptions::default());
        assert!(matches!(r, Err(Error::RecoveryFailure { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn functoriality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for d in [ModelDomain::Disk, ModelDomain::Ball, ModelDomain::Bidisc] {
                let h1 = Automorphism::random(d, &mut rng, 0.7).unwrap();
                let h2 = Automorphism::random(d, &mut rng, 0.7).unwrap();
                let m = Map::from(h1).compose(&Map::from(h2));
                let phi = HomAction::composition(m, d, d);
                let grid = interior_grid(d, 40, seed);
                let r = bers_recover(&phi, &grid, &standard_test_set(d), &RecoveryOptions::default()).unwrap();
                let h12 = h1.compose(&h2).unwrap();
                for (p, v) in grid.iter().zip(&r.h_values) {
                    prop_assert!(v.dist(&h12.map(p)) < 1e-9);
                }
            }
        }

        #[test]
        fn characters_are_evaluations_or_obstructions(re in -2.0f64..2.0, im in -2.0f64..2.0) {
            for d in [ModelDomain::Disk, ModelDomain::annulus(0.4).unwrap()] {
                let c = Point::one(c64(re, im));
                let chi = Character::point_evaluation(d, c);
                match character_locate(&chi, d, &standard_test_set(d), 1e-10) {
                    Ok(r) => prop_assert!(d.contains(&r.c)),
                    Err(Error::UnitObstruction { .. }) => prop_assert!(!d.contains(&c)),
                    Err(e) => prop_assert!(false, "third outcome: {e}"),
                }
            }
        }
    }
}
