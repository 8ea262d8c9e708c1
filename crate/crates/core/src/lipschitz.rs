//! Sampled Lipschitz norms and compactness classification of families `{f ∘ φ_j}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domains::{Automorphism, ModelDomain};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::func::{Func, Map};
use crate::point::{c64, Point, C64};

pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e3;
pub const DEFAULT_PAIRS: usize = 10_000;
/// Hill-climb iterations used by the family classifier.
pub const DEFAULT_REFINE_STEPS: usize = 400;
/// Radius at which the nested-cluster search accepts a Cauchy subsequence.
pub const ASCOLI_TOL: f64 = 1e-6;
/// Nested-cluster levels that count as a convergent subsequence.
const ASCOLI_MIN_LEVELS: usize = 3;
/// Grid points per exhaustion level used for difference quotients.
const LEVEL_GRID_CAP: usize = 200;

/// Default pair separation floor; closer pairs lose digits to cancellation.
pub const MIN_SEPARATION: f64 = 1e-8;

/// Seeded sequential sampler of point pairs.
///
/// Pairs come from one ChaCha stream, so the first `n` pairs of a budget
/// `m ≥ n` are exactly the pairs of budget `n`. A pair is uniform (both points
/// uniform in the domain), local (second point at a random small scale around
/// the first) or boundary-layer (first point at a random depth below the
/// boundary, second point at comparable distance).
#[derive(Clone, Debug, Serialize)]
pub struct PairSampler {
    pub domain: ModelDomain,
    pub pairs: usize,
    pub seed: u64,
    pub min_separation: f64,
    /// Hill-climb iterations applied to the best pair; zero keeps the plain
    /// sampled supremum.
    pub refine_steps: usize,
    /// Boundary point around which boundary-layer pairs concentrate.
    pub focus: Option<Point>,
}

impl PairSampler {
    pub fn new(domain: ModelDomain, pairs: usize, seed: u64) -> Self {
        PairSampler { domain, pairs, seed, min_separation: MIN_SEPARATION, refine_steps: 0, focus: None }
    }

    pub fn with_refinement(mut self, steps: usize) -> Self {
        self.refine_steps = steps;
        self
    }

    pub fn with_focus(mut self, x: Point) -> Self {
        self.focus = Some(x);
        self
    }

    pub fn with_min_separation(mut self, sep: f64) -> Self {
        self.min_separation = sep;
        self
    }

    fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Point {
        loop {
            let mut u = || c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let p = if dim == 1 { Point::one(u()) } else { Point::two(u(), u()) };
            let n = p.norm();
            if n > 1e-3 && n <= 1.0 {
                return p * (1.0 / n);
            }
        }
    }

    fn boundary_point(&self, rng: &mut ChaCha8Rng, depth: f64) -> Point {
        let d = self.domain;
        if let Some(x) = self.focus {
            for _ in 0..100 {
                let spread = depth.sqrt() * rng.gen::<f64>();
                let base = d.project_to_boundary(&(x + Self::random_direction(rng, d.dim()) * spread));
                if let Ok(n) = d.outward_normal(&base) {
                    let p = base - n * depth;
                    if d.contains(&p) {
                        return p;
                    }
                }
            }
        }
        d.sample_near_boundary(rng, depth)
    }

    /// The deterministic pair list for this budget.
    pub fn sample(&self) -> Vec<(Point, Point)> {
        let d = self.domain;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.pairs);
        while out.len() < self.pairs {
            let kind: f64 = rng.gen();
            let (x, y) = if kind < 0.4 {
                (d.sample_interior(&mut rng), d.sample_interior(&mut rng))
            } else if kind < 0.7 {
                let x = d.sample_interior(&mut rng);
                let scale = 10f64.powf(-rng.gen_range(0.3..5.0)) * d.boundary_distance(&x);
                let y = x + Self::random_direction(&mut rng, d.dim()) * scale;
                (x, y)
            } else {
                let depth = 10f64.powf(-rng.gen_range(1.0..6.0));
                let x = self.boundary_point(&mut rng, depth);
                let y = x + Self::random_direction(&mut rng, d.dim()) * (depth * rng.gen_range(0.01..0.9));
                (x, y)
            };
            if d.contains(&x) && d.contains(&y) && x.dist(&y) >= self.min_separation {
                out.push((x, y));
            }
        }
        out
    }
}

/// Sampled lower bound on a Lipschitz norm with the pair attaining it.
#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub pair: Option<(Point, Point)>,
    pub budget: usize,
    pub refine_steps: usize,
}

fn quotient(eval: &dyn Fn(&Point) -> Result<Point>, x: &Point, y: &Point) -> Result<f64> {
    let (fx, fy) = (eval(x)?, eval(y)?);
    let q = fx.dist(&fy) / x.dist(y);
    if !q.is_finite() {
        return Err(Error::Domain(format!("non-finite difference quotient at {x}, {y}")));
    }
    Ok(q)
}

/// Greedy adaptive search for a steeper pair, started from `(x, y)`.
///
/// The second point sits at a small offset along a searched direction, so each
/// candidate is itself a genuine sampled pair and the result stays a lower bound.
fn refine(
    eval: &dyn Fn(&Point) -> Result<Point>,
    sampler: &PairSampler,
    start: (Point, Point),
) -> Result<(f64, (Point, Point))> {
    let d = sampler.domain;
    let dim = d.dim();
    let offset = |x: &Point| (1e-4 * d.boundary_distance(x)).max(sampler.min_separation);
    let probe = |x: &Point, u: &Point| -> Result<Option<(f64, Point)>> {
        let y = *x + *u * offset(x);
        if !d.contains(x) || !d.contains(&y) || x.dist(&y) < sampler.min_separation {
            return Ok(None);
        }
        Ok(Some((quotient(eval, x, &y)?, y)))
    };
    let (mut x, y0) = start;
    let mut u = (y0 - x).normalized();
    let (mut best, mut y) = match probe(&x, &u)? {
        Some((q, y)) => (q, y),
        None => (quotient(eval, &x, &y0)?, y0),
    };
    let mut step = 0.25 * d.boundary_distance(&x);
    let mut moves = Vec::new();
    for k in 0..dim {
        for s in [c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0)] {
            let mut e = Point::zero(dim);
            e = e + Point::basis(dim, k).scale(s);
            moves.push(e);
        }
    }
    for _ in 0..sampler.refine_steps {
        let mut improved = false;
        for m in &moves {
            let cand = x + *m * step;
            if let Some((q, yc)) = probe(&cand, &u)? {
                if q > best {
                    best = q;
                    x = cand;
                    y = yc;
                    improved = true;
                }
            }
            if dim == 2 {
                let uc = (u + *m * 0.5).normalized();
                if let Some((q, yc)) = probe(&x, &uc)? {
                    if q > best {
                        best = q;
                        u = uc;
                        y = yc;
                        improved = true;
                    }
                }
            }
        }
        step *= if improved { 1.5 } else { 0.5 };
        if step < 1e-16 {
            break;
        }
    }
    Ok((best, (x, y)))
}

fn sampled_norm(eval: &dyn Fn(&Point) -> Result<Point>, sampler: &PairSampler, extra: &[(Point, Point)]) -> Result<NormEstimate> {
    let pairs = sampler.sample();
    let mut best = 0.0;
    let mut arg = None;
    for (x, y) in pairs.iter().chain(extra) {
        let q = quotient(eval, x, y)?;
        if q > best || arg.is_none() {
            best = q;
            arg = Some((*x, *y));
        }
    }
    if sampler.refine_steps > 0 {
        if let Some(start) = arg {
            if best > 0.0 {
                let (q, p) = refine(eval, sampler, start)?;
                if q > best {
                    best = q;
                    arg = Some(p);
                }
            }
        }
    }
    Ok(NormEstimate { value: best, pair: arg, budget: pairs.len() + extra.len(), refine_steps: sampler.refine_steps })
}

/// `max |f(x) − f(y)| / |x − y|` over the sampler's pairs.
pub fn lipschitz_norm(f: &Func, sampler: &PairSampler) -> Result<NormEstimate> {
    lipschitz_norm_with_pairs(f, sampler, &[])
}

/// As [`lipschitz_norm`], with additional caller-supplied pairs.
pub fn lipschitz_norm_with_pairs(f: &Func, sampler: &PairSampler, extra: &[(Point, Point)]) -> Result<NormEstimate> {
    let eval = |z: &Point| f.eval(z).map(Point::one);
    sampled_norm(&eval, sampler, extra)
}

/// Sampled Lipschitz constant of a map, in the Euclidean norm of the target.
pub fn map_lipschitz_norm(h: &Map, sampler: &PairSampler) -> Result<NormEstimate> {
    let eval = |z: &Point| h.eval(z);
    sampled_norm(&eval, sampler, &[])
}

/// Nested grids `K_1 ⊂ K_2 ⊂ …` with clearances `δ_1 > δ_2 > …`.
///
/// A single seeded candidate cloud is filtered by clearance, so nesting is exact.
#[derive(Clone, Debug, Serialize)]
pub struct CompactExhaustion {
    pub domain: ModelDomain,
    pub deltas: Vec<f64>,
    pub levels: Vec<Vec<Point>>,
}

impl CompactExhaustion {
    pub fn new(domain: ModelDomain, deltas: &[f64], candidates: usize, seed: u64) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::Usage("an exhaustion needs at least one clearance".into()));
        }
        if deltas.iter().any(|&d| !(d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Usage(format!("clearances must be positive and strictly decreasing: {deltas:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud: Vec<Point> = (0..candidates).map(|_| domain.sample_interior(&mut rng)).collect();
        let levels: Vec<Vec<Point>> = deltas
            .iter()
            .map(|&d| cloud.iter().copied().filter(|p| domain.boundary_distance(p) >= d).collect())
            .collect();
        if let Some(k) = levels.iter().position(Vec::is_empty) {
            return Err(Error::Usage(format!("exhaustion level {} (clearance {}) has no points", k + 1, deltas[k])));
        }
        Ok(CompactExhaustion { domain, deltas: deltas.to_vec(), levels })
    }

    /// Default exhaustion: clearances 0.5, 0.25, 0.1, 0.05 over 400 candidates.
    pub fn standard(domain: ModelDomain, seed: u64) -> Result<Self> {
        let deltas: &[f64] = match domain {
            ModelDomain::Annulus { r } => &[(1.0 - r) * 0.4, (1.0 - r) * 0.2, (1.0 - r) * 0.1, (1.0 - r) * 0.05],
            _ => &[0.5, 0.25, 0.1, 0.05],
        };
        CompactExhaustion::new(domain, deltas, 400, seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyVerdict {
    Noncompact,
    Equicontinuous,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelEvidence {
    pub delta: f64,
    pub grid_size: usize,
    /// Largest difference quotient over the family on this level.
    pub quotient_bound: f64,
    /// Difference-quotient bound of the first family member.
    pub initial_bound: f64,
    /// Levels reached by the nested-cluster subsequence search.
    pub cluster_levels: usize,
    pub cluster_radius: f64,
    pub cluster_size: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub verdict: FamilyVerdict,
    pub norms: Vec<NormEstimate>,
    pub budget: usize,
    pub factor: f64,
    pub levels: Vec<LevelEvidence>,
}

impl FamilyReport {
    /// Evidence table `j, sampled_norm, x coordinates, y coordinates`.
    pub fn to_csv(&self) -> String {
        let dim = self
            .norms
            .iter()
            .find_map(|n| n.pair.map(|(x, _)| x.dim()))
            .unwrap_or(1);
        let mut out = String::from("j,sampled_norm");
        for side in ["x", "y"] {
            for i in 1..=dim {
                out.push_str(&format!(",{side}_re{i},{side}_im{i}"));
            }
        }
        out.push('\n');
        for (j, n) in self.norms.iter().enumerate() {
            out.push_str(&format!("{},{}", j + 1, num(n.value)));
            if let Some((x, y)) = n.pair {
                for z in x.coords().iter().chain(y.coords()) {
                    out.push_str(&format!(",{},{}", num(z.re), num(z.im)));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Radius-halving search for nested clusters among the rows of `values`.
/// Returns `(levels, final radius, final cluster size)`.
fn nested_clusters(values: &[Vec<C64>]) -> (usize, f64, usize) {
    let sup = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let mut members: Vec<usize> = (0..values.len()).collect();
    let mut radius = members
        .iter()
        .flat_map(|&i| members.iter().map(move |&j| (i, j)))
        .map(|(i, j)| sup(&values[i], &values[j]))
        .fold(0.0, f64::max);
    let mut levels = 0;
    while radius >= ASCOLI_TOL && members.len() >= 2 {
        let next_radius = radius / 2.0;
        let best = members
            .iter()
            .map(|&c| {
                members
                    .iter()
                    .copied()
                    .filter(|&m| sup(&values[c], &values[m]) <= next_radius)
                    .collect::<Vec<_>>()
            })
            .max_by_key(Vec::len)
            .unwrap_or_default();
        if best.len() < 2 {
            break;
        }
        members = best;
        radius = next_radius;
        levels += 1;
    }
    (levels, radius, members.len())
}

/// Classifies `{f ∘ φ_j}` as noncompact, equicontinuous or inconclusive.
///
/// Noncompact: the sampled norm of the last member exceeds `blowup_factor`
/// times the first, and the norms over the last quarter are nondecreasing.
/// Equicontinuous: on every exhaustion level the family's difference quotients
/// stay within `blowup_factor` of the first member's, and a nested-cluster
/// subsequence reaches [`ASCOLI_MIN_LEVELS`] halvings or radius [`ASCOLI_TOL`].
pub fn family_classify(
    f: &Func,
    auts: &[Automorphism],
    exhaustion: &CompactExhaustion,
    sampler: &PairSampler,
    blowup_factor: f64,
) -> Result<FamilyReport> {
    if auts.is_empty() {
        return Err(Error::Usage("family needs at least one automorphism".into()));
    }
    let members: Vec<Func> = auts.iter().map(|a| f.compose(&Map::from(*a))).collect();
    let norms = members
        .iter()
        .map(|g| lipschitz_norm(g, sampler))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = norms.iter().map(|n| n.value).collect();
    let tail_start = (values.len() * 3) / 4;
    let tail_nondecreasing = values[tail_start..].windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let first = values[0];
    let last = *values.last().unwrap();
    let budget = norms.first().map_or(0, |n| n.budget);
    if values.len() >= 2 && last > blowup_factor * first && tail_nondecreasing {
        return Ok(FamilyReport { verdict: FamilyVerdict::Noncompact, norms, budget, factor: blowup_factor, levels: vec![] });
    }

    let mut levels = Vec::new();
    for (delta, grid) in exhaustion.deltas.iter().zip(&exhaustion.levels) {
        let grid = &grid[..grid.len().min(LEVEL_GRID_CAP)];
        let table: Vec<Vec<C64>> = members
            .iter()
            .map(|g| grid.iter().map(|p| g.eval(p)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let bound_of = |row: &[C64]| {
            let mut b: f64 = 0.0;
            for i in 0..grid.len() {
                for j in (i + 1)..grid.len() {
                    let sep = grid[i].dist(&grid[j]);
                    if sep > 0.0 {
                        b = b.max((row[i] - row[j]).norm() / sep);
                    }
                }
            }
            b
        };
        let per_member: Vec<f64> = table.iter().map(|row| bound_of(row)).collect();
        let initial = per_member[0];
        let bound = per_member.iter().copied().fold(0.0, f64::max);
        let uniform = bound.is_finite() && bound <= blowup_factor * initial.max(f64::MIN_POSITIVE);
        let (cl, radius, size) = nested_clusters(&table);
        let converges = cl >= ASCOLI_MIN_LEVELS || radius < ASCOLI_TOL;
        levels.push(LevelEvidence {
            delta: *delta,
            grid_size: grid.len(),
            quotient_bound: bound,
            initial_bound: initial,
            cluster_levels: cl,
            cluster_radius: radius,
            cluster_size: size,
            passed: uniform && converges,
        });
    }
    let verdict = if levels.iter().all(|l| l.passed) {
        FamilyVerdict::Equicontinuous
    } else {
        FamilyVerdict::Inconclusive
    };
    Ok(FamilyReport { verdict, norms, budget, factor: blowup_factor, levels })
}
