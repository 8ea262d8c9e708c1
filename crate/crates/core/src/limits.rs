//! Normal limits of automorphism sequences: the automorphism-or-constant
//! dichotomy as a runtime classification, and the composed sequence
//! `f ∘ φ_{j+1} ∘ φ_j^{-1}` check.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{Automorphism, DiskMobius, ModelDomain};
use crate::error::{Error, Result};
use crate::func::Map;
use crate::lipschitz::CompactExhaustion;
use crate::point::{c64, Mat2, Point, C64};

/// Shortest accepted sequence.
pub const MIN_TERMS: usize = 20;
/// Fraction of the sequence averaged for limit estimates.
pub const TAIL_FRACTION: f64 = 0.25;
/// Tail deviations must shrink by this factor relative to the preceding window.
pub const CONTRACTION: f64 = 0.75;
/// Points in the injectivity grid.
pub const INJECTIVITY_GRID: usize = 1000;
/// Limit values on the innermost level closer to the boundary than this
/// multiple of the tail spread count as drifting toward it.
pub const DRIFT_FACTOR: f64 = 10.0;

pub const PROP52_NOTE: &str = "subsequential limits of h_k are measured and reported; they are not asserted to equal \
    the identity. For rotation sequences h_k = f o rot(1/(k+1)) o rot(-1/k) tends to f itself, so the identity \
    is reached only when f is the identity";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitVerdict {
    Automorphism,
    Constant,
    NotConverged,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LimitDescriptor {
    Automorphism(Automorphism),
    Constant(Point),
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelDeviation {
    pub clearance: f64,
    pub points: usize,
    /// `sup |v_j − v_last|` over the tail window.
    pub tail_spread: f64,
    /// Same over the window preceding the tail.
    pub previous_spread: f64,
    /// `sup |L(p) − L(q)|` of the estimated limit on the level.
    pub oscillation: f64,
    pub fit_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalLimitReport {
    pub verdict: LimitVerdict,
    pub limit: LimitDescriptor,
    pub levels: Vec<LevelDeviation>,
    pub reason: String,
    pub tol: f64,
    pub terms: usize,
    pub tail_terms: usize,
    pub injective_on_grid: Option<bool>,
    pub inverse_residual: Option<f64>,
    /// Distance of a constant limit to the boundary.
    pub constant_boundary_distance: Option<f64>,
}

/// Tail windows `[prev, start)` and `[start, n)`.
fn windows(n: usize) -> (usize, usize) {
    let tail = ((n as f64 * TAIL_FRACTION).ceil() as usize).max(2);
    (n - 2 * tail, n - tail)
}

struct LevelStats {
    tail_spread: f64,
    previous_spread: f64,
    mean: Vec<Point>,
}

/// Streams the terms `prev..n`: deviations from the last term of each window
/// and the tail mean, without storing the table.
fn level_stats(terms: usize, points: &[Point], eval: &dyn Fn(usize, &Point) -> Result<Point>) -> Result<LevelStats> {
    let (prev, start) = windows(terms);
    let row = |j: usize| points.iter().map(|p| eval(j, p)).collect::<Result<Vec<Point>>>();
    let dev = |a: &[Point], b: &[Point]| a.iter().zip(b).map(|(x, y)| x.dist(y)).fold(0.0, f64::max);
    let last = row(terms - 1)?;
    let prev_last = row(start - 1)?;
    let mut previous_spread: f64 = 0.0;
    for j in prev..start {
        previous_spread = previous_spread.max(dev(&row(j)?, &prev_last));
    }
    let mut tail_spread: f64 = 0.0;
    let mut sum: Vec<Point> = points.iter().map(|p| Point::zero(p.dim())).collect();
    for j in start..terms {
        let r = row(j)?;
        tail_spread = tail_spread.max(dev(&r, &last));
        for (acc, v) in sum.iter_mut().zip(r) {
            *acc = *acc + v;
        }
    }
    let n = (terms - start) as f64;
    Ok(LevelStats { tail_spread, previous_spread, mean: sum.into_iter().map(|v| v * (1.0 / n)).collect() })
}

fn oscillation(values: &[Point]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max(a.dist(b));
        }
    }
    worst
}

/// Interior points with clearance at least `clearance`.
fn injectivity_grid(domain: ModelDomain, clearance: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(INJECTIVITY_GRID);
    for _ in 0..INJECTIVITY_GRID * 1000 {
        let p = domain.sample_interior(&mut rng);
        if domain.boundary_distance(&p) >= clearance {
            out.push(p);
            if out.len() == INJECTIVITY_GRID {
                break;
            }
        }
    }
    out
}

fn injective(points: &[Point], images: &[Point]) -> bool {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = points[i].dist(&points[j]);
            if d > 0.0 && images[i].dist(&images[j]) <= 1e-9 * d {
                return false;
            }
        }
    }
    true
}

// Real parameter vectors for least-squares fitting within a family.

fn params(f: &Automorphism) -> Vec<f64> {
    match *f {
        Automorphism::Disk(m) => vec![m.a.re, m.a.im, m.theta],
        Automorphism::Annulus { theta, .. } => vec![theta],
        Automorphism::Ball { a, u } => {
            let mut v = vec![a[0].re, a[0].im, a[1].re, a[1].im];
            for row in u.0 {
                for c in row {
                    v.extend([c.re, c.im]);
                }
            }
            v
        }
        Automorphism::Bidisc { first, second, .. } => {
            vec![first.a.re, first.a.im, first.theta, second.a.re, second.a.im, second.theta]
        }
        Automorphism::Siegel { lambda, theta, b, t } => vec![lambda, theta, b.re, b.im, t],
    }
}

fn with_params(template: &Automorphism, x: &[f64]) -> Option<Automorphism> {
    let f = match *template {
        Automorphism::Disk(_) => Automorphism::Disk(DiskMobius { a: c64(x[0], x[1]), theta: x[2] }),
        Automorphism::Annulus { r, flip, .. } => Automorphism::Annulus { r, theta: x[0], flip },
        Automorphism::Ball { .. } => {
            let c = |k: usize| c64(x[k], x[k + 1]);
            let u = Mat2([[c(4), c(6)], [c(8), c(10)]]).reunitarize();
            Automorphism::Ball { a: [c(0), c(2)], u }
        }
        Automorphism::Bidisc { swap, .. } => Automorphism::Bidisc {
            first: DiskMobius { a: c64(x[0], x[1]), theta: x[2] },
            second: DiskMobius { a: c64(x[3], x[4]), theta: x[5] },
            swap,
        },
        Automorphism::Siegel { .. } => Automorphism::Siegel { lambda: x[0], theta: x[1], b: c64(x[2], x[3]), t: x[4] },
    };
    f.validate().ok().map(|_| f)
}

fn residuals(f: &Automorphism, points: &[Point], targets: &[Point]) -> DVector<f64> {
    let mut r = Vec::with_capacity(4 * points.len());
    for (p, t) in points.iter().zip(targets) {
        let v = f.map(p);
        for i in 0..p.dim() {
            let d = v.coord(i) - t.coord(i);
            r.extend([d.re, d.im]);
        }
    }
    DVector::from_vec(r)
}

fn sup_residual(f: &Automorphism, points: &[Point], targets: &[Point]) -> f64 {
    points.iter().zip(targets).map(|(p, t)| f.map(p).dist(t)).fold(0.0, f64::max)
}

/// Levenberg–Marquardt fit of a family member to `targets`, from `start`.
fn fit(start: &Automorphism, points: &[Point], targets: &[Point]) -> Option<Automorphism> {
    let mut x = params(start);
    let mut best = with_params(start, &x)?;
    let mut cost = residuals(&best, points, targets).norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..200 {
        if cost < 1e-30 {
            break;
        }
        let r = residuals(&best, points, targets);
        let mut jac = DMatrix::<f64>::zeros(r.len(), x.len());
        for k in 0..x.len() {
            let h = 1e-7 * (1.0 + x[k].abs());
            let mut xp = x.clone();
            xp[k] += h;
            let Some(fp) = with_params(start, &xp) else { continue };
            let col = (residuals(&fp, points, targets) - &r) / h;
            jac.set_column(k, &col);
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..x.len() {
                a[(k, k)] += lambda * (jtj[(k, k)] + 1e-12);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 4.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some(fnew) = with_params(start, &xn) {
                let c = residuals(&fnew, points, targets).norm_squared();
                if c < cost {
                    x = params(&fnew);
                    best = fnew;
                    let gain = cost - c;
                    cost = c;
                    lambda = (lambda / 3.0).max(1e-15);
                    improved = gain > 1e-32;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Some(best)
}

/// Starting guesses: the last term, the identity, and a map sending the
/// origin-like point where the limit sends it.
fn starts(domain: ModelDomain, last: Option<&Automorphism>, at_origin: Option<Point>) -> Vec<Automorphism> {
    let mut out: Vec<Automorphism> = last.into_iter().copied().collect();
    if let Ok(id) = Automorphism::identity(domain) {
        out.push(id);
    }
    if let Some(w) = at_origin {
        match domain {
            ModelDomain::Disk if w.norm() < 1.0 => {
                if let Ok(f) = Automorphism::disk(w.coord(0), 0.0) {
                    out.push(f.inverse());
                }
            }
            ModelDomain::Ball if w.norm() < 1.0 => {
                if let Ok(f) = Automorphism::ball(w, Mat2::identity()) {
                    out.push(f);
                }
            }
            ModelDomain::Bidisc if w.coord(0).norm() < 1.0 && w.coord(1).norm() < 1.0 => {
                let m = |c: C64| DiskMobius::new(c, 0.0).map(|d| d.inverse());
                if let (Ok(a), Ok(b)) = (m(w.coord(0)), m(w.coord(1))) {
                    for swap in [false, true] {
                        out.push(Automorphism::Bidisc { first: a, second: b, swap });
                    }
                }
            }
            ModelDomain::Annulus { r } => {
                let o = domain.origin_like().coord(0);
                let wz = w.coord(0);
                out.push(Automorphism::Annulus { r, theta: (wz / o).arg(), flip: false });
                out.push(Automorphism::Annulus { r, theta: (wz * o / r).arg(), flip: true });
            }
            _ => {}
        }
    }
    out
}

struct Evidence {
    candidate: Automorphism,
    residual: f64,
    per_level: Vec<f64>,
}

fn best_fit(
    domain: ModelDomain,
    last: Option<&Automorphism>,
    at_origin: Option<Point>,
    levels: &[Vec<Point>],
    limits: &[Vec<Point>],
) -> Option<Evidence> {
    let (pts, tgt) = (levels.last()?, limits.last()?);
    // cap the fitting set; evidence is evaluated on every point afterwards
    let stride = (pts.len() / 150).max(1);
    let fp: Vec<Point> = pts.iter().step_by(stride).copied().collect();
    let ft: Vec<Point> = tgt.iter().step_by(stride).copied().collect();
    let mut best: Option<Evidence> = None;
    for s in starts(domain, last, at_origin) {
        let Some(g) = fit(&s, &fp, &ft) else { continue };
        let per_level: Vec<f64> = levels.iter().zip(limits).map(|(p, t)| sup_residual(&g, p, t)).collect();
        let residual = per_level.iter().copied().fold(0.0, f64::max);
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(Evidence { candidate: g, residual, per_level });
        }
    }
    best
}

/// Classifies the normal limit of `seq` on the levels of `exhaustion`.
pub fn normal_limit_classify(seq: &[Automorphism], exhaustion: &CompactExhaustion, tol: f64) -> Result<NormalLimitReport> {
    if seq.len() < MIN_TERMS {
        return Err(Error::Usage(format!("need at least {MIN_TERMS} terms, got {}", seq.len())));
    }
    if !(tol > 0.0) {
        return Err(Error::Usage("tolerance must be positive".into()));
    }
    let domain = exhaustion.domain;
    if let Some(f) = seq.iter().find(|f| f.domain() != domain) {
        return Err(Error::Usage(format!("term on {} in a sequence on {}", f.domain().name(), domain.name())));
    }
    let eval = |j: usize, p: &Point| Ok(seq[j].map(p));
    let at_origin = level_stats(seq.len(), &[domain.origin_like()], &eval)?.mean[0];
    classify_values(domain, seq.len(), &eval, Some(&seq[seq.len() - 1]), Some(at_origin), exhaustion, tol)
}

fn classify_values(
    domain: ModelDomain,
    terms: usize,
    eval: &dyn Fn(usize, &Point) -> Result<Point>,
    last: Option<&Automorphism>,
    at_origin: Option<Point>,
    exhaustion: &CompactExhaustion,
    tol: f64,
) -> Result<NormalLimitReport> {
    let (_, start) = windows(terms);
    let mut levels = Vec::new();
    let mut limits = Vec::new();
    let mut converged = true;
    let mut worst_spread: f64 = 0.0;
    for (k, pts) in exhaustion.levels.iter().enumerate() {
        let LevelStats { tail_spread, previous_spread, mean: lim } = level_stats(terms, pts, eval)?;
        if tail_spread > tol && tail_spread > CONTRACTION * previous_spread {
            converged = false;
        }
        worst_spread = worst_spread.max(tail_spread);
        levels.push(LevelDeviation {
            clearance: exhaustion.deltas[k],
            points: pts.len(),
            tail_spread,
            previous_spread,
            oscillation: oscillation(&lim),
            fit_residual: None,
        });
        limits.push(lim);
    }
    let mut report = NormalLimitReport {
        verdict: LimitVerdict::NotConverged,
        limit: LimitDescriptor::None,
        levels,
        reason: String::new(),
        tol,
        terms,
        tail_terms: terms - start,
        injective_on_grid: None,
        inverse_residual: None,
        constant_boundary_distance: None,
    };
    if !converged {
        report.reason = "tail deviations do not contract on some level".into();
        return Ok(report);
    }
    if report.levels.iter().all(|l| l.oscillation <= tol) {
        let all: Vec<&Point> = limits.iter().flatten().collect();
        let c = all.iter().fold(Point::zero(domain.dim()), |a, b| a + **b) * (1.0 / all.len() as f64);
        let d = domain.boundary_distance(&c);
        report.verdict = LimitVerdict::Constant;
        report.constant_boundary_distance = Some(if domain.contains(&c) { d } else { -d });
        report.limit = LimitDescriptor::Constant(c);
        report.reason = "oscillation below tolerance on every level".into();
        if !domain.contains(&c) && d > tol {
            return Err(Error::Dichotomy(format!("constant limit {c} lies outside the closure of {}", domain.name())));
        }
        return Ok(report);
    }
    // values heading for the boundary: the limit is constant, but not yet resolved
    // judged on the innermost level, whose images stay clear of the boundary
    // under any fixed automorphism
    let nearest = limits[0].iter().map(|p| domain.boundary_distance(p)).fold(f64::INFINITY, f64::min);
    let inner_spread = report.levels[0].tail_spread;
    if nearest <= DRIFT_FACTOR * inner_spread {
        report.reason = format!(
            "limit values drift toward the boundary (distance {nearest:.3e} against tail spread {inner_spread:.3e}); \
             extend the sequence to resolve the constant"
        );
        return Ok(report);
    }
    let accept = tol + worst_spread;
    let Some(ev) = best_fit(domain, last, at_origin, &exhaustion.levels, &limits) else {
        return Err(Error::Dichotomy("no automorphism candidate could be fitted".into()));
    };
    for (l, r) in report.levels.iter_mut().zip(&ev.per_level) {
        l.fit_residual = Some(*r);
    }
    let clearance = *exhaustion.deltas.first().unwrap_or(&0.1);
    let grid = injectivity_grid(domain, clearance, 0x11e);
    let images = level_stats(terms, &grid, eval)?.mean;
    let inj = injective(&grid, &images);
    let inv = ev.candidate.inverse();
    let inverse_residual = grid.iter().zip(&images).map(|(p, w)| inv.map(w).dist(p)).fold(0.0, f64::max);
    report.injective_on_grid = Some(inj);
    report.inverse_residual = Some(inverse_residual);
    if ev.residual <= accept && inj && inverse_residual <= accept {
        report.verdict = LimitVerdict::Automorphism;
        report.limit = LimitDescriptor::Automorphism(ev.candidate);
        report.reason = format!("fitted automorphism within {accept:.3e}; injective on {} grid points", grid.len());
        return Ok(report);
    }
    Err(Error::Dichotomy(format!(
        "limit is neither constant (oscillation {:.3e}) nor an automorphism (fit residual {:.3e}, injective {inj}, \
         inverse residual {inverse_residual:.3e})",
        report.levels.iter().map(|l| l.oscillation).fold(0.0, f64::max),
        ev.residual
    )))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterLimit {
    /// Indices `k` of the tail members.
    pub members: Vec<usize>,
    /// `sup |h − id|` per exhaustion level at the latest member.
    pub identity_deviation: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prop52Report {
    /// Classification of `g = lim f ∘ φ_j`.
    pub g: NormalLimitReport,
    /// Path taken: `a` when `g` passed the automorphism evidence test, else `b`.
    pub path: String,
    pub f_injective_on_grid: Option<bool>,
    /// `sup |f(φ(g⁻¹(p))) − p|` when `φ_j` itself has an automorphism limit `φ`.
    pub f_inverse_residual: Option<f64>,
    pub clusters: Vec<ClusterLimit>,
    pub cluster_radius: f64,
    pub note: String,
}

/// Checks the composed sequence `h_k = f ∘ φ_{k+1} ∘ φ_k^{-1}` and the
/// automorphism transfer from `g = lim f ∘ φ_j` to `f`.
pub fn prop52_check(f: &Map, seq: &[Automorphism], exhaustion: &CompactExhaustion, tol: f64) -> Result<Prop52Report> {
    let domain = exhaustion.domain;
    if seq.len() < MIN_TERMS {
        return Err(Error::Usage(format!("need at least {MIN_TERMS} terms, got {}", seq.len())));
    }
    if f.source_dim() != domain.dim() || f.target_dim() != domain.dim() {
        return Err(Error::Usage(format!("f must map {} to itself", domain.name())));
    }
    let eval_g = |j: usize, p: &Point| f.eval(&seq[j].map(p));
    let at_origin = f.eval(&seq[seq.len() - 1].map(&domain.origin_like())).ok();
    let g = match classify_values(domain, seq.len(), &eval_g, None, at_origin, exhaustion, tol) {
        Ok(r) if r.verdict == LimitVerdict::NotConverged => {
            return Err(Error::HypothesisFailure(format!("f ∘ φ_j does not converge: {}", r.reason)))
        }
        Ok(r) => r,
        // a nonconstant limit outside the automorphism family is possible for general f
        Err(Error::Dichotomy(msg)) => NormalLimitReport {
            verdict: LimitVerdict::NotConverged,
            limit: LimitDescriptor::None,
            levels: Vec::new(),
            reason: format!("converged, but neither constant nor an automorphism: {msg}"),
            tol,
            terms: seq.len(),
            tail_terms: seq.len() - windows(seq.len()).1,
            injective_on_grid: None,
            inverse_residual: None,
            constant_boundary_distance: None,
        },
        Err(e) => return Err(e),
    };

    let mut report = Prop52Report {
        path: "b".into(),
        f_injective_on_grid: None,
        f_inverse_residual: None,
        clusters: Vec::new(),
        cluster_radius: 0.0,
        note: PROP52_NOTE.into(),
        g,
    };

    if let LimitDescriptor::Automorphism(g_aut) = &report.g.limit {
        report.path = "a".into();
        let clearance = *exhaustion.deltas.first().unwrap_or(&0.1);
        let grid = injectivity_grid(domain, clearance, 0x52a);
        let images: Vec<Point> = grid.iter().map(|p| f.eval(p)).collect::<Result<_>>()?;
        report.f_injective_on_grid = Some(injective(&grid, &images));
        if let Ok(phi) = normal_limit_classify(seq, exhaustion, tol) {
            if let LimitDescriptor::Automorphism(phi) = phi.limit {
                let ginv = g_aut.inverse();
                let mut worst: f64 = 0.0;
                for p in &grid {
                    let back = phi.map(&ginv.map(p));
                    worst = worst.max(f.eval(&back)?.dist(p));
                }
                report.f_inverse_residual = Some(worst);
            }
        }
    }

    // (b): h_k on the exhaustion levels over the tail, clustered greedily;
    // each cluster keeps its latest member as representative
    let (_, start) = windows(seq.len());
    let pts: Vec<Point> = exhaustion.levels.iter().flatten().copied().collect();
    let h_row = |k: usize| -> Result<Vec<Point>> {
        let inv = seq[k].inverse();
        pts.iter().map(|p| f.eval(&seq[k + 1].map(&inv.map(p)))).collect()
    };
    let dev = |a: &[Point], b: &[Point]| a.iter().zip(b).map(|(x, y)| x.dist(y)).fold(0.0, f64::max);
    let ks: Vec<usize> = (start.max(1) - 1..seq.len() - 1).collect();
    let last_step = if ks.len() >= 2 { dev(&h_row(ks[ks.len() - 2])?, &h_row(ks[ks.len() - 1])?) } else { 0.0 };
    let radius = tol.max(4.0 * last_step);
    report.cluster_radius = radius;
    let mut clusters: Vec<(Vec<usize>, Vec<Point>)> = Vec::new();
    for &k in &ks {
        let row = h_row(k)?;
        match clusters.iter_mut().find(|(_, rep)| dev(rep, &row) <= radius) {
            Some((members, rep)) => {
                members.push(k);
                *rep = row;
            }
            None => clusters.push((vec![k], row)),
        }
    }
    for (members, row) in clusters.into_iter().filter(|(m, _)| m.len() >= 3) {
        let mut offset = 0;
        let identity_deviation = exhaustion
            .levels
            .iter()
            .map(|lvl| {
                let d = lvl.iter().zip(&row[offset..offset + lvl.len()]).map(|(p, h)| h.dist(p)).fold(0.0, f64::max);
                offset += lvl.len();
                d
            })
            .collect();
        report.clusters.push(ClusterLimit { members, identity_deviation });
    }
    Ok(report)
}
