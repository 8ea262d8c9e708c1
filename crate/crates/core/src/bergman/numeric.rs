//! Bergman kernels of Reinhardt domains from quadrature Gram matrices of monomials.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::quadrature::{angular_moment, QuadratureSpec};
use crate::domains::ModelDomain;
use crate::error::{Error, Result};
use crate::point::{c64, Point, C64};

/// Largest accepted condition number of the Jacobi-scaled Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Monomial exponents used as the raw basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonomialSet {
    /// `|α| ≤ degree`; on the annulus `−degree ≤ j ≤ degree`.
    TotalDegree { degree: usize },
    /// `α_1 ≤ a_max`, `α_2 ≤ b_max` (two variables only).
    Box { a_max: usize, b_max: usize },
}

impl MonomialSet {
    fn exponents(&self, domain: ModelDomain) -> Result<Vec<[i32; 2]>> {
        let out = match (*self, domain.dim()) {
            (MonomialSet::TotalDegree { degree }, 1) => {
                let d = degree as i32;
                let lo = if matches!(domain, ModelDomain::Annulus { .. }) { -d } else { 0 };
                (lo..=d).map(|j| [j, 0]).collect()
            }
            (MonomialSet::TotalDegree { degree }, _) => {
                let d = degree as i32;
                (0..=d).flat_map(|t| (0..=t).map(move |b| [t - b, b])).collect()
            }
            (MonomialSet::Box { a_max, b_max }, 2) => (0..=b_max as i32)
                .flat_map(|b| (0..=a_max as i32).map(move |a| [a, b]))
                .collect(),
            (MonomialSet::Box { .. }, _) => {
                return Err(Error::Usage("box monomial sets need two variables".into()))
            }
        };
        Ok(out)
    }

    /// Largest exponent per variable.
    fn max_degrees(&self) -> [usize; 2] {
        match *self {
            MonomialSet::TotalDegree { degree } => [degree, degree],
            MonomialSet::Box { a_max, b_max } => [a_max, b_max],
        }
    }
}

/// Gram block over one angular residue class, stored as `H = (G⁻¹)ᵀ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramBlock {
    pub members: Vec<usize>,
    /// Row-major `|members|²` entries.
    pub h: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumericKernel {
    pub domain: ModelDomain,
    pub monomials: MonomialSet,
    pub quadrature: QuadratureSpec,
    pub angular_nodes: [usize; 2],
    pub total_nodes: usize,
    /// Condition number of the Jacobi-scaled Gram matrix.
    pub condition: f64,
    pub exponents: Vec<[i32; 2]>,
    pub blocks: Vec<GramBlock>,
    /// Diagonal `H` when every block is a singleton (the usual case).
    #[serde(skip)]
    diagonal: Option<Vec<f64>>,
}

/// Radial moments of the model domain, evaluated in factored form.
enum Radial {
    /// `½ Σ w x^s` on `[x_lo, 1]` (disk, annulus) or per factor (bidisc).
    Planar(Vec<(f64, f64)>),
    /// `t = |z2| ∈ [0, 1]`, `|z1|² = L(t) ξ`, `L = 1 − t^{2m}`.
    Fibered { t: Vec<(f64, f64, f64)>, xi: Vec<(f64, f64)> },
}

impl Radial {
    fn planar_moment(rule: &[(f64, f64)], s: f64) -> f64 {
        0.5 * rule.iter().map(|&(lx, w)| w * (s * lx).exp()).sum::<f64>()
    }

    fn build(domain: ModelDomain, spec: &QuadratureSpec) -> Result<Radial> {
        let logged = |rule: Vec<(f64, f64)>| rule.into_iter().map(|(x, w)| (x.ln(), w)).collect::<Vec<_>>();
        Ok(match domain {
            ModelDomain::Disk | ModelDomain::Bidisc => Radial::Planar(logged(spec.radial_rule(0.0, 1.0)?)),
            ModelDomain::Annulus { r } => Radial::Planar(logged(spec.radial_rule(r * r, 1.0)?)),
            ModelDomain::Ball | ModelDomain::Ellipsoid { .. } => {
                let m = if let ModelDomain::Ellipsoid { m } = domain { m } else { 1 };
                let t = spec
                    .radial_rule(0.0, 1.0)?
                    .into_iter()
                    .map(|(t, w)| (t.ln(), (1.0 - t.powi(2 * m as i32)).ln(), w))
                    .collect();
                Radial::Fibered { t, xi: logged(spec.radial_rule(0.0, 1.0)?) }
            }
            ModelDomain::Siegel => {
                return Err(Error::Usage("numeric kernels need a bounded domain".into()))
            }
        })
    }

    /// Radial part of `⟨z^α, z^β⟩` given the angular factor is nonzero.
    fn moment(&self, domain: ModelDomain, a: [i32; 2], b: [i32; 2]) -> f64 {
        let s0 = 0.5 * (a[0] + b[0]) as f64;
        let s1 = 0.5 * (a[1] + b[1]) as f64;
        match self {
            Radial::Planar(rule) => {
                let first = Radial::planar_moment(rule, s0);
                if domain == ModelDomain::Bidisc {
                    first * Radial::planar_moment(rule, s1)
                } else {
                    first
                }
            }
            Radial::Fibered { t, xi, .. } => {
                let outer: f64 = t
                    .iter()
                    .map(|&(lt, ll, w)| {
                        let e = (1.0 + 2.0 * s1) * lt + (1.0 + s0) * ll;
                        if e < -745.0 {
                            0.0
                        } else {
                            w * e.exp()
                        }
                    })
                    .sum();
                // ½ from d(ρ1²) is inside the ξ moment
                outer * Radial::planar_moment(xi, s0)
            }
        }
    }

    fn node_count(&self, dim_angular: usize) -> usize {
        match self {
            Radial::Planar(rule) => rule.len() * if dim_angular == 2 { rule.len() } else { 1 },
            Radial::Fibered { t, xi, .. } => t.len() * xi.len(),
        }
    }
}

impl NumericKernel {
    pub fn build(domain: ModelDomain, monomials: MonomialSet, spec: &QuadratureSpec) -> Result<Self> {
        if !domain.is_bounded() {
            return Err(Error::Usage("numeric kernels need a bounded domain".into()));
        }
        let exponents = monomials.exponents(domain)?;
        let maxd = monomials.max_degrees();
        let angular_nodes = match domain {
            // Laurent exponents span 2·degree
            ModelDomain::Annulus { .. } => [spec.angular_nodes(2 * maxd[0]), 1],
            d if d.dim() == 1 => [spec.angular_nodes(maxd[0]), 1],
            _ => [spec.angular_nodes(maxd[0]), spec.angular_nodes(maxd[1])],
        };
        let radial = Radial::build(domain, spec)?;
        let total_nodes = radial.node_count(domain.dim()) * angular_nodes[0] * angular_nodes[1];

        let mut classes: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for (i, e) in exponents.iter().enumerate() {
            let key = (
                (e[0] as i64).rem_euclid(angular_nodes[0] as i64),
                (e[1] as i64).rem_euclid(angular_nodes[1] as i64),
            );
            classes.entry(key).or_default().push(i);
        }

        let mut blocks = Vec::with_capacity(classes.len());
        let (mut lam_max, mut lam_min) = (0.0f64, f64::INFINITY);
        for members in classes.into_values() {
            let n = members.len();
            let mut g = DMatrix::<f64>::zeros(n, n);
            for (p, &i) in members.iter().enumerate() {
                for (q, &j) in members.iter().enumerate().skip(p) {
                    let (a, b) = (exponents[i], exponents[j]);
                    let ang = angular_moment((a[0] - b[0]) as i64, angular_nodes[0])
                        * if domain.dim() == 2 { angular_moment((a[1] - b[1]) as i64, angular_nodes[1]) } else { 1.0 };
                    let v = if ang == 0.0 { 0.0 } else { ang * radial.moment(domain, a, b) };
                    g[(p, q)] = v;
                    g[(q, p)] = v;
                }
            }
            let diag: Vec<f64> = (0..n).map(|p| g[(p, p)]).collect();
            if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
                return Err(Error::DegreeTooHigh { condition: f64::INFINITY });
            }
            let scale: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
            let scaled = DMatrix::from_fn(n, n, |p, q| g[(p, q)] * scale[p] * scale[q]);
            if n > 1 {
                let eig = SymmetricEigen::new(scaled.clone()).eigenvalues;
                lam_max = lam_max.max(eig.max());
                lam_min = lam_min.min(eig.min());
            } else {
                lam_max = lam_max.max(1.0);
                lam_min = lam_min.min(1.0);
            }
            let condition = if lam_min > 0.0 { lam_max / lam_min } else { f64::INFINITY };
            if condition > MAX_CONDITION {
                return Err(Error::DegreeTooHigh { condition });
            }
            let inv = scaled
                .cholesky()
                .ok_or(Error::DegreeTooHigh { condition: f64::INFINITY })?
                .inverse();
            // G is real symmetric, so (G⁻¹)ᵀ = G⁻¹ = S Ĝ⁻¹ S
            let h: Vec<f64> = (0..n)
                .flat_map(|p| (0..n).map(move |q| (p, q)))
                .map(|(p, q)| inv[(p, q)] * scale[p] * scale[q])
                .collect();
            blocks.push(GramBlock { members, h });
        }
        let condition = lam_max / lam_min;
        let mut k = NumericKernel {
            domain,
            monomials,
            quadrature: *spec,
            angular_nodes,
            total_nodes,
            condition,
            exponents,
            blocks,
            diagonal: None,
        };
        k.index_diagonal();
        Ok(k)
    }

    fn index_diagonal(&mut self) {
        if self.blocks.iter().all(|b| b.members.len() == 1) {
            let mut d = vec![0.0; self.exponents.len()];
            for b in &self.blocks {
                d[b.members[0]] = b.h[0];
            }
            self.diagonal = Some(d);
        }
    }

    /// Restores derived data after deserialization.
    pub fn reindex(mut self) -> Self {
        self.index_diagonal();
        self
    }

    fn power_table(u: C64, lo: i32, hi: i32) -> (i32, Vec<C64>) {
        let mut t = vec![c64(0.0, 0.0); (hi - lo + 1) as usize];
        let mut p = c64(1.0, 0.0);
        for k in 0..=hi.max(0) {
            if k >= lo {
                t[(k - lo) as usize] = p;
            }
            p *= u;
        }
        if lo < 0 {
            let inv = u.inv();
            let mut p = inv;
            for k in 1..=-lo {
                if -k <= hi {
                    t[(-k - lo) as usize] = p;
                }
                p *= inv;
            }
        }
        (lo, t)
    }

    fn ranges(&self) -> [(i32, i32); 2] {
        let mut r = [(0, 0); 2];
        for (i, slot) in r.iter_mut().enumerate() {
            let lo = self.exponents.iter().map(|e| e[i]).min().unwrap_or(0);
            let hi = self.exponents.iter().map(|e| e[i]).max().unwrap_or(0);
            *slot = (lo, hi);
        }
        r
    }

    /// `K(z, conj(w))`, holomorphic in both arguments.
    pub fn eval_holo(&self, z: &Point, w: &Point) -> C64 {
        let ranges = self.ranges();
        let dim = self.domain.dim();
        if let Some(diag) = &self.diagonal {
            let tables: Vec<(i32, Vec<C64>)> = (0..dim)
                .map(|i| Self::power_table(z.coord(i) * w.coord(i), ranges[i].0, ranges[i].1))
                .collect();
            let mut acc = c64(0.0, 0.0);
            for (e, h) in self.exponents.iter().zip(diag) {
                let mut term = tables[0].1[(e[0] - tables[0].0) as usize];
                if dim == 2 {
                    term *= tables[1].1[(e[1] - tables[1].0) as usize];
                }
                acc += term * *h;
            }
            return acc;
        }
        let table = |p: &Point| -> Vec<(i32, Vec<C64>)> {
            (0..dim).map(|i| Self::power_table(p.coord(i), ranges[i].0, ranges[i].1)).collect()
        };
        let (tz, tw) = (table(z), table(w));
        let mono = |t: &[(i32, Vec<C64>)], e: &[i32; 2]| {
            let mut v = t[0].1[(e[0] - t[0].0) as usize];
            if dim == 2 {
                v *= t[1].1[(e[1] - t[1].0) as usize];
            }
            v
        };
        let mut acc = c64(0.0, 0.0);
        for b in &self.blocks {
            let n = b.members.len();
            let vz: Vec<C64> = b.members.iter().map(|&i| mono(&tz, &self.exponents[i])).collect();
            let vw: Vec<C64> = b.members.iter().map(|&i| mono(&tw, &self.exponents[i])).collect();
            for p in 0..n {
                for q in 0..n {
                    acc += vz[p] * vw[q] * b.h[p * n + q];
                }
            }
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }
}
