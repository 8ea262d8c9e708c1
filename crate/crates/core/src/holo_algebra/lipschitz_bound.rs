use serde::Serialize;

use crate::domains::ModelDomain;
use crate::error::{Error, Result};
use crate::func::{Func, Map};
use crate::lipschitz::{lipschitz_norm_with_pairs, map_lipschitz_norm, PairSampler};
use crate::point::Point;

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzBoundRow {
    pub function: String,
    pub norm_f: f64,
    pub norm_f_after_h: f64,
    pub forward_holds: bool,
    /// `‖f‖ ≤ Lip(h⁻¹)·‖f ∘ h‖`, when an inverse is supplied.
    pub reverse_holds: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzBoundReport {
    pub lip_h: f64,
    pub lip_h_inverse: Option<f64>,
    pub rows: Vec<LipschitzBoundRow>,
    pub budget: usize,
    pub verdict: bool,
}

/// Relative slack for roundoff in the sampled inequalities.
const SLACK: f64 = 1e-12;

fn image_pairs(h: &Map, pairs: &[(Point, Point)], target: ModelDomain) -> Result<Vec<(Point, Point)>> {
    let mut out = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let (hx, hy) = (h.eval(x)?, h.eval(y)?);
        if !target.contains(&hx) || !target.contains(&hy) {
            return Err(Error::Usage(format!("h does not map {x} or {y} into {}", target.name())));
        }
        if hx.dist(&hy) > 0.0 {
            out.push((hx, hy));
        }
    }
    Ok(out)
}

/// Checks `‖f ∘ h‖_L ≤ Lip(h)·‖f‖_L` for `h: Ω̂ → Ω` on sampled norms.
///
/// The norm of `f` on `Ω` is sampled on `omega_sampler`'s pairs together with
/// the images `(h(x), h(y))` of the pairs used on `Ω̂`, so the sampled
/// inequality holds for every pair and not only in the limit. With an inverse
/// the reverse inequality `‖f‖ ≤ Lip(h⁻¹)·‖f ∘ h‖` is checked the same way.
pub fn lipschitz_hom_bound(
    h: &Map,
    h_inverse: Option<&Map>,
    omega: &PairSampler,
    omega_hat: &PairSampler,
    test_set: &[Func],
) -> Result<LipschitzBoundReport> {
    let hat_pairs = omega_hat.sample();
    let forward_images = image_pairs(h, &hat_pairs, omega.domain)?;
    let lip_h = map_lipschitz_norm(h, omega_hat)?.value;
    let (lip_inv, backward_images) = match h_inverse {
        Some(g) => {
            let pairs = omega.sample();
            (Some(map_lipschitz_norm(g, omega)?.value), Some(image_pairs(g, &pairs, omega_hat.domain)?))
        }
        None => (None, None),
    };
    let mut rows = Vec::new();
    for f in test_set {
        let fh = f.compose(h);
        let norm_f = lipschitz_norm_with_pairs(f, omega, &forward_images)?.value;
        let norm_fh = match &backward_images {
            Some(extra) => lipschitz_norm_with_pairs(&fh, omega_hat, extra)?.value,
            None => lipschitz_norm_with_pairs(&fh, omega_hat, &[])?.value,
        };
        let forward = norm_fh <= lip_h * norm_f * (1.0 + SLACK) + SLACK;
        let reverse = lip_inv.map(|l| norm_f <= l * norm_fh * (1.0 + SLACK) + SLACK);
        rows.push(LipschitzBoundRow {
            function: f.name(),
            norm_f,
            norm_f_after_h: norm_fh,
            forward_holds: forward,
            reverse_holds: reverse,
        });
    }
    let verdict = rows.iter().all(|r| r.forward_holds && r.reverse_holds.unwrap_or(true));
    Ok(LipschitzBoundReport { lip_h, lip_h_inverse: lip_inv, rows, budget: hat_pairs.len(), verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Automorphism;
    use crate::holo_algebra::standard_test_set;
    use crate::lipschitz::DEFAULT_REFINE_STEPS;
    use crate::point::c64;

    fn sampler(seed: u64) -> PairSampler {
        PairSampler::new(ModelDomain::Disk, 3000, seed)
    }

    #[test]
    fn identity_preserves_norms() {
        let id = Map::identity(1);
        let r = lipschitz_hom_bound(&id, Some(&id), &sampler(1), &sampler(1), &standard_test_set(ModelDomain::Disk)).unwrap();
        assert!(r.verdict);
        for row in &r.rows {
            assert!((row.norm_f - row.norm_f_after_h).abs() <= 1e-12 * (1.0 + row.norm_f));
        }
    }

    #[test]
    fn half_scaling_halves_the_coordinate_norm() {
        let h = Map::planar("z/2", |z| 0.5 * z);
        let z = Func::coordinate(0, 1);
        let r = lipschitz_hom_bound(&h, None, &sampler(2), &sampler(3), &[z]).unwrap();
        assert!((r.lip_h - 0.5).abs() < 1e-9);
        assert!((r.rows[0].norm_f - 1.0).abs() < 1e-6);
        assert!((r.rows[0].norm_f_after_h - 0.5).abs() < 1e-9);
        assert!(r.verdict);
    }

    #[test]
    fn steep_mobius_bound_holds() {
        let m = Automorphism::disk(c64(0.9, 0.0), 0.0).unwrap();
        let (h, g) = (Map::from(m), Map::from(m.inverse()));
        let s = sampler(4).with_refinement(DEFAULT_REFINE_STEPS);
        let r = lipschitz_hom_bound(&h, Some(&g), &s, &s, &standard_test_set(ModelDomain::Disk)).unwrap();
        assert!(r.verdict);
        assert!(r.lip_h > 17.0 && r.lip_h <= 19.0 * (1.0 + 1e-6), "{}", r.lip_h);
    }
}
