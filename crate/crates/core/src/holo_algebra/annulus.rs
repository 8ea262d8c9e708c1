use serde::Serialize;

use crate::error::Result;
use crate::point::{c64, C64};
use crate::series::{TruncatedLaurent, DEFAULT_TAIL_WINDOW};

/// Window `[−N, N]` of the probe series with Hadamard radii `(r, 1)`.
pub const PROBE_ORDER: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusVerdict {
    /// `"accept"` or `"reject"`.
    pub verdict: String,
    pub alpha: Option<C64>,
    pub reason: Option<String>,
    /// Radii of the probe and of the probe composed with the candidate.
    pub probe_radii: Option<(f64, f64)>,
    pub image_radii: Option<(f64, f64)>,
    pub tol: f64,
}

impl AnnulusVerdict {
    pub fn accepted(&self) -> bool {
        self.verdict == "accept"
    }

    fn reject(reason: impl Into<String>, tol: f64) -> Self {
        AnnulusVerdict {
            verdict: "reject".into(),
            alpha: None,
            reason: Some(reason.into()),
            probe_radii: None,
            image_radii: None,
            tol,
        }
    }
}

/// Probe `Σ_{j ≥ 0} z^j + Σ_{k ≥ 1} r^k z^{−k}`, convergent exactly on `r < |z| < 1`.
fn probe(r: f64) -> TruncatedLaurent {
    TruncatedLaurent::from_fn(PROBE_ORDER, PROBE_ORDER, |j| {
        if j >= 0 {
            c64(1.0, 0.0)
        } else {
            c64(r.powi(-j), 0.0)
        }
    })
}

/// Decides whether `Φ(id)` is the image of `id` under an algebra automorphism
/// of the annulus, i.e. of the form `αz` with `|α| = 1`.
///
/// The tolerance is raised by the truncation bound of the input. Besides the
/// coefficient test, a probe with radii `(r, 1)` is composed with `αz`; its
/// radii must stay `(r, 1)` to relative accuracy `max(tol, 1e−12)`.
pub fn annulus_auto_classify(phi_of_id: &TruncatedLaurent, r: f64, tol: f64) -> Result<AnnulusVerdict> {
    crate::domains::ModelDomain::annulus(r)?;
    let tol = tol + phi_of_id.tail_bound();
    let significant: Vec<(i32, C64)> = phi_of_id.entries().filter(|(_, c)| c.norm() > tol).collect();
    if significant.is_empty() {
        return Ok(AnnulusVerdict::reject("zero map", tol));
    }
    let others: Vec<i32> = significant.iter().map(|(j, _)| *j).filter(|&j| j != 1).collect();
    if !others.is_empty() {
        let top = *others.iter().max().unwrap();
        let low = *others.iter().min().unwrap();
        let reason = if top > 1 {
            format!("not surjective form: term of order {top}")
        } else if low < 0 {
            format!("not of the form αz: negative-order term {low}")
        } else {
            "not of the form αz: constant term".to_string()
        };
        return Ok(AnnulusVerdict::reject(reason, tol));
    }
    let alpha = phi_of_id.coeff(1);
    let p = probe(r);
    let probe_radii = p.hadamard_radii(DEFAULT_TAIL_WINDOW)?.pair();
    let line = TruncatedLaurent::monomial(alpha, 1, 0, 1);
    let image_radii = p.compose(&line)?.hadamard_radii(DEFAULT_TAIL_WINDOW)?.pair();
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let radii_tol = tol.max(1e-12);
    let radii_ok = rel(image_radii.0, probe_radii.0) <= radii_tol && rel(image_radii.1, probe_radii.1) <= radii_tol;
    let modulus_ok = (alpha.norm() - 1.0).abs() <= tol;
    let reason = if !modulus_ok {
        Some(format!("|α| = {} is not 1: the image has a different natural domain", alpha.norm()))
    } else if !radii_ok {
        Some("probe radii moved under composition".to_string())
    } else {
        None
    };
    Ok(AnnulusVerdict {
        verdict: if reason.is_none() { "accept" } else { "reject" }.into(),
        alpha: Some(alpha),
        reason,
        probe_radii: Some(probe_radii),
        image_radii: Some(image_radii),
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn line(alpha: C64) -> TruncatedLaurent {
        TruncatedLaurent::monomial(alpha, 1, 4, 4)
    }

    #[test]
    fn rotation_is_accepted() {
        let a = C64::from_polar(1.0, PI / 7.0);
        let v = annulus_auto_classify(&line(a), 0.5, 1e-8).unwrap();
        assert!(v.accepted());
        assert_eq!(v.alpha, Some(a));
    }

    #[test]
    fn contraction_is_rejected_with_shifted_radii() {
        let v = annulus_auto_classify(&line(c64(0.9, 0.0)), 0.5, 1e-8).unwrap();
        assert!(!v.accepted());
        let (inner, outer) = v.image_radii.unwrap();
        // oracle: coefficients a_j α^j have root-test limits r/|α| and 1/|α|
        assert!((inner - 0.5 / 0.9).abs() < 1e-12);
        assert!((outer - 1.0 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn square_is_rejected() {
        let sq = TruncatedLaurent::monomial(c64(1.0, 0.0), 2, 0, 4);
        let v = annulus_auto_classify(&sq, 0.5, 1e-8).unwrap();
        assert!(!v.accepted());
        assert!(v.reason.unwrap().starts_with("not surjective form"));
    }

    #[test]
    fn zero_and_flip_are_rejected() {
        let zero = TruncatedLaurent::zeros(c64(0.0, 0.0), 2, 2);
        assert_eq!(annulus_auto_classify(&zero, 0.5, 1e-8).unwrap().reason.as_deref(), Some("zero map"));
        let flip = TruncatedLaurent::monomial(c64(0.5, 0.0), -1, 1, 1);
        assert!(!annulus_auto_classify(&flip, 0.5, 1e-8).unwrap().accepted());
    }

    #[test]
    fn perturbation_below_truncation_bound_is_tolerated() {
        let mut s = line(c64(0.0, 1.0)).with_tail_bound(1e-6);
        s.set(3, c64(5e-7, 0.0)).unwrap();
        assert!(annulus_auto_classify(&s, 0.5, 1e-8).unwrap().accepted());
    }

    proptest! {
        #[test]
        fn single_terms_accepted_iff_unit_linear(j in -3i32..4, modulus in 0.5f64..1.5, arg in -3.0f64..3.0) {
            let c = C64::from_polar(modulus, arg);
            let s = TruncatedLaurent::monomial(c, j, 4, 4);
            let v = annulus_auto_classify(&s, 0.4, 1e-8).unwrap();
            prop_assert_eq!(v.accepted(), j == 1 && (modulus - 1.0).abs() <= 1e-8);
        }
    }
}
