use serde::{Deserialize, Serialize};

use super::nats_to_bits;
use crate::error::{Error, Result};

/// Denominator form used for `TE(X -> Z)`.
///
/// `Printed` scales the conditional variance term by `d`; `Rederived` scales
/// it by `d^2`, which is what the exact stationary covariances give.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eq10Variant {
    Printed,
    #[default]
    Rederived,
}

impl std::str::FromStr for Eq10Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "rederived" => Ok(Self::Rederived),
            other => Err(Error::InvalidConfig(format!("unknown variant {other:?}"))),
        }
    }
}

/// Coefficients of the benchmark network with `a = b = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Params {
    pub c: f64,
    pub d: f64,
    pub e: f64,
    /// Stationary variance of phi.
    pub sigma_phi_sq: f64,
    pub variant: Eq10Variant,
}

impl Lemma2Params {
    pub fn new(c: f64, d: f64, e: f64, sigma_phi_sq: f64) -> Self {
        Self {
            c,
            d,
            e,
            sigma_phi_sq,
            variant: Eq10Variant::default(),
        }
    }

    pub fn with_variant(self, variant: Eq10Variant) -> Self {
        Self { variant, ..self }
    }

    fn check(&self) {
        debug_assert!(self.sigma_phi_sq > 0.0, "sigma_phi_sq must be positive");
    }
}

fn half_log_ratio_bits(num: f64, den: f64) -> f64 {
    nats_to_bits(0.5 * (num / den).ln())
}

/// `TE(phi -> X) = TE(phi -> Y) = 1/2 log2(c^2 s + 1)`.
pub fn te_phi_to_x(p: &Lemma2Params) -> f64 {
    p.check();
    half_log_ratio_bits(p.c * p.c * p.sigma_phi_sq + 1.0, 1.0)
}

/// Shared numerator `4 c^2 d^2 s + 2 d^2 + e^2 + 1` (the variance of Z).
fn z_variance(p: &Lemma2Params) -> f64 {
    let (c2, d2, e2) = (p.c * p.c, p.d * p.d, p.e * p.e);
    4.0 * c2 * d2 * p.sigma_phi_sq + 2.0 * d2 + e2 + 1.0
}

/// `TE(phi -> Z)`.
pub fn te_phi_to_z(p: &Lemma2Params) -> f64 {
    p.check();
    let d2 = p.d * p.d;
    half_log_ratio_bits(z_variance(p), 2.0 * d2 + p.e * p.e + 1.0)
}

/// `TE(X -> Z) = TE(Y -> Z)` in the selected denominator variant.
pub fn te_x_to_z(p: &Lemma2Params) -> f64 {
    p.check();
    let cs = p.c * p.c * p.sigma_phi_sq;
    // Var(c phi | X) for the lag-aligned phi sample.
    let v = cs / (cs + 1.0);
    let scale = match p.variant {
        Eq10Variant::Printed => p.d,
        Eq10Variant::Rederived => p.d * p.d,
    };
    let den = scale * v + p.d * p.d + p.e * p.e + 1.0;
    half_log_ratio_bits(z_variance(p), den)
}

/// `(1/2 sigma - 1/2 sqrt(sigma^2 - 4), 1/2 sigma + 1/2 sqrt(sigma^2 - 4))`
/// with `sigma = sqrt(sigma_phi_sq)`.
pub fn xi_bounds(sigma_phi_sq: f64) -> Result<(f64, f64)> {
    if !(sigma_phi_sq >= 4.0) {
        return Err(Error::RegionUndefined(sigma_phi_sq));
    }
    let sigma = sigma_phi_sq.sqrt();
    let root = (sigma_phi_sq - 4.0).sqrt();
    Ok((0.5 * sigma - 0.5 * root, 0.5 * sigma + 0.5 * root))
}

/// Which closed form attains the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    PhiToZ,
    PhiToX,
    XToZ,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PhiToZ => "phi_to_z",
            Self::PhiToX => "phi_to_x",
            Self::XToZ => "x_to_z",
        }
    }
}

/// A labeled case of the `c = d, e = 1` minimum, with the `xi` interval when
/// the case is bounded by it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseRegion {
    pub label: CaseLabel,
    pub xi: Option<(f64, f64)>,
}

/// The case label stated for `(c, sigma_phi_sq)`, or `None` outside every
/// stated case (`c <= 0`, or `sigma_phi_sq >= 4` with `c` outside `[xi1, xi2]`).
pub fn region_label(c: f64, sigma_phi_sq: f64) -> Option<CaseRegion> {
    if !(c > 0.0) {
        return None;
    }
    if sigma_phi_sq < 4.0 {
        let label = if c < 1.0 {
            CaseLabel::PhiToZ
        } else {
            CaseLabel::PhiToX
        };
        return Some(CaseRegion { label, xi: None });
    }
    let (xi1, xi2) = xi_bounds(sigma_phi_sq).ok()?;
    (xi1..=xi2).contains(&c).then_some(CaseRegion {
        label: CaseLabel::XToZ,
        xi: Some((xi1, xi2)),
    })
}

/// Evaluated minimum for `c = d`, `e = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Minimum {
    /// The stated case for this point, if any.
    pub region: Option<CaseRegion>,
    /// Closed form with the smallest value; ties resolve in the order
    /// phi->Z, phi->X, X->Z.
    pub argmin: CaseLabel,
    /// Minimum over the three closed forms, in bits.
    pub value: f64,
    /// `[TE(phi->Z), TE(phi->X), TE(X->Z)]` in bits.
    pub terms: [f64; 3],
}

/// Evaluates the three closed forms at `c = d`, `e = 1` and reports both the
/// direct argmin and the stated case region.
pub fn lemma2_min_term(c: f64, sigma_phi_sq: f64, variant: Eq10Variant) -> Result<Lemma2Minimum> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    if !(sigma_phi_sq > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_phi_sq must be positive, got {sigma_phi_sq}"
        )));
    }
    let p = Lemma2Params::new(c, c, 1.0, sigma_phi_sq).with_variant(variant);
    let terms = [te_phi_to_z(&p), te_phi_to_x(&p), te_x_to_z(&p)];
    let labels = [CaseLabel::PhiToZ, CaseLabel::PhiToX, CaseLabel::XToZ];
    let mut best = 0;
    for i in 1..3 {
        if terms[i] < terms[best] {
            best = i;
        }
    }
    Ok(Lemma2Minimum {
        region: region_label(c, sigma_phi_sq),
        argmin: labels[best],
        value: terms[best],
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn phi_to_x_values() {
        close(
            te_phi_to_x(&Lemma2Params::new(0.0, 1.0, 1.0, 2.0)),
            0.0,
            0.0,
        );
        close(
            te_phi_to_x(&Lemma2Params::new(1.0, 1.0, 1.0, 3.0)),
            1.0,
            1e-15,
        );
        close(
            te_phi_to_x(&Lemma2Params::new(1.0, 1.0, 1.0, 1.0)),
            0.5,
            1e-15,
        );
    }

    #[test]
    fn phi_to_z_values() {
        close(
            te_phi_to_z(&Lemma2Params::new(0.0, 0.7, 0.3, 2.0)),
            0.0,
            1e-15,
        );
        close(
            te_phi_to_z(&Lemma2Params::new(1.0, 1.0, 1.0, 1.0)),
            0.5,
            1e-15,
        );
        close(
            te_phi_to_z(&Lemma2Params::new(0.8, 0.0, 0.3, 2.0)),
            0.0,
            1e-15,
        );
    }

    #[test]
    fn x_to_z_values() {
        for (d, e) in [(0.5, 0.0), (2.0, 1.5)] {
            let p = Lemma2Params::new(0.0, d, e, 1.0);
            let printed = te_x_to_z(&p.with_variant(Eq10Variant::Printed));
            let rederived = te_x_to_z(&p.with_variant(Eq10Variant::Rederived));
            let expected = 0.5 * ((2.0 * d * d + e * e + 1.0) / (d * d + e * e + 1.0)).log2();
            close(printed, expected, 1e-15);
            close(rederived, expected, 1e-15);
        }
        // 1/2 log2(8 / 3.5)
        let p = Lemma2Params::new(1.0, 1.0, 1.0, 1.0);
        close(te_x_to_z(&p), 0.596_322_538_971_197_9, 1e-12);
        close(
            te_x_to_z(&p.with_variant(Eq10Variant::Printed)),
            0.596_322_538_971_197_9,
            1e-12,
        );
        // 1/2 log2(26 / 7) and 1/2 log2(26 / 8)
        let p = Lemma2Params::new(1.0, 2.0, 1.0, 1.0);
        close(
            te_x_to_z(&p.with_variant(Eq10Variant::Printed)),
            0.946_542_398_041_744,
            1e-12,
        );
        close(te_x_to_z(&p), 0.850_219_859_070_546, 1e-12);
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi_bounds(4.0).unwrap(), (1.0, 1.0));
        assert_eq!(xi_bounds(6.25).unwrap(), (0.5, 2.0));
        assert_eq!(xi_bounds(3.0).unwrap_err(), Error::RegionUndefined(3.0));
        for s in [4.0, 5.0, 9.0, 30.0] {
            let (a, b) = xi_bounds(s).unwrap();
            assert!(a <= b);
            close(a * b, 1.0, 1e-12);
        }
    }

    #[test]
    fn stated_regions() {
        let r = lemma2_min_term(0.5, 1.0, Eq10Variant::Rederived).unwrap();
        assert_eq!(r.region.unwrap().label, CaseLabel::PhiToZ);
        let r = lemma2_min_term(2.0, 1.0, Eq10Variant::Rederived).unwrap();
        assert_eq!(r.region.unwrap().label, CaseLabel::PhiToX);
        let r = lemma2_min_term(1.0, 6.25, Eq10Variant::Rederived).unwrap();
        let region = r.region.unwrap();
        assert_eq!(region.label, CaseLabel::XToZ);
        assert_eq!(region.xi, Some((0.5, 2.0)));
        assert!(region_label(3.0, 6.25).is_none());
        assert!(lemma2_min_term(0.0, 1.0, Eq10Variant::Printed).is_err());
    }

    #[test]
    fn min_term_value_is_min_of_terms() {
        for c in [0.1, 0.5, 0.9, 1.5, 3.0] {
            for s in [0.5, 1.0, 6.25] {
                let r = lemma2_min_term(c, s, Eq10Variant::Rederived).unwrap();
                let m = r.terms.iter().copied().fold(f64::INFINITY, f64::min);
                assert_eq!(r.value, m);
            }
        }
        // Direct argmin in the small-variance regime.
        assert_eq!(
            lemma2_min_term(0.5, 1.0, Eq10Variant::Rederived)
                .unwrap()
                .argmin,
            CaseLabel::PhiToZ
        );
        assert_eq!(
            lemma2_min_term(2.0, 1.0, Eq10Variant::Rederived)
                .unwrap()
                .argmin,
            CaseLabel::PhiToX
        );
    }

    #[test]
    fn forms_vanish_at_zero_and_increase_along_c_equals_d() {
        for s in [0.5, 1.0, 4.0, 9.0] {
            for variant in [Eq10Variant::Printed, Eq10Variant::Rederived] {
                let at = |c: f64| {
                    let p = Lemma2Params::new(c, c, 1.0, s).with_variant(variant);
                    [te_phi_to_x(&p), te_phi_to_z(&p), te_x_to_z(&p)]
                };
                assert_eq!(at(0.0), [0.0; 3]);
                let mut prev = at(0.0);
                for i in 1..400 {
                    let cur = at(i as f64 * 0.01);
                    for k in 0..3 {
                        assert!(
                            cur[k] > prev[k],
                            "form {k} not increasing at c = {}",
                            i as f64 * 0.01
                        );
                    }
                    prev = cur;
                }
            }
        }
    }
}
