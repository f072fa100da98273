//! Gaussian transfer entropy: closed forms for the benchmark network with
//! `a = b = 0`, and an exact evaluator working from stationary covariances.

mod analytic;
mod oracle;

pub use analytic::{
    lemma2_min_term, region_label, te_phi_to_x, te_phi_to_z, te_x_to_z, xi_bounds, CaseLabel,
    CaseRegion, Eq10Variant, Lemma2Minimum, Lemma2Params,
};
pub use oracle::{
    exact_te_linear, gaussian_cmi_from_cov, log_det_spd, stationary_autocov, StationaryCov,
};

/// Natural log to bits.
pub(crate) fn nats_to_bits(nats: f64) -> f64 {
    nats * std::f64::consts::LOG2_E
}
