use nalgebra::DMatrix;

use super::nats_to_bits;
use crate::error::{Error, Result};
use crate::linsim::LagCouplingSpec;
use crate::panel::ProcessId;

/// Pivots below this fraction of the largest pivot mark a singular matrix.
const PIVOT_RATIO: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 64;

/// Log-determinant (natural log) of a symmetric positive definite matrix via
/// an `L D L^T` factorization.
pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::SingularCovariance);
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = m[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > 0.0) || !dj.is_finite() {
            return Err(Error::SingularCovariance);
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    let largest = d.iter().copied().fold(0.0, f64::max);
    if d.iter().any(|&p| p < PIVOT_RATIO * largest) {
        return Err(Error::SingularCovariance);
    }
    Ok(d.iter().map(|p| p.ln()).sum())
}

fn sub_log_det(cov: &DMatrix<f64>, idx: &[usize]) -> Result<f64> {
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| cov[(idx[r], idx[c])]);
    log_det_spd(&sub)
}

/// Conditional mutual information `I(X; Y | Z)` in bits for jointly Gaussian
/// variables with covariance `cov`; `x`, `y`, `z` index into `cov`.
///
/// An empty `z` gives the ordinary mutual information.
pub fn gaussian_cmi_from_cov(
    cov: &DMatrix<f64>,
    x: &[usize],
    y: &[usize],
    z: &[usize],
) -> Result<f64> {
    let n = cov.nrows();
    if cov.ncols() != n || x.iter().chain(y).chain(z).any(|&i| i >= n) {
        return Err(Error::InvalidConfig(
            "index outside covariance matrix".into(),
        ));
    }
    let join = |a: &[usize], b: &[usize]| -> Vec<usize> { a.iter().chain(b).copied().collect() };
    let xz = join(x, z);
    let yz = join(y, z);
    let xyz = join(&xz, y);
    let nats = 0.5
        * (sub_log_det(cov, &xz)? + sub_log_det(cov, &yz)?
            - sub_log_det(cov, z)?
            - sub_log_det(cov, &xyz)?);
    Ok(nats_to_bits(nats).max(0.0))
}

/// Exact lag autocovariances `Gamma(h) = E[x[t+h] x[t]^T]` for `h = 0..=H`
/// of a stationary linear network.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryCov {
    pub labels: Vec<String>,
    blocks: Vec<DMatrix<f64>>,
}

impl StationaryCov {
    pub fn max_lag(&self) -> usize {
        self.blocks.len() - 1
    }

    /// `Gamma(h)`; negative lags return the transpose of `Gamma(-h)`.
    pub fn gamma(&self, h: isize) -> DMatrix<f64> {
        let block = &self.blocks[h.unsigned_abs()];
        if h >= 0 {
            block.clone()
        } else {
            block.transpose()
        }
    }

    /// `Cov(x_i[t_i], x_j[t_j])`.
    pub fn cov(&self, i: usize, t_i: isize, j: usize, t_j: isize) -> f64 {
        let h = t_i - t_j;
        if h >= 0 {
            self.blocks[h as usize][(i, j)]
        } else {
            self.blocks[(-h) as usize][(j, i)]
        }
    }

    /// Covariance matrix of the listed `(process, time)` variables.
    pub fn covariance_of(&self, vars: &[(usize, isize)]) -> DMatrix<f64> {
        DMatrix::from_fn(vars.len(), vars.len(), |r, c| {
            let (i, ti) = vars[r];
            let (j, tj) = vars[c];
            self.cov(i, ti, j, tj)
        })
    }
}

/// Solves `S = F S F^T + Q` for the companion-form state covariance by
/// repeated squaring, then propagates `Gamma(h) = (F^h S)` restricted to the
/// current-state block.
pub fn stationary_autocov(spec: &LagCouplingSpec, max_lag: usize) -> Result<StationaryCov> {
    spec.validate()?;
    let n = spec.n_processes;
    let f = spec.companion();
    let dim = f.nrows();
    let mut s = DMatrix::<f64>::zeros(dim, dim);
    for (i, sd) in spec.noise_std.iter().enumerate() {
        s[(i, i)] = sd * sd;
    }
    let mut a = f.clone();
    let mut converged = false;
    for _ in 0..MAX_DOUBLINGS {
        s += &a * &s * a.transpose();
        a = &a * &a;
        if a.amax() < 1e-18 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Unstable(
            "Lyapunov iteration did not converge".into(),
        ));
    }
    let s = (&s + s.transpose()) * 0.5;
    let mut blocks = Vec::with_capacity(max_lag + 1);
    let mut cur = s;
    blocks.push(cur.view((0, 0), (n, n)).into_owned());
    for _ in 0..max_lag {
        cur = &f * &cur;
        blocks.push(cur.view((0, 0), (n, n)).into_owned());
    }
    Ok(StationaryCov {
        labels: spec.labels(),
        blocks,
    })
}

/// `I(source[t-1..t-L]; target[t] | target[t-1..t-L])` in bits from the exact
/// stationary covariance of a linear Gaussian network.
pub fn exact_te_linear(
    spec: &LagCouplingSpec,
    source: ProcessId,
    target: ProcessId,
    history_len: usize,
) -> Result<f64> {
    if history_len == 0 {
        return Err(Error::InvalidConfig(
            "history length must be at least 1".into(),
        ));
    }
    if source == target {
        return Err(Error::SameProcess(source.0));
    }
    for id in [source, target] {
        if id.0 >= spec.n_processes {
            return Err(Error::InvalidProcess {
                index: id.0,
                channels: spec.n_processes,
            });
        }
    }
    let acov = stationary_autocov(spec, history_len)?;
    let lags = 1..=history_len as isize;
    let mut vars = vec![(target.0, 0)];
    vars.extend(lags.clone().map(|l| (target.0, -l)));
    vars.extend(lags.map(|l| (source.0, -l)));
    let cov = acov.covariance_of(&vars);
    let present = [0];
    let target_past: Vec<usize> = (1..=history_len).collect();
    let source_past: Vec<usize> = (history_len + 1..=2 * history_len).collect();
    gaussian_cmi_from_cov(&cov, &source_past, &present, &target_past)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{te_phi_to_x, te_phi_to_z, Lemma2Params};
    use crate::linsim::{Coupling, LinSysParams, PHI, X, Z};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn log_det_matches_known() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        close(log_det_spd(&m).unwrap(), 3f64.ln(), 1e-15);
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(log_det_spd(&sing).unwrap_err(), Error::SingularCovariance);
        let near = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert_eq!(log_det_spd(&near).unwrap_err(), Error::SingularCovariance);
    }

    #[test]
    fn cmi_examples() {
        let block = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        close(
            gaussian_cmi_from_cov(&block, &[0], &[1], &[]).unwrap(),
            0.0,
            1e-15,
        );
        let rho = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        // -1/2 log2(1 - 0.25)
        close(
            gaussian_cmi_from_cov(&rho, &[0], &[1], &[]).unwrap(),
            0.207_518_749_639_422,
            1e-12,
        );
        // X = phi + n1, Y = phi + n2, order (X, Y, phi)
        let common = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0]);
        close(
            gaussian_cmi_from_cov(&common, &[0], &[1], &[2]).unwrap(),
            0.0,
            1e-12,
        );
        assert!(gaussian_cmi_from_cov(&common, &[0], &[1], &[2]).unwrap() >= 0.0);
    }

    #[test]
    fn white_noise_autocov() {
        let mut s = LagCouplingSpec::white_noise(3, 10, 0);
        s.noise_std = vec![1.0, 2.0, 0.5];
        let acov = stationary_autocov(&s, 3).unwrap();
        assert_eq!(
            acov.gamma(0),
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0, 0.25]))
        );
        for h in 1..=3 {
            assert_eq!(acov.gamma(h).amax(), 0.0);
        }
    }

    #[test]
    fn ar1_autocov() {
        let mut s = LagCouplingSpec::white_noise(1, 10, 0);
        s.couplings.push(Coupling {
            from: 0,
            to: 0,
            lag: 1,
            gain: 1.0 / 3.0,
        });
        let acov = stationary_autocov(&s, 2).unwrap();
        close(acov.cov(0, 0, 0, 0), 1.125, 1e-14);
        close(acov.cov(0, 1, 0, 0), 0.375, 1e-14);
        close(acov.cov(0, 0, 0, 1), 0.375, 1e-14);
        close(acov.cov(0, 2, 0, 0), 0.125, 1e-14);
    }

    #[test]
    fn benchmark_z_variance() {
        let (c, d, e, s2) = (0.5, 2.0, 1.0, 4.0f64);
        let mut p = LinSysParams::new(0.0, 0.0, c, d, e, 10, 0);
        p.noise_std[PHI] = s2.sqrt();
        let acov = stationary_autocov(&p.to_lag_spec(), 4).unwrap();
        let expected = 4.0 * d * d * c * c * s2 + 2.0 * d * d + e * e + 1.0;
        close(acov.cov(Z, 0, Z, 0), expected, 1e-12);
    }

    #[test]
    fn exact_te_agrees_with_closed_forms() {
        let (c, d, e, s2) = (1.0, 1.0, 1.0, 1.0f64);
        let mut p = LinSysParams::new(0.0, 0.0, c, d, e, 10, 0);
        p.noise_std[PHI] = s2.sqrt();
        let spec = p.to_lag_spec();
        let lp = Lemma2Params::new(c, d, e, s2);
        close(
            exact_te_linear(&spec, ProcessId(PHI), ProcessId(X), 4).unwrap(),
            te_phi_to_x(&lp),
            1e-9,
        );
        close(
            exact_te_linear(&spec, ProcessId(PHI), ProcessId(Z), 4).unwrap(),
            te_phi_to_z(&lp),
            1e-9,
        );
    }

    #[test]
    fn decoupled_exact_te_is_zero() {
        let s = LagCouplingSpec::white_noise(2, 10, 0);
        close(
            exact_te_linear(&s, ProcessId(0), ProcessId(1), 3).unwrap(),
            0.0,
            1e-12,
        );
        assert_eq!(
            exact_te_linear(&s, ProcessId(1), ProcessId(1), 3).unwrap_err(),
            Error::SameProcess(1)
        );
    }
}
