//! Simulation of linear Gaussian networks with lagged couplings.
//!
//! Two entry points are provided: the five-process benchmark network
//! ([`simulate_benchmark`]) written out equation by equation, and a generic
//! network driven by a coupling list ([`simulate_lag_network`]). Both share
//! the same noise policy: process `i` draws its innovations from its own
//! ChaCha stream `(seed, i)`, so adding a process never perturbs the sample
//! paths of the others.

use nalgebra::{DMatrix, Schur};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::TimeSeriesPanel;

pub const DEFAULT_BURN_IN: usize = 1000;

/// Channel order of the benchmark network.
pub const BENCHMARK_LABELS: [&str; 5] = ["psi", "phi", "X", "Y", "Z"];
pub const PSI: usize = 0;
pub const PHI: usize = 1;
pub const X: usize = 2;
pub const Y: usize = 3;
pub const Z: usize = 4;

/// Parameters of the benchmark network
///
/// ```text
/// psi[k+1] = a psi[k] + W
/// phi[k+1] = a phi[k] + W
/// X[k+1]   = b X[k] + c phi[k-1] + W
/// Y[k+1]   = b Y[k] + c phi[k-1] + W
/// Z[k+1]   = b Z[k] + d X[k-1] + d Y[k-1] + e psi[k-1] + W
/// ```
///
/// `noise_std` is indexed in [`BENCHMARK_LABELS`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinSysParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub noise_std: [f64; 5],
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl LinSysParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, length: usize, seed: u64) -> Self {
        Self {
            a,
            b,
            c,
            d,
            e,
            noise_std: [1.0; 5],
            length,
            burn_in: DEFAULT_BURN_IN,
            seed,
        }
    }

    /// Coefficients of the worked example: `a = d = e = 1/3`, `b = 1/5`, `c = 1/2`.
    pub fn example_one(length: usize, seed: u64) -> Self {
        Self::new(1.0 / 3.0, 0.2, 0.5, 1.0 / 3.0, 1.0 / 3.0, length, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.abs() < 1.0 && self.b.abs() < 1.0) {
            return Err(Error::Unstable(format!(
                "|a| and |b| must be below 1 (a = {}, b = {})",
                self.a, self.b
            )));
        }
        for v in [self.a, self.b, self.c, self.d, self.e] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig("non-finite coefficient".into()));
            }
        }
        validate_noise(&self.noise_std)?;
        if self.length == 0 {
            return Err(Error::InvalidConfig("length must be at least 1".into()));
        }
        Ok(())
    }

    /// The same network as a generic coupling list.
    ///
    /// Couplings are listed in the summation order used by
    /// [`simulate_benchmark`], and zero gains are kept so the maximum lag is
    /// always 2.
    pub fn to_lag_spec(&self) -> LagCouplingSpec {
        let c = |from, to, lag, gain| Coupling {
            from,
            to,
            lag,
            gain,
        };
        LagCouplingSpec {
            n_processes: 5,
            couplings: vec![
                c(PSI, PSI, 1, self.a),
                c(PHI, PHI, 1, self.a),
                c(X, X, 1, self.b),
                c(PHI, X, 2, self.c),
                c(Y, Y, 1, self.b),
                c(PHI, Y, 2, self.c),
                c(Z, Z, 1, self.b),
                c(X, Z, 2, self.d),
                c(Y, Z, 2, self.d),
                c(PSI, Z, 2, self.e),
            ],
            noise_std: self.noise_std.to_vec(),
            length: self.length,
            burn_in: self.burn_in,
            seed: self.seed,
            labels: Some(BENCHMARK_LABELS.iter().map(|s| s.to_string()).collect()),
        }
    }
}

/// `to[k] += gain * from[k - lag]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub from: usize,
    pub to: usize,
    pub lag: usize,
    pub gain: f64,
}

/// A linear network `x[k] = sum_l A_l x[k-l] + W[k]` given as a coupling list.
///
/// Self-feedback terms are couplings with `from == to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCouplingSpec {
    pub n_processes: usize,
    pub couplings: Vec<Coupling>,
    pub noise_std: Vec<f64>,
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Channel labels; `p0, p1, ...` when absent.
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

impl LagCouplingSpec {
    /// Uncoupled unit-variance white noise.
    pub fn white_noise(n_processes: usize, length: usize, seed: u64) -> Self {
        Self {
            n_processes,
            couplings: Vec::new(),
            noise_std: vec![1.0; n_processes],
            length,
            burn_in: DEFAULT_BURN_IN,
            seed,
            labels: None,
        }
    }

    pub fn max_lag(&self) -> usize {
        self.couplings
            .iter()
            .map(|c| c.lag)
            .max()
            .unwrap_or(1)
            .max(1)
    }

    pub fn labels(&self) -> Vec<String> {
        match &self.labels {
            Some(l) => l.clone(),
            None => (0..self.n_processes).map(|i| format!("p{i}")).collect(),
        }
    }

    /// Lag coefficient matrices `A_1..A_p`, `A_l[to][from]`.
    pub fn lag_matrices(&self) -> Vec<DMatrix<f64>> {
        let n = self.n_processes;
        let mut mats = vec![DMatrix::zeros(n, n); self.max_lag()];
        for c in &self.couplings {
            mats[c.lag - 1][(c.to, c.from)] += c.gain;
        }
        mats
    }

    /// Companion-form transition matrix of the stacked state
    /// `[x[k], x[k-1], ..., x[k-p+1]]`.
    pub fn companion(&self) -> DMatrix<f64> {
        let n = self.n_processes;
        let p = self.max_lag();
        let mut f = DMatrix::zeros(n * p, n * p);
        for (l, a) in self.lag_matrices().iter().enumerate() {
            f.view_mut((0, l * n), (n, n)).copy_from(a);
        }
        for i in n..n * p {
            f[(i, i - n)] = 1.0;
        }
        f
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(self.companion())
    }

    /// Checks structure and stability.
    pub fn validate(&self) -> Result<()> {
        if self.n_processes == 0 {
            return Err(Error::InvalidConfig("at least one process required".into()));
        }
        if self.noise_std.len() != self.n_processes {
            return Err(Error::InvalidConfig(format!(
                "{} noise scales for {} processes",
                self.noise_std.len(),
                self.n_processes
            )));
        }
        validate_noise(&self.noise_std)?;
        if let Some(labels) = &self.labels {
            if labels.len() != self.n_processes {
                return Err(Error::InvalidConfig("label count mismatch".into()));
            }
        }
        for c in &self.couplings {
            if c.lag == 0 {
                return Err(Error::InvalidConfig(
                    "coupling lag must be at least 1".into(),
                ));
            }
            if c.from >= self.n_processes || c.to >= self.n_processes {
                return Err(Error::InvalidConfig(format!(
                    "coupling {} -> {} references a missing process",
                    c.from, c.to
                )));
            }
            if !c.gain.is_finite() {
                return Err(Error::InvalidConfig("non-finite gain".into()));
            }
        }
        if self.length == 0 {
            return Err(Error::InvalidConfig("length must be at least 1".into()));
        }
        let rho = self.spectral_radius();
        if !(rho < 1.0) {
            return Err(Error::Unstable(format!("spectral radius {rho:.6} >= 1")));
        }
        Ok(())
    }
}

/// Largest eigenvalue modulus. Falls back to Gelfand's formula
/// `lim ||F^m||^(1/m)` when the Schur iteration does not converge.
fn spectral_radius(f: DMatrix<f64>) -> f64 {
    if f.amax() == 0.0 {
        return 0.0;
    }
    if let Some(schur) = Schur::try_new(f.clone(), f64::EPSILON, 10_000) {
        return schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    }
    let mut b = f;
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..40 {
        let norm = b.norm();
        if norm == 0.0 {
            return 0.0;
        }
        b /= norm;
        log_scale += norm.ln() / power;
        b = &b * &b;
        power *= 2.0;
    }
    (log_scale + b.norm().ln() / power).exp()
}

fn validate_noise(noise_std: &[f64]) -> Result<()> {
    if noise_std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidConfig(
            "noise standard deviations must be positive".into(),
        ));
    }
    Ok(())
}

/// One innovation stream per process.
struct NoiseStreams {
    rngs: Vec<ChaCha8Rng>,
    scale: Vec<f64>,
}

impl NoiseStreams {
    fn new(seed: u64, noise_std: &[f64]) -> Self {
        let rngs = (0..noise_std.len())
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        Self {
            rngs,
            scale: noise_std.to_vec(),
        }
    }

    fn draw(&mut self, process: usize) -> f64 {
        let w: f64 = StandardNormal.sample(&mut self.rngs[process]);
        self.scale[process] * w
    }
}

/// Keeps the last `length` steps of a run of `steps` rows of `n` processes.
fn into_panel(
    states: Vec<Vec<f64>>,
    length: usize,
    labels: Vec<String>,
) -> Result<TimeSeriesPanel> {
    let start = states.len() - length;
    let n = labels.len();
    let channels = (0..n)
        .map(|i| states[start..].iter().map(|row| row[i]).collect())
        .collect();
    TimeSeriesPanel::new(labels, channels)
}

/// Simulates the five-process benchmark network.
///
/// States before step 2 are zero, the first `burn_in` generated samples are
/// discarded, and the output is a panel labeled [`BENCHMARK_LABELS`].
pub fn simulate_benchmark(p: &LinSysParams) -> Result<TimeSeriesPanel> {
    p.validate()?;
    let mut noise = NoiseStreams::new(p.seed, &p.noise_std);
    let warmup = 2;
    let steps = warmup + p.burn_in + p.length;
    let mut x = vec![vec![0.0; 5]; steps];
    for k in warmup..steps {
        let (prev, lag2) = (&x[k - 1], &x[k - 2]);
        let mut next = [0.0; 5];
        next[PSI] = p.a * prev[PSI];
        next[PHI] = p.a * prev[PHI];
        next[X] = p.b * prev[X] + p.c * lag2[PHI];
        next[Y] = p.b * prev[Y] + p.c * lag2[PHI];
        next[Z] = p.b * prev[Z] + p.d * lag2[X] + p.d * lag2[Y] + p.e * lag2[PSI];
        for (i, v) in next.iter_mut().enumerate() {
            *v += noise.draw(i);
        }
        x[k] = next.to_vec();
    }
    into_panel(
        x,
        p.length,
        BENCHMARK_LABELS.iter().map(|s| s.to_string()).collect(),
    )
}

/// Simulates a generic lagged linear network from zero initial state.
pub fn simulate_lag_network(s: &LagCouplingSpec) -> Result<TimeSeriesPanel> {
    s.validate()?;
    let n = s.n_processes;
    let warmup = s.max_lag();
    let steps = warmup + s.burn_in + s.length;
    let mut noise = NoiseStreams::new(s.seed, &s.noise_std);
    // Couplings grouped by target, keeping list order for the summation.
    let mut incoming: Vec<Vec<Coupling>> = vec![Vec::new(); n];
    for c in &s.couplings {
        incoming[c.to].push(*c);
    }
    let mut x = vec![vec![0.0; n]; steps];
    for k in warmup..steps {
        let mut next = vec![0.0; n];
        for (to, v) in next.iter_mut().enumerate() {
            for c in &incoming[to] {
                *v += c.gain * x[k - c.lag][c.from];
            }
            *v += noise.draw(to);
        }
        x[k] = next;
    }
    into_panel(x, s.length, s.labels())
}

/// Stationary variance `noise_var / (1 - a^2)` of an AR(1) process.
pub fn stationary_variance_ar1(a: f64, noise_var: f64) -> Result<f64> {
    if !(a.abs() < 1.0) {
        return Err(Error::Unstable(format!("|a| = {} >= 1", a.abs())));
    }
    if !(noise_var > 0.0) {
        return Err(Error::InvalidConfig(
            "noise variance must be positive".into(),
        ));
    }
    Ok(noise_var / (1.0 - a * a))
}
