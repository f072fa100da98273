//! Exact information measures on finite-alphabet distributions.
//!
//! All quantities are in bits; zero-probability outcomes contribute nothing.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// A probability mass function over tuples of symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf {
    outcomes: Vec<Vec<u32>>,
    probs: Vec<f64>,
}

impl FinitePmf {
    pub fn new(outcomes: Vec<Vec<u32>>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::InvalidPmf(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidPmf("no outcomes".into()));
        }
        let arity = outcomes[0].len();
        if outcomes.iter().any(|o| o.len() != arity) {
            return Err(Error::InvalidPmf("outcome tuples differ in length".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidPmf(format!(
                "probability {p} is not in [0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidPmf(format!("probabilities sum to {total}")));
        }
        let mut sorted = outcomes.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPmf("duplicate outcome".into()));
        }
        Ok(Self { outcomes, probs })
    }

    /// A pmf over single symbols `0..probs.len()`.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        Self::new(
            (0..probs.len() as u32).map(|s| vec![s]).collect(),
            probs.to_vec(),
        )
    }

    /// Uniform pmf over `size` single symbols.
    pub fn uniform(size: usize) -> Result<Self> {
        Self::from_probs(&vec![1.0 / size as f64; size])
    }

    pub fn outcomes(&self) -> &[Vec<u32>] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of symbols in each outcome tuple.
    pub fn arity(&self) -> usize {
        self.outcomes[0].len()
    }

    /// Marginal over the listed tuple coordinates, in the listed order.
    pub fn marginal(&self, coords: &[usize]) -> Result<Self> {
        if let Some(&c) = coords.iter().find(|&&c| c >= self.arity()) {
            return Err(Error::InvalidPmf(format!(
                "coordinate {c} out of range for arity {}",
                self.arity()
            )));
        }
        let table = self.marginal_table(coords);
        let (outcomes, probs) = table.into_iter().unzip();
        Ok(Self { outcomes, probs })
    }

    fn marginal_table(&self, coords: &[usize]) -> BTreeMap<Vec<u32>, f64> {
        let mut table = BTreeMap::new();
        for (o, &p) in self.outcomes.iter().zip(&self.probs) {
            let key: Vec<u32> = coords.iter().map(|&c| o[c]).collect();
            *table.entry(key).or_insert(0.0) += p;
        }
        table
    }

    /// Joint pmf of independent variables, outcome tuples concatenated.
    pub fn product(parts: &[&FinitePmf]) -> Result<Self> {
        let mut outcomes = vec![Vec::new()];
        let mut probs = vec![1.0];
        for part in parts {
            let mut next_o = Vec::with_capacity(outcomes.len() * part.outcomes.len());
            let mut next_p = Vec::with_capacity(next_o.capacity());
            for (o, p) in outcomes.iter().zip(&probs) {
                for (q, r) in part.outcomes.iter().zip(&part.probs) {
                    let mut t = o.clone();
                    t.extend_from_slice(q);
                    next_o.push(t);
                    next_p.push(p * r);
                }
            }
            outcomes = next_o;
            probs = next_p;
        }
        Self::new(outcomes, probs)
    }
}

fn plogp_sum<'a>(probs: impl IntoIterator<Item = &'a f64>) -> f64 {
    -probs
        .into_iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Shannon entropy in bits.
pub fn entropy(p: &FinitePmf) -> f64 {
    plogp_sum(&p.probs).max(0.0)
}

/// Entropy of the sub-tuple given by `coords`.
fn entropy_of(joint: &FinitePmf, coords: &[usize]) -> f64 {
    plogp_sum(joint.marginal_table(coords).values()).max(0.0)
}

/// `I(X;Y)` where X and Y are the coordinate groups `x` and `y` of each
/// outcome tuple. Groups may overlap.
pub fn mutual_information_between(joint: &FinitePmf, x: &[usize], y: &[usize]) -> Result<f64> {
    if let Some(&c) = x.iter().chain(y).find(|&&c| c >= joint.arity()) {
        return Err(Error::InvalidPmf(format!("coordinate {c} out of range")));
    }
    let mut both: Vec<usize> = x.iter().chain(y).copied().collect();
    both.sort_unstable();
    both.dedup();
    let mi = entropy_of(joint, x) + entropy_of(joint, y) - entropy_of(joint, &both);
    Ok(mi.max(0.0))
}

/// `I(X;Y)` for a joint pmf over pairs `(x, y)`.
pub fn mutual_information(joint: &FinitePmf) -> Result<f64> {
    if joint.arity() != 2 {
        return Err(Error::InvalidPmf(format!(
            "expected pairs, got {}-tuples",
            joint.arity()
        )));
    }
    mutual_information_between(joint, &[0], &[1])
}

/// Three independent variables `A`, `B`, `C` and the composites
/// `X = (A, B)`, `Y = (A, C)`, `Z = (B, C)`.
///
/// For this family the minimal sufficient statistics are known in closed
/// form: `T_XY = A`, `T_XZ = B`, `T_YZ = C`.
#[derive(Debug, Clone)]
pub struct TripleExample {
    pub pmf_a: FinitePmf,
    pub pmf_b: FinitePmf,
    pub pmf_c: FinitePmf,
}

/// Coordinates of A, B, C inside [`TripleExample::joint`].
const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const X: [usize; 2] = [A, B];
const Y: [usize; 2] = [A, C];
const Z: [usize; 2] = [B, C];

impl TripleExample {
    pub fn new(pmf_a: FinitePmf, pmf_b: FinitePmf, pmf_c: FinitePmf) -> Result<Self> {
        for p in [&pmf_a, &pmf_b, &pmf_c] {
            if p.arity() != 1 {
                return Err(Error::InvalidPmf(
                    "components must be single symbols".into(),
                ));
            }
        }
        Ok(Self {
            pmf_a,
            pmf_b,
            pmf_c,
        })
    }

    /// A, B, C all fair bits.
    pub fn fair_bits() -> Self {
        let bit = FinitePmf::uniform(2).expect("uniform pmf");
        Self {
            pmf_a: bit.clone(),
            pmf_b: bit.clone(),
            pmf_c: bit,
        }
    }

    /// Joint pmf of `(A, B, C)`.
    pub fn joint(&self) -> Result<FinitePmf> {
        FinitePmf::product(&[&self.pmf_a, &self.pmf_b, &self.pmf_c])
    }

    /// Joint pmf of `(X, Y, Z)` with each composite encoded as one symbol,
    /// e.g. `x = a * |B| + b`.
    pub fn composite_joint(&self) -> Result<FinitePmf> {
        let size = |p: &FinitePmf| p.outcomes().iter().map(|o| o[0] + 1).max().unwrap_or(0);
        let (nb, nc) = (size(&self.pmf_b), size(&self.pmf_c));
        let joint = self.joint()?;
        let outcomes = joint
            .outcomes()
            .iter()
            .map(|o| vec![o[A] * nb + o[B], o[A] * nc + o[C], o[B] * nc + o[C]])
            .collect();
        FinitePmf::new(outcomes, joint.probs().to_vec())
    }

    /// `(I(X;Y), I(X;Z), I(Y;Z))`.
    pub fn pairwise_mi(&self) -> Result<[f64; 3]> {
        let joint = self.joint()?;
        Ok([
            mutual_information_between(&joint, &X, &Y)?,
            mutual_information_between(&joint, &X, &Z)?,
            mutual_information_between(&joint, &Y, &Z)?,
        ])
    }
}

/// Minimum pairwise mutual information among X, Y and Z.
pub fn pairwise_min_mi(t: &TripleExample) -> Result<f64> {
    Ok(t.pairwise_mi()?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Redundancy as the minimum pairwise mutual information among the minimal
/// sufficient statistics `T_XY = A`, `T_XZ = B`, `T_YZ = C`.
pub fn mss_redundancy(t: &TripleExample) -> Result<f64> {
    let joint = t.joint()?;
    let txy_txz = mutual_information_between(&joint, &[A], &[B])?;
    let txz_tyz = mutual_information_between(&joint, &[B], &[C])?;
    let txy_tyz = mutual_information_between(&joint, &[A], &[C])?;
    Ok(txy_txz.min(txz_tyz).min(txy_tyz))
}

/// Specific information `I(X; Z=z) = sum_x p(x|z) log2(p(x|z) / p(x))` for
/// every outcome `z`, keyed by `z`.
///
/// `joint` is over pairs `(x, z)`.
fn specific_information(joint: &BTreeMap<(u32, u32), f64>) -> BTreeMap<u32, f64> {
    let mut px: BTreeMap<u32, f64> = BTreeMap::new();
    let mut pz: BTreeMap<u32, f64> = BTreeMap::new();
    for (&(x, z), &p) in joint {
        *px.entry(x).or_default() += p;
        *pz.entry(z).or_default() += p;
    }
    let mut out: BTreeMap<u32, f64> = pz.keys().map(|&z| (z, 0.0)).collect();
    for (&(x, z), &p) in joint {
        if p > 0.0 {
            let cond = p / pz[&z];
            *out.get_mut(&z).expect("z present") += cond * (cond / px[&x]).log2();
        }
    }
    out
}

/// Average over outcomes of `Z` of the smaller specific information that `Z = z`
/// carries about `X` and about `Y`.
///
/// `joint` is over triples `(x, y, z)`. The specific information uses `p(x)` in
/// the log denominator.
pub fn i_min_discrete(joint: &FinitePmf) -> Result<f64> {
    if joint.arity() != 3 {
        return Err(Error::InvalidPmf(format!(
            "expected (x, y, z) triples, got {}-tuples",
            joint.arity()
        )));
    }
    let mut xz: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut yz: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut pz: BTreeMap<u32, f64> = BTreeMap::new();
    for (o, &p) in joint.outcomes.iter().zip(&joint.probs) {
        *xz.entry((o[0], o[2])).or_default() += p;
        *yz.entry((o[1], o[2])).or_default() += p;
        *pz.entry(o[2]).or_default() += p;
    }
    let ix = specific_information(&xz);
    let iy = specific_information(&yz);
    let total: f64 = pz
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|(z, &p)| p * ix[z].min(iy[z]))
        .sum();
    Ok(total.max(0.0))
}
