//! Plug-in entropy and information gain of the poor-call label given token
//! subsets, plus sampled audits of monotonicity and diminishing returns.
//!
//! All quantities are in bits. The conditional term is accumulated over the
//! multiset of cell counts in sorted order, so the result depends only on the
//! partition the subset induces: it is bit-for-bit invariant under subset
//! permutation and record shuffling, and adding a token that does not split
//! any cell leaves the value unchanged.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Labeled, Selections, TokenId};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Largest subset for which a joint table is materialized (2^20 cells).
pub const MAX_SUBSET: usize = 20;

/// Rounding noise floor for comparisons that hold exactly in real arithmetic.
pub const FLOAT_SLACK_BITS: f64 = 1e-12;

/// Information gain in bits, within `[0, H[PC]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct IgValue(f64);

impl IgValue {
    pub fn bits(self) -> f64 {
        self.0
    }
}

/// Binary entropy of a Bernoulli(p) variable, with `0·log 0 = 0`.
pub fn entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(binary_entropy(p))
}

pub(crate) fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

#[inline]
fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `n · H(n1/n)` computed from counts.
#[inline]
fn weighted_entropy(n0: u64, n1: u64) -> f64 {
    xlog2x((n0 + n1) as f64) - xlog2x(n0 as f64) - xlog2x(n1 as f64)
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct CellCount {
    pub n_pc0: u64,
    pub n_pc1: u64,
}

impl CellCount {
    pub fn total(&self) -> u64 {
        self.n_pc0 + self.n_pc1
    }
}

/// Empirical joint distribution of (token subset pattern, poor call).
///
/// Cells are keyed by [`Selections::pattern`] over `subset`, sorted by key;
/// empty cells are not stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JointTable {
    subset: Vec<TokenId>,
    cells: Vec<(u32, CellCount)>,
    total: u64,
}

impl JointTable {
    pub fn from_labeled(data: Labeled<'_>, subset: &[TokenId]) -> Result<Self> {
        if subset.len() > MAX_SUBSET {
            return Err(Error::Capacity(format!(
                "subset of {} tokens exceeds the joint-table cap of {MAX_SUBSET}",
                subset.len()
            )));
        }
        if data.is_empty() {
            return Err(Error::EmptyData("no rated records".into()));
        }
        let mut keys: Vec<u64> = data
            .selections
            .iter()
            .zip(data.poor)
            .map(|(s, &pc)| (u64::from(s.pattern(subset)) << 1) | u64::from(pc))
            .collect();
        keys.sort_unstable();

        let mut cells: Vec<(u32, CellCount)> = Vec::new();
        for key in keys {
            let pattern = (key >> 1) as u32;
            let cell = match cells.last_mut() {
                Some((p, c)) if *p == pattern => c,
                _ => {
                    cells.push((pattern, CellCount::default()));
                    &mut cells.last_mut().unwrap().1
                }
            };
            if key & 1 == 1 {
                cell.n_pc1 += 1;
            } else {
                cell.n_pc0 += 1;
            }
        }
        Ok(Self {
            subset: subset.to_vec(),
            cells,
            total: data.len() as u64,
        })
    }

    pub fn subset(&self) -> &[TokenId] {
        &self.subset
    }

    pub fn cells(&self) -> &[(u32, CellCount)] {
        &self.cells
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, pattern: u32) -> Option<CellCount> {
        self.cells
            .binary_search_by_key(&pattern, |(p, _)| *p)
            .ok()
            .map(|i| self.cells[i].1)
    }

    /// Counts of the poor-call label ignoring tokens.
    pub fn marginal(&self) -> CellCount {
        self.cells
            .iter()
            .fold(CellCount::default(), |acc, (_, c)| CellCount {
                n_pc0: acc.n_pc0 + c.n_pc0,
                n_pc1: acc.n_pc1 + c.n_pc1,
            })
    }

    /// `H[PC]` in bits.
    pub fn label_entropy(&self) -> f64 {
        let m = self.marginal();
        weighted_entropy(m.n_pc0, m.n_pc1) / self.total as f64
    }

    /// `H[PC | subset]` in bits. With `alpha > 0` each cell's poor-call rate
    /// is smoothed to `(n1 + α) / (n + 2α)`.
    pub fn conditional_entropy(&self, alpha: f64) -> f64 {
        self.weighted_conditional(alpha) / self.total as f64
    }

    /// Unnormalized conditional term, summed over the sorted multiset of cells.
    fn weighted_conditional(&self, alpha: f64) -> f64 {
        let mut counts: Vec<CellCount> = self.cells.iter().map(|(_, c)| *c).collect();
        counts.sort_unstable();
        counts
            .chunk_by(|a, b| a == b)
            .map(|group| {
                let c = group[0];
                let per_cell = if alpha > 0.0 {
                    let n = c.total() as f64;
                    n * binary_entropy((c.n_pc1 as f64 + alpha) / (n + 2.0 * alpha))
                } else {
                    weighted_entropy(c.n_pc0, c.n_pc1)
                };
                group.len() as f64 * per_cell
            })
            .sum()
    }

    /// Plug-in `IG[PC; subset] = H[PC] - H[PC | subset]`, clamped to `[0, H[PC]]`.
    pub fn information_gain(&self, alpha: f64) -> IgValue {
        let m = self.marginal();
        let h = weighted_entropy(m.n_pc0, m.n_pc1);
        let gain = (h - self.weighted_conditional(alpha)) / self.total as f64;
        IgValue(gain.clamp(0.0, h / self.total as f64))
    }
}

pub fn build_joint(dataset: &Dataset, subset: &[TokenId]) -> Result<JointTable> {
    dataset.catalog().check_subset(subset)?;
    JointTable::from_labeled(dataset.labeled(), subset)
}

/// Unsmoothed plug-in information gain of `subset` about the poor-call label.
pub fn information_gain(dataset: &Dataset, subset: &[TokenId]) -> Result<IgValue> {
    information_gain_smoothed(dataset, subset, 0.0)
}

pub fn information_gain_smoothed(
    dataset: &Dataset,
    subset: &[TokenId],
    alpha: f64,
) -> Result<IgValue> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::Parameter(format!(
            "smoothing alpha {alpha} must be >= 0"
        )));
    }
    Ok(build_joint(dataset, subset)?.information_gain(alpha))
}

/// Information gain over pre-extracted labeled rows; ids are not validated.
pub fn labeled_information_gain(data: Labeled<'_>, subset: &[TokenId]) -> Result<IgValue> {
    Ok(JointTable::from_labeled(data, subset)?.information_gain(0.0))
}

/// Outcome of a sampled property audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub trials: usize,
    pub violations: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl AuditReport {
    pub fn violation_fraction(&self) -> f64 {
        self.violations as f64 / self.trials as f64
    }

    fn from_excesses(excesses: &[f64], tolerance: f64, seed: u64) -> Self {
        Self {
            trials: excesses.len(),
            violations: excesses.iter().filter(|&&e| e > tolerance).count(),
            max_violation: excesses.iter().copied().fold(0.0, f64::max),
            tolerance,
            seed,
        }
    }
}

fn random_subset(rng: &mut crate::rng::Rng, pool: &[TokenId], size: usize) -> Vec<TokenId> {
    sample(rng, pool.len(), size)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Samples chains `T1 ⊆ T2` and checks `IG(T1) <= IG(T2)`.
///
/// Plug-in conditioning on a finer partition never raises the conditional
/// entropy, so the only admissible violations are rounding noise; anything
/// above [`FLOAT_SLACK_BITS`] is counted.
pub fn audit_monotonicity(dataset: &Dataset, trials: usize, seed: u64) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::Parameter("audit needs at least one trial".into()));
    }
    let data = dataset.labeled();
    if data.is_empty() {
        return Err(Error::EmptyData("no rated records".into()));
    }
    let universe: Vec<TokenId> = (0..dataset.catalog().len()).collect();
    let cap = universe.len().min(MAX_SUBSET);
    let excesses = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial as u64);
            let outer_size = rng.random_range(0..=cap);
            let outer = random_subset(&mut rng, &universe, outer_size);
            let inner_size = rng.random_range(0..=outer_size);
            let inner = random_subset(&mut rng, &outer, inner_size);
            let small = labeled_information_gain(data, &inner)?.bits();
            let large = labeled_information_gain(data, &outer)?.bits();
            Ok((small - large).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AuditReport::from_excesses(
        &excesses,
        FLOAT_SLACK_BITS,
        seed,
    ))
}

/// `IG(base ∪ {e}) - IG(base)`.
pub fn marginal_gain(data: Labeled<'_>, base: &[TokenId], e: TokenId) -> Result<f64> {
    let mut with = base.to_vec();
    with.push(e);
    Ok(
        labeled_information_gain(data, &with)?.bits()
            - labeled_information_gain(data, base)?.bits(),
    )
}

/// Diminishing-returns excess for one triple: how much the gain of `e` on
/// the superset exceeds its gain on the subset (0 when the property holds).
pub fn submodularity_excess(
    data: Labeled<'_>,
    small: &[TokenId],
    large: &[TokenId],
    e: TokenId,
) -> Result<f64> {
    let on_small = marginal_gain(data, small, e)?;
    let on_large = marginal_gain(data, large, e)?;
    Ok((on_large - on_small).max(0.0))
}

/// Samples triples `T1 ⊆ T2`, `e ∉ T2` and counts those where the gain of
/// `e` on `T2` exceeds its gain on `T1` by more than `tolerance`.
pub fn audit_submodularity(
    dataset: &Dataset,
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::Parameter("audit needs at least one trial".into()));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::Parameter(format!(
            "tolerance {tolerance} must be >= 0"
        )));
    }
    let data = dataset.labeled();
    if data.is_empty() {
        return Err(Error::EmptyData("no rated records".into()));
    }
    let n = dataset.catalog().len();
    let universe: Vec<TokenId> = (0..n).collect();
    let cap = (n - 1).min(MAX_SUBSET - 1);
    let excesses = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial as u64);
            let outer_size = rng.random_range(0..=cap);
            let outer = random_subset(&mut rng, &universe, outer_size);
            let inner_size = rng.random_range(0..=outer_size);
            let inner = random_subset(&mut rng, &outer, inner_size);
            let members = Selections::from_ids(outer.iter().copied());
            let rest: Vec<TokenId> = universe
                .iter()
                .copied()
                .filter(|&t| !members.contains(t))
                .collect();
            let e = rest[rng.random_range(0..rest.len())];
            submodularity_excess(data, &inner, &outer, e)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AuditReport::from_excesses(&excesses, tolerance, seed))
}
