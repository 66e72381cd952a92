//! Token subset selection strategies.
//!
//! [`select_rits`] grows the subset one token at a time, each time adding the
//! token whose inclusion yields the largest joint information gain about the
//! poor-call label. [`select_rits_lazy`] reaches the same answer with stale
//! upper bounds when gains show diminishing returns. The remaining strategies
//! are baselines ([`select_auc_greedy`], [`select_random`]) and the exact
//! optimum for small catalogs ([`select_exhaustive`]).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Labeled, TokenCatalog, TokenId};
use crate::error::{Error, Result};
use crate::evaluation::{self, SplitPlan};
use crate::infotheory::{audit_submodularity, labeled_information_gain, FLOAT_SLACK_BITS};
use crate::rng::stream_rng;

/// Largest number of subsets [`select_exhaustive`] enumerates by default.
pub const DEFAULT_EXHAUSTIVE_CAP: u64 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Rits,
    RitsLazy,
    AucGreedy,
    Random,
    Exhaustive,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Rits,
        Strategy::RitsLazy,
        Strategy::AucGreedy,
        Strategy::Random,
        Strategy::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Rits => "rits",
            Strategy::RitsLazy => "rits_lazy",
            Strategy::AucGreedy => "auc_greedy",
            Strategy::Random => "random",
            Strategy::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown strategy `{s}`")))
    }
}

/// What the `marginal` field of each step measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainUnit {
    /// Marginal information gain; `cumulative` is the IG of the prefix.
    Bits,
    /// Mean univariate hold-out AUC; `cumulative` is the running sum.
    UnivariateAuc,
    /// No gains recorded.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub token_id: TokenId,
    pub marginal: f64,
    pub cumulative: f64,
}

/// Ordered tokens chosen by a strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionTrace {
    pub strategy: Strategy,
    pub budget_k: usize,
    pub seed: Option<u64>,
    pub gain_unit: GainUnit,
    pub steps: Vec<SelectionStep>,
}

#[derive(Serialize, Deserialize)]
struct StepFile {
    token_id: TokenId,
    label: String,
    marginal: f64,
    cumulative: f64,
}

#[derive(Serialize, Deserialize)]
struct TraceFile {
    strategy: Strategy,
    k: usize,
    seed: Option<u64>,
    gain_unit: GainUnit,
    steps: Vec<StepFile>,
}

impl SelectionTrace {
    pub fn tokens(&self) -> Vec<TokenId> {
        self.steps.iter().map(|s| s.token_id).collect()
    }

    pub fn marginals(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.marginal).collect()
    }

    /// Cumulative value after the last step, 0 for an empty trace.
    pub fn final_value(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative)
    }

    /// Recomputes marginal and cumulative information gain for the tokens
    /// in trace order.
    pub fn with_ig_gains(&self, dataset: &Dataset) -> Result<SelectionTrace> {
        let data = dataset.labeled();
        let mut prefix = Vec::with_capacity(self.steps.len());
        let mut previous = 0.0;
        let mut steps = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            prefix.push(step.token_id);
            let ig = labeled_information_gain(data, &prefix)?.bits();
            steps.push(SelectionStep {
                token_id: step.token_id,
                marginal: ig - previous,
                cumulative: ig,
            });
            previous = ig;
        }
        Ok(SelectionTrace {
            gain_unit: GainUnit::Bits,
            steps,
            ..self.clone()
        })
    }

    pub fn to_json(&self, catalog: &TokenCatalog) -> Result<String> {
        let file = TraceFile {
            strategy: self.strategy,
            k: self.budget_k,
            seed: self.seed,
            gain_unit: self.gain_unit,
            steps: self
                .steps
                .iter()
                .map(|s| StepFile {
                    token_id: s.token_id,
                    label: catalog.label(s.token_id).to_string(),
                    marginal: s.marginal,
                    cumulative: s.cumulative,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses a trace written by [`to_json`](Self::to_json). Labels are
    /// checked against `catalog`.
    pub fn from_json(text: &str, catalog: &TokenCatalog) -> Result<SelectionTrace> {
        let file: TraceFile = serde_json::from_str(text)?;
        for s in &file.steps {
            if catalog.get(s.token_id).map(|t| t.label.as_str()) != Some(s.label.as_str()) {
                return Err(Error::Schema(format!(
                    "trace step token {} `{}` does not match the catalog",
                    s.token_id, s.label
                )));
            }
        }
        Ok(SelectionTrace {
            strategy: file.strategy,
            budget_k: file.k,
            seed: file.seed,
            gain_unit: file.gain_unit,
            steps: file
                .steps
                .into_iter()
                .map(|s| SelectionStep {
                    token_id: s.token_id,
                    marginal: s.marginal,
                    cumulative: s.cumulative,
                })
                .collect(),
        })
    }

    /// Plain-text table for terminals.
    pub fn table(&self, catalog: &TokenCatalog) -> String {
        let (m, c) = match self.gain_unit {
            GainUnit::Bits => ("marginal_bits", "cumulative_bits"),
            GainUnit::UnivariateAuc => ("univariate_auc", "auc_sum"),
            GainUnit::None => ("marginal", "cumulative"),
        };
        let mut out = format!(
            "{:>4}  {:>5}  {:>14}  {:>15}  label\n",
            "step", "token", m, c
        );
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "{:>4}  {:>5}  {:>14.6}  {:>15.6}  {}\n",
                i + 1,
                s.token_id,
                s.marginal,
                s.cumulative,
                catalog.label(s.token_id)
            ));
        }
        out
    }
}

fn check_budget(catalog_size: usize, k: usize) -> Result<()> {
    if k == 0 || k > catalog_size {
        return Err(Error::Parameter(format!(
            "budget k={k} must be between 1 and the catalog size {catalog_size}"
        )));
    }
    Ok(())
}

fn rated(dataset: &Dataset) -> Result<Labeled<'_>> {
    let data = dataset.labeled();
    if data.is_empty() {
        return Err(Error::EmptyData("no rated records".into()));
    }
    Ok(data)
}

/// Picks the best `(id, gain, value)` among evaluated candidates: highest
/// gain, ties to the lowest id. `evals` must be in ascending id order.
fn argmax(evals: &[(TokenId, f64, f64)]) -> (TokenId, f64, f64) {
    let mut best = evals[0];
    for &e in &evals[1..] {
        if e.1 > best.1 {
            best = e;
        }
    }
    best
}

/// Eager greedy over `candidates` (ascending ids) for `k` steps.
fn greedy_steps(data: Labeled<'_>, candidates: &[TokenId], k: usize) -> Result<Vec<SelectionStep>> {
    let mut chosen: Vec<TokenId> = Vec::with_capacity(k);
    let mut current = 0.0;
    let mut steps = Vec::with_capacity(k);
    for _ in 0..k {
        let evals = candidates
            .par_iter()
            .filter(|t| !chosen.contains(t))
            .map(|&t| {
                let mut with = chosen.clone();
                with.push(t);
                let ig = labeled_information_gain(data, &with)?.bits();
                Ok((t, ig - current, ig))
            })
            .collect::<Result<Vec<_>>>()?;
        let (t, gain, ig) = argmax(&evals);
        chosen.push(t);
        steps.push(SelectionStep {
            token_id: t,
            marginal: gain,
            cumulative: ig,
        });
        current = ig;
    }
    Ok(steps)
}

/// Greedy information-gain maximization: step `i` adds the token maximizing
/// `IG[PC; T_{i-1} ∪ {t}]`, ties broken by lowest id.
pub fn select_rits(dataset: &Dataset, k: usize) -> Result<SelectionTrace> {
    let n = dataset.catalog().len();
    check_budget(n, k)?;
    let data = rated(dataset)?;
    let candidates: Vec<TokenId> = (0..n).collect();
    Ok(SelectionTrace {
        strategy: Strategy::Rits,
        budget_k: k,
        seed: None,
        gain_unit: GainUnit::Bits,
        steps: greedy_steps(data, &candidates, k)?,
    })
}

/// Controls the pre-check that decides whether stale bounds can be trusted.
#[derive(Clone, Debug)]
pub struct LazyOptions {
    pub audit_trials: usize,
    pub audit_seed: u64,
    pub tolerance: f64,
}

impl Default for LazyOptions {
    fn default() -> Self {
        Self {
            audit_trials: 256,
            audit_seed: 0,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug)]
struct Bound {
    gain: f64,
    value: f64,
    id: TokenId,
    round: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    // max-heap: larger gain first, then lower id
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Lazy (stale upper bound) variant of [`select_rits`].
pub fn select_rits_lazy(dataset: &Dataset, k: usize) -> Result<SelectionTrace> {
    select_rits_lazy_with(dataset, k, &LazyOptions::default())
}

/// Lazy greedy with explicit audit settings.
///
/// If the submodularity audit reports any violation, or a re-evaluated gain
/// ever exceeds its stale bound, the result is computed eagerly instead.
pub fn select_rits_lazy_with(
    dataset: &Dataset,
    k: usize,
    options: &LazyOptions,
) -> Result<SelectionTrace> {
    let n = dataset.catalog().len();
    check_budget(n, k)?;
    let data = rated(dataset)?;
    let eager = || -> Result<SelectionTrace> {
        Ok(SelectionTrace {
            strategy: Strategy::RitsLazy,
            ..select_rits(dataset, k)?
        })
    };

    if n > 1 {
        let audit = audit_submodularity(
            dataset,
            options.audit_trials,
            options.audit_seed,
            options.tolerance,
        )?;
        if audit.violations > 0 {
            return eager();
        }
    }

    let mut heap: BinaryHeap<Bound> = (0..n)
        .into_par_iter()
        .map(|t| {
            let ig = labeled_information_gain(data, &[t])?.bits();
            Ok(Bound {
                gain: ig,
                value: ig,
                id: t,
                round: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?
        .into();

    let mut chosen = Vec::with_capacity(k);
    let mut current = 0.0;
    let mut steps = Vec::with_capacity(k);
    while steps.len() < k {
        let round = steps.len();
        let top = heap.pop().expect("candidates remain while steps < k");
        if top.round == round {
            chosen.push(top.id);
            steps.push(SelectionStep {
                token_id: top.id,
                marginal: top.gain,
                cumulative: top.value,
            });
            current = top.value;
            continue;
        }
        let mut with = chosen.clone();
        with.push(top.id);
        let ig = labeled_information_gain(data, &with)?.bits();
        let gain = ig - current;
        if gain > top.gain + FLOAT_SLACK_BITS {
            return eager();
        }
        heap.push(Bound {
            gain,
            value: ig,
            id: top.id,
            round,
        });
    }
    Ok(SelectionTrace {
        strategy: Strategy::RitsLazy,
        budget_k: k,
        seed: None,
        gain_unit: GainUnit::Bits,
        steps,
    })
}

/// Ranks tokens by mean univariate hold-out AUC over `splits` seeded splits
/// and keeps the top `k` (ties to the lowest id).
pub fn select_auc_greedy(
    dataset: &Dataset,
    k: usize,
    splits: usize,
    seed: u64,
) -> Result<SelectionTrace> {
    let n = dataset.catalog().len();
    check_budget(n, k)?;
    rated(dataset)?;
    let plan = SplitPlan::new(splits, evaluation::DEFAULT_TRAIN_FRACTION, seed)?;
    let aucs = evaluation::mean_univariate_aucs(dataset, &plan)?;
    let mut order: Vec<TokenId> = (0..n).collect();
    order.sort_by(|&a, &b| aucs[b].total_cmp(&aucs[a]).then(a.cmp(&b)));
    let mut running = 0.0;
    let steps = order[..k]
        .iter()
        .map(|&t| {
            running += aucs[t];
            SelectionStep {
                token_id: t,
                marginal: aucs[t],
                cumulative: running,
            }
        })
        .collect();
    Ok(SelectionTrace {
        strategy: Strategy::AucGreedy,
        budget_k: k,
        seed: Some(seed),
        gain_unit: GainUnit::UnivariateAuc,
        steps,
    })
}

/// Uniform sample of `k` distinct tokens, in draw order.
pub fn select_random(catalog_size: usize, k: usize, seed: u64) -> Result<SelectionTrace> {
    check_budget(catalog_size, k)?;
    let mut rng = stream_rng(seed, 0);
    let steps = sample(&mut rng, catalog_size, k)
        .into_iter()
        .map(|t| SelectionStep {
            token_id: t,
            marginal: 0.0,
            cumulative: 0.0,
        })
        .collect();
    Ok(SelectionTrace {
        strategy: Strategy::Random,
        budget_k: k,
        seed: Some(seed),
        gain_unit: GainUnit::None,
        steps,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn select_exhaustive(dataset: &Dataset, k: usize) -> Result<SelectionTrace> {
    select_exhaustive_capped(dataset, k, DEFAULT_EXHAUSTIVE_CAP)
}

/// Best size-`k` subset by information gain among all `C(n, k)` subsets;
/// ties go to the lexicographically smallest id list. Steps replay the
/// greedy order within the winning subset.
pub fn select_exhaustive_capped(
    dataset: &Dataset,
    k: usize,
    max_subsets: u64,
) -> Result<SelectionTrace> {
    let n = dataset.catalog().len();
    check_budget(n, k)?;
    let data = rated(dataset)?;
    let count = binomial(n, k);
    if count > u128::from(max_subsets) {
        return Err(Error::Capacity(format!(
            "C({n}, {k}) = {count} subsets exceeds the cap of {max_subsets}"
        )));
    }
    let subsets: Vec<Vec<TokenId>> = (0..n).combinations(k).collect();
    let values = subsets
        .par_iter()
        .map(|s| Ok(labeled_information_gain(data, s)?.bits()))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Ok(SelectionTrace {
        strategy: Strategy::Exhaustive,
        budget_k: k,
        seed: None,
        gain_unit: GainUnit::Bits,
        steps: greedy_steps(data, &subsets[best], k)?,
    })
}

/// Runs `strategy` with the parameters it needs. `seed` is required by the
/// randomized strategies.
pub fn select(
    dataset: &Dataset,
    strategy: Strategy,
    k: usize,
    seed: Option<u64>,
    auc_splits: usize,
) -> Result<SelectionTrace> {
    let need_seed = || {
        seed.ok_or_else(|| {
            Error::Parameter(format!("strategy `{strategy}` requires an explicit seed"))
        })
    };
    match strategy {
        Strategy::Rits => select_rits(dataset, k),
        Strategy::RitsLazy => select_rits_lazy(dataset, k),
        Strategy::Exhaustive => select_exhaustive(dataset, k),
        Strategy::AucGreedy => select_auc_greedy(dataset, k, auc_splits, need_seed()?),
        Strategy::Random => select_random(dataset.catalog().len(), k, need_seed()?),
    }
}
