//! Bagged randomized binary-split trees over token indicators.
//!
//! Each tree is grown on a bootstrap sample to purity (or `max_depth`),
//! choosing at every node the best Gini split among a random draw of
//! `max(1, floor(sqrt(features)))` tokens. If none of the drawn tokens splits
//! the node, the remaining tokens are tried before the node becomes a leaf.
//! Leaves store the poor-call frequency of their bootstrap rows; the forest
//! predicts the mean over trees.
//!
//! Features are binary, so training works on pattern counts instead of rows.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::Scorer;
use crate::dataset::{Dataset, Labeled, Selections, TokenId};
use crate::error::{Error, Result};
use crate::infotheory::{CellCount, MAX_SUBSET};
use crate::rng::{stream_rng, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: None,
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        absent: Box<Node>,
        present: Box<Node>,
    },
}

impl Node {
    fn predict(&self, pattern: u32) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(p) => return *p,
                Node::Split {
                    feature,
                    absent,
                    present,
                } => {
                    node = if pattern >> feature & 1 == 1 {
                        present
                    } else {
                        absent
                    };
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ForestScorer {
    subset: Vec<TokenId>,
    trees: Vec<Node>,
}

fn totals(cells: &[(u32, CellCount)]) -> CellCount {
    cells
        .iter()
        .fold(CellCount::default(), |acc, (_, c)| CellCount {
            n_pc0: acc.n_pc0 + c.n_pc0,
            n_pc1: acc.n_pc1 + c.n_pc1,
        })
}

/// Gini impurity times node size.
fn weighted_gini(c: CellCount) -> f64 {
    let n = c.total() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = c.n_pc1 as f64 / n;
    n * 2.0 * p * (1.0 - p)
}

fn grow(
    cells: Vec<(u32, CellCount)>,
    n_features: usize,
    mtry: usize,
    depth: usize,
    max_depth: Option<usize>,
    rng: &mut Rng,
) -> Node {
    let node = totals(&cells);
    let leaf = Node::Leaf(node.n_pc1 as f64 / node.total() as f64);
    if node.n_pc0 == 0 || node.n_pc1 == 0 || max_depth.is_some_and(|d| depth >= d) {
        return leaf;
    }

    let mut features: Vec<usize> = (0..n_features).collect();
    features.shuffle(rng);
    let mut best: Option<(usize, f64)> = None;
    for (visited, &f) in features.iter().enumerate() {
        if visited >= mtry && best.is_some() {
            break;
        }
        let mut on = CellCount::default();
        for (p, c) in &cells {
            if p >> f & 1 == 1 {
                on.n_pc0 += c.n_pc0;
                on.n_pc1 += c.n_pc1;
            }
        }
        let off = CellCount {
            n_pc0: node.n_pc0 - on.n_pc0,
            n_pc1: node.n_pc1 - on.n_pc1,
        };
        if on.total() == 0 || off.total() == 0 {
            continue;
        }
        let impurity = weighted_gini(on) + weighted_gini(off);
        if best.is_none_or(|(_, b)| impurity < b) {
            best = Some((f, impurity));
        }
    }
    let Some((feature, _)) = best else {
        return leaf;
    };
    let (present, absent): (Vec<_>, Vec<_>) =
        cells.into_iter().partition(|(p, _)| p >> feature & 1 == 1);
    Node::Split {
        feature,
        absent: Box::new(grow(absent, n_features, mtry, depth + 1, max_depth, rng)),
        present: Box::new(grow(present, n_features, mtry, depth + 1, max_depth, rng)),
    }
}

impl ForestScorer {
    pub fn fit(
        train: &Dataset,
        subset: &[TokenId],
        config: &ForestConfig,
        seed: u64,
    ) -> Result<Self> {
        train.catalog().check_subset(subset)?;
        Self::fit_labeled(train.labeled(), subset, config, seed)
    }

    pub fn fit_labeled(
        train: Labeled<'_>,
        subset: &[TokenId],
        config: &ForestConfig,
        seed: u64,
    ) -> Result<Self> {
        if config.trees == 0 {
            return Err(Error::Parameter("forest needs at least one tree".into()));
        }
        if subset.len() > MAX_SUBSET {
            return Err(Error::Capacity(format!(
                "subset of {} tokens exceeds the cap of {MAX_SUBSET}",
                subset.len()
            )));
        }
        if train.is_empty() {
            return Err(Error::EmptyData("no rated training records".into()));
        }
        let patterns: Vec<u32> = train.selections.iter().map(|s| s.pattern(subset)).collect();
        let n = patterns.len();
        let mtry = ((subset.len() as f64).sqrt().floor() as usize).max(1);
        let trees = (0..config.trees)
            .map(|t| {
                let mut rng = stream_rng(seed, t as u64);
                let mut counts: HashMap<u32, CellCount> = HashMap::new();
                for _ in 0..n {
                    let i = rng.random_range(0..n);
                    let cell = counts.entry(patterns[i]).or_default();
                    if train.poor[i] {
                        cell.n_pc1 += 1;
                    } else {
                        cell.n_pc0 += 1;
                    }
                }
                let mut cells: Vec<_> = counts.into_iter().collect();
                cells.sort_unstable_by_key(|(p, _)| *p);
                grow(cells, subset.len(), mtry, 0, config.max_depth, &mut rng)
            })
            .collect();
        Ok(Self {
            subset: subset.to_vec(),
            trees,
        })
    }
}

impl Scorer for ForestScorer {
    fn score(&self, selections: Selections) -> f64 {
        let pattern = selections.pattern(&self.subset);
        self.trees.iter().map(|t| t.predict(pattern)).sum::<f64>() / self.trees.len() as f64
    }
}
