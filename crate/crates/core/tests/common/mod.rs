#![allow(dead_code)]

use std::collections::HashMap;

use ptq_core::{Arm, Dataset, Panel, ResponseRecord, Selections, TokenCatalog, TokenId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn catalog(n: usize) -> TokenCatalog {
    TokenCatalog::new((0..n).map(|i| {
        let panel = if i % 2 == 0 {
            Panel::Audio
        } else {
            Panel::Video
        };
        (format!("t{i}"), panel)
    }))
    .unwrap()
}

pub fn record(i: usize, bits: u64, rating: Option<u8>) -> ResponseRecord {
    ResponseRecord {
        call_id: format!("r{i}"),
        arm: Arm::None,
        platform: "desktop".into(),
        rating,
        selections: Selections::from_bits(bits),
    }
}

pub fn dataset(n_tokens: usize, rows: &[(u64, Option<u8>)]) -> Dataset {
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, &(bits, rating))| record(i, bits, rating))
        .collect();
    Dataset::new(catalog(n_tokens), records).unwrap()
}

/// Tokens fire with their own rates; a call is poor with a probability that
/// grows with a random weighted sum of its tokens.
pub fn random_dataset(n_tokens: usize, n_rows: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates: Vec<f64> = (0..n_tokens).map(|_| rng.random_range(0.05..0.5)).collect();
    let weights: Vec<f64> = (0..n_tokens).map(|_| rng.random_range(0.0..0.6)).collect();
    let rows: Vec<(u64, Option<u8>)> = (0..n_rows)
        .map(|_| {
            let mut bits = 0u64;
            let mut risk = 0.1;
            for t in 0..n_tokens {
                if rng.random_bool(rates[t]) {
                    bits |= 1 << t;
                    risk += weights[t];
                }
            }
            let poor = rng.random_bool(risk.min(0.95));
            (bits, Some(if poor { 1 } else { 4 }))
        })
        .collect();
    dataset(n_tokens, &rows)
}

fn h(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// Plug-in `H[PC] - H[PC | subset]` from a fresh tally of the rated records.
pub fn oracle_ig(ds: &Dataset, subset: &[TokenId]) -> f64 {
    let mut cells: HashMap<Vec<bool>, [u64; 2]> = HashMap::new();
    let mut marginal = [0u64; 2];
    for (r, pc) in ds.records().iter().zip(ds.pc_labels()) {
        let Some(pc) = pc else { continue };
        let key: Vec<bool> = subset.iter().map(|&t| r.selections.contains(t)).collect();
        cells.entry(key).or_default()[usize::from(*pc)] += 1;
        marginal[usize::from(*pc)] += 1;
    }
    let total: u64 = marginal.iter().sum();
    let conditional: f64 = cells
        .values()
        .map(|c| (c[0] + c[1]) as f64 / total as f64 * h(c))
        .sum();
    h(&marginal) - conditional
}

/// Concordant pairs plus half the ties, over all positive/negative pairs.
pub fn oracle_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}
