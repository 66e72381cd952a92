//! Scoring of token subsets: hold-out AUC over repeated train/test splits
//! and pairwise Jaccard redundancy.

mod forest;

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use forest::{ForestConfig, ForestScorer};

use crate::dataset::{Dataset, Labeled, LabeledRows, Selections, TokenId};
use crate::error::{Error, Result};
use crate::infotheory::{JointTable, MAX_SUBSET};
use crate::rng::{derive_seed, stream_rng};
use crate::selection::{SelectionTrace, Strategy};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;
pub const DEFAULT_SPLITS: usize = 100;
/// Add-α smoothing of the probability-table scorer.
pub const DEFAULT_TABLE_ALPHA: f64 = 1.0;

/// Area under the ROC curve as the Mann–Whitney statistic with midranks:
/// `P(s+ > s-) + ½ P(s+ = s-)`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Parameter(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Parameter("scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the positive rank sum keeps midranks integral.
    let mut rank_sum_x2: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1..=end, midrank = (start + 1 + end) / 2
        let midrank_x2 = (start + 1 + end) as u128;
        let positives = order[start..end].iter().filter(|&&i| labels[i]).count() as u128;
        rank_sum_x2 += midrank_x2 * positives;
        start = end;
    }
    let n_pos = n_pos as u128;
    let u_x2 = rank_sum_x2 - n_pos * (n_pos + 1);
    Ok(u_x2 as f64 / (2 * n_pos * n_neg as u128) as f64)
}

/// Repeated random hold-out splits of the rated records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub splits: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
}

impl SplitPlan {
    pub fn new(splits: usize, train_fraction: f64, master_seed: u64) -> Result<Self> {
        if splits == 0 {
            return Err(Error::Parameter("at least one split is required".into()));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Parameter(format!(
                "train fraction {train_fraction} must be in (0, 1)"
            )));
        }
        Ok(Self {
            splits,
            train_fraction,
            master_seed,
        })
    }

    /// Seed of split `index`; independent of every other split.
    pub fn split_seed(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }

    /// Train and test row indices (ascending) of split `index` over `n_rows`
    /// rows. Every row lands in exactly one side.
    pub fn partition(&self, index: usize, n_rows: usize) -> (Vec<usize>, Vec<usize>) {
        let mut rows: Vec<usize> = (0..n_rows).collect();
        rows.shuffle(&mut stream_rng(self.split_seed(index), 0));
        let n_train = if n_rows < 2 {
            n_rows
        } else {
            ((n_rows as f64 * self.train_fraction).round() as usize).clamp(1, n_rows - 1)
        };
        let mut train = rows[..n_train].to_vec();
        let mut test = rows[n_train..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        (train, test)
    }
}

pub trait Scorer {
    /// Estimated probability that a call with these selections is poor.
    fn score(&self, selections: Selections) -> f64;

    fn score_all(&self, selections: &[Selections]) -> Vec<f64> {
        selections.iter().map(|&s| self.score(s)).collect()
    }
}

/// Smoothed `P(PC = 1 | cell)` per observed token pattern; unseen patterns
/// fall back to the training prior.
#[derive(Clone, Debug)]
pub struct TableScorer {
    subset: Vec<TokenId>,
    probabilities: Vec<(u32, f64)>,
    prior: f64,
}

impl TableScorer {
    pub fn fit(train: &Dataset, subset: &[TokenId], alpha: f64) -> Result<Self> {
        train.catalog().check_subset(subset)?;
        Self::fit_labeled(train.labeled(), subset, alpha)
    }

    pub fn fit_labeled(train: Labeled<'_>, subset: &[TokenId], alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::Parameter(format!(
                "smoothing alpha {alpha} must be >= 0"
            )));
        }
        let table = JointTable::from_labeled(train, subset)?;
        let marginal = table.marginal();
        let prior = marginal.n_pc1 as f64 / table.total() as f64;
        let probabilities = table
            .cells()
            .iter()
            .map(|(p, c)| {
                (
                    *p,
                    (c.n_pc1 as f64 + alpha) / (c.total() as f64 + 2.0 * alpha),
                )
            })
            .collect();
        Ok(Self {
            subset: subset.to_vec(),
            probabilities,
            prior,
        })
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }
}

impl Scorer for TableScorer {
    fn score(&self, selections: Selections) -> f64 {
        let pattern = selections.pattern(&self.subset);
        match self
            .probabilities
            .binary_search_by_key(&pattern, |(p, _)| *p)
        {
            Ok(i) => self.probabilities[i].1,
            Err(_) => self.prior,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Table,
    Forest,
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(ScorerKind::Table),
            "forest" => Ok(ScorerKind::Forest),
            other => Err(Error::Parameter(format!("unknown scorer `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScorerConfig {
    pub kind: ScorerKind,
    pub table_alpha: f64,
    pub forest: ForestConfig,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            kind: ScorerKind::Table,
            table_alpha: DEFAULT_TABLE_ALPHA,
            forest: ForestConfig::default(),
        }
    }
}

impl ScorerConfig {
    pub fn of_kind(kind: ScorerKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }
}

enum Fitted {
    Table(TableScorer),
    Forest(ForestScorer),
}

impl Fitted {
    fn fit(
        config: &ScorerConfig,
        train: Labeled<'_>,
        subset: &[TokenId],
        seed: u64,
    ) -> Result<Self> {
        Ok(match config.kind {
            ScorerKind::Table => {
                Fitted::Table(TableScorer::fit_labeled(train, subset, config.table_alpha)?)
            }
            ScorerKind::Forest => Fitted::Forest(ForestScorer::fit_labeled(
                train,
                subset,
                &config.forest,
                seed,
            )?),
        })
    }

    fn scorer(&self) -> &dyn Scorer {
        match self {
            Fitted::Table(t) => t,
            Fitted::Forest(f) => f,
        }
    }
}

/// Fits on `train` and returns the AUC on `test`.
pub fn holdout_auc(
    config: &ScorerConfig,
    train: Labeled<'_>,
    test: Labeled<'_>,
    subset: &[TokenId],
    seed: u64,
) -> Result<f64> {
    let fitted = Fitted::fit(config, train, subset, seed)?;
    auc(&fitted.scorer().score_all(test.selections), test.poor)
}

/// Mean over splits of each token's single-token table-scorer AUC. Splits
/// whose test side holds a single class are skipped.
pub fn mean_univariate_aucs(dataset: &Dataset, plan: &SplitPlan) -> Result<Vec<f64>> {
    let data = dataset.labeled();
    let n_tokens = dataset.catalog().len();
    let config = ScorerConfig::default();
    let per_split = (0..plan.splits)
        .into_par_iter()
        .map(|split| {
            let (train_rows, test_rows) = plan.partition(split, data.len());
            let train = LabeledRows::gather(data, &train_rows);
            let test = LabeledRows::gather(data, &test_rows);
            (0..n_tokens)
                .map(
                    |t| match holdout_auc(&config, train.view(), test.view(), &[t], 0) {
                        Ok(v) => Ok(Some(v)),
                        Err(Error::UndefinedAuc) => Ok(None),
                        Err(e) => Err(e),
                    },
                )
                .collect::<Result<Option<Vec<f64>>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let valid: Vec<Vec<f64>> = per_split.into_iter().flatten().collect();
    if valid.is_empty() {
        return Err(Error::UndefinedAuc);
    }
    Ok((0..n_tokens)
        .map(|t| valid.iter().map(|v| v[t]).sum::<f64>() / valid.len() as f64)
        .collect())
}

/// `|a ∧ b| / |a ∨ b|`, 0 when both are all-zero.
pub fn jaccard(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Parameter(format!(
            "columns have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (inter, union) = a.iter().zip(b).fold((0usize, 0usize), |(i, u), (&x, &y)| {
        (i + usize::from(x && y), u + usize::from(x || y))
    });
    Ok(ratio(inter, union))
}

fn ratio(inter: usize, union: usize) -> f64 {
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Mean pairwise Jaccard similarity of the token columns in `subset`, over
/// all records; 0 for fewer than two tokens. Independent of subset order.
pub fn jaccard_set(dataset: &Dataset, subset: &[TokenId]) -> Result<f64> {
    dataset.catalog().check_subset(subset)?;
    let mut ids = subset.to_vec();
    ids.sort_unstable();
    if ids.len() < 2 {
        return Ok(0.0);
    }
    let masks: Vec<u64> = dataset
        .records()
        .iter()
        .map(|r| r.selections.bits())
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let (inter, union) = masks.iter().fold((0usize, 0usize), |(i, u), &m| {
                let x = m >> a & 1 == 1;
                let y = m >> b & 1 == 1;
                (i + usize::from(x && y), u + usize::from(x || y))
            });
            total += ratio(inter, union);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub k: usize,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub js_mean: f64,
    pub js_std: f64,
}

/// Per-prefix AUC and Jaccard summary for one strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: Strategy,
    pub per_k: Vec<KPoint>,
}

impl EvalReport {
    pub fn at(&self, k: usize) -> Option<&KPoint> {
        self.per_k.iter().find(|p| p.k == k)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Scores every prefix of every trace over the splits of `plan`.
///
/// For each split the scorer is fit on the train side and AUC is measured on
/// the test side; means and sample standard deviations are taken across
/// splits. Jaccard similarity is computed once on the full dataset.
pub fn evaluate_subsets(
    dataset: &Dataset,
    traces: &[SelectionTrace],
    plan: &SplitPlan,
    scorer: &ScorerConfig,
) -> Result<Vec<EvalReport>> {
    if traces.is_empty() {
        return Err(Error::Parameter("no traces to evaluate".into()));
    }
    let data = dataset.labeled();
    if data.is_empty() {
        return Err(Error::EmptyData("no rated records".into()));
    }
    for trace in traces {
        dataset.catalog().check_subset(&trace.tokens())?;
        if trace.steps.len() > MAX_SUBSET {
            return Err(Error::Capacity(format!(
                "trace of {} tokens exceeds the scorer cap of {MAX_SUBSET}",
                trace.steps.len()
            )));
        }
    }

    // per split -> per trace -> per prefix length
    let per_split: Vec<Vec<Vec<f64>>> = (0..plan.splits)
        .into_par_iter()
        .map(|split| {
            let (train_rows, test_rows) = plan.partition(split, data.len());
            let train = LabeledRows::gather(data, &train_rows);
            let test = LabeledRows::gather(data, &test_rows);
            let split_seed = plan.split_seed(split);
            traces
                .iter()
                .enumerate()
                .map(|(ti, trace)| {
                    let tokens = trace.tokens();
                    (1..=tokens.len())
                        .map(|k| {
                            let seed = derive_seed(split_seed, (ti * 1024 + k) as u64);
                            holdout_auc(scorer, train.view(), test.view(), &tokens[..k], seed)
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    traces
        .iter()
        .enumerate()
        .map(|(ti, trace)| {
            let tokens = trace.tokens();
            let per_k = (1..=tokens.len())
                .map(|k| {
                    let aucs: Vec<f64> = per_split.iter().map(|s| s[ti][k - 1]).collect();
                    let (auc_mean, auc_std) = mean_std(&aucs);
                    Ok(KPoint {
                        k,
                        auc_mean,
                        auc_std,
                        js_mean: jaccard_set(dataset, &tokens[..k])?,
                        js_std: 0.0,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(EvalReport {
                strategy: trace.strategy,
                per_k,
            })
        })
        .collect()
}

/// Flat `strategy,k,auc_mean,auc_std,js_mean,js_std` table.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e.to_string()));
    wtr.write_record(["strategy", "k", "auc_mean", "auc_std", "js_mean", "js_std"])
        .map_err(io)?;
    for report in reports {
        for p in &report.per_k {
            wtr.write_record([
                report.strategy.to_string(),
                p.k.to_string(),
                p.auc_mean.to_string(),
                p.auc_std.to_string(),
                p.js_mean.to_string(),
                p.js_std.to_string(),
            ])
            .map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Arm, Panel, ResponseRecord, TokenCatalog};

    fn dataset(n_tokens: usize, rows: &[(u64, Option<u8>)]) -> Dataset {
        let cat =
            TokenCatalog::new((0..n_tokens).map(|i| (format!("t{i}"), Panel::Video))).unwrap();
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, &(bits, rating))| ResponseRecord {
                call_id: format!("c{i}"),
                arm: Arm::None,
                platform: "desktop".into(),
                rating,
                selections: Selections::from_bits(bits),
            })
            .collect();
        Dataset::new(cat, records).unwrap()
    }

    #[test]
    fn auc_examples() {
        assert_eq!(
            auc(&[0.9, 0.8, 0.4, 0.3], &[true, false, true, false]).unwrap(),
            0.75
        );
        assert_eq!(
            auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(),
            1.0
        );
        assert_eq!(
            auc(&[0.4; 6], &[true, false, true, false, false, true]).unwrap(),
            0.5
        );
        assert!(matches!(
            auc(&[0.1, 0.2], &[true, true]),
            Err(Error::UndefinedAuc)
        ));
        assert!(auc(&[0.1], &[true, false]).is_err());
        assert!(auc(&[f64::NAN, 0.2], &[true, false]).is_err());
    }

    #[test]
    fn auc_partial_ties() {
        // pairs: (0.5+,0.5-) tie, (0.5+,0.1-) win, (0.9+,*) wins -> (1 tie*0.5 + 3)/4
        assert_eq!(
            auc(&[0.5, 0.9, 0.5, 0.1], &[true, true, false, false]).unwrap(),
            0.875
        );
    }

    #[test]
    fn split_plan_partitions_every_row_once() {
        let plan = SplitPlan::new(5, 0.7, 11).unwrap();
        for s in 0..5 {
            let (train, test) = plan.partition(s, 50);
            assert_eq!(train.len(), 35);
            let mut all: Vec<_> = train.iter().chain(&test).copied().collect();
            all.sort();
            assert_eq!(all, (0..50).collect::<Vec<_>>());
        }
        assert_ne!(plan.partition(0, 50), plan.partition(1, 50));
        assert_eq!(
            plan.partition(3, 50),
            SplitPlan::new(9, 0.7, 11).unwrap().partition(3, 50)
        );
        assert!(SplitPlan::new(0, 0.7, 1).is_err());
        assert!(SplitPlan::new(3, 1.0, 1).is_err());
    }

    #[test]
    fn table_scorer_hand_values() {
        // cell t0=1: 3 poor of 4; cell t0=0: 0 poor of 2
        let ds = dataset(
            2,
            &[
                (1, Some(1)),
                (1, Some(2)),
                (1, Some(1)),
                (1, Some(5)),
                (0, Some(4)),
                (0, Some(5)),
            ],
        );
        let scorer = TableScorer::fit(&ds, &[0], 1.0).unwrap();
        assert!((scorer.score(Selections::from_bits(1)) - 4.0 / 6.0).abs() < 1e-12);
        assert!((scorer.score(Selections::from_bits(0)) - 1.0 / 4.0).abs() < 1e-12);

        let pair = TableScorer::fit(&ds, &[0, 1], 1.0).unwrap();
        assert_eq!(pair.prior(), 0.5);
        assert_eq!(
            pair.score(Selections::from_bits(0b11)),
            0.5,
            "unseen cell backs off to prior"
        );

        let none = TableScorer::fit(&ds, &[], 1.0).unwrap();
        assert_eq!(
            none.score(Selections::from_bits(1)),
            (3.0 + 1.0) / (6.0 + 2.0)
        );
    }

    #[test]
    fn jaccard_examples() {
        let a = [true, true, false, true];
        let b = [true, false, false, true];
        assert_eq!(jaccard(&a, &b).unwrap(), 2.0 / 3.0);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        assert_eq!(jaccard(&[true, false], &[false, true]).unwrap(), 0.0);
        assert_eq!(jaccard(&[false, false], &[false, false]).unwrap(), 0.0);
        assert!(jaccard(&[true], &[true, false]).is_err());
    }

    #[test]
    fn jaccard_set_examples() {
        // columns: t0 = {0,1}, t1 = {0,1}, t2 = {1,2,3}
        let ds = dataset(
            3,
            &[
                (0b011, None),
                (0b111, None),
                (0b100, None),
                (0b100, Some(3)),
            ],
        );
        assert_eq!(jaccard_set(&ds, &[0]).unwrap(), 0.0);
        assert_eq!(jaccard_set(&ds, &[0, 1]).unwrap(), 1.0);
        assert_eq!(
            jaccard_set(&ds, &[2, 0, 1]).unwrap(),
            jaccard_set(&ds, &[0, 1, 2]).unwrap()
        );
        assert!(jaccard_set(&ds, &[0, 0]).is_err());
    }

    #[test]
    fn jaccard_set_hand_triple() {
        // rows a..f; t0={a,b}, t1={b,c,d}, t2={a..f}: J01=1/4, J02=1/3, J12=1/2
        let rows = [
            (0b101u64, None),
            (0b111, None),
            (0b110, None),
            (0b110, None),
            (0b100, None),
            (0b100, None),
        ];
        let ds = dataset(3, &rows);
        let js = jaccard_set(&ds, &[0, 1, 2]).unwrap();
        assert!((js - 0.361_111).abs() < 1e-6, "{js}");
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn report_csv_header() {
        let report = EvalReport {
            strategy: Strategy::Rits,
            per_k: vec![KPoint {
                k: 1,
                auc_mean: 0.75,
                auc_std: 0.0,
                js_mean: 0.0,
                js_std: 0.0,
            }],
        };
        let mut buf = Vec::new();
        write_reports_csv(&[report], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "strategy,k,auc_mean,auc_std,js_mean,js_std\nrits,1,0.75,0,0,0\n"
        );
    }
}
