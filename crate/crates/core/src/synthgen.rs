//! Synthetic survey data.
//!
//! [`generate_truth`] draws calls from a noisy-OR latent-cause model: each
//! call activates latent problems independently, every active cause fires
//! its tokens with per-token probabilities, and a per-token base rate adds
//! unrelated noise. Ratings fall with the total severity of active causes.
//!
//! [`apply_presentation`] then simulates how a questionnaire layout thins
//! the true selections: a token at display rank `r` is reported with a
//! probability proportional to `position_multipliers[r]`, further scaled by
//! panel side and a scroll penalty below the fold.
//!
//! Each call draws from its own random stream, so output is independent of
//! generation order and thread count.

use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Arm, Dataset, Panel, ResponseRecord, Selections, TokenCatalog, TokenId};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

/// Top-of-list multiplier: the first token is 40% more likely to be picked.
pub const DEFAULT_TOP_MULTIPLIER: f64 = 1.4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentCause {
    pub name: String,
    pub prevalence: f64,
    /// Noisy-OR activation probability per catalog token.
    pub token_weights: Vec<f64>,
    pub severity: f64,
}

/// `rating = clamp(round(5 - severity_slope * severity - intercept + noise), 1, 5)`
/// with `noise` drawn from {-1, 0, +1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingModel {
    pub intercept: f64,
    pub severity_slope: f64,
    /// Probabilities of noise -1, 0, +1.
    pub noise: [f64; 3],
}

impl Default for RatingModel {
    fn default() -> Self {
        Self {
            intercept: 0.0,
            severity_slope: 1.0,
            noise: [1.0 / 3.0; 3],
        }
    }
}

impl RatingModel {
    fn rating(&self, severity: f64, u: f64) -> u8 {
        let noise = if u < self.noise[0] {
            -1.0
        } else if u < self.noise[0] + self.noise[1] {
            0.0
        } else {
            1.0
        };
        (5.0 - self.severity_slope * severity - self.intercept + noise)
            .round()
            .clamp(1.0, 5.0) as u8
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub n_calls: usize,
    pub catalog: Arc<TokenCatalog>,
    pub latent_causes: Vec<LatentCause>,
    pub base_fire_rate: Vec<f64>,
    pub rating_model: RatingModel,
    /// Probability that a call leaves no star rating.
    pub unrated_fraction: f64,
    pub platform: String,
    pub call_id_prefix: String,
    pub seed: u64,
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} = {p} is not a probability")))
    }
}

impl GeneratorConfig {
    /// Config over `catalog` with no causes, zero base rates and defaults
    /// elsewhere. Add causes before generating.
    pub fn new(catalog: impl Into<Arc<TokenCatalog>>, n_calls: usize, seed: u64) -> Self {
        let catalog = catalog.into();
        let n = catalog.len();
        Self {
            n_calls,
            catalog,
            latent_causes: Vec::new(),
            base_fire_rate: vec![0.0; n],
            rating_model: RatingModel::default(),
            unrated_fraction: 0.0,
            platform: "desktop".into(),
            call_id_prefix: "call".into(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.catalog.len();
        if self.n_calls == 0 {
            return Err(Error::Config("n_calls must be at least 1".into()));
        }
        if self.latent_causes.is_empty() {
            return Err(Error::Config(
                "at least one latent cause is required".into(),
            ));
        }
        if self.base_fire_rate.len() != n {
            return Err(Error::Config(format!(
                "base_fire_rate has {} entries for {n} tokens",
                self.base_fire_rate.len()
            )));
        }
        for (t, &p) in self.base_fire_rate.iter().enumerate() {
            check_probability(&format!("base_fire_rate[{t}]"), p)?;
        }
        for cause in &self.latent_causes {
            check_probability(
                &format!("cause `{}` prevalence", cause.name),
                cause.prevalence,
            )?;
            if cause.token_weights.len() != n {
                return Err(Error::Config(format!(
                    "cause `{}` has {} token weights for {n} tokens",
                    cause.name,
                    cause.token_weights.len()
                )));
            }
            for (t, &w) in cause.token_weights.iter().enumerate() {
                check_probability(&format!("cause `{}` weight[{t}]", cause.name), w)?;
            }
            if !cause.severity.is_finite() {
                return Err(Error::Config(format!(
                    "cause `{}` severity is not finite",
                    cause.name
                )));
            }
        }
        for (i, &p) in self.rating_model.noise.iter().enumerate() {
            check_probability(&format!("rating noise[{i}]"), p)?;
        }
        let noise_total: f64 = self.rating_model.noise.iter().sum();
        if (noise_total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "rating noise sums to {noise_total}, not 1"
            )));
        }
        check_probability("unrated_fraction", self.unrated_fraction)?;
        Ok(())
    }

    /// Closed-form marginal fire rate of token `t`:
    /// `1 - (1 - base_t) * Π_c (1 - prevalence_c * w_ct)`.
    pub fn expected_fire_rate(&self, t: TokenId) -> f64 {
        let silent: f64 = self
            .latent_causes
            .iter()
            .map(|c| 1.0 - c.prevalence * c.token_weights[t])
            .product();
        1.0 - (1.0 - self.base_fire_rate[t]) * silent
    }
}

fn generate_call(config: &GeneratorConfig, index: usize) -> ResponseRecord {
    let mut rng = stream_rng(config.seed, index as u64);
    let mut severity = 0.0;
    let mut silent = vec![1.0; config.catalog.len()];
    for cause in &config.latent_causes {
        if rng.random::<f64>() < cause.prevalence {
            severity += cause.severity;
            for (s, w) in silent.iter_mut().zip(&cause.token_weights) {
                *s *= 1.0 - w;
            }
        }
    }
    let mut selections = Selections::empty();
    for (t, (s, base)) in silent.iter().zip(&config.base_fire_rate).enumerate() {
        let p = 1.0 - (1.0 - base) * s;
        if rng.random::<f64>() < p {
            selections.insert(t);
        }
    }
    let rating = config.rating_model.rating(severity, rng.random());
    let rated = rng.random::<f64>() >= config.unrated_fraction;
    ResponseRecord {
        call_id: format!("{}-{index:06}", config.call_id_prefix),
        arm: Arm::None,
        platform: config.platform.clone(),
        rating: rated.then_some(rating),
        selections,
    }
}

/// Draws `n_calls` calls from the latent-cause model.
pub fn generate_truth(config: &GeneratorConfig) -> Result<Dataset> {
    config.validate()?;
    let records = (0..config.n_calls)
        .into_par_iter()
        .map(|i| generate_call(config, i))
        .collect();
    Dataset::new(Arc::clone(&config.catalog), records)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    /// Catalog order within each panel.
    Fixed,
    /// Fresh uniform permutation within each panel per call.
    Randomized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelPolicy {
    /// Audio panel left, video panel right.
    Fixed,
    /// Left/right assignment drawn per call.
    SwappedRandom,
}

/// Questionnaire layout and its response biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresentationConfig {
    pub order_policy: OrderPolicy,
    pub panel_policy: PanelPolicy,
    /// Relative report propensity by display rank within a panel (rank 0 is
    /// the top). Ranks past the end reuse the last entry; empty means 1.
    pub position_multipliers: Vec<f64>,
    /// Fraction of reports lost for ranks at or below `fold_rank`.
    pub scroll_penalty: f64,
    pub fold_rank: Option<usize>,
    /// Multipliers for the left and right panel.
    pub side_multipliers: [f64; 2],
}

impl PresentationConfig {
    /// No position effects: observed selections equal the truth.
    pub fn unbiased(order_policy: OrderPolicy, panel_policy: PanelPolicy) -> Self {
        Self {
            order_policy,
            panel_policy,
            position_multipliers: vec![1.0],
            scroll_penalty: 0.0,
            fold_rank: None,
            side_multipliers: [1.0, 1.0],
        }
    }

    /// Fixed layout with the default top-token bias.
    pub fn fixed_default() -> Self {
        Self {
            position_multipliers: vec![DEFAULT_TOP_MULTIPLIER, 1.0],
            ..Self::unbiased(OrderPolicy::Fixed, PanelPolicy::Fixed)
        }
    }

    /// Randomized order and panel sides with the default top-token bias.
    pub fn randomized_default() -> Self {
        Self {
            position_multipliers: vec![DEFAULT_TOP_MULTIPLIER, 1.0],
            ..Self::unbiased(OrderPolicy::Randomized, PanelPolicy::SwappedRandom)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (r, &m) in self.position_multipliers.iter().enumerate() {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::Config(format!(
                    "position_multipliers[{r}] = {m} must be >= 0"
                )));
            }
        }
        for (s, &m) in self.side_multipliers.iter().enumerate() {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::Config(format!(
                    "side_multipliers[{s}] = {m} must be >= 0"
                )));
            }
        }
        check_probability("scroll_penalty", self.scroll_penalty)
    }

    fn position_multiplier(&self, rank: usize) -> f64 {
        match self.position_multipliers.as_slice() {
            [] => 1.0,
            m => m[rank.min(m.len() - 1)],
        }
    }

    /// Multipliers are relative to the strongest position; values at or
    /// below 1 are absolute report probabilities.
    fn reference(&self) -> f64 {
        self.position_multipliers
            .iter()
            .copied()
            .fold(1.0, f64::max)
    }

    /// Probability that a true selection shown at `rank` on `side`
    /// (0 left, 1 right) is reported.
    pub fn report_probability(&self, rank: usize, side: usize) -> f64 {
        let scroll = match self.fold_rank {
            Some(fold) if rank >= fold => 1.0 - self.scroll_penalty,
            _ => 1.0,
        };
        (self.position_multiplier(rank) * self.side_multipliers[side] * scroll / self.reference())
            .clamp(0.0, 1.0)
    }
}

/// Tokens of each panel in display order for one call.
fn layout(
    catalog: &TokenCatalog,
    config: &PresentationConfig,
    rng: &mut crate::rng::Rng,
) -> [(Vec<TokenId>, usize); 2] {
    let mut audio = catalog.panel_tokens(Panel::Audio);
    let mut video = catalog.panel_tokens(Panel::Video);
    if config.order_policy == OrderPolicy::Randomized {
        audio.shuffle(rng);
        video.shuffle(rng);
    }
    let swapped = config.panel_policy == PanelPolicy::SwappedRandom && rng.random::<bool>();
    if swapped {
        [(audio, 1), (video, 0)]
    } else {
        [(audio, 0), (video, 1)]
    }
}

/// Thins each call's true selections according to the layout it was shown
/// and tags the result with `arm`.
pub fn apply_presentation(
    truth: &Dataset,
    config: &PresentationConfig,
    arm: Arm,
    seed: u64,
) -> Result<Dataset> {
    config.validate()?;
    let catalog = truth.catalog();
    let records = truth
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut rng = stream_rng(seed, i as u64);
            let mut observed = Selections::empty();
            for (tokens, side) in layout(catalog, config, &mut rng) {
                for (rank, &t) in tokens.iter().enumerate() {
                    let u: f64 = rng.random();
                    if r.selections.contains(t) && u < config.report_probability(rank, side) {
                        observed.insert(t);
                    }
                }
            }
            ResponseRecord {
                arm,
                selections: observed,
                ..r.clone()
            }
        })
        .collect();
    Dataset::new(truth.shared_catalog(), records)
}

/// Generates an independent population for `arm` and presents it.
///
/// Truth and presentation seeds are derived from `generator.seed` and the
/// arm, so the two arms of an experiment never share calls.
pub fn simulate_arm(
    generator: &GeneratorConfig,
    presentation: &PresentationConfig,
    arm: Arm,
) -> Result<Dataset> {
    let arm_label = match arm {
        Arm::Control => 1,
        Arm::Treatment => 2,
        Arm::None => 3,
    };
    let population = GeneratorConfig {
        seed: derive_seed(generator.seed, arm_label),
        call_id_prefix: format!("{}-{arm}", generator.call_id_prefix),
        ..generator.clone()
    };
    let truth = generate_truth(&population)?;
    apply_presentation(
        &truth,
        presentation,
        arm,
        derive_seed(generator.seed, 100 + arm_label),
    )
}

fn weights(catalog: &TokenCatalog, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut w = vec![0.0; catalog.len()];
    for &(t, v) in entries {
        w[t] = v;
    }
    w
}

/// Bundled 15-token, 5-cause demo population over the default catalog.
///
/// "Video kept freezing" and "Video stopped unexpectedly" are near-duplicate
/// reports of the same stall cause.
pub fn demo_config(n_calls: usize, seed: u64) -> GeneratorConfig {
    let catalog = Arc::new(TokenCatalog::default_catalog());
    let cause = |name: &str, prevalence, severity, entries: &[(usize, f64)]| LatentCause {
        name: name.into(),
        prevalence,
        token_weights: weights(&catalog, entries),
        severity,
    };
    let latent_causes = vec![
        cause(
            "one_way_audio",
            0.06,
            3.0,
            &[(0, 0.9), (1, 0.35), (2, 0.25), (6, 0.2)],
        ),
        cause("audio_impairment", 0.10, 1.5, &[(3, 0.85)]),
        cause(
            "video_stall",
            0.08,
            2.5,
            &[(11, 0.97), (12, 0.95), (7, 0.3), (14, 0.25)],
        ),
        cause("video_loss", 0.04, 3.0, &[(8, 0.9), (9, 0.35), (10, 0.3)]),
        cause("call_drop", 0.03, 4.0, &[(5, 0.9), (4, 0.3)]),
    ];
    GeneratorConfig {
        latent_causes,
        base_fire_rate: vec![0.005; catalog.len()],
        rating_model: RatingModel {
            intercept: 0.0,
            severity_slope: 1.0,
            noise: [0.25, 0.5, 0.25],
        },
        ..GeneratorConfig::new(catalog, n_calls, seed)
    }
}

/// Calls rated by a parity rule: the call is poor iff exactly one of the
/// first two tokens is selected. The third token is independent noise.
pub fn xor_dataset(n_calls: usize, seed: u64) -> Dataset {
    let catalog = TokenCatalog::new([
        ("left", Panel::Audio),
        ("right", Panel::Audio),
        ("noise", Panel::Video),
    ])
    .expect("valid catalog");
    let records = (0..n_calls)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let bits: u64 = rng.random_range(0..8);
            let selections = Selections::from_bits(bits);
            let poor = selections.contains(0) != selections.contains(1);
            ResponseRecord {
                call_id: format!("xor-{i:06}"),
                arm: Arm::None,
                platform: "desktop".into(),
                rating: Some(if poor { 1 } else { 5 }),
                selections,
            }
        })
        .collect();
    Dataset::new(catalog, records).expect("valid records")
}

/// Experiment description read from a TOML file: a population model and,
/// optionally, one presentation per arm.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    pub arms: Vec<(Arm, PresentationConfig)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileExperiment {
    seed: Option<u64>,
    generator: FileGenerator,
    #[serde(default)]
    arms: std::collections::BTreeMap<String, FilePresentation>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Rates {
    Uniform(f64),
    PerToken(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGenerator {
    n_calls: usize,
    catalog: Option<String>,
    base_fire_rate: Option<Rates>,
    #[serde(default)]
    unrated_fraction: f64,
    platform: Option<String>,
    rating_model: Option<RatingModel>,
    causes: Vec<FileCause>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCause {
    name: String,
    prevalence: f64,
    severity: f64,
    /// Activation probability keyed by token label.
    weights: std::collections::BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePresentation {
    order_policy: OrderPolicy,
    panel_policy: PanelPolicy,
    #[serde(default = "default_multipliers")]
    position_multipliers: Vec<f64>,
    #[serde(default)]
    scroll_penalty: f64,
    fold_rank: Option<usize>,
    #[serde(default = "default_sides")]
    side_multipliers: [f64; 2],
}

fn default_multipliers() -> Vec<f64> {
    vec![1.0]
}

fn default_sides() -> [f64; 2] {
    [1.0, 1.0]
}

/// Parses an experiment config. A relative `catalog` path is resolved
/// against `base_dir`; `"default"` or no entry selects the built-in catalog.
pub fn parse_experiment(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let file: FileExperiment = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let g = file.generator;
    let catalog = match g.catalog.as_deref() {
        None | Some("default") => TokenCatalog::default_catalog(),
        Some(path) => TokenCatalog::load_csv(base_dir.join(path))?,
    };
    let n = catalog.len();
    let base_fire_rate = match g.base_fire_rate {
        None => vec![0.0; n],
        Some(Rates::Uniform(p)) => vec![p; n],
        Some(Rates::PerToken(v)) => v,
    };
    let latent_causes = g
        .causes
        .into_iter()
        .map(|c| {
            let mut token_weights = vec![0.0; n];
            for (label, w) in c.weights {
                let t = catalog.id_of(&label).ok_or_else(|| {
                    Error::Config(format!(
                        "cause `{}` weights unknown token `{label}`",
                        c.name
                    ))
                })?;
                token_weights[t] = w;
            }
            Ok(LatentCause {
                name: c.name,
                prevalence: c.prevalence,
                token_weights,
                severity: c.severity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let generator = GeneratorConfig {
        latent_causes,
        base_fire_rate,
        rating_model: g.rating_model.unwrap_or_default(),
        unrated_fraction: g.unrated_fraction,
        platform: g.platform.unwrap_or_else(|| "desktop".into()),
        ..GeneratorConfig::new(catalog, g.n_calls, file.seed.unwrap_or(0))
    };
    generator.validate()?;

    let arms = file
        .arms
        .into_iter()
        .map(|(name, p)| {
            let arm: Arm = name.parse().map_err(|_| {
                Error::Config(format!(
                    "unknown arm `{name}` (expected control or treatment)"
                ))
            })?;
            let presentation = PresentationConfig {
                order_policy: p.order_policy,
                panel_policy: p.panel_policy,
                position_multipliers: p.position_multipliers,
                scroll_penalty: p.scroll_penalty,
                fold_rank: p.fold_rank,
                side_multipliers: p.side_multipliers,
            };
            presentation.validate()?;
            Ok((arm, presentation))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentConfig { generator, arms })
}

pub fn load_experiment(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_experiment(&text, base).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_token_config(prevalence: f64, weight: f64, base: f64, n: usize) -> GeneratorConfig {
        let catalog = TokenCatalog::new([("t", Panel::Audio)]).unwrap();
        GeneratorConfig {
            latent_causes: vec![LatentCause {
                name: "c".into(),
                prevalence,
                token_weights: vec![weight],
                severity: 3.0,
            }],
            base_fire_rate: vec![base],
            ..GeneratorConfig::new(catalog, n, 17)
        }
    }

    #[test]
    fn silent_population() {
        let ds = generate_truth(&single_token_config(0.0, 0.9, 0.0, 500)).unwrap();
        assert_eq!(ds.responded_count(), 0);
    }

    #[test]
    fn certain_cause_always_fires() {
        let ds = generate_truth(&single_token_config(1.0, 1.0, 0.0, 500)).unwrap();
        assert_eq!(ds.responded_count(), 500);
    }

    #[test]
    fn rejects_invalid_config() {
        assert!(matches!(
            generate_truth(&single_token_config(1.2, 0.5, 0.0, 5)),
            Err(Error::Config(_))
        ));
        assert!(generate_truth(&single_token_config(0.5, 0.5, 0.0, 0)).is_err());
        let mut no_causes = single_token_config(0.5, 0.5, 0.0, 5);
        no_causes.latent_causes.clear();
        assert!(no_causes.validate().is_err());
    }

    #[test]
    fn same_seed_same_data() {
        let config = demo_config(300, 4);
        assert_eq!(
            generate_truth(&config).unwrap(),
            generate_truth(&config).unwrap()
        );
        let other = GeneratorConfig {
            seed: 5,
            ..config.clone()
        };
        assert_ne!(
            generate_truth(&config).unwrap(),
            generate_truth(&other).unwrap()
        );
    }

    #[test]
    fn rating_model_is_monotone_in_severity() {
        let model = RatingModel::default();
        for u in [0.1, 0.5, 0.9] {
            let mut last = 5;
            for sev in [0.0, 1.0, 2.0, 3.0, 4.0, 6.0] {
                let r = model.rating(sev, u);
                assert!(r <= last && (1..=5).contains(&r));
                last = r;
            }
        }
    }

    #[test]
    fn unbiased_presentation_is_identity() {
        let truth = generate_truth(&demo_config(400, 1)).unwrap();
        for (order, panel) in [
            (OrderPolicy::Fixed, PanelPolicy::Fixed),
            (OrderPolicy::Randomized, PanelPolicy::SwappedRandom),
        ] {
            let shown = apply_presentation(
                &truth,
                &PresentationConfig::unbiased(order, panel),
                Arm::Treatment,
                3,
            )
            .unwrap();
            assert!(shown
                .records()
                .iter()
                .zip(truth.records())
                .all(|(a, b)| a.selections == b.selections));
            assert!(shown.records().iter().all(|r| r.arm == Arm::Treatment));
        }
    }

    #[test]
    fn invisible_survey_gets_no_responses() {
        let truth = generate_truth(&demo_config(400, 1)).unwrap();
        let config = PresentationConfig {
            position_multipliers: vec![0.0],
            ..PresentationConfig::unbiased(OrderPolicy::Fixed, PanelPolicy::Fixed)
        };
        let shown = apply_presentation(&truth, &config, Arm::Control, 3).unwrap();
        assert_eq!(shown.responded_count(), 0);
        assert_eq!(shown.rated_count(), truth.rated_count());
    }

    #[test]
    fn report_probabilities() {
        let fixed = PresentationConfig::fixed_default();
        assert_eq!(fixed.report_probability(0, 0), 1.0);
        assert_eq!(fixed.report_probability(5, 1), 1.0 / 1.4);
        let mobile = PresentationConfig {
            fold_rank: Some(4),
            scroll_penalty: 0.49,
            ..PresentationConfig::unbiased(OrderPolicy::Fixed, PanelPolicy::Fixed)
        };
        assert_eq!(mobile.report_probability(3, 0), 1.0);
        assert!((mobile.report_probability(4, 0) - 0.51).abs() < 1e-12);
        let bad = PresentationConfig {
            scroll_penalty: 2.0,
            ..mobile
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn xor_labels_follow_parity() {
        let ds = xor_dataset(64, 2);
        for r in ds.records() {
            let poor = r.selections.contains(0) != r.selections.contains(1);
            assert_eq!(r.poor_call(), Some(poor));
        }
    }

    #[test]
    fn parses_config_file() {
        let text = r#"
seed = 11

[generator]
n_calls = 50
base_fire_rate = 0.02
unrated_fraction = 0.1

[generator.rating_model]
intercept = 0.5
severity_slope = 1.2
noise = [0.2, 0.6, 0.2]

[[generator.causes]]
name = "stall"
prevalence = 0.1
severity = 2.0
weights = { "Video kept freezing" = 0.8, "Video stopped unexpectedly" = 0.7 }

[arms.control]
order_policy = "fixed"
panel_policy = "fixed"
position_multipliers = [1.4, 1.0]

[arms.treatment]
order_policy = "randomized"
panel_policy = "swapped_random"
position_multipliers = [1.4, 1.0]
"#;
        let config = parse_experiment(text, Path::new(".")).unwrap();
        assert_eq!(config.generator.seed, 11);
        assert_eq!(config.generator.n_calls, 50);
        assert_eq!(config.generator.base_fire_rate, vec![0.02; 15]);
        assert_eq!(config.generator.latent_causes[0].token_weights[11], 0.8);
        assert_eq!(config.arms.len(), 2);
        assert_eq!(config.arms[0].0, Arm::Control);
        assert_eq!(config.arms[1].1.order_policy, OrderPolicy::Randomized);
    }

    #[test]
    fn config_errors_carry_location() {
        let text = "seed = 1\n[generator]\nn_calls = \"many\"\ncauses = []\n";
        match parse_experiment(text, Path::new(".")) {
            Err(Error::Config(msg)) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let unknown = "[generator]\nn_calls = 5\n[[generator.causes]]\nname = \"a\"\nprevalence = 0.1\nseverity = 1.0\nweights = { \"lag\" = 0.5 }\n";
        assert!(matches!(
            parse_experiment(unknown, Path::new(".")),
            Err(Error::Config(_))
        ));
    }
}
