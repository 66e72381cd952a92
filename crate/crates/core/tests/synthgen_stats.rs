use std::path::Path;
use std::sync::Arc;

use ptq_core::abtest::{compare_proportions, run_abtest};
use ptq_core::dataset::{load_dataset, save_dataset, Format};
use ptq_core::synthgen::{
    demo_config, generate_truth, load_experiment, simulate_arm, GeneratorConfig, LatentCause,
    PresentationConfig,
};
use ptq_core::{Arm, Dataset, Panel, TokenCatalog};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

fn rate(ds: &Dataset, t: usize) -> f64 {
    ds.token_column(t).iter().filter(|&&b| b).count() as f64 / ds.len() as f64
}

fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn noisy_or_marginal_matches_closed_form() {
    let catalog = TokenCatalog::new([("only", Panel::Audio)]).unwrap();
    let config = GeneratorConfig {
        latent_causes: vec![LatentCause {
            name: "cause".into(),
            prevalence: 0.3,
            token_weights: vec![0.8],
            severity: 1.0,
        }],
        base_fire_rate: vec![0.05],
        ..GeneratorConfig::new(catalog, 100_000, 5)
    };
    let expected: f64 = 1.0 - (1.0 - 0.05) * (1.0 - 0.3 * 0.8);
    assert!((expected - 0.278).abs() < 1e-12);
    assert!((config.expected_fire_rate(0) - expected).abs() < 1e-12);
    let observed = rate(&generate_truth(&config).unwrap(), 0);
    assert!(
        (observed - expected).abs() <= 3.0 * sigma(expected, 100_000),
        "{observed}"
    );
}

#[test]
fn demo_token_rates_match_closed_form() {
    let config = demo_config(100_000, 42);
    let ds = generate_truth(&config).unwrap();
    for t in 0..ds.catalog().len() {
        let expected = config.expected_fire_rate(t);
        let observed = rate(&ds, t);
        assert!(
            (observed - expected).abs() <= 3.0 * sigma(expected, ds.len()),
            "token {t}: {observed} vs {expected}"
        );
    }
}

/// Every token fires independently with probability `q`; the single cause
/// never occurs.
fn flat_population(q: f64, n: usize, seed: u64) -> GeneratorConfig {
    let catalog = Arc::new(TokenCatalog::default_catalog());
    let n_tokens = catalog.len();
    GeneratorConfig {
        latent_causes: vec![LatentCause {
            name: "inactive".into(),
            prevalence: 0.0,
            token_weights: vec![0.0; n_tokens],
            severity: 0.0,
        }],
        base_fire_rate: vec![q; n_tokens],
        ..GeneratorConfig::new(catalog, n, seed)
    }
}

/// Expected report probability of a true selection under each layout, for
/// multipliers [1.4, 1, 1, ...] normalized by the top one.
fn expected_report(panel_size: usize, top: bool, randomized: bool) -> f64 {
    let rest = 1.0 / 1.4;
    if randomized {
        (1.0 + (panel_size - 1) as f64 * rest) / panel_size as f64
    } else if top {
        1.0
    } else {
        rest
    }
}

#[test]
fn presentation_rates_match_permutation_average() {
    let q = 0.3;
    let n = 50_000;
    let generator = flat_population(q, n, 9);
    let catalog = TokenCatalog::default_catalog();
    let fixed = simulate_arm(
        &generator,
        &PresentationConfig::fixed_default(),
        Arm::Control,
    )
    .unwrap();
    let randomized = simulate_arm(
        &generator,
        &PresentationConfig::randomized_default(),
        Arm::Treatment,
    )
    .unwrap();
    let report = run_abtest(&fixed, &randomized).unwrap();

    for panel in [Panel::Audio, Panel::Video] {
        let ids = catalog.panel_tokens(panel);
        for (rank, &t) in ids.iter().enumerate() {
            let pc = q * expected_report(ids.len(), rank == 0, false);
            let pt = q * expected_report(ids.len(), rank == 0, true);
            assert!(
                (rate(&fixed, t) - pc).abs() <= 3.0 * sigma(pc, n),
                "fixed {t}"
            );
            assert!(
                (rate(&randomized, t) - pt).abs() <= 3.0 * sigma(pt, n),
                "randomized {t}"
            );

            let delta = report.per_token[t].comparison.relative_delta.unwrap();
            let expected = pt / pc - 1.0;
            let se = (pt / pc) * ((sigma(pt, n) / pt).powi(2) + (sigma(pc, n) / pc).powi(2)).sqrt();
            assert!(
                (delta - expected).abs() <= 3.0 * se,
                "token {t}: delta {delta} vs {expected}"
            );
            if rank == 0 {
                assert!(delta < 0.0 && report.per_token[t].comparison.p_value < 0.01);
            } else {
                assert!(expected > 0.0);
            }
        }
    }
}

#[test]
fn pooled_p_value_agrees_with_binomial_simulation() {
    let (c, t, n) = (500u64, 450u64, 10_000u64);
    let cmp = compare_proportions(c, n, t, n).unwrap();
    assert!((cmp.relative_delta.unwrap() + 0.10).abs() < 1e-12);
    assert!((cmp.z.abs() - 1.66).abs() < 0.01);
    assert!((cmp.p_value - 0.096).abs() < 0.005);

    let pooled = (c + t) as f64 / (2 * n) as f64;
    let draws = Binomial::new(n, pooled).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 1_000_000;
    let extreme = (0..trials)
        .filter(|_| {
            let (x, y) = (draws.sample(&mut rng), draws.sample(&mut rng));
            let p = (x + y) as f64 / (2 * n) as f64;
            let se = (p * (1.0 - p) * 2.0 / n as f64).sqrt();
            ((x as f64 - y as f64) / n as f64 / se).abs() >= cmp.z.abs()
        })
        .count();
    let simulated = extreme as f64 / trials as f64;
    assert!(
        (simulated - cmp.p_value).abs() < 0.005,
        "simulated {simulated} vs {}",
        cmp.p_value
    );
}

#[test]
fn bundled_demo_config_matches_builtin_generator() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo/demo.toml");
    let experiment = load_experiment(path).unwrap();
    assert_eq!(experiment.generator, demo_config(100_000, 42));
    assert!(experiment.arms.is_empty());
}

#[test]
fn synthetic_files_round_trip_byte_identically() {
    let config = GeneratorConfig {
        unrated_fraction: 0.1,
        ..demo_config(1000, 7)
    };
    let ds = generate_truth(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, format) in [("a.csv", Format::Csv), ("a.jsonl", Format::Jsonl)] {
        let first = dir.path().join(name);
        let second = dir.path().join(format!("again-{name}"));
        save_dataset(&ds, &first, format).unwrap();
        let loaded = load_dataset(&first, format, ds.catalog()).unwrap();
        assert_eq!(loaded, ds);
        save_dataset(&loaded, &second, format).unwrap();
        let reloaded = load_dataset(&second, format, ds.catalog()).unwrap();
        assert_eq!(reloaded, ds);
        assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap()
        );
    }
}
