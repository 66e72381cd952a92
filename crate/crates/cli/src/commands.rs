use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use ptq_core::abtest::run_abtest_with;
use ptq_core::dataset::{load_dataset, write_csv, write_jsonl, Format};
use ptq_core::evaluation::{
    evaluate_subsets, write_reports_csv, EvalReport, ScorerConfig, SplitPlan,
};
use ptq_core::infotheory::{
    audit_monotonicity, audit_submodularity, information_gain, AuditReport, MAX_SUBSET,
};
use ptq_core::rng::derive_seed;
use ptq_core::selection::{select, select_auc_greedy, select_random, select_rits};
use ptq_core::synthgen::{generate_truth, load_experiment, simulate_arm};
use ptq_core::{Dataset, Error, Result, SelectionTrace, Strategy, TokenCatalog};
use serde::Serialize;

use crate::cli::{
    AbtestArgs, AuditArgs, DataArgs, EvaluateArgs, FileFormat, GenerateArgs, SelectArgs,
};
use crate::manifest::RunRecorder;

pub const CATALOG_FILE: &str = "catalog.csv";
const BUILT_IN_CATALOG: &str = "<built-in catalog>";

fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn catalog_bytes(catalog: &TokenCatalog) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    catalog.write_csv(&mut bytes)?;
    Ok(bytes)
}

/// Explicit `--catalog`, else `catalog.csv` beside `input`, else built-in.
fn resolve_catalog(
    explicit: Option<&Path>,
    input: &Path,
    run: &mut RunRecorder,
) -> Result<TokenCatalog> {
    let sibling = input
        .parent()
        .map(|d| d.join(CATALOG_FILE))
        .filter(|p| p.is_file());
    match explicit.map(Path::to_path_buf).or(sibling) {
        Some(path) => {
            let bytes = run.input_file(&path)?;
            TokenCatalog::read_csv(bytes.as_slice())
        }
        None => {
            let catalog = TokenCatalog::default_catalog();
            run.input_bytes(BUILT_IN_CATALOG, &catalog_bytes(&catalog)?);
            Ok(catalog)
        }
    }
}

fn load_input(data: &DataArgs, run: &mut RunRecorder) -> Result<Dataset> {
    let catalog = resolve_catalog(data.catalog.as_deref(), &data.input, run)?;
    run.input_file(&data.input)?;
    load_dataset(&data.input, Format::from_path(&data.input), &catalog)
}

fn stdout_error(source: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source,
    }
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Parameter(format!("`{command}` requires --seed")))
}

pub fn generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let mut run = RunRecorder::new("generate", &args.output)?;
    run.input_file(&args.config)?;
    let mut experiment = load_experiment(&args.config)?;
    if let Some(seed) = args.seed {
        experiment.generator.seed = seed;
    }
    let generator = &experiment.generator;
    run.seed(Some(generator.seed));
    run.param("format", format!("{:?}", args.format).to_lowercase());

    let ext = match args.format {
        FileFormat::Csv => "csv",
        FileFormat::Jsonl => "jsonl",
    };
    let serialize = |ds: &Dataset| -> Result<Vec<u8>> {
        let mut bytes = Vec::new();
        match args.format {
            FileFormat::Csv => write_csv(ds, &mut bytes)?,
            FileFormat::Jsonl => write_jsonl(ds, &mut bytes)?,
        }
        Ok(bytes)
    };

    run.write(CATALOG_FILE, &catalog_bytes(&generator.catalog)?)?;
    if experiment.arms.is_empty() {
        let ds = generate_truth(generator)?;
        let name = format!("dataset.{ext}");
        run.write(&name, &serialize(&ds)?)?;
        writeln!(
            out,
            "wrote {} calls to {}",
            ds.len(),
            run.path(&name).display()
        )
        .map_err(stdout_error)?;
    } else {
        for (arm, presentation) in &experiment.arms {
            let ds = simulate_arm(generator, presentation, *arm)?;
            let name = format!("{arm}.{ext}");
            run.write(&name, &serialize(&ds)?)?;
            writeln!(
                out,
                "wrote {} {arm} calls to {}",
                ds.len(),
                run.path(&name).display()
            )
            .map_err(stdout_error)?;
        }
    }
    run.finish()?;
    Ok(())
}

pub fn select_cmd(args: &SelectArgs, out: &mut dyn Write) -> Result<()> {
    let mut run = RunRecorder::new("select", &args.output)?;
    let ds = load_input(&args.data, &mut run)?;
    run.seed(args.seed);
    run.param("k", args.k);
    run.param("strategy", args.strategy);
    run.param("splits", args.splits);

    let trace = select(&ds, args.strategy, args.k, args.seed, args.splits)?;
    let mut json = trace.to_json(ds.catalog())?;
    json.push('\n');
    run.write("trace.json", json.as_bytes())?;
    write!(out, "{}", trace.table(ds.catalog())).map_err(stdout_error)?;
    run.finish()?;
    Ok(())
}

/// How quickly the greedy trace approaches the information in the whole
/// catalog.
#[derive(Debug, Serialize)]
pub struct Concentration {
    pub full_ig_bits: f64,
    /// Cumulative greedy IG over full-set IG, per k.
    pub ratios: Vec<f64>,
    pub k_at_90: Option<usize>,
    pub k_at_94: Option<usize>,
}

impl Concentration {
    /// `None` when the catalog is too large to score as one subset.
    pub fn compute(ds: &Dataset) -> Result<Option<Self>> {
        let n = ds.catalog().len();
        if n > MAX_SUBSET {
            return Ok(None);
        }
        let all: Vec<usize> = (0..n).collect();
        let full = information_gain(ds, &all)?.bits();
        let trace = select_rits(ds, n)?;
        let ratios: Vec<f64> = trace
            .steps
            .iter()
            .map(|s| if full > 0.0 { s.cumulative / full } else { 1.0 })
            .collect();
        let first = |level: f64| ratios.iter().position(|&r| r >= level).map(|i| i + 1);
        Ok(Some(Self {
            full_ig_bits: full,
            k_at_90: first(0.90),
            k_at_94: first(0.94),
            ratios,
        }))
    }
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    seed: u64,
    splits: usize,
    train_fraction: f64,
    scorer: ptq_core::evaluation::ScorerKind,
    reports: &'a [EvalReport],
    concentration: Option<Concentration>,
}

/// Seed stream of the AUC-greedy ranking splits, kept apart from the
/// evaluation splits drawn from the same master seed.
const RANKING_STREAM: u64 = 0x5241_4e4b;

fn strategy_trace(
    ds: &Dataset,
    strategy: Strategy,
    k: usize,
    splits: usize,
    seed: u64,
) -> Result<SelectionTrace> {
    match strategy {
        Strategy::Rits => select_rits(ds, k),
        Strategy::AucGreedy => select_auc_greedy(ds, k, splits, derive_seed(seed, RANKING_STREAM)),
        Strategy::Random => select_random(ds.catalog().len(), k, seed),
        Strategy::RitsLazy => select(ds, strategy, k, Some(seed), splits),
        Strategy::Exhaustive => Err(Error::Parameter(
            "exhaustive subsets are not nested across k and cannot be evaluated as a curve".into(),
        )),
    }
}

pub fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let mut run = RunRecorder::new("evaluate", &args.output)?;
    let ds = load_input(&args.data, &mut run)?;
    let seed = require_seed(args.seed, "evaluate")?;
    run.seed(Some(seed));
    let n = ds.catalog().len();
    let k_max = args.k_max.unwrap_or(n.min(MAX_SUBSET));
    if k_max == 0 || k_max > n {
        return Err(Error::Parameter(format!(
            "k-max {k_max} must be between 1 and the catalog size {n}"
        )));
    }
    if args.strategies.is_empty() {
        return Err(Error::Parameter("no strategies given".into()));
    }
    let names: Vec<&str> = args.strategies.iter().map(|s| s.name()).collect();
    run.param("strategies", names.join(","));
    run.param("k_max", k_max);
    run.param("splits", args.splits);
    run.param("train_frac", args.train_frac);
    run.param("scorer", format!("{:?}", args.scorer).to_lowercase());
    run.param("trees", args.trees);

    let plan = SplitPlan::new(args.splits, args.train_frac, seed)?;
    let mut scorer = ScorerConfig::of_kind(args.scorer.into());
    scorer.forest.trees = args.trees;
    let traces = args
        .strategies
        .iter()
        .map(|&s| strategy_trace(&ds, s, k_max, args.splits, seed))
        .collect::<Result<Vec<_>>>()?;
    let reports = evaluate_subsets(&ds, &traces, &plan, &scorer)?;
    let concentration = if args.strategies.contains(&Strategy::Rits) {
        Concentration::compute(&ds)?
    } else {
        None
    };

    for (trace, report) in traces.iter().zip(&reports) {
        let mut json = trace.to_json(ds.catalog())?;
        json.push('\n');
        run.write(&format!("trace_{}.json", trace.strategy), json.as_bytes())?;
        let mut csv = Vec::new();
        write_reports_csv(std::slice::from_ref(report), &mut csv)?;
        run.write(&format!("eval_{}.csv", trace.strategy), &csv)?;
    }
    let output = EvaluateOutput {
        seed,
        splits: args.splits,
        train_fraction: args.train_frac,
        scorer: scorer.kind,
        reports: &reports,
        concentration,
    };
    run.write("eval_report.json", &to_json_bytes(&output)?)?;

    write!(out, "{}", auc_table(&reports)).map_err(stdout_error)?;
    if let Some(c) = &output.concentration {
        let show = |k: Option<usize>| k.map_or_else(|| "never".to_string(), |k| format!("k={k}"));
        writeln!(out, "full-set IG: {:.6} bits", c.full_ig_bits).map_err(stdout_error)?;
        writeln!(
            out,
            "RITS reaches 90% of full-set IG at {}",
            show(c.k_at_90)
        )
        .map_err(stdout_error)?;
        writeln!(
            out,
            "RITS reaches 94% of full-set IG at {}",
            show(c.k_at_94)
        )
        .map_err(stdout_error)?;
    }
    run.finish()?;
    Ok(())
}

fn auc_table(reports: &[EvalReport]) -> String {
    let mut out = format!("{:>3}", "k");
    for r in reports {
        let _ = write!(out, "  {:>21}", format!("{} auc / js", r.strategy));
    }
    out.push('\n');
    let k_max = reports.iter().map(|r| r.per_k.len()).max().unwrap_or(0);
    for k in 1..=k_max {
        let _ = write!(out, "{k:>3}");
        for r in reports {
            match r.at(k) {
                Some(p) => {
                    let _ = write!(out, "  {:>12.4} / {:>6.4}", p.auc_mean, p.js_mean);
                }
                None => {
                    let _ = write!(out, "  {:>21}", "");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn abtest(args: &AbtestArgs, out: &mut dyn Write) -> Result<()> {
    let mut run = RunRecorder::new("abtest", &args.output)?;
    let catalog = resolve_catalog(args.catalog.as_deref(), &args.control, &mut run)?;
    let mut load = |path: &PathBuf| -> Result<Dataset> {
        run.input_file(path)?;
        load_dataset(path, Format::from_path(path), &catalog)
    };
    let control = load(&args.control)?;
    let treatment = load(&args.treatment)?;
    run.seed(None);
    run.param(
        "denominator",
        format!("{:?}", args.denominator).to_lowercase(),
    );
    run.param("significance", args.significance);

    let report = run_abtest_with(
        &control,
        &treatment,
        args.denominator.into(),
        args.significance,
    )?;
    run.write("abtest_report.json", &to_json_bytes(&report)?)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    run.write("abtest.csv", &csv)?;

    let o = &report.overall;
    writeln!(
        out,
        "overall response rate: control {:.4}, treatment {:.4}, delta {}, p {:.3e}",
        o.control.rate(),
        o.treatment.rate(),
        fmt_delta(o.relative_delta),
        o.p_value
    )
    .map_err(stdout_error)?;
    writeln!(out, "{:>9}  {:>10}    {:>5}  label", "delta", "p", "dir").map_err(stdout_error)?;
    for t in &report.per_token {
        let c = &t.comparison;
        let mark = if c.is_significant(report.significance_level) {
            "*"
        } else {
            " "
        };
        writeln!(
            out,
            "{:>9}  {:>10.3e} {mark}  {:>5}  {}",
            fmt_delta(c.relative_delta),
            c.p_value,
            c.direction(),
            t.label
        )
        .map_err(stdout_error)?;
    }
    writeln!(
        out,
        "{} of {} tokens significant at {}",
        report.significant_tokens().len(),
        report.per_token.len(),
        report.significance_level
    )
    .map_err(stdout_error)?;
    run.finish()?;
    Ok(())
}

fn fmt_delta(delta: Option<f64>) -> String {
    delta.map_or_else(|| "n/a".to_string(), |d| format!("{:+.2}%", d * 100.0))
}

#[derive(Serialize)]
struct AuditOutput {
    monotonicity: AuditReport,
    submodularity: AuditReport,
    /// Steps where the greedy marginal gain exceeded the previous one.
    rits_marginal_increases: usize,
}

pub fn audit(args: &AuditArgs, out: &mut dyn Write) -> Result<()> {
    let mut run = RunRecorder::new("audit", &args.output)?;
    let ds = load_input(&args.data, &mut run)?;
    let seed = require_seed(args.seed, "audit")?;
    run.seed(Some(seed));
    run.param("trials", args.trials);
    run.param("tolerance", args.tolerance);

    let monotonicity = audit_monotonicity(&ds, args.trials, seed)?;
    let submodularity = audit_submodularity(&ds, args.trials, seed, args.tolerance)?;
    let trace = select_rits(&ds, ds.catalog().len().min(MAX_SUBSET))?;
    let rits_marginal_increases = trace.marginals().windows(2).filter(|w| w[1] > w[0]).count();
    let output = AuditOutput {
        monotonicity,
        submodularity,
        rits_marginal_increases,
    };
    run.write("audit_report.json", &to_json_bytes(&output)?)?;

    for (name, r) in [
        ("monotonicity", &output.monotonicity),
        ("submodularity", &output.submodularity),
    ] {
        writeln!(
            out,
            "{name}: {} violations in {} trials (max excess {:.3e} bits, tolerance {:.0e})",
            r.violations, r.trials, r.max_violation, r.tolerance
        )
        .map_err(stdout_error)?;
    }
    writeln!(out, "greedy marginal increases: {rits_marginal_increases}").map_err(stdout_error)?;
    run.finish()?;
    Ok(())
}
