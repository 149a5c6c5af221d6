//! Subcommand implementations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hfnd_core::corpus::{
    self, load_dataset, load_dataset_with_tag, save_dataset, stratified_split, DatasetTag,
    FileFormat, NewsRecord, SplitSpec, DEFAULT_SHORT_LONG_THRESHOLD,
};
use hfnd_core::eval::{
    cross_domain_matrix, evaluate_run, heatmap_svg_string, Classifier4, CrossDomainMatrix,
    EvalReport, CROSS_DOMAIN_AXES,
};
use hfnd_core::hierarchy::{self, Axis, HierarchicalModel};
use hfnd_core::linear::{self, persist as flat_persist, FeatureParams, FlatModel, TrainConfig};
use hfnd_core::mgtgen::{
    assign_machine_labels, build_batch_requests, ingest_responses, merge_augmentation,
    qc_filter, qc_report_csv, requests_to_jsonl, AxisExample, GeneratedPair,
    GenerationSettings, OfflineStub, QcPatterns, DEFAULT_QC_THRESHOLD_PCT,
};
use hfnd_core::textprep::{count_tokens, StopwordList};
use hfnd_core::Label4;

use crate::config::RunConfig;
use crate::manifest::ManifestBuilder;
use crate::{AxisArg, Cli, CliError, Command, ModelKind};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { input, dataset, out_dir } => ingest(&config, input, dataset, out_dir),
        Command::Stats { dataset, stopwords, threshold } => {
            stats(&config, dataset, stopwords, threshold)
        }
        Command::Split { input, seed, out_dir } => split(&config, input, seed, out_dir),
        Command::MgtBuild {
            input,
            model,
            max_tokens,
            seed,
            reengineered,
            temperature,
            top_p,
            out_dir,
        } => mgt_build(
            &config, input, model, max_tokens, seed, reengineered, temperature, top_p, out_dir,
        ),
        Command::MgtIngest { originals, responses, stub, requests, seed, out_dir } => {
            mgt_ingest(&config, originals, responses, stub, requests, seed, out_dir)
        }
        Command::MgtQc { pairs, originals, threshold, patterns, stopwords, out_dir } => {
            mgt_qc(&config, pairs, originals, threshold, patterns, stopwords, out_dir)
        }
        Command::Augment { base, extra, axis, out_dir } => augment(base, extra, axis, out_dir),
        Command::Train {
            train,
            dev,
            kind,
            stopwords,
            c_grid,
            epochs,
            seed,
            min_df,
            max_vocab,
            augment,
            augment_axis,
            out_dir,
        } => train_cmd(
            &config,
            TrainArgs {
                train,
                dev,
                kind,
                stopwords,
                c_grid,
                epochs,
                seed,
                min_df,
                max_vocab,
                augment,
                augment_axis,
                out_dir,
            },
        ),
        Command::Evaluate { model, test, name, out_dir } => evaluate(model, test, name, out_dir),
        Command::CrossEval { kind, jobs, seed, out_dir } => {
            cross_eval(&config, kind, jobs, seed, out_dir)
        }
        Command::Report { run_dir, out_dir } => report(run_dir, out_dir),
    }
}

// --- shared helpers ---------------------------------------------------

fn load_records(path: &Path) -> Result<Vec<NewsRecord>, CliError> {
    load_dataset(path, FileFormat::from_path(path))
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_stopwords(path: Option<&Path>, config: &RunConfig) -> Result<StopwordList, CliError> {
    let path = path.or(config.datasets.stopwords.as_deref());
    match path {
        Some(p) => StopwordList::from_file(p)
            .map_err(|e| CliError::Validation(format!("{}: {e}", p.display()))),
        None => Ok(StopwordList::bundled_urdu()),
    }
}

fn texts_labels(records: &[NewsRecord]) -> Vec<(String, Label4)> {
    records.iter().map(|r| (r.text.clone(), r.label)).collect()
}

fn parse_c_grid(flag: Option<&str>, config: &RunConfig) -> Result<Vec<f64>, CliError> {
    if let Some(s) = flag {
        let mut grid = Vec::new();
        for part in s.split(',') {
            let c: f64 = part
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("bad C value {part:?} in --c-grid")))?;
            if c <= 0.0 {
                return Err(CliError::Validation(format!("C must be positive, got {c}")));
            }
            grid.push(c);
        }
        if grid.is_empty() {
            return Err(CliError::Validation("--c-grid is empty".to_string()));
        }
        return Ok(grid);
    }
    Ok(config.model.c_grid.clone().unwrap_or_else(|| linear::DEFAULT_C_GRID.to_vec()))
}

/// One line of pairs.jsonl: a generated paraphrase keyed to its parent.
#[derive(Debug, Serialize, Deserialize)]
struct PairLine {
    parent_id: String,
    text: String,
    prompt_id: u8,
}

fn pairs_to_jsonl(pairs: &[GeneratedPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let line = PairLine {
            parent_id: p.parent.id.clone(),
            text: p.text.clone(),
            prompt_id: p.prompt_id,
        };
        out.push_str(&serde_json::to_string(&line).expect("pair serializes"));
        out.push('\n');
    }
    out
}

fn pairs_from_jsonl(
    jsonl: &str,
    originals: &[NewsRecord],
    path: &Path,
) -> Result<Vec<GeneratedPair>, CliError> {
    let by_id: HashMap<&str, &NewsRecord> =
        originals.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut pairs = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: PairLine = serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!("{} line {}: {e}", path.display(), i + 1))
        })?;
        let parent = by_id.get(parsed.parent_id.as_str()).ok_or_else(|| {
            CliError::Validation(format!(
                "{} line {}: parent_id {:?} not found among originals",
                path.display(),
                i + 1,
                parsed.parent_id
            ))
        })?;
        pairs.push(GeneratedPair {
            parent: (*parent).clone(),
            text: parsed.text,
            prompt_id: parsed.prompt_id,
        });
    }
    Ok(pairs)
}

/// A loaded model of either kind, for evaluation commands.
enum AnyModel {
    Flat(FlatModel),
    Hierarchical(HierarchicalModel),
}

impl Classifier4 for AnyModel {
    fn predict4(&self, text: &str) -> Label4 {
        match self {
            AnyModel::Flat(m) => m.predict4(text),
            AnyModel::Hierarchical(m) => m.predict4(text),
        }
    }

    fn fake_margin(&self, text: &str) -> f64 {
        match self {
            AnyModel::Flat(m) => m.fake_margin(text),
            AnyModel::Hierarchical(m) => m.fake_margin(text),
        }
    }
}

fn load_any_model(path: &Path) -> Result<AnyModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    match value.get("magic").and_then(|m| m.as_str()) {
        Some(flat_persist::FLAT_MAGIC) => flat_persist::load_flat(path)
            .map(AnyModel::Flat)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display()))),
        Some(hierarchy::persist::HIER_MAGIC) => hierarchy::persist::load_hier(path)
            .map(AnyModel::Hierarchical)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display()))),
        other => Err(CliError::Validation(format!(
            "{}: unknown model magic {:?}",
            path.display(),
            other
        ))),
    }
}

// --- subcommands ------------------------------------------------------

fn ingest(
    config: &RunConfig,
    input: PathBuf,
    dataset: Option<String>,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let _ = config;
    let tag = match dataset.as_deref() {
        Some(name) => DatasetTag::from_name(name).ok_or_else(|| {
            CliError::Validation(format!("unknown dataset tag {name:?}, expected D1..D4"))
        })?,
        None => DatasetTag::D1,
    };
    let records = load_dataset_with_tag(&input, FileFormat::from_path(&input), tag)
        .map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;

    let mut manifest = ManifestBuilder::new("ingest", &out_dir)?;
    manifest.arg("input", input.display().to_string());
    manifest.arg("dataset", tag.name());
    manifest.input(&input)?;
    let out = manifest.out_path("dataset.csv");
    save_dataset(&records, &out, FileFormat::Csv)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    manifest.note_output("dataset.csv");
    manifest.finish()?;
    println!("ingested {} records -> {}", records.len(), out.display());
    Ok(())
}

fn stats(
    config: &RunConfig,
    dataset: PathBuf,
    stopwords: Option<PathBuf>,
    threshold: Option<f64>,
) -> Result<(), CliError> {
    let records = load_records(&dataset)?;
    let stop = load_stopwords(stopwords.as_deref(), config)?;
    let threshold = threshold.unwrap_or(DEFAULT_SHORT_LONG_THRESHOLD);
    let s = corpus::corpus_stats_with_threshold(&records, &stop, threshold);

    println!("dataset: {}", dataset.display());
    println!("{:<6} {:>8} {:>12}", "label", "count", "mean_tokens");
    for label in Label4::ALL {
        let i = label.index();
        println!("{:<6} {:>8} {:>12.1}", label.code(), s.counts[i], s.mean_tokens[i]);
    }
    println!("{:<6} {:>8}", "total", s.counts.iter().sum::<usize>());
    println!("category: {:?} (threshold {threshold} tokens)", s.category);
    Ok(())
}

fn split(
    config: &RunConfig,
    input: PathBuf,
    seed: Option<u64>,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let seed = seed.or(config.split.seed).unwrap_or(0);
    let records = load_records(&input)?;
    let (train, dev, test) = stratified_split(&records, &SplitSpec::new(seed))
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let mut manifest = ManifestBuilder::new("split", &out_dir)?;
    manifest.arg("input", input.display().to_string());
    manifest.seed("seed", seed);
    manifest.input(&input)?;
    for (name, part) in [("train.csv", &train), ("dev.csv", &dev), ("test.csv", &test)] {
        let path = manifest.out_path(name);
        save_dataset(part, &path, FileFormat::Csv)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        manifest.note_output(name);
    }
    manifest.finish()?;
    println!("split {} -> train {} / dev {} / test {}", records.len(), train.len(), dev.len(), test.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn mgt_build(
    config: &RunConfig,
    input: PathBuf,
    model: Option<String>,
    max_tokens: Option<u32>,
    seed: Option<u64>,
    reengineered: bool,
    temperature: Option<f64>,
    top_p: Option<f64>,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let settings = GenerationSettings {
        model: model
            .or_else(|| config.mgt.model.clone())
            .unwrap_or_else(|| "gpt-4o".to_string()),
        max_tokens: max_tokens.or(config.mgt.max_tokens).unwrap_or(2048),
        seed: seed.or(config.mgt.seed).unwrap_or(0),
        reengineered: reengineered || config.mgt.reengineered.unwrap_or(false),
        temperature: temperature.or(config.mgt.temperature),
        top_p: top_p.or(config.mgt.top_p),
    };
    let records = load_records(&input)?;
    let requests = build_batch_requests(&records, &settings)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let mut manifest = ManifestBuilder::new("mgt-build", &out_dir)?;
    manifest.arg("input", input.display().to_string());
    manifest.arg("model", &settings.model);
    manifest.arg("max_tokens", settings.max_tokens);
    manifest.arg("reengineered", settings.reengineered);
    manifest.arg("temperature", settings.temperature);
    manifest.arg("top_p", settings.top_p);
    manifest.seed("seed", settings.seed);
    manifest.input(&input)?;
    manifest.write_output("requests.jsonl", &requests_to_jsonl(&requests))?;
    manifest.finish()?;
    println!("wrote {} batch requests", requests.len());
    Ok(())
}

fn mgt_ingest(
    config: &RunConfig,
    originals: PathBuf,
    responses: Option<PathBuf>,
    stub: bool,
    requests: Option<PathBuf>,
    seed: Option<u64>,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let seed = seed.or(config.mgt.seed).unwrap_or(0);
    let records = load_records(&originals)?;

    let mut manifest = ManifestBuilder::new("mgt-ingest", &out_dir)?;
    manifest.arg("originals", originals.display().to_string());
    manifest.arg("stub", stub);
    manifest.seed("seed", seed);
    manifest.input(&originals)?;

    let response_text = if stub {
        let req_path = requests.expect("clap enforces --requests with --stub");
        manifest.arg("requests", req_path.display().to_string());
        manifest.input(&req_path)?;
        let request_jsonl = std::fs::read_to_string(&req_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", req_path.display())))?;
        let out = OfflineStub { seed }
            .run_jsonl(&request_jsonl)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        manifest.write_output("responses.jsonl", &out)?;
        out
    } else {
        let resp_path = responses.ok_or_else(|| {
            CliError::Validation("either --responses FILE or --stub is required".to_string())
        })?;
        manifest.arg("responses", resp_path.display().to_string());
        manifest.input(&resp_path)?;
        std::fs::read_to_string(&resp_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", resp_path.display())))?
    };

    let outcome = ingest_responses(&response_text, &records, seed)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    manifest.write_output("pairs.jsonl", &pairs_to_jsonl(&outcome.pairs))?;
    let mut failures = String::new();
    for f in &outcome.failures {
        failures.push_str(&serde_json::to_string(f).expect("failure serializes"));
        failures.push('\n');
    }
    manifest.write_output("failures.jsonl", &failures)?;
    manifest.finish()?;
    println!("ingested {} pairs, {} failures", outcome.pairs.len(), outcome.failures.len());
    Ok(())
}

fn mgt_qc(
    config: &RunConfig,
    pairs_path: PathBuf,
    originals: PathBuf,
    threshold: Option<f64>,
    patterns: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let threshold =
        threshold.or(config.mgt.threshold_pct).unwrap_or(DEFAULT_QC_THRESHOLD_PCT);
    if threshold <= 0.0 {
        return Err(CliError::Validation(format!(
            "QC threshold must be positive, got {threshold}"
        )));
    }
    let records = load_records(&originals)?;
    let stop = load_stopwords(stopwords.as_deref(), config)?;
    let qc_patterns = match &patterns {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            QcPatterns::from_text(&text)
        }
        None => QcPatterns::bundled(),
    };
    let jsonl = std::fs::read_to_string(&pairs_path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", pairs_path.display())))?;
    let pairs = pairs_from_jsonl(&jsonl, &records, &pairs_path)?;

    let (accepted, verdicts) = qc_filter(&pairs, &stop, &qc_patterns, threshold);
    let machine = assign_machine_labels(&accepted);

    let mut manifest = ManifestBuilder::new("mgt-qc", &out_dir)?;
    manifest.arg("pairs", pairs_path.display().to_string());
    manifest.arg("originals", originals.display().to_string());
    manifest.arg("threshold_pct", threshold);
    manifest.input(&pairs_path)?;
    manifest.input(&originals)?;
    if let Some(p) = &patterns {
        manifest.arg("patterns", p.display().to_string());
        manifest.input(p)?;
    }
    let machine_path = manifest.out_path("machine.csv");
    save_dataset(&machine, &machine_path, FileFormat::Csv)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", machine_path.display())))?;
    manifest.note_output("machine.csv");
    manifest.write_output("qc.csv", &qc_report_csv(&verdicts))?;
    manifest.finish()?;
    println!(
        "qc: {} of {} pairs accepted (threshold {threshold}%)",
        accepted.len(),
        pairs.len()
    );
    Ok(())
}

fn augment(
    base: PathBuf,
    extra: PathBuf,
    axis: AxisArg,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let base_records = load_records(&base)?;
    let extra_text = std::fs::read_to_string(&extra)
        .map_err(|e| CliError::Validation(format!("{}: {e}", extra.display())))?;
    let mut extra_examples = Vec::new();
    for (i, line) in extra_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ex: AxisExample = serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!("{} line {}: {e}", extra.display(), i + 1))
        })?;
        extra_examples.push(ex);
    }
    let axis = match axis {
        AxisArg::Origin => Axis::Origin,
        AxisArg::Veracity => Axis::Veracity,
    };
    let merged = merge_augmentation(&base_records, &extra_examples, axis)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let mut manifest = ManifestBuilder::new("augment", &out_dir)?;
    manifest.arg("base", base.display().to_string());
    manifest.arg("extra", extra.display().to_string());
    manifest.arg("axis", format!("{axis:?}"));
    manifest.input(&base)?;
    manifest.input(&extra)?;
    let mut out = String::new();
    for ex in &merged {
        out.push_str(&serde_json::to_string(ex).expect("example serializes"));
        out.push('\n');
    }
    manifest.write_output("merged.jsonl", &out)?;
    manifest.finish()?;
    println!("merged {} base + {} extra -> {}", base_records.len(), extra_examples.len(), merged.len());
    Ok(())
}

struct TrainArgs {
    train: PathBuf,
    dev: PathBuf,
    kind: Option<ModelKind>,
    stopwords: Option<PathBuf>,
    c_grid: Option<String>,
    epochs: Option<u32>,
    seed: Option<u64>,
    min_df: Option<usize>,
    max_vocab: Option<usize>,
    augment: Option<PathBuf>,
    augment_axis: Option<AxisArg>,
    out_dir: PathBuf,
}

fn train_cmd(config: &RunConfig, args: TrainArgs) -> Result<(), CliError> {
    let kind = args
        .kind
        .or(config.model_kind()?)
        .unwrap_or(ModelKind::Hierarchical);
    let grid = parse_c_grid(args.c_grid.as_deref(), config)?;
    let epochs = args.epochs.or(config.model.epochs).unwrap_or(50) as usize;
    let seed = args.seed.or(config.model.seed).unwrap_or(0);
    let params = FeatureParams {
        min_df: args.min_df.or(config.model.min_df).unwrap_or(2),
        max_vocab: args.max_vocab.or(config.model.max_vocab).unwrap_or(50_000),
    };
    let cfg = TrainConfig::new(1.0, epochs, seed);
    let stop = load_stopwords(args.stopwords.as_deref(), config)?;
    let train_records = load_records(&args.train)?;
    let dev_records = load_records(&args.dev)?;
    let train_set = texts_labels(&train_records);
    let dev_set = texts_labels(&dev_records);

    let mut manifest = ManifestBuilder::new("train", &args.out_dir)?;
    manifest.arg("train", args.train.display().to_string());
    manifest.arg("dev", args.dev.display().to_string());
    manifest.arg("kind", format!("{kind:?}"));
    manifest.arg("c_grid", &grid);
    manifest.arg("epochs", epochs);
    manifest.arg("min_df", params.min_df);
    manifest.arg("max_vocab", params.max_vocab);
    manifest.seed("seed", seed);
    manifest.input(&args.train)?;
    manifest.input(&args.dev)?;

    let model_path = manifest.out_path("model.json");
    match kind {
        ModelKind::Flat => {
            if args.augment.is_some() {
                return Err(CliError::Validation(
                    "--augment is only supported with --kind hierarchical".to_string(),
                ));
            }
            let model = linear::train_flat(&train_set, &dev_set, &stop, params, &grid, &cfg)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            flat_persist::save_flat(&model, &model_path)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
        ModelKind::Hierarchical => {
            let (extra, extra_axis) = match (&args.augment, args.augment_axis) {
                (Some(path), Some(axis_arg)) => {
                    manifest.arg("augment", path.display().to_string());
                    manifest.input(path)?;
                    let axis = match axis_arg {
                        AxisArg::Origin => Axis::Origin,
                        AxisArg::Veracity => Axis::Veracity,
                    };
                    manifest.arg("augment_axis", format!("{axis:?}"));
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::Validation(format!("{}: {e}", path.display()))
                    })?;
                    let mut extra = Vec::new();
                    for (i, line) in text.lines().enumerate() {
                        if line.trim().is_empty() {
                            continue;
                        }
                        let ex: AxisExample = serde_json::from_str(line).map_err(|e| {
                            CliError::Validation(format!("{} line {}: {e}", path.display(), i + 1))
                        })?;
                        let sign = ex.axis_sign(axis).ok_or_else(|| {
                            CliError::Validation(format!(
                                "augment record {:?} lacks the {axis:?} label",
                                ex.id
                            ))
                        })?;
                        extra.push((ex.text, sign));
                    }
                    (extra, Some(axis))
                }
                _ => (Vec::new(), None),
            };
            let model = hierarchy::train_hierarchical_augmented(
                &train_set, &dev_set, &stop, params, &grid, &cfg, &extra, extra_axis,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            hierarchy::persist::save_hier(&model, &model_path)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    manifest.note_output("model.json");
    manifest.finish()?;
    println!("trained {kind:?} model on {} records -> {}", train_set.len(), model_path.display());
    Ok(())
}

fn evaluate(
    model_path: PathBuf,
    test: PathBuf,
    name: Option<String>,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let model = load_any_model(&model_path)?;
    let records = load_records(&test)?;
    let test_name = name.unwrap_or_else(|| {
        test.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    });
    let train_config = match &model {
        AnyModel::Flat(_) => "flat-ovr",
        AnyModel::Hierarchical(_) => "hierarchical",
    };
    let report = evaluate_run(&model, &records, train_config, &test_name)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut manifest = ManifestBuilder::new("evaluate", &out_dir)?;
    manifest.arg("model", model_path.display().to_string());
    manifest.arg("test", test.display().to_string());
    manifest.arg("name", &test_name);
    manifest.input(&model_path)?;
    manifest.input(&test)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    manifest.write_output("report.json", &json)?;
    manifest.finish()?;
    print!("{}", report.to_text_table());
    Ok(())
}

fn cross_eval(
    config: &RunConfig,
    kind: Option<ModelKind>,
    jobs: Option<usize>,
    seed: Option<u64>,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let kind = kind.or(config.model_kind()?).unwrap_or(ModelKind::Hierarchical);
    let jobs = jobs.unwrap_or(1);
    let seed = seed.or(config.split.seed).unwrap_or(0);
    let grid = parse_c_grid(None, config)?;
    let epochs = config.model.epochs.unwrap_or(50) as usize;
    let model_seed = config.model.seed.unwrap_or(0);
    let params = FeatureParams {
        min_df: config.model.min_df.unwrap_or(2),
        max_vocab: config.model.max_vocab.unwrap_or(50_000),
    };
    let cfg = TrainConfig::new(1.0, epochs, model_seed);
    let stop = load_stopwords(None, config)?;

    let tagged_paths: [(DatasetTag, Option<&PathBuf>); 4] = [
        (DatasetTag::D1, config.datasets.d1.as_ref()),
        (DatasetTag::D2, config.datasets.d2.as_ref()),
        (DatasetTag::D3, config.datasets.d3.as_ref()),
        (DatasetTag::D4, config.datasets.d4.as_ref()),
    ];
    let mut manifest = ManifestBuilder::new("cross-eval", &out_dir)?;
    manifest.arg("kind", format!("{kind:?}"));
    manifest.arg("jobs", jobs);
    manifest.arg("c_grid", &grid);
    manifest.arg("epochs", epochs);
    manifest.seed("split_seed", seed);
    manifest.seed("model_seed", model_seed);

    let mut per_domain: Vec<Vec<NewsRecord>> = Vec::with_capacity(4);
    for (tag, path) in tagged_paths {
        let path = path.ok_or_else(|| {
            CliError::Validation(format!(
                "cross-eval needs datasets.{} in the config file",
                tag.name().to_lowercase()
            ))
        })?;
        manifest.arg(&format!("dataset_{}", tag.name()), path.display().to_string());
        manifest.input(path)?;
        let records = load_dataset_with_tag(path, FileFormat::from_path(path), tag)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        per_domain.push(records);
    }

    let all: Vec<NewsRecord> = per_domain.iter().flatten().cloned().collect();
    let threshold = DEFAULT_SHORT_LONG_THRESHOLD;
    let short: Vec<NewsRecord> = all
        .iter()
        .filter(|r| (count_tokens(&r.text, &stop) as f64) < threshold)
        .cloned()
        .collect();
    let long: Vec<NewsRecord> = all
        .iter()
        .filter(|r| (count_tokens(&r.text, &stop) as f64) >= threshold)
        .cloned()
        .collect();

    // row order must match CROSS_DOMAIN_AXES
    let corpora: [Vec<NewsRecord>; 7] = [
        per_domain[0].clone(),
        per_domain[1].clone(),
        per_domain[2].clone(),
        per_domain[3].clone(),
        short,
        long,
        all,
    ];
    let mut trains: Vec<Vec<(String, Label4)>> = Vec::with_capacity(7);
    let mut devs: Vec<Vec<(String, Label4)>> = Vec::with_capacity(7);
    let mut tests: Vec<Vec<NewsRecord>> = Vec::with_capacity(7);
    for (records, name) in corpora.iter().zip(CROSS_DOMAIN_AXES) {
        let (train, dev, test) =
            stratified_split(records, &SplitSpec::new(seed)).map_err(|e| {
                CliError::Validation(format!("config {name}: {e}"))
            })?;
        trains.push(texts_labels(&train));
        devs.push(texts_labels(&dev));
        tests.push(test);
    }
    let test_sets: [Vec<NewsRecord>; 7] =
        tests.try_into().expect("exactly seven test splits");

    let trainer = |row: usize| -> Result<AnyModel, CliError> {
        match kind {
            ModelKind::Flat => {
                linear::train_flat(&trains[row], &devs[row], &stop, params, &grid, &cfg)
                    .map(AnyModel::Flat)
                    .map_err(|e| CliError::Runtime(e.to_string()))
            }
            ModelKind::Hierarchical => hierarchy::train_hierarchical(
                &trains[row], &devs[row], &stop, params, &grid, &cfg,
            )
            .map(AnyModel::Hierarchical)
            .map_err(|e| CliError::Runtime(e.to_string())),
        }
    };
    let matrix: CrossDomainMatrix = cross_domain_matrix(trainer, &test_sets, jobs)?;

    manifest.write_output("crossdomain.csv", &matrix.to_csv_string())?;
    manifest.write_output("heatmap.svg", &heatmap_svg_string(&matrix))?;
    manifest.finish()?;
    println!(
        "cross-domain mean diagonal {:.4}, mean off-diagonal {:.4}",
        matrix.mean_diagonal(),
        matrix.mean_off_diagonal()
    );
    Ok(())
}

fn parse_crossdomain_csv(text: &str, path: &Path) -> Result<CrossDomainMatrix, CliError> {
    let bad = |msg: &str| CliError::Validation(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let expected_header = format!("train\\test,{}", CROSS_DOMAIN_AXES.join(","));
    if header != expected_header {
        return Err(bad("unexpected header row"));
    }
    let mut values = [[0.0f64; 7]; 7];
    for (i, name) in CROSS_DOMAIN_AXES.iter().enumerate() {
        let line = lines.next().ok_or_else(|| bad("missing matrix row"))?;
        let mut cells = line.split(',');
        if cells.next() != Some(name) {
            return Err(bad("unexpected row label"));
        }
        for j in 0..7 {
            let cell = cells.next().ok_or_else(|| bad("missing matrix cell"))?;
            values[i][j] =
                cell.parse().map_err(|_| bad("matrix cell is not a number"))?;
        }
    }
    Ok(CrossDomainMatrix { values })
}

fn report(run_dir: PathBuf, out_dir: PathBuf) -> Result<(), CliError> {
    let report_path = run_dir.join("report.json");
    let matrix_path = run_dir.join("crossdomain.csv");
    if !report_path.exists() && !matrix_path.exists() {
        return Err(CliError::Validation(format!(
            "{} holds neither report.json nor crossdomain.csv",
            run_dir.display()
        )));
    }

    let mut manifest = ManifestBuilder::new("report", &out_dir)?;
    manifest.arg("run_dir", run_dir.display().to_string());
    let mut summary = String::new();

    if report_path.exists() {
        manifest.input(&report_path)?;
        let text = std::fs::read_to_string(&report_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", report_path.display())))?;
        let parsed: EvalReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", report_path.display())))?;
        summary.push_str(&parsed.to_text_table());
    }
    if matrix_path.exists() {
        manifest.input(&matrix_path)?;
        let text = std::fs::read_to_string(&matrix_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", matrix_path.display())))?;
        let matrix = parse_crossdomain_csv(&text, &matrix_path)?;
        summary.push_str(&format!(
            "cross-domain mean diagonal {:.4}, mean off-diagonal {:.4}\n",
            matrix.mean_diagonal(),
            matrix.mean_off_diagonal()
        ));
        manifest.write_output("heatmap.svg", &heatmap_svg_string(&matrix))?;
    }
    manifest.write_output("summary.txt", &summary)?;
    manifest.finish()?;
    print!("{summary}");
    Ok(())
}
