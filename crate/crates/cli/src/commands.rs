use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sparsedit::cluster::{
    cluster_report, default_seed_prompts, export_corpus, kmeans_fit, label_clusters_lenient, load_embeddings,
    truncated_svd, EmbeddingMatrix, HashedBowEmbedder, KMeansConfig, Matrix, INTENTS,
};
use sparsedit::edit_ops::{align, apply_plan, render_masked_input, tokenize, TagSet, TrainingRecord};
use sparsedit::encoder::gradcheck::{gradcheck as check_gradients, random_batch};
use sparsedit::encoder::{
    build_task_data, build_vocab, clone_expert, edit_iterative, freeze_for_finetune, load_checkpoint, save_checkpoint,
    AdamConfig, EditModel, EncoderConfig, Mode, ParamStore, SkipReason, StepOptions, TaskData, TrainOptions,
    TrainState, TrainableMask,
};
use sparsedit::ingest::{detect_format, ingest as ingest_dump, DumpFormat, IngestStats, SentencePair};
use sparsedit::metrics::{evaluate, read_instances, EvalInstance, InstanceScores, MetricSelection};
use sparsedit::synthetic;

use crate::config::RunConfig;
use crate::run::RunDir;
use crate::CliError;

const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line)
            .map_err(|e| CliError::validation(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(row);
    }
    Ok(out)
}

fn jsonl<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("row serializes");
        out.push(b'\n');
    }
    out
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

/// Expands directories to their `*.jsonl` files, sorted by name.
fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            files.sort();
            out.extend(files);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(CliError::usage(format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(out)
}

fn parse_intent_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

// ---- ingest --------------------------------------------------------------

#[derive(Args)]
pub struct IngestArgs {
    /// Dump files; defaults to `ingest.dumps` of the configuration.
    #[arg(long = "dump")]
    dumps: Vec<PathBuf>,
    /// Dump format; detected from the first byte when omitted.
    #[arg(long, value_parser = ["xml", "jsonl"])]
    format: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn merge_stats(into: &mut IngestStats, s: IngestStats) {
    into.pages += s.pages;
    into.revisions += s.revisions;
    into.revisions_kept += s.revisions_kept;
    into.pairs_extracted += s.pairs_extracted;
    into.pairs_kept += s.pairs_kept;
    for (k, v) in s.revisions_dropped {
        *into.revisions_dropped.entry(k).or_insert(0) += v;
    }
    for (k, v) in s.pairs_dropped {
        *into.pairs_dropped.entry(k).or_insert(0) += v;
    }
}

pub fn ingest(cfg: &RunConfig, a: IngestArgs) -> Result<(), CliError> {
    let dumps = if a.dumps.is_empty() { cfg.ingest.dumps.clone() } else { a.dumps };
    if dumps.is_empty() {
        return Err(CliError::usage("no dump given (use --dump or ingest.dumps)"));
    }
    for d in &dumps {
        if !d.is_file() {
            return Err(CliError::usage(format!("{}: no such file", d.display())));
        }
    }
    let mut run = RunDir::create(&a.out, "ingest", cfg)?;
    let pairs_path = run.path("pairs.jsonl");
    let mut out = BufWriter::new(File::create(&pairs_path).map_err(|e| CliError::io(&pairs_path, e))?);
    let mut stats = IngestStats::default();
    for d in &dumps {
        run.input(d);
        let mut reader = open(d)?;
        let format = match a.format.as_deref() {
            Some("xml") => DumpFormat::Xml,
            Some(_) => DumpFormat::Jsonl,
            None => detect_format(&mut reader)?,
        };
        let s = ingest_dump(reader, format, &cfg.ingest.filter, |p| {
            serde_json::to_writer(&mut out, p).map_err(|e| sparsedit::ingest::IngestError::Io(e.to_string()))?;
            out.write_all(b"\n").map_err(|e| sparsedit::ingest::IngestError::Io(e.to_string()))
        })?;
        merge_stats(&mut stats, s);
    }
    out.flush().map_err(|e| CliError::io(&pairs_path, e))?;
    drop(out);
    run.produced("pairs.jsonl");
    run.output_json("stats.json", &stats)?;
    eprintln!(
        "ingest: {} pages, {} revisions, {} pairs kept",
        stats.pages, stats.revisions, stats.pairs_kept
    );
    run.finish()
}

// ---- cluster -------------------------------------------------------------

#[derive(Args)]
pub struct ClusterArgs {
    /// SentencePair JSONL from `ingest`.
    #[arg(long)]
    pairs: PathBuf,
    /// Comment embeddings (`{"id", "vector"}` JSONL). Rows with ids
    /// `seed:<intent>:<i>` are seed prompts; the remaining rows are the pairs
    /// in file order. Without this file a hashed bag-of-words embedder is used.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    k: usize,
    svd_rank: usize,
    inertia: f64,
    iterations: usize,
    seed: u64,
    unlabeled_intents: &'a [String],
    clusters: BTreeMap<usize, sparsedit::cluster::ClusterSummary>,
    counts: &'a sparsedit::cluster::ExportCounts,
}

fn to_matrix(rows: &[&[f32]]) -> Matrix {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
    Matrix::from_rows(&rows)
}

pub fn cluster(cfg: &RunConfig, a: ClusterArgs) -> Result<(), CliError> {
    let c = &cfg.cluster;
    let pairs: Vec<SentencePair> = read_jsonl(&a.pairs)?;
    let comments: Vec<String> = pairs.iter().map(|p| p.comment.clone()).collect();
    let mut prompt_intents = Vec::new();
    let mut prompt_rows: Vec<Vec<f32>> = Vec::new();
    let pair_rows: Vec<Vec<f32>> = match &a.embeddings {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::usage(format!("{}: no such file", path.display())));
            }
            let m = load_embeddings(path)?;
            let mut rows = Vec::new();
            for i in 0..m.rows() {
                match m.ids[i].strip_prefix("seed:") {
                    Some(rest) => {
                        let intent = rest.split(':').next().unwrap_or(rest).to_string();
                        prompt_intents.push(intent);
                        prompt_rows.push(m.row(i).to_vec());
                    }
                    None => rows.push(m.row(i).to_vec()),
                }
            }
            if rows.len() != pairs.len() {
                return Err(CliError::validation(format!(
                    "{} embedding rows for {} pairs",
                    rows.len(),
                    pairs.len()
                )));
            }
            rows
        }
        None => {
            let emb = HashedBowEmbedder { dim: c.embedder_dim };
            for (intent, prompts) in default_seed_prompts() {
                for p in prompts {
                    prompt_intents.push(intent.clone());
                    prompt_rows.push(emb.embed(&p));
                }
            }
            let ids: Vec<String> = (0..pairs.len()).map(|i| i.to_string()).collect();
            let m: EmbeddingMatrix = emb.embed_all(ids, &comments);
            (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
        }
    };
    if pairs.len() < c.k {
        return Err(sparsedit::cluster::ClusterError::DegenerateData(format!(
            "{} pairs for k = {}",
            pairs.len(),
            c.k
        ))
        .into());
    }
    let x = to_matrix(&pair_rows.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let prompts = to_matrix(&prompt_rows.iter().map(Vec::as_slice).collect::<Vec<_>>());
    // The rank cannot exceed either side of the matrix.
    let rank = c.svd_dim.min(x.rows).min(x.cols);
    let (reduced, reduced_prompts) = if rank < x.cols {
        let svd = truncated_svd(&x, rank, c.center)?;
        let p = if prompts.rows > 0 { svd.project(&prompts) } else { prompts };
        (svd.scores, p)
    } else {
        (x, prompts)
    };
    let km = KMeansConfig {
        k: c.k,
        seed: cfg.seed,
        max_iter: c.max_iter,
        tol: c.tol,
        n_init: c.n_init,
    };
    let model = kmeans_fit(&reduced, &km)?;
    let prompt_vecs: Vec<(String, Vec<f64>)> = prompt_intents
        .into_iter()
        .enumerate()
        .map(|(i, intent)| (intent, reduced_prompts.row(i).to_vec()))
        .collect();
    let labeling = label_clusters_lenient(&model, &prompt_vecs);
    if c.strict_labels {
        if let Some(intent) = labeling.unlabeled.first() {
            return Err(sparsedit::cluster::ClusterError::UnlabeledIntent(intent.clone()).into());
        }
    }
    let mut run = RunDir::create(&a.out, "cluster", cfg)?;
    run.input(&a.pairs);
    if let Some(e) = &a.embeddings {
        run.input(e);
    }
    let mut intents: Vec<&str> = INTENTS.to_vec();
    for (intent, _) in &prompt_vecs {
        if !intents.contains(&intent.as_str()) {
            intents.push(intent);
        }
    }
    let counts = export_corpus(&run.dir, &pairs, &model.assignments, &labeling.labels, &intents, &cfg.ingest.filter)?;
    for i in &intents {
        run.produced(&format!("{i}.jsonl"));
    }
    let report = ClusterOutput {
        k: c.k,
        svd_rank: rank,
        inertia: model.inertia,
        iterations: model.iterations,
        seed: model.seed,
        unlabeled_intents: &labeling.unlabeled,
        clusters: cluster_report(&model, &labeling.labels, &comments),
        counts: &counts,
    };
    run.output_json("cluster_report.json", &report)?;
    if !labeling.unlabeled.is_empty() {
        eprintln!("cluster: no cluster for {}", labeling.unlabeled.join(", "));
    }
    run.finish()
}

// ---- annotate ------------------------------------------------------------

#[derive(Args)]
pub struct AnnotateArgs {
    /// SentencePair JSONL files or directories of them.
    #[arg(long = "pairs", required = true)]
    pairs: Vec<PathBuf>,
    /// Intent for pairs that carry none.
    #[arg(long)]
    intent: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

pub fn annotate(cfg: &RunConfig, a: AnnotateArgs) -> Result<(), CliError> {
    let files = expand_inputs(&a.pairs)?;
    let tag_set = TagSet::new(cfg.annotate.tag_set);
    let mut records = Vec::new();
    let mut skipped: BTreeMap<&str, usize> = BTreeMap::new();
    for f in &files {
        for mut pair in read_jsonl::<SentencePair>(f)? {
            if pair.intent.is_none() {
                pair.intent = a.intent.clone();
            }
            if pair.intent.is_none() {
                *skipped.entry("no_intent").or_default() += 1;
                continue;
            }
            let source = tokenize(&pair.source);
            let target = tokenize(&pair.target);
            let plan = align(&source, &target, &tag_set);
            if apply_plan(&source, &plan).ok().as_ref() != Some(&target) {
                *skipped.entry("round_trip").or_default() += 1;
                continue;
            }
            if render_masked_input(&source, &plan, cfg.annotate.n_masks).is_err() {
                *skipped.entry("insertion_too_long").or_default() += 1;
                continue;
            }
            records.push(TrainingRecord::new(&pair, &plan));
        }
    }
    let mut run = RunDir::create(&a.out, "annotate", cfg)?;
    for f in &files {
        run.input(f);
    }
    run.output("training.jsonl", &jsonl(&records))?;
    #[derive(Serialize)]
    struct Stats<'a> {
        records: usize,
        skipped: &'a BTreeMap<&'a str, usize>,
    }
    run.output_json(
        "annotate_stats.json",
        &Stats {
            records: records.len(),
            skipped: &skipped,
        },
    )?;
    eprintln!("annotate: {} records", records.len());
    run.finish()
}

// ---- synth ---------------------------------------------------------------

#[derive(Args)]
pub struct SynthArgs {
    /// Training pairs per intent.
    #[arg(long, default_value_t = 2000)]
    train: usize,
    /// Held-out pairs per intent.
    #[arg(long, default_value_t = 200)]
    held_out: usize,
    #[arg(long)]
    out: PathBuf,
}

pub fn synth(cfg: &RunConfig, a: SynthArgs) -> Result<(), CliError> {
    let (train, held_out) = synthetic::corpus(a.train, a.held_out, cfg.seed);
    let mut run = RunDir::create(&a.out, "synth", cfg)?;
    run.output("train.jsonl", &jsonl(&train))?;
    run.output("held_out.jsonl", &jsonl(&held_out))?;
    run.finish()
}

// ---- train / finetune ----------------------------------------------------

#[derive(Args)]
pub struct TrainArgs {
    /// TrainingRecord JSONL files or directories of them.
    #[arg(long = "data", required = true)]
    data: Vec<PathBuf>,
    /// Comma-separated intent order; defaults to the intents in the data.
    #[arg(long)]
    intents: Option<String>,
    /// Overrides `train.steps`.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct FinetuneArgs {
    /// Trained checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Intent whose experts seed the new intents.
    #[arg(long)]
    clone_from: String,
    /// Comma-separated names of the intents to add.
    #[arg(long)]
    new_intents: String,
    /// TrainingRecord JSONL for the new intents.
    #[arg(long = "data", required = true)]
    data: Vec<PathBuf>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn load_records(paths: &[PathBuf], run: &mut RunDir) -> Result<Vec<TrainingRecord>, CliError> {
    let mut records = Vec::new();
    for f in expand_inputs(paths)? {
        records.extend(read_jsonl::<TrainingRecord>(&f)?);
        run.input(&f);
    }
    Ok(records)
}

/// Intents in the data: known intents in canonical order, then others
/// sorted.
fn data_intents(records: &[TrainingRecord]) -> Vec<String> {
    let present: std::collections::BTreeSet<&str> = records.iter().map(|r| r.intent.as_str()).collect();
    let mut out: Vec<String> = INTENTS.iter().filter(|i| present.contains(*i)).map(|i| i.to_string()).collect();
    let synth: Vec<String> = synthetic::INTENTS.iter().filter(|i| present.contains(*i)).map(|i| i.to_string()).collect();
    out.extend(synth);
    for i in present {
        if !out.iter().any(|o| o == i) {
            out.push(i.to_string());
        }
    }
    out
}

fn skip_key(r: SkipReason) -> &'static str {
    match r {
        SkipReason::UnknownIntent => "unknown_intent",
        SkipReason::BadPlan => "bad_plan",
        SkipReason::TagOutsideSet => "tag_outside_set",
        SkipReason::InsertionTooLong => "insertion_too_long",
        SkipReason::TooLong => "too_long",
    }
}

#[derive(Serialize)]
struct TrainReport {
    steps: u64,
    intents: Vec<String>,
    examples: BTreeMap<String, [usize; 2]>,
    skipped: BTreeMap<&'static str, usize>,
    final_losses: BTreeMap<String, [Option<f64>; 2]>,
    trainable_tensors: usize,
}

struct Fit<'a> {
    config: &'a EncoderConfig,
    params: &'a mut ParamStore,
    state: TrainState,
    data: &'a [TaskData],
    mask: Option<&'a TrainableMask>,
}

fn fit(run: &mut RunDir, cfg: &RunConfig, steps: Option<u64>, f: Fit<'_>) -> Result<Vec<[Option<f64>; 2]>, CliError> {
    let t = &cfg.train;
    let opts = TrainOptions {
        steps: steps.unwrap_or(t.steps),
        batch_size: t.batch_size,
        step: StepOptions {
            adam: AdamConfig {
                lr: t.learning_rate,
                ..AdamConfig::default()
            },
            clip: t.clip,
        },
        time_limit_secs: t.time_limit_secs,
    };
    let log_path = run.path("train_log.jsonl");
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?);
    let mut io_err = None;
    let mut state = f.state;
    let summary = sparsedit::encoder::train(f.config, f.params, &mut state, f.data, &opts, f.mask, |r| {
        let res = serde_json::to_writer(&mut log, r)
            .map_err(std::io::Error::from)
            .and_then(|_| log.write_all(b"\n"));
        if let Err(e) = res {
            io_err.get_or_insert(e);
        }
        if (r.step + 1) % 200 == 0 {
            eprintln!("step {} task {} {:?} loss {:.4}", r.step + 1, r.task, r.mode, r.loss);
        }
    })?;
    if let Some(e) = io_err {
        return Err(CliError::io(&log_path, e));
    }
    log.flush().map_err(|e| CliError::io(&log_path, e))?;
    run.produced("train_log.jsonl");
    eprintln!(
        "trained {} steps in {:.1}s{}",
        summary.steps,
        summary.elapsed.as_secs_f64(),
        if summary.stopped_by_time { " (time limit)" } else { "" }
    );
    Ok(summary
        .final_losses
        .iter()
        .map(|l| l.map(|x| x.is_finite().then_some(x)))
        .collect())
}

fn save_model(run: &mut RunDir, model: &EditModel) -> Result<(), CliError> {
    save_checkpoint(model, &run.path("model.ckpt"))?;
    run.produced("model.ckpt");
    Ok(())
}

pub fn train(cfg: &RunConfig, a: TrainArgs) -> Result<(), CliError> {
    let mut run = RunDir::create(&a.out, "train", cfg)?;
    let records = load_records(&a.data, &mut run)?;
    let intents = match &a.intents {
        Some(s) => parse_intent_list(s),
        None => data_intents(&records),
    };
    if intents.is_empty() {
        return Err(CliError::validation("no intents in the training data"));
    }
    let vocab = build_vocab(&records, cfg.train.max_vocab);
    let config = EncoderConfig {
        vocab_size: vocab.len(),
        num_intents: intents.len(),
        tag_set: cfg.annotate.tag_set,
        n_masks: cfg.annotate.n_masks,
        seed: cfg.seed,
        ..cfg.train.encoder.clone()
    };
    config.validate()?;
    let (data, skipped) = build_task_data(&records, &intents, &vocab, &config);
    let mut params = ParamStore::init(&config)?;
    let losses = fit(
        &mut run,
        cfg,
        a.steps,
        Fit {
            config: &config,
            params: &mut params,
            state: TrainState::for_intents(intents.len()),
            data: &data,
            mask: None,
        },
    )?;
    let report = TrainReport {
        steps: a.steps.unwrap_or(cfg.train.steps),
        examples: intents.iter().zip(&data).map(|(i, d)| (i.clone(), [d.tag.len(), d.gen.len()])).collect(),
        skipped: skipped.into_iter().map(|(k, v)| (skip_key(k), v)).collect(),
        final_losses: intents.iter().cloned().zip(losses).collect(),
        trainable_tensors: params.len(),
        intents: intents.clone(),
    };
    save_model(
        &mut run,
        &EditModel {
            config,
            params,
            vocab,
            intents,
        },
    )?;
    run.output_json("train_report.json", &report)?;
    run.finish()
}

pub fn finetune(cfg: &RunConfig, a: FinetuneArgs) -> Result<(), CliError> {
    let base = load_checkpoint(&a.checkpoint)?;
    let source = base.intent_id(&a.clone_from).ok_or_else(|| {
        CliError::validation(format!("unknown intent {:?}; model has {}", a.clone_from, base.intents.join(", ")))
    })?;
    let new_intents = parse_intent_list(&a.new_intents);
    if new_intents.is_empty() {
        return Err(CliError::usage("--new-intents is empty"));
    }
    if let Some(dup) = new_intents.iter().find(|i| base.intent_id(i).is_some()) {
        return Err(CliError::validation(format!("intent {dup:?} already exists")));
    }
    let mut run = RunDir::create(&a.out, "finetune", cfg)?;
    run.input(&a.checkpoint);
    let records = load_records(&a.data, &mut run)?;
    let mut params = base.params;
    let mut config = clone_expert(&mut params, &base.config, source, new_intents.len())?;
    config.seed = cfg.seed;
    let mask = freeze_for_finetune(&params, &config)?;
    let (data, skipped) = build_task_data(&records, &new_intents, &base.vocab, &config);
    let n = base.intents.len();
    let losses = fit(
        &mut run,
        cfg,
        a.steps,
        Fit {
            config: &config,
            params: &mut params,
            state: TrainState::new((n..n + new_intents.len()).collect()),
            data: &data,
            mask: Some(&mask),
        },
    )?;
    let mut intents = base.intents;
    intents.extend(new_intents.iter().cloned());
    let report = TrainReport {
        steps: a.steps.unwrap_or(cfg.train.steps),
        examples: new_intents.iter().zip(&data).map(|(i, d)| (i.clone(), [d.tag.len(), d.gen.len()])).collect(),
        skipped: skipped.into_iter().map(|(k, v)| (skip_key(k), v)).collect(),
        final_losses: new_intents.iter().cloned().zip(losses).collect(),
        trainable_tensors: mask.len(),
        intents: intents.clone(),
    };
    save_model(
        &mut run,
        &EditModel {
            config,
            params,
            vocab: base.vocab,
            intents,
        },
    )?;
    run.output_json("train_report.json", &report)?;
    run.finish()
}

// ---- edit ----------------------------------------------------------------

#[derive(Args)]
pub struct EditArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Intent name: fluency, readability, simplification, neutralization or
    /// any intent the checkpoint was trained or fine-tuned on.
    #[arg(long)]
    intent: String,
    /// Editing passes; 0 returns the input unchanged.
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Input file with one sentence per line; stdin when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Run directory for `edits.txt`; edits go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn intent_of(model: &EditModel, name: &str) -> Result<usize, CliError> {
    model.intent_id(name).ok_or_else(|| {
        CliError::validation(format!("unknown intent {name:?}; model has {}", model.intents.join(", ")))
    })
}

pub fn edit(cfg: &RunConfig, a: EditArgs) -> Result<(), CliError> {
    let model = load_checkpoint(&a.checkpoint)?;
    let intent = intent_of(&model, &a.intent)?;
    let mut text = String::new();
    match &a.input {
        Some(p) => {
            open(p)?.read_to_string(&mut text).map_err(|e| CliError::io(p, e))?;
        }
        None => {
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| CliError::usage(format!("stdin: {e}")))?;
        }
    }
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let edited = if line.trim().is_empty() {
            line.to_string()
        } else {
            edit_iterative(&model, line, intent, a.depth)?
        };
        out.push_str(&edited);
        out.push('\n');
    }
    match a.out {
        Some(dir) => {
            let mut run = RunDir::create(&dir, "edit", cfg)?;
            run.input(&a.checkpoint);
            if let Some(p) = &a.input {
                run.input(p);
            }
            run.output("edits.txt", out.as_bytes())?;
            run.finish()
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::usage(format!("stdout: {e}")))
        }
    }
}

// ---- eval ----------------------------------------------------------------

#[derive(Args)]
pub struct EvalArgs {
    /// Instance JSONL (`source`, `prediction`, `references`); the file stem
    /// names the dataset. Defaults to `eval.datasets`.
    #[arg(long = "in")]
    inputs: Vec<PathBuf>,
    /// Predict with this checkpoint on `--pairs` instead of reading
    /// predictions.
    #[arg(long, requires = "pairs")]
    checkpoint: Option<PathBuf>,
    /// SentencePair JSONL with intents; targets are the references.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Score the unedited source (copy baseline) on `--pairs`.
    #[arg(long, conflicts_with = "checkpoint", requires = "pairs")]
    copy: bool,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Include per-instance scores.
    #[arg(long)]
    per_instance: bool,
    #[arg(long)]
    no_gleu: bool,
    #[arg(long)]
    no_em: bool,
    /// Run directory for `eval_report.json`; the report goes to stdout when
    /// omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalOutput {
    datasets: BTreeMap<String, sparsedit::metrics::DatasetReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    instances: Option<BTreeMap<String, Vec<InstanceScores>>>,
}

fn normalize(s: &str) -> String {
    tokenize(s).detokenize()
}

/// Builds instances from pairs, grouped by intent.
fn predicted_instances(
    pairs: &[SentencePair],
    model: Option<&EditModel>,
    depth: usize,
) -> Result<BTreeMap<String, Vec<EvalInstance>>, CliError> {
    let mut groups: BTreeMap<String, Vec<&SentencePair>> = BTreeMap::new();
    for p in pairs {
        let intent = p.intent.clone().unwrap_or_else(|| "all".into());
        groups.entry(intent).or_default().push(p);
    }
    let mut out = BTreeMap::new();
    for (intent, ps) in groups {
        let predictions: Vec<String> = match model {
            Some(m) => {
                let id = intent_of(m, &intent)?;
                let sources: Vec<&str> = ps.iter().map(|p| p.source.as_str()).collect();
                let mut preds = if depth == 0 {
                    sources.iter().map(|s| s.to_string()).collect()
                } else {
                    m.predict_batch(&sources, id)?
                };
                for p in preds.iter_mut().filter(|_| depth > 1) {
                    *p = edit_iterative(m, p, id, depth - 1)?;
                }
                preds
            }
            None => ps.iter().map(|p| p.source.clone()).collect(),
        };
        let instances = ps
            .iter()
            .zip(predictions)
            .map(|(p, pred)| EvalInstance {
                source: normalize(&p.source),
                prediction: normalize(&pred),
                references: vec![normalize(&p.target)],
            })
            .collect();
        out.insert(intent, instances);
    }
    Ok(out)
}

pub fn eval(cfg: &RunConfig, a: EvalArgs) -> Result<(), CliError> {
    let select = MetricSelection {
        gleu: !a.no_gleu,
        em: !a.no_em,
    };
    let mut inputs: Vec<PathBuf> = Vec::new();
    let mut sets: BTreeMap<String, Vec<EvalInstance>> = BTreeMap::new();
    if let Some(pairs_path) = &a.pairs {
        if a.checkpoint.is_none() && !a.copy {
            return Err(CliError::usage("--pairs needs --checkpoint or --copy"));
        }
        let pairs: Vec<SentencePair> = read_jsonl(pairs_path)?;
        inputs.push(pairs_path.clone());
        let model = match &a.checkpoint {
            Some(c) => {
                inputs.push(c.clone());
                Some(load_checkpoint(c)?)
            }
            None => None,
        };
        sets = predicted_instances(&pairs, model.as_ref(), a.depth)?;
    } else {
        let named: Vec<(String, PathBuf)> = if a.inputs.is_empty() {
            cfg.eval.datasets.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
        } else {
            a.inputs
                .iter()
                .map(|p| {
                    let name = p.file_stem().map_or("data".into(), |s| s.to_string_lossy().into_owned());
                    (name, p.clone())
                })
                .collect()
        };
        if named.is_empty() {
            return Err(CliError::usage("nothing to evaluate (use --in, --pairs or eval.datasets)"));
        }
        for (name, path) in named {
            let instances = read_instances(open(&path)?)?;
            inputs.push(path);
            sets.insert(name, instances);
        }
    }
    let mut report = EvalOutput {
        datasets: BTreeMap::new(),
        instances: a.per_instance.then(BTreeMap::new),
    };
    for (name, instances) in sets {
        let (scores, summary) = evaluate(&instances, select)?;
        report.datasets.insert(name.clone(), summary);
        if let Some(per) = &mut report.instances {
            per.insert(name, scores);
        }
    }
    match a.out {
        Some(dir) => {
            let mut run = RunDir::create(&dir, "eval", cfg)?;
            for p in &inputs {
                run.input(p);
            }
            run.output_json("eval_report.json", &report)?;
            run.finish()
        }
        None => {
            println!("{}", pretty(&report));
            Ok(())
        }
    }
}

// ---- gradcheck -----------------------------------------------------------

#[derive(Args)]
pub struct GradcheckArgs {
    /// Check the full `train.encoder` configuration instead of the toy
    /// dimensions (slow).
    #[arg(long)]
    full: bool,
    /// Rows per batch.
    #[arg(long, default_value_t = 3)]
    rows: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct GradcheckLine {
    mode: Mode,
    max_rel_error: f64,
    worst_tensor: String,
    worst_index: usize,
    checked: usize,
    pass: bool,
}

pub fn gradcheck(cfg: &RunConfig, a: GradcheckArgs) -> Result<(), CliError> {
    let e = &cfg.train.encoder;
    // Toy dimensions with the configured architecture choices.
    let config = if a.full {
        EncoderConfig {
            seed: cfg.seed,
            ..e.clone()
        }
    } else {
        EncoderConfig {
            sparsity_mode: e.sparsity_mode,
            router: e.router,
            routing_granularity: e.routing_granularity,
            share_tag_gen: e.share_tag_gen,
            lambda: e.lambda,
            tag_set: cfg.annotate.tag_set,
            seed: cfg.seed,
            ..EncoderConfig::toy()
        }
    };
    config.validate()?;
    let store = ParamStore::init(&config)?;
    let mut lines = Vec::new();
    for (i, mode) in Mode::BOTH.into_iter().enumerate() {
        let batch = random_batch(&config, config.num_intents - 1, mode, a.rows, cfg.seed.wrapping_add(i as u64));
        let r = check_gradients(&config, &store, &batch, 1e-5)?;
        lines.push(GradcheckLine {
            mode,
            max_rel_error: r.max_rel_error,
            worst_tensor: r.worst.0,
            worst_index: r.worst.1,
            checked: r.checked,
            pass: r.max_rel_error <= GRADCHECK_TOLERANCE,
        });
    }
    let text = lines.iter().map(|l| serde_json::to_string(l).expect("line serializes")).collect::<Vec<_>>().join("\n");
    match &a.out {
        Some(dir) => {
            let mut run = RunDir::create(dir, "gradcheck", cfg)?;
            run.output("gradcheck.jsonl", format!("{text}\n").as_bytes())?;
            run.finish()?;
        }
        None => println!("{text}"),
    }
    match lines.iter().find(|l| !l.pass) {
        Some(l) => Err(CliError::validation(format!(
            "gradient check failed: relative error {:.3e} > {GRADCHECK_TOLERANCE:e} at {}[{}]",
            l.max_rel_error, l.worst_tensor, l.worst_index
        ))),
        None => Ok(()),
    }
}
