use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use connecte::config::{read_kv_file, TrainConfig};
use connecte::data::{load_type_assertions_lenient, prepare, Dataset, PrepareInputs, TypeAssertion};
use connecte::eval::{
    classify, evaluate_typing, make_classification_split, predict_topk, write_json,
    write_pr_curve, write_ranks_tsv, ClassifyFile, TypingFile,
};
use connecte::manifest::{
    checkpoint_digest, dataset_ref, write_loss_history, RunManifest, LOSS_HISTORY_FILE,
};
use connecte::model::{load_checkpoint, save_checkpoint, Checkpoint, ModelParams, ScoreMode};
use connecte::rng::{stream_rng, Stream};
use connecte::train::{train_with, EpochLoss, TrainObserver, TrainOptions};
use connecte::{Error, Result};

#[derive(Parser)]
#[command(name = "connecte", version, about = "Entity typing with joint entity and type embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build vocabularies and synthesize type triples from raw TSV files.
    Prepare(PrepareArgs),
    /// Train a model on a prepared directory.
    Train(TrainArgs),
    /// Rank the true type of every test pair.
    Eval(EvalArgs),
    /// Threshold-based type classification.
    Classify(ClassifyArgs),
    /// Print the best-scoring types for one entity.
    Predict(PredictArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// head<TAB>relation<TAB>tail
    #[arg(long)]
    triples: PathBuf,
    /// entity<TAB>type (training split)
    #[arg(long)]
    types: PathBuf,
    #[arg(long)]
    valid_types: Option<PathBuf>,
    #[arg(long)]
    test_types: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Keep type triples generated at least this many times.
    #[arg(long, default_value_t = 1)]
    min_count: u32,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data_dir: PathBuf,
    /// Checkpoint directory to create.
    #[arg(long)]
    out: PathBuf,
    /// key=value file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    gamma3: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, alias = "batch-size")]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    neg_per_pos: Option<usize>,
    /// glorot | literal
    #[arg(long)]
    init: Option<String>,
    /// Compute gradients concurrently within a batch (not bitwise reproducible).
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Prepared directory; defaults to the one recorded in the checkpoint.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value = "composite")]
    mode: ScoreMode,
    /// Defaults to the training value.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// entity<TAB>type file; defaults to the prepared test split.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Do not filter other known types of the entity.
    #[arg(long)]
    raw: bool,
    /// Report directory; defaults to the checkpoint directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Seed for negative sampling; defaults to the training seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    entity: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    topk: u32,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Prepare(a) => cmd_prepare(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Predict(a) => cmd_predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn cmd_prepare(a: PrepareArgs) -> Result<()> {
    let inputs = PrepareInputs {
        triples: a.triples,
        types: a.types,
        valid_types: a.valid_types,
        test_types: a.test_types,
        min_count: a.min_count,
    };
    let prepared = prepare(&inputs)?;
    prepared.write_dir(&a.out_dir, a.min_count)?;
    let s = prepared.stats(a.min_count);
    println!("entities\t{}", s.entities);
    println!("relations\t{}", s.relations);
    println!("types\t{}", s.types);
    println!("triples\t{}", s.triples);
    println!("assertions\t{}", s.assertions);
    if inputs.valid_types.is_some() {
        println!("valid\t{} (skipped {})", s.valid_assertions, s.valid_skipped);
    }
    if inputs.test_types.is_some() {
        println!("test\t{} (skipped {})", s.test_assertions, s.test_skipped);
    }
    println!("type triple expansions\t{}", s.expansions);
    println!("unique type triples\t{}", s.unique_type_triples);
    println!("surviving type triples (min count {})\t{}", s.min_count, s.surviving_type_triples);
    Ok(())
}

fn build_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &a.config {
        for (k, v) in read_kv_file(path)? {
            cfg.set(&k, &v)?;
        }
    }
    let flags = [
        ("kappa", a.kappa.map(|v| v.to_string())),
        ("ell", a.ell.map(|v| v.to_string())),
        ("alpha", a.alpha.map(|v| v.to_string())),
        ("gamma1", a.gamma1.map(|v| v.to_string())),
        ("gamma2", a.gamma2.map(|v| v.to_string())),
        ("gamma3", a.gamma3.map(|v| v.to_string())),
        ("lambda", a.lambda.map(|v| v.to_string())),
        ("epochs", a.epochs.map(|v| v.to_string())),
        ("batch_size", a.batch.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
        ("neg_per_pos", a.neg_per_pos.map(|v| v.to_string())),
        ("init", a.init.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Progress {
    every: usize,
}

impl TrainObserver for Progress {
    fn after_epoch(&mut self, l: &EpochLoss, _: &ModelParams) {
        if l.epoch.is_multiple_of(self.every) {
            log::info!("epoch {}: J1={:.4} J2={:.4} J3={:.4}", l.epoch, l.j1, l.j2, l.j3);
        }
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let cfg = build_config(&a)?;
    let ds = Dataset::load(&a.data_dir, None)?;
    let dataset = dataset_ref(&a.data_dir)?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut progress = Progress {
        every: (cfg.epochs / 20).max(1),
    };
    let out = train_with(&ds.kb, &cfg, TrainOptions { parallel: a.parallel }, &mut progress)?;
    save_checkpoint(&a.out, &out.params, &cfg, &ds.vocabs, Some(dataset.clone()))?;
    write_loss_history(&a.out.join(LOSS_HISTORY_FILE), &out.history)?;
    let run = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        config: cfg.clone(),
        seed: cfg.seed,
        parallel: a.parallel,
        dataset,
        checkpoint_manifest_sha256: checkpoint_digest(&a.out)?,
        started_unix_secs: started,
        wall_clock_secs: clock.elapsed().as_secs_f64(),
        loss_history: out.history.clone(),
    };
    run.write(&a.out)?;
    match out.history.last() {
        Some(l) => println!(
            "trained {} epochs: J1={:.4} J2={:.4} J3={:.4}",
            l.epoch, l.j1, l.j2, l.j3
        ),
        None => println!("wrote initial parameters (0 epochs)"),
    }
    println!("checkpoint\t{}", a.out.display());
    Ok(())
}

struct Loaded {
    ckpt: Checkpoint,
    ds: Dataset,
    digest: String,
    lambda: f64,
}

fn load_model(m: &ModelArgs) -> Result<Loaded> {
    let ckpt = load_checkpoint(&m.checkpoint)?;
    let data_dir = match (&m.data_dir, &ckpt.manifest.dataset) {
        (Some(d), _) => d.clone(),
        (None, Some(r)) => PathBuf::from(&r.dir),
        (None, None) => {
            return Err(Error::Config(
                "checkpoint records no dataset; pass --data-dir".into(),
            ))
        }
    };
    let ds = Dataset::load(&data_dir, Some(ckpt.vocabs.clone()))?;
    let lambda = m.lambda.unwrap_or(ckpt.config.lambda);
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(Loaded {
        digest: checkpoint_digest(&m.checkpoint)?,
        ckpt,
        ds,
        lambda,
    })
}

/// An explicit file, resolved against the checkpoint vocabularies, or a prepared split.
fn assertions_from(
    file: Option<&Path>,
    l: &Loaded,
    fallback: &[TypeAssertion],
    fallback_skipped: usize,
) -> Result<(Vec<TypeAssertion>, usize)> {
    match file {
        Some(p) => {
            let v = &l.ckpt.vocabs;
            let s = load_type_assertions_lenient(p, &v.entities, &v.types)?;
            Ok((s.assertions, s.skipped))
        }
        None => Ok((fallback.to_vec(), fallback_skipped)),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let l = load_model(&a.model)?;
    let (test, skipped) = assertions_from(a.test.as_deref(), &l, &l.ds.test, l.ds.test_skipped)?;
    let mut r = evaluate_typing(&l.ckpt.params, &l.ds.kb, &test, l.lambda, a.model.mode, !a.raw)?;
    r.report.skipped += skipped;
    let out_dir = a.out_dir.unwrap_or_else(|| a.model.checkpoint.clone());
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let file = TypingFile {
        mode: a.model.mode,
        lambda: l.lambda,
        filtered: !a.raw,
        metrics: r.report.clone(),
        checkpoint_manifest_sha256: l.digest.clone(),
        config: l.ckpt.config.clone(),
    };
    write_json(&out_dir.join("typing_report.json"), &file)?;
    write_ranks_tsv(&out_dir.join("ranks.tsv"), &r.ranks, &l.ckpt.vocabs)?;
    let m = &r.report;
    println!(
        "MRR {:.4}  HITS@1 {:.2}  HITS@3 {:.2}  HITS@10 {:.2}  ({} evaluated, {} skipped)",
        m.mrr, m.hits_at[&1], m.hits_at[&3], m.hits_at[&10], m.evaluated, m.skipped
    );
    Ok(())
}

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    let l = load_model(&a.model)?;
    let (valid, _) = assertions_from(a.valid.as_deref(), &l, &l.ds.valid, l.ds.valid_skipped)?;
    let (test, _) = assertions_from(a.test.as_deref(), &l, &l.ds.test, l.ds.test_skipped)?;
    let mut rng = stream_rng(a.seed.unwrap_or(l.ckpt.config.seed), Stream::Classification);
    let valid = make_classification_split(&valid, &l.ds.kb, &mut rng)?;
    let test = make_classification_split(&test, &l.ds.kb, &mut rng)?;
    let r = classify(&l.ckpt.params, &l.ds.kb, &valid, &test, l.lambda, a.model.mode)?;
    let out_dir = a.out_dir.unwrap_or_else(|| a.model.checkpoint.clone());
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    write_pr_curve(&out_dir.join("pr_curve.tsv"), &r.pr_points)?;
    println!(
        "accuracy {:.2}%  threshold {}  best F1 {:.2}% (precision {:.2}%, recall {:.2}%)",
        100.0 * r.accuracy,
        r.threshold,
        100.0 * r.f1_best,
        100.0 * r.f1_best_precision,
        100.0 * r.f1_best_recall
    );
    let file = ClassifyFile {
        mode: a.model.mode,
        lambda: l.lambda,
        valid_pairs: valid.len(),
        test_pairs: test.len(),
        classification: r,
        checkpoint_manifest_sha256: l.digest,
        config: l.ckpt.config.clone(),
    };
    write_json(&out_dir.join("classify_report.json"), &file)
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let l = load_model(&a.model)?;
    let ents = &l.ckpt.vocabs.entities;
    let e = ents.get(&a.entity).ok_or_else(|| Error::UnknownName {
        kind: "entity",
        symbol: a.entity.clone(),
        suggestions: ents.prefix_matches(&a.entity, 5),
    })?;
    let top = predict_topk(&l.ckpt.params, &l.ds.kb, e, a.topk as usize, l.lambda, a.model.mode);
    for (i, (t, s)) in top.iter().enumerate() {
        let name = l.ckpt.vocabs.types.name(*t).unwrap_or("?");
        println!("{}\t{name}\t{s:.6}", i + 1);
    }
    Ok(())
}
