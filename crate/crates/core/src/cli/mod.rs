//! Command-line front end. Paths come from subcommand flags; every tunable
//! is a config key, settable from `--config FILE` or as `--key value`.
//! Exit status: 0 success, 1 usage or configuration error, 2 data error.

mod config;

pub use config::{FuseMethod, RunConfig};

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::fusion::{self, EarlyFusionStats, FusionDocument, FusionWeights};
use crate::learn::{self, LabeledDataset, ModelKind, TrainedModel};
use crate::poserule;
use crate::sequence::{self, CitySequence, SequenceManifest};
use crate::textbow::{self, Vocabulary};

#[derive(Debug, Parser)]
#[command(
    name = "floodkit",
    about = "Flood detection from image sequences, fused classifiers, text and pose cues",
    after_help = "Every command also accepts `--config FILE` and `--<key> VALUE` for any configuration key \
                  (e.g. `--seed 7`, `--tree.n_trees 50`). Each run writes the resolved settings to `<out>/resolved.conf`."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus: frames, manifest.json, train.json, test.json.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-pair texture deltas of every sequence in a manifest.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write each frame's validity mask as a PGM (255 = valid).
        #[arg(long)]
        dump_masks: bool,
    },
    /// Fit a classifier on a labeled feature CSV.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a feature CSV with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sequence-level decisions and metrics over a labeled manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Combine score files (average, pso) or feature files (early).
    Fuse {
        #[arg(long = "scores", required = true)]
        inputs: Vec<PathBuf>,
        /// Previously written weights.json or stats.json to apply instead of fitting.
        #[arg(long)]
        apply: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bag-of-words vectors from a CSV corpus with a `text` column.
    Bow {
        #[arg(long)]
        corpus: PathBuf,
        /// Reuse an existing vocabulary instead of building one.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Above-knee decisions for keypoint files.
    Pose {
        #[arg(long = "keypoints", required = true)]
        keypoints: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Features { .. } => "features",
            Command::Train { .. } => "train",
            Command::Predict { .. } => "predict",
            Command::Evaluate { .. } => "evaluate",
            Command::Fuse { .. } => "fuse",
            Command::Bow { .. } => "bow",
            Command::Pose { .. } => "pose",
        }
    }

    fn out(&self) -> &Path {
        match self {
            Command::Synth { out }
            | Command::Features { out, .. }
            | Command::Train { out, .. }
            | Command::Predict { out, .. }
            | Command::Evaluate { out, .. }
            | Command::Fuse { out, .. }
            | Command::Bow { out, .. }
            | Command::Pose { out, .. } => out,
        }
    }
}

/// Config flags pulled out of the argument list before subcommand parsing.
struct SplitArgs {
    rest: Vec<String>,
    config_file: Option<PathBuf>,
    overrides: Vec<(&'static str, String)>,
}

fn split_args(args: Vec<String>) -> Result<SplitArgs> {
    let mut rest = Vec::new();
    let mut config_file = None;
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_owned(), Some(v.to_owned())),
            None => (flag.to_owned(), None),
        };
        let is_config = name == "config";
        let key = RunConfig::flag_key(&name);
        if !is_config && key.is_none() {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| Error::arg(format!("--{name} needs a value")))?,
        };
        match key {
            Some(k) => overrides.push((k, value)),
            None => config_file = Some(PathBuf::from(value)),
        }
    }
    Ok(SplitArgs { rest, config_file, overrides })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) => 1,
        _ => 2,
    }
}

/// Runs one invocation; `args` excludes the program name. Returns the exit status.
pub fn run(args: Vec<String>) -> i32 {
    let split = match split_args(args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(std::iter::once("floodkit".to_owned()).chain(split.rest.clone())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut cfg = RunConfig::default();
    let resolved = (|| -> Result<()> {
        if let Some(path) = &split.config_file {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::arg(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for (k, v) in &split.overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()
    })();
    if let Err(e) = resolved {
        eprintln!("error: {e}");
        return 1;
    }
    match execute(&cli.command, &cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))
}

fn read_table(path: &Path) -> Result<FeatureTable> {
    let file = fs::File::open(path).map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    FeatureTable::read_csv(file).map_err(|e| match e {
        Error::Csv(c) => Error::data(format!("{}: {c}", path.display())),
        other => other,
    })
}

fn write_table(path: &Path, t: &FeatureTable) -> Result<()> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    write(path, buf)
}

fn execute(cmd: &Command, cfg: &RunConfig) -> Result<()> {
    let out = cmd.out();
    fs::create_dir_all(out).map_err(|e| Error::data(format!("cannot create {}: {e}", out.display())))?;
    write(&out.join("resolved.conf"), cfg.to_text(cmd.name()))?;
    match cmd {
        Command::Synth { out } => synth(out, cfg),
        Command::Features { manifest, out, dump_masks } => features(manifest, out, *dump_masks, cfg),
        Command::Train { features, out } => train(features, out, cfg),
        Command::Predict { model, features, out } => predict(model, features, out),
        Command::Evaluate { manifest, model, out } => evaluate(manifest, model, out, cfg),
        Command::Fuse { inputs, apply, out } => fuse(inputs, apply.as_deref(), out, cfg),
        Command::Bow { corpus, vocab, out } => bow(corpus, vocab.as_deref(), out, cfg),
        Command::Pose { keypoints, out } => pose(keypoints, out, cfg),
    }
}

fn synth(out: &Path, cfg: &RunConfig) -> Result<()> {
    let mut seqs = Vec::with_capacity(cfg.synth_n);
    for i in 0..cfg.synth_n {
        let (mut seq, _) = sequence::generate_synthetic_sequence(&cfg.synth_config(i))?;
        seq.city_id = format!("city{i:03}");
        seqs.push(seq);
    }
    let manifest = sequence::save_corpus(out, &seqs)?;
    let n_train = (cfg.synth_n as f64 * cfg.synth_train_fraction).round() as usize;
    let (train, test) = manifest.sequences.split_at(n_train.min(manifest.sequences.len()));
    let part =
        |entries: &[sequence::ManifestEntry]| SequenceManifest { sequences: entries.to_vec(), ..manifest.clone() };
    write(&out.join("manifest.json"), manifest.to_json())?;
    write(&out.join("train.json"), part(train).to_json())?;
    write(&out.join("test.json"), part(test).to_json())?;
    println!("wrote {} sequences ({} train, {} test) to {}", seqs.len(), train.len(), test.len(), out.display());
    Ok(())
}

fn features(manifest: &Path, out: &Path, dump_masks: bool, cfg: &RunConfig) -> Result<()> {
    let seqs = sequence::load_manifest(manifest)?;
    let pipeline = cfg.pipeline();
    let mut table = FeatureTable::new(sequence::pair_feature_names());
    let labeled = seqs.iter().all(|s| s.pair_labels.is_some());
    let mut groups = Vec::new();
    let mut labels = Vec::new();
    if dump_masks {
        fs::create_dir_all(out.join("masks"))?;
    }
    for (i, seq) in seqs.iter().enumerate() {
        let artifacts =
            seq.frames.iter().map(|f| sequence::frame_artifacts(f, &pipeline)).collect::<Result<Vec<_>>>()?;
        if dump_masks {
            for (k, a) in artifacts.iter().enumerate() {
                write(
                    &out.join("masks").join(format!("{i:03}_{k}.pgm")),
                    crate::raster::write_pnm(&a.mask.to_raster()),
                )?;
            }
        }
        for (k, pair) in artifacts.windows(2).enumerate() {
            let v = sequence::pair_features(&pair[0], &pair[1], &pipeline.texture)?;
            table.push(format!("{}#{k}", seq.city_id), &v)?;
            groups.push(seq.city_id.clone());
            if let Some(pl) = &seq.pair_labels {
                labels.push(pl[k]);
            }
        }
    }
    table.groups = Some(groups);
    table.labels = labeled.then_some(labels);
    write_table(&out.join("features.csv"), &table)?;
    println!("wrote {} pair rows from {} sequences", table.len(), seqs.len());
    Ok(())
}

fn train_model(d: &LabeledDataset, cfg: &RunConfig) -> Result<TrainedModel> {
    match cfg.train_kind {
        ModelKind::Tree => learn::train_tree(d, &cfg.tree_params()),
        ModelKind::Forest => learn::train_forest(d, &cfg.tree_params()),
        ModelKind::Svm => learn::train_svm(d, &cfg.svm_params()),
        ModelKind::Ensemble => learn::train_resampled_ensemble(d, &cfg.base_learner(), &cfg.ensemble),
    }
}

fn train(features: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let table = read_table(features)?;
    let d = LabeledDataset::from_table(&table)?;
    let model = train_model(&d, cfg)?;
    if model.degenerate {
        eprintln!("warning: training data has a single class; the model is a constant scorer");
    }
    write(&out.join("model.json"), model.to_json())?;
    println!("trained {} on {} rows ({} positive)", model.kind(), d.len(), d.positives());
    Ok(())
}

fn load_model(path: &Path) -> Result<TrainedModel> {
    TrainedModel::from_json(&read_text(path)?).map_err(|e| match e {
        Error::Json(j) => Error::data(format!("{}: {j}", path.display())),
        other => other,
    })
}

fn predict(model: &Path, features: &Path, out: &Path) -> Result<()> {
    let model = load_model(model)?;
    let table = read_table(features)?;
    let mut scores = FeatureTable::new(vec!["score".into()]);
    for i in 0..table.len() {
        let s = learn::predict_score(&model, &table.vector(i))?;
        scores.ids.push(table.ids[i].clone());
        scores.rows.push(vec![s]);
    }
    scores.groups = table.groups.clone();
    scores.labels = table.labels.clone();
    write_table(&out.join("scores.csv"), &scores)?;
    println!("scored {} rows", scores.len());
    Ok(())
}

fn evaluate(manifest: &Path, model: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let seqs: Vec<CitySequence> = sequence::load_manifest(manifest)?;
    let model = load_model(model)?;
    let report = sequence::evaluate_corpus(&seqs, &model, &cfg.pipeline(), cfg.policy, cfg.threshold)?;
    let text = report.to_text();
    write(&out.join("report.txt"), &text)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write(&out.join("report.json"), json)?;
    print!("{text}");
    Ok(())
}

fn stream_names(paths: &[PathBuf]) -> Result<Vec<String>> {
    let names: Vec<String> = paths
        .iter()
        .map(|p| p.file_stem().map_or_else(|| "stream".into(), |s| s.to_string_lossy().into_owned()))
        .collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::arg(format!("two inputs share the stream name {n:?}; rename one file")));
        }
    }
    Ok(names)
}

fn aligned_tables(paths: &[PathBuf]) -> Result<Vec<FeatureTable>> {
    let tables = paths.iter().map(|p| read_table(p)).collect::<Result<Vec<_>>>()?;
    for (t, p) in tables.iter().zip(paths).skip(1) {
        if t.ids != tables[0].ids {
            return Err(Error::data(format!("{}: row ids differ from {}", p.display(), paths[0].display())));
        }
    }
    Ok(tables)
}

fn fuse(inputs: &[PathBuf], apply: Option<&Path>, out: &Path, cfg: &RunConfig) -> Result<()> {
    let names = stream_names(inputs)?;
    let tables = aligned_tables(inputs)?;
    let labels = tables.iter().find_map(|t| t.labels.clone());
    let first = &tables[0];
    if cfg.fuse_method == FuseMethod::Early {
        let vectors: Vec<Vec<_>> = tables.iter().map(|t| (0..t.len()).map(|i| t.vector(i)).collect()).collect();
        let stats = match apply {
            Some(p) => serde_json::from_str::<EarlyFusionStats>(&read_text(p)?)
                .map_err(|e| Error::data(format!("{}: {e}", p.display())))?,
            None => {
                let streams: Vec<(&str, &[_])> =
                    names.iter().map(String::as_str).zip(vectors.iter().map(Vec::as_slice)).collect();
                EarlyFusionStats::fit(&streams)?
            }
        };
        let mut fused = FeatureTable::new(stats.fused_names());
        for i in 0..first.len() {
            let parts: Vec<(&str, &_)> = names.iter().map(String::as_str).zip(vectors.iter().map(|v| &v[i])).collect();
            fused.push(first.ids[i].clone(), &fusion::early_fuse(&parts, &stats)?)?;
        }
        fused.groups = first.groups.clone();
        fused.labels = labels;
        let mut json = serde_json::to_string_pretty(&stats)?;
        json.push('\n');
        write(&out.join("stats.json"), json)?;
        write_table(&out.join("fused.csv"), &fused)?;
        println!("early-fused {} streams into {} features", names.len(), fused.names.len());
        return Ok(());
    }

    let mut streams = Vec::with_capacity(tables.len());
    for (t, p) in tables.iter().zip(inputs) {
        if t.names.len() != 1 {
            return Err(Error::data(format!("{}: a score file needs exactly one score column", p.display())));
        }
        streams.push(t.rows.iter().map(|r| r[0]).collect::<Vec<f64>>());
    }
    let weights = match (apply, cfg.fuse_method) {
        (Some(p), _) => {
            let doc: FusionDocument =
                serde_json::from_str(&read_text(p)?).map_err(|e| Error::data(format!("{}: {e}", p.display())))?;
            if doc.streams != names {
                return Err(Error::data(format!("weights were fitted for streams {:?}, got {names:?}", doc.streams)));
            }
            doc.weights
        }
        (None, FuseMethod::Pso) => {
            let labels = labels.as_ref().ok_or_else(|| Error::data("pso fusion needs a label column"))?;
            let found = fusion::optimize_fusion_weights(&streams, labels, &cfg.pso_params())?;
            println!(
                "validation f1 {:.4} (uniform {:.4}){}",
                found.f1,
                found.uniform_f1,
                if found.kept_uniform { ", kept uniform weights" } else { "" }
            );
            found.weights
        }
        (None, _) => FusionWeights::uniform(streams.len()),
    };
    let fused_scores = fusion::fuse_streams(&streams, &weights)?;
    let mut fused = FeatureTable::new(vec!["score".into()]);
    fused.ids = first.ids.clone();
    fused.rows = fused_scores.iter().map(|&s| vec![s]).collect();
    fused.groups = first.groups.clone();
    fused.labels = labels;
    let doc = FusionDocument::new(&cfg.fuse_method.to_string(), names, weights);
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    write(&out.join("weights.json"), json)?;
    write_table(&out.join("fused.csv"), &fused)?;
    println!("fused {} streams over {} rows", doc.streams.len(), fused.len());
    Ok(())
}

/// Ids, texts and optional labels.
type Corpus = (Vec<String>, Vec<String>, Option<Vec<u8>>);

/// Reads a corpus CSV: a `text` column, optional `id` and `label` columns.
fn read_corpus(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path).map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let text_col = col("text").ok_or_else(|| Error::data(format!("{}: no `text` column", path.display())))?;
    let (id_col, label_col) = (col("id"), col("label"));
    let (mut ids, mut texts, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        ids.push(id_col.map_or_else(|| format!("row{i}"), |c| rec[c].to_owned()));
        texts.push(rec[text_col].to_owned());
        if let Some(c) = label_col {
            labels.push(match rec[c].trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::data(format!("row {}: label must be 0 or 1, got {other:?}", i + 2))),
            });
        }
    }
    Ok((ids, texts, label_col.map(|_| labels)))
}

fn bow(corpus: &Path, vocab: Option<&Path>, out: &Path, cfg: &RunConfig) -> Result<()> {
    let (ids, texts, labels) = read_corpus(corpus)?;
    let tokens: Vec<Vec<String>> = texts.iter().map(|t| textbow::tokenize(t)).collect();
    let vocabulary = match vocab {
        Some(p) => Vocabulary::from_json(&read_text(p)?)?,
        None => {
            let v = textbow::build_vocab(&tokens, cfg.bow_max_terms, cfg.bow_min_doc_freq)?;
            write(&out.join("vocab.json"), v.to_json())?;
            v
        }
    };
    let mut table = FeatureTable::new(textbow::feature_names(&vocabulary));
    for (id, t) in ids.iter().zip(&tokens) {
        table.push(id.clone(), &textbow::vectorize(t, &vocabulary, cfg.bow_weighting))?;
    }
    table.labels = labels;
    write_table(&out.join("vectors.csv"), &table)?;
    println!("vectorized {} documents over {} terms", table.len(), vocabulary.len());
    Ok(())
}

fn pose(files: &[PathBuf], out: &Path, cfg: &RunConfig) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["file", "decision", "people", "rationale"])?;
    for path in files {
        let people = poserule::parse_keypoints(&read_text(path)?)
            .map_err(|e| Error::data(format!("{}: {}", path.display(), e)))?;
        let d = poserule::above_knee_decision(&people, &cfg.pose);
        let rationale: Vec<String> = d
            .people
            .iter()
            .map(|v| {
                let failed: Vec<&str> = v.failed.iter().map(|c| c.as_str()).collect();
                let state = if failed.is_empty() { "above_knee".to_owned() } else { failed.join("|") };
                format!("person{}:{state}", v.person)
            })
            .collect();
        w.write_record([
            path.display().to_string(),
            d.decision.to_string(),
            people.len().to_string(),
            rationale.join(";"),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
    write(&out.join("decisions.csv"), bytes)?;
    println!("decided {} keypoint files", files.len());
    Ok(())
}
