use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    file_hashes, file_name, list_files, read_json, sha256_hex, tree_hash, write_bytes, write_json,
    Settings,
};
use crate::augment::AugmentConfig;
use crate::decimal::Precision;
use crate::error::{Error, Result};
use crate::formats::{self, FileDocument, Format, PruneWarning, TargetRange};
use crate::geometry::centroid_of;
use crate::metrics::{evaluate, EvalOptions, DEFAULT_OVERLAP_THRESHOLD};
use crate::sample::{sample, SampleConfig};
use crate::structure::{Structure, StructureKind};
use crate::synth::{self, MoleculeSynth, Orientation, PocketSynth};
use crate::tokenizer::{build_vocab, decode, encode, round_coords, LatticeMode, Scheme, SchemeKind, Vocabulary};
use crate::train::{TrainConfig, Trainer, LR_END};
use crate::transformer::{Checkpoint, ModelConfig};

/// Settings that name files; manifests record content hashes instead.
const PATH_KEYS: &[&str] = &["checkpoint", "conformers", "corpus", "input", "reference", "train", "vocab"];

fn recorded_settings(settings: &Settings) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for key in super::KNOWN_KEYS {
        if PATH_KEYS.contains(key) {
            continue;
        }
        if let Some(v) = settings.raw(key) {
            map.insert((*key).to_string(), json!(v));
        }
    }
    serde_json::Value::Object(map)
}

fn write_timing(out: &Path, started: Instant) -> Result<()> {
    write_timing_with(out, started, serde_json::Map::new())
}

fn write_timing_with(out: &Path, started: Instant, mut extra: serde_json::Map<String, serde_json::Value>) -> Result<()> {
    extra.insert("wall_seconds".into(), json!(started.elapsed().as_secs_f64()));
    write_json(&out.join("timing.json"), &extra)
}

fn path_setting(settings: &Settings, key: &str) -> Result<PathBuf> {
    settings.require::<String>(key).map(PathBuf::from)
}

fn kind_setting(settings: &Settings) -> Result<StructureKind> {
    match settings.require::<String>("kind")?.as_str() {
        "molecule" => Ok(StructureKind::Molecule),
        "perovskite" | "crystal" => Ok(StructureKind::Crystal),
        "pocket" => Ok(StructureKind::Pocket),
        other => Err(Error::Invalid(format!(
            "unknown kind {other:?} (expected molecule, perovskite or pocket)"
        ))),
    }
}

fn precision_setting(settings: &Settings, default: u8) -> Result<Precision> {
    Ok(Precision::new(settings.get_or("precision", default)?)?)
}

fn parse_setting<T: std::str::FromStr<Err = String>>(settings: &Settings, key: &str, default: T) -> Result<T> {
    match settings.raw(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(Error::Invalid),
    }
}

/// Writes `n` generated structure files.
pub fn cmd_synth(settings: &Settings, out: &Path) -> Result<()> {
    let started = Instant::now();
    let kind = kind_setting(settings)?;
    let n: usize = settings.require("n")?;
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let seed: u64 = settings.get_or("seed", 0)?;
    let precision = precision_setting(settings, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mol = MoleculeSynth {
        min_heavy: settings.get_or("min_heavy", MoleculeSynth::default().min_heavy)?,
        max_heavy: settings.get_or("max_heavy", MoleculeSynth::default().max_heavy)?,
        orientation: match settings.raw("orientation").unwrap_or("random") {
            "random" => Orientation::Random,
            "canonical" => Orientation::Canonical,
            o => return Err(Error::Invalid(format!("unknown orientation {o:?}"))),
        },
        ..MoleculeSynth::default()
    };
    let poc = PocketSynth {
        min_residues: settings.get_or("min_residues", PocketSynth::default().min_residues)?,
        max_residues: settings.get_or("max_residues", PocketSynth::default().max_residues)?,
    };
    if mol.min_heavy == 0 || mol.min_heavy > mol.max_heavy {
        return Err(Error::Invalid("need 1 <= min_heavy <= max_heavy".into()));
    }
    if poc.min_residues == 0 || poc.min_residues > poc.max_residues {
        return Err(Error::Invalid("need 1 <= min_residues <= max_residues".into()));
    }

    let format = Format::for_kind(kind);
    let mut hashes = Vec::with_capacity(n);
    for i in 0..n {
        let s: Structure = match kind {
            StructureKind::Molecule => synth::molecule(&mol, &mut rng).into(),
            StructureKind::Crystal => synth::perovskite(&mut rng).into(),
            StructureKind::Pocket => synth::pocket(&poc, &mut rng).into(),
        };
        let doc = formats::write(&s, precision);
        let name = format!("{}_{i:05}.{}", settings.raw("kind").unwrap_or(""), format.extension());
        write_bytes(&out.join(&name), doc.text.as_bytes())?;
        hashes.push((name, sha256_hex(doc.text.as_bytes())));
    }
    let manifest = json!({
        "command": "synth",
        "status": "ok",
        "settings": recorded_settings(settings),
        "n_files": n,
        "format": format.extension(),
        "files_hash": tree_hash(hashes.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    write_timing(out, started)
}

/// Parsed, rounded corpus as stored by `prepare`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusBundle {
    pub kind: StructureKind,
    pub names: Vec<String>,
    pub structures: Vec<Structure>,
}

impl CorpusBundle {
    pub fn load(dir: &Path) -> Result<Self> {
        read_json(&dir.join("structures.json"))
    }
}

#[derive(Serialize)]
struct PrepareStats {
    n_files: usize,
    n_structures: usize,
    n_failures: usize,
    atom_count_histogram: BTreeMap<usize, usize>,
    element_frequencies: BTreeMap<String, usize>,
    sequence_length: BTreeMap<String, usize>,
    prune: Option<PruneStats>,
}

#[derive(Serialize)]
struct PruneStats {
    min: usize,
    max: usize,
    in_range: usize,
    below_minimum: usize,
    overshot: usize,
}

/// Parses a directory of structure files of one format into a corpus bundle.
pub fn cmd_prepare(settings: &Settings, out: &Path) -> Result<()> {
    let started = Instant::now();
    let input = path_setting(settings, "input")?;
    let scheme_kind: SchemeKind = parse_setting(settings, "scheme", SchemeKind::AtomCoord)?;
    let lattice_mode: LatticeMode = parse_setting(settings, "lattice_mode", LatticeMode::WholeToken)?;
    let precision = precision_setting(settings, 2)?;
    let scheme = Scheme::new(scheme_kind, precision).with_lattice_mode(lattice_mode);

    let files: Vec<PathBuf> = list_files(&input)?
        .into_iter()
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .and_then(Format::from_extension)
                .is_some()
        })
        .collect();
    let mut formats_seen: Vec<Format> = files
        .iter()
        .filter_map(|p| p.extension().and_then(|e| e.to_str()).and_then(Format::from_extension))
        .collect();
    formats_seen.sort_by_key(|f| f.extension());
    formats_seen.dedup();
    let format = match formats_seen.as_slice() {
        [] => return Err(Error::Invalid(format!("no structure files in {}", input.display()))),
        [f] => *f,
        many => {
            let names: Vec<String> = many.iter().map(|f| f.to_string()).collect();
            return Err(Error::Invalid(format!(
                "input mixes formats ({}); prepare one format at a time",
                names.join(", ")
            )));
        }
    };

    let parsed: Vec<(String, String, std::result::Result<Structure, String>)> = files
        .par_iter()
        .map(|path| {
            let name = file_name(path);
            match FileDocument::read(path) {
                Err(e) => (name, String::new(), Err(e.to_string())),
                Ok(doc) => {
                    let hash = sha256_hex(doc.text.as_bytes());
                    (name, hash, formats::parse(&doc).map_err(|e| e.to_string()))
                }
            }
        })
        .collect();

    let mut failures = csv::Writer::from_writer(Vec::new());
    failures.write_record(["file", "error"]).map_err(csv_error)?;
    let mut names = Vec::new();
    let mut raw = Vec::new();
    let mut input_hashes = Vec::new();
    for (name, hash, result) in parsed {
        input_hashes.push((name.clone(), hash));
        match result {
            Ok(s) => {
                names.push(name);
                raw.push(s);
            }
            Err(e) => failures.write_record([name.as_str(), e.as_str()]).map_err(csv_error)?,
        }
    }
    let n_failures = files.len() - raw.len();
    if raw.is_empty() {
        write_bytes(&out.join("failures.csv"), &csv_bytes(failures)?)?;
        return Err(Error::Invalid(format!(
            "none of the {} {format} files in {} could be parsed",
            files.len(),
            input.display()
        )));
    }

    let mut prune = None;
    if format == Format::Pdb && settings.flag("prune", true)? {
        let range = TargetRange::new(settings.get_or("prune_min", 200)?, settings.get_or("prune_max", 250)?)
            .ok_or_else(|| Error::Invalid("need prune_min <= prune_max and prune_max > 0".into()))?;
        let mut stats = PruneStats {
            min: range.min,
            max: range.max,
            in_range: 0,
            below_minimum: 0,
            overshot: 0,
        };
        for s in &mut raw {
            let Structure::Pocket(p) = s else { continue };
            let pts: Vec<_> = p.atoms.iter().map(|a| a.position).collect();
            let outcome = formats::prune_pocket(p, centroid_of(&pts), range);
            match outcome.warning {
                None => stats.in_range += 1,
                Some(PruneWarning::BelowMinimum) => stats.below_minimum += 1,
                Some(PruneWarning::Overshot) => stats.overshot += 1,
            }
            *s = Structure::Pocket(outcome.pocket);
        }
        prune = Some(stats);
    }

    // sequences carry no residue numbers; decoding numbers residues 1..=R
    for s in &mut raw {
        if let Structure::Pocket(p) = s {
            *p = p.renumbered();
        }
    }
    let structures: Vec<Structure> = raw.iter().map(|s| round_coords(s, precision)).collect();
    let vocab = build_vocab(&structures, scheme)?;
    let mut sequences = String::new();
    let mut lengths = BTreeMap::new();
    for s in &structures {
        let seq = encode(s, &vocab)?;
        *lengths.entry(seq.len()).or_insert(0usize) += 1;
        sequences.push_str(&ids_line(&seq.ids));
    }
    let seq_lengths: Vec<usize> = lengths.iter().flat_map(|(&l, &c)| std::iter::repeat_n(l, c)).collect();

    let mut histogram = BTreeMap::new();
    let mut elements = BTreeMap::new();
    for s in &structures {
        *histogram.entry(s.atom_count()).or_insert(0) += 1;
        for e in s.elements() {
            *elements.entry(e.symbol().to_string()).or_insert(0) += 1;
        }
    }
    let stats = PrepareStats {
        n_files: files.len(),
        n_structures: structures.len(),
        n_failures,
        atom_count_histogram: histogram,
        element_frequencies: elements,
        sequence_length: BTreeMap::from([
            ("min".to_string(), seq_lengths[0]),
            ("median".to_string(), seq_lengths[seq_lengths.len() / 2]),
            ("max".to_string(), seq_lengths[seq_lengths.len() - 1]),
        ]),
        prune,
    };

    let bundle = CorpusBundle {
        kind: format.structure_kind(),
        names,
        structures,
    };
    write_json(&out.join("structures.json"), &bundle)?;
    write_bytes(&out.join("sequences.txt"), sequences.as_bytes())?;
    vocab.save(&out.join("vocab.txt"))?;
    write_json(&out.join("stats.json"), &stats)?;
    write_bytes(&out.join("failures.csv"), &csv_bytes(failures)?)?;

    let outputs = ["structures.json", "sequences.txt", "vocab.txt", "stats.json", "failures.csv"];
    let manifest = json!({
        "command": "prepare",
        "status": "ok",
        "settings": recorded_settings(settings),
        "format": format.extension(),
        "scheme": scheme,
        "input_hash": tree_hash(input_hashes.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
        "n_files": files.len(),
        "n_structures": bundle.structures.len(),
        "n_failures": n_failures,
        "vocab_size": vocab.len(),
        "vocab_hash": vocab.hash(),
        "outputs": file_hashes(out, &outputs)?,
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    write_timing(out, started)
}

fn ids_line(ids: &[u32]) -> String {
    let mut line = ids.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
    line.push('\n');
    line
}

fn csv_error(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

fn csv_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Invalid(format!("csv: {}", e.error())))
}

/// Trains a model on a prepared corpus bundle.
pub fn cmd_train(settings: &Settings, out: &Path) -> Result<()> {
    let started = Instant::now();
    let corpus_dir = path_setting(settings, "corpus")?;
    let bundle = CorpusBundle::load(&corpus_dir)?;
    let vocab = Vocabulary::load(&corpus_dir.join("vocab.txt"))?;

    let longest = bundle
        .structures
        .iter()
        .map(|s| encode(s, &vocab).map(|q| q.len()))
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .max()
        .unwrap_or(2);
    let small = ModelConfig::small(vocab.len(), longest + longest.div_ceil(4));
    let model = ModelConfig {
        n_layers: settings.get_or("layers", small.n_layers)?,
        d_model: settings.get_or("d_model", small.d_model)?,
        n_heads: settings.get_or("heads", small.n_heads)?,
        d_ff: settings.get_or("d_ff", small.d_ff)?,
        max_seq_len: settings.get_or("max_seq_len", small.max_seq_len)?,
        vocab_size: vocab.len(),
        dropout: settings.get_or("dropout", small.dropout)?,
    };
    let defaults = TrainConfig::default();
    let clip: f64 = settings.get_or("clip", defaults.clip_norm.unwrap_or(0.0))?;
    let cfg = TrainConfig {
        batch_size: settings.get_or("batch_size", defaults.batch_size)?,
        lr_start: settings.get_or("lr", defaults.lr_start)?,
        lr_end: settings.get_or("lr_end", LR_END)?,
        total_steps: settings.get_or("steps", defaults.total_steps)?,
        seed: settings.get_or("seed", defaults.seed)?,
        augment: AugmentConfig {
            enabled: settings.flag("augment", false)?,
            crystal_shift: settings.flag("crystal_shift", false)?,
            attempts: settings.get_or("augment_attempts", AugmentConfig::default().attempts)?,
        },
        clip_norm: (clip > 0.0).then_some(clip),
        bucket_by_length: settings.flag("bucket", defaults.bucket_by_length)?,
    };
    let every: u64 = settings.get_or("checkpoint_every", 0)?;

    let mut trainer = Trainer::new(bundle.structures, vocab.clone(), model, cfg)?;
    let mut loss_csv = csv::Writer::from_writer(Vec::new());
    loss_csv
        .write_record(["step", "epoch", "loss", "lr", "grad_norm", "tokens"])
        .map_err(csv_error)?;
    let mut periodic = Vec::new();
    let result = trainer.run(|t, log| {
        loss_csv
            .write_record([
                log.step.to_string(),
                log.epoch.to_string(),
                format!("{:?}", log.loss),
                format!("{:?}", log.lr),
                format!("{:?}", log.grad_norm),
                log.tokens.to_string(),
            ])
            .map_err(|e| crate::train::TrainError::Config(format!("loss log: {e}")))?;
        if every > 0 && t.step_count() % every == 0 && !t.is_done() {
            periodic.push(t.checkpoint());
        }
        Ok(())
    });
    write_bytes(&out.join("loss.csv"), &csv_bytes(loss_csv)?)?;
    if let Err(crate::train::TrainError::NonFiniteLoss { last_good, .. }) = &result {
        last_good.save(&out.join("last_good.ckpt"))?;
    }
    result?;

    let mut outputs = vec!["loss.csv".to_string(), "model.ckpt".to_string(), "vocab.txt".to_string()];
    if !periodic.is_empty() {
        let dir = out.join("checkpoints");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for ck in &periodic {
            let name = format!("checkpoints/step_{:07}.ckpt", ck.step);
            ck.save(&out.join(&name))?;
            outputs.push(name);
        }
    }
    let ck = trainer.checkpoint();
    ck.save(&out.join("model.ckpt"))?;
    vocab.save(&out.join("vocab.txt"))?;

    let (augmented, fallbacks) = trainer.augment_counts();
    let names: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let manifest = json!({
        "command": "train",
        "status": "ok",
        "settings": recorded_settings(settings),
        "corpus_manifest_hash": sha256_hex(&read_or_empty(&corpus_dir.join("manifest.json"))),
        "model": model,
        "train": cfg,
        "num_params": trainer.params().num_params(),
        "steps": ck.step,
        "augmented": augmented,
        "augment_fallbacks": fallbacks,
        "vocab_hash": vocab.hash(),
        "outputs": file_hashes(out, &names)?,
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    write_timing(out, started)
}

fn read_or_empty(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_default()
}

/// Samples token sequences from a checkpoint and decodes them.
pub fn cmd_sample(settings: &Settings, out: &Path) -> Result<()> {
    let started = Instant::now();
    let ck_path = path_setting(settings, "checkpoint")?;
    let vocab_path = match settings.raw("vocab") {
        Some(v) => PathBuf::from(v),
        None => ck_path.parent().unwrap_or(Path::new(".")).join("vocab.txt"),
    };
    let ck = Checkpoint::load(&ck_path)?;
    let vocab = Vocabulary::load(&vocab_path)?;
    let defaults = SampleConfig::default();
    let cfg = SampleConfig {
        n_samples: settings.get_or("samples", defaults.n_samples)?,
        temperature: settings.get_or("temperature", defaults.temperature)?,
        max_len: settings.get("max_len")?,
        seed: settings.get_or("seed", defaults.seed)?,
    };
    let sampling = Instant::now();
    let samples = sample(&ck, &vocab, &cfg)?;
    let sampling_seconds = sampling.elapsed().as_secs_f64();

    let structures_dir = out.join("structures");
    if structures_dir.exists() {
        std::fs::remove_dir_all(&structures_dir).map_err(|e| Error::io(&structures_dir, e))?;
    }
    std::fs::create_dir_all(&structures_dir).map_err(|e| Error::io(&structures_dir, e))?;
    let format = Format::for_kind(vocab.kind());
    let mut text = String::new();
    let mut decoded = 0;
    let mut structure_hashes = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        text.push_str(&ids_line(&s.tokens.ids));
        if let Ok(st) = decode(&s.tokens.ids, &vocab) {
            let doc = formats::write(&st, vocab.precision());
            let name = format!("sample_{i:05}.{}", format.extension());
            write_bytes(&structures_dir.join(&name), doc.text.as_bytes())?;
            structure_hashes.push((name, sha256_hex(doc.text.as_bytes())));
            decoded += 1;
        }
    }
    write_bytes(&out.join("samples.txt"), text.as_bytes())?;
    vocab.save(&out.join("vocab.txt"))?;
    let truncated = samples.iter().filter(|s| s.truncated).count();
    let manifest = json!({
        "command": "sample",
        "status": "ok",
        "settings": recorded_settings(settings),
        "checkpoint_hash": sha256_hex(&read_or_empty(&ck_path)),
        "vocab_hash": vocab.hash(),
        "n_samples": samples.len(),
        "n_truncated": truncated,
        "truncation_rate": truncated as f64 / samples.len() as f64,
        "n_decoded": decoded,
        "structures_hash": tree_hash(structure_hashes.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
        "outputs": file_hashes(out, &["samples.txt", "vocab.txt"])?,
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    let mut extra = serde_json::Map::new();
    extra.insert(
        "samples_per_second".into(),
        json!(samples.len() as f64 / sampling_seconds.max(1e-9)),
    );
    write_timing_with(out, started, extra)
}

/// Reads samples either as token ids (`samples.txt` plus a vocabulary) or
/// as a directory of structure files.
fn load_samples(settings: &Settings, input: &Path) -> Result<(Vec<std::result::Result<Structure, String>>, String)> {
    let tokens = if input.is_file() {
        Some(input.to_path_buf())
    } else {
        Some(input.join("samples.txt")).filter(|p| p.is_file())
    };
    if let Some(tokens) = tokens {
        let vocab_path = match settings.raw("vocab") {
            Some(v) => PathBuf::from(v),
            None => tokens.parent().unwrap_or(Path::new(".")).join("vocab.txt"),
        };
        let vocab = Vocabulary::load(&vocab_path)?;
        let text = std::fs::read_to_string(&tokens).map_err(|e| Error::io(&tokens, e))?;
        let mut out = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let ids: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Invalid(format!("{}: line {}: not a token id list", tokens.display(), n + 1)))?;
            out.push(decode(&ids, &vocab).map_err(|e| e.label().to_string()));
        }
        return Ok((out, sha256_hex(text.as_bytes())));
    }
    let files = list_files(input)?;
    let mut out = Vec::new();
    let mut hashes = Vec::new();
    for path in &files {
        if path.extension().and_then(|e| e.to_str()).and_then(Format::from_extension).is_none() {
            continue;
        }
        let doc = FileDocument::read(path)?;
        hashes.push((file_name(path), sha256_hex(doc.text.as_bytes())));
        out.push(formats::parse(&doc).map_err(|_| "parse_error".to_string()));
    }
    Ok((out, tree_hash(hashes.iter().map(|(a, b)| (a.as_str(), b.as_str())))))
}

/// Scores samples against the training corpus.
pub fn cmd_evaluate(settings: &Settings, out: &Path) -> Result<()> {
    let started = Instant::now();
    let input = path_setting(settings, "input")?;
    let train_dir = path_setting(settings, "train")?;
    let bundle = CorpusBundle::load(&train_dir)?;
    let (samples, samples_hash) = load_samples(settings, &input)?;
    if let Some(wrong) = samples.iter().flatten().find(|s| s.kind() != bundle.kind) {
        return Err(Error::Invalid(format!(
            "samples are {:?} structures but the training corpus holds {:?}",
            wrong.kind(),
            bundle.kind
        )));
    }
    let opts = EvalOptions {
        overlap_threshold: settings.get_or("overlap_threshold", DEFAULT_OVERLAP_THRESHOLD)?,
        split_seed: settings.get_or("split_seed", 0)?,
    };
    let eval = evaluate(&samples, &bundle.structures, bundle.kind, &opts)?;

    write_json(&out.join("report.json"), &eval.report)?;

    let mut failures = csv::Writer::from_writer(Vec::new());
    failures.write_record(["index", "status", "reason"]).map_err(csv_error)?;
    for r in eval.records.iter().filter(|r| r.status != crate::metrics::Status::Valid) {
        let status = serde_json::to_value(r.status)?;
        failures
            .write_record([r.index.to_string(), status.as_str().unwrap_or("").to_string(), r.reason.clone()])
            .map_err(csv_error)?;
    }
    write_bytes(&out.join("failures.csv"), &csv_bytes(failures)?)?;

    let mut props = csv::Writer::from_writer(Vec::new());
    props.write_record(["source", "index", "property", "value"]).map_err(csv_error)?;
    for p in &eval.properties {
        props
            .write_record([p.source.clone(), p.index.to_string(), p.property.clone(), format!("{:?}", p.value)])
            .map_err(csv_error)?;
    }
    write_bytes(&out.join("properties.csv"), &csv_bytes(props)?)?;

    let mut pairs = csv::Writer::from_writer(Vec::new());
    pairs.write_record(["index", "nearest", "farthest"]).map_err(csv_error)?;
    for p in &eval.pair_stats {
        pairs
            .write_record([p.index.to_string(), format!("{:?}", p.nearest), format!("{:?}", p.farthest)])
            .map_err(csv_error)?;
    }
    write_bytes(&out.join("pair_stats.csv"), &csv_bytes(pairs)?)?;

    let outputs = ["report.json", "failures.csv", "properties.csv", "pair_stats.csv"];
    let manifest = json!({
        "command": "evaluate",
        "status": "ok",
        "settings": recorded_settings(settings),
        "samples_hash": samples_hash,
        "train_hash": sha256_hex(&read_or_empty(&train_dir.join("structures.json"))),
        "outputs": file_hashes(out, &outputs)?,
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    write_timing(out, started)
}
