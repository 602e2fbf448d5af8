use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use apt_align_core::corpus::{load_apty_ranked, load_pairs, render_prompt, PairSchema, PreferenceRecord};
use apt_align_core::prefloss::{PrefMethod, PrefStats};
use apt_align_core::rng::SeededRng;
use apt_align_core::tinylm::synthetic::reversal_pairs;
use apt_align_core::tinylm::{
    init_model, train_pref_examples, train_sft, ModelConfig, PrefExample, TinyModel, TrainConfig, Vocab,
};

use super::data::strict;
use crate::args::{GenArgs, TrainArgs, TrainMethod};
use crate::config::{pick, RunConfig};
use crate::error::CliError;
use crate::io::{fmt_opt, path_string, read_jsonl, write_csv, write_jsonl};
use crate::schema::{Generation, Item};
use crate::write_run_record;

pub const DEFAULT_MAX_WORDS: usize = 2000;
pub const DEFAULT_MAX_LEN: usize = 64;

/// Paper defaults for the method, then the config file, then flags.
pub fn resolve_train_config(a: &TrainArgs, cfg: &RunConfig, seed: u64) -> TrainConfig {
    let base = match a.method {
        TrainMethod::Sft => TrainConfig::sft(),
        TrainMethod::Dpo => TrainConfig::dpo(),
        TrainMethod::Ipo => TrainConfig::ipo(),
    };
    let t = &cfg.train;
    TrainConfig {
        learning_rate: pick(a.lr, t.learning_rate, base.learning_rate),
        weight_decay: pick(a.weight_decay, t.weight_decay, base.weight_decay),
        beta: pick(a.beta, t.beta, base.beta),
        max_grad_norm: pick(a.max_grad_norm, t.max_grad_norm, base.max_grad_norm),
        scheduler: pick(a.scheduler, t.scheduler, base.scheduler),
        warmup_ratio: pick(a.warmup_ratio, t.warmup_ratio, base.warmup_ratio),
        epochs: pick(a.epochs, t.epochs, base.epochs),
        batch_size: pick(a.batch_size, t.batch_size, base.batch_size),
        seed,
    }
}

fn model_config(cfg: &RunConfig, seed: u64) -> ModelConfig {
    let d = ModelConfig::default();
    let m = &cfg.model;
    ModelConfig {
        embed_dim: m.embed_dim.unwrap_or(d.embed_dim),
        hidden_dim: m.hidden_dim.unwrap_or(d.hidden_dim),
        context_len: m.context_len.unwrap_or(d.context_len),
        seed,
    }
}

fn starting_model<'a>(
    a: &TrainArgs,
    cfg: &RunConfig,
    seed: u64,
    texts: impl IntoIterator<Item = &'a str>,
) -> Result<TinyModel, CliError> {
    match &a.init {
        Some(path) => Ok(TinyModel::load(path)?),
        None => {
            let vocab = Vocab::build(texts, cfg.model.max_words.unwrap_or(DEFAULT_MAX_WORDS));
            Ok(init_model(vocab, model_config(cfg, seed), seed)?)
        }
    }
}

#[derive(Serialize)]
struct TrainRun<'a> {
    method: &'a str,
    train: TrainConfig,
    model: ModelConfig,
    parameters: usize,
    vocab_size: usize,
}

fn pref_rows(curve: &[PrefStats]) -> Vec<Vec<String>> {
    curve
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                (i + 1).to_string(),
                fmt_opt(Some(s.mean_loss)),
                fmt_opt(Some(s.reward_margin)),
                fmt_opt(Some(s.reward_accuracy)),
            ]
        })
        .collect()
}

pub fn train(a: &TrainArgs, cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let tc = resolve_train_config(a, cfg, seed);
    tc.validate()?;
    let method = match a.method {
        TrainMethod::Sft => "sft",
        TrainMethod::Dpo => "dpo",
        TrainMethod::Ipo => "ipo",
    };
    let mut inputs = BTreeMap::new();
    if let Some(d) = &a.data {
        inputs.insert("data", path_string(d));
    }
    if let Some(n) = a.synthetic {
        inputs.insert("synthetic", n.to_string());
    }
    if let Some(i) = &a.init {
        inputs.insert("init", path_string(i));
    }

    let (model, rows, header): (TinyModel, Vec<Vec<String>>, &[&str]) = match a.method {
        TrainMethod::Sft => {
            let corpus = sft_corpus(a, seed)?;
            let texts = corpus.iter().flat_map(|(p, t)| [p.as_str(), t.as_str()]);
            let start = starting_model(a, cfg, seed, texts)?;
            let (m, curve) = train_sft(&start, &corpus, &tc)?;
            let rows = curve.iter().enumerate().map(|(i, l)| vec![(i + 1).to_string(), fmt_opt(Some(*l))]).collect();
            (m, rows, &["epoch", "loss"])
        }
        TrainMethod::Dpo | TrainMethod::Ipo => {
            let pm = if a.method == TrainMethod::Dpo { PrefMethod::Dpo } else { PrefMethod::Ipo };
            let records = pref_records(a, seed)?;
            let examples = records.iter().map(PrefExample::from_record).collect::<Result<Vec<_>, _>>()?;
            let texts = examples
                .iter()
                .flat_map(|e| [e.prompt.as_str(), e.chosen.as_str(), e.rejected.as_str()]);
            let reference = starting_model(a, cfg, seed, texts)?;
            let (m, curve) = train_pref_examples(&reference, &reference, &examples, pm, &tc)?;
            (m, pref_rows(&curve), &["epoch", "loss", "reward_margin", "reward_accuracy"])
        }
    };
    let run = TrainRun {
        method,
        train: tc,
        model: *model.config(),
        parameters: model.param_count(),
        vocab_size: model.vocab().len(),
    };
    write_run_record(out, "train", seed, inputs, &run)?;
    model.save(out.join("model.json"))?;
    write_csv(&out.join("curves.csv"), header, &rows)?;
    if let Some(last) = rows.last() {
        println!("{method}: {} epochs, last row {}", rows.len(), last.join(","));
    }
    Ok(())
}

/// (prompt, target) pairs: every typed paraphrase, prompted with all its types.
fn sft_corpus(a: &TrainArgs, seed: u64) -> Result<Vec<(String, String)>, CliError> {
    if let Some(n) = a.synthetic {
        return reversal_pairs(n, seed)
            .into_iter()
            .map(|r| Ok((render_prompt(&r.original, &[r.target_type])?, r.chosen)))
            .collect();
    }
    let path = a.data.as_ref().expect("clap requires --data or --synthetic");
    let records = strict(load_pairs(path, PairSchema::Binary)?, path)?;
    let mut corpus = Vec::new();
    for r in records.iter().filter(|r| r.is_paraphrase && !r.types.is_empty()) {
        let types: Vec<_> = r.types.iter().collect();
        corpus.push((render_prompt(&r.original, &types)?, r.paraphrase.clone()));
    }
    Ok(corpus)
}

fn pref_records(a: &TrainArgs, seed: u64) -> Result<Vec<PreferenceRecord>, CliError> {
    if let Some(n) = a.synthetic {
        return Ok(reversal_pairs(n, seed));
    }
    let path = a.data.as_ref().expect("clap requires --data or --synthetic");
    strict(load_apty_ranked(path)?, path)
}

pub fn gen(a: &GenArgs, cfg: &RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let model = TinyModel::load(&a.model)?;
    let items: Vec<Item> = read_jsonl(&a.items)?;
    let max_len = pick(a.max_len, cfg.gen.max_len, DEFAULT_MAX_LEN);
    if max_len == 0 {
        return Err(CliError::Schema("max_len must be at least 1".into()));
    }
    let greedy = if a.sample { false } else { cfg.gen.greedy.unwrap_or(true) };
    let model_id = match &a.model_id {
        Some(id) => id.clone(),
        None => a.model.file_stem().map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned()),
    };
    write_run_record(
        out,
        "gen",
        seed,
        BTreeMap::from([("model", path_string(&a.model)), ("items", path_string(&a.items))]),
        serde_json::json!({ "model_id": model_id, "max_len": max_len, "greedy": greedy }),
    )?;
    let mut gens = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let prompt = render_prompt(&item.original, &[item.target_type])?;
        let item_seed = SeededRng::substream(seed, i as u64).next_u64();
        gens.push(Generation {
            item_id: item.item_id.clone(),
            model_id: model_id.clone(),
            original: item.original.clone(),
            target_type: item.target_type,
            text: model.generate(&prompt, max_len, item_seed, greedy),
        });
    }
    write_jsonl(&out.join("generations.jsonl"), &gens)
}
