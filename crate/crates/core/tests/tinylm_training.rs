use apt_align_core::corpus::render_prompt;
use apt_align_core::prefloss::{batch_stats, dpo_loss, PrefMethod, PrefStats};
use apt_align_core::taxonomy::ParaphraseType;
use apt_align_core::tinylm::synthetic::{reversal_examples, reversal_pairs};
use apt_align_core::tinylm::{
    clip_grad_norm, global_norm, grad_check, init_model, loss_and_grad, pref_stats, score_pair, train_pref, train_pref_examples, train_sft,
    GradBatch, LossKind, ModelConfig, PrefExample, TinyLmError, TinyModel, TrainConfig, Vocab,
};

fn small_config() -> ModelConfig {
    ModelConfig { embed_dim: 8, hidden_dim: 12, context_len: 64, seed: 0 }
}

fn model_for(texts: &[&str], seed: u64) -> TinyModel {
    init_model(Vocab::build(texts.iter().copied(), 200), small_config(), seed).unwrap()
}

fn memo_pair() -> (String, String) {
    let prompt = render_prompt("The cat sat on the mat.", &[ParaphraseType::CHANGE_OF_ORDER]).unwrap();
    (prompt, "On the mat sat the cat.".to_string())
}

fn examples(n: usize, seed: u64) -> Vec<PrefExample> {
    reversal_pairs(n, seed)
        .iter()
        .map(|r| PrefExample::from_record(r).unwrap())
        .collect()
}

fn reversal_model(seed: u64) -> TinyModel {
    let pairs = reversal_pairs(50, 99);
    let texts: Vec<String> = pairs
        .iter()
        .map(|r| render_prompt(&r.original, &[r.target_type]).unwrap())
        .collect();
    let vocab = Vocab::build(texts.iter().map(String::as_str), 200);
    init_model(vocab, ModelConfig { embed_dim: 16, hidden_dim: 32, context_len: 64, seed: 0 }, seed).unwrap()
}

#[test]
fn init_is_seeded() {
    let a = model_for(&["a b c"], 5);
    let b = model_for(&["a b c"], 5);
    let c = model_for(&["a b c"], 6);
    assert_eq!(a.params(), b.params());
    assert_ne!(a.params(), c.params());
    assert!(a.params().iter().all(|p| p.is_finite()));
}

#[test]
fn tiny_vocab_is_rejected() {
    let v = Vocab::from(vec!["<pad>".to_string(), "<bos>".into(), "<eos>".into()]);
    assert!(matches!(init_model(v, small_config(), 0), Err(TinyLmError::VocabTooSmall(3))));
}

#[test]
fn distributions_are_normalized() {
    let m = model_for(&["the quick brown fox"], 1);
    let ids = m.vocab().encode("the quick brown fox");
    for len in 1..=ids.len() {
        for d in m.distributions(&ids[..len]) {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(d.iter().all(|&p| p > 0.0));
        }
    }
}

#[test]
fn parameter_budget() {
    let m = reversal_model(0);
    assert!(m.param_count() <= 1_000_000);
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let m = model_for(&["a b c d"], 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    m.save(&path).unwrap();
    let back = TinyModel::load(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.score("a b", "c d"), m.score("a b", "c d"));
}

#[test]
fn corrupt_checkpoints_are_refused() {
    let m = model_for(&["a b"], 3);
    let text = m.to_json().replace("\"format_version\":1", "\"format_version\":9");
    assert!(matches!(TinyModel::from_json(&text), Err(TinyLmError::Checkpoint(_))));
    let text = m.to_json().replace("\"w_z\"", "\"w_q\"");
    assert!(matches!(TinyModel::from_json(&text), Err(TinyLmError::Checkpoint(_))));
}

#[test]
fn generation_contracts() {
    let m = model_for(&["x y z w"], 4);
    assert_eq!(m.generate_ids("x y", 1, 0, true).len(), 1);
    assert_eq!(m.generate_ids("x y", 1, 0, false).len(), 1);
    assert_eq!(m.generate("x y", 20, 0, true), m.generate("x y", 20, 9, true));
    assert_eq!(m.generate("x y", 20, 7, false), m.generate("x y", 20, 7, false));
    let ids = m.generate_ids("x y", 30, 0, false);
    assert!(ids.len() <= 30);
    assert!(ids[..ids.len() - 1].iter().all(|&t| t != 2));
}

#[test]
fn empty_inputs_are_errors() {
    let m = model_for(&["a b"], 0);
    assert!(matches!(train_sft(&m, &[], &TrainConfig::sft()), Err(TinyLmError::EmptyCorpus)));
    assert!(matches!(train_pref(&m, &m, &[], PrefMethod::Dpo, &TrainConfig::dpo()), Err(TinyLmError::EmptyPairs)));
}

#[test]
fn config_validation() {
    let m = model_for(&["a b"], 0);
    let corpus = vec![("a".to_string(), "b".to_string())];
    for bad in [
        TrainConfig { learning_rate: 0.0, ..TrainConfig::sft() },
        TrainConfig { warmup_ratio: 1.0, ..TrainConfig::sft() },
        TrainConfig { batch_size: 0, ..TrainConfig::sft() },
    ] {
        assert!(matches!(train_sft(&m, &corpus, &bad), Err(TinyLmError::InvalidConfig(_))));
    }
}

#[test]
fn paper_presets() {
    let d = TrainConfig::dpo();
    assert_eq!((d.learning_rate, d.weight_decay, d.beta, d.max_grad_norm), (1e-6, 0.4, 0.2, 200.0));
    let i = TrainConfig::ipo();
    assert_eq!((i.learning_rate, i.weight_decay, i.beta, i.warmup_ratio), (5e-6, 0.02, 0.2, 0.2));
    let s = TrainConfig::sft();
    assert_eq!((s.epochs, s.batch_size), (50, 32));
}

#[test]
fn zero_epochs_leave_the_model_alone() {
    let m = model_for(&["a b c"], 2);
    let corpus = vec![("a".to_string(), "b c".to_string())];
    let (out, curve) = train_sft(&m, &corpus, &TrainConfig { epochs: 0, ..TrainConfig::sft() }).unwrap();
    assert_eq!(out, m);
    assert!(curve.is_empty());
}

#[test]
fn memorization() {
    let (prompt, target) = memo_pair();
    let m = init_model(
        Vocab::build([prompt.as_str(), target.as_str()], 200),
        ModelConfig { embed_dim: 16, hidden_dim: 32, context_len: 96, seed: 0 },
        11,
    )
    .unwrap();
    let corpus = vec![(prompt.clone(), target.clone()); 200];
    let (trained, curve) = train_sft(&m, &corpus, &TrainConfig::sft()).unwrap();
    assert_eq!(curve.len(), 50);
    let last = *curve.last().unwrap();
    assert!(last < 0.1, "final loss {last}");
    for w in curve.windows(2) {
        assert!(w[1] <= w[0] * 1.05, "loss rose from {} to {}", w[0], w[1]);
    }
    assert_eq!(trained.generate(&prompt, 40, 0, true), target);
}

#[test]
fn training_is_reproducible() {
    let (prompt, target) = memo_pair();
    let m = model_for(&[&prompt, &target], 0);
    let corpus = vec![(prompt, target); 10];
    let cfg = TrainConfig { epochs: 3, batch_size: 4, ..TrainConfig::sft() };
    let a = train_sft(&m, &corpus, &cfg).unwrap();
    let b = train_sft(&m, &corpus, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gradients_match_finite_differences() {
    let (prompt, target) = memo_pair();
    let m = model_for(&[&prompt, &target, "the mat"], 21);
    let corpus = vec![(prompt.clone(), target.clone()), ("the".into(), "mat".into())];
    let err = grad_check(&m, &GradBatch::Sft(&corpus), LossKind::Sft, 1e-5, 1).unwrap();
    assert!(err < 1e-4, "sft {err}");

    let reference = model_for(&[&prompt, &target, "the mat"], 22);
    let pairs = vec![
        PrefExample { prompt: prompt.clone(), chosen: target.clone(), rejected: "The cat.".into() },
        PrefExample { prompt: "the".into(), chosen: "mat".into(), rejected: "cat sat".into() },
    ];
    for kind in [LossKind::Dpo, LossKind::Ipo] {
        let batch = GradBatch::Pref { reference: &reference, pairs: &pairs, beta: 0.2 };
        let err = grad_check(&m, &batch, kind, 1e-5, 2).unwrap();
        assert!(err < 1e-4, "{kind:?} {err}");
    }
}

#[test]
fn grad_check_guards() {
    let m = model_for(&["a b"], 0);
    let corpus = vec![("a".to_string(), "b".to_string())];
    assert!(grad_check(&m, &GradBatch::Sft(&corpus), LossKind::Sft, 1e-2, 0).is_err());
    assert!(grad_check(&m, &GradBatch::Sft(&corpus), LossKind::Dpo, 1e-5, 0).is_err());
}

#[test]
fn policy_equal_to_reference_gives_ln2_and_zero_margin() {
    let m = reversal_model(0);
    let ex = examples(16, 4);
    let items: Vec<_> = ex.iter().map(|e| score_pair(&m, &m, e).unwrap()).collect();
    for it in &items {
        assert!((dpo_loss(it, 0.2).unwrap().loss - std::f64::consts::LN_2).abs() < 1e-12);
    }
    let s = batch_stats(&items, PrefMethod::Dpo, 0.2).unwrap();
    assert_eq!(s.reward_margin, 0.0);

    // one batch covering every pair: the epoch's gaps are all measured before the first update
    let cfg = TrainConfig { learning_rate: 1e-2, epochs: 1, batch_size: 16, ..TrainConfig::dpo() };
    let (_, curve) = train_pref_examples(&m, &m, &ex, PrefMethod::Dpo, &cfg).unwrap();
    assert_eq!(curve[0].reward_margin, 0.0);
    assert!((curve[0].mean_loss - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn vanishing_beta_removes_the_signal() {
    let m = reversal_model(0);
    let reference = reversal_model(1);
    let ex = examples(4, 5);
    let norm = |beta: f64| {
        let batch = GradBatch::Pref { reference: &reference, pairs: &ex, beta };
        global_norm(&loss_and_grad(&m, &batch, LossKind::Dpo).unwrap().1)
    };
    let (big, small, tiny) = (norm(1e-1), norm(1e-3), norm(1e-6));
    assert!(big > 0.0);
    assert!(small < big * 0.05, "{small} vs {big}");
    assert!(tiny < big * 1e-4, "{tiny} vs {big}");
}

#[test]
fn clipped_gradients_respect_the_bound() {
    let m = reversal_model(0);
    let reference = reversal_model(1);
    let ex = examples(8, 6);
    let batch = GradBatch::Pref { reference: &reference, pairs: &ex, beta: 0.2 };
    let (_, mut g) = loss_and_grad(&m, &batch, LossKind::Dpo).unwrap();
    let before = global_norm(&g);
    for max in [before * 2.0, before / 3.0, 1e-3] {
        let mut c = g.clone();
        clip_grad_norm(&mut c, max);
        assert!(global_norm(&c) <= max + 1e-9);
    }
    assert_eq!(clip_grad_norm(&mut g, before * 2.0), before);
}

fn reversal_run(method: PrefMethod) -> (PrefStats, Vec<PrefStats>) {
    let train = reversal_examples(512, 1);
    let held = reversal_examples(200, 2);
    let vocab = Vocab::build(train.iter().map(|e| e.prompt.as_str()), 200);
    let m = init_model(vocab, ModelConfig { embed_dim: 16, hidden_dim: 32, context_len: 64, seed: 0 }, 3).unwrap();
    let cfg = TrainConfig { learning_rate: 3e-3, epochs: 100, batch_size: 32, ..TrainConfig::for_method(method) };
    let (trained, curve) = train_pref_examples(&m, &m, &train, method, &cfg).unwrap();
    (pref_stats(&trained, &m, &held, method, cfg.beta).unwrap(), curve)
}

#[test]
fn dpo_learns_the_reversal_task() {
    let (held, curve) = reversal_run(PrefMethod::Dpo);
    assert!(held.reward_accuracy >= 0.9, "{held:?}");
    assert!(curve.last().unwrap().reward_margin > curve[0].reward_margin);
}

#[test]
fn ipo_learns_the_reversal_task() {
    let (held, curve) = reversal_run(PrefMethod::Ipo);
    assert!(held.reward_accuracy >= 0.85, "{held:?}");
    assert!(curve.last().unwrap().reward_margin > curve[0].reward_margin);
}
