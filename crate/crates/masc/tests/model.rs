use masc_core::corpus::{prepare_corpus, synth, tokenize};
use masc_core::{SourceModel, TokenSequence, BOS};
use masc_model::gradcheck::grad_check;
use masc_model::{forward, loss_and_grad, train, Batch, LossWeights, MascConfig, MascModel, Params, TrainConfig};

fn tiny() -> MascConfig {
    MascConfig {
        d_model: 16,
        n_layers: 2,
        n_heads: 2,
        d_ff: 24,
        max_seq_len: 48,
        table_size: 64,
        slot_dim: 4,
        conv_kernel: 3,
        init_seed: 5,
        ..MascConfig::default()
    }
}

fn sentences() -> Vec<TokenSequence> {
    ["The vote is open.", "Members agree on the budget", "ok"].iter().map(|s| tokenize(s.as_bytes())).collect()
}

fn perturbed(cfg: &MascConfig, scale: f64) -> Params {
    // initial weights are tiny; widen them so every path carries signal
    let mut p = Params::init(cfg);
    for t in p.all_mut() {
        if !t.name.contains("norm") {
            t.data.iter_mut().enumerate().for_each(|(i, v)| *v = *v * scale + 1e-3 * ((i % 7) as f64 - 3.0));
        }
    }
    p
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let cfg = tiny();
    let p = perturbed(&cfg, 15.0);
    let seqs = sentences();
    let refs: Vec<&TokenSequence> = seqs.iter().collect();
    let batch = Batch::from_sequences(&refs, cfg.max_seq_len);
    let rep = grad_check(&p, &cfg, &batch, LossWeights::standard(&cfg), 1e-5, 120, 1).unwrap();
    assert!(rep.entries.len() >= 80, "only {} entries checked", rep.entries.len());
    for e in &rep.entries {
        assert!(e.rel_error < 1e-4, "{} [{}]: analytic {} numeric {}", e.name, e.index, e.analytic, e.numeric);
    }
    for g in ["mem.table", "mem.w_k", "mem.w_v", "mem.w_r", "mem.conv", "layer0"] {
        assert!(rep.entries.iter().any(|e| e.name.starts_with(g)), "no entry from {g}");
    }
}

#[test]
fn aux_only_gradient_checks_and_skips_value_path() {
    let cfg = tiny();
    let p = perturbed(&cfg, 15.0);
    let seqs = sentences();
    let refs: Vec<&TokenSequence> = seqs.iter().collect();
    let batch = Batch::from_sequences(&refs, cfg.max_seq_len);
    let w = LossWeights { ce: 0.0, aux: 1.0 };
    let rep = grad_check(&p, &cfg, &batch, w, 1e-5, 60, 2).unwrap();
    let wr: Vec<_> = rep.entries.iter().filter(|e| e.name == "mem.w_r").collect();
    assert!(!wr.is_empty());
    for e in &rep.entries {
        assert!(e.rel_error < 1e-4 || (e.analytic.abs() < 1e-12 && e.numeric.abs() < 1e-9), "{e:?}");
    }
    let (_, g) = loss_and_grad(&p, &cfg, &batch, w).unwrap();
    assert!(g.tables.iter().flat_map(|t| t.values()).flatten().all(|&v| v == 0.0));
    for t in [&g.dense.memory.w_k, &g.dense.memory.w_v, &g.dense.memory.conv_w, &g.dense.memory.conv_b, &g.dense.w_out] {
        assert!(t.data.iter().all(|&v| v == 0.0), "{} has aux gradient", t.name);
    }
    assert!(g.dense.memory.w_r.data.iter().any(|&v| v != 0.0));
}

#[test]
fn incremental_session_matches_full_forward() {
    let cfg = tiny();
    let model = MascModel::new(cfg.clone(), perturbed(&cfg, 10.0)).unwrap();
    let s = tokenize(b"Sessions should agree with the batch pass.");
    let mut input = vec![BOS];
    input.extend_from_slice(&s.as_slice()[..s.len() - 1]);
    let out = forward(&model.params, &cfg, &input).unwrap();
    let mut sess = model.session();
    for (i, &t) in s.as_slice().iter().enumerate() {
        let mut want = out.logits_at(i).to_vec();
        masc_model::linalg::softmax_inplace(&mut want);
        let got = sess.pmf();
        let worst = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "position {i}: {worst}");
        sess.push(t);
    }
}

#[test]
fn ablation_equals_disabled_memory_bit_for_bit() {
    let cfg = tiny();
    let model = MascModel::new(cfg.clone(), perturbed(&cfg, 10.0)).unwrap();
    let ablated = model.ablated();
    let plain = MascModel::new(MascConfig { memory_enabled: false, ..cfg.clone() }, model.params.clone()).unwrap();
    let input = [BOS, 84, 104, 101, 32, 118, 111];
    let a = forward(&ablated.params, &ablated.config, &input).unwrap();
    let b = forward(&plain.params, &plain.config, &input).unwrap();
    assert_eq!(a.logits, b.logits);
    let full = forward(&model.params, &cfg, &input).unwrap();
    assert_ne!(full.logits, a.logits);
    let (mut sa, mut sb) = (ablated.session(), plain.session());
    for &t in &input[1..] {
        assert_eq!(sa.pmf(), sb.pmf());
        sa.push(t);
        sb.push(t);
    }
}

#[test]
fn outputs_are_causal() {
    let cfg = tiny();
    let p = perturbed(&cfg, 10.0);
    let a: Vec<u16> = b"causal masking works".iter().map(|&b| u16::from(b)).collect();
    for j in [3, 9, a.len() - 1] {
        let mut b = a.clone();
        b[j] = b'#'.into();
        let (oa, ob) = (forward(&p, &cfg, &a).unwrap(), forward(&p, &cfg, &b).unwrap());
        for i in 0..j {
            assert_eq!(oa.logits_at(i), ob.logits_at(i), "position {i} saw token {j}");
        }
        assert_ne!(oa.logits_at(j), ob.logits_at(j));
    }
}

fn small_split() -> masc_core::corpus::CorpusSplit {
    prepare_corpus(synth::generate(3, 600).as_bytes(), 0).unwrap()
}

#[test]
fn training_lowers_validation_loss_and_is_deterministic() {
    let cfg = MascConfig { max_seq_len: 160, table_size: 512, ..tiny() };
    let tc = TrainConfig { steps: 60, batch_size: 4, lr: 3e-3, warmup_steps: 5, eval_every: 30, val_sentences: 20, ..TrainConfig::default() };
    let split = small_split();
    let a = train(&cfg, &tc, &split).unwrap();
    assert!(a.best_val_ce < a.initial_val_ce - 0.5, "{} -> {}", a.initial_val_ce, a.best_val_ce);
    assert_eq!(a.log.len(), 60);
    assert!(a.log.iter().all(|r| (r.load.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    let b = train(&cfg, &tc, &split).unwrap();
    assert_eq!(a.params, b.params);
}

#[test]
fn checkpoint_preserves_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    let cfg = tiny();
    let model = MascModel::new(cfg.clone(), perturbed(&cfg, 5.0)).unwrap();
    model.save(&path).unwrap();
    let back = MascModel::load(&path).unwrap();
    assert_eq!(back.config, cfg);
    let (mut s1, mut s2) = (model.session(), back.session());
    for t in [72u16, 105, 33] {
        assert_eq!(s1.pmf(), s2.pmf());
        s1.push(t);
        s2.push(t);
    }
    std::fs::write(&path, b"MASCCKPT garbage").unwrap();
    assert!(MascModel::load(&path).is_err());
}
