use masc_core::channel::{ChannelConfig, ChannelKind, EnergyMode};
use masc_core::corpus::CorpusSplit;
use masc_harness::artifacts::{assemble, build_huffman, load_split, train_ngram};
use masc_harness::config::ExperimentConfig;
use masc_harness::sweep::write_outputs;
use masc_harness::{run_sweep, run_trial, Models, Variant};
use masc_model::{MascConfig, MascModel, Params};

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.corpus.synthetic_sentences = 300;
    cfg.masc = MascConfig {
        d_model: 16,
        n_heads: 2,
        d_ff: 32,
        max_seq_len: 160,
        table_size: 256,
        slot_dim: 8,
        init_seed: 3,
        ..MascConfig::default()
    };
    cfg.sweep.channels = vec![ChannelKind::Awgn];
    cfg
}

fn setup(cfg: &ExperimentConfig) -> (CorpusSplit, Models) {
    let split = load_split(cfg).unwrap();
    let masc = MascModel::new(cfg.masc.clone(), Params::init(&cfg.masc)).unwrap();
    let models = assemble(cfg, &split, build_huffman(&split).unwrap(), train_ngram(cfg, &split).unwrap(), Some(masc));
    (split, models)
}

fn clean(seed: u64) -> ChannelConfig {
    ChannelConfig { kind: ChannelKind::Awgn, snr_db: 300.0, energy: EnergyMode::PerSymbol, seed }
}

#[test]
fn noiseless_link_is_lossless_for_every_variant() {
    let cfg = small_config();
    let (split, models) = setup(&cfg);
    for v in Variant::ALL {
        for (id, s) in split.test.iter().enumerate().take(8) {
            let r = run_trial(&models, v, id, s, &clean(id as u64), 50).unwrap();
            assert!(r.exact, "{v} sentence {id}: {:?} vs {:?}", r.source, r.reconstructed);
            assert_eq!((r.bleu1, r.bleu4), (1.0, 1.0));
            assert_eq!(r.decoded_bit_errors, 0);
            assert_eq!(r.payload_bit_errors, 0);
            assert_eq!(r.flag, "ok");
            assert_eq!(r.load2.is_some(), v.uses_masc());
        }
    }
}

#[test]
fn trials_are_deterministic_and_noise_is_recorded() {
    let cfg = small_config();
    let (split, models) = setup(&cfg);
    let ch = ChannelConfig { kind: ChannelKind::Rayleigh, snr_db: 0.0, energy: EnergyMode::FixedTotal { n_ref: 600 }, seed: 9 };
    let a = run_trial(&models, Variant::NgramAc, 1, &split.test[1], &ch, 50).unwrap();
    let b = run_trial(&models, Variant::NgramAc, 1, &split.test[1], &ch, 50).unwrap();
    assert_eq!(a, b);
    assert!(a.channel_bit_errors > 0);
    assert!(a.channel_bit_errors <= a.codeword_bits && a.payload_bit_errors <= a.payload_bits.max(1) * 2);
    assert!((0.0..=1.0).contains(&a.bleu1) && (0.0..=1.0).contains(&a.bleu4));
}

#[test]
fn very_low_snr_terminates_with_a_flag() {
    let cfg = small_config();
    let (split, models) = setup(&cfg);
    for v in Variant::ALL {
        for seed in 0..5 {
            let ch = ChannelConfig { kind: ChannelKind::Awgn, snr_db: -20.0, energy: EnergyMode::PerSymbol, seed };
            let r = run_trial(&models, v, 0, &split.test[0], &ch, 10).unwrap();
            assert!(!r.exact);
            assert!(["ok", "guard", "header", "truncated"].contains(&r.flag.as_str()));
        }
    }
}

#[test]
fn two_point_grid_gives_two_rows_per_variant_and_identical_csvs() {
    let mut cfg = small_config();
    cfg.sweep.snr_db = vec![-2.0, 30.0];
    cfg.sweep.trials = 1;
    let (split, models) = setup(&cfg);
    let out = run_sweep(&cfg, &models, &split.test, |_| {}).unwrap();
    for v in Variant::ALL {
        assert_eq!(out.summary.iter().filter(|r| r.variant == v.as_str()).count(), 2);
    }
    assert!(out.summary.iter().filter(|r| r.snr_db == 30.0).all(|r| r.bleu1_mean >= 0.99));
    assert!(out.failures.is_empty());

    cfg.sweep.trials = 4;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = run_sweep(&cfg, &models, &split.test, |_| {}).unwrap();
        let files = write_outputs(d.path(), &out).unwrap();
        assert_eq!(files.len(), 4);
    }
    for f in ["trials.csv", "summary.csv", "bleu1_awgn.svg"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        assert_eq!(a, std::fs::read(dirs[1].path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(dirs[0].path().join("trials.csv")).unwrap();
    assert!(csv.starts_with("sentence_id,variant,channel,snr_db,seed,source,reconstructed,payload_bits,"));
    assert_eq!(csv.lines().count(), 1 + 4 * 2 * 4);
}

#[test]
fn fixed_total_energy_favours_short_payloads() {
    let cfg = small_config();
    let (split, models) = setup(&cfg);
    let s = &split.test[2];
    let huff = models.encode(Variant::Huffman, s).unwrap();
    let ng = models.encode(Variant::NgramAc, s).unwrap();
    assert!(ng.len() < huff.len());
    let n_ref = models.frame_symbols(huff.len());
    assert_eq!(cfg.energy_mode(n_ref), EnergyMode::FixedTotal { n_ref });
    assert!(models.frame_symbols(ng.len()) <= n_ref);
}

#[test]
fn bleu_rises_with_snr_within_ci() {
    let mut cfg = small_config();
    cfg.sweep.variants = vec![Variant::Huffman, Variant::NgramAc];
    cfg.sweep.snr_db = (-3..=4).map(|i| 2.0 * i as f64).collect();
    cfg.sweep.trials = 40;
    let (split, models) = setup(&cfg);
    let out = run_sweep(&cfg, &models, &split.test, |_| {}).unwrap();
    for v in &cfg.sweep.variants {
        let rows: Vec<_> = out.summary.iter().filter(|r| r.variant == v.as_str()).collect();
        for w in rows.windows(2) {
            assert!(w[1].bleu1_mean + w[1].bleu1_ci95 + w[0].bleu1_ci95 >= w[0].bleu1_mean, "{v} {} -> {}", w[0].snr_db, w[1].snr_db);
        }
        assert!(rows[0].bleu1_mean < 0.5 && rows.last().unwrap().bleu1_mean >= 0.99, "{v}");
    }
}
