use masc_core::corpus::{prepare_corpus, synth, TokenSequence, EOS, VOCAB_SIZE};
use masc_core::entropy::{
    ac_encode, huffman_build, huffman_decode, huffman_encode, unigram_counts, AcConfig, DecodeMode,
};
use masc_core::eval::{compression_stats, pooled_bits_per_byte};
use masc_core::source::{is_valid_pmf, NgramModel, SourceModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus_100k() -> masc_core::corpus::CorpusSplit {
    let mut text = String::new();
    let mut n = 1000;
    while text.len() < 125_000 {
        text = synth::generate(8, n);
        n += 200;
    }
    prepare_corpus(text.as_bytes(), 1).unwrap()
}

fn held_out_bits_per_byte(model: &dyn SourceModel, test: &[TokenSequence]) -> f64 {
    let cfg = AcConfig::default();
    let stats: Vec<_> = test
        .iter()
        .map(|s| compression_stats(s.as_slice(), ac_encode(s, model, &cfg).unwrap().len()))
        .collect();
    pooled_bits_per_byte(&stats)
}

#[test]
fn higher_order_ngram_compresses_better() {
    let split = corpus_100k();
    let train_bytes: usize = split.train.iter().map(|s| s.len() - 1).sum();
    assert!(train_bytes >= 100_000, "{train_bytes}");
    let o1 = NgramModel::train(1, 0.01, &split.train).unwrap();
    let o3 = NgramModel::train(3, 0.01, &split.train).unwrap();
    let b1 = held_out_bits_per_byte(&o1, &split.test);
    let b3 = held_out_bits_per_byte(&o3, &split.test);
    assert!(b3 < b1, "order-3 {b3} vs order-1 {b1}");
    assert!(b1 < 8.0);
}

#[test]
fn huffman_beats_eight_bits_on_text_and_round_trips() {
    let split = corpus_100k();
    let table = huffman_build(&unigram_counts(&split.train)).unwrap();
    assert!(table.is_prefix_free());
    assert!(table.kraft_sum() <= 1.0);
    let mut stats = Vec::new();
    for s in &split.test {
        let bits = huffman_encode(s, &table).unwrap();
        stats.push(compression_stats(s.as_slice(), bits.len()));
        let out = huffman_decode(&bits, &table, DecodeMode::Strict, 4 * 256).unwrap();
        assert_eq!(&out.tokens, s);
    }
    assert!(pooled_bits_per_byte(&stats) < 8.0);
}

#[test]
fn ngram_pmfs_are_valid_on_random_prefixes() {
    let split = prepare_corpus(synth::generate(2, 1500).as_bytes(), 0).unwrap();
    let models: Vec<NgramModel> =
        (1..=5).map(|n| NgramModel::train(n, 0.05, &split.train).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..10_000 {
        let m = &models[i % models.len()];
        let len = rng.random_range(0..20);
        let prefix: Vec<u16> = if rng.random_bool(0.5) {
            let s = &split.train[rng.random_range(0..split.train.len())];
            s.as_slice()[..len.min(s.len() - 1)].to_vec()
        } else {
            (0..len).map(|_| rng.random_range(0..EOS)).collect()
        };
        let p = m.next_pmf(&prefix);
        assert!(is_valid_pmf(&p, VOCAB_SIZE));
        assert_eq!(p, m.next_pmf(&prefix));
    }
}
