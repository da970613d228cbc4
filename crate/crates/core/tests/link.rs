use masc_core::channel::{compute_llr, snr_to_sigma, Channel, ChannelKind, EnergyMode};
use masc_core::eval::bit_errors;
use masc_core::fec::{bp_decode, bpsk_modulate, deframe, frame_payload, LdpcCode};
use masc_core::Bitstream;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uncoded BPSK bit error rate `Q(sqrt(2 Eb/N0))`.
fn uncoded_ber(ebn0_db: f64) -> f64 {
    let x = (2.0 * 10f64.powf(ebn0_db / 10.0)).sqrt();
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes `erfcc`, |rel err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Information-bit BER of BP decoding at the given Eb/N0.
fn coded_ber(code: &LdpcCode, ebn0_db: f64, codewords: usize, seed: u64) -> (usize, usize) {
    let rate = code.rate();
    let sigma2 = 1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0));
    let mut ch = Channel::new(ChannelKind::Awgn, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut errors = 0;
    for _ in 0..codewords {
        let m: Vec<bool> = (0..code.k()).map(|_| rng.random()).collect();
        let x = code.encode(&m).unwrap();
        let (y, h) = ch.transmit(&bpsk_modulate(&x), 1.0, sigma2);
        let out = bp_decode(&compute_llr(&y, h, sigma2, 1.0).unwrap(), code, 50);
        errors += bit_errors(&code.extract_message(&out.bits).unwrap(), &m);
    }
    (errors, codewords * code.k())
}

#[test]
fn erfc_reference_points() {
    assert!((erfc(0.0) - 1.0).abs() < 1e-7);
    assert!((erfc(1.0) - 0.157_299_207_050_285_1).abs() < 1e-7);
    assert!((uncoded_ber(4.0) - 0.012_500_818_040_737_6).abs() < 1e-8);
}

#[test]
fn coded_ber_beats_uncoded_at_4db() {
    let code = LdpcCode::golden();
    let (e, n) = coded_ber(&code, 4.0, 10_000, 1);
    let ber = e as f64 / n as f64;
    assert!(ber < uncoded_ber(4.0), "{ber}");
}

#[test]
fn coded_ber_decreases_with_snr() {
    let code = LdpcCode::golden();
    let bers: Vec<f64> = [0.0, 2.0, 4.0]
        .iter()
        .map(|&s| {
            let (e, n) = coded_ber(&code, s, 2000, 9);
            e as f64 / n as f64
        })
        .collect();
    assert!(bers.windows(2).all(|w| w[1] <= w[0]), "{bers:?}");
}

#[test]
fn framed_payload_survives_a_clean_link() {
    let code = LdpcCode::golden();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let payload: Bitstream = (0..301).map(|_| rng.random::<bool>()).collect();
    let blocks = frame_payload(&payload, code.k()).unwrap();
    let n = blocks.len() * code.n();
    let (sigma2, a) = snr_to_sigma(60.0, EnergyMode::FixedTotal { n_ref: 2 * n }, n).unwrap();
    let mut ch = Channel::new(ChannelKind::Rayleigh, 3);
    let mut received = Vec::new();
    for b in &blocks {
        let x = code.encode(b).unwrap();
        let (y, h) = ch.transmit(&bpsk_modulate(&x), a, sigma2);
        let out = bp_decode(&compute_llr(&y, h, sigma2, a).unwrap(), &code, 50);
        received.push(code.extract_message(&out.bits).unwrap());
    }
    assert_eq!(deframe(&received).unwrap(), payload);
}
