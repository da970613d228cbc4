//! One sentence through source coding, LDPC, BPSK, the channel and back.

use masc_core::channel::{compute_llr, snr_to_sigma, Channel, ChannelConfig};
use masc_core::corpus::{detokenize_lossy, TokenSequence, EOS};
use masc_core::entropy::{
    ac_decode, ac_encode, huffman_decode, huffman_encode, AcConfig, DecodeMode, HuffmanTable,
};
use masc_core::eval::{bit_errors, bleu, TrialResult};
use masc_core::fec::{bp_decode, bpsk_modulate, deframe, frame_payload, sign_to_bin, LdpcCode};
use masc_core::source::NgramModel;
use masc_core::{Bitstream, SourceModel};
use masc_model::MascModel;

use crate::config::Variant;
use crate::HarnessError;

/// Everything a trial needs, loaded once.
pub struct Models {
    pub huffman: HuffmanTable,
    pub ngram: NgramModel,
    pub masc: Option<MascModel>,
    pub masc_ablated: Option<MascModel>,
    pub code: LdpcCode,
    pub ac: AcConfig,
    /// Decode guard in tokens.
    pub max_tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeFlag {
    Ok,
    /// The source decoder hit the length guard.
    Guard,
    /// The frame header announced more bits than were received.
    Header,
    /// The Huffman stream ended inside a codeword.
    Truncated,
}

impl DecodeFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeFlag::Ok => "ok",
            DecodeFlag::Guard => "guard",
            DecodeFlag::Header => "header",
            DecodeFlag::Truncated => "truncated",
        }
    }
}

impl Models {
    pub fn source_model(&self, v: Variant) -> Result<&dyn SourceModel, HarnessError> {
        let missing = || HarnessError::MissingModel(v.as_str().into());
        Ok(match v {
            Variant::Huffman => return Err(HarnessError::Config("huffman has no source model".into())),
            Variant::NgramAc => &self.ngram,
            Variant::MascAc => self.masc.as_ref().ok_or_else(missing)?,
            Variant::MascAcAblated => self.masc_ablated.as_ref().ok_or_else(missing)?,
        })
    }

    pub fn encode(&self, v: Variant, tokens: &TokenSequence) -> Result<Bitstream, HarnessError> {
        Ok(match v {
            Variant::Huffman => huffman_encode(tokens, &self.huffman)?,
            _ => ac_encode(tokens, self.source_model(v)?, &self.ac)?,
        })
    }

    pub fn decode(&self, v: Variant, bits: &Bitstream) -> Result<(TokenSequence, DecodeFlag), HarnessError> {
        Ok(match v {
            Variant::Huffman => {
                let d = huffman_decode(bits, &self.huffman, DecodeMode::Lenient, self.max_tokens)?;
                let flag = if d.hit_guard {
                    DecodeFlag::Guard
                } else if d.truncated {
                    DecodeFlag::Truncated
                } else {
                    DecodeFlag::Ok
                };
                (d.tokens, flag)
            }
            _ => {
                let d = ac_decode(bits, self.source_model(v)?, &self.ac, self.max_tokens)?;
                (d.tokens, if d.hit_guard { DecodeFlag::Guard } else { DecodeFlag::Ok })
            }
        })
    }

    /// Payload plus, for MASC variants, the teacher-forced routing load.
    pub fn prepare(&self, v: Variant, tokens: &TokenSequence) -> Result<Encoded, HarnessError> {
        let masc = match v {
            Variant::MascAc => self.masc.as_ref(),
            Variant::MascAcAblated => self.masc_ablated.as_ref(),
            _ => None,
        };
        let load = masc.map(|m| m.routing_stats(tokens.as_slice())).transpose()?.map(|s| s.load());
        Ok(Encoded { payload: self.encode(v, tokens)?, load })
    }

    /// Code symbols needed to send a payload of `payload_bits`.
    pub fn frame_symbols(&self, payload_bits: usize) -> usize {
        (1 + payload_bits.div_ceil(self.code.k())) * self.code.n()
    }
}

/// A source-coded sentence, reusable across channel realisations.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub payload: Bitstream,
    pub load: Option<[f64; 4]>,
}

/// Channel-side outcome of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkOutcome {
    /// `None` when the received header is inconsistent.
    pub payload: Option<Bitstream>,
    pub codeword_bits: usize,
    pub channel_bit_errors: usize,
    pub decoded_bit_errors: usize,
}

/// Frames, encodes, modulates, transmits and BP-decodes a payload.
pub fn transmit(
    payload: &Bitstream,
    code: &LdpcCode,
    channel: &ChannelConfig,
    bp_iters: usize,
) -> Result<LinkOutcome, HarnessError> {
    let blocks = frame_payload(payload, code.k())?;
    let n_sym = blocks.len() * code.n();
    let (sigma2, amplitude) = snr_to_sigma(channel.snr_db, channel.energy, n_sym)?;
    let mut ch = Channel::new(channel.kind, channel.seed);
    let mut received = Vec::with_capacity(blocks.len());
    let (mut raw_err, mut dec_err) = (0, 0);
    for block in &blocks {
        let word = code.encode(block)?;
        let (y, h) = ch.transmit(&bpsk_modulate(&word), amplitude, sigma2);
        raw_err += bit_errors(&word, &sign_to_bin(&y));
        let out = bp_decode(&compute_llr(&y, h, sigma2, amplitude)?, code, bp_iters);
        dec_err += bit_errors(&word, &out.bits);
        received.push(code.extract_message(&out.bits)?);
    }
    Ok(LinkOutcome {
        payload: deframe(&received).ok(),
        codeword_bits: n_sym,
        channel_bit_errors: raw_err,
        decoded_bit_errors: dec_err,
    })
}

/// Bit errors between payloads of possibly different length; missing bits count as errors.
fn payload_errors(sent: &Bitstream, got: &Bitstream) -> usize {
    bit_errors(sent.as_slice(), got.as_slice()) + sent.len().abs_diff(got.len())
}

/// Display text for a token sequence. Control bytes other than tab become
/// U+FFFD so garbled reconstructions stay readable by ordinary CSV tools.
fn text_of(tokens: &[u16]) -> String {
    let body: Vec<u16> = tokens.iter().copied().filter(|&t| t != EOS).collect();
    String::from_utf8_lossy(&detokenize_lossy(&body))
        .chars()
        .map(|c| if c.is_control() && c != '\t' { char::REPLACEMENT_CHARACTER } else { c })
        .collect()
}

fn bleu_or_exact(reference: &str, hypothesis: &str, order: usize, exact: bool) -> f64 {
    // a reference made only of punctuation has no words; fall back to exact match
    bleu(reference, hypothesis, order).unwrap_or(if exact { 1.0 } else { 0.0 })
}

/// Runs one trial from an already source-encoded sentence.
pub fn run_trial_encoded(
    models: &Models,
    variant: Variant,
    sentence_id: usize,
    tokens: &TokenSequence,
    encoded: &Encoded,
    channel: &ChannelConfig,
    bp_iters: usize,
) -> Result<TrialResult, HarnessError> {
    let payload = &encoded.payload;
    let link = transmit(payload, &models.code, channel, bp_iters)?;
    let (recon, flag, payload_bit_errors) = match &link.payload {
        None => (Vec::new(), DecodeFlag::Header, payload.len()),
        Some(bits) => {
            let (t, f) = models.decode(variant, bits)?;
            (t.into_inner(), f, payload_errors(payload, bits))
        }
    };
    let exact = recon.as_slice() == tokens.as_slice();
    let source = text_of(tokens.as_slice());
    let reconstructed = text_of(&recon);
    let load = encoded.load;
    Ok(TrialResult {
        sentence_id,
        variant: variant.to_string(),
        channel: channel.kind.to_string(),
        snr_db: channel.snr_db,
        seed: channel.seed,
        bleu1: bleu_or_exact(&source, &reconstructed, 1, exact),
        bleu4: bleu_or_exact(&source, &reconstructed, 4, exact),
        source,
        reconstructed,
        payload_bits: payload.len(),
        codeword_bits: link.codeword_bits,
        channel_bit_errors: link.channel_bit_errors,
        decoded_bit_errors: link.decoded_bit_errors,
        payload_bit_errors,
        exact,
        flag: flag.as_str().into(),
        load2: load.map(|l| l[0]),
        load3: load.map(|l| l[1]),
        load4: load.map(|l| l[2]),
        load5: load.map(|l| l[3]),
    })
}

/// Source-encodes `tokens` with `variant` and runs one trial.
pub fn run_trial(
    models: &Models,
    variant: Variant,
    sentence_id: usize,
    tokens: &TokenSequence,
    channel: &ChannelConfig,
    bp_iters: usize,
) -> Result<TrialResult, HarnessError> {
    let encoded = models.prepare(variant, tokens)?;
    run_trial_encoded(models, variant, sentence_id, tokens, &encoded, channel, bp_iters)
}
