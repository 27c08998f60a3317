//! A text-like host corpus: sentences of Zipf-distributed tokens plus a set of
//! recurring multi-word phrases.
//!
//! Real text has collocations that compress well without any relation to a
//! label; the phrases stand in for those.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use super::{draw_len, CountDist, SynthRng};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostConfig {
    pub n_sentences: usize,
    pub vocab_size: usize,
    pub sentence_len: CountDist,
    pub zipf_exponent: f64,
    pub n_phrases: usize,
    /// Inclusive range of phrase lengths.
    pub phrase_len: (usize, usize),
    /// Number of sentences each phrase is inserted into.
    pub phrase_count: CountDist,
    /// Phrase words are drawn uniformly from this inclusive frequency-rank
    /// range (1 is the most frequent token).
    pub phrase_rank_range: (usize, usize),
    pub seed: u64,
}

impl Default for HostConfig {
    fn default() -> Self {
        HostConfig {
            n_sentences: 3400,
            vocab_size: 6000,
            sentence_len: CountDist::new(20.0, 8.0),
            zipf_exponent: 1.0,
            n_phrases: 40,
            phrase_len: (2, 3),
            phrase_count: CountDist::new(60.0, 20.0),
            phrase_rank_range: (30, 1500),
            seed: 0,
        }
    }
}

pub(crate) fn word(rank: usize) -> String {
    format!("w{rank}")
}

/// Unlabeled host transactions.
pub fn zipf_host(config: &HostConfig) -> Result<Vec<Vec<String>>> {
    let (lo, hi) = config.phrase_rank_range;
    if config.n_sentences == 0 || config.vocab_size < 2 || lo == 0 || lo > hi || hi > config.vocab_size {
        return Err(Error::Config("invalid host corpus configuration".into()));
    }
    if config.phrase_len.0 == 0 || config.phrase_len.0 > config.phrase_len.1 {
        return Err(Error::Config("invalid phrase length range".into()));
    }
    config.sentence_len.validate("sentence_len")?;
    config.phrase_count.validate("phrase_count")?;
    let mut rng = SynthRng::seed_from_u64(config.seed);
    let zipf = Zipf::new(config.vocab_size as f64, config.zipf_exponent)
        .map_err(|e| Error::Config(format!("zipf: {e}")))?;
    let mut sentences: Vec<Vec<usize>> = Vec::with_capacity(config.n_sentences);
    for _ in 0..config.n_sentences {
        let len = config.sentence_len.draw(&mut rng, 200).max(1);
        let mut s: Vec<usize> = (0..len).map(|_| zipf.sample(&mut rng) as usize).collect();
        s.sort_unstable();
        s.dedup();
        sentences.push(s);
    }
    for _ in 0..config.n_phrases {
        let len = draw_len(&mut rng, config.phrase_len);
        let phrase: Vec<usize> = sample(&mut rng, hi - lo + 1, len).into_iter().map(|r| r + lo).collect();
        let count = config.phrase_count.draw(&mut rng, config.n_sentences);
        for k in sample(&mut rng, config.n_sentences, count) {
            sentences[k].extend(&phrase);
        }
    }
    Ok(sentences
        .into_iter()
        .map(|mut s| {
            s.sort_unstable();
            s.dedup();
            s.into_iter().map(word).collect()
        })
        .collect())
}
