//! Patterns of exclusive-or clauses injected into a host corpus, with
//! synthetic embeddings that place every clause's items around a common
//! centroid.
//!
//! Each planted instance receives exactly one randomly chosen item per clause.
//! An instance is skipped when it already holds another item of one of the
//! clauses, which would break the exactly-one semantics.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::planted::{assign_labels, support_of, HostIndex};
use super::{draw_len, CountDist, PlantedPattern, PlantedTruth, SynthRng, TokenRows};
use crate::error::{Error, Result};
use crate::tidset::TidSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XorConfig {
    pub n_patterns: usize,
    /// Inclusive range of clauses per pattern.
    pub clause_count: (usize, usize),
    /// Inclusive range of items per clause.
    pub clause_len: (usize, usize),
    pub count: CountDist,
    pub shift: f64,
    pub label_noise: f64,
    pub embedding_dim: usize,
    /// Standard deviation of the per-component noise around a clause centroid.
    pub centroid_noise: f64,
    pub max_redraws: usize,
    pub seed: u64,
}

impl Default for XorConfig {
    fn default() -> Self {
        XorConfig {
            n_patterns: 12,
            clause_count: (1, 5),
            clause_len: (1, 5),
            count: CountDist::new(150.0, 20.0),
            shift: 1.0,
            label_noise: 0.0,
            embedding_dim: 50,
            centroid_noise: 0.05,
            max_redraws: 10_000,
            seed: 0,
        }
    }
}

/// Token vectors in token order.
pub type TokenVectors = Vec<(String, Vec<f64>)>;

/// Injects exclusive-or patterns into `host` and returns the data, the truth
/// and a vector for every token of the data.
pub fn gen_xor(host: &[Vec<String>], config: &XorConfig) -> Result<(TokenRows, PlantedTruth, TokenVectors)> {
    if !(0.0..=1.0).contains(&config.shift) || !(0.0..=1.0).contains(&config.label_noise) {
        return Err(Error::Config("shift and label_noise must lie in [0, 1]".into()));
    }
    for (lo, hi) in [config.clause_count, config.clause_len] {
        if lo == 0 || lo > hi {
            return Err(Error::Config("invalid clause range".into()));
        }
    }
    if config.embedding_dim == 0 || !(config.centroid_noise >= 0.0) {
        return Err(Error::Config("invalid embedding parameters".into()));
    }
    config.count.validate("count")?;
    let n = host.len();
    if n < 2 {
        return Err(Error::Config("host corpus is too small".into()));
    }
    let mut rng = SynthRng::seed_from_u64(config.seed);
    let index = HostIndex::new(host);
    let mut used = BTreeSet::new();
    let mut rows: Vec<Vec<String>> = host.to_vec();
    let mut carrying = TidSet::empty(n);
    let mut planted: Vec<(Vec<Vec<String>>, TidSet)> = Vec::new();
    for _ in 0..config.n_patterns {
        let n_clauses = draw_len(&mut rng, config.clause_count);
        let mut clauses: Vec<Vec<String>> = Vec::new();
        let mut all: Vec<String> = Vec::new();
        for _ in 0..n_clauses {
            let len = draw_len(&mut rng, config.clause_len);
            let items = index.draw_items(&mut rng, len, &all, &mut used, config.max_redraws)?;
            all.extend(items.iter().cloned());
            clauses.push(items);
        }
        let k = config.count.draw(&mut rng, n);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut inst = TidSet::empty(n);
        for t in order {
            if inst.len() == k {
                break;
            }
            let picks: Vec<&String> = clauses.iter().map(|c| &c[rng.random_range(0..c.len())]).collect();
            let breaks = clauses
                .iter()
                .zip(&picks)
                .any(|(c, &p)| c.iter().any(|i| i != p && rows[t].contains(i)));
            if breaks {
                continue;
            }
            for p in picks {
                if !rows[t].contains(p) {
                    rows[t].push(p.clone());
                }
            }
            inst.insert(t);
        }
        carrying.union_with(&inst);
        planted.push((clauses, inst));
    }
    let labels = assign_labels(&mut rng, n, &carrying, config.shift, config.label_noise)?;

    let d = config.embedding_dim;
    let tokens: BTreeSet<&String> = rows.iter().flatten().collect();
    let noise = Normal::new(0.0, config.centroid_noise).map_err(|e| Error::Config(e.to_string()))?;
    let mut vectors: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for (clauses, _) in &planted {
        for c in clauses {
            let centroid: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
            for item in c {
                let v = centroid.iter().map(|x| x + noise.sample(&mut rng)).collect();
                vectors.insert(item.clone(), v);
            }
        }
    }
    for tok in tokens {
        if !vectors.contains_key(tok) {
            let v = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
            vectors.insert(tok.clone(), v);
        }
    }

    let truth = PlantedTruth {
        patterns: planted
            .iter()
            .map(|(clauses, inst)| {
                let (neg, pos) = support_of(inst, &labels);
                let mut clauses: Vec<Vec<String>> = clauses
                    .iter()
                    .map(|c| {
                        let mut c = c.clone();
                        c.sort();
                        c
                    })
                    .collect();
                clauses.sort();
                PlantedPattern {
                    clauses,
                    support_neg: neg,
                    support_pos: pos,
                }
            })
            .collect(),
    };
    Ok((
        TokenRows {
            rows: labels.into_iter().zip(rows).collect(),
        },
        truth,
        vectors.into_iter().collect(),
    ))
}
