//! Conjunctive patterns injected into a host corpus.
//!
//! Pattern items are drawn uniformly from the host vocabulary such that no two
//! items of one pattern co-occur anywhere in the host, and no item is shared
//! between patterns. Each pattern is inserted into `N(150, 20)` random
//! instances. A `shift` fraction of the pattern-carrying instances is labeled
//! `l⁺`; then a `label_noise` fraction of the pattern-free instances is
//! labeled `l⁺` as well.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{draw_len, CountDist, PlantedPattern, PlantedTruth, SynthRng, TokenRows};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::tidset::TidSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub n_patterns: usize,
    /// Inclusive range of pattern lengths.
    pub pattern_len: (usize, usize),
    pub count: CountDist,
    /// Fraction of pattern-carrying instances labeled `l⁺`.
    pub shift: f64,
    /// Fraction of pattern-free instances labeled `l⁺`.
    pub label_noise: f64,
    /// Rejected draws allowed per pattern item.
    pub max_redraws: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_patterns: 12,
            pattern_len: (1, 5),
            count: CountDist::new(150.0, 20.0),
            shift: 1.0,
            label_noise: 0.0,
            max_redraws: 10_000,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.shift) || !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::Config("shift and label_noise must lie in [0, 1]".into()));
        }
        if self.pattern_len.0 == 0 || self.pattern_len.0 > self.pattern_len.1 {
            return Err(Error::Config("invalid pattern length range".into()));
        }
        self.count.validate("count")
    }
}

/// Token → instances of the host that contain it.
pub(crate) struct HostIndex {
    pub tokens: Vec<String>,
    pub tids: BTreeMap<String, TidSet>,
}

impl HostIndex {
    pub fn new(host: &[Vec<String>]) -> Self {
        let mut tids: BTreeMap<String, TidSet> = BTreeMap::new();
        for (t, row) in host.iter().enumerate() {
            for tok in row {
                tids.entry(tok.clone())
                    .or_insert_with(|| TidSet::empty(host.len()))
                    .insert(t);
            }
        }
        HostIndex {
            tokens: tids.keys().cloned().collect(),
            tids,
        }
    }

    fn co_occur(&self, a: &str, b: &str) -> bool {
        !self.tids[a].is_disjoint(&self.tids[b])
    }

    /// Draws `len` unused tokens, none co-occurring in the host with `with` or
    /// with each other.
    pub fn draw_items(
        &self,
        rng: &mut SynthRng,
        len: usize,
        with: &[String],
        used: &mut BTreeSet<String>,
        max_redraws: usize,
    ) -> Result<Vec<String>> {
        let mut chosen: Vec<String> = Vec::with_capacity(len);
        let mut rejects = 0;
        while chosen.len() < len {
            let k = sample(rng, self.tokens.len(), 1).index(0);
            let tok = &self.tokens[k];
            let ok = !used.contains(tok) && with.iter().chain(&chosen).all(|o| !self.co_occur(o, tok));
            if ok {
                used.insert(tok.clone());
                chosen.push(tok.clone());
            } else {
                rejects += 1;
                if rejects > max_redraws {
                    return Err(Error::Config(
                        "could not find enough host tokens that never co-occur".into(),
                    ));
                }
            }
        }
        Ok(chosen)
    }
}

/// Labels `carrying` instances `l⁺` with fraction `shift` and the others with
/// fraction `label_noise`.
pub(crate) fn assign_labels(
    rng: &mut SynthRng,
    n: usize,
    carrying: &TidSet,
    shift: f64,
    label_noise: f64,
) -> Result<Vec<Label>> {
    let with: Vec<usize> = carrying.iter().collect();
    let without: Vec<usize> = (0..n).filter(|&t| !carrying.contains(t)).collect();
    let mut labels = vec![Label::Neg; n];
    let k = (shift * with.len() as f64).round() as usize;
    for i in sample(rng, with.len(), k.min(with.len())) {
        labels[with[i]] = Label::Pos;
    }
    let k = (label_noise * without.len() as f64).round() as usize;
    for i in sample(rng, without.len(), k.min(without.len())) {
        labels[without[i]] = Label::Pos;
    }
    let n_pos = labels.iter().filter(|&&l| l == Label::Pos).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::Config("the generated labels leave one partition empty".into()));
    }
    Ok(labels)
}

pub(crate) fn support_of(instances: &TidSet, labels: &[Label]) -> (usize, usize) {
    let pos = instances.iter().filter(|&t| labels[t] == Label::Pos).count();
    (instances.len() - pos, pos)
}

/// Injects conjunctive patterns into `host`.
pub fn gen_planted(host: &[Vec<String>], config: &PlantedConfig) -> Result<(TokenRows, PlantedTruth)> {
    config.validate()?;
    let n = host.len();
    if n < 2 {
        return Err(Error::Config("host corpus is too small".into()));
    }
    let mut rng = SynthRng::seed_from_u64(config.seed);
    let index = HostIndex::new(host);
    let mut used = BTreeSet::new();
    let mut rows: Vec<Vec<String>> = host.to_vec();
    let mut carrying = TidSet::empty(n);
    let mut planted: Vec<(Vec<String>, TidSet)> = Vec::new();
    for _ in 0..config.n_patterns {
        let len = draw_len(&mut rng, config.pattern_len);
        let items = index.draw_items(&mut rng, len, &[], &mut used, config.max_redraws)?;
        let k = config.count.draw(&mut rng, n);
        let mut inst = TidSet::empty(n);
        for t in sample(&mut rng, n, k) {
            inst.insert(t);
            for it in &items {
                if !rows[t].contains(it) {
                    rows[t].push(it.clone());
                }
            }
        }
        carrying.union_with(&inst);
        planted.push((items, inst));
    }
    let labels = assign_labels(&mut rng, n, &carrying, config.shift, config.label_noise)?;
    let truth = PlantedTruth {
        patterns: planted
            .iter()
            .map(|(items, inst)| {
                let (neg, pos) = support_of(inst, &labels);
                let mut items = items.clone();
                items.sort();
                PlantedPattern {
                    clauses: items.into_iter().map(|i| vec![i]).collect(),
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
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{zipf_host, HostConfig};

    fn host() -> Vec<Vec<String>> {
        zipf_host(&HostConfig {
            n_sentences: 1500,
            seed: 1,
            ..HostConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn full_shift_without_noise_labels_exactly_the_carriers() {
        let h = host();
        let (rows, truth) = gen_planted(&h, &PlantedConfig { seed: 4, ..PlantedConfig::default() }).unwrap();
        assert_eq!(truth.patterns.len(), 12);
        for (label, toks) in &rows.rows {
            let carries = truth
                .patterns
                .iter()
                .filter(|p| p.clauses.len() >= 2)
                .any(|p| p.clauses.iter().all(|c| toks.contains(&c[0])));
            if carries {
                assert_eq!(*label, Label::Pos);
            }
        }
        assert!(truth.patterns.iter().all(|p| p.support_neg == 0));
    }

    #[test]
    fn label_noise_fraction_of_free_instances() {
        let h = host();
        let cfg = PlantedConfig {
            label_noise: 0.2,
            seed: 5,
            ..PlantedConfig::default()
        };
        let (rows, truth) = gen_planted(&h, &cfg).unwrap();
        let sets = truth.item_sets();
        let mut free = 0;
        let mut free_pos = 0;
        for (k, (label, _)) in rows.rows.iter().enumerate() {
            let carrying = sets.iter().any(|s| {
                // a planted instance contains the whole pattern and, for one
                // item patterns, the host never did
                s.iter().all(|i| rows.rows[k].1.contains(i)) && s.iter().any(|i| !h[k].contains(i))
            });
            if !carrying {
                free += 1;
                if *label == Label::Pos {
                    free_pos += 1;
                }
            }
        }
        let frac = free_pos as f64 / free as f64;
        assert!((frac - 0.2).abs() < 0.02, "{frac}");
    }

    #[test]
    fn pattern_items_never_co_occur_in_host() {
        let h = host();
        let (_, truth) = gen_planted(&h, &PlantedConfig { seed: 6, ..PlantedConfig::default() }).unwrap();
        for p in &truth.patterns {
            let items = p.item_set();
            for row in &h {
                assert!(items.iter().filter(|i| row.contains(i)).count() <= 1);
            }
        }
    }
}
