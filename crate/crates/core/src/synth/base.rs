//! The binary matrix generator and its sweeps.
//!
//! Patterns of random length are drawn (an item may occur in several patterns)
//! until the target fraction of items is covered. Each pattern is planted in
//! `round(shift·k)` random positive and `round((1 − shift)·k)` random negative
//! transactions, `k ~ N(150, 20)`. Pattern items then get `N(50, 20)` random
//! background occurrences, all other items `N(150, 20)`, and finally a
//! fraction of all matrix cells is flipped.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, draw_len, CountDist, PlantedPattern, PlantedTruth, SynthRng, TokenRows};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::tidset::TidSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseGenConfig {
    pub n_transactions: usize,
    pub frac_neg: f64,
    pub n_items: usize,
    /// Inclusive range of pattern lengths.
    pub pattern_len: (usize, usize),
    pub coverage_target: f64,
    pub pattern_count: CountDist,
    pub shift: f64,
    pub pattern_item_background: CountDist,
    pub other_item_background: CountDist,
    pub flip_rate: f64,
    pub seed: u64,
}

impl Default for BaseGenConfig {
    fn default() -> Self {
        BaseGenConfig {
            n_transactions: 10_000,
            frac_neg: 0.5,
            n_items: 1000,
            pattern_len: (2, 5),
            coverage_target: 0.5,
            pattern_count: CountDist::new(150.0, 20.0),
            shift: 0.9,
            pattern_item_background: CountDist::new(50.0, 20.0),
            other_item_background: CountDist::new(150.0, 20.0),
            flip_rate: 0.001,
            seed: 0,
        }
    }
}

impl BaseGenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_transactions < 2 || self.n_items == 0 {
            return bad("need at least 2 transactions and 1 item".into());
        }
        if !(self.frac_neg > 0.0 && self.frac_neg < 1.0) {
            return bad(format!("frac_neg must lie in (0, 1), got {}", self.frac_neg));
        }
        let n_neg = self.n_neg();
        if n_neg == 0 || n_neg == self.n_transactions {
            return bad("both label partitions must be non-empty".into());
        }
        let (lo, hi) = self.pattern_len;
        if lo == 0 || lo > hi || hi > self.n_items {
            return bad(format!("invalid pattern length range {lo}..={hi}"));
        }
        if !(self.coverage_target > 0.0 && self.coverage_target <= 1.0) {
            return bad(format!("coverage_target must lie in (0, 1], got {}", self.coverage_target));
        }
        if !(self.shift > 0.0 && self.shift <= 1.0) {
            return bad(format!("shift must lie in (0, 1], got {}", self.shift));
        }
        if !(0.0..1.0).contains(&self.flip_rate) {
            return bad(format!("flip_rate must lie in [0, 1), got {}", self.flip_rate));
        }
        self.pattern_count.validate("pattern_count")?;
        self.pattern_item_background.validate("pattern_item_background")?;
        self.other_item_background.validate("other_item_background")?;
        Ok(())
    }

    pub fn n_neg(&self) -> usize {
        (self.frac_neg * self.n_transactions as f64).round() as usize
    }
}

pub(crate) fn item_token(i: usize) -> String {
    format!("i{i}")
}

fn pick(rng: &mut SynthRng, from: &[usize], amount: usize) -> Vec<usize> {
    sample(rng, from.len(), amount.min(from.len())).into_iter().map(|k| from[k]).collect()
}

/// Generates one dataset. Transactions `0..n_neg` are labeled `l⁻`, the rest
/// `l⁺`.
pub fn gen_base(config: &BaseGenConfig) -> Result<(TokenRows, PlantedTruth)> {
    config.validate()?;
    let mut rng = SynthRng::seed_from_u64(config.seed);
    let n = config.n_transactions;
    let m = config.n_items;
    let n_neg = config.n_neg();
    let neg: Vec<usize> = (0..n_neg).collect();
    let pos: Vec<usize> = (n_neg..n).collect();
    let all: Vec<usize> = (0..n).collect();

    let target = (config.coverage_target * m as f64).ceil() as usize;
    let mut covered = BTreeSet::new();
    let mut patterns: Vec<Vec<usize>> = Vec::new();
    while covered.len() < target {
        let len = draw_len(&mut rng, config.pattern_len);
        let mut items: Vec<usize> = sample(&mut rng, m, len).into_vec();
        items.sort_unstable();
        covered.extend(items.iter().copied());
        patterns.push(items);
    }

    let mut cols = vec![TidSet::empty(n); m];
    let mut truth = PlantedTruth::default();
    for items in &patterns {
        let k = config.pattern_count.draw(&mut rng, n) as f64;
        let k_pos = ((config.shift * k).round() as usize).min(pos.len());
        let k_neg = (((1.0 - config.shift) * k).round() as usize).min(neg.len());
        let rows: Vec<usize> = pick(&mut rng, &pos, k_pos)
            .into_iter()
            .chain(pick(&mut rng, &neg, k_neg))
            .collect();
        for &i in items {
            for &t in &rows {
                cols[i].insert(t);
            }
        }
        truth.patterns.push(PlantedPattern {
            clauses: items.iter().map(|&i| vec![item_token(i)]).collect(),
            support_neg: k_neg,
            support_pos: k_pos,
        });
    }

    for (i, col) in cols.iter_mut().enumerate() {
        let dist = if covered.contains(&i) {
            config.pattern_item_background
        } else {
            config.other_item_background
        };
        let c = dist.draw(&mut rng, n);
        for t in pick(&mut rng, &all, c) {
            col.insert(t);
        }
    }

    let cells = n * m;
    let flips = (config.flip_rate * cells as f64).round() as usize;
    if flips > 0 {
        let mut idx: Vec<usize> = sample(&mut rng, cells, flips).into_vec();
        idx.sort_unstable();
        for cell in idx {
            let (t, i) = (cell / m, cell % m);
            if cols[i].contains(t) {
                cols[i].remove(t);
            } else {
                cols[i].insert(t);
            }
        }
    }

    let mut rows: Vec<(Label, Vec<String>)> = (0..n)
        .map(|t| (if t < n_neg { Label::Neg } else { Label::Pos }, Vec::new()))
        .collect();
    for (i, col) in cols.iter().enumerate() {
        for t in col.iter() {
            rows[t].1.push(item_token(i));
        }
    }
    Ok((TokenRows { rows }, truth))
}

/// A sweep axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Items,
    Ratio,
    Shift,
    Noise,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Items => "items",
            Axis::Ratio => "ratio",
            Axis::Shift => "shift",
            Axis::Noise => "noise",
        }
    }

    /// The base config with this axis set to `value` and a derived seed.
    pub fn apply(self, base: &BaseGenConfig, value: f64) -> Result<BaseGenConfig> {
        let mut c = base.clone();
        let out_of_domain = || Error::Config(format!("{} value {value} is out of range", self.name()));
        match self {
            Axis::Items => {
                if !(100.0..=10_000.0).contains(&value) || value.fract() != 0.0 {
                    return Err(out_of_domain());
                }
                c.n_items = value as usize;
            }
            Axis::Ratio => {
                if !(value > 0.0 && value <= 0.5) {
                    return Err(out_of_domain());
                }
                c.frac_neg = value;
            }
            Axis::Shift => {
                if !(0.6..=1.0).contains(&value) {
                    return Err(out_of_domain());
                }
                c.shift = value;
            }
            Axis::Noise => {
                if !(0.0..=0.01).contains(&value) {
                    return Err(out_of_domain());
                }
                c.flip_rate = value;
            }
        }
        c.seed = derive_seed(base.seed, self.name(), value);
        Ok(c)
    }
}

/// One dataset per value along `axis`, every other parameter from `base`.
pub fn gen_axis_variants(axis: Axis, values: &[f64], base: &BaseGenConfig) -> Result<Vec<(TokenRows, PlantedTruth)>> {
    let configs: Vec<BaseGenConfig> = values.iter().map(|&v| axis.apply(base, v)).collect::<Result<_>>()?;
    configs.iter().map(gen_base).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BaseGenConfig {
        BaseGenConfig {
            n_transactions: 2000,
            n_items: 200,
            seed: 3,
            ..BaseGenConfig::default()
        }
    }

    #[test]
    fn defaults_have_the_stated_shape() {
        let (rows, truth) = gen_base(&BaseGenConfig::default()).unwrap();
        assert_eq!(rows.rows.len(), 10_000);
        assert_eq!(rows.rows.iter().filter(|r| r.0 == Label::Neg).count(), 5000);
        let covered: BTreeSet<String> = truth.item_sets().into_iter().flatten().collect();
        assert!(covered.len() >= 500);
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(gen_base(&small()).unwrap(), gen_base(&small()).unwrap());
    }

    #[test]
    fn full_shift_plants_only_positive() {
        let (_, truth) = gen_base(&BaseGenConfig { shift: 1.0, ..small() }).unwrap();
        assert!(truth.patterns.iter().all(|p| p.support_neg == 0 && p.support_pos > 0));
    }

    #[test]
    fn ratio_axis_sets_negative_count() {
        let c = Axis::Ratio.apply(&BaseGenConfig::default(), 0.25).unwrap();
        assert_eq!(c.n_neg(), 2500);
        assert!(Axis::Shift.apply(&BaseGenConfig::default(), 0.5).is_err());
        assert!(Axis::Noise.apply(&BaseGenConfig::default(), 0.02).is_err());
        assert!(Axis::Items.apply(&BaseGenConfig::default(), 50.0).is_err());
    }

    #[test]
    fn shift_sweep_yields_one_dataset_per_value() {
        let vals = [1.0, 0.9, 0.8, 0.7, 0.6];
        let out = gen_axis_variants(Axis::Shift, &vals, &small()).unwrap();
        assert_eq!(out.len(), 5);
    }
}
