//! The greedy search.
//!
//! Starting from the singleton-only model, every round scores all candidates,
//! keeps those that pass the significance filter and strictly shorten the
//! total codelength, and applies the best one. Merge parents leave the model.
//! The search stops when no candidate improves the codelength.
//!
//! [`mine`] keeps a persistent candidate pool between rounds. A candidate's
//! gain splits into a term that only depends on the number of patterns and a
//! local term that only depends on the candidate, its parents and the covering
//! state of the items they touch. The local term is recomputed exactly when one
//! of those items changed, so the result is identical to rescoring everything
//! every round, which [`mine_uncached`] does.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};

use log::{debug, info};

use crate::candidates::{Candidate, CandidateSpace, Provenance, SearchConfig};
use crate::data::{Conjunction, ItemId, Label, LabeledDatabase, Pattern};
use crate::embeddings::NeighborTable;
use crate::error::{Error, Result};
use crate::model::{Model, PatternId};
use crate::stats::{fisher_p_value, label_side_for, ContingencyCells};
use crate::tidset::TidSet;

/// One accepted round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub id: PatternId,
    pub pattern: Pattern,
    pub provenance: Provenance,
    pub removed: Vec<PatternId>,
    pub gain_bits: f64,
    pub p_value: f64,
    pub total_bits: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    NoImprovingCandidate,
    RoundLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchTrace {
    pub baseline_bits: f64,
    pub rounds: Vec<RoundRecord>,
    pub termination: Termination,
}

impl SearchTrace {
    pub fn final_bits(&self) -> f64 {
        self.rounds.last().map_or(self.baseline_bits, |r| r.total_bits)
    }

    /// Whether every round strictly lowered the total codelength.
    pub fn is_monotone(&self) -> bool {
        let mut prev = self.baseline_bits;
        for r in &self.rounds {
            if !(r.total_bits < prev) {
                return false;
            }
            prev = r.total_bits;
        }
        true
    }
}

/// Ordering of scored candidates: larger improvement first, then fewer items,
/// then canonical clause order, then parent ids.
fn better(a: (f64, usize, &Conjunction, &[PatternId]), b: (f64, usize, &Conjunction, &[PatternId])) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => (a.1, a.2, a.3) < (b.1, b.2, b.3),
    }
}

fn p_value_of(db: &LabeledDatabase, sel: &TidSet) -> f64 {
    let pos = sel.intersection_len(db.mask(Label::Pos));
    let neg = sel.len() - pos;
    let cells = ContingencyCells {
        a: (db.n_total() - sel.len()) as u64,
        b: (db.n_pos() - pos) as u64,
        c: sel.len() as u64,
        d: pos as u64,
        n: db.n_total() as u64,
    };
    fisher_p_value(cells, label_side_for(neg, pos, db))
}

fn conj_hash(c: &Conjunction) -> u64 {
    let mut h = DefaultHasher::new();
    c.hash(&mut h);
    h.finish()
}

fn check_input(db: &LabeledDatabase, config: &SearchConfig) -> Result<()> {
    config.validate()?;
    if db.n_items() == 0 {
        return Err(Error::Domain("the vocabulary is empty".into()));
    }
    Ok(())
}

struct PoolEntry {
    conj: Conjunction,
    provenance: Provenance,
    hash: u64,
    n_items: usize,
    touched: Vec<ItemId>,
    stamps: Vec<u64>,
    local: f64,
    p_value: f64,
}

struct Pool<'a> {
    db: &'a LabeledDatabase,
    config: &'a SearchConfig,
    entries: Vec<PoolEntry>,
    seen: HashSet<(Conjunction, Vec<PatternId>)>,
}

impl<'a> Pool<'a> {
    fn insert(&mut self, model: &Model, cand: Candidate, sel: Option<TidSet>) {
        let key = (cand.conjunction, cand.provenance.parents().to_vec());
        if self.seen.contains(&key) {
            return;
        }
        let (conj, parents) = key;
        let sel = sel.unwrap_or_else(|| self.db.select_unchecked(&conj));
        let p_value = p_value_of(self.db, &sel);
        if self.config.significance_filter && !(p_value < self.config.alpha) {
            // the p-value never changes, so the candidate can never be accepted
            self.seen.insert((conj, parents));
            return;
        }
        let touched = model.touched_items(&conj, &parents);
        let stamps = touched.iter().map(|&i| model.item_version(i)).collect();
        let (local, _, _) = model.local_parts(self.db, &conj, &sel, &parents);
        self.entries.push(PoolEntry {
            hash: conj_hash(&conj),
            n_items: conj.n_items(),
            conj: conj.clone(),
            provenance: cand.provenance,
            touched,
            stamps,
            local,
            p_value,
        });
        self.seen.insert((conj, parents));
    }

    fn refresh(&mut self, model: &Model) {
        for e in &mut self.entries {
            let stale = e.touched.iter().zip(&e.stamps).any(|(&i, &s)| model.item_version(i) != s);
            if stale {
                let sel = self.db.select_unchecked(&e.conj);
                e.local = model.local_parts(self.db, &e.conj, &sel, e.provenance.parents()).0;
                for (s, &i) in e.stamps.iter_mut().zip(&e.touched) {
                    *s = model.item_version(i);
                }
            }
        }
    }

    fn drop_parents(&mut self, removed: &[PatternId]) {
        if removed.is_empty() {
            return;
        }
        self.entries
            .retain(|e| !e.provenance.parents().iter().any(|p| removed.contains(p)));
        self.seen.retain(|(_, parents)| !parents.iter().any(|p| removed.contains(p)));
    }
}

/// Mines a label-descriptive pattern set from `db`.
///
/// Exclusive-or clauses are only considered when `neighbors` is given.
pub fn mine(
    db: &LabeledDatabase,
    config: &SearchConfig,
    neighbors: Option<&NeighborTable>,
) -> Result<(Model, SearchTrace)> {
    check_input(db, config)?;
    let space = CandidateSpace::new(db, config, neighbors)?;
    let mut model = Model::new(db);
    let mut trace = SearchTrace {
        baseline_bits: model.total_bits(),
        rounds: Vec::new(),
        termination: Termination::NoImprovingCandidate,
    };
    let mut pool = Pool {
        db,
        config,
        entries: Vec::new(),
        seen: HashSet::new(),
    };
    for cand in space.base_candidates() {
        pool.insert(&model, cand, None);
    }
    debug!("initial pool: {} candidates", pool.entries.len());
    let mut in_model: HashMap<u64, usize> = HashMap::new();
    loop {
        if config.max_rounds.is_some_and(|r| trace.rounds.len() >= r) {
            trace.termination = Termination::RoundLimit;
            break;
        }
        pool.refresh(&model);
        let global = [model.global_delta(0), model.global_delta(1), model.global_delta(2)];
        let mut best: Option<(f64, usize)> = None;
        for (k, e) in pool.entries.iter().enumerate() {
            let parents = e.provenance.parents();
            let gain = global[parents.len()] + e.local;
            if !(gain < 0.0) {
                continue;
            }
            if in_model.contains_key(&e.hash) && model.contains_conjunction(&e.conj) {
                continue;
            }
            let take = match best {
                None => true,
                Some((bg, bk)) => {
                    let b = &pool.entries[bk];
                    better(
                        (gain, e.n_items, &e.conj, parents),
                        (bg, b.n_items, &b.conj, b.provenance.parents()),
                    )
                }
            };
            if take {
                best = Some((gain, k));
            }
        }
        let Some((gain, k)) = best else {
            break;
        };
        let chosen = &pool.entries[k];
        let removed = chosen.provenance.parents().to_vec();
        let provenance = chosen.provenance.clone();
        let p_value = chosen.p_value;
        let conj = chosen.conj.clone();
        let round = trace.rounds.len() + 1;
        let ev = model.evaluate(db, &conj, &removed)?;
        debug_assert_eq!(ev.gain, gain);
        for id in &removed {
            let h = conj_hash(model.entry(*id).expect("parent").pattern.conjunction());
            if let Some(c) = in_model.get_mut(&h) {
                *c -= 1;
                if *c == 0 {
                    in_model.remove(&h);
                }
            }
        }
        let (id, applied) = model.apply_evaluated(db, ev, &removed, round, p_value);
        *in_model.entry(conj_hash(&conj)).or_insert(0) += 1;
        let entry = model.entry(id).expect("just added").clone();
        log_round(db, &entry.pattern, round, applied, p_value, model.total_bits());
        trace.rounds.push(RoundRecord {
            round,
            id,
            pattern: entry.pattern.clone(),
            provenance,
            removed: removed.clone(),
            gain_bits: applied,
            p_value,
            total_bits: model.total_bits(),
        });
        pool.drop_parents(&removed);
        for (cand, sel) in space.extensions(db, &entry) {
            pool.insert(&model, cand, Some(sel));
        }
        for other in model.entries() {
            if other.id == id {
                continue;
            }
            if let Some((cand, sel)) = space.merge(other, &entry) {
                pool.insert(&model, cand, Some(sel));
            }
        }
    }
    info!(
        "{} patterns, {:.3} bits (baseline {:.3})",
        model.len(),
        model.total_bits(),
        trace.baseline_bits
    );
    Ok((model, trace))
}

fn log_round(db: &LabeledDatabase, p: &Pattern, round: usize, gain: f64, p_value: f64, total: f64) {
    if log::log_enabled!(log::Level::Debug) {
        let clauses: Vec<String> = p
            .clauses()
            .iter()
            .map(|c| {
                let toks: Vec<&str> = c.items().iter().map(|&i| db.vocab().token(i).unwrap_or("?")).collect();
                toks.join("|")
            })
            .collect();
        debug!(
            "round {round}: [{}] gain {gain:.3} p {p_value:.3e} total {total:.3}",
            clauses.join(" & ")
        );
    }
}

/// Reference implementation of [`mine`] that regenerates and rescores every
/// candidate in every round.
pub fn mine_uncached(
    db: &LabeledDatabase,
    config: &SearchConfig,
    neighbors: Option<&NeighborTable>,
) -> Result<(Model, SearchTrace)> {
    check_input(db, config)?;
    let space = CandidateSpace::new(db, config, neighbors)?;
    let mut model = Model::new(db);
    let mut trace = SearchTrace {
        baseline_bits: model.total_bits(),
        rounds: Vec::new(),
        termination: Termination::NoImprovingCandidate,
    };
    loop {
        if config.max_rounds.is_some_and(|r| trace.rounds.len() >= r) {
            trace.termination = Termination::RoundLimit;
            break;
        }
        let mut best: Option<Candidate> = None;
        for mut cand in space.candidates(db, &model) {
            let ev = model.evaluate(db, &cand.conjunction, cand.parents())?;
            let p = p_value_of(db, &ev.selection);
            if config.significance_filter && !(p < config.alpha) {
                continue;
            }
            if !(ev.gain < 0.0) {
                continue;
            }
            cand.gain = Some(ev.gain);
            cand.p_value = Some(p);
            cand.pattern = Some(ev.pattern);
            let take = match &best {
                None => true,
                Some(b) => better(
                    (ev.gain, cand.conjunction.n_items(), &cand.conjunction, cand.parents()),
                    (
                        b.gain.expect("scored"),
                        b.conjunction.n_items(),
                        &b.conjunction,
                        b.parents(),
                    ),
                ),
            };
            if take {
                best = Some(cand);
            }
        }
        let Some(best) = best else {
            break;
        };
        let round = trace.rounds.len() + 1;
        let p_value = best.p_value.expect("scored");
        let removed = best.parents().to_vec();
        let (id, applied) = model.apply(db, &best.conjunction, &removed, round, p_value)?;
        trace.rounds.push(RoundRecord {
            round,
            id,
            pattern: model.entry(id).expect("just added").pattern.clone(),
            provenance: best.provenance,
            removed,
            gain_bits: applied,
            p_value,
            total_bits: model.total_bits(),
        });
    }
    Ok((model, trace))
}

/// `M ⊕ candidate` as a new model; merge parents are removed.
pub fn apply_candidate(model: &Model, db: &LabeledDatabase, candidate: &Candidate) -> Result<Model> {
    let mut next = model.clone();
    let round = model.entries().iter().map(|e| e.round).max().unwrap_or(0) + 1;
    let sel = db.select(&candidate.conjunction)?;
    let p = candidate.p_value.unwrap_or_else(|| p_value_of(db, &sel));
    next.apply(db, &candidate.conjunction, candidate.parents(), round, p)?;
    Ok(next)
}

/// Scores a candidate against `model`: gain, p-value and supports.
pub fn score_candidate(model: &Model, db: &LabeledDatabase, candidate: &mut Candidate) -> Result<()> {
    let ev = model.evaluate(db, &candidate.conjunction, candidate.parents())?;
    candidate.p_value = Some(p_value_of(db, &ev.selection));
    candidate.gain = Some(ev.gain);
    candidate.pattern = Some(ev.pattern);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separating_toy() -> LabeledDatabase {
        let mut rows = Vec::new();
        for i in 0..20 {
            let label = if i < 10 { Label::Pos } else { Label::Neg };
            let mut t = Vec::new();
            if i < 10 {
                t.push("X");
            }
            if i % 2 == 0 {
                t.push("e");
            }
            if i % 5 == 0 {
                t.push("f");
            }
            rows.push((label, t));
        }
        LabeledDatabase::from_token_rows(rows).unwrap()
    }

    #[test]
    fn separating_item_is_the_only_pattern() {
        let db = separating_toy();
        let (model, trace) = mine(&db, &SearchConfig::default(), None).unwrap();
        assert_eq!(model.len(), 1);
        let p = &model.entries()[0].pattern;
        assert_eq!(p.items(), vec![db.vocab().id("X").unwrap()]);
        assert_eq!(p.label_side, Some(Label::Pos));
        assert!((trace.rounds[0].p_value - 1.0 / 184_756.0).abs() < 1e-15);
        assert!(trace.is_monotone());
    }

    #[test]
    fn uniform_items_give_the_baseline() {
        let rows: Vec<(Label, Vec<&str>)> = (0..30)
            .map(|i| (if i % 3 == 0 { Label::Pos } else { Label::Neg }, vec!["a", "b", "c"]))
            .collect();
        let db = LabeledDatabase::from_token_rows(rows).unwrap();
        let (model, trace) = mine(&db, &SearchConfig::default(), None).unwrap();
        assert!(model.is_empty());
        assert_eq!(trace.final_bits(), trace.baseline_bits);
    }

    #[test]
    fn cached_and_uncached_agree_on_toy() {
        let db = separating_toy();
        let cfg = SearchConfig::default();
        let (_, a) = mine(&db, &cfg, None).unwrap();
        let (_, b) = mine_uncached(&db, &cfg, None).unwrap();
        assert_eq!(a, b);
    }
}
